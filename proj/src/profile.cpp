#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nfbt/experiments.hpp"

namespace nfbt {

using nlohmann::json;

namespace {

json plan_to_json(const std::vector<LayerCells>& plan) {
  json out = json::array();
  for (const auto& c : plan) out.push_back({c.angle_cells, c.distance_cells});
  return out;
}

std::vector<LayerCells> plan_from_json(const json& j) {
  std::vector<LayerCells> plan;
  for (const auto& layer : j) {
    if (!layer.is_array() || layer.size() != 2) {
      throw FormatError("config: each plan layer is [angle_cells, distance_cells]");
    }
    plan.push_back(LayerCells{layer[0].get<int>(), layer[1].get<int>()});
  }
  return plan;
}

template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  array.validate();
  if (num_angles < 1 || distances_per_angle < 1) {
    throw DomainError("config: grid needs at least one angle and one distance");
  }
  if (!(min_distance > 0.0) || !(min_distance < max_distance)) {
    throw DomainError("config: need 0 < min_distance < max_distance");
  }
  if (near_plan.empty() || far_plan.empty()) throw DomainError("config: layer plans are empty");
  searched_per_layer(near_plan);
  searched_per_layer(far_plan);
  for (const auto& c : far_plan) {
    if (c.distance_cells != 1) throw DomainError("config: far-field plan must be angle-only");
  }
  gs.validate();
  alt.validate();
  channel.validate();
  if (num_trials < 1) throw DomainError("config: num_trials must be >= 1");
  if (snr_grid_db.empty() || distance_grid.empty() || overhead_budgets.empty() ||
      schemes.empty()) {
    throw DomainError("config: sweep grids and scheme list must be non-empty");
  }
  for (double r : distance_grid) {
    if (!(r > 0.0)) throw DomainError("config: distances must be positive");
  }
  for (long long b : overhead_budgets) {
    if (b < 1) throw DomainError("config: overhead budgets must be >= 1");
  }
}

PolarGrid ExperimentConfig::build_grid() const {
  return build_polar_grid(array, num_angles,
                          DistanceSampling{min_distance, max_distance, distances_per_angle});
}

Domain ExperimentConfig::domain() const { return Domain{-1.0, 1.0, min_distance, max_distance}; }

OverheadPlans ExperimentConfig::overhead_plans() const {
  return OverheadPlans{num_angles, distances_per_angle, near_plan, far_plan};
}

std::uint64_t ExperimentConfig::near_seed() const { return Rng(master_seed).split(0x6e656172).seed(); }
std::uint64_t ExperimentConfig::far_seed() const { return Rng(master_seed).split(0x666172).seed(); }

ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.name = "desk";
  c.array = ArrayConfig::half_wavelength(128, 0.005, 32, 5);
  c.num_angles = 128;
  c.distances_per_angle = 8;
  c.min_distance = 1.25;
  c.max_distance = 6.25;
  c.near_plan = {{64, 1}, {128, 2}, {128, 8}};
  c.far_plan = {{4, 1}, {16, 1}, {128, 1}};
  c.channel = ChannelDistribution{-1.0, 1.0, 1.25, 6.25, 1.0};
  c.master_seed = 1;
  c.num_trials = 200;
  c.snr_db = 5.0;
  c.snr_grid_db = {-10, -5, 0, 5, 10, 15, 20};
  c.distance_grid = {1.25, 1.875, 2.5, 3.125, 3.75, 4.375, 5.0, 5.625, 6.25};
  c.overhead_budgets = {8, 16, 32, 64, 72, 128, 256, 512, 1024};
  c.schemes = {Scheme::kProposed, Scheme::kNearExhaustive, Scheme::kFarExhaustive,
               Scheme::kFarHierarchical};
  return c;
}

ExperimentConfig paper_profile() {
  ExperimentConfig c = desk_profile();
  c.name = "paper";
  c.array = ArrayConfig::half_wavelength(512, 0.005, 100, 5);
  c.num_angles = 512;
  c.distances_per_angle = 16;
  c.min_distance = 20.0;
  c.max_distance = 100.0;
  c.near_plan = {{64, 4}, {256, 8}, {512, 16}};
  c.far_plan = {{4, 1}, {16, 1}, {512, 1}};
  c.channel = ChannelDistribution{-1.0, 1.0, 20.0, 100.0, 1.0};
  c.distance_grid = {20, 30, 40, 50, 60, 70, 80, 90, 100};
  c.overhead_budgets = {16, 32, 64, 128, 268, 512, 1024, 2048, 4096, 8192};
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["array"] = {{"num_antennas", c.array.num_antennas},
                {"antenna_spacing", c.array.antenna_spacing},
                {"wavelength", c.array.wavelength},
                {"num_rf_chains", c.array.num_rf_chains},
                {"phase_bits", c.array.phase_bits}};
  j["grid"] = {{"num_angles", c.num_angles},
               {"distances_per_angle", c.distances_per_angle},
               {"min_distance", c.min_distance},
               {"max_distance", c.max_distance}};
  j["near_plan"] = plan_to_json(c.near_plan);
  j["far_plan"] = plan_to_json(c.far_plan);
  j["gs"] = {{"max_iters", c.gs.max_iters},
             {"regularization", c.gs.regularization ? json(*c.gs.regularization) : json(nullptr)},
             {"early_stop_tol", c.gs.early_stop_tol}};
  j["alt"] = {{"outer_iters", c.alt.outer_iters}, {"inner_iters", c.alt.inner_iters}};
  j["channel"] = {{"angle_lo", c.channel.angle_lo},
                  {"angle_hi", c.channel.angle_hi},
                  {"distance_lo", c.channel.distance_lo},
                  {"distance_hi", c.channel.distance_hi},
                  {"gain_variance", c.channel.gain_variance}};
  j["master_seed"] = c.master_seed;
  j["num_trials"] = c.num_trials;
  j["snr_db"] = c.snr_db;
  j["snr_grid_db"] = c.snr_grid_db;
  j["distance_grid"] = c.distance_grid;
  j["overhead_budgets"] = c.overhead_budgets;
  json schemes = json::array();
  for (Scheme s : c.schemes) schemes.push_back(scheme_name(s));
  j["schemes"] = schemes;
  j["threads"] = c.threads;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config: top level must be an object");

  ExperimentConfig c = desk_profile();
  try {
    if (j.contains("base")) {
      const auto base = j.at("base").get<std::string>();
      if (base == "paper") {
        c = paper_profile();
      } else if (base != "desk") {
        throw FormatError("config: unknown base profile '" + base + "'");
      }
    }
    read_if(j, "name", c.name);
    if (j.contains("array")) {
      const json& a = j.at("array");
      read_if(a, "num_antennas", c.array.num_antennas);
      read_if(a, "antenna_spacing", c.array.antenna_spacing);
      read_if(a, "wavelength", c.array.wavelength);
      read_if(a, "num_rf_chains", c.array.num_rf_chains);
      read_if(a, "phase_bits", c.array.phase_bits);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      read_if(g, "num_angles", c.num_angles);
      read_if(g, "distances_per_angle", c.distances_per_angle);
      read_if(g, "min_distance", c.min_distance);
      read_if(g, "max_distance", c.max_distance);
    }
    if (j.contains("near_plan")) c.near_plan = plan_from_json(j.at("near_plan"));
    if (j.contains("far_plan")) c.far_plan = plan_from_json(j.at("far_plan"));
    if (j.contains("gs")) {
      const json& g = j.at("gs");
      read_if(g, "max_iters", c.gs.max_iters);
      if (g.contains("regularization")) {
        if (g.at("regularization").is_null()) {
          c.gs.regularization.reset();
        } else {
          c.gs.regularization = g.at("regularization").get<double>();
        }
      }
      read_if(g, "early_stop_tol", c.gs.early_stop_tol);
    }
    if (j.contains("alt")) {
      read_if(j.at("alt"), "outer_iters", c.alt.outer_iters);
      read_if(j.at("alt"), "inner_iters", c.alt.inner_iters);
    }
    if (j.contains("channel")) {
      const json& ch = j.at("channel");
      read_if(ch, "angle_lo", c.channel.angle_lo);
      read_if(ch, "angle_hi", c.channel.angle_hi);
      read_if(ch, "distance_lo", c.channel.distance_lo);
      read_if(ch, "distance_hi", c.channel.distance_hi);
      read_if(ch, "gain_variance", c.channel.gain_variance);
    }
    read_if(j, "master_seed", c.master_seed);
    read_if(j, "num_trials", c.num_trials);
    read_if(j, "snr_db", c.snr_db);
    read_if(j, "snr_grid_db", c.snr_grid_db);
    read_if(j, "distance_grid", c.distance_grid);
    read_if(j, "overhead_budgets", c.overhead_budgets);
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_scheme(s.get<std::string>()));
    }
    read_if(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                    const std::string& command) {
  std::ostringstream hash;
  hash << std::hex << config_hash(cfg);
  json m;
  m["tool"] = "nfbt";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = "fnv1a64:" + hash.str();
  m["master_seed"] = cfg.master_seed;
  m["config"] = json::parse(config_to_json(cfg));
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open manifest " + path.string());
  out << m.dump(2) << '\n';
}

}  // namespace nfbt
