#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "nfbt/experiments.hpp"

using namespace nfbt;

namespace {

// Small configuration that builds in well under a second.
ExperimentConfig small_config() {
  ExperimentConfig c = desk_profile();
  c.name = "small";
  c.array = ArrayConfig::half_wavelength(32, 0.005, 4, 3);
  c.num_angles = 16;
  c.distances_per_angle = 4;
  c.min_distance = 0.1;
  c.max_distance = 2.0;
  c.channel.distance_lo = 0.1;
  c.channel.distance_hi = 2.0;
  c.near_plan = {{4, 2}, {16, 4}};
  c.far_plan = {{4, 1}, {16, 1}};
  c.gs.max_iters = 15;
  c.alt = AltOptConfig{5, 5};
  c.num_trials = 24;
  c.snr_grid_db = {-5.0, 5.0, 15.0};
  c.distance_grid = {0.5, 1.0};
  c.overhead_budgets = {2, 8, 100};
  c.threads = 2;
  return c;
}

const ExperimentContext& small_context() {
  static const ExperimentContext ctx = prepare_context(small_config());
  return ctx;
}

ChannelRealization on_grid(const PolarGrid& g, int col) {
  return make_channel(g.config(), Complex(1.0, 0.0), g.angle_of(col), g.distance_of(col));
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nfbt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("achievable rate") {
  CVector h(1);
  h(0) = 1.0;
  CVector v(1);
  v(0) = 1.0;
  CHECK(achievable_rate(h, v, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(achievable_rate(h, v, 1.0 / 3.0) == doctest::Approx(2.0).epsilon(1e-15));
  CVector h2(2), v2(2);
  h2 << 1.0, 0.0;
  v2 << 0.0, 1.0;
  CHECK(achievable_rate(h2, v2, 0.5) == 0.0);
  CHECK(std::isinf(achievable_rate(h, v, 0.0)));
  CHECK_THROWS_AS(achievable_rate(h, 2.0 * v, 1.0), DomainError);
  CHECK_THROWS_AS(achievable_rate(h, v, -1.0), DomainError);
  CHECK_THROWS_AS(achievable_rate(h2, v, 1.0), DimensionError);

  Rng rng(1);
  CVector hr(8), vr(8);
  for (int i = 0; i < 8; ++i) {
    hr(i) = rng.complex_normal();
    vr(i) = rng.complex_normal();
  }
  vr.normalize();
  const double base = achievable_rate(hr, vr, 0.7);
  CHECK(achievable_rate(hr, std::polar(1.0, 1.3) * vr, 0.7) == doctest::Approx(base).epsilon(1e-13));
  CHECK(achievable_rate(std::polar(1.0, -0.4) * hr, vr, 0.7) == doctest::Approx(base).epsilon(1e-13));
  CHECK(noise_power_from_snr_db(10.0) == doctest::Approx(0.1));
  CHECK(noise_power_from_snr_db(0.0) == 1.0);
}

TEST_CASE("schemes") {
  for (Scheme s : {Scheme::kProposed, Scheme::kNearExhaustive, Scheme::kFarExhaustive,
                   Scheme::kFarHierarchical}) {
    CHECK(parse_scheme(scheme_name(s)) == s);
  }
  CHECK(scheme_name(Scheme::kProposed) == "proposed");
  CHECK_THROWS_AS(parse_scheme("genie"), DomainError);
}

TEST_CASE("matched beam focuses on its own point") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(128, 0.005, 1, 1);
  RasterSpec raster{0.0, 6.0, -3.0, 3.0, 121, 121};
  // Focus on the raster node (x, y) = (2.4, 1.2).
  const double x0 = 2.4, y0 = 1.2;
  const PolarPoint p = to_polar(x0, y0);
  const Heatmap map = beam_pattern_heatmap(steering_vector(cfg, p.angle, p.distance), cfg, raster);
  Eigen::Index row = 0, col = 0;
  double best = -1.0;
  for (Eigen::Index j = 0; j < map.gain.rows(); ++j) {
    for (Eigen::Index i = 0; i < map.gain.cols(); ++i) {
      if (!std::isnan(map.gain(j, i)) && map.gain(j, i) > best) {
        best = map.gain(j, i);
        row = j;
        col = i;
      }
    }
  }
  const double cell = 0.05;
  CHECK(std::abs(raster.x(static_cast<int>(col)) - x0) <= cell + 1e-12);
  CHECK(std::abs(raster.y(static_cast<int>(row)) - y0) <= cell + 1e-12);
  CHECK(best == doctest::Approx(std::sqrt(128.0)).epsilon(1e-9));
}

TEST_CASE("broadside beam pattern is mirror symmetric") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 0.005, 1, 1);
  RasterSpec raster{0.1, 5.0, -2.0, 2.0, 50, 41};
  const Heatmap map = beam_pattern_heatmap(steering_vector(cfg, 0.0, 1.5), cfg, raster);
  for (int j = 0; j < raster.ny; ++j) {
    for (int i = 0; i < raster.nx; ++i) {
      CHECK(std::abs(map.gain(j, i) - map.gain(raster.ny - 1 - j, i)) < 1e-9);
    }
  }
}

TEST_CASE("heatmap masking and preconditions") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(16, 0.005, 1, 1);
  const CVector v = steering_vector(cfg, 0.2, 1.0);
  RasterSpec raster{-1.0, 1.0, -1.0, 1.0, 5, 5};
  const Heatmap map = beam_pattern_heatmap(v, cfg, raster);
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < 5; ++i) {
      const bool masked = raster.x(i) < 0.0 || (raster.x(i) == 0.0 && raster.y(j) == 0.0);
      CHECK(std::isnan(map.gain(j, i)) == masked);
    }
  }
  CHECK_THROWS_AS(beam_pattern_heatmap(2.0 * v, cfg, raster), DomainError);
  CHECK_THROWS_AS(beam_pattern_heatmap(v, cfg, RasterSpec{0.0, 1.0, 0.0, 1.0, 1, 5}), DomainError);
  CHECK_THROWS_AS(beam_pattern_heatmap(CVector::Ones(4) / 2.0, cfg, raster), DimensionError);
  CHECK(to_polar(3.0, 4.0).angle == doctest::Approx(0.8));
  CHECK(to_polar(3.0, 4.0).distance == doctest::Approx(5.0));
}

TEST_CASE("heatmap files") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(8, 0.005, 1, 1);
  const Heatmap map = beam_pattern_heatmap(steering_vector(cfg, 0.0, 1.0), cfg,
                                           RasterSpec{-1.0, 2.0, -1.0, 1.0, 4, 3});
  const auto dir = scratch_dir("heatmap");
  write_heatmap(map, dir / "map.csv");
  std::ifstream csv(dir / "map.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    CHECK(line.rfind("nan,", 0) == 0);
  }
  CHECK(rows == 3);
  std::ifstream side(dir / "map.csv.json");
  const auto j = nlohmann::json::parse(side);
  CHECK(j["x"]["count"] == 4);
  CHECK(j["y"]["min"] == -1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a designed region codeword concentrates gain inside its box") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(128, 0.005, 32, 5);
  const PolarGrid grid = build_polar_grid(cfg, 128, DistanceSampling{1.25, 6.25, 8});
  const CoverageBox box{0.25, 0.5, 1.25, 6.25, false, true};
  Rng rng(2);
  const GsTrace gs = design_theoretical_codeword(ideal_amplitudes(grid, box), grid, GsConfig{}, rng);
  const Heatmap map = beam_pattern_heatmap(gs.codeword, cfg, RasterSpec{0.0, 6.25, -6.25, 6.25, 101, 201});
  const RegionContrast c = region_contrast(map, [&](double x, double y) {
    const PolarPoint p = to_polar(x, y);
    return box.contains(p.angle, p.distance);
  });
  MESSAGE("inside/outside mean gain ratio " << c.ratio());
  CHECK(c.ratio() >= 3.0);
  CHECK_THROWS_AS(region_contrast(map, [](double, double) { return true; }), DomainError);
}

TEST_CASE("noise-free exhaustive search reaches the matched beam") {
  const ExperimentContext& ctx = small_context();
  for (int col : {0, 9, 33, 63}) {
    const ChannelRealization ch = on_grid(ctx.grid, col);
    Rng rng(3);
    const double sigma2 = 1e-12;
    const TrainingOutcome o = exhaustive_near_train(ch, ctx.grid, sigma2, rng);
    CHECK(o.chosen.index == col);
    const double genie = achievable_rate(ch.vector, ch.vector.normalized(), sigma2);
    CHECK(achievable_rate(ch.vector, o.beam, sigma2) == doctest::Approx(genie).epsilon(1e-12));
  }
}

TEST_CASE("hierarchical beams never beat the matched exhaustive beam on the grid") {
  const ExperimentContext& ctx = small_context();
  for (int col = 0; col < ctx.grid.num_columns(); ++col) {
    const ChannelRealization ch = on_grid(ctx.grid, col);
    Rng a(4), b(4);
    const TrainingOutcome h = hierarchical_train(ch, ctx.near, 0.0, a);
    const TrainingOutcome e = exhaustive_near_train(ch, ctx.grid, 0.0, b);
    CHECK(std::abs(ch.vector.dot(h.beam)) <= std::abs(ch.vector.dot(e.beam)) + 1e-9);
  }
}

TEST_CASE("larger budgets never serve a weaker beam") {
  const ExperimentContext& ctx = small_context();
  const ExperimentConfig cfg = small_config();
  for (int t = 0; t < 10; ++t) {
    const ChannelRealization ch = trial_channel(cfg, t);
    for (Scheme s : {Scheme::kProposed, Scheme::kNearExhaustive, Scheme::kFarExhaustive,
                     Scheme::kFarHierarchical}) {
      double last_clean = 0.0, last_measured = 0.0;
      for (long long budget = 1; budget <= 70; ++budget) {
        Rng quiet(5);
        const TrainingOutcome clean = run_scheme(s, ctx, ch, 0.0, quiet, budget);
        const double g = std::abs(ch.vector.dot(clean.beam));
        CHECK(g >= last_clean - 1e-12);
        last_clean = g;
        Rng noisy = trial_noise(cfg, t);
        const TrainingOutcome o = run_scheme(s, ctx, ch, 1.0, noisy, budget);
        double best = 0.0;
        for (const auto& slot : o.log) best = std::max(best, slot.magnitude);
        CHECK(best >= last_measured);
        last_measured = best;
      }
    }
  }
}

TEST_CASE("summary statistics") {
  const RateSample cancel = summarize("s", 1.0, {1e16, 1.0, -1e16});
  CHECK(cancel.mean == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const RateSample s = summarize("s", 2.0, {1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(s.trials == 4);
  const double inf = std::numeric_limits<double>::infinity();
  const RateSample with_inf = summarize("s", 0.0, {1.0, inf, 3.0});
  CHECK(with_inf.mean == 2.0);
  CHECK(with_inf.trials == 2);
  CHECK(summarize("s", 0.0, {4.0}).std_error == 0.0);
  CHECK(std::isinf(summarize("s", 0.0, {inf}).mean));

  std::ostringstream out;
  write_rate_csv({s}, out);
  CHECK(out.str() == "scheme,x,mean,stderr,trials\ns,2,2.5,0.645497224368,4\n");
}

TEST_CASE("profiles") {
  const ExperimentConfig desk = desk_profile();
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.array.num_antennas == 128);
  CHECK(desk.array.num_rf_chains == 32);
  CHECK(desk.num_angles * desk.distances_per_angle == 1024);
  CHECK(plan_overhead(desk.near_plan) == 72);
  CHECK(plan_overhead(desk.far_plan) == 16);

  const ExperimentConfig paper = paper_profile();
  CHECK_NOTHROW(paper.validate());
  CHECK(paper.array.num_antennas == 512);
  CHECK(paper.array.num_rf_chains == 100);
  CHECK(paper.array.phase_bits == 5);
  CHECK(paper.num_angles == 512);
  CHECK(paper.distances_per_angle == 16);
  CHECK(plan_overhead(paper.near_plan) == 268);
  CHECK(plan_overhead(paper.far_plan) == 40);
  CHECK(paper.near_seed() != paper.far_seed());
}

TEST_CASE("config json") {
  const ExperimentConfig desk = desk_profile();
  const std::string text = config_to_json(desk);
  CHECK(config_to_json(config_from_json(text)) == text);

  const ExperimentConfig p = config_from_json(R"({"base": "paper", "num_trials": 7, "schemes": ["proposed"]})");
  CHECK(p.array.num_antennas == 512);
  CHECK(p.num_trials == 7);
  REQUIRE(p.schemes.size() == 1);
  CHECK(p.schemes[0] == Scheme::kProposed);

  ExperimentConfig reg = desk;
  reg.gs.regularization = 1e-5;
  CHECK(config_from_json(config_to_json(reg)).gs.regularization == 1e-5);

  CHECK_THROWS_AS(config_from_json("{not json"), FormatError);
  CHECK_THROWS_AS(config_from_json("[1, 2]"), FormatError);
  CHECK_THROWS_AS(config_from_json(R"({"base": "lab"})"), FormatError);
  CHECK_THROWS(config_from_json(R"({"near_plan": [[4, 1], [6, 1]]})"));
  CHECK_THROWS(config_from_json(R"({"far_plan": [[4, 2]]})"));
  CHECK_THROWS(config_from_json(R"({"num_trials": 0})"));
  CHECK_THROWS(config_from_json(R"({"schemes": ["genie"]})"));
  CHECK_THROWS(config_from_json(R"({"overhead_budgets": [0]})"));

  const auto dir = scratch_dir("config");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"master_seed": 42})";
  }
  CHECK(load_config(dir / "c.json").master_seed == 42);
  CHECK_THROWS(load_config(dir / "missing.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("config hash and manifest") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  ExperimentConfig a = desk_profile();
  ExperimentConfig b = desk_profile();
  CHECK(config_hash(a) == config_hash(b));
  b.master_seed = 2;
  CHECK(config_hash(a) != config_hash(b));

  const auto dir = scratch_dir("manifest");
  write_manifest(dir / "manifest.json", a, "nfbt sweep snr");
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["tool"] == "nfbt");
  CHECK(j["version"] == kVersion);
  CHECK(j["command"] == "nfbt sweep snr");
  CHECK(j["master_seed"] == a.master_seed);
  std::ostringstream hex;
  hex << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << config_hash(a);
  CHECK(j["config_hash"] == hex.str());
  CHECK(j["config"]["array"]["num_antennas"] == 128);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trial streams") {
  const ExperimentConfig cfg = small_config();
  const ChannelRealization a = trial_channel(cfg, 3);
  const ChannelRealization b = trial_channel(cfg, 3);
  CHECK(a.vector == b.vector);
  CHECK(trial_channel(cfg, 4).angle != a.angle);
  const ChannelRealization moved = trial_channel(cfg, 3, 0.75);
  CHECK(moved.angle == a.angle);
  CHECK(moved.gain == a.gain);
  CHECK(moved.distance == 0.75);
  Rng n1 = trial_noise(cfg, 3);
  Rng n2 = trial_noise(cfg, 3);
  CHECK(n1.engine()() == n2.engine()());
}

TEST_CASE("hierarchy cache") {
  const ExperimentConfig cfg = small_config();
  const PolarGrid grid = cfg.build_grid();
  const auto dir = scratch_dir("cache");
  std::vector<std::string> log;
  const LogFn sink = [&](const std::string& s) { log.push_back(s); };
  const Hierarchy built = load_or_build_hierarchy(grid, cfg.near_plan, cfg.gs, cfg.alt, 9, 1, dir, sink);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    ++files;
    CHECK(e.path().filename().string().rfind("hierarchy-", 0) == 0);
  }
  CHECK(files == 1);
  log.clear();
  const Hierarchy loaded = load_or_build_hierarchy(grid, cfg.near_plan, cfg.gs, cfg.alt, 9, 1, dir, sink);
  REQUIRE(log.size() == 1);
  CHECK(log[0].rfind("loaded ", 0) == 0);
  std::ostringstream x, y;
  write_hierarchy(built, x);
  write_hierarchy(loaded, y);
  CHECK(x.str() == y.str());
  // A different seed is a different file.
  load_or_build_hierarchy(grid, cfg.near_plan, cfg.gs, cfg.alt, 10, 1, dir);
  files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweeps") {
  const ExperimentConfig cfg = small_config();
  const ExperimentContext& ctx = small_context();
  const auto overhead = sweep_overhead(cfg, ctx);
  CHECK(overhead.size() == cfg.schemes.size() * cfg.overhead_budgets.size());
  const auto snr = sweep_snr(cfg, ctx);
  REQUIRE(snr.size() == cfg.schemes.size() * cfg.snr_grid_db.size());
  const auto dist = sweep_distance(cfg, ctx);
  CHECK(dist.size() == cfg.schemes.size() * cfg.distance_grid.size());
  for (const auto& s : snr) {
    CHECK(s.trials == cfg.num_trials);
    CHECK(std::isfinite(s.mean));
    CHECK(s.std_error >= 0.0);
  }
  CHECK(snr[0].scheme == scheme_name(cfg.schemes[0]));
  CHECK(snr[0].x == -5.0);
  // Thread count does not change the numbers.
  ExperimentConfig serial = cfg;
  serial.threads = 1;
  const auto again = sweep_snr(serial, ctx);
  for (std::size_t i = 0; i < snr.size(); ++i) CHECK(again[i].mean == snr[i].mean);
  // Each scheme's rate grows with the SNR on average.
  const std::size_t per = cfg.snr_grid_db.size();
  for (std::size_t k = 0; k < cfg.schemes.size(); ++k) {
    CHECK(snr[k * per + per - 1].mean > snr[k * per].mean);
  }
}
