#include "nfbt/experiments.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace nfbt {

namespace {

// Neumaier's compensated sum.
class StableSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr std::uint64_t kTrialStreams = 0x7472;  // "tr"

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kProposed: return "proposed";
    case Scheme::kNearExhaustive: return "near_exhaustive";
    case Scheme::kFarExhaustive: return "far_exhaustive";
    case Scheme::kFarHierarchical: return "far_hierarchical";
  }
  throw DomainError("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::kProposed, Scheme::kNearExhaustive, Scheme::kFarExhaustive,
                   Scheme::kFarHierarchical}) {
    if (scheme_name(s) == name) return s;
  }
  throw DomainError("unknown scheme '" + name + "'");
}

double achievable_rate(const CVector& channel, const CVector& codeword, double noise_power) {
  require_same_size(channel.size(), codeword.size(), "achievable_rate");
  if (std::abs(codeword.norm() - 1.0) > 1e-9) {
    throw DomainError("achievable_rate: codeword must have unit norm");
  }
  if (noise_power < 0.0) throw DomainError("achievable_rate: noise power must be >= 0");
  if (noise_power == 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(1.0 + std::norm(channel.dot(codeword)) / noise_power);
}

double noise_power_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

void RasterSpec::validate() const {
  if (nx < 2 || ny < 2) throw DomainError("RasterSpec: resolution must be >= 2 per axis");
  if (!(x_min < x_max) || !(y_min < y_max)) throw DomainError("RasterSpec: empty extent");
}

PolarPoint to_polar(double x, double y) {
  const double r = std::hypot(x, y);
  return PolarPoint{r > 0.0 ? y / r : 0.0, r};
}

Heatmap beam_pattern_heatmap(const CVector& codeword, const ArrayConfig& cfg,
                             const RasterSpec& raster) {
  raster.validate();
  require_same_size(codeword.size(), cfg.num_antennas, "beam_pattern_heatmap");
  if (std::abs(codeword.norm() - 1.0) > 1e-9) {
    throw DomainError("beam_pattern_heatmap: codeword must have unit norm");
  }
  Heatmap map;
  map.raster = raster;
  map.gain.resize(raster.ny, raster.nx);
  for (int j = 0; j < raster.ny; ++j) {
    for (int i = 0; i < raster.nx; ++i) {
      const double x = raster.x(i);
      const PolarPoint p = to_polar(x, raster.y(j));
      if (x < 0.0 || p.distance == 0.0) {
        map.gain(j, i) = std::numeric_limits<double>::quiet_NaN();
      } else {
        map.gain(j, i) = std::abs(beamforming_gain(codeword, p.angle, p.distance, cfg));
      }
    }
  }
  return map;
}

void write_heatmap(const Heatmap& map, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw FormatError("cannot open " + csv_path.string());
  csv.precision(10);
  for (Eigen::Index j = 0; j < map.gain.rows(); ++j) {
    for (Eigen::Index i = 0; i < map.gain.cols(); ++i) {
      if (i) csv << ',';
      const double g = map.gain(j, i);
      if (std::isnan(g)) {
        csv << "nan";
      } else {
        csv << g;
      }
    }
    csv << '\n';
  }
  std::ofstream side(csv_path.string() + ".json");
  if (!side) throw FormatError("cannot open sidecar for " + csv_path.string());
  const RasterSpec& r = map.raster;
  side.precision(17);
  side << "{\n"
       << "  \"quantity\": \"|G(v, theta, r)|\",\n"
       << "  \"layout\": \"rows are y ascending, columns are x ascending\",\n"
       << "  \"x\": {\"min\": " << r.x_min << ", \"max\": " << r.x_max << ", \"count\": " << r.nx
       << "},\n"
       << "  \"y\": {\"min\": " << r.y_min << ", \"max\": " << r.y_max << ", \"count\": " << r.ny
       << "},\n"
       << "  \"masked\": \"nan\"\n"
       << "}\n";
}

RegionContrast region_contrast(const Heatmap& map,
                               const std::function<bool(double x, double y)>& inside) {
  StableSum in_sum;
  StableSum out_sum;
  RegionContrast c;
  for (int j = 0; j < map.raster.ny; ++j) {
    for (int i = 0; i < map.raster.nx; ++i) {
      const double g = map.gain(j, i);
      if (std::isnan(g)) continue;
      if (inside(map.raster.x(i), map.raster.y(j))) {
        in_sum.add(g);
        ++c.inside;
      } else {
        out_sum.add(g);
        ++c.outside;
      }
    }
  }
  if (c.inside == 0 || c.outside == 0) {
    throw DomainError("region_contrast: region must split the raster");
  }
  c.inside_mean = in_sum.value() / static_cast<double>(c.inside);
  c.outside_mean = out_sum.value() / static_cast<double>(c.outside);
  return c;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(config_to_json(cfg)); }

namespace {

std::string hierarchy_key(const PolarGrid& grid, std::span<const LayerCells> plan,
                          const GsConfig& gs, const AltOptConfig& alt, std::uint64_t seed) {
  const ArrayConfig& a = grid.config();
  const GridSpec g = GridSpec::of(grid);
  std::ostringstream s;
  s << std::hexfloat << a.num_antennas << ' ' << a.antenna_spacing << ' ' << a.wavelength << ' '
    << a.num_rf_chains << ' ' << a.phase_bits << '|' << g.num_angles << ' '
    << g.distances_per_angle << ' ' << g.min_distance << ' ' << g.max_distance << '|';
  for (const auto& c : plan) s << c.angle_cells << 'x' << c.distance_cells << ' ';
  s << '|' << gs.max_iters << ' ' << (gs.regularization ? *gs.regularization : -1.0) << ' '
    << gs.early_stop_tol << '|' << alt.outer_iters << ' ' << alt.inner_iters << '|' << seed;
  return s.str();
}

}  // namespace

Hierarchy load_or_build_hierarchy(const PolarGrid& grid, std::span<const LayerCells> plan,
                                  const GsConfig& gs, const AltOptConfig& alt,
                                  std::uint64_t seed, int threads,
                                  const std::optional<std::filesystem::path>& cache_dir,
                                  const LogFn& log) {
  std::filesystem::path file;
  if (cache_dir) {
    file = *cache_dir / ("hierarchy-" + hex64(fnv1a(hierarchy_key(grid, plan, gs, alt, seed))) +
                         "-" + hex64(seed) + ".bin");
    if (std::filesystem::exists(file)) {
      Hierarchy h = load_hierarchy(file);
      if (h.config == grid.config() && h.grid == GridSpec::of(grid) && h.seed == seed) {
        if (log) log("loaded " + file.string());
        return h;
      }
      if (log) log("ignoring stale cache " + file.string());
    }
  }
  const auto specs = layer_specs(Domain::of(grid), plan);
  Hierarchy h = build_hierarchy(grid, specs, gs, alt, seed, threads,
                                [&](int layer, int done, int total) {
                                  if (log && done == total) {
                                    log("layer " + std::to_string(layer + 1) + ": " +
                                        std::to_string(total) + " codewords");
                                  }
                                });
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    save_hierarchy(h, file);
    if (log) log("saved " + file.string());
  }
  return h;
}

ExperimentContext prepare_context(const ExperimentConfig& cfg,
                                  const std::optional<std::filesystem::path>& cache_dir,
                                  const LogFn& log) {
  cfg.validate();
  PolarGrid grid = cfg.build_grid();
  Hierarchy near = load_or_build_hierarchy(grid, cfg.near_plan, cfg.gs, cfg.alt, cfg.near_seed(),
                                           cfg.threads, cache_dir, log);
  Hierarchy far = load_or_build_hierarchy(grid, cfg.far_plan, cfg.gs, cfg.alt, cfg.far_seed(),
                                          cfg.threads, cache_dir, log);
  CMatrix far_cb = far_field_codebook(cfg.array, cfg.num_angles);
  return ExperimentContext{std::move(grid), std::move(near), std::move(far), std::move(far_cb)};
}

ChannelRealization trial_channel(const ExperimentConfig& cfg, long long trial,
                                 std::optional<double> distance) {
  Rng rng = Rng(cfg.master_seed).split(kTrialStreams).split(static_cast<std::uint64_t>(trial)).split(0);
  ChannelRealization ch = make_channel(cfg.array, cfg.channel, rng);
  if (distance) ch = make_channel(cfg.array, ch.gain, ch.angle, *distance);
  return ch;
}

Rng trial_noise(const ExperimentConfig& cfg, long long trial) {
  return Rng(cfg.master_seed).split(kTrialStreams).split(static_cast<std::uint64_t>(trial)).split(1);
}

TrainingOutcome run_scheme(Scheme scheme, const ExperimentContext& ctx,
                           const ChannelRealization& channel, double noise_power, Rng& rng,
                           SlotBudget budget) {
  switch (scheme) {
    case Scheme::kProposed:
      return hierarchical_train(channel, ctx.near, noise_power, rng, budget);
    case Scheme::kNearExhaustive:
      return exhaustive_near_train(channel, ctx.grid, noise_power, rng, budget);
    case Scheme::kFarExhaustive:
      return exhaustive_far_train(channel, ctx.far_codebook, noise_power, rng, budget);
    case Scheme::kFarHierarchical:
      return far_hierarchical_train(channel, ctx.far, noise_power, rng, budget);
  }
  throw DomainError("unknown scheme");
}

std::vector<double> trial_rates(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                                Scheme scheme, double noise_power, SlotBudget budget,
                                std::optional<double> distance) {
  std::vector<double> rates(static_cast<std::size_t>(cfg.num_trials));
  parallel_for(cfg.num_trials, cfg.threads, [&](int t) {
    const ChannelRealization ch = trial_channel(cfg, t, distance);
    Rng noise = trial_noise(cfg, t);
    const TrainingOutcome out = run_scheme(scheme, ctx, ch, noise_power, noise, budget);
    rates[t] = achievable_rate(ch.vector, out.beam, noise_power);
  });
  return rates;
}

RateSample summarize(const std::string& scheme, double x, const std::vector<double>& rates) {
  RateSample s;
  s.scheme = scheme;
  s.x = x;
  StableSum sum;
  for (double r : rates) {
    if (std::isfinite(r)) {
      sum.add(r);
      ++s.trials;
    }
  }
  if (s.trials == 0) {
    s.mean = std::numeric_limits<double>::infinity();
    return s;
  }
  s.mean = sum.value() / static_cast<double>(s.trials);
  if (s.trials > 1) {
    StableSum sq;
    for (double r : rates) {
      if (std::isfinite(r)) sq.add((r - s.mean) * (r - s.mean));
    }
    s.std_error = std::sqrt(sq.value() / static_cast<double>(s.trials - 1) /
                            static_cast<double>(s.trials));
  }
  return s;
}

std::vector<RateSample> sweep_overhead(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  cfg.validate();
  const double sigma2 = noise_power_from_snr_db(cfg.snr_db);
  std::vector<RateSample> out;
  for (Scheme scheme : cfg.schemes) {
    for (long long budget : cfg.overhead_budgets) {
      out.push_back(summarize(scheme_name(scheme), static_cast<double>(budget),
                              trial_rates(cfg, ctx, scheme, sigma2, budget)));
    }
  }
  return out;
}

std::vector<RateSample> sweep_snr(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  cfg.validate();
  std::vector<RateSample> out;
  for (Scheme scheme : cfg.schemes) {
    for (double snr : cfg.snr_grid_db) {
      out.push_back(summarize(scheme_name(scheme), snr,
                              trial_rates(cfg, ctx, scheme, noise_power_from_snr_db(snr))));
    }
  }
  return out;
}

std::vector<RateSample> sweep_distance(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  cfg.validate();
  const double sigma2 = noise_power_from_snr_db(cfg.snr_db);
  std::vector<RateSample> out;
  for (Scheme scheme : cfg.schemes) {
    for (double r : cfg.distance_grid) {
      out.push_back(summarize(scheme_name(scheme), r,
                              trial_rates(cfg, ctx, scheme, sigma2, std::nullopt, r)));
    }
  }
  return out;
}

void write_rate_csv(const std::vector<RateSample>& samples, std::ostream& out) {
  const auto old_precision = out.precision(12);
  out << "scheme,x,mean,stderr,trials\n";
  for (const auto& s : samples) {
    out << s.scheme << ',' << s.x << ',' << s.mean << ',' << s.std_error << ',' << s.trials
        << '\n';
  }
  out.precision(old_precision);
}

}  // namespace nfbt
