#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nfbt/channel.hpp"
#include "nfbt/codebook.hpp"
#include "nfbt/training.hpp"

namespace nfbt {

inline constexpr const char* kVersion = "1.0.0";

enum class Scheme { kProposed, kNearExhaustive, kFarExhaustive, kFarHierarchical };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

/// log2(1 + |h^H v|^2 / sigma^2) for a unit-norm v. sigma^2 = 0 returns +inf.
double achievable_rate(const CVector& channel, const CVector& codeword, double noise_power);

/// SNR = 1 / sigma^2.
double noise_power_from_snr_db(double snr_db);

// ---- beam-pattern heatmaps ----

/// Cartesian raster with the array on the y axis, centered at the origin,
/// radiating toward +x.
struct RasterSpec {
  double x_min = 0.0;
  double x_max = 100.0;
  double y_min = -50.0;
  double y_max = 50.0;
  int nx = 201;
  int ny = 201;

  void validate() const;
  double x(int i) const { return x_min + (x_max - x_min) * i / (nx - 1); }
  double y(int j) const { return y_min + (y_max - y_min) * j / (ny - 1); }
};

/// (direction cosine, range) of a raster point; the cosine is taken with
/// respect to the array axis.
struct PolarPoint {
  double angle = 0.0;
  double distance = 0.0;
};
PolarPoint to_polar(double x, double y);

struct Heatmap {
  RasterSpec raster;
  Eigen::MatrixXd gain;  // ny x nx, |G(v, theta, r)|; NaN where masked
};

/// |G(v, theta, r)| over the raster. Points behind the array (x < 0) and the
/// array center itself are masked with NaN.
Heatmap beam_pattern_heatmap(const CVector& codeword, const ArrayConfig& cfg,
                             const RasterSpec& raster);

/// Dense CSV (one raster row per line, rows ordered by y) plus a JSON sidecar
/// `<path>.json` describing the axes.
void write_heatmap(const Heatmap& map, const std::filesystem::path& csv_path);

struct RegionContrast {
  double inside_mean = 0.0;
  double outside_mean = 0.0;
  long long inside = 0;
  long long outside = 0;
  double ratio() const { return inside_mean / outside_mean; }
};

/// Mean unmasked gain inside and outside a region of the raster.
RegionContrast region_contrast(const Heatmap& map,
                               const std::function<bool(double x, double y)>& inside);

// ---- configuration ----

struct ExperimentConfig {
  std::string name = "desk";
  ArrayConfig array;
  int num_angles = 128;
  int distances_per_angle = 8;
  double min_distance = 1.25;
  double max_distance = 6.25;
  std::vector<LayerCells> near_plan;
  std::vector<LayerCells> far_plan;
  GsConfig gs;
  AltOptConfig alt;
  ChannelDistribution channel;

  std::uint64_t master_seed = 1;
  int num_trials = 200;
  double snr_db = 5.0;  // operating point of the overhead and distance sweeps
  std::vector<double> snr_grid_db;
  std::vector<double> distance_grid;
  std::vector<long long> overhead_budgets;
  std::vector<Scheme> schemes;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
  PolarGrid build_grid() const;
  Domain domain() const;
  OverheadPlans overhead_plans() const;
  std::uint64_t near_seed() const;
  std::uint64_t far_seed() const;
};

/// N=128, N_RF=32, U=128, S=8 at ranges scaled so that the range-to-Rayleigh
/// ratio matches the full-size profile; builds in well under a minute.
ExperimentConfig desk_profile();
/// N=512, N_RF=100, U=512, S=16, 20-100 m. The hierarchy build takes on the
/// order of an hour on a desktop CPU.
ExperimentConfig paper_profile();

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// JSON manifest with the config hash, seed, tool version and command line.
void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                    const std::string& command);

// ---- runs ----

struct ExperimentContext {
  PolarGrid grid;
  Hierarchy near;
  Hierarchy far;
  CMatrix far_codebook;
};

using LogFn = std::function<void(const std::string&)>;

/// Builds (or loads from `cache_dir`) both hierarchies. Cache files are keyed
/// by a hash of every parameter that affects the codewords, and the seed.
ExperimentContext prepare_context(const ExperimentConfig& cfg,
                                  const std::optional<std::filesystem::path>& cache_dir = {},
                                  const LogFn& log = {});

Hierarchy load_or_build_hierarchy(const PolarGrid& grid, std::span<const LayerCells> plan,
                                  const GsConfig& gs, const AltOptConfig& alt,
                                  std::uint64_t seed, int threads,
                                  const std::optional<std::filesystem::path>& cache_dir,
                                  const LogFn& log = {});

/// Channel of trial t. Every scheme and sweep point sees the same draw;
/// `distance` replaces the drawn range when given.
ChannelRealization trial_channel(const ExperimentConfig& cfg, long long trial,
                                 std::optional<double> distance = std::nullopt);
/// Noise stream of trial t, shared by all schemes.
Rng trial_noise(const ExperimentConfig& cfg, long long trial);

TrainingOutcome run_scheme(Scheme scheme, const ExperimentContext& ctx,
                           const ChannelRealization& channel, double noise_power, Rng& rng,
                           SlotBudget budget = std::nullopt);

/// Rate of every trial for one scheme at one operating point.
std::vector<double> trial_rates(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                                Scheme scheme, double noise_power, SlotBudget budget = std::nullopt,
                                std::optional<double> distance = std::nullopt);

struct RateSample {
  std::string scheme;
  double x = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  long long trials = 0;  // finite rates included in the mean
};

/// Mean and standard error of the finite entries, compensated summation.
RateSample summarize(const std::string& scheme, double x, const std::vector<double>& rates);

std::vector<RateSample> sweep_overhead(const ExperimentConfig& cfg, const ExperimentContext& ctx);
std::vector<RateSample> sweep_snr(const ExperimentConfig& cfg, const ExperimentContext& ctx);
std::vector<RateSample> sweep_distance(const ExperimentConfig& cfg, const ExperimentContext& ctx);

void write_rate_csv(const std::vector<RateSample>& samples, std::ostream& out);

}  // namespace nfbt
