#include "nfbt/polar_grid.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "binary_io.hpp"

namespace nfbt {

namespace {

constexpr char kGridTag[9] = "NFBTGRID";
constexpr std::uint32_t kGridVersion = 1;

void validate_points(const std::vector<double>& angles,
                     const std::vector<std::vector<double>>& distances, double min_distance,
                     double max_distance) {
  if (angles.empty()) throw DomainError("PolarGrid: at least one angle is required");
  if (angles.size() != distances.size()) {
    throw DimensionError("PolarGrid: one distance list per angle is required");
  }
  if (!(min_distance > 0.0) || !(min_distance < max_distance)) {
    throw DomainError("PolarGrid: distance bounds must satisfy 0 < min < max");
  }
  if (!std::is_sorted(angles.begin(), angles.end())) {
    throw DomainError("PolarGrid: angles must be sorted");
  }
  for (const auto& d : distances) {
    if (d.empty()) throw DomainError("PolarGrid: every angle needs at least one distance");
    if (!std::is_sorted(d.begin(), d.end())) {
      throw DomainError("PolarGrid: distances must be sorted");
    }
  }
}

}  // namespace

PolarGrid::PolarGrid(ArrayConfig cfg, std::vector<double> angles,
                     std::vector<std::vector<double>> distances, double min_distance,
                     double max_distance)
    : PolarGrid(cfg, std::move(angles), std::move(distances), min_distance, max_distance,
                CMatrix()) {}

PolarGrid::PolarGrid(ArrayConfig cfg, std::vector<double> angles,
                     std::vector<std::vector<double>> distances, double min_distance,
                     double max_distance, CMatrix codebook)
    : cfg_(cfg),
      angles_(std::move(angles)),
      distances_(std::move(distances)),
      min_distance_(min_distance),
      max_distance_(max_distance),
      codebook_(std::move(codebook)) {
  cfg_.validate();
  validate_points(angles_, distances_, min_distance_, max_distance_);
  offsets_.reserve(angles_.size() + 1);
  int total = 0;
  for (const auto& d : distances_) {
    offsets_.push_back(total);
    total += static_cast<int>(d.size());
  }
  offsets_.push_back(total);

  if (codebook_.size() == 0) {
    codebook_.resize(cfg_.num_antennas, total);
    for (int n = 0; n < num_angles(); ++n) {
      for (int s = 0; s < distances_at(n); ++s) {
        codebook_.col(offsets_[n] + s) = steering_vector(cfg_, angles_[n], distances_[n][s]);
      }
    }
  } else if (codebook_.rows() != cfg_.num_antennas || codebook_.cols() != total) {
    throw DimensionError("PolarGrid: codebook shape does not match the grid");
  }
}

int PolarGrid::column_index(int angle_index, int distance_index) const {
  if (angle_index < 0 || angle_index >= num_angles() || distance_index < 0 ||
      distance_index >= distances_at(angle_index)) {
    throw std::out_of_range("PolarGrid::column_index");
  }
  return offsets_[angle_index] + distance_index;
}

std::pair<int, int> PolarGrid::grid_point(int column) const {
  if (column < 0 || column >= num_columns()) throw std::out_of_range("PolarGrid::grid_point");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), column);
  const int n = static_cast<int>(it - offsets_.begin()) - 1;
  return {n, column - offsets_[n]};
}

double PolarGrid::angle_of(int column) const { return angles_[grid_point(column).first]; }

double PolarGrid::distance_of(int column) const {
  const auto [n, s] = grid_point(column);
  return distances_[n][s];
}

std::vector<double> uniform_angles(int num_angles) {
  if (num_angles < 1) throw DomainError("uniform_angles: need at least one angle");
  std::vector<double> angles(num_angles);
  for (int u = 0; u < num_angles; ++u) {
    angles[u] = -1.0 + (2.0 * u + 1.0) / num_angles;
  }
  return angles;
}

PolarGrid build_polar_grid(const ArrayConfig& cfg, int num_angles,
                           const DistanceSampling& sampling) {
  cfg.validate();
  if (num_angles < 1) throw DomainError("build_polar_grid: num_angles must be >= 1");
  if (sampling.per_angle < 1) throw DomainError("build_polar_grid: per_angle must be >= 1");
  const double r_min = sampling.min_distance;
  const double r_max = sampling.max_distance.value_or(rayleigh_distance(cfg));
  if (!(r_min > 0.0) || !(r_min < r_max)) {
    throw DomainError("build_polar_grid: need 0 < min_distance < max_distance (got " +
                      std::to_string(r_min) + ", " + std::to_string(r_max) + ")");
  }

  const double inv_lo = 1.0 / r_max;
  const double inv_step = (1.0 / r_min - inv_lo) / sampling.per_angle;
  std::vector<double> ranges(sampling.per_angle);
  for (int s = 0; s < sampling.per_angle; ++s) {
    // Largest inverse distance first so that the distances come out ascending.
    const int cell = sampling.per_angle - 1 - s;
    ranges[s] = 1.0 / (inv_lo + (cell + 0.5) * inv_step);
  }

  std::vector<std::vector<double>> distances(num_angles, ranges);
  return PolarGrid(cfg, uniform_angles(num_angles), std::move(distances), r_min, r_max);
}

void write_polar_grid(const PolarGrid& grid, std::ostream& out) {
  const ArrayConfig& cfg = grid.config();
  io::put_tag(out, kGridTag);
  io::put<std::uint32_t>(out, kGridVersion);
  io::put<std::int32_t>(out, cfg.num_antennas);
  io::put<double>(out, cfg.antenna_spacing);
  io::put<double>(out, cfg.wavelength);
  io::put<std::int32_t>(out, cfg.num_rf_chains);
  io::put<std::int32_t>(out, cfg.phase_bits);
  io::put<double>(out, grid.min_distance());
  io::put<double>(out, grid.max_distance());
  const auto angles = grid.angles();
  io::put_doubles(out, std::vector<double>(angles.begin(), angles.end()));
  for (int n = 0; n < grid.num_angles(); ++n) {
    const auto d = grid.distances(n);
    io::put_doubles(out, std::vector<double>(d.begin(), d.end()));
  }
  const CMatrix& a = grid.codebook();
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(a.size() * sizeof(Complex)));
  if (!out) throw FormatError("write_polar_grid: stream error");
}

PolarGrid read_polar_grid(std::istream& in) {
  io::expect_tag(in, kGridTag);
  const auto version = io::get<std::uint32_t>(in);
  if (version != kGridVersion) {
    throw FormatError("read_polar_grid: unsupported version " + std::to_string(version));
  }
  ArrayConfig cfg;
  cfg.num_antennas = io::get<std::int32_t>(in);
  cfg.antenna_spacing = io::get<double>(in);
  cfg.wavelength = io::get<double>(in);
  cfg.num_rf_chains = io::get<std::int32_t>(in);
  cfg.phase_bits = io::get<std::int32_t>(in);
  cfg.validate();
  const double r_min = io::get<double>(in);
  const double r_max = io::get<double>(in);
  auto angles = io::get_doubles(in);
  std::vector<std::vector<double>> distances;
  distances.reserve(angles.size());
  std::size_t total = 0;
  for (std::size_t n = 0; n < angles.size(); ++n) {
    distances.push_back(io::get_doubles(in));
    total += distances.back().size();
  }
  CMatrix a(cfg.num_antennas, static_cast<Eigen::Index>(total));
  in.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(a.size() * sizeof(Complex)));
  if (!in) throw FormatError("read_polar_grid: truncated codebook");
  return PolarGrid(cfg, std::move(angles), std::move(distances), r_min, r_max, std::move(a));
}

void save_polar_grid(const PolarGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_polar_grid(grid, out);
}

PolarGrid load_polar_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_polar_grid(in);
}

}  // namespace nfbt
