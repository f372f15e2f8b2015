#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nfbt/channel.hpp"
#include "nfbt/types.hpp"

namespace nfbt {

/// Distance sampling for the polar grid: `per_angle` samples at the cell
/// midpoints of a uniform partition of [1/max_distance, 1/min_distance],
/// identical for every angle. max_distance defaults to the Rayleigh distance.
struct DistanceSampling {
  double min_distance = 20.0;
  std::optional<double> max_distance;
  int per_angle = 16;
};

/// Joint angle x distance grid and the polar-domain codebook A whose columns
/// are the steering vectors at the grid points. Column order is angle-major:
/// column (n, s) comes after every column of angles < n.
class PolarGrid {
 public:
  PolarGrid(ArrayConfig cfg, std::vector<double> angles,
            std::vector<std::vector<double>> distances, double min_distance,
            double max_distance);
  // Adopts a precomputed codebook (used when loading from disk).
  PolarGrid(ArrayConfig cfg, std::vector<double> angles,
            std::vector<std::vector<double>> distances, double min_distance,
            double max_distance, CMatrix codebook);

  const ArrayConfig& config() const { return cfg_; }
  int num_angles() const { return static_cast<int>(angles_.size()); }
  int num_columns() const { return static_cast<int>(codebook_.cols()); }
  int distances_at(int angle_index) const {
    return static_cast<int>(distances_.at(angle_index).size());
  }

  std::span<const double> angles() const { return angles_; }
  std::span<const double> distances(int angle_index) const { return distances_.at(angle_index); }
  const CMatrix& codebook() const { return codebook_; }

  int column_index(int angle_index, int distance_index) const;
  std::pair<int, int> grid_point(int column) const;
  double angle_of(int column) const;
  double distance_of(int column) const;

  // Domain covered by the grid cells.
  double min_distance() const { return min_distance_; }
  double max_distance() const { return max_distance_; }

 private:
  ArrayConfig cfg_;
  std::vector<double> angles_;
  std::vector<std::vector<double>> distances_;
  std::vector<int> offsets_;  // first column of each angle, plus a sentinel
  double min_distance_;
  double max_distance_;
  CMatrix codebook_;
};

/// Midpoints of U equal cells over [-1, 1].
std::vector<double> uniform_angles(int num_angles);

PolarGrid build_polar_grid(const ArrayConfig& cfg, int num_angles,
                           const DistanceSampling& sampling);

// Binary container: tag, version, array config, angles, per-angle distances,
// domain bounds, then the codebook columns. Round-trips bit-exactly.
void write_polar_grid(const PolarGrid& grid, std::ostream& out);
PolarGrid read_polar_grid(std::istream& in);
void save_polar_grid(const PolarGrid& grid, const std::filesystem::path& path);
PolarGrid load_polar_grid(const std::filesystem::path& path);

}  // namespace nfbt
