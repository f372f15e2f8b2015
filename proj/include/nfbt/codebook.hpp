#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "nfbt/channel.hpp"
#include "nfbt/gs_design.hpp"
#include "nfbt/hybrid_design.hpp"
#include "nfbt/pattern.hpp"
#include "nfbt/polar_grid.hpp"

namespace nfbt {

/// Angle x distance region partitioned by the hierarchy.
struct Domain {
  double angle_lo = -1.0;
  double angle_hi = 1.0;
  double dist_lo = 20.0;
  double dist_hi = 100.0;

  static Domain of(const PolarGrid& grid);
};

/// Cell sizes of one layer. The distance step is measured in inverse
/// distance (1/m), the coordinate the grid is sampled in, so boxes at
/// different ranges hold the same number of grid points.
struct LayerSpec {
  double angle_step = 2.0;
  double distance_step = 1.0;
  int layer_index = 0;
};

/// Layer resolution as a number of cells along each axis.
struct LayerCells {
  int angle_cells = 1;
  int distance_cells = 1;
};

std::vector<LayerSpec> layer_specs(const Domain& domain, std::span<const LayerCells> plan);

/// Candidates measured per layer during training: all layer-1 boxes, then
/// the children of one parent per deeper layer. Requires every layer's cell
/// counts to divide the next layer's.
std::vector<long long> searched_per_layer(std::span<const LayerCells> plan);
long long plan_overhead(std::span<const LayerCells> plan);

/// Boxes tiling the domain for every layer. Layer l has
/// ceil(angle extent / step) x ceil(inverse-distance extent / step) boxes,
/// indexed angle-major with distance cells ordered by increasing range; the
/// last cell along each axis takes whatever extent remains.
std::vector<std::vector<CoverageBox>> plan_layers(const Domain& domain,
                                                  std::span<const LayerSpec> specs);

struct GridSpec {
  int num_angles = 0;
  int distances_per_angle = 0;
  double min_distance = 0.0;
  double max_distance = 0.0;

  static GridSpec of(const PolarGrid& grid);
  PolarGrid build(const ArrayConfig& cfg) const;
  bool operator==(const GridSpec&) const = default;
};

struct CodebookEntry {
  CoverageBox box;
  CVector theoretical;      // GS output
  HybridCodeword practical;
  CVector beam;             // practical.vector(), cached
  int parent = -1;
  std::vector<int> children;
};

struct CodebookLayer {
  LayerSpec spec;
  std::vector<CodebookEntry> entries;
};

struct Hierarchy {
  ArrayConfig config;
  GridSpec grid;
  GsConfig gs;
  AltOptConfig alt;
  std::uint64_t seed = 0;
  std::vector<CodebookLayer> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
  const CodebookEntry& entry(int layer, int index) const { return layers.at(layer).entries.at(index); }
  /// Slots used by one full training pass.
  long long overhead() const;
  /// True when every box spans the full distance range.
  bool angle_only() const;
};

/// Design failure for one box, tagged with its position in the hierarchy.
class DesignError : public std::runtime_error {
 public:
  DesignError(int layer, int index, const std::string& what);
  int layer() const { return layer_; }
  int index() const { return index_; }

 private:
  int layer_;
  int index_;
};

using BuildProgress = std::function<void(int layer, int done, int total)>;

/// Designs every codeword of every layer (ideal pattern -> GS -> hybrid) and
/// links each box to the parent box containing its center. Each codeword uses
/// its own stream derived from (seed, layer, index), so the result does not
/// depend on the number of worker threads.
Hierarchy build_hierarchy(const PolarGrid& grid, std::span<const LayerSpec> specs,
                          const GsConfig& gs, const AltOptConfig& alt, std::uint64_t seed,
                          int num_threads = 0, const BuildProgress& progress = {});

// Versioned binary container; round-trips bit-exactly.
void write_hierarchy(const Hierarchy& h, std::ostream& out);
Hierarchy read_hierarchy(std::istream& in);
void save_hierarchy(const Hierarchy& h, const std::filesystem::path& path);
Hierarchy load_hierarchy(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, count) on up to `num_threads` threads
/// (0 = hardware concurrency). The first exception is rethrown.
void parallel_for(int count, int num_threads, const std::function<void(int)>& fn);

}  // namespace nfbt
