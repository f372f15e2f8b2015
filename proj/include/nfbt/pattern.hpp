#pragma once

#include <vector>

#include "nfbt/polar_grid.hpp"
#include "nfbt/types.hpp"

namespace nfbt {

/// Rectangular angle x distance coverage region. Intervals are half-open
/// [lo, hi); the closed flags turn the upper bound inclusive for boxes that
/// sit on the domain boundary so a layer's boxes tile without gaps.
struct CoverageBox {
  double angle_lo = -1.0;
  double angle_hi = 1.0;
  double dist_lo = 1.0;
  double dist_hi = 2.0;
  bool angle_hi_closed = false;
  bool dist_hi_closed = false;

  void validate() const;
  bool contains(double angle, double distance) const;
  // Containment of another box, with slack `tol` on every edge.
  bool contains(const CoverageBox& other, double tol = 1e-9) const;

  double center_angle() const { return 0.5 * (angle_lo + angle_hi); }
  // Midpoint in inverse distance, matching how grid distances are sampled.
  double center_distance() const { return 2.0 / (1.0 / dist_lo + 1.0 / dist_hi); }

  bool operator==(const CoverageBox&) const = default;
};

/// Codebook columns whose grid point lies inside `box`, ascending.
std::vector<int> covered_indices(const PolarGrid& grid, const CoverageBox& box);

/// How the flat in-box level C_v is chosen.
class LevelRule {
 public:
  // C_v = S / |covered|, so that ||g_v||^2 = S for every box size.
  static LevelRule constant_energy() { return LevelRule(Kind::kConstantEnergy, 0.0); }
  static LevelRule fixed(double level_squared);

  double level_squared(int num_columns, int num_covered) const;

 private:
  enum class Kind { kConstantEnergy, kFixed };
  LevelRule(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

struct IdealPattern {
  RVector amplitudes;        // |g_v| over the grid columns
  double level = 0.0;        // sqrt(C_v)
  CoverageBox box;
  std::vector<int> covered;  // columns with non-zero amplitude
};

IdealPattern ideal_amplitudes(const PolarGrid& grid, const CoverageBox& box,
                              const LevelRule& rule = LevelRule::constant_energy());

}  // namespace nfbt
