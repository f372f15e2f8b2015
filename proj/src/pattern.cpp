#include "nfbt/pattern.hpp"

#include <cmath>

namespace nfbt {

namespace {

bool in_interval(double x, double lo, double hi, bool hi_closed) {
  return x >= lo && (x < hi || (hi_closed && x <= hi));
}

}  // namespace

void CoverageBox::validate() const {
  if (!(angle_lo < angle_hi)) throw DomainError("CoverageBox: angle_lo must be < angle_hi");
  if (!(dist_lo < dist_hi)) throw DomainError("CoverageBox: dist_lo must be < dist_hi");
  if (!(dist_lo > 0.0)) throw DomainError("CoverageBox: distances must be positive");
}

bool CoverageBox::contains(double angle, double distance) const {
  return in_interval(angle, angle_lo, angle_hi, angle_hi_closed) &&
         in_interval(distance, dist_lo, dist_hi, dist_hi_closed);
}

bool CoverageBox::contains(const CoverageBox& other, double tol) const {
  const double dist_tol = tol * dist_hi;
  return other.angle_lo >= angle_lo - tol && other.angle_hi <= angle_hi + tol &&
         other.dist_lo >= dist_lo - dist_tol && other.dist_hi <= dist_hi + dist_tol;
}

std::vector<int> covered_indices(const PolarGrid& grid, const CoverageBox& box) {
  std::vector<int> out;
  const auto angles = grid.angles();
  for (int n = 0; n < grid.num_angles(); ++n) {
    if (!in_interval(angles[n], box.angle_lo, box.angle_hi, box.angle_hi_closed)) continue;
    const auto distances = grid.distances(n);
    for (int s = 0; s < static_cast<int>(distances.size()); ++s) {
      if (in_interval(distances[s], box.dist_lo, box.dist_hi, box.dist_hi_closed)) {
        out.push_back(grid.column_index(n, s));
      }
    }
  }
  return out;
}

LevelRule LevelRule::fixed(double level_squared) {
  if (!(level_squared > 0.0)) throw DomainError("LevelRule::fixed: C_v must be > 0");
  return LevelRule(Kind::kFixed, level_squared);
}

double LevelRule::level_squared(int num_columns, int num_covered) const {
  if (kind_ == Kind::kFixed) return value_;
  return static_cast<double>(num_columns) / num_covered;
}

IdealPattern ideal_amplitudes(const PolarGrid& grid, const CoverageBox& box,
                              const LevelRule& rule) {
  box.validate();
  const double slack = 1e-9;
  if (box.angle_lo < -1.0 - slack || box.angle_hi > 1.0 + slack ||
      box.dist_lo < grid.min_distance() * (1.0 - slack) ||
      box.dist_hi > grid.max_distance() * (1.0 + slack)) {
    throw DomainError("ideal_amplitudes: box extends outside the grid domain");
  }
  IdealPattern p;
  p.box = box;
  p.covered = covered_indices(grid, box);
  if (p.covered.empty()) throw DomainError("ideal_amplitudes: box covers no grid point");
  p.level = std::sqrt(rule.level_squared(grid.num_columns(), static_cast<int>(p.covered.size())));
  p.amplitudes = RVector::Zero(grid.num_columns());
  for (int c : p.covered) p.amplitudes(c) = p.level;
  return p;
}

}  // namespace nfbt
