#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "nfbt/pattern.hpp"
#include "nfbt/polar_grid.hpp"
#include "nfbt/rng.hpp"
#include "nfbt/types.hpp"

namespace nfbt {

struct GsConfig {
  // Number of alternating-projection iterations. 0 skips the loop and returns
  // the normalized initial least-squares solution.
  int max_iters = 50;
  // Tikhonov term added to A A^H. Unset selects 1e-8 * trace(A A^H) / N.
  std::optional<double> regularization;
  // Stop once the error decreases by less than this. 0 disables the check.
  double early_stop_tol = 1e-10;

  void validate() const;
};

double default_regularization(const CMatrix& codebook);

/// Least-squares back-projection v = (A A^H + eps I)^{-1} A g. The solve
/// operator is formed once per grid and reused for every codeword designed
/// on that grid; it is read-only after construction.
class PatternSolver {
 public:
  PatternSolver(const CMatrix& codebook, double regularization);
  PatternSolver(const PolarGrid& grid, const std::optional<double>& regularization);

  CVector solve(const CVector& pattern) const;
  CVector forward(const CVector& codeword) const;  // A^H v

  double regularization() const { return regularization_; }
  const CMatrix& codebook() const { return *codebook_; }

 private:
  const CMatrix* codebook_;
  double regularization_;
  CMatrix projector_;  // (A A^H + eps I)^{-1} A
};

CVector random_phase_init(const IdealPattern& pattern, Rng& rng);
CVector forward_pattern(const CMatrix& codebook, const CVector& codeword);
// Keep the phase of g, take the modulus from the target; zero entries of g get phase 0.
CVector amplitude_substitute(const CVector& pattern, const RVector& amplitudes);
CVector backward_codeword(const CMatrix& codebook, const CVector& pattern, double regularization);
CVector normalize(const CVector& v);
double pattern_error(const CMatrix& codebook, const CVector& codeword, const CVector& reference);

struct GsTrace {
  std::vector<double> errors;  // E_(s), one per completed iteration
  CVector codeword;            // unit norm
  double regularization = 0.0;
};

GsTrace design_theoretical_codeword(const IdealPattern& pattern, const PatternSolver& solver,
                                    const GsConfig& cfg, Rng& rng);
GsTrace design_theoretical_codeword(const IdealPattern& pattern, const PolarGrid& grid,
                                    const GsConfig& cfg, Rng& rng);

// "iteration,error" rows, iterations counted from 1.
void write_trace_csv(const GsTrace& trace, std::ostream& out);

}  // namespace nfbt
