#include "nfbt/gs_design.hpp"

#include <cmath>
#include <ostream>

namespace nfbt {

void GsConfig::validate() const {
  if (max_iters < 0) throw DomainError("GsConfig: max_iters must be >= 0");
  if (regularization && *regularization < 0.0) {
    throw DomainError("GsConfig: regularization must be >= 0");
  }
  if (early_stop_tol < 0.0) throw DomainError("GsConfig: early_stop_tol must be >= 0");
}

double default_regularization(const CMatrix& codebook) {
  // trace(A A^H) = ||A||_F^2
  return 1e-8 * codebook.squaredNorm() / static_cast<double>(codebook.rows());
}

PatternSolver::PatternSolver(const CMatrix& codebook, double regularization)
    : codebook_(&codebook), regularization_(regularization) {
  if (regularization < 0.0) throw DomainError("PatternSolver: regularization must be >= 0");
  const Eigen::Index n = codebook.rows();
  CMatrix gram = CMatrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(codebook);
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += regularization;
  Eigen::LLT<CMatrix> llt(gram);
  const double scale = gram.diagonal().real().maxCoeff();
  if (llt.info() != Eigen::Success || !(scale > 0.0) || llt.rcond() < 1e-13) {
    throw SingularSystemError(
        "A A^H + eps I is singular or numerically rank deficient; use a positive "
        "regularization");
  }
  projector_ = llt.solve(codebook);
}

PatternSolver::PatternSolver(const PolarGrid& grid, const std::optional<double>& regularization)
    : PatternSolver(grid.codebook(),
                    regularization.value_or(default_regularization(grid.codebook()))) {}

CVector PatternSolver::solve(const CVector& pattern) const {
  require_same_size(pattern.size(), projector_.cols(), "PatternSolver::solve");
  return projector_ * pattern;
}

CVector PatternSolver::forward(const CVector& codeword) const {
  return forward_pattern(*codebook_, codeword);
}

CVector random_phase_init(const IdealPattern& pattern, Rng& rng) {
  const Eigen::Index s = pattern.amplitudes.size();
  CVector g(s);
  for (Eigen::Index k = 0; k < s; ++k) {
    g(k) = std::polar(pattern.amplitudes(k), rng.uniform(-kPi, kPi));
  }
  return g;
}

CVector forward_pattern(const CMatrix& codebook, const CVector& codeword) {
  require_same_size(codebook.rows(), codeword.size(), "forward_pattern");
  return codebook.adjoint() * codeword;
}

CVector amplitude_substitute(const CVector& pattern, const RVector& amplitudes) {
  require_same_size(pattern.size(), amplitudes.size(), "amplitude_substitute");
  CVector out(pattern.size());
  for (Eigen::Index k = 0; k < pattern.size(); ++k) {
    out(k) = std::polar(amplitudes(k), std::arg(pattern(k)));
  }
  return out;
}

CVector backward_codeword(const CMatrix& codebook, const CVector& pattern, double regularization) {
  require_same_size(codebook.cols(), pattern.size(), "backward_codeword");
  return PatternSolver(codebook, regularization).solve(pattern);
}

CVector normalize(const CVector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DomainError("normalize: zero vector");
  return v / norm;
}

double pattern_error(const CMatrix& codebook, const CVector& codeword, const CVector& reference) {
  require_same_size(codebook.cols(), reference.size(), "pattern_error");
  return (forward_pattern(codebook, codeword) - reference).squaredNorm();
}

GsTrace design_theoretical_codeword(const IdealPattern& pattern, const PatternSolver& solver,
                                    const GsConfig& cfg, Rng& rng) {
  cfg.validate();
  require_same_size(pattern.amplitudes.size(), solver.codebook().cols(),
                    "design_theoretical_codeword");
  GsTrace trace;
  trace.regularization = solver.regularization();
  trace.errors.reserve(static_cast<std::size_t>(cfg.max_iters));

  CVector back = solver.solve(random_phase_init(pattern, rng));
  CVector v = normalize(back);
  for (int s = 1; s <= cfg.max_iters; ++s) {
    const CVector g = solver.forward(v);
    const CVector g_sub = amplitude_substitute(g, pattern.amplitudes);
    trace.errors.push_back((g - g_sub).squaredNorm());
    back = solver.solve(g_sub);
    if (cfg.early_stop_tol > 0.0 && s > 1) {
      const double drop = trace.errors[s - 2] - trace.errors[s - 1];
      if (drop < cfg.early_stop_tol) break;
    }
    if (s < cfg.max_iters) v = normalize(back);
  }
  trace.codeword = normalize(back);
  return trace;
}

GsTrace design_theoretical_codeword(const IdealPattern& pattern, const PolarGrid& grid,
                                    const GsConfig& cfg, Rng& rng) {
  const PatternSolver solver(grid, cfg.regularization);
  return design_theoretical_codeword(pattern, solver, cfg, rng);
}

void write_trace_csv(const GsTrace& trace, std::ostream& out) {
  out << "iteration,error\n";
  out.precision(17);
  for (std::size_t i = 0; i < trace.errors.size(); ++i) {
    out << (i + 1) << ',' << trace.errors[i] << '\n';
  }
}

}  // namespace nfbt
