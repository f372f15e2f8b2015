#include "nfbt/hybrid_design.hpp"

#include <cmath>
#include <string>

namespace nfbt {

PhaseSet::PhaseSet(int bits) : bits_(bits) {
  if (bits < 1 || bits > 15) throw DomainError("PhaseSet: bits must be in [1, 15]");
  const int m = 1 << bits;
  values_.resize(m);
  phasors_.resize(m);
  for (int k = 0; k < m; ++k) {
    values_[k] = kPi * (-1.0 + (2.0 * k + 1.0) / m);
    phasors_[k] = std::polar(1.0, values_[k]);
  }
}

int PhaseSet::nearest(double phase) const {
  const int m = size();
  // Alphabet entries sit at the centers of m equal arcs starting at -pi.
  const double wrapped = std::remainder(phase, 2.0 * kPi);  // [-pi, pi]
  int k = static_cast<int>(std::floor((wrapped + kPi) * m / (2.0 * kPi)));
  return ((k % m) + m) % m;
}

PhaseSet quantized_phase_set(int bits) { return PhaseSet(bits); }

CVector digital_ls(const CMatrix& analog, const CVector& target) {
  require_same_size(analog.rows(), target.size(), "digital_ls");
  const CMatrix gram = analog.adjoint() * analog;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw SingularSystemError(
        "digital_ls: F_RF^H F_RF is singular; redraw F_RF or regularize the digital solve");
  }
  return llt.solve(analog.adjoint() * target);
}

RowSearchResult analog_row_search(Complex target, const CVector& digital, const PhaseSet& phases,
                                  std::span<const int> init, int max_sweeps) {
  const auto n_rf = static_cast<std::size_t>(digital.size());
  if (init.size() != n_rf) throw DimensionError("analog_row_search: init must have N_RF entries");
  if (max_sweeps < 1) throw DomainError("analog_row_search: max_sweeps must be >= 1");
  RowSearchResult out;
  out.indices.assign(init.begin(), init.end());
  for (int k : out.indices) {
    if (k < 0 || k >= phases.size()) throw DomainError("analog_row_search: phase index out of range");
  }

  Complex residual = target;
  for (std::size_t i = 0; i < n_rf; ++i) residual -= digital(i) * phases.phasor(out.indices[i]);

  while (out.sweeps < max_sweeps) {
    ++out.sweeps;
    bool changed = false;
    for (std::size_t i = 0; i < n_rf; ++i) {
      const Complex f = digital(i);
      if (f == Complex(0.0)) continue;  // delta_i does not affect the objective
      const int current = out.indices[i];
      const Complex base = residual + f * phases.phasor(current);
      // |base - f e^{j delta}| is minimized by the alphabet entry nearest to
      // arg(base) - arg(f); the neighbours are checked to absorb rounding.
      const int guess = phases.nearest(std::arg(base) - std::arg(f));
      int best = current;
      double best_obj = std::abs(base - f * phases.phasor(current));
      const double tol = 1e-14 * (std::abs(base) + std::abs(f));
      for (int delta : {0, -1, 1}) {
        const int k = ((guess + delta) % phases.size() + phases.size()) % phases.size();
        const double obj = std::abs(base - f * phases.phasor(k));
        if (obj < best_obj - tol) {
          best = k;
          best_obj = obj;
        }
      }
      if (best != current) {
        out.indices[i] = best;
        residual = base - f * phases.phasor(best);
        changed = true;
      }
    }
    if (!changed) {
      out.converged = true;
      break;
    }
  }

  Complex exact = target;
  for (std::size_t i = 0; i < n_rf; ++i) exact -= digital(i) * phases.phasor(out.indices[i]);
  out.objective = std::abs(exact);
  return out;
}

void AltOptConfig::validate() const {
  if (outer_iters < 1) throw DomainError("AltOptConfig: outer_iters must be >= 1");
  if (inner_iters < 1) throw DomainError("AltOptConfig: inner_iters must be >= 1");
}

HybridCodeword::HybridCodeword(int num_antennas, int num_rf_chains, int bits,
                               std::vector<std::uint16_t> phase_indices, CVector digital)
    : num_antennas_(num_antennas),
      num_rf_chains_(num_rf_chains),
      bits_(bits),
      phase_indices_(std::move(phase_indices)),
      digital_(std::move(digital)) {
  if (num_antennas < 1 || num_rf_chains < 1) throw DomainError("HybridCodeword: empty shape");
  if (phase_indices_.size() != static_cast<std::size_t>(num_antennas) * num_rf_chains) {
    throw DimensionError("HybridCodeword: phase index matrix has the wrong size");
  }
  require_same_size(digital_.size(), num_rf_chains, "HybridCodeword digital vector");
  const int m = 1 << bits;
  for (auto k : phase_indices_) {
    if (k >= m) throw DomainError("HybridCodeword: phase index outside the alphabet");
  }
}

CMatrix HybridCodeword::analog() const {
  const PhaseSet phases(bits_);
  CMatrix f(num_antennas_, num_rf_chains_);
  for (int n = 0; n < num_antennas_; ++n) {
    for (int i = 0; i < num_rf_chains_; ++i) f(n, i) = phases.phasor(phase_index(n, i));
  }
  return f;
}

CVector HybridCodeword::vector() const { return analog() * digital_; }

bool HybridCodeword::operator==(const HybridCodeword& other) const {
  return num_antennas_ == other.num_antennas_ && num_rf_chains_ == other.num_rf_chains_ &&
         bits_ == other.bits_ && phase_indices_ == other.phase_indices_ &&
         digital_ == other.digital_;
}

HybridDesign design_hybrid_codeword(const CVector& target, int num_rf_chains,
                                    const PhaseSet& phases, const AltOptConfig& cfg, Rng& rng,
                                    std::optional<std::span<const int>> init) {
  cfg.validate();
  const int n_ant = static_cast<int>(target.size());
  if (num_rf_chains < 1 || num_rf_chains > n_ant) {
    throw DomainError("design_hybrid_codeword: need 1 <= N_RF <= N");
  }
  if (std::abs(target.norm() - 1.0) > 1e-9) {
    throw DomainError("design_hybrid_codeword: target codeword must have unit norm");
  }

  std::vector<int> idx(static_cast<std::size_t>(n_ant) * num_rf_chains);
  if (init) {
    if (init->size() != idx.size()) throw DimensionError("design_hybrid_codeword: init shape");
    idx.assign(init->begin(), init->end());
  } else {
    for (int& k : idx) k = rng.uniform_int(0, phases.size() - 1);
  }

  const auto build_analog = [&] {
    CMatrix f(n_ant, num_rf_chains);
    for (int n = 0; n < n_ant; ++n) {
      for (int i = 0; i < num_rf_chains; ++i) f(n, i) = phases.phasor(idx[n * num_rf_chains + i]);
    }
    return f;
  };

  HybridDesign out;
  CVector digital;
  for (int t = 0; t < cfg.outer_iters; ++t) {
    const CMatrix analog = build_analog();
    digital = digital_ls(analog, target);
    out.pass_errors.push_back((target - analog * digital).norm());
    for (int n = 0; n < n_ant; ++n) {
      const std::span<int> row(idx.data() + static_cast<std::size_t>(n) * num_rf_chains,
                               static_cast<std::size_t>(num_rf_chains));
      const RowSearchResult r =
          analog_row_search(target(n), digital, phases, row, cfg.inner_iters);
      std::copy(r.indices.begin(), r.indices.end(), row.begin());
    }
    const double err = (target - build_analog() * digital).norm();
    out.pass_errors.push_back(err);
    out.errors.push_back(err);
  }

  const double norm = (build_analog() * digital).norm();
  if (!(norm > 0.0)) throw SingularSystemError("design_hybrid_codeword: F_RF f_BB vanished");
  digital /= norm;

  std::vector<std::uint16_t> stored(idx.begin(), idx.end());
  out.codeword = HybridCodeword(n_ant, num_rf_chains, phases.bits(), std::move(stored),
                                std::move(digital));
  return out;
}

}  // namespace nfbt
