#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nfbt/rng.hpp"
#include "nfbt/types.hpp"

namespace nfbt {

/// b-bit phase-shifter alphabet: pi * (-1 + (2k + 1) / 2^b), k = 0..2^b - 1.
class PhaseSet {
 public:
  explicit PhaseSet(int bits);

  int bits() const { return bits_; }
  int size() const { return static_cast<int>(values_.size()); }
  double phase(int k) const { return values_.at(k); }
  Complex phasor(int k) const { return phasors_[k]; }
  std::span<const double> values() const { return values_; }

  // Index of the alphabet entry closest to `phase` on the circle.
  int nearest(double phase) const;

 private:
  int bits_;
  std::vector<double> values_;
  std::vector<Complex> phasors_;
};

PhaseSet quantized_phase_set(int bits);

/// f = (F^H F)^{-1} F^H v.
CVector digital_ls(const CMatrix& analog, const CVector& target);

struct RowSearchResult {
  std::vector<int> indices;  // phase index per RF chain
  int sweeps = 0;            // coordinate sweeps performed
  bool converged = false;    // last sweep changed nothing
  double objective = 0.0;    // |v_n - sum_i f_i exp(j delta_i)|
};

/// Coordinate descent over one row of the analog matrix: each sweep visits
/// the RF chains in order and moves delta_i to the alphabet entry that
/// minimizes the row residual with the other entries held fixed. Stops after
/// a sweep with no change or after `max_sweeps` sweeps.
RowSearchResult analog_row_search(Complex target, const CVector& digital, const PhaseSet& phases,
                                  std::span<const int> init, int max_sweeps);

struct AltOptConfig {
  int outer_iters = 20;  // T_max
  int inner_iters = 10;  // P_max

  void validate() const;
};

/// Practical codeword v_p = F_RF f_BB. Analog phases are stored as indices
/// into the phase alphabet so feasibility is exact.
class HybridCodeword {
 public:
  HybridCodeword() = default;
  HybridCodeword(int num_antennas, int num_rf_chains, int bits,
                 std::vector<std::uint16_t> phase_indices, CVector digital);

  int num_antennas() const { return num_antennas_; }
  int num_rf_chains() const { return num_rf_chains_; }
  int bits() const { return bits_; }
  int phase_index(int n, int i) const { return phase_indices_[n * num_rf_chains_ + i]; }
  const std::vector<std::uint16_t>& phase_indices() const { return phase_indices_; }
  const CVector& digital() const { return digital_; }

  CMatrix analog() const;
  CVector vector() const;  // F_RF f_BB
  double product_norm() const { return vector().norm(); }

  bool operator==(const HybridCodeword&) const;

 private:
  int num_antennas_ = 0;
  int num_rf_chains_ = 0;
  int bits_ = 1;
  std::vector<std::uint16_t> phase_indices_;  // row-major N x N_RF
  CVector digital_;
};

struct HybridDesign {
  HybridCodeword codeword;
  // ||v - F_RF f_BB|| after each outer iteration's analog update.
  std::vector<double> errors;
  // ||v - F_RF f_BB|| after every digital solve and every analog pass, in order.
  std::vector<double> pass_errors;
};

/// Alternating optimization: digital least squares, then a coordinate search
/// on every analog row, repeated `outer_iters` times. f_BB is rescaled at the
/// end so that ||F_RF f_BB|| = 1. `init`, when given, is the row-major
/// N x N_RF index matrix of F_RF^0; otherwise it is drawn uniformly from the
/// alphabet using `rng`.
HybridDesign design_hybrid_codeword(const CVector& target, int num_rf_chains,
                                    const PhaseSet& phases, const AltOptConfig& cfg, Rng& rng,
                                    std::optional<std::span<const int>> init = std::nullopt);

}  // namespace nfbt
