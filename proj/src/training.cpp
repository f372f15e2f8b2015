#include "nfbt/training.hpp"

#include <ostream>
#include <sstream>

namespace nfbt {

namespace {

// Slot bookkeeping shared by all protocols.
class SlotRunner {
 public:
  SlotRunner(const ChannelRealization& channel, double noise_power, Rng& rng, SlotBudget budget)
      : channel_(channel), noise_power_(noise_power), rng_(rng), budget_(budget) {
    if (budget && *budget < 1) throw DomainError("training budget must be >= 1 slot");
    if (noise_power < 0.0) throw DomainError("noise power must be >= 0");
  }

  bool exhausted() const { return budget_ && used() >= *budget_; }
  long long used() const { return static_cast<long long>(log_.size()); }

  double measure(CodewordId id, const CVector& beam) {
    const Complex y = received_signal(channel_.vector, beam, Complex(1.0, 0.0), noise_power_, rng_);
    log_.push_back(SlotRecord{id, std::abs(y)});
    return log_.back().magnitude;
  }

  // Codeword of the strongest measurement so far.
  CodewordId best_id() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < log_.size(); ++i) {
      if (log_[i].magnitude > log_[best].magnitude) best = i;
    }
    return log_.at(best).id;
  }

  bool budgeted() const { return budget_.has_value(); }

  TrainingOutcome finish(CodewordId chosen, CVector beam, bool limited) {
    TrainingOutcome out;
    out.chosen = chosen;
    out.measurements_used = used();
    out.log = std::move(log_);
    out.beam = std::move(beam);
    out.budget_limited = limited;
    return out;
  }

 private:
  const ChannelRealization& channel_;
  double noise_power_;
  Rng& rng_;
  SlotBudget budget_;
  std::vector<SlotRecord> log_;
};

void check_channel(const ChannelRealization& channel, int num_antennas) {
  require_same_size(channel.vector.size(), num_antennas, "training channel");
}

TrainingOutcome flat_train(const ChannelRealization& channel, const CMatrix& codebook,
                           double noise_power, Rng& rng, SlotBudget budget) {
  check_channel(channel, static_cast<int>(codebook.rows()));
  if (codebook.cols() < 1) throw DomainError("training codebook is empty");
  SlotRunner runner(channel, noise_power, rng, budget);
  bool limited = false;
  for (Eigen::Index k = 0; k < codebook.cols(); ++k) {
    if (runner.exhausted()) {
      limited = true;
      break;
    }
    runner.measure(CodewordId{0, static_cast<int>(k)}, codebook.col(k));
  }
  // The argmax over every measured column is both the exhaustive decision
  // and the best-so-far rule.
  const CodewordId best = runner.best_id();
  return runner.finish(best, codebook.col(best.index), limited);
}

}  // namespace

TrainingOutcome hierarchical_train(const ChannelRealization& channel, const Hierarchy& hierarchy,
                                   double noise_power, Rng& rng, SlotBudget budget) {
  if (hierarchy.layers.empty() || hierarchy.layers.front().entries.empty()) {
    throw DomainError("hierarchical_train: empty hierarchy");
  }
  check_channel(channel, hierarchy.config.num_antennas);
  SlotRunner runner(channel, noise_power, rng, budget);

  std::vector<int> candidates(hierarchy.layers.front().entries.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) candidates[k] = static_cast<int>(k);

  CodewordId winner;
  bool limited = false;
  for (int l = 0; l < hierarchy.num_layers() && !limited; ++l) {
    int best = -1;
    double best_mag = -1.0;
    for (int k : candidates) {
      if (runner.exhausted()) {
        limited = true;
        break;
      }
      const double mag = runner.measure(CodewordId{l, k}, hierarchy.entry(l, k).beam);
      if (mag > best_mag) {
        best = k;
        best_mag = mag;
      }
    }
    if (limited) break;
    winner = CodewordId{l, best};
    if (l + 1 < hierarchy.num_layers()) {
      candidates = hierarchy.entry(l, best).children;
      if (candidates.empty()) {
        throw DomainError("hierarchical_train: codeword (" + std::to_string(l) + ", " +
                          std::to_string(best) + ") has no children");
      }
    }
  }

  if (runner.budgeted()) {
    const CodewordId best = runner.best_id();
    return runner.finish(best, hierarchy.entry(best.layer, best.index).beam, limited);
  }
  return runner.finish(winner, hierarchy.entry(winner.layer, winner.index).beam, false);
}

TrainingOutcome far_hierarchical_train(const ChannelRealization& channel,
                                       const Hierarchy& far_hierarchy, double noise_power,
                                       Rng& rng, SlotBudget budget) {
  if (!far_hierarchy.angle_only()) {
    throw DomainError("far_hierarchical_train: hierarchy boxes must span the full distance range");
  }
  return hierarchical_train(channel, far_hierarchy, noise_power, rng, budget);
}

TrainingOutcome exhaustive_near_train(const ChannelRealization& channel, const PolarGrid& grid,
                                      double noise_power, Rng& rng, SlotBudget budget) {
  return flat_train(channel, grid.codebook(), noise_power, rng, budget);
}

CMatrix far_field_codebook(const ArrayConfig& cfg, int num_angles) {
  const auto angles = uniform_angles(num_angles);
  CMatrix out(cfg.num_antennas, num_angles);
  for (int u = 0; u < num_angles; ++u) out.col(u) = far_field_vector(cfg, angles[u]);
  return out;
}

TrainingOutcome exhaustive_far_train(const ChannelRealization& channel,
                                     const CMatrix& far_codebook, double noise_power, Rng& rng,
                                     SlotBudget budget) {
  return flat_train(channel, far_codebook, noise_power, rng, budget);
}

const CoverageBox& chosen_box(const Hierarchy& hierarchy, const TrainingOutcome& outcome) {
  return hierarchy.entry(outcome.chosen.layer, outcome.chosen.index).box;
}

namespace {

OverheadRow layered_row(const std::string& scheme, const std::string& symbol,
                        const std::vector<LayerCells>& plan) {
  const auto per_layer = searched_per_layer(plan);
  std::ostringstream formula;
  long long total = 0;
  formula << symbol << " =";
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    formula << (l ? " + " : " ") << per_layer[l];
    total += per_layer[l];
  }
  return OverheadRow{scheme, formula.str(), total, true};
}

}  // namespace

std::vector<OverheadRow> overhead_table(const OverheadPlans& plans) {
  if (plans.num_angles < 1 || plans.distances_per_angle < 1) {
    throw DomainError("overhead_table: U and S must be >= 1");
  }
  const long long u = plans.num_angles;
  const long long s = plans.distances_per_angle;
  std::vector<OverheadRow> rows;

  rows.push_back(layered_row("far_hierarchical", "sum_l U^(l)", plans.far_plan));
  rows.push_back({"far_exhaustive", "U", u, true});
  rows.push_back({"near_exhaustive", "U*S", u * s, true});
  rows.push_back({"time_delay", "S", s, false});
  rows.push_back(layered_row("proposed", "sum_l U^(l)S^(l)", plans.near_plan));
  return rows;
}

void write_overhead_csv(const std::vector<OverheadRow>& rows, std::ostream& out) {
  out << "scheme,formula,value,simulated\n";
  for (const auto& r : rows) {
    out << r.scheme << ",\"" << r.formula << "\"," << r.value << ',' << (r.simulated ? 1 : 0)
        << '\n';
  }
}

void write_episode_header(std::ostream& out) {
  out << "trial,scheme,layer,codeword,magnitude,chosen\n";
}

void write_episode_log(std::ostream& out, long long trial, const std::string& scheme,
                       const TrainingOutcome& outcome) {
  const auto old_precision = out.precision(17);
  for (const auto& slot : outcome.log) {
    out << trial << ',' << scheme << ',' << slot.id.layer << ',' << slot.id.index << ','
        << slot.magnitude << ',' << (slot.id == outcome.chosen ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace nfbt
