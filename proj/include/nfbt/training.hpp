#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nfbt/channel.hpp"
#include "nfbt/codebook.hpp"
#include "nfbt/polar_grid.hpp"

namespace nfbt {

/// Codeword identity. Flat codebooks (exhaustive search) use layer 0 and the
/// column index.
struct CodewordId {
  int layer = 0;
  int index = 0;
  bool operator==(const CodewordId&) const = default;
};

struct SlotRecord {
  CodewordId id;
  double magnitude = 0.0;  // |y|
};

struct TrainingOutcome {
  CodewordId chosen;
  long long measurements_used = 0;
  std::vector<SlotRecord> log;  // one record per training slot
  CVector beam;                 // codeword served after training
  bool budget_limited = false;  // stopped before the protocol finished
};

/// Without a budget the protocol runs to completion and returns its own
/// decision. With a budget it stops after that many slots (or at the end of
/// the protocol) and serves the measured codeword with the largest |y|.
using SlotBudget = std::optional<long long>;

/// Layer-by-layer search: measure every candidate of the current working
/// set, keep the largest |y|, continue with the winner's children.
TrainingOutcome hierarchical_train(const ChannelRealization& channel, const Hierarchy& hierarchy,
                                   double noise_power, Rng& rng, SlotBudget budget = std::nullopt);

/// Same search on a hierarchy whose boxes span the full distance range.
TrainingOutcome far_hierarchical_train(const ChannelRealization& channel,
                                       const Hierarchy& far_hierarchy, double noise_power,
                                       Rng& rng, SlotBudget budget = std::nullopt);

/// Measures every column of the polar-domain codebook in column order.
TrainingOutcome exhaustive_near_train(const ChannelRealization& channel, const PolarGrid& grid,
                                      double noise_power, Rng& rng,
                                      SlotBudget budget = std::nullopt);

/// U far-field steering vectors on the uniform angle grid.
CMatrix far_field_codebook(const ArrayConfig& cfg, int num_angles);

/// Measures every column of a far-field codebook in angle order.
TrainingOutcome exhaustive_far_train(const ChannelRealization& channel,
                                     const CMatrix& far_codebook, double noise_power, Rng& rng,
                                     SlotBudget budget = std::nullopt);

/// Layer box of a hierarchical outcome.
const CoverageBox& chosen_box(const Hierarchy& hierarchy, const TrainingOutcome& outcome);

// ---- overhead accounting ----

struct OverheadPlans {
  int num_angles = 512;           // U
  int distances_per_angle = 16;   // S
  std::vector<LayerCells> near_plan;
  std::vector<LayerCells> far_plan;
};

struct OverheadRow {
  std::string scheme;
  std::string formula;
  long long value = 0;
  bool simulated = true;
};

/// Training slots of the five schemes: far-field hierarchical, far-field
/// exhaustive, near-field exhaustive, time-delay (formula only) and the
/// proposed near-field hierarchical search.
std::vector<OverheadRow> overhead_table(const OverheadPlans& plans);

void write_overhead_csv(const std::vector<OverheadRow>& rows, std::ostream& out);

// ---- episode logs ----

void write_episode_header(std::ostream& out);
void write_episode_log(std::ostream& out, long long trial, const std::string& scheme,
                       const TrainingOutcome& outcome);

}  // namespace nfbt
