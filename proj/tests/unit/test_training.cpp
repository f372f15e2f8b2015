#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nfbt/training.hpp"

using namespace nfbt;

namespace {

GsConfig quick_gs() {
  GsConfig gs;
  gs.max_iters = 20;
  return gs;
}

struct Toy {
  PolarGrid grid;
  Hierarchy hierarchy;
};

// N = 32 array, 32 x 4 grid, three layers refining 8x1 -> 16x2 -> 32x4.
const Toy& toy() {
  static const Toy t = [] {
    PolarGrid g = build_polar_grid(ArrayConfig::half_wavelength(32, 0.005, 8, 4), 32,
                                   DistanceSampling{0.1, 2.0, 4});
    const std::vector<LayerCells> plan{{8, 1}, {16, 2}, {32, 4}};
    const auto specs = layer_specs(Domain::of(g), plan);
    Hierarchy h = build_hierarchy(g, specs, quick_gs(), AltOptConfig{}, 11);
    return Toy{std::move(g), std::move(h)};
  }();
  return t;
}

// Boxes of `plan` over `domain` with random unit beams on a small array and
// parents assigned by containment.
Hierarchy synthetic_hierarchy(const Domain& domain, const std::vector<LayerCells>& plan, int n,
                              Rng& rng) {
  Hierarchy h;
  h.config = ArrayConfig::half_wavelength(n, 0.005, 1, 1);
  h.grid = GridSpec{plan.back().angle_cells, plan.back().distance_cells, domain.dist_lo, domain.dist_hi};
  const auto specs = layer_specs(domain, plan);
  const auto boxes = plan_layers(domain, specs);
  h.layers.resize(boxes.size());
  for (std::size_t l = 0; l < boxes.size(); ++l) {
    h.layers[l].spec = specs[l];
    for (const auto& box : boxes[l]) {
      CodebookEntry e;
      e.box = box;
      e.beam = CVector(n);
      for (int i = 0; i < n; ++i) e.beam(i) = rng.complex_normal();
      e.beam.normalize();
      h.layers[l].entries.push_back(std::move(e));
    }
    if (l == 0) continue;
    auto& parents = h.layers[l - 1].entries;
    for (int c = 0; c < static_cast<int>(h.layers[l].entries.size()); ++c) {
      auto& child = h.layers[l].entries[c];
      for (int p = 0; p < static_cast<int>(parents.size()); ++p) {
        if (parents[p].box.contains(child.box)) {
          child.parent = p;
          parents[p].children.push_back(c);
          break;
        }
      }
    }
  }
  return h;
}

ChannelRealization on_grid(const PolarGrid& g, int col) {
  return make_channel(g.config(), Complex(1.0, 0.0), g.angle_of(col), g.distance_of(col));
}

int argmax_magnitude(const TrainingOutcome& o) {
  int best = 0;
  for (std::size_t i = 1; i < o.log.size(); ++i) {
    if (o.log[i].magnitude > o.log[best].magnitude) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

TEST_CASE("noiseless hierarchical search finds the box of an on-grid user") {
  const Toy& t = toy();
  const Hierarchy& h = t.hierarchy;
  Rng rng(1);
  int checked = 0, skipped = 0;
  std::ostringstream violations;
  for (int col = 0; col < t.grid.num_columns(); ++col) {
    const ChannelRealization ch = on_grid(t.grid, col);
    const double theta = t.grid.angle_of(col);
    const double r = t.grid.distance_of(col);
    // Precondition: at every layer the box holding the user has the largest
    // gain among the candidates by a 5% margin.
    bool margin = true;
    std::vector<int> candidates(h.layers[0].entries.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) candidates[k] = static_cast<int>(k);
    int truth = -1;
    for (int l = 0; l < h.num_layers(); ++l) {
      truth = -1;
      double own = 0.0, other = 0.0;
      for (int k : candidates) {
        const double g = std::abs(ch.vector.dot(h.entry(l, k).beam));
        if (h.entry(l, k).box.contains(theta, r)) {
          truth = k;
          own = g;
        } else {
          other = std::max(other, g);
        }
      }
      REQUIRE(truth >= 0);
      if (own < 1.05 * other) margin = false;
      candidates = h.entry(l, truth).children;
    }
    const TrainingOutcome o = hierarchical_train(ch, h, 0.0, rng);
    CHECK(o.measurements_used == h.overhead());
    CHECK(o.chosen.layer == h.num_layers() - 1);
    if (!margin) {
      ++skipped;
      violations << ' ' << col;
      continue;
    }
    ++checked;
    CHECK(o.chosen.index == truth);
    CHECK(chosen_box(h, o).contains(theta, r));
  }
  MESSAGE(checked << " users checked, " << skipped << " without margin:" << violations.str());
  CHECK(checked > t.grid.num_columns() / 2);
}

TEST_CASE("single-layer hierarchy equals exhaustive search") {
  const Toy& t = toy();
  Hierarchy flat;
  flat.config = t.grid.config();
  flat.grid = GridSpec::of(t.grid);
  flat.layers.resize(1);
  for (int c = 0; c < t.grid.num_columns(); ++c) {
    CodebookEntry e;
    e.beam = t.grid.codebook().col(c);
    flat.layers[0].entries.push_back(e);
  }
  Rng chan(3);
  for (int trial = 0; trial < 20; ++trial) {
    ChannelDistribution dist;
    dist.distance_lo = 0.1;
    dist.distance_hi = 2.0;
    const ChannelRealization ch = make_channel(t.grid.config(), dist, chan);
    Rng a(100 + trial), b(100 + trial);
    const TrainingOutcome ho = hierarchical_train(ch, flat, 2.0, a);
    const TrainingOutcome eo = exhaustive_near_train(ch, t.grid, 2.0, b);
    CHECK(ho.chosen == eo.chosen);
    CHECK(ho.measurements_used == eo.measurements_used);
    CHECK((ho.beam - eo.beam).norm() == 0.0);
    REQUIRE(ho.log.size() == eo.log.size());
    for (std::size_t i = 0; i < ho.log.size(); ++i) CHECK(ho.log[i].magnitude == eo.log[i].magnitude);
  }
}

TEST_CASE("training slots of the layered plans") {
  Rng rng(4);
  const Domain domain{-1.0, 1.0, 20.0, 100.0};
  const Hierarchy near = synthetic_hierarchy(domain, {{64, 4}, {256, 8}, {512, 16}}, 4, rng);
  const Hierarchy far = synthetic_hierarchy(domain, {{4, 1}, {16, 1}, {512, 1}}, 4, rng);
  CHECK(near.overhead() == 268);
  CHECK(far.overhead() == 40);
  CHECK(far.angle_only());
  CHECK_FALSE(near.angle_only());
  for (int trial = 0; trial < 10; ++trial) {
    ChannelRealization ch;
    ch.vector = CVector(4);
    for (int i = 0; i < 4; ++i) ch.vector(i) = rng.complex_normal();
    CHECK(hierarchical_train(ch, near, 0.5, rng).measurements_used == 268);
    CHECK(far_hierarchical_train(ch, far, 0.5, rng).measurements_used == 40);
  }
  ChannelRealization ch;
  ch.vector = CVector::Ones(4);
  CHECK_THROWS_AS(far_hierarchical_train(ch, near, 0.0, rng), DomainError);
}

TEST_CASE("exhaustive near-field search") {
  const Toy& t = toy();
  Rng rng(5);
  for (int col : {0, 17, 64, 127}) {
    const TrainingOutcome o = exhaustive_near_train(on_grid(t.grid, col), t.grid, 0.0, rng);
    CHECK(o.chosen == CodewordId{0, col});
    CHECK(o.measurements_used == t.grid.num_columns());
    CHECK((o.beam - t.grid.codebook().col(col)).norm() == 0.0);
  }
  const PolarGrid big = build_polar_grid(ArrayConfig::half_wavelength(4, 0.005, 1, 1), 512,
                                         DistanceSampling{20.0, 100.0, 16});
  const TrainingOutcome o = exhaustive_near_train(on_grid(big, 5000), big, 1.0, rng);
  CHECK(o.measurements_used == 8192);
  CHECK(o.log.size() == 8192);
}

TEST_CASE("exhaustive choice is uniform when noise dominates") {
  const PolarGrid g = build_polar_grid(ArrayConfig::half_wavelength(8, 0.005, 1, 1), 8,
                                       DistanceSampling{0.5, 2.0, 2});
  Rng rng(6);
  std::vector<int> counts(16, 0);
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const ChannelRealization ch = on_grid(g, rng.uniform_int(0, 15));
    ++counts[exhaustive_near_train(ch, g, 1e10, rng).chosen.index];
  }
  double chi2 = 0.0;
  const double expected = trials / 16.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 15 degrees of freedom, 0.1% upper tail.
  CHECK(chi2 < 37.70);
}

TEST_CASE("exhaustive far-field search") {
  const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 0.005, 1, 1);
  const CMatrix cb = far_field_codebook(cfg, 512);
  REQUIRE(cb.cols() == 512);
  for (int u = 0; u < 512; u += 97) {
    CHECK((cb.col(u) - far_field_vector(cfg, -1.0 + (2.0 * u + 1.0) / 512)).norm() < 1e-15);
  }
  Rng rng(7);
  for (double theta : {-0.93, -0.2, 0.001, 0.61}) {
    const ChannelRealization ch = make_channel(cfg, Complex(1.0, 0.0), theta, 1e7);
    const TrainingOutcome o = exhaustive_far_train(ch, cb, 0.0, rng);
    CHECK(o.measurements_used == 512);
    const auto angles = uniform_angles(512);
    int nearest = 0;
    for (int u = 1; u < 512; ++u) {
      if (std::abs(angles[u] - theta) < std::abs(angles[nearest] - theta)) nearest = u;
    }
    CHECK(o.chosen.index == nearest);
  }
  // One antenna: every codeword sees the same |y|, the first one is kept.
  const ArrayConfig one = ArrayConfig::half_wavelength(1, 0.005, 1, 1);
  const TrainingOutcome o1 = exhaustive_far_train(make_channel(one, Complex(0.3, 0.2), 0.5, 3.0),
                                                  far_field_codebook(one, 16), 0.0, rng);
  CHECK(o1.chosen.index == 0);
  CHECK(o1.measurements_used == 16);
}

TEST_CASE("overhead table") {
  OverheadPlans plans;
  plans.near_plan = {{64, 4}, {256, 8}, {512, 16}};
  plans.far_plan = {{4, 1}, {16, 1}, {512, 1}};
  const auto rows = overhead_table(plans);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].scheme == "far_hierarchical");
  CHECK(rows[0].value == 40);
  CHECK(rows[1].value == 512);
  CHECK(rows[2].value == 8192);
  CHECK(rows[3].value == 16);
  CHECK_FALSE(rows[3].simulated);
  CHECK(rows[4].scheme == "proposed");
  CHECK(rows[4].value == 268);
  CHECK(rows[4].formula == "sum_l U^(l)S^(l) = 256 + 8 + 4");

  OverheadPlans unit{1, 1, {{1, 1}}, {{1, 1}}};
  for (const auto& r : overhead_table(unit)) CHECK(r.value == 1);

  // Halving plans grow with log2(U).
  for (int k = 1; k <= 10; ++k) {
    OverheadPlans p{1 << k, 1, {}, {}};
    for (int l = 1; l <= k; ++l) p.far_plan.push_back({1 << l, 1});
    p.near_plan = p.far_plan;
    CHECK(overhead_table(p)[0].value == 2 * k);
  }
  CHECK_THROWS_AS(overhead_table(OverheadPlans{0, 1, {{1, 1}}, {{1, 1}}}), DomainError);

  std::ostringstream csv;
  write_overhead_csv(rows, csv);
  CHECK(csv.str().rfind("scheme,formula,value,simulated\nfar_hierarchical,", 0) == 0);
}

TEST_CASE("accuracy does not drop as the SNR grows") {
  const Toy& t = toy();
  const std::vector<double> snr_db{-30.0, -20.0, -10.0, 0.0, 10.0};
  const int trials = 500;
  std::vector<double> accuracy;
  for (double snr : snr_db) {
    const double noise = std::pow(10.0, -snr / 10.0);
    Rng rng(8);
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
      const int col = rng.uniform_int(0, t.grid.num_columns() - 1);
      const TrainingOutcome o = hierarchical_train(on_grid(t.grid, col), t.hierarchy, noise, rng);
      if (chosen_box(t.hierarchy, o).contains(t.grid.angle_of(col), t.grid.distance_of(col))) ++hits;
    }
    accuracy.push_back(double(hits) / trials);
  }
  for (std::size_t i = 1; i < accuracy.size(); ++i) {
    const double p = 0.5 * (accuracy[i] + accuracy[i - 1]);
    const double se = std::sqrt(2.0 * p * (1.0 - p) / trials);
    CHECK(accuracy[i] >= accuracy[i - 1] - 3.0 * se);
  }
  CHECK(accuracy.back() > accuracy.front());
}

TEST_CASE("training is deterministic for a fixed stream") {
  const Toy& t = toy();
  const ChannelRealization ch = on_grid(t.grid, 40);
  Rng a(9), b(9);
  const TrainingOutcome oa = hierarchical_train(ch, t.hierarchy, 0.3, a);
  const TrainingOutcome ob = hierarchical_train(ch, t.hierarchy, 0.3, b);
  CHECK(oa.chosen == ob.chosen);
  REQUIRE(oa.log.size() == ob.log.size());
  for (std::size_t i = 0; i < oa.log.size(); ++i) {
    CHECK(oa.log[i].id == ob.log[i].id);
    CHECK(oa.log[i].magnitude == ob.log[i].magnitude);
  }
}

TEST_CASE("budgeted training") {
  const Toy& t = toy();
  const Hierarchy& h = t.hierarchy;
  const ChannelRealization ch = on_grid(t.grid, 77);
  SUBCASE("stops early and serves the strongest slot") {
    for (long long b : {1LL, 3LL, 9LL, 12LL}) {
      Rng rng(10);
      const TrainingOutcome o = hierarchical_train(ch, h, 0.5, rng, b);
      CHECK(o.measurements_used == b);
      CHECK(o.budget_limited);
      const SlotRecord& best = o.log[argmax_magnitude(o)];
      CHECK(o.chosen == best.id);
      CHECK((o.beam - h.entry(best.id.layer, best.id.index).beam).norm() == 0.0);
    }
  }
  SUBCASE("a budget beyond the protocol length is not used up") {
    Rng rng(10);
    const TrainingOutcome o = hierarchical_train(ch, h, 0.5, rng, 1000);
    CHECK(o.measurements_used == h.overhead());
    CHECK_FALSE(o.budget_limited);
    CHECK(o.chosen == o.log[argmax_magnitude(o)].id);
  }
  SUBCASE("exhaustive search under a budget") {
    Rng rng(10);
    const TrainingOutcome o = exhaustive_near_train(ch, t.grid, 0.5, rng, 20);
    CHECK(o.measurements_used == 20);
    CHECK(o.budget_limited);
    CHECK(o.chosen.index < 20);
    CHECK(o.chosen == o.log[argmax_magnitude(o)].id);
  }
  SUBCASE("invalid budgets and noise") {
    Rng rng(10);
    CHECK_THROWS_AS(hierarchical_train(ch, h, 0.5, rng, 0), DomainError);
    CHECK_THROWS_AS(hierarchical_train(ch, h, -1.0, rng), DomainError);
    ChannelRealization wrong;
    wrong.vector = CVector::Ones(5);
    CHECK_THROWS_AS(hierarchical_train(wrong, h, 0.0, rng), DimensionError);
  }
}

TEST_CASE("episode log") {
  const Toy& t = toy();
  Rng rng(12);
  const TrainingOutcome o = hierarchical_train(on_grid(t.grid, 3), t.hierarchy, 0.0, rng);
  std::ostringstream out;
  write_episode_header(out);
  write_episode_log(out, 7, "proposed", o);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "trial,scheme,layer,codeword,magnitude,chosen");
  int rows = 0, chosen = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("7,proposed,", 0) == 0);
    if (line.back() == '1') ++chosen;
  }
  CHECK(rows == o.measurements_used);
  CHECK(chosen == 1);
}
