#include "nfbt/codebook.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "binary_io.hpp"

namespace nfbt {

namespace {

constexpr char kHierarchyTag[9] = "NFBTHIER";
constexpr std::uint32_t kHierarchyVersion = 1;

int cell_count(double extent, double step) {
  return std::max(1, static_cast<int>(std::ceil(extent / step - 1e-9)));
}

// Cell boundaries lo, lo + step, ..., hi; the last cell absorbs the remainder.
std::vector<double> boundaries(double lo, double hi, double step) {
  const int n = cell_count(hi - lo, step);
  std::vector<double> b(n + 1);
  for (int i = 0; i < n; ++i) b[i] = lo + i * step;
  b[n] = hi;
  return b;
}

}  // namespace

Domain Domain::of(const PolarGrid& grid) {
  return Domain{-1.0, 1.0, grid.min_distance(), grid.max_distance()};
}

std::vector<LayerSpec> layer_specs(const Domain& domain, std::span<const LayerCells> plan) {
  std::vector<LayerSpec> specs;
  const double inv_extent = 1.0 / domain.dist_lo - 1.0 / domain.dist_hi;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    if (plan[l].angle_cells < 1 || plan[l].distance_cells < 1) {
      throw DomainError("layer_specs: cell counts must be positive");
    }
    specs.push_back(LayerSpec{(domain.angle_hi - domain.angle_lo) / plan[l].angle_cells,
                              inv_extent / plan[l].distance_cells, static_cast<int>(l)});
  }
  return specs;
}

std::vector<long long> searched_per_layer(std::span<const LayerCells> plan) {
  std::vector<long long> out;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    if (plan[l].angle_cells < 1 || plan[l].distance_cells < 1) {
      throw DomainError("searched_per_layer: cell counts must be positive");
    }
    if (l == 0) {
      out.push_back(static_cast<long long>(plan[0].angle_cells) * plan[0].distance_cells);
      continue;
    }
    const LayerCells& up = plan[l - 1];
    const LayerCells& cur = plan[l];
    if (cur.angle_cells % up.angle_cells != 0 || cur.distance_cells % up.distance_cells != 0) {
      throw DomainError("searched_per_layer: each layer must subdivide the previous one");
    }
    out.push_back(static_cast<long long>(cur.angle_cells / up.angle_cells) *
                  (cur.distance_cells / up.distance_cells));
  }
  return out;
}

long long plan_overhead(std::span<const LayerCells> plan) {
  long long total = 0;
  for (long long n : searched_per_layer(plan)) total += n;
  return total;
}

std::vector<std::vector<CoverageBox>> plan_layers(const Domain& domain,
                                                  std::span<const LayerSpec> specs) {
  if (specs.empty()) throw DomainError("plan_layers: at least one layer is required");
  if (!(domain.angle_lo < domain.angle_hi) || !(domain.dist_lo > 0.0) ||
      !(domain.dist_lo < domain.dist_hi)) {
    throw DomainError("plan_layers: invalid domain");
  }
  const double rel = 1e-12;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    if (!(specs[l].angle_step > 0.0) || !(specs[l].distance_step > 0.0)) {
      throw DomainError("plan_layers: steps must be positive");
    }
    if (l == 0) continue;
    const LayerSpec& up = specs[l - 1];
    const LayerSpec& cur = specs[l];
    const bool angle_grows = cur.angle_step > up.angle_step * (1.0 + rel);
    const bool dist_grows = cur.distance_step > up.distance_step * (1.0 + rel);
    const bool angle_shrinks = cur.angle_step < up.angle_step * (1.0 - rel);
    const bool dist_shrinks = cur.distance_step < up.distance_step * (1.0 - rel);
    if (angle_grows || dist_grows || !(angle_shrinks || dist_shrinks)) {
      throw DomainError("plan_layers: layer " + std::to_string(l) +
                        " must refine layer " + std::to_string(l - 1));
    }
  }

  const double inv_lo = 1.0 / domain.dist_hi;
  const double inv_hi = 1.0 / domain.dist_lo;
  std::vector<std::vector<CoverageBox>> layers;
  for (const LayerSpec& spec : specs) {
    const auto a = boundaries(domain.angle_lo, domain.angle_hi, spec.angle_step);
    const auto u = boundaries(inv_lo, inv_hi, spec.distance_step);
    // Range boundaries ascending: r = 1/u read from the far end.
    std::vector<double> r(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) r[j] = 1.0 / u[u.size() - 1 - j];
    r.front() = domain.dist_lo;
    r.back() = domain.dist_hi;

    const int n_a = static_cast<int>(a.size()) - 1;
    const int n_d = static_cast<int>(r.size()) - 1;
    std::vector<CoverageBox> boxes;
    boxes.reserve(static_cast<std::size_t>(n_a) * n_d);
    for (int i = 0; i < n_a; ++i) {
      for (int q = 0; q < n_d; ++q) {
        CoverageBox box;
        box.angle_lo = a[i];
        box.angle_hi = a[i + 1];
        box.dist_lo = r[q];
        box.dist_hi = r[q + 1];
        box.angle_hi_closed = (i == n_a - 1);
        box.dist_hi_closed = (q == n_d - 1);
        boxes.push_back(box);
      }
    }
    layers.push_back(std::move(boxes));
  }
  return layers;
}

GridSpec GridSpec::of(const PolarGrid& grid) {
  GridSpec spec;
  spec.num_angles = grid.num_angles();
  spec.distances_per_angle = grid.distances_at(0);
  for (int n = 1; n < grid.num_angles(); ++n) {
    if (grid.distances_at(n) != spec.distances_per_angle) {
      throw DomainError("GridSpec: grids with varying distances per angle are not supported");
    }
  }
  spec.min_distance = grid.min_distance();
  spec.max_distance = grid.max_distance();
  return spec;
}

PolarGrid GridSpec::build(const ArrayConfig& cfg) const {
  return build_polar_grid(cfg, num_angles,
                          DistanceSampling{min_distance, max_distance, distances_per_angle});
}

long long Hierarchy::overhead() const {
  if (layers.empty()) return 0;
  long long total = static_cast<long long>(layers.front().entries.size());
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    std::size_t widest = 0;
    for (const auto& e : layers[l].entries) widest = std::max(widest, e.children.size());
    total += static_cast<long long>(widest);
  }
  return total;
}

bool Hierarchy::angle_only() const {
  const double tol = 1e-9 * grid.max_distance;
  for (const auto& layer : layers) {
    for (const auto& e : layer.entries) {
      if (std::abs(e.box.dist_lo - grid.min_distance) > tol ||
          std::abs(e.box.dist_hi - grid.max_distance) > tol) {
        return false;
      }
    }
  }
  return true;
}

DesignError::DesignError(int layer, int index, const std::string& what)
    : std::runtime_error("codeword (layer " + std::to_string(layer) + ", index " +
                         std::to_string(index) + "): " + what),
      layer_(layer),
      index_(index) {}

void parallel_for(int count, int num_threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int workers = num_threads > 0 ? num_threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Hierarchy build_hierarchy(const PolarGrid& grid, std::span<const LayerSpec> specs,
                          const GsConfig& gs, const AltOptConfig& alt, std::uint64_t seed,
                          int num_threads, const BuildProgress& progress) {
  gs.validate();
  alt.validate();
  const auto plan = plan_layers(Domain::of(grid), specs);
  const PatternSolver solver(grid, gs.regularization);
  const PhaseSet phases(grid.config().phase_bits);
  const Rng master(seed);

  Hierarchy h;
  h.config = grid.config();
  h.grid = GridSpec::of(grid);
  h.gs = gs;
  h.alt = alt;
  h.seed = seed;
  h.layers.resize(plan.size());

  for (std::size_t l = 0; l < plan.size(); ++l) {
    CodebookLayer& layer = h.layers[l];
    layer.spec = specs[l];
    layer.entries.resize(plan[l].size());
    const Rng layer_rng = master.split(l);
    std::atomic<int> done{0};
    std::mutex progress_mutex;
    parallel_for(static_cast<int>(plan[l].size()), num_threads, [&](int k) {
      CodebookEntry& e = layer.entries[k];
      e.box = plan[l][k];
      try {
        const Rng box_rng = layer_rng.split(static_cast<std::uint64_t>(k));
        Rng gs_rng = box_rng.split(0);
        Rng alt_rng = box_rng.split(1);
        const IdealPattern pattern = ideal_amplitudes(grid, e.box);
        e.theoretical = design_theoretical_codeword(pattern, solver, gs, gs_rng).codeword;
        e.practical = design_hybrid_codeword(e.theoretical, grid.config().num_rf_chains, phases,
                                             alt, alt_rng)
                          .codeword;
        e.beam = e.practical.vector();
      } catch (const std::exception& ex) {
        throw DesignError(static_cast<int>(l), k, ex.what());
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(static_cast<int>(l), ++done, static_cast<int>(plan[l].size()));
      }
    });
  }

  for (std::size_t l = 1; l < h.layers.size(); ++l) {
    auto& parents = h.layers[l - 1].entries;
    auto& children = h.layers[l].entries;
    for (int c = 0; c < static_cast<int>(children.size()); ++c) {
      const CoverageBox& box = children[c].box;
      const double angle = box.center_angle();
      const double dist = box.center_distance();
      for (int p = 0; p < static_cast<int>(parents.size()); ++p) {
        if (parents[p].box.contains(angle, dist)) {
          children[c].parent = p;
          parents[p].children.push_back(c);
          break;
        }
      }
      if (children[c].parent < 0) {
        throw DesignError(static_cast<int>(l), c, "no parent box contains the box center");
      }
    }
  }
  return h;
}

namespace {

void put_box(std::ostream& out, const CoverageBox& b) {
  io::put<double>(out, b.angle_lo);
  io::put<double>(out, b.angle_hi);
  io::put<double>(out, b.dist_lo);
  io::put<double>(out, b.dist_hi);
  io::put<std::uint8_t>(out, b.angle_hi_closed ? 1 : 0);
  io::put<std::uint8_t>(out, b.dist_hi_closed ? 1 : 0);
}

CoverageBox get_box(std::istream& in) {
  CoverageBox b;
  b.angle_lo = io::get<double>(in);
  b.angle_hi = io::get<double>(in);
  b.dist_lo = io::get<double>(in);
  b.dist_hi = io::get<double>(in);
  b.angle_hi_closed = io::get<std::uint8_t>(in) != 0;
  b.dist_hi_closed = io::get<std::uint8_t>(in) != 0;
  return b;
}

}  // namespace

void write_hierarchy(const Hierarchy& h, std::ostream& out) {
  io::put_tag(out, kHierarchyTag);
  io::put<std::uint32_t>(out, kHierarchyVersion);
  io::put<std::int32_t>(out, h.config.num_antennas);
  io::put<double>(out, h.config.antenna_spacing);
  io::put<double>(out, h.config.wavelength);
  io::put<std::int32_t>(out, h.config.num_rf_chains);
  io::put<std::int32_t>(out, h.config.phase_bits);
  io::put<std::int32_t>(out, h.grid.num_angles);
  io::put<std::int32_t>(out, h.grid.distances_per_angle);
  io::put<double>(out, h.grid.min_distance);
  io::put<double>(out, h.grid.max_distance);
  io::put<std::int32_t>(out, h.gs.max_iters);
  io::put<double>(out, h.gs.regularization.value_or(std::numeric_limits<double>::quiet_NaN()));
  io::put<double>(out, h.gs.early_stop_tol);
  io::put<std::int32_t>(out, h.alt.outer_iters);
  io::put<std::int32_t>(out, h.alt.inner_iters);
  io::put<std::uint64_t>(out, h.seed);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(h.layers.size()));
  for (const auto& layer : h.layers) {
    io::put<double>(out, layer.spec.angle_step);
    io::put<double>(out, layer.spec.distance_step);
    io::put<std::int32_t>(out, layer.spec.layer_index);
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.entries.size()));
    for (const auto& e : layer.entries) {
      put_box(out, e.box);
      io::put<std::int32_t>(out, e.parent);
      io::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.children.size()));
      for (int c : e.children) io::put<std::int32_t>(out, c);
      io::put_cvector(out, e.theoretical);
      const HybridCodeword& p = e.practical;
      io::put<std::int32_t>(out, p.num_antennas());
      io::put<std::int32_t>(out, p.num_rf_chains());
      io::put<std::int32_t>(out, p.bits());
      out.write(reinterpret_cast<const char*>(p.phase_indices().data()),
                static_cast<std::streamsize>(p.phase_indices().size() * sizeof(std::uint16_t)));
      io::put_cvector(out, p.digital());
    }
  }
  if (!out) throw FormatError("write_hierarchy: stream error");
}

Hierarchy read_hierarchy(std::istream& in) {
  io::expect_tag(in, kHierarchyTag);
  const auto version = io::get<std::uint32_t>(in);
  if (version != kHierarchyVersion) {
    throw FormatError("read_hierarchy: unsupported version " + std::to_string(version));
  }
  Hierarchy h;
  h.config.num_antennas = io::get<std::int32_t>(in);
  h.config.antenna_spacing = io::get<double>(in);
  h.config.wavelength = io::get<double>(in);
  h.config.num_rf_chains = io::get<std::int32_t>(in);
  h.config.phase_bits = io::get<std::int32_t>(in);
  h.config.validate();
  h.grid.num_angles = io::get<std::int32_t>(in);
  h.grid.distances_per_angle = io::get<std::int32_t>(in);
  h.grid.min_distance = io::get<double>(in);
  h.grid.max_distance = io::get<double>(in);
  h.gs.max_iters = io::get<std::int32_t>(in);
  const double reg = io::get<double>(in);
  if (!std::isnan(reg)) h.gs.regularization = reg;
  h.gs.early_stop_tol = io::get<double>(in);
  h.alt.outer_iters = io::get<std::int32_t>(in);
  h.alt.inner_iters = io::get<std::int32_t>(in);
  h.seed = io::get<std::uint64_t>(in);
  const auto n_layers = io::get<std::uint32_t>(in);
  if (n_layers > 64) throw FormatError("read_hierarchy: implausible layer count");
  const auto n_ant = static_cast<std::uint64_t>(h.config.num_antennas);
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    CodebookLayer layer;
    layer.spec.angle_step = io::get<double>(in);
    layer.spec.distance_step = io::get<double>(in);
    layer.spec.layer_index = io::get<std::int32_t>(in);
    const auto n_entries = io::get<std::uint32_t>(in);
    layer.entries.resize(n_entries);
    for (auto& e : layer.entries) {
      e.box = get_box(in);
      e.parent = io::get<std::int32_t>(in);
      const auto n_children = io::get<std::uint32_t>(in);
      if (n_children > (1u << 24)) throw FormatError("read_hierarchy: implausible child count");
      e.children.resize(n_children);
      for (auto& c : e.children) c = io::get<std::int32_t>(in);
      e.theoretical = io::get_cvector(in, n_ant);
      const int n = io::get<std::int32_t>(in);
      const int n_rf = io::get<std::int32_t>(in);
      const int bits = io::get<std::int32_t>(in);
      if (n != h.config.num_antennas || n_rf < 1 || n_rf > n) {
        throw FormatError("read_hierarchy: codeword shape does not match the header");
      }
      std::vector<std::uint16_t> idx(static_cast<std::size_t>(n) * n_rf);
      in.read(reinterpret_cast<char*>(idx.data()),
              static_cast<std::streamsize>(idx.size() * sizeof(std::uint16_t)));
      if (!in) throw FormatError("read_hierarchy: truncated phase indices");
      CVector digital = io::get_cvector(in, static_cast<std::uint64_t>(n_rf));
      e.practical = HybridCodeword(n, n_rf, bits, std::move(idx), std::move(digital));
      e.beam = e.practical.vector();
    }
    h.layers.push_back(std::move(layer));
  }
  return h;
}

void save_hierarchy(const Hierarchy& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_hierarchy(h, out);
}

Hierarchy load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_hierarchy(in);
}

}  // namespace nfbt
