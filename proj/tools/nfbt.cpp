// nfbt: codebook design, beam training and rate sweeps from the command line.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nfbt/codebook.hpp"
#include "nfbt/experiments.hpp"
#include "nfbt/gs_design.hpp"
#include "nfbt/pattern.hpp"
#include "nfbt/training.hpp"

namespace fs = std::filesystem;
using namespace nfbt;

namespace {

struct Common {
  std::string config_path;
  std::string profile = "desk";
  std::string cache_dir = ".nfbt-cache";
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  bool no_cache = false;
};

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    cfg = load_config(c.config_path);
  } else if (c.profile == "paper") {
    cfg = paper_profile();
  } else if (c.profile == "desk") {
    cfg = desk_profile();
  } else {
    throw DomainError("unknown profile '" + c.profile + "'");
  }
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.trials) cfg.num_trials = *c.trials;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

std::optional<fs::path> cache_of(const Common& c) {
  if (c.no_cache) return std::nullopt;
  return fs::path(c.cache_dir);
}

void log_line(const std::string& msg) { std::cerr << "[nfbt] " << msg << '\n'; }

fs::path output_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir) / name;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field codebook design and hierarchical beam training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  app.add_option("--config", common.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--profile", common.profile, "Built-in profile when no config is given")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--cache-dir", common.cache_dir, "Hierarchy cache directory");
  app.add_flag("--no-cache", common.no_cache, "Always rebuild hierarchies");
  app.add_option("--out-dir", common.out_dir, "Directory for outputs");
  app.add_option("--seed", common.seed, "Override the master seed");
  app.add_option("--trials", common.trials, "Override the number of trials")->check(CLI::PositiveNumber);
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  app.fallthrough();

  // design
  auto* design = app.add_subcommand("design", "Build and cache the near- and far-field hierarchies");
  std::string design_out;
  design->add_option("--output", design_out, "Also write the near-field hierarchy to this file");

  // pattern
  auto* pattern = app.add_subcommand("pattern", "Beam-pattern heatmap of one codeword");
  int pat_layer = 1;
  int pat_index = 0;
  bool pat_theoretical = false;
  bool pat_far = false;
  std::string pat_out = "pattern.csv";
  RasterSpec raster;
  std::optional<double> x_max, y_half;
  pattern->add_option("--layer", pat_layer, "Layer (1-based)")->check(CLI::PositiveNumber);
  pattern->add_option("--index", pat_index, "Codeword index within the layer")->check(CLI::NonNegativeNumber);
  pattern->add_flag("--theoretical", pat_theoretical, "Use the fully digital codeword");
  pattern->add_flag("--far", pat_far, "Take the codeword from the far-field hierarchy");
  pattern->add_option("--output", pat_out, "CSV file name (a .json sidecar is written beside it)");
  pattern->add_option("--nx", raster.nx, "Raster columns")->check(CLI::Range(2, 100000));
  pattern->add_option("--ny", raster.ny, "Raster rows")->check(CLI::Range(2, 100000));
  pattern->add_option("--x-max", x_max, "Raster extent along boresight [m]");
  pattern->add_option("--y-half", y_half, "Raster half-extent along the array [m]");

  // train
  auto* train = app.add_subcommand("train", "Run one training episode and print the slot log");
  std::string train_scheme = "proposed";
  std::optional<double> tr_angle, tr_distance;
  long long tr_trial = 0;
  double tr_snr = 5.0;
  std::optional<long long> tr_budget;
  std::string tr_log;
  train->add_option("--scheme", train_scheme, "proposed|near_exhaustive|far_exhaustive|far_hierarchical");
  train->add_option("--angle", tr_angle, "User direction cosine (default: drawn)");
  train->add_option("--distance", tr_distance, "User range [m] (default: drawn)");
  train->add_option("--trial", tr_trial, "Trial index used for drawn channels and noise");
  train->add_option("--snr", tr_snr, "SNR [dB]");
  train->add_option("--budget", tr_budget, "Slot budget")->check(CLI::PositiveNumber);
  train->add_option("--log", tr_log, "Write the slot log as CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Rate sweeps");
  std::string sweep_kind;
  std::string sweep_out;
  sweep->add_option("kind", sweep_kind, "overhead|snr|distance")
      ->required()
      ->check(CLI::IsMember({"overhead", "snr", "distance"}));
  sweep->add_option("--output", sweep_out, "CSV file name (default: rate_<kind>.csv)");

  // overhead
  auto* overhead = app.add_subcommand("overhead", "Training-overhead table");
  bool oh_csv = false;
  overhead->add_flag("--csv", oh_csv, "Print CSV instead of a table");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = resolve_config(common);

    if (*overhead) {
      const auto rows = overhead_table(cfg.overhead_plans());
      if (oh_csv) {
        write_overhead_csv(rows, std::cout);
      } else {
        std::cout << "U = " << cfg.num_angles << ", S = " << cfg.distances_per_angle << '\n';
        for (const auto& r : rows) {
          std::cout << std::left << std::setw(18) << r.scheme << std::setw(32) << r.formula
                    << std::right << std::setw(8) << r.value
                    << (r.simulated ? "" : "  (formula only, not simulated)") << '\n';
        }
      }
      return 0;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentContext ctx = prepare_context(cfg, cache_of(common), log_line);
    const double build_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (*design) {
      std::cout << "near-field hierarchy: " << ctx.near.num_layers() << " layers, overhead "
                << ctx.near.overhead() << '\n';
      for (int l = 0; l < ctx.near.num_layers(); ++l) {
        std::cout << "  layer " << l + 1 << ": " << ctx.near.layers[l].entries.size()
                  << " codewords\n";
      }
      std::cout << "far-field hierarchy: " << ctx.far.num_layers() << " layers, overhead "
                << ctx.far.overhead() << '\n';
      std::cout << "ready in " << std::fixed << std::setprecision(1) << build_s << " s\n";
      if (!design_out.empty()) save_hierarchy(ctx.near, output_path(common, design_out));
      write_manifest(output_path(common, "design.manifest.json"), cfg, command_line(argc, argv));
      return 0;
    }

    if (*pattern) {
      const Hierarchy& h = pat_far ? ctx.far : ctx.near;
      if (pat_layer > h.num_layers()) throw DomainError("layer out of range");
      const auto& entries = h.layers[pat_layer - 1].entries;
      if (pat_index >= static_cast<int>(entries.size())) throw DomainError("index out of range");
      const CodebookEntry& e = entries[pat_index];
      const double reach = x_max.value_or(1.2 * cfg.max_distance);
      raster.x_min = 0.0;
      raster.x_max = reach;
      raster.y_min = -y_half.value_or(0.6 * reach);
      raster.y_max = y_half.value_or(0.6 * reach);
      const Heatmap map =
          beam_pattern_heatmap(pat_theoretical ? e.theoretical : e.beam, cfg.array, raster);
      const fs::path path = output_path(common, pat_out);
      write_heatmap(map, path);
      const auto contrast = region_contrast(map, [&](double x, double y) {
        const PolarPoint p = to_polar(x, y);
        return e.box.contains(p.angle, p.distance);
      });
      std::cout << "box theta [" << e.box.angle_lo << ", " << e.box.angle_hi << "], r ["
                << e.box.dist_lo << ", " << e.box.dist_hi << "] m\n"
                << "mean |G| inside " << contrast.inside_mean << ", outside "
                << contrast.outside_mean << ", ratio " << contrast.ratio() << '\n'
                << "wrote " << path.string() << '\n';
      write_manifest(path.string() + ".manifest.json", cfg, command_line(argc, argv));
      return 0;
    }

    if (*train) {
      const Scheme scheme = parse_scheme(train_scheme);
      ChannelRealization ch = trial_channel(cfg, tr_trial);
      if (tr_angle || tr_distance) {
        ch = make_channel(cfg.array, ch.gain, tr_angle.value_or(ch.angle),
                          tr_distance.value_or(ch.distance));
      }
      Rng noise = trial_noise(cfg, tr_trial);
      const double sigma2 = noise_power_from_snr_db(tr_snr);
      const TrainingOutcome out = run_scheme(scheme, ctx, ch, sigma2, noise, tr_budget);
      std::cout << "channel: theta " << ch.angle << ", r " << ch.distance << " m, |alpha| "
                << std::abs(ch.gain) << '\n';
      for (const auto& slot : out.log) {
        std::cout << "  slot layer " << slot.id.layer + 1 << " codeword " << slot.id.index
                  << "  |y| = " << slot.magnitude << (slot.id == out.chosen ? "  <- chosen" : "")
                  << '\n';
      }
      std::cout << "slots used: " << out.measurements_used << '\n'
                << "rate: " << achievable_rate(ch.vector, out.beam, sigma2) << " bit/s/Hz\n";
      if (scheme == Scheme::kProposed || scheme == Scheme::kFarHierarchical) {
        const Hierarchy& h = scheme == Scheme::kProposed ? ctx.near : ctx.far;
        const CoverageBox& box = chosen_box(h, out);
        std::cout << "chosen box theta [" << box.angle_lo << ", " << box.angle_hi << "], r ["
                  << box.dist_lo << ", " << box.dist_hi << "] m, contains user: "
                  << (box.contains(ch.angle, ch.distance) ? "yes" : "no") << '\n';
      }
      if (!tr_log.empty()) {
        std::ofstream log(output_path(common, tr_log));
        write_episode_header(log);
        write_episode_log(log, tr_trial, train_scheme, out);
      }
      return 0;
    }

    if (*sweep) {
      std::vector<RateSample> samples;
      if (sweep_kind == "overhead") {
        samples = sweep_overhead(cfg, ctx);
      } else if (sweep_kind == "snr") {
        samples = sweep_snr(cfg, ctx);
      } else {
        samples = sweep_distance(cfg, ctx);
      }
      const fs::path path =
          output_path(common, sweep_out.empty() ? "rate_" + sweep_kind + ".csv" : sweep_out);
      std::ofstream csv(path);
      if (!csv) throw FormatError("cannot open " + path.string());
      write_rate_csv(samples, csv);
      write_manifest(path.string() + ".manifest.json", cfg, command_line(argc, argv));
      write_rate_csv(samples, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "nfbt: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
