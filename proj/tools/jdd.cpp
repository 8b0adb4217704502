// Command-line front end: simulate, run, ablate, report, metrics.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "jdd/bayer.hpp"
#include "jdd/errors.hpp"
#include "jdd/experiment.hpp"
#include "jdd/image_io.hpp"
#include "jdd/metrics.hpp"
#include "jdd/noise.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GridFlags {
  std::string profile = "desk";
  std::string config_file;
  std::string dataset;
  std::optional<std::string> glob;
  std::optional<int> crop;
  bool no_crop = false;
  std::optional<std::string> methods;
  std::vector<std::string> noise;
  std::optional<int> repeats;
  std::optional<int> iterations;
  std::optional<int> eval_every;
  std::optional<double> alpha;
  std::optional<double> lr_dn;
  std::optional<double> lr_dm;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool dump_intermediates = false;
  bool stop_gradient = false;
  bool no_clip = false;
};

void add_grid_flags(CLI::App* cmd, GridFlags& f) {
  cmd->add_option("--profile", f.profile, "desk | paper defaults")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--config", f.config_file, "JSON experiment config (applied after --profile)");
  cmd->add_option("--dataset", f.dataset, "directory of lossless RGB images");
  cmd->add_option("--glob", f.glob, "file name pattern inside the dataset directory");
  cmd->add_option("--crop", f.crop, "square center crop size");
  cmd->add_flag("--no-crop", f.no_crop, "use full images (cropped only to the network stride)");
  cmd->add_option("--methods", f.methods, "comma list of ours,dip_n,dip_u,dm_dm");
  cmd->add_option("--noise", f.noise, "gaussian:10,20,30|poisson:65,25 (repeatable)");
  cmd->add_option("--repeats", f.repeats);
  cmd->add_option("--iters", f.iterations);
  cmd->add_option("--eval-every", f.eval_every);
  cmd->add_option("--alpha", f.alpha);
  cmd->add_option("--lr-dn", f.lr_dn);
  cmd->add_option("--lr-dm", f.lr_dm);
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "cells run in parallel");
  cmd->add_flag("--dump-intermediates", f.dump_intermediates,
                "write reconstructions at every evaluation step");
  cmd->add_flag("--stop-gradient", f.stop_gradient,
                "block the demosaicing loss from updating the denoiser");
  cmd->add_flag("--no-clip", f.no_clip, "do not clip noisy values to [0,1]");
}

jdd::ExperimentConfig build_config(const GridFlags& f) {
  auto config = jdd::ExperimentConfig::for_profile(jdd::parse_profile(f.profile));
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw jdd::UsageError("cannot open config " + f.config_file);
    json j = json::parse(in);
    j.erase("profile");
    jdd::from_json(j, config);
  }
  if (!f.dataset.empty()) config.dataset = f.dataset;
  if (f.glob) config.glob = *f.glob;
  if (f.crop) config.crop = *f.crop;
  if (f.no_crop) config.crop.reset();
  if (f.methods) {
    config.methods.clear();
    std::istringstream in(*f.methods);
    for (std::string m; std::getline(in, m, ',');) config.methods.push_back(jdd::parse_method(m));
  }
  if (!f.noise.empty()) {
    config.noise.clear();
    for (const auto& n : f.noise)
      for (const auto& s : jdd::parse_noise_grid(n)) config.noise.push_back(s);
  }
  if (f.repeats) config.repeats = *f.repeats;
  if (f.iterations) config.train.iterations = *f.iterations;
  if (f.eval_every) config.train.eval_every = *f.eval_every;
  if (f.alpha) config.train.alpha = *f.alpha;
  if (f.lr_dn) config.train.lr_dn = *f.lr_dn;
  if (f.lr_dm) config.train.lr_dm = *f.lr_dm;
  if (f.seed) config.seed = *f.seed;
  if (f.out) config.output_dir = *f.out;
  if (f.workers) config.workers = *f.workers;
  if (f.dump_intermediates) config.dump_intermediates = true;
  if (f.stop_gradient) config.train.stop_gradient_guide = true;
  if (f.no_clip) config.clip_noise = false;
  if (config.dataset.empty()) throw jdd::UsageError("--dataset is required");
  config.validate();
  return config;
}

int execute_grid(const jdd::ExperimentConfig& config) {
  std::cout << "config " << config.config_hash() << " -> " << config.output_dir.string() << '\n';
  const auto summary = jdd::run_grid(config);
  std::cout << "cells: " << summary.computed << " computed, " << summary.skipped << " skipped, "
            << summary.failed << " failed\n";
  const auto files = jdd::write_report(jdd::load_records(config.output_dir), config.output_dir);
  std::cout << "report: " << files.markdown.string() << ", " << files.csv.string() << '\n';
  return summary.failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);

  CLI::App app{"Joint demosaicing and denoising with two coupled untrained networks"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "write a noisy RAW observation for one image");
  std::string sim_image;
  std::string sim_noise = "gaussian:30";
  std::uint64_t sim_seed = 0;
  std::optional<int> sim_crop;
  std::string sim_out = "observation";
  simulate->add_option("--image", sim_image, "lossless RGB image")->required();
  simulate->add_option("--noise", sim_noise, "family:intensity");
  simulate->add_option("--seed", sim_seed, "noise seed");
  simulate->add_option("--crop", sim_crop, "square center crop");
  simulate->add_option("--out", sim_out, "output directory");

  // run / ablate
  auto* run = app.add_subcommand("run", "execute an experiment grid and report");
  GridFlags run_flags;
  add_grid_flags(run, run_flags);
  auto* ablate = app.add_subcommand("ablate", "compare ours against the DM-DM counterpart");
  GridFlags ablate_flags;
  ablate_flags.noise = {"gaussian:30|poisson:25"};
  add_grid_flags(ablate, ablate_flags);

  // report
  auto* report = app.add_subcommand("report", "aggregate runs.jsonl into tables and panels");
  std::string report_dir = "runs";
  report->add_option("--out", report_dir, "grid output directory");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM of an estimate against a reference");
  std::string truth_path;
  std::string estimate_path;
  metrics->add_option("truth", truth_path)->required();
  metrics->add_option("estimate", estimate_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const auto grid = jdd::parse_noise_grid(sim_noise);
      if (grid.size() != 1) throw jdd::UsageError("--noise takes a single family:intensity");
      jdd::Image pixels = jdd::read_image(sim_image);
      if (sim_crop) pixels = jdd::center_crop(pixels, *sim_crop, *sim_crop);
      const jdd::RgbImage truth(std::move(pixels));
      const jdd::NoiseSpec spec{grid[0].family, grid[0].intensity, sim_seed};
      const fs::path out = sim_out;
      fs::create_directories(out);
      const auto observation = jdd::make_noisy_observation(truth, spec);
      jdd::write_image(out / "truth.png", truth.pixels());
      jdd::write_image(out / "noisy_raw.png", observation.raw);
      jdd::write_image(out / "observation.png", observation.lifted);
      const json sidecar{{"image", sim_image},
                         {"family", jdd::to_string(spec.family)},
                         {"intensity", spec.intensity},
                         {"seed", spec.rng_seed},
                         {"clip", spec.clip},
                         {"height", truth.height()},
                         {"width", truth.width()},
                         {"bayer", "RGGB"},
                         {"bit_depth", 16}};
      std::ofstream(out / "noise.json") << sidecar.dump(2) << '\n';
      std::cout << "wrote " << (out / "noisy_raw.png").string() << " and sidecar\n";
      return 0;
    }
    if (*run) return execute_grid(build_config(run_flags));
    if (*ablate) {
      if (!ablate_flags.methods) ablate_flags.methods = "ours,dm_dm";
      return execute_grid(build_config(ablate_flags));
    }
    if (*report) {
      const auto files = jdd::write_report(jdd::load_records(report_dir), report_dir);
      std::cout << "report: " << files.markdown.string() << ", " << files.csv.string() << ", "
                << files.panels.size() << " panel(s)\n";
      return 0;
    }
    if (*metrics) {
      const jdd::Image truth = jdd::read_image(truth_path);
      const jdd::Image estimate = jdd::read_image(estimate_path);
      const double psnr = jdd::psnr(truth, estimate);
      // JSON has no infinity; identical images report "inf" as in runs.jsonl.
      const json result{{"psnr", std::isinf(psnr) ? json("inf") : json(psnr)},
                        {"ssim", jdd::ssim(truth, estimate)}};
      std::cout << result.dump() << '\n';
      return 0;
    }
  } catch (const jdd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
