// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance [--data DIR] [--work DIR] [--only N,...]
//
// The method-comparison criteria run desk-profile grids on DIR (three color
// test images). Their rows are kept in the work directory, so an interrupted
// run resumes where it stopped.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>
#include <torch/torch.h>

#include "CLI11.hpp"
#include "jdd/bayer.hpp"
#include "jdd/experiment.hpp"
#include "jdd/metrics.hpp"
#include "jdd/noise.hpp"
#include "jdd/tensor_image.hpp"
#include "jdd/trainer.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace jdd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// --- 1: operator algebra ---------------------------------------------------

Outcome operator_algebra() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(1);
  boost::random::uniform_int_distribution<int> half(1, 8);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = 2 * half(rng);
    const int w = 2 * half(rng);
    const RgbImage rgb(oracle::random_image(h, w, 3, 10'000 + trial));
    const RawImage raw(oracle::random_image(h, w, 1, 20'000 + trial));
    const auto mask = make_mask(h, w);

    bool ok = mosaic(RgbImage(lift(raw))) == raw;
    ok = ok && lift(mosaic(rgb)) == extract_observed(rgb.pixels(), mask);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        ok = ok && mask.at(y, x, 0) + mask.at(y, x, 1) + mask.at(y, x, 2) == 1.0;
        for (int c = 0; c < 3; ++c) ok = ok && mask.at(y, x, c) == oracle::mask_value(y, x, c);
      }
    failures += ok ? 0 : 1;
  }
  const double t = seconds_since(start);
  return {failures == 0 && t <= 1.0, fmt("%d/1000 images violate an identity, %.3f s", failures, t)};
}

// --- 2: loss oracles -------------------------------------------------------

Outcome loss_oracles() {
  const auto start = std::chrono::steady_clock::now();
  const auto f64 = [](const Image& img) { return to_tensor(img, torch::kFloat64); };
  const auto mask = f64(make_mask(8, 8).values());
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Image denoised = oracle::random_image(8, 8, 1, 300 + k);
    const RawImage noisy(oracle::random_image(8, 8, 1, 400 + k));
    const Image out = oracle::random_image(8, 8, 3, 500 + k);
    const Image lifted = lift(noisy);

    const auto dn = loss_dn(f64(denoised), f64(noisy.pixels()));
    const auto dm = loss_dm(f64(denoised), f64(out), f64(lifted), mask, 0.1);
    const double joint = loss_joint(dn, dm).item<double>();

    const double dn_ref = oracle::mse_1ch(denoised, noisy.pixels());
    const double dm_ref = oracle::demosaic_loss(denoised, out, lifted, 0.1);
    const double joint_ref = std::sqrt(dn_ref) + std::sqrt(dm_ref);
    worst = std::max({worst, std::abs(dn.item<double>() - dn_ref),
                      std::abs(dm.item<double>() - dm_ref), std::abs(joint - joint_ref)});
  }
  const double t = seconds_since(start);
  return {worst <= 1e-12 && t <= 1.0, fmt("max deviation %.3g over 100 instances, %.3f s", worst, t)};
}

// --- 3: gradients ----------------------------------------------------------

Outcome gradients() {
  const auto start = std::chrono::steady_clock::now();
  const auto arch = Architecture::uniform(2, 4, 2, 3);
  auto guide = build_network(1, arch, 11);
  auto demosaic = build_network(3, arch, 12);
  guide->to(torch::kFloat64);
  demosaic->to(torch::kFloat64);
  const auto z_dn = make_seed(3, 16, 16, {}, 13).data.to(torch::kFloat64);
  const auto z_dm = make_seed(3, 16, 16, {}, 14).data.to(torch::kFloat64);
  const RgbImage truth(oracle::random_image(16, 16, 3, 15));
  const auto targets = make_targets(make_noisy_observation(truth, {NoiseFamily::gaussian, 30, 16}),
                                    torch::kFloat64);
  auto objective = [&] { return evaluate_joint(guide, demosaic, z_dn, z_dm, targets, 0.1); };

  guide->zero_grad();
  demosaic->zero_grad();
  objective().dm.backward();
  double feedback = 0.0;
  for (const auto& p : guide->parameters()) feedback += p.grad().abs().sum().item<double>();

  guide->zero_grad();
  demosaic->zero_grad();
  objective().joint.backward();
  double worst = 0.0;
  int checked = 0;
  const double step = 1e-5;
  for (auto* net : {&guide, &demosaic}) {
    for (auto& param : (*net)->parameters()) {
      auto flat = param.data().view(-1);
      const auto grad = param.grad().view(-1);
      for (std::int64_t i = 0; i < flat.numel(); i += std::max<std::int64_t>(1, flat.numel() / 4)) {
        torch::NoGradGuard no_grad;
        const double original = flat[i].item<double>();
        flat[i] = original + step;
        const double plus = objective().joint.item<double>();
        flat[i] = original - step;
        const double minus = objective().joint.item<double>();
        flat[i] = original;
        const double numeric = (plus - minus) / (2 * step);
        const double err = std::abs(grad[i].item<double>() - numeric) / std::max(std::abs(numeric), 1e-5);
        worst = std::max(worst, err);
        ++checked;
      }
    }
  }
  const double t = seconds_since(start);
  return {worst <= 1e-3 && feedback > 0.0 && t <= 60.0,
          fmt("%d coordinates, max rel. error %.3g, |dDM/dtheta|_1 = %.3g, %.1f s", checked, worst,
              feedback, t)};
}

// --- 4: noise statistics ---------------------------------------------------

Outcome noise_statistics() {
  const auto start = std::chrono::steady_clock::now();
  const RawImage flat(Image(1000, 1000, 1, 0.5));
  auto moments = [](const Image& img) {
    std::vector<double> v(img.values().begin(), img.values().end());
    return oracle::mean_std(v);
  };
  const double sigma = 25.0 / 255.0;
  const auto [g_mean, g_std] = moments(add_gaussian(flat, {NoiseFamily::gaussian, 25.0, 1}).pixels());
  const auto [p_mean, p_std] = moments(add_poisson_unclipped(flat, {NoiseFamily::poisson, 25.0, 2}));
  const double p_var = p_std * p_std;
  const bool ok = std::abs(g_mean - 0.5) <= 3 * sigma / 1000 &&
                  std::abs(g_std - sigma) <= 0.02 * sigma &&
                  std::abs(p_mean - 0.5) <= 3 * std::sqrt(0.5 / 25.0) / 1000 &&
                  std::abs(p_var - 0.02) <= 0.05 * 0.02;
  const double t = seconds_since(start);
  return {ok && t <= 10.0, fmt("gaussian mean %.5f std %.5f (target %.5f); poisson mean %.5f var "
                               "%.5f (target 0.02); %.2f s",
                               g_mean, g_std, sigma, p_mean, p_var, t)};
}

// --- 5-8: desk-scale grids -------------------------------------------------

struct Grids {
  fs::path data;
  fs::path work;

  ExperimentConfig config(std::vector<Method> methods, NoiseSetting noise, int repeats) const {
    ExperimentConfig c = ExperimentConfig::for_profile(Profile::desk);
    c.dataset = data;
    c.glob = "*.png";
    c.methods = std::move(methods);
    c.noise = {noise};
    c.repeats = repeats;
    c.output_dir = work;
    c.seed = 2024;
    return c;
  }

  std::vector<RunRecord> run(const ExperimentConfig& c) const {
    const auto start = std::chrono::steady_clock::now();
    auto summary = run_grid(c);
    std::printf("  grid %s: %d computed, %d reused, %d failed, %.0f s\n",
                c.noise.front().label().c_str(), summary.computed, summary.skipped,
                summary.failed, seconds_since(start));
    std::fflush(stdout);
    return std::move(summary.records);
  }
};

double mean_psnr(const std::vector<AggregateRow>& rows, const std::string& variant) {
  for (const auto& r : rows)
    if (r.variant == variant) return r.psnr_mean;
  return std::nan("");
}

const AggregateRow* row_of(const std::vector<AggregateRow>& rows, const std::string& variant) {
  for (const auto& r : rows)
    if (r.variant == variant) return &r;
  return nullptr;
}

bool all_ok(const std::vector<RunRecord>& records) {
  for (const auto& r : records)
    if (!r.ok) return false;
  return !records.empty();
}

Outcome ordering(const std::vector<RunRecord>& records) {
  if (!all_ok(records)) return {false, "grid contains failed cells"};
  const auto rows = aggregate(records);
  const double ours = mean_psnr(rows, "ours");
  const double dip_n = mean_psnr(rows, "dip_n");
  const double dip_u = mean_psnr(rows, "dip_u");
  const bool ok = ours - dip_n >= 0.2 && dip_n - dip_u >= 0.2;
  return {ok, fmt("Ours %.3f, DIP(n.) %.3f, DIP(u.) %.3f dB (Ours+ %.3f)", ours, dip_n, dip_u,
                  mean_psnr(rows, "ours_plus"))};
}

Outcome smoothing(const std::vector<RunRecord>& records) {
  if (!all_ok(records)) return {false, "grid contains failed cells"};
  std::map<std::string, std::pair<double, double>> per_image;
  std::map<std::string, int> counts;
  for (const auto& r : records) {
    if (r.cell.method != Method::ours) continue;
    per_image[r.cell.image_id].first += r.output.psnr;
    per_image[r.cell.image_id].second += r.smoothed.psnr;
    ++counts[r.cell.image_id];
  }
  int wins = 0;
  double ours = 0.0;
  double plus = 0.0;
  std::string detail;
  for (const auto& [image, sums] : per_image) {
    const double o = sums.first / counts[image];
    const double p = sums.second / counts[image];
    wins += p >= o ? 1 : 0;
    ours += o / per_image.size();
    plus += p / per_image.size();
    detail += fmt(" %s %+.3f", image.c_str(), p - o);
  }
  const bool ok = plus >= ours - 0.05 && wins >= 2 && per_image.size() == 3;
  return {ok, fmt("Ours+ %.3f vs Ours %.3f dB; Ours+ >= Ours on %d/%zu images;", plus, ours, wins,
                  per_image.size()) + detail};
}

Outcome stability(const std::vector<RunRecord>& records) {
  if (!all_ok(records)) return {false, "grid contains failed cells"};
  const auto rows = aggregate(records);
  const auto* ours = row_of(rows, "ours");
  const auto* dmdm = row_of(rows, "dm_dm");
  if (!ours || !dmdm) return {false, "missing rows"};
  const bool ok = ours->psnr_std <= dmdm->psnr_std && ours->psnr_mean >= dmdm->psnr_mean;
  return {ok, fmt("Ours %.3f (std %.3f), DM-DM %.3f (std %.3f) dB over %d repeats", ours->psnr_mean,
                  ours->psnr_std, dmdm->psnr_mean, dmdm->psnr_std, ours->repeats)};
}

// --- 9: metric fidelity ----------------------------------------------------

Outcome metric_fidelity() {
  const double p = psnr(Image(16, 16, 3, 0.5), Image(16, 16, 3, 0.25));
  const double p_ref = 10.0 * std::log10(1.0 / 0.0625);
  double worst_ssim = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Image a = oracle::random_image(24, 20, 3, 600 + k);
    Image b = a;
    Rng rng(700 + k);
    boost::random::uniform_real_distribution<double> u(-0.2, 0.2);
    for (double& v : b.values()) v = std::clamp(v + u(rng), 0.0, 1.0);
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - oracle::ssim_direct(a, b)));
  }
  const Image a = oracle::random_image(32, 32, 3, 800);
  const double self = ssim(a, a);
  const bool ok = std::abs(p - p_ref) <= 1e-9 && std::abs(p - 12.0412) < 5e-5 &&
                  worst_ssim <= 1e-4 && self == 1.0;
  return {ok, fmt("psnr(0.5, 0.25) = %.10f dB; max |ssim - direct| = %.3g; ssim(a,a) = %.17g", p,
                  worst_ssim, self)};
}

// --- 10: reproducibility ---------------------------------------------------

Outcome reproducibility(const fs::path& data, const fs::path& work) {
  std::vector<std::string> outputs;
  for (const char* name : {"repro_a", "repro_b"}) {
    const fs::path dir = work / name;
    fs::remove_all(dir);
    ExperimentConfig c = ExperimentConfig::for_profile(Profile::desk);
    c.dataset = data;
    c.crop = 64;
    c.methods = {Method::ours, Method::dip_n, Method::dip_u, Method::dm_dm};
    c.noise = parse_noise_grid("gaussian:30|poisson:25");
    c.repeats = 2;
    c.output_dir = dir;
    c.seed = 7;
    c.workers = 2;
    c.train.iterations = 20;
    c.train.eval_every = 10;
    const auto summary = run_grid(c);
    const auto files = write_report(summary.records, dir);
    outputs.push_back(slurp(dir / "runs.jsonl") + slurp(files.csv) + slurp(files.markdown));
  }
  const bool ok = outputs[0] == outputs[1] && !outputs[0].empty();
  return {ok, fmt("runs.jsonl + aggregate.csv + tables.md: %zu bytes, %s", outputs[0].size(),
                  ok ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  fs::path data = "tests/data/colorful";
  fs::path work = fs::temp_directory_path() / "jdd_acceptance";
  std::vector<int> only;
  app.add_option("--data", data, "directory with the color test images")->check(CLI::ExistingDirectory);
  app.add_option("--work", work, "work directory; existing grid rows are reused");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  fs::create_directories(work);
  const Grids grids{data, work / "grids"};
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int n) { return selected.empty() || selected.contains(n); };

  int failed = 0;
  auto report = [&](int n, const Outcome& o) {
    std::printf("criterion %2d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };
  auto guarded = [&](int n, const std::function<Outcome()>& f) {
    if (!wanted(n)) return;
    try {
      report(n, f());
    } catch (const std::exception& e) {
      report(n, {false, std::string("error: ") + e.what()});
    }
  };

  guarded(1, operator_algebra);
  guarded(2, loss_oracles);
  guarded(3, gradients);
  guarded(4, noise_statistics);

  const NoiseSetting gaussian{NoiseFamily::gaussian, 30.0};
  const NoiseSetting poisson{NoiseFamily::poisson, 25.0};
  const std::vector<Method> compared{Method::ours, Method::dip_n, Method::dip_u};
  std::vector<RunRecord> gaussian_runs;
  if (wanted(5) || wanted(6)) {
    try {
      gaussian_runs = grids.run(grids.config(compared, gaussian, 3));
    } catch (const std::exception& e) {
      std::printf("  gaussian grid error: %s\n", e.what());
    }
  }
  guarded(5, [&] { return ordering(gaussian_runs); });
  guarded(6, [&] { return smoothing(gaussian_runs); });
  guarded(7, [&] { return ordering(grids.run(grids.config(compared, poisson, 3))); });
  guarded(8, [&] {
    return stability(grids.run(grids.config({Method::ours, Method::dm_dm}, gaussian, 5)));
  });
  guarded(9, metric_fidelity);
  guarded(10, [&] { return reproducibility(data, work); });

  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
