#include "jdd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "jdd/errors.hpp"
#include "jdd/rng.hpp"
#include "jdd/tensor_image.hpp"

namespace jdd {

std::string to_string(Method method) {
  switch (method) {
    case Method::ours: return "ours";
    case Method::dip_u: return "dip_u";
    case Method::dip_n: return "dip_n";
    case Method::dm_dm: return "dm_dm";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::ours, Method::dip_u, Method::dip_n, Method::dm_dm}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(lr_dn > 0.0) || !(lr_dm > 0.0)) throw ConfigError("learning rates must be positive");
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (!(smoothing_beta > 0.0 && smoothing_beta < 1.0)) {
    throw ConfigError("smoothing_beta must lie in (0,1)");
  }
  if (eval_every < 0) throw ConfigError("eval_every must be non-negative");
  architecture.validate();
}

DivergenceError::DivergenceError(int iteration, LossTerms losses)
    : std::runtime_error([&] {
        std::ostringstream out;
        out << "objective diverged at iteration " << iteration << " (dn=" << losses.dn
            << ", dm=" << losses.dm << ", joint=" << losses.joint << ")";
        return out.str();
      }()),
      iteration_(iteration),
      losses_(losses) {}

// --- Objectives -------------------------------------------------------------

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw DimensionError(std::string(what) + ": shape mismatch");
}

}  // namespace

torch::Tensor loss_dn(const torch::Tensor& denoised, const torch::Tensor& noisy_raw) {
  require_same_shape(denoised, noisy_raw, "loss_dn");
  return (denoised - noisy_raw).pow(2).mean();
}

torch::Tensor loss_masked(const torch::Tensor& demosaiced, const torch::Tensor& noisy_lifted,
                          const torch::Tensor& mask) {
  require_same_shape(demosaiced, mask, "loss_masked");
  require_same_shape(noisy_lifted, mask, "loss_masked");
  return (noisy_lifted * mask - demosaiced * mask).pow(2).mean();
}

torch::Tensor loss_dm(const torch::Tensor& guide, const torch::Tensor& demosaiced,
                      const torch::Tensor& noisy_lifted, const torch::Tensor& mask, double alpha) {
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  require_same_shape(demosaiced, mask, "loss_dm");
  require_same_shape(noisy_lifted, mask, "loss_dm");
  if (guide.dim() != 4 || (guide.size(1) != 1 && guide.size(1) != 3) ||
      guide.size(2) != mask.size(2) || guide.size(3) != mask.size(3)) {
    throw DimensionError("loss_dm: guide must be 1 x {1,3} x H x W");
  }
  const auto out_masked = demosaiced * mask;
  const auto guide_term = (guide * mask - out_masked).pow(2).mean();
  const auto observation_term = (noisy_lifted * mask - out_masked).pow(2).mean();
  return guide_term + alpha * observation_term;
}

torch::Tensor loss_joint(const torch::Tensor& l_dn, const torch::Tensor& l_dm) {
  return torch::sqrt(l_dn) + torch::sqrt(l_dm);
}

double loss_joint(double l_dn, double l_dm) {
  if (!(l_dn >= 0.0) || !(l_dm >= 0.0) || !std::isfinite(l_dn) || !std::isfinite(l_dm)) {
    throw NumericError("joint loss needs finite non-negative terms");
  }
  return std::sqrt(l_dn) + std::sqrt(l_dm);
}

Targets make_targets(const NoisyObservation& observation, torch::Dtype dtype) {
  const int h = observation.raw.height();
  const int w = observation.raw.width();
  return {to_tensor(observation.raw, dtype), to_tensor(observation.lifted, dtype),
          to_tensor(make_mask(h, w), dtype)};
}

JointEvaluation evaluate_joint(DipNetwork& guide_net, DipNetwork& demosaic_net,
                               const torch::Tensor& guide_seed, const torch::Tensor& demosaic_seed,
                               const Targets& targets, double alpha, bool stop_gradient_guide) {
  JointEvaluation e;
  e.guide_output = guide_net->forward(guide_seed);
  e.output = demosaic_net->forward(demosaic_seed);
  e.dn = e.guide_output.size(1) == 1
             ? loss_dn(e.guide_output, targets.noisy_raw)
             : loss_masked(e.guide_output, targets.noisy_lifted, targets.mask);
  const auto guide = stop_gradient_guide ? e.guide_output.detach() : e.guide_output;
  e.dm = loss_dm(guide, e.output, targets.noisy_lifted, targets.mask, alpha);
  e.joint = loss_joint(e.dn, e.dm);
  return e;
}

// --- Training ---------------------------------------------------------------

namespace {

const SeedSpec& demosaic_seed_spec(const TrainConfig& config) {
  return config.method == Method::dip_u ? config.uniform_seed : config.normal_seed;
}

RgbImage to_rgb(const torch::Tensor& t) {
  Image image = to_image(t);
  for (double& v : image.values()) v = std::clamp(v, 0.0, 1.0);
  return RgbImage(std::move(image));
}

struct StepOutcome {
  torch::Tensor output;
  LossTerms losses;
};

// Shared optimization loop. `step` runs the forward pass, backpropagates and
// returns the detached demosaic output with the loss values.
template <typename Step>
TrainResult optimize(const RgbImage& truth, const TrainConfig& config, TrainState& state,
                     torch::optim::Adam& optimizer, Step&& step,
                     const IterationObserver& observer) {
  const auto started = std::chrono::steady_clock::now();
  TrainReport report;
  report.method = config.method;
  report.iterations = config.iterations;
  report.parameter_count = state.demosaic_net->parameter_count() +
                           (state.guide_net ? state.guide_net->parameter_count() : 0);

  torch::Tensor output;
  const double beta = config.smoothing_beta;
  for (int it = 1; it <= config.iterations; ++it) {
    optimizer.zero_grad();
    StepOutcome outcome = step();
    if (!std::isfinite(outcome.losses.joint)) throw DivergenceError(it, outcome.losses);
    optimizer.step();

    output = std::move(outcome.output);
    // Accumulated in double so long runs do not drift from the recurrence.
    if (it == 1) {
      state.smoothed = output.to(torch::kFloat64);
    } else {
      state.smoothed.mul_(beta).add_(output.to(torch::kFloat64), 1.0 - beta);
    }
    state.iteration = it;
    state.loss_history.push_back(outcome.losses);

    if (observer) observer(IterationView{it, state.loss_history.back(), output, state.smoothed});
    const bool final = it == config.iterations;
    if (final || (config.eval_every > 0 && it % config.eval_every == 0)) {
      report.trajectory.push_back(
          {it, evaluate(truth, to_rgb(output)), evaluate(truth, to_rgb(state.smoothed))});
    }
  }

  TrainResult result{to_rgb(output), to_rgb(state.smoothed), std::move(report)};
  result.report.final_output = result.report.trajectory.back().output;
  result.report.final_smoothed = result.report.trajectory.back().smoothed;
  result.report.loss_history = state.loss_history;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void require_method(const TrainConfig& config, std::initializer_list<Method> allowed,
                    const char* trainer) {
  for (Method m : allowed)
    if (config.method == m) return;
  throw ConfigError(std::string(trainer) + " does not run method " + to_string(config.method));
}

void require_observation(const RgbImage& truth, const NoisyObservation& observation) {
  if (truth.height() != observation.raw.height() || truth.width() != observation.raw.width()) {
    throw DimensionError("ground truth and observation sizes differ");
  }
}

TrainResult train_two_networks(const RgbImage& truth, const NoisyObservation& observation,
                               const TrainConfig& config, const IterationObserver& observer) {
  require_observation(truth, observation);
  config.validate();
  TrainState state = make_train_state(config, truth.height(), truth.width());
  const Targets targets = make_targets(observation);

  std::vector<torch::optim::OptimizerParamGroup> groups;
  // In dm_dm the guide is itself a demosaicing network and trains at its rate.
  const double guide_lr = config.method == Method::dm_dm ? config.lr_dm : config.lr_dn;
  groups.emplace_back(state.guide_net->parameters(),
                      std::make_unique<torch::optim::AdamOptions>(guide_lr));
  groups.emplace_back(state.demosaic_net->parameters(),
                      std::make_unique<torch::optim::AdamOptions>(config.lr_dm));
  torch::optim::Adam optimizer(std::move(groups), torch::optim::AdamOptions(config.lr_dm));

  auto step = [&] {
    auto e = evaluate_joint(state.guide_net, state.demosaic_net, state.guide_seed.data,
                            state.demosaic_seed.data, targets, config.alpha,
                            config.stop_gradient_guide);
    LossTerms losses{e.dn.item<double>(), e.dm.item<double>(), e.joint.item<double>()};
    if (std::isfinite(losses.joint)) e.joint.backward();
    return StepOutcome{e.output.detach(), losses};
  };
  return optimize(truth, config, state, optimizer, step, observer);
}

}  // namespace

TrainState make_train_state(const TrainConfig& config, int height, int width) {
  const auto& arch = config.architecture;
  const std::uint64_t seed = config.rng_seed;
  TrainState state;
  state.demosaic_net = build_network(3, arch, derive_seed(seed, "demosaic_net"));
  state.demosaic_seed = make_seed(arch.input_channels, height, width, demosaic_seed_spec(config),
                                  derive_seed(seed, "demosaic_seed"));
  if (config.method == Method::ours || config.method == Method::dm_dm) {
    const int guide_channels = config.method == Method::ours ? 1 : 3;
    state.guide_net = build_network(guide_channels, arch, derive_seed(seed, "guide_net"));
    state.guide_seed = make_seed(arch.input_channels, height, width, config.normal_seed,
                                 derive_seed(seed, "guide_seed"));
  }
  return state;
}

TrainResult train_joint(const RgbImage& truth, const NoisyObservation& observation,
                        const TrainConfig& config, const IterationObserver& observer) {
  require_method(config, {Method::ours}, "train_joint");
  return train_two_networks(truth, observation, config, observer);
}

TrainResult train_dm_dm(const RgbImage& truth, const NoisyObservation& observation,
                        const TrainConfig& config, const IterationObserver& observer) {
  require_method(config, {Method::dm_dm}, "train_dm_dm");
  return train_two_networks(truth, observation, config, observer);
}

TrainResult train_single_dip(const RgbImage& truth, const NoisyObservation& observation,
                             const TrainConfig& config, const IterationObserver& observer) {
  require_method(config, {Method::dip_u, Method::dip_n}, "train_single_dip");
  require_observation(truth, observation);
  config.validate();
  TrainState state = make_train_state(config, truth.height(), truth.width());
  const Targets targets = make_targets(observation);
  torch::optim::Adam optimizer(state.demosaic_net->parameters(),
                               torch::optim::AdamOptions(config.lr_dm));

  auto step = [&] {
    auto output = state.demosaic_net->forward(state.demosaic_seed.data);
    auto loss = loss_masked(output, targets.noisy_lifted, targets.mask);
    const double value = loss.item<double>();
    if (std::isfinite(value)) loss.backward();
    return StepOutcome{output.detach(), LossTerms{0.0, value, value}};
  };
  return optimize(truth, config, state, optimizer, step, observer);
}

TrainResult train(const RgbImage& truth, const NoisyObservation& observation,
                  const TrainConfig& config, const IterationObserver& observer) {
  switch (config.method) {
    case Method::ours: return train_joint(truth, observation, config, observer);
    case Method::dm_dm: return train_dm_dm(truth, observation, config, observer);
    case Method::dip_u:
    case Method::dip_n: return train_single_dip(truth, observation, config, observer);
  }
  throw ConfigError("unknown method");
}

}  // namespace jdd
