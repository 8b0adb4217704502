#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "jdd/bayer.hpp"
#include "jdd/dip_model.hpp"
#include "jdd/image.hpp"
#include "jdd/metrics.hpp"
#include "jdd/noise.hpp"

namespace jdd {

/// ours: denoising + demosaicing networks under the square-root joint loss.
/// dip_u / dip_n: one demosaicing network fit to the masked observation, with
/// a uniform / normal input seed.
/// dm_dm: ours with the 1-channel denoiser replaced by a second 3-channel
/// demosaicing network.
enum class Method { ours, dip_u, dip_n, dm_dm };

[[nodiscard]] std::string to_string(Method method);
/// Throws ConfigError for unknown names.
[[nodiscard]] Method parse_method(const std::string& name);

struct TrainConfig {
  Method method = Method::ours;
  double alpha = 0.1;
  double lr_dn = 5e-3;
  double lr_dm = 5e-2;  ///< every demosaicing network, including baselines and both dm_dm nets
  int iterations = 5000;
  double smoothing_beta = 0.99;
  int eval_every = 100;  ///< 0 evaluates only the final iterate
  Architecture architecture = Architecture::reference();
  SeedSpec normal_seed{SeedDistribution::normal, 0.1};
  SeedSpec uniform_seed{SeedDistribution::uniform, 0.1};
  /// Detach the denoiser output inside the demosaicing loss so that term
  /// updates only the demosaicing network.
  bool stop_gradient_guide = false;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError on alpha < 0, non-positive learning rates or
  /// iterations, smoothing_beta outside (0,1), or an invalid architecture.
  void validate() const;
};

struct LossTerms {
  double dn = 0.0;
  double dm = 0.0;
  double joint = 0.0;
  friend bool operator==(const LossTerms&, const LossTerms&) = default;
};

/// Raised when the objective becomes non-finite; carries the last state seen.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int iteration, LossTerms losses);
  [[nodiscard]] int iteration() const noexcept { return iteration_; }
  [[nodiscard]] const LossTerms& losses() const noexcept { return losses_; }

 private:
  int iteration_;
  LossTerms losses_;
};

// --- Objectives -------------------------------------------------------------

/// Mean squared error between the noisy RAW and the denoiser output, both
/// 1 x 1 x H x W. Throws DimensionError on shape mismatch.
[[nodiscard]] torch::Tensor loss_dn(const torch::Tensor& denoised, const torch::Tensor& noisy_raw);

/// mse(guide . m, out . m) + alpha * mse(noisy_lifted . m, out . m), each mean
/// taken over all 3HW entries. A 1-channel guide is lifted onto the Bayer grid
/// (broadcasting against m is exactly the lifting operator). Gradients reach
/// the guide unless the caller detaches it.
[[nodiscard]] torch::Tensor loss_dm(const torch::Tensor& guide, const torch::Tensor& demosaiced,
                                    const torch::Tensor& noisy_lifted, const torch::Tensor& mask,
                                    double alpha);

/// sqrt(l_dn) + sqrt(l_dm).
[[nodiscard]] torch::Tensor loss_joint(const torch::Tensor& l_dn, const torch::Tensor& l_dm);
/// Scalar form; throws NumericError on negative or non-finite inputs.
[[nodiscard]] double loss_joint(double l_dn, double l_dm);

/// Masked fit used by the single-network baselines: mse(noisy_lifted . m, out . m).
[[nodiscard]] torch::Tensor loss_masked(const torch::Tensor& demosaiced,
                                        const torch::Tensor& noisy_lifted,
                                        const torch::Tensor& mask);

/// Observation tensors shared by every objective.
struct Targets {
  torch::Tensor noisy_raw;     ///< 1 x 1 x H x W
  torch::Tensor noisy_lifted;  ///< 1 x 3 x H x W
  torch::Tensor mask;          ///< 1 x 3 x H x W
};

[[nodiscard]] Targets make_targets(const NoisyObservation& observation,
                                   torch::Dtype dtype = torch::kFloat32);

struct JointEvaluation {
  torch::Tensor guide_output;  ///< denoiser (ours) or first demosaicer (dm_dm)
  torch::Tensor output;        ///< demosaicing network output
  torch::Tensor dn;
  torch::Tensor dm;
  torch::Tensor joint;
};

/// One forward pass of the two-network objective. For a 1-channel guide
/// network this is the joint denoise/demosaic loss; for a 3-channel guide
/// (dm_dm) the guide's own term is the masked fit to the observation.
[[nodiscard]] JointEvaluation evaluate_joint(DipNetwork& guide_net, DipNetwork& demosaic_net,
                                             const torch::Tensor& guide_seed,
                                             const torch::Tensor& demosaic_seed,
                                             const Targets& targets, double alpha,
                                             bool stop_gradient_guide = false);

// --- Training ---------------------------------------------------------------

/// Networks, fixed seeds and running state of one optimization run. For the
/// single-network baselines `guide_net` is empty.
struct TrainState {
  DipNetwork guide_net{nullptr};
  DipNetwork demosaic_net{nullptr};
  SeedTensor guide_seed;
  SeedTensor demosaic_seed;
  torch::Tensor smoothed;  ///< running average of demosaic outputs, float64
  int iteration = 0;
  std::vector<LossTerms> loss_history;
};

/// Builds networks and seeds for `config.method` at the given image size.
[[nodiscard]] TrainState make_train_state(const TrainConfig& config, int height, int width);

struct EvalPoint {
  int iteration = 0;
  MetricResult output;
  MetricResult smoothed;
  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct TrainReport {
  Method method = Method::ours;
  int iterations = 0;
  std::int64_t parameter_count = 0;
  MetricResult final_output;
  MetricResult final_smoothed;
  std::vector<EvalPoint> trajectory;
  std::vector<LossTerms> loss_history;
  /// The running average starts from the first iterate instead of zeros.
  std::string smoothing_init = "first_output";
  double wall_seconds = 0.0;
};

struct TrainResult {
  RgbImage output;    ///< demosaicing network output at the last iteration
  RgbImage smoothed;  ///< running average of outputs ("plus" variant)
  TrainReport report;
};

/// Per-iteration hook; receives detached tensors after the optimizer step.
struct IterationView {
  int iteration;
  const LossTerms& losses;
  const torch::Tensor& output;
  const torch::Tensor& smoothed;
};
using IterationObserver = std::function<void(const IterationView&)>;

/// Joint training of denoiser and demosaicer with one Adam step per
/// iteration over two parameter groups (lr_dn, lr_dm). After each step the
/// running average is updated as s <- beta s + (1 - beta) out, with s
/// initialized to the first output. Throws ConfigError unless method is
/// ours, and DivergenceError on a non-finite loss.
[[nodiscard]] TrainResult train_joint(const RgbImage& truth, const NoisyObservation& observation,
                                      const TrainConfig& config,
                                      const IterationObserver& observer = {});

/// Single demosaicing network (dip_u / dip_n) fit to the masked observation.
[[nodiscard]] TrainResult train_single_dip(const RgbImage& truth,
                                           const NoisyObservation& observation,
                                           const TrainConfig& config,
                                           const IterationObserver& observer = {});

/// Two 3-channel demosaicing networks joined by the square-root loss, both
/// stepped at lr_dm.
[[nodiscard]] TrainResult train_dm_dm(const RgbImage& truth, const NoisyObservation& observation,
                                      const TrainConfig& config,
                                      const IterationObserver& observer = {});

/// Dispatches on config.method.
[[nodiscard]] TrainResult train(const RgbImage& truth, const NoisyObservation& observation,
                                const TrainConfig& config, const IterationObserver& observer = {});

}  // namespace jdd
