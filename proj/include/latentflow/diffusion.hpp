#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "latentflow/autodiff.hpp"
#include "latentflow/sampler.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

/// Discrete noise schedule indexed t = 1..steps; alpha_bar(0) is 1.
class NoiseSchedule {
 public:
  /// Cosine schedule with offset s and betas clipped at max_beta.
  static NoiseSchedule cosine(std::size_t steps = 500, double s = 0.008, double max_beta = 0.999);

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t t) const;       ///< IndexError outside 1..steps
  double alpha_bar(std::size_t t) const;  ///< IndexError outside 0..steps
  const std::vector<double>& betas() const { return betas_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;  ///< alpha_bars_[t], alpha_bars_[0] = 1
};

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps. IndexError unless 1 <= t <= steps.
Tensor2 forward_noise(const Tensor2& x0, std::size_t t, const Tensor2& eps, const NoiseSchedule& schedule);
/// One step of q(x_t | x_{t-1}).
Tensor2 forward_step(const Tensor2& x_prev, std::size_t t, const Tensor2& eps, const NoiseSchedule& schedule);

Tensor2 x0_from_eps(const Tensor2& x_t, const Tensor2& eps, std::size_t t, const NoiseSchedule& schedule);
Tensor2 eps_from_x0(const Tensor2& x_t, const Tensor2& x0, std::size_t t, const NoiseSchedule& schedule);

/// What the shared backbone is trained to output.
enum class Parameterization { Flow, Epsilon, Sample };
std::string to_string(Parameterization p);  ///< "flow", "eps", "x0"
Parameterization parse_parameterization(const std::string& name);

/// Mean squared error against the drawn noise.
double loss_eps(const Tensor2& predicted, const Tensor2& eps);
Var loss_eps(Var predicted, const Tensor2& eps);

/// Mean squared error against the clean sample plus the mean squared error
/// of one-frame differences.
double loss_x0(const Tensor2& predicted, const Tensor2& x0);
Var loss_x0(Var predicted, const Tensor2& x0);

/// Network time input for diffusion step t: t / steps.
double diffusion_time(std::size_t t, const NoiseSchedule& schedule);

/// `count` evenly strided timesteps, descending: 1 + k * (steps / count).
std::vector<std::size_t> ddim_timesteps(std::size_t steps, std::size_t count);

/// Network output (eps or x0 depending on the parameterization) at step t.
using DenoiseFn = std::function<Tensor2(const Tensor2& x, std::size_t t)>;

/// Deterministic DDIM (eta = 0) from x_T. Throws NumericalError on
/// non-finite states.
Tensor2 ddim_sample(const DenoiseFn& denoise, Parameterization parameterization,
                    const NoiseSchedule& schedule, Tensor2 x_T, std::size_t count = 50,
                    const ClampFn& clamp = {});

struct DdimWindowResult {
  Tensor2 latents;  ///< L x d
  WindowState next;
  std::size_t evaluations = 0;
  double integrate_seconds = 0.0;
};

/// Diffusion counterpart of generate_window over the same guidance and
/// preceding-window handling.
DdimWindowResult ddim_window(const VectorFieldPredictor& predictor, Parameterization parameterization,
                             const NoiseSchedule& schedule, std::size_t count, const WindowState& state,
                             const ConditionInputs& drive, const GuidanceSpec& guidance, Rng& rng,
                             bool clamp_preceding = true);

}  // namespace latentflow
