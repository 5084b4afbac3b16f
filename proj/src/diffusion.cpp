#include "latentflow/diffusion.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

NoiseSchedule NoiseSchedule::cosine(std::size_t steps, double s, double max_beta) {
  if (steps == 0) throw ConfigError("schedule needs at least one step");
  auto f = [&](double t) {
    const double angle = (t / static_cast<double>(steps) + s) / (1.0 + s) * std::numbers::pi / 2.0;
    return std::cos(angle) * std::cos(angle);
  };
  NoiseSchedule out;
  out.alpha_bars_.push_back(1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double beta = std::min(1.0 - f(static_cast<double>(t)) / f(static_cast<double>(t - 1)), max_beta);
    out.betas_.push_back(beta);
    out.alpha_bars_.push_back(out.alpha_bars_.back() * (1.0 - beta));
  }
  return out;
}

double NoiseSchedule::beta(std::size_t t) const {
  if (t < 1 || t > steps()) throw IndexError("diffusion step " + std::to_string(t));
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t > steps()) throw IndexError("diffusion step " + std::to_string(t));
  return alpha_bars_[t];
}

namespace {

void check_step(std::size_t t, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.steps()) {
    throw IndexError("diffusion step " + std::to_string(t) + " outside 1.." + std::to_string(schedule.steps()));
  }
}

}  // namespace

Tensor2 forward_noise(const Tensor2& x0, std::size_t t, const Tensor2& eps, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Tensor2 forward_step(const Tensor2& x_prev, std::size_t t, const Tensor2& eps, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double b = schedule.beta(t);
  return std::sqrt(1.0 - b) * x_prev + std::sqrt(b) * eps;
}

Tensor2 x0_from_eps(const Tensor2& x_t, const Tensor2& eps, std::size_t t, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double ab = schedule.alpha_bar(t);
  return (1.0 / std::sqrt(ab)) * (x_t - std::sqrt(1.0 - ab) * eps);
}

Tensor2 eps_from_x0(const Tensor2& x_t, const Tensor2& x0, std::size_t t, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const double ab = schedule.alpha_bar(t);
  return (1.0 / std::sqrt(1.0 - ab)) * (x_t - std::sqrt(ab) * x0);
}

std::string to_string(Parameterization p) {
  switch (p) {
    case Parameterization::Flow: return "flow";
    case Parameterization::Epsilon: return "eps";
    case Parameterization::Sample: return "x0";
  }
  return "?";
}

Parameterization parse_parameterization(const std::string& name) {
  if (name == "flow") return Parameterization::Flow;
  if (name == "eps") return Parameterization::Epsilon;
  if (name == "x0") return Parameterization::Sample;
  throw ConfigError("unknown parameterization '" + name + "'");
}

double loss_eps(const Tensor2& predicted, const Tensor2& eps) {
  if (!predicted.same_shape(eps)) throw ShapeError("loss_eps: " + predicted.shape_string() + " vs " + eps.shape_string());
  double s = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double r = predicted.values()[i] - eps.values()[i];
    s += r * r;
  }
  return s / static_cast<double>(eps.size());
}

Var loss_eps(Var predicted, const Tensor2& eps) {
  if (!predicted.value().same_shape(eps)) throw ShapeError("loss_eps: " + predicted.value().shape_string());
  return mean_square(predicted - predicted.graph->constant(eps));
}

double loss_x0(const Tensor2& predicted, const Tensor2& x0) {
  if (!predicted.same_shape(x0)) throw ShapeError("loss_x0: " + predicted.shape_string() + " vs " + x0.shape_string());
  if (x0.rows() < 2) throw ShapeError("loss_x0 needs at least 2 frames");
  double vel = 0.0;
  for (std::size_t l = 0; l + 1 < x0.rows(); ++l) {
    for (std::size_t c = 0; c < x0.cols(); ++c) {
      const double r = (predicted(l + 1, c) - predicted(l, c)) - (x0(l + 1, c) - x0(l, c));
      vel += r * r;
    }
  }
  return loss_eps(predicted, x0) + vel / static_cast<double>((x0.rows() - 1) * x0.cols());
}

Var loss_x0(Var predicted, const Tensor2& x0) {
  if (!predicted.value().same_shape(x0)) throw ShapeError("loss_x0: " + predicted.value().shape_string());
  if (x0.rows() < 2) throw ShapeError("loss_x0 needs at least 2 frames");
  const Var target = predicted.graph->constant(x0);
  return mean_square(predicted - target) + mean_square(row_diff(predicted) - row_diff(target));
}

double diffusion_time(std::size_t t, const NoiseSchedule& schedule) {
  return static_cast<double>(t) / static_cast<double>(schedule.steps());
}

std::vector<std::size_t> ddim_timesteps(std::size_t steps, std::size_t count) {
  if (count == 0 || count > steps) {
    throw ConfigError("DDIM step count " + std::to_string(count) + " for a " + std::to_string(steps) + "-step schedule");
  }
  const std::size_t stride = steps / count;
  std::vector<std::size_t> out;
  for (std::size_t k = count; k-- > 0;) out.push_back(1 + k * stride);
  return out;
}

Tensor2 ddim_sample(const DenoiseFn& denoise, Parameterization parameterization,
                    const NoiseSchedule& schedule, Tensor2 x_T, std::size_t count, const ClampFn& clamp) {
  if (parameterization == Parameterization::Flow) throw ConfigError("DDIM needs an eps or x0 model");
  const std::vector<std::size_t> steps = ddim_timesteps(schedule.steps(), count);
  Tensor2 x = std::move(x_T);
  if (clamp) clamp(x);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::size_t t = steps[i];
    const Tensor2 out = denoise(x, t);
    if (!out.all_finite()) throw NumericalError("non-finite denoiser output at DDIM step " + std::to_string(i));
    Tensor2 x0_hat;
    Tensor2 eps_hat;
    if (parameterization == Parameterization::Epsilon) {
      eps_hat = out;
      x0_hat = x0_from_eps(x, eps_hat, t, schedule);
    } else {
      x0_hat = out;
      eps_hat = eps_from_x0(x, x0_hat, t, schedule);
    }
    const double ab_prev = i + 1 < steps.size() ? schedule.alpha_bar(steps[i + 1]) : 1.0;
    x = std::sqrt(ab_prev) * x0_hat + std::sqrt(1.0 - ab_prev) * eps_hat;
    if (clamp) clamp(x);
    if (!x.all_finite()) throw NumericalError("non-finite state at DDIM step " + std::to_string(i));
  }
  return x;
}

DdimWindowResult ddim_window(const VectorFieldPredictor& predictor, Parameterization parameterization,
                             const NoiseSchedule& schedule, std::size_t count, const WindowState& state,
                             const ConditionInputs& drive, const GuidanceSpec& guidance, Rng& rng,
                             bool clamp_preceding) {
  const PredictorConfig& c = predictor.config();
  const std::size_t lp = c.preceding;
  if (drive.audio.rows() != c.frames()) throw ShapeError("audio window " + drive.audio.shape_string());

  ConditionInputs inputs = drive;
  if (lp > 0) {
    inputs.audio.set_rows(0, state.preceding_audio);
    if (c.extra_dims > 0) inputs.extra.set_rows(0, state.preceding_extra);
  }
  DropoutMask base;
  base.drop_preceding = !state.has_predecessor();
  GuidedField field(predictor, inputs, guidance, base);

  const Tensor2 known = state.preceding_motion;
  ClampFn clamp;
  if (clamp_preceding && lp > 0) clamp = [&known](Tensor2& x) { x.set_rows(0, known); };
  Tensor2 x_T = Tensor2::normal(c.frames(), c.latent_dim, rng);
  if (lp > 0) x_T.set_rows(0, known);

  const auto start = std::chrono::steady_clock::now();
  const Tensor2 x = ddim_sample(
      [&](const Tensor2& xt, std::size_t t) { return field(xt, diffusion_time(t, schedule)); },
      parameterization, schedule, std::move(x_T), count, clamp);
  const auto stop = std::chrono::steady_clock::now();

  DdimWindowResult out;
  out.latents = x.slice_rows(lp, c.frames());
  out.evaluations = field.evaluations();
  out.integrate_seconds = std::chrono::duration<double>(stop - start).count();
  out.next.window_index = state.window_index + 1;
  out.next.preceding_motion = out.latents.slice_rows(c.window - lp, c.window);
  out.next.preceding_audio = inputs.audio.slice_rows(c.window, c.frames());
  if (c.extra_dims > 0) out.next.preceding_extra = inputs.extra.slice_rows(c.window, c.frames());
  return out;
}

}  // namespace latentflow
