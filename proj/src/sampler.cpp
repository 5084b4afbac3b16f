#include "latentflow/sampler.hpp"

#include <chrono>
#include <cmath>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

std::size_t GuidanceSpec::evaluations_per_step() const {
  switch (mode) {
    case GuidanceMode::None: return 1;
    case GuidanceMode::Single: return 2;
    case GuidanceMode::Incremental: return 3;
  }
  return 1;
}

void GuidanceSpec::validate() const {
  if (!std::isfinite(gamma) || !std::isfinite(gamma_a) || !std::isfinite(gamma_e)) {
    throw ConfigError("guidance scales must be finite");
  }
}

std::string GuidanceSpec::describe() const {
  switch (mode) {
    case GuidanceMode::None: return "none";
    case GuidanceMode::Single: return "single(gamma=" + std::to_string(gamma) + ")";
    case GuidanceMode::Incremental:
      return "incremental(gamma_a=" + std::to_string(gamma_a) + ", gamma_e=" + std::to_string(gamma_e) + ")";
  }
  return "?";
}

GuidanceMode parse_guidance_mode(const std::string& name) {
  if (name == "none") return GuidanceMode::None;
  if (name == "single") return GuidanceMode::Single;
  if (name == "incremental") return GuidanceMode::Incremental;
  throw ConfigError("unknown guidance mode '" + name + "'");
}

std::string to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::None: return "none";
    case GuidanceMode::Single: return "single";
    case GuidanceMode::Incremental: return "incremental";
  }
  return "?";
}

DropoutMask null_condition() { return {true, true, true, false}; }
DropoutMask without_emotion() { return {false, true, false, false}; }
DropoutMask without_audio_emotion() { return {false, true, true, false}; }

Tensor2 evaluate(const VectorFieldPredictor& predictor, const Tensor2& x, const ConditionInputs& inputs,
                 double t, const DropoutMask& mask) {
  return predictor.predict_field(x, predictor.to_condition(inputs, t, mask));
}

Tensor2 cfv(const VectorFieldPredictor& predictor, const Tensor2& x, const ConditionInputs& inputs,
            double t, double gamma, const DropoutMask& base) {
  const Tensor2 conditional = evaluate(predictor, x, inputs, t, base);
  const Tensor2 unconditional = evaluate(predictor, x, inputs, t, base | null_condition());
  return gamma * conditional + (1.0 - gamma) * unconditional;
}

Tensor2 incremental_cfv(const VectorFieldPredictor& predictor, const Tensor2& x,
                        const ConditionInputs& inputs, double t, double gamma_a, double gamma_e,
                        const DropoutMask& base) {
  const Tensor2 bare = evaluate(predictor, x, inputs, t, base | without_audio_emotion());
  const Tensor2 audio = evaluate(predictor, x, inputs, t, base | without_emotion());
  const Tensor2 full = evaluate(predictor, x, inputs, t, base);
  return bare + gamma_a * (audio - bare) + gamma_e * (full - audio);
}

GuidedField::GuidedField(const VectorFieldPredictor& predictor, ConditionInputs inputs,
                         GuidanceSpec guidance, DropoutMask base)
    : predictor_(&predictor), inputs_(std::move(inputs)), guidance_(guidance), base_(base) {
  guidance_.validate();
}

Tensor2 GuidedField::operator()(const Tensor2& x, double t) {
  evaluations_ += guidance_.evaluations_per_step();
  switch (guidance_.mode) {
    case GuidanceMode::None: return evaluate(*predictor_, x, inputs_, t, base_);
    case GuidanceMode::Single: return cfv(*predictor_, x, inputs_, t, guidance_.gamma, base_);
    case GuidanceMode::Incremental:
      return incremental_cfv(*predictor_, x, inputs_, t, guidance_.gamma_a, guidance_.gamma_e, base_);
  }
  throw StateError("unreachable guidance mode");
}

Solver parse_solver(const std::string& name) {
  if (name == "euler") return Solver::Euler;
  if (name == "midpoint") return Solver::Midpoint;
  throw ConfigError("unknown solver '" + name + "'");
}

std::string to_string(Solver solver) { return solver == Solver::Euler ? "euler" : "midpoint"; }

namespace {

Tensor2 checked(Tensor2 v, std::size_t step) {
  if (!v.all_finite()) throw NumericalError("non-finite field at step " + std::to_string(step));
  return v;
}

template <typename Step>
Trajectory run_grid(Tensor2 x0, std::size_t nfe, const ClampFn& clamp, Step step) {
  if (nfe == 0) throw ConfigError("nfe must be at least 1");
  Trajectory out;
  if (clamp) clamp(x0);
  out.times.push_back(0.0);
  out.states.push_back(std::move(x0));
  const double dt = 1.0 / static_cast<double>(nfe);
  for (std::size_t k = 0; k < nfe; ++k) {
    const double t = static_cast<double>(k) * dt;
    Tensor2 next = step(out.states.back(), t, dt, k);
    if (clamp) clamp(next);
    out.times.push_back(static_cast<double>(k + 1) * dt);
    out.states.push_back(std::move(next));
  }
  return out;
}

}  // namespace

Trajectory euler_integrate(const FieldFn& field, Tensor2 x0, std::size_t nfe, const ClampFn& clamp) {
  return run_grid(std::move(x0), nfe, clamp,
                  [&](const Tensor2& x, double t, double dt, std::size_t k) {
                    return x + dt * checked(field(x, t), k);
                  });
}

Trajectory midpoint_integrate(const FieldFn& field, Tensor2 x0, std::size_t nfe, const ClampFn& clamp) {
  return run_grid(std::move(x0), nfe, clamp,
                  [&](const Tensor2& x, double t, double dt, std::size_t k) {
                    Tensor2 half = x + (0.5 * dt) * checked(field(x, t), k);
                    if (clamp) clamp(half);
                    return x + dt * checked(field(half, t + 0.5 * dt), k);
                  });
}

Trajectory integrate(Solver solver, const FieldFn& field, Tensor2 x0, std::size_t nfe,
                     const ClampFn& clamp) {
  return solver == Solver::Euler ? euler_integrate(field, std::move(x0), nfe, clamp)
                                 : midpoint_integrate(field, std::move(x0), nfe, clamp);
}

WindowState WindowState::initial(const PredictorConfig& config) {
  WindowState s;
  s.preceding_motion = Tensor2(config.preceding, config.latent_dim);
  s.preceding_audio = Tensor2(config.preceding, config.audio_dim);
  if (config.extra_dims > 0) s.preceding_extra = Tensor2(config.preceding, config.extra_dims);
  return s;
}

WindowResult generate_window(const VectorFieldPredictor& predictor, const WindowState& state,
                             const ConditionInputs& drive, const SamplingOptions& options, Rng& rng) {
  const PredictorConfig& c = predictor.config();
  const std::size_t lp = c.preceding;
  if (drive.audio.rows() != c.frames()) {
    throw ShapeError("audio window has " + std::to_string(drive.audio.rows()) + " rows, expected " +
                     std::to_string(c.frames()));
  }
  if (state.preceding_motion.rows() != lp || state.preceding_motion.cols() != c.latent_dim) {
    throw ShapeError("preceding motion " + state.preceding_motion.shape_string());
  }

  ConditionInputs inputs = drive;
  if (lp > 0) {
    inputs.audio.set_rows(0, state.preceding_audio);
    if (c.extra_dims > 0) inputs.extra.set_rows(0, state.preceding_extra);
  }

  DropoutMask base;
  base.drop_preceding = !state.has_predecessor();
  GuidedField field(predictor, inputs, options.guidance, base);

  const Tensor2 known = state.preceding_motion;
  Tensor2 x0 = Tensor2::normal(c.frames(), c.latent_dim, rng);
  if (lp > 0) x0.set_rows(0, known);
  ClampFn clamp;
  if (options.clamp_preceding && lp > 0) clamp = [&known](Tensor2& x) { x.set_rows(0, known); };

  const auto start = std::chrono::steady_clock::now();
  Trajectory path = integrate(options.solver, std::ref(field), std::move(x0), options.nfe, clamp);
  const auto stop = std::chrono::steady_clock::now();

  WindowResult out;
  out.latents = path.final_state().slice_rows(lp, c.frames());
  out.evaluations = field.evaluations();
  out.integrate_seconds = std::chrono::duration<double>(stop - start).count();
  out.next.window_index = state.window_index + 1;
  out.next.preceding_motion = out.latents.slice_rows(c.window - lp, c.window);
  out.next.preceding_audio = inputs.audio.slice_rows(c.window, c.frames());
  if (c.extra_dims > 0) out.next.preceding_extra = inputs.extra.slice_rows(c.window, c.frames());
  if (options.keep_trajectory) out.trajectory = std::move(path);
  return out;
}

SequenceResult generate_sequence(const VectorFieldPredictor& predictor, const Tensor2& audio,
                                 const std::vector<double>& emotion,
                                 const std::vector<double>& source_motion, std::size_t windows,
                                 const SamplingOptions& options, Rng& rng, const Tensor2& extra) {
  const PredictorConfig& c = predictor.config();
  if (windows == 0) throw ConfigError("windows must be at least 1");
  if (audio.rows() < windows * c.window) {
    throw ShapeError("audio has " + std::to_string(audio.rows()) + " rows, need " +
                     std::to_string(windows * c.window));
  }
  if (c.extra_dims > 0 && extra.rows() < windows * c.window) {
    throw ShapeError("extra channel has " + std::to_string(extra.rows()) + " rows");
  }
  if (c.window < c.preceding) throw ConfigError("window shorter than the preceding context");

  SequenceResult out;
  out.latents = Tensor2(windows * c.window, c.latent_dim);
  WindowState state = WindowState::initial(c);
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t begin = w * c.window;
    ConditionInputs drive;
    drive.audio = concat_rows(Tensor2(c.preceding, c.audio_dim), audio.slice_rows(begin, begin + c.window));
    if (c.extra_dims > 0) {
      drive.extra = concat_rows(Tensor2(c.preceding, c.extra_dims), extra.slice_rows(begin, begin + c.window));
    }
    drive.emotion = emotion;
    drive.source_motion = source_motion;
    WindowResult r = generate_window(predictor, state, drive, options, rng);
    out.latents.set_rows(begin, r.latents);
    out.evaluations += r.evaluations;
    out.integrate_seconds += r.integrate_seconds;
    state = r.next;
    out.windows.push_back(std::move(r));
  }
  return out;
}

std::vector<double> redirect_emotion(const std::vector<double>& predicted, std::size_t target_index) {
  if (target_index >= kEmotionCount) {
    throw IndexError("emotion index " + std::to_string(target_index) + " outside 0..6");
  }
  if (predicted.size() != kEmotionCount) {
    throw ShapeError("emotion label length " + std::to_string(predicted.size()));
  }
  std::vector<double> out(kEmotionCount, 0.0);
  out[target_index] = 1.0;
  return out;
}

}  // namespace latentflow
