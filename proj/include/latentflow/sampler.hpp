#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "latentflow/conditions.hpp"
#include "latentflow/predictor.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

class Rng;

enum class GuidanceMode { None, Single, Incremental };

struct GuidanceSpec {
  GuidanceMode mode = GuidanceMode::Incremental;
  double gamma = 1.0;    ///< single-scale CFV
  double gamma_a = 2.0;  ///< incremental: audio
  double gamma_e = 1.0;  ///< incremental: emotion

  static GuidanceSpec none() { return {GuidanceMode::None}; }
  static GuidanceSpec single(double gamma) { return {GuidanceMode::Single, gamma}; }
  static GuidanceSpec incremental(double gamma_a, double gamma_e) {
    return {GuidanceMode::Incremental, 1.0, gamma_a, gamma_e};
  }

  /// Predictor calls per field evaluation: 1, 2 or 3.
  std::size_t evaluations_per_step() const;
  /// Throws ConfigError on non-finite scales.
  void validate() const;
  std::string describe() const;
};

GuidanceMode parse_guidance_mode(const std::string& name);
std::string to_string(GuidanceMode mode);

/// Masks used by the guidance recombinations. Null conditioning drops the
/// source, emotion and audio channels.
DropoutMask null_condition();
DropoutMask without_emotion();
DropoutMask without_audio_emotion();

/// One raw predictor evaluation under a null-token mask.
Tensor2 evaluate(const VectorFieldPredictor& predictor, const Tensor2& x, const ConditionInputs& inputs,
                 double t, const DropoutMask& mask);

/// gamma v(x, c) + (1 - gamma) v(x, null). `base` is OR-ed into both masks.
Tensor2 cfv(const VectorFieldPredictor& predictor, const Tensor2& x, const ConditionInputs& inputs,
            double t, double gamma, const DropoutMask& base = {});

/// v(c\{a,e}) + gamma_a [v(c\{e}) - v(c\{a,e})] + gamma_e [v(c) - v(c\{e})].
Tensor2 incremental_cfv(const VectorFieldPredictor& predictor, const Tensor2& x,
                        const ConditionInputs& inputs, double t, double gamma_a, double gamma_e,
                        const DropoutMask& base = {});

/// Guided network output as a function of (x, network time) with a call
/// counter. The network time is the flow time for flow matching and the
/// normalized step for the diffusion baselines.
class GuidedField {
 public:
  GuidedField(const VectorFieldPredictor& predictor, ConditionInputs inputs, GuidanceSpec guidance,
              DropoutMask base = {});

  Tensor2 operator()(const Tensor2& x, double t);

  std::size_t evaluations() const { return evaluations_; }
  const ConditionInputs& inputs() const { return inputs_; }

 private:
  const VectorFieldPredictor* predictor_;
  ConditionInputs inputs_;
  GuidanceSpec guidance_;
  DropoutMask base_;
  std::size_t evaluations_ = 0;
};

using FieldFn = std::function<Tensor2(const Tensor2& x, double t)>;
/// Applied to every state after it is produced (including the start).
using ClampFn = std::function<void(Tensor2& x)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<Tensor2> states;

  const Tensor2& final_state() const { return states.back(); }
};

enum class Solver { Euler, Midpoint };
Solver parse_solver(const std::string& name);
std::string to_string(Solver solver);

/// Uniform grid t_k = k / nfe, x_{k+1} = x_k + field(x_k, t_k) / nfe.
/// Throws ConfigError for nfe = 0 and NumericalError (naming the step) on a
/// non-finite field.
Trajectory euler_integrate(const FieldFn& field, Tensor2 x0, std::size_t nfe, const ClampFn& clamp = {});
/// Explicit midpoint rule on the same grid, two field calls per step.
Trajectory midpoint_integrate(const FieldFn& field, Tensor2 x0, std::size_t nfe,
                              const ClampFn& clamp = {});
Trajectory integrate(Solver solver, const FieldFn& field, Tensor2 x0, std::size_t nfe,
                     const ClampFn& clamp = {});

/// Context carried between sliding windows.
struct WindowState {
  Tensor2 preceding_motion;  ///< L' x d
  Tensor2 preceding_audio;   ///< L' x d_a
  Tensor2 preceding_extra;   ///< L' x d_x, empty when unused
  std::size_t window_index = 0;

  bool has_predecessor() const { return window_index > 0; }
  static WindowState initial(const PredictorConfig& config);
};

struct SamplingOptions {
  GuidanceSpec guidance;
  std::size_t nfe = 10;
  Solver solver = Solver::Euler;
  bool clamp_preceding = true;
  bool keep_trajectory = false;
};

struct WindowResult {
  Tensor2 latents;  ///< L x d
  WindowState next;
  std::size_t evaluations = 0;
  double integrate_seconds = 0.0;
  Trajectory trajectory;  ///< filled when keep_trajectory is set
};

/// Samples one window. `drive.audio` (and `drive.extra`) span L' + L rows;
/// their first L' rows are replaced by the state's preceding slices. The
/// first window sets the null-preceding flag and uses zero context.
WindowResult generate_window(const VectorFieldPredictor& predictor, const WindowState& state,
                             const ConditionInputs& drive, const SamplingOptions& options, Rng& rng);

struct SequenceResult {
  Tensor2 latents;  ///< (windows * L) x d
  std::vector<WindowResult> windows;
  std::size_t evaluations = 0;
  double integrate_seconds = 0.0;
};

/// Sliding-window generation over `windows` windows of L frames each.
/// `audio` (and `extra`) need at least windows * L rows.
SequenceResult generate_sequence(const VectorFieldPredictor& predictor, const Tensor2& audio,
                                 const std::vector<double>& emotion,
                                 const std::vector<double>& source_motion, std::size_t windows,
                                 const SamplingOptions& options, Rng& rng, const Tensor2& extra = {});

/// One-hot label at `target_index`; throws IndexError outside 0..6.
std::vector<double> redirect_emotion(const std::vector<double>& predicted, std::size_t target_index);

}  // namespace latentflow
