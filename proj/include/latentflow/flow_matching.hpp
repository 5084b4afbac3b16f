#pragma once

#include <cstddef>
#include <vector>

#include "latentflow/autodiff.hpp"
#include "latentflow/conditions.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

class Rng;

/// A point on the straight-line probability path.
struct FlowPoint {
  double t = 0.0;
  Tensor2 x;
};

/// One supervised window: L target frames, the L' frames before them, and
/// the driving signals over all L' + L frames.
struct TrainingItem {
  Tensor2 target_motion;     ///< L x d
  Tensor2 preceding_motion;  ///< L' x d (zeros for a first window)
  ConditionInputs inputs;
  bool has_predecessor = false;

  /// Throws ShapeError/DataError when lengths or the emotion simplex are off.
  void validate(std::size_t window, std::size_t preceding) const;
};

/// (1 - t) x0 + t x1. Exact at both endpoints.
FlowPoint ot_interpolate(const Tensor2& x0, const Tensor2& x1, double t);

/// Conditional target velocity x1 - x0; constant along the path.
Tensor2 target_field(const Tensor2& x0, const Tensor2& x1);
/// Same field; `t` is accepted for interface symmetry and ignored.
Tensor2 target_field(const Tensor2& x0, const Tensor2& x1, double t);

/// log N(x | t x1, (1 - t)^2 I) summed over all entries. Throws
/// DegenerateError unless 0 <= t < 1.
double conditional_path_logpdf(const Tensor2& x, const Tensor2& x1, double t);

/// Mean L1 of the generated rows against `target_u` plus mean L1 of the
/// preceding rows against `preceding_target`.
double cfm_loss(const Tensor2& predicted, const Tensor2& target_u, const Tensor2& preceding_target);
Var cfm_loss(Var predicted, const Tensor2& target_u, const Tensor2& preceding_target);

/// Mean L1 between one-frame differences of prediction and stitched target.
double velocity_loss(const Tensor2& predicted, const Tensor2& stitched_target);
Var velocity_loss(Var predicted, const Tensor2& stitched_target);

double total_loss(double cfm, double velocity, double lambda_ot, double lambda_vel);
Var total_loss(Var cfm, Var velocity, double lambda_ot, double lambda_vel);

struct DropoutProbabilities {
  double source = 0.1;
  double emotion = 0.1;
  double audio = 0.1;
  double preceding = 0.5;
};

/// Independent Bernoulli draws in the fixed order source, emotion, audio,
/// preceding.
DropoutMask sample_dropout(Rng& rng, const DropoutProbabilities& p = {});

}  // namespace latentflow
