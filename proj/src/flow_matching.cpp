#include "latentflow/flow_matching.hpp"

#include <cmath>
#include <numbers>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

void require_same(const Tensor2& a, const Tensor2& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

double mean_abs_diff(const Tensor2& a, const Tensor2& b) {
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values()[i] - b.values()[i]);
  return s / static_cast<double>(a.size());
}

void check_split(const Tensor2& predicted, const Tensor2& target_u, const Tensor2& preceding) {
  if (predicted.rows() != preceding.rows() + target_u.rows() || predicted.cols() != target_u.cols() ||
      (preceding.rows() > 0 && preceding.cols() != predicted.cols())) {
    throw ShapeError("prediction " + predicted.shape_string() + " does not split into preceding " +
                     preceding.shape_string() + " and generated " + target_u.shape_string());
  }
}

}  // namespace

void TrainingItem::validate(std::size_t window, std::size_t preceding) const {
  const std::size_t frames = window + preceding;
  if (target_motion.rows() != window) throw ShapeError("target motion " + target_motion.shape_string());
  if (preceding_motion.rows() != preceding || preceding_motion.cols() != target_motion.cols()) {
    throw ShapeError("preceding motion " + preceding_motion.shape_string());
  }
  if (inputs.audio.rows() != frames) throw ShapeError("audio " + inputs.audio.shape_string());
  if (!inputs.extra.empty() && inputs.extra.rows() != frames) {
    throw ShapeError("extra channel " + inputs.extra.shape_string());
  }
  if (inputs.emotion.size() != kEmotionCount) throw ShapeError("emotion label length");
  double total = 0.0;
  for (double p : inputs.emotion) {
    if (p < 0.0) throw DataError("negative emotion probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw DataError("emotion label does not sum to 1");
}

FlowPoint ot_interpolate(const Tensor2& x0, const Tensor2& x1, double t) {
  require_same(x0, x1, "ot_interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw DegenerateError("flow time outside [0,1]");
  FlowPoint p{t, Tensor2(x0.rows(), x0.cols())};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    p.x.values()[i] = (1.0 - t) * x0.values()[i] + t * x1.values()[i];
  }
  return p;
}

Tensor2 target_field(const Tensor2& x0, const Tensor2& x1) {
  require_same(x0, x1, "target_field");
  return x1 - x0;
}

Tensor2 target_field(const Tensor2& x0, const Tensor2& x1, double /*t*/) { return target_field(x0, x1); }

double conditional_path_logpdf(const Tensor2& x, const Tensor2& x1, double t) {
  require_same(x, x1, "conditional_path_logpdf");
  if (!(t >= 0.0 && t < 1.0)) throw DegenerateError("conditional path is degenerate at t >= 1");
  const double sigma = 1.0 - t;
  const double n = static_cast<double>(x.size());
  double quad = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x.values()[i] - t * x1.values()[i]) / sigma;
    quad += z * z;
  }
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) - 0.5 * quad;
}

double cfm_loss(const Tensor2& predicted, const Tensor2& target_u, const Tensor2& preceding_target) {
  check_split(predicted, target_u, preceding_target);
  const std::size_t lp = preceding_target.rows();
  return mean_abs_diff(predicted.slice_rows(lp, predicted.rows()), target_u) +
         mean_abs_diff(predicted.slice_rows(0, lp), preceding_target);
}

Var cfm_loss(Var predicted, const Tensor2& target_u, const Tensor2& preceding_target) {
  const Tensor2& pv = predicted.value();
  check_split(pv, target_u, preceding_target);
  Graph& g = *predicted.graph;
  const std::size_t lp = preceding_target.rows();
  Var generated = mean_abs(slice_rows(predicted, lp, pv.rows()) - g.constant(target_u));
  if (lp == 0) return generated;
  return generated + mean_abs(slice_rows(predicted, 0, lp) - g.constant(preceding_target));
}

double velocity_loss(const Tensor2& predicted, const Tensor2& stitched_target) {
  require_same(predicted, stitched_target, "velocity_loss");
  if (predicted.rows() < 2) throw ShapeError("velocity loss needs at least 2 frames");
  double s = 0.0;
  for (std::size_t l = 0; l + 1 < predicted.rows(); ++l) {
    for (std::size_t c = 0; c < predicted.cols(); ++c) {
      s += std::abs((predicted(l + 1, c) - predicted(l, c)) -
                    (stitched_target(l + 1, c) - stitched_target(l, c)));
    }
  }
  return s / static_cast<double>((predicted.rows() - 1) * predicted.cols());
}

Var velocity_loss(Var predicted, const Tensor2& stitched_target) {
  require_same(predicted.value(), stitched_target, "velocity_loss");
  if (stitched_target.rows() < 2) throw ShapeError("velocity loss needs at least 2 frames");
  Graph& g = *predicted.graph;
  return mean_abs(row_diff(predicted) - row_diff(g.constant(stitched_target)));
}

double total_loss(double cfm, double velocity, double lambda_ot, double lambda_vel) {
  return lambda_ot * cfm + lambda_vel * velocity;
}

Var total_loss(Var cfm, Var velocity, double lambda_ot, double lambda_vel) {
  return scale(cfm, lambda_ot) + scale(velocity, lambda_vel);
}

DropoutMask sample_dropout(Rng& rng, const DropoutProbabilities& p) {
  DropoutMask m;
  m.drop_source = rng.bernoulli(p.source);
  m.drop_emotion = rng.bernoulli(p.emotion);
  m.drop_audio = rng.bernoulli(p.audio);
  m.drop_preceding = rng.bernoulli(p.preceding);
  return m;
}

}  // namespace latentflow
