#include "latentflow/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <cmath>
#include <sstream>

#include "latentflow/error.hpp"
#include "latentflow/layers.hpp"
#include "latentflow/rng.hpp"
#include "latentflow/synth_data.hpp"

namespace latentflow {

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train: " + what);
  };
  require(std::isfinite(lr) && lr >= 0.0, "lr must be finite and >= 0");
  require(batch > 0, "batch must be positive");
  require(std::isfinite(lambda_ot) && std::isfinite(lambda_vel) && lambda_ot >= 0.0 && lambda_vel >= 0.0,
          "loss weights must be finite and >= 0");
  for (double p : {dropout.source, dropout.emotion, dropout.audio, dropout.preceding}) {
    require(p >= 0.0 && p <= 1.0, "dropout probabilities must lie in [0, 1]");
  }
  require(log_every > 0, "log_every must be positive");
  require(diffusion_steps > 0, "diffusion_steps must be positive");
}

std::string describe(const ItemDraw& draw) {
  std::ostringstream os;
  os << "item=" << draw.item << " t=" << draw.t << " diffusion_step=" << draw.diffusion_step
     << " drop[source=" << draw.mask.drop_source << " emotion=" << draw.mask.drop_emotion
     << " audio=" << draw.mask.drop_audio << " preceding=" << draw.mask.drop_preceding << "]";
  return os.str();
}

Var item_loss(Graph& g, const VectorFieldPredictor& predictor, const TrainingItem& item,
              const TrainConfig& config, const NoiseSchedule& schedule, Rng& rng, ItemDraw& draw) {
  const PredictorConfig& c = predictor.config();
  item.validate(c.window, c.preceding);

  draw.mask = sample_dropout(rng, config.dropout);
  if (!item.has_predecessor) draw.mask.drop_preceding = true;
  const Tensor2 preceding = draw.mask.drop_preceding ? Tensor2(c.preceding, c.latent_dim) : item.preceding_motion;
  const ConditionInputs inputs = apply_null(item.inputs, draw.mask, c.preceding);
  const Tensor2& x1 = item.target_motion;
  const Tensor2 noise = Tensor2::normal(c.window, c.latent_dim, rng);

  if (config.objective == Parameterization::Flow) {
    draw.t = rng.uniform();
    const Tensor2 x_t = concat_rows(preceding, ot_interpolate(noise, x1, draw.t).x);
    const Tensor2 u = target_field(noise, x1);
    const Var out = predictor.forward(g, x_t, predictor.condition(g, inputs, draw.t));
    return total_loss(cfm_loss(out, u, preceding), velocity_loss(out, concat_rows(preceding, u)),
                      config.lambda_ot, config.lambda_vel);
  }

  draw.diffusion_step = 1 + rng.below(schedule.steps());
  draw.t = diffusion_time(draw.diffusion_step, schedule);
  const Tensor2 x_t = concat_rows(preceding, forward_noise(x1, draw.diffusion_step, noise, schedule));
  const Var out = predictor.forward(g, x_t, predictor.condition(g, inputs, draw.t));
  if (config.objective == Parameterization::Epsilon) {
    return loss_eps(out, concat_rows(Tensor2(c.preceding, c.latent_dim), noise));
  }
  return loss_x0(out, concat_rows(preceding, x1));
}

double TrainReport::final_loss() const {
  if (curve.empty()) throw StateError("no training steps recorded");
  return curve.back().loss;
}

TrainReport train(VectorFieldPredictor& predictor, std::size_t item_count, const ItemSource& items,
                  const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  if (item_count == 0) throw DataError("no training items");
  const NoiseSchedule schedule = NoiseSchedule::cosine(config.diffusion_steps);
  Adam adam(AdamConfig{.lr = config.lr});
  Rng rng(config.seed, 0x7A1);
  TrainReport report;
  const auto start = std::chrono::steady_clock::now();
  double interval = 0.0;
  std::size_t interval_steps = 0;

  for (std::size_t step = 1; step <= config.steps; ++step) {
    Gradients total{std::vector<double>(predictor.params().size(), 0.0)};
    double batch_loss = 0.0;
    std::vector<ItemDraw> draws(config.batch);
    for (std::size_t b = 0; b < config.batch; ++b) {
      draws[b].item = rng.below(item_count);
      const TrainingItem item = items(draws[b].item);
      Graph g;
      const Var loss = item_loss(g, predictor, item, config, schedule, rng, draws[b]);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        std::string snapshot;
        for (std::size_t k = 0; k <= b; ++k) snapshot += "\n  " + describe(draws[k]);
        throw NumericalError("non-finite loss at step " + std::to_string(step) + ", batch entry " +
                             std::to_string(b) + snapshot);
      }
      batch_loss += value;
      total += backward(g, loss);
    }
    total.scale(1.0 / static_cast<double>(config.batch));
    batch_loss /= static_cast<double>(config.batch);
    adam.step(predictor.params().flat(), total.values);
    report.step_losses.push_back(batch_loss);
    interval += batch_loss;
    ++interval_steps;
    if (step % config.log_every == 0 || step == config.steps) {
      const LossPoint point{step, interval / static_cast<double>(interval_steps)};
      report.curve.push_back(point);
      if (progress) progress(point);
      interval = 0.0;
      interval_steps = 0;
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train(VectorFieldPredictor& predictor, const Dataset& data, const TrainConfig& config,
                  const ProgressFn& progress) {
  const PredictorConfig& c = predictor.config();
  if (data.window != c.window || data.preceding != c.preceding) {
    throw ConfigError("dataset windows (" + std::to_string(data.preceding) + "+" + std::to_string(data.window) +
                      ") do not match predictor (" + std::to_string(c.preceding) + "+" + std::to_string(c.window) + ")");
  }
  if (data.spec.latent_dim != c.latent_dim || data.spec.audio_dim != c.audio_dim) {
    throw ConfigError("dataset dimensions do not match predictor");
  }
  return train(predictor, data.windows.size(), [&](std::size_t i) { return data.item(i); }, config, progress);
}

GradientCheckReport check_gradients(VectorFieldPredictor& predictor, const TrainingItem& item,
                                    const TrainConfig& config, std::size_t samples, double step,
                                    std::uint64_t seed, double floor) {
  const NoiseSchedule schedule = NoiseSchedule::cosine(config.diffusion_steps);
  auto evaluate = [&](bool record, Gradients* grads) {
    Graph g(record);
    Rng rng(seed);
    ItemDraw draw;
    const Var loss = item_loss(g, predictor, item, config, schedule, rng, draw);
    if (grads) *grads = backward(g, loss);
    return loss.value()(0, 0);
  };
  Gradients analytic;
  evaluate(true, &analytic);

  std::span<double> flat = predictor.params().flat();
  std::vector<std::size_t> order(flat.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick(seed, 0x6c);
  std::shuffle(order.begin(), order.end(), pick);
  order.resize(std::min(samples, order.size()));

  GradientCheckReport report;
  for (std::size_t i : order) {
    const double saved = flat[i];
    flat[i] = saved + step;
    const double up = evaluate(false, nullptr);
    flat[i] = saved - step;
    const double down = evaluate(false, nullptr);
    flat[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.values[i];
    const double abs_error = std::abs(a - numeric);
    const double rel = abs_error / std::max({std::abs(a), std::abs(numeric), floor});
    report.max_absolute_error = std::max(report.max_absolute_error, abs_error);
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  return report;
}

}  // namespace latentflow
