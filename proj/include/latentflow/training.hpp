#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latentflow/diffusion.hpp"
#include "latentflow/flow_matching.hpp"
#include "latentflow/predictor.hpp"

namespace latentflow {

struct Dataset;
class Rng;

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 8;
  std::size_t steps = 5000;
  double lambda_ot = 1.0;
  double lambda_vel = 1.0;
  DropoutProbabilities dropout;
  std::uint64_t seed = 1;
  std::size_t log_every = 100;
  Parameterization objective = Parameterization::Flow;
  std::size_t diffusion_steps = 500;

  /// Throws ConfigError.
  void validate() const;
};

/// Random draws behind one item's loss; echoed in NaN diagnostics.
struct ItemDraw {
  std::size_t item = 0;
  double t = 0.0;             ///< flow time
  std::size_t diffusion_step = 0;
  DropoutMask mask;
};

std::string describe(const ItemDraw& draw);

/// Builds the loss of one item on the tape. Null preceding zeroes both the
/// context rows of x_t and their reconstruction target.
Var item_loss(Graph& g, const VectorFieldPredictor& predictor, const TrainingItem& item,
              const TrainConfig& config, const NoiseSchedule& schedule, Rng& rng, ItemDraw& draw);

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;  ///< mean batch loss over the logging interval
};

struct TrainReport {
  std::vector<double> step_losses;
  std::vector<LossPoint> curve;
  double seconds = 0.0;

  double final_loss() const;
};

using ItemSource = std::function<TrainingItem(std::size_t index)>;
using ProgressFn = std::function<void(const LossPoint&)>;

/// Minibatch Adam on `item_count` items drawn uniformly with replacement.
/// A non-finite loss throws NumericalError naming the step and the draws.
TrainReport train(VectorFieldPredictor& predictor, std::size_t item_count, const ItemSource& items,
                  const TrainConfig& config, const ProgressFn& progress = {});
TrainReport train(VectorFieldPredictor& predictor, const Dataset& data, const TrainConfig& config,
                  const ProgressFn& progress = {});

struct GradientCheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t worst_index = 0;
};

/// Central differences of `item_loss` against the tape gradient on
/// `samples` parameters picked uniformly without replacement. The item draws
/// are replayed from `seed` for every evaluation. Relative error is
/// |a - n| / max(|a|, |n|, floor); below `floor` the difference quotient is
/// dominated by roundoff.
GradientCheckReport check_gradients(VectorFieldPredictor& predictor, const TrainingItem& item,
                                    const TrainConfig& config, std::size_t samples, double step,
                                    std::uint64_t seed, double floor = 1e-5);

}  // namespace latentflow
