#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>

#include "latentflow/diffusion.hpp"
#include "latentflow/run_config.hpp"
#include "latentflow/sampler.hpp"
#include "latentflow/synth_data.hpp"

namespace latentflow {

/// How sequences are drawn from a trained backbone.
struct SamplerSpec {
  Parameterization parameterization = Parameterization::Flow;
  SamplingOptions options;
  std::size_t ddim_steps = 50;
  std::size_t schedule_steps = 500;

  /// Solver steps per window: nfe for flow, DDIM steps otherwise.
  std::size_t steps() const;
};

struct GeneratedSequence {
  Tensor2 latents;
  std::size_t evaluations = 0;
  double integrate_seconds = 0.0;
};

/// Sliding-window generation with either the ODE sampler or DDIM.
GeneratedSequence sample_sequence(const VectorFieldPredictor& predictor, const SamplerSpec& sampler,
                                  const Tensor2& audio, const std::vector<double>& emotion,
                                  const std::vector<double>& source_motion, std::size_t windows, Rng& rng);

inline constexpr double kNotMeasured = std::numeric_limits<double>::quiet_NaN();

struct MetricsReport {
  std::string label;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string parameterization;
  std::string solver;
  std::string guidance;
  std::size_t steps = 0;
  std::size_t sequences = 0;
  double final_train_loss = kNotMeasured;
  double field_mse = kNotMeasured;
  double correlation = kNotMeasured;
  double energy_distance = kNotMeasured;
  double noise_floor = kNotMeasured;
  double boundary_ratio = kNotMeasured;
  double emotion_cosine = kNotMeasured;
  double velocity_error = kNotMeasured;
  double sliced_wasserstein = kNotMeasured;
  double seconds_per_sample = kNotMeasured;
  double evaluations_per_sample = kNotMeasured;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

struct EvalRequest {
  SamplerSpec sampler;
  std::size_t windows = 2;
  std::uint64_t seed = 1;
  EvalConfig config;
  std::string label = "eval";
  std::string config_hash;
  double final_train_loss = kNotMeasured;
  bool field_check = true;
  bool emotion_check = true;
};

/// Held-out clips are split in half: sequences are generated on the first
/// half's conditions and compared against the second half's ground truth;
/// the noise floor is the first half's ground truth against the second's.
/// Throws DataError when fewer than four clips are available.
MetricsReport evaluate_model(const VectorFieldPredictor& predictor, const Dataset& heldout,
                             const EvalRequest& request);

/// Same report for the ground truth itself standing in for the sampler.
MetricsReport evaluate_oracle(const Dataset& heldout, const EvalRequest& request);

/// Mean squared error of the conditional field against x1 - x0 on the
/// generated rows of held-out items.
double field_mse(const VectorFieldPredictor& predictor, const Dataset& heldout, std::size_t items,
                 std::uint64_t seed);

}  // namespace latentflow
