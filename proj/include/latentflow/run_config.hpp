#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "latentflow/predictor.hpp"
#include "latentflow/sampler.hpp"
#include "latentflow/synth_data.hpp"
#include "latentflow/training.hpp"

namespace latentflow {

struct DataConfig {
  std::uint64_t seed = 1;  ///< world seed
  std::uint64_t clip_seed = 1;
  std::size_t clips = 2000;
  std::size_t frames = 48;
  std::size_t directions = 8;
  std::size_t identities = 32;
  double half_life = 4.0;
  double label_smoothing = 0.3;
  double driving_noise = 0.05;
  std::size_t stride = 6;
  std::uint64_t heldout_clip_seed = 1001;
  std::size_t heldout_clips = 256;
};

struct EvalConfig {
  std::size_t field_items = 64;
  std::size_t emotion_clips = 8;
  bool sliced_wasserstein = false;
  std::size_t projections = 64;
};

/// Everything a run needs, read from `key.path = value` lines.
struct RunConfig {
  std::uint64_t seed = 1;
  PredictorConfig predictor;
  TrainConfig train;
  DataConfig data;
  SamplingOptions sampling;
  GuidanceSpec baseline_guidance = GuidanceSpec::incremental(1.0, 1.0);  ///< for eps / x0 checkpoints
  std::size_t ddim_steps = 50;
  std::size_t windows = 2;
  EvalConfig eval;

  /// Unknown keys and malformed values throw ConfigError / UsageError.
  static RunConfig parse(const std::string& text);
  /// Every key in a fixed order; parse(render()) round-trips.
  std::string render() const;
  std::string hash() const;
  void validate() const;

  /// Scene for the training split and for the held-out split.
  SceneSpec scene() const;
  SceneSpec heldout_scene() const;
};

}  // namespace latentflow
