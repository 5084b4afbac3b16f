#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "latentflow/autodiff.hpp"
#include "latentflow/conditions.hpp"
#include "latentflow/params.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

enum class Conditioning {
  AdaLN,           ///< frame-wise AdaLN + gating, then banded self-attention
  CrossAttention,  ///< ablation: banded cross-attention to the condition rows
};

struct PredictorConfig {
  std::size_t latent_dim = 16;  ///< d
  std::size_t audio_dim = 8;    ///< d_a
  std::size_t hidden = 64;      ///< h
  std::size_t heads = 4;
  std::size_t half_width = 2;   ///< T: attention sees frames l-T..l+T
  std::size_t blocks = 4;
  std::size_t window = 24;      ///< L generated frames
  std::size_t preceding = 6;    ///< L' context frames
  std::size_t emotion_dims = kEmotionCount;
  std::size_t extra_dims = 0;
  std::size_t mlp_ratio = 4;
  Conditioning conditioning = Conditioning::AdaLN;

  std::size_t frames() const { return window + preceding; }
  std::size_t condition_input_dim() const {
    return audio_dim + emotion_dims + latent_dim + extra_dims;
  }

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// `key = value` lines in a fixed order; the basis of `hash()`.
  std::string canonical() const;
  std::string hash() const;
  static PredictorConfig from_canonical(const std::string& text);

  /// Human-readable list of fields that differ.
  std::vector<std::string> differences(const PredictorConfig& other) const;

  /// d=512, h=1024, 8 heads, T=2, L=50, L'=10.
  static PredictorConfig full_scale();

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

/// Per-frame driving conditions c_t for one flow time.
struct ConditionBundle {
  Tensor2 rows;  ///< (L' + L) x h
  double t = 0.0;
  DropoutMask nulled;
};

/// (1 + gamma_i) * LN(x) + beta_i per row; `modulation` is the L x 6h
/// ToScaleShift output split as (a1, b1, g1, a2, b2, g2), stage is 1 or 2.
Tensor2 frame_wise_adaln(const Tensor2& x, const Tensor2& modulation, int stage);
Var frame_wise_adaln(Var x, Var modulation, int stage);

/// (1 + alpha_i) * x per row.
Tensor2 frame_wise_gate(const Tensor2& x, const Tensor2& modulation, int stage);
Var frame_wise_gate(Var x, Var modulation, int stage);

/// Transformer vector-field predictor over a window of L' + L latent frames.
class VectorFieldPredictor {
 public:
  /// Fresh parameters: dense layers U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
  /// zero biases, ToScaleShift and the output projection zero.
  VectorFieldPredictor(PredictorConfig config, std::uint64_t seed);
  /// Adopts existing parameters; throws ConfigError when their layout does
  /// not match the config.
  VectorFieldPredictor(PredictorConfig config, PredictorParams params);

  const PredictorConfig& config() const { return config_; }
  const PredictorParams& params() const { return params_; }
  PredictorParams& params() { return params_; }

  /// Fills every parameter (including zero-initialized layers) with seeded
  /// uniform values; used for gradient checks and mechanism tests.
  void randomize_all(std::uint64_t seed, double scale = 1.0);

  ConditionBundle to_condition(const ConditionInputs& inputs, double t,
                               const DropoutMask& nulled = {}) const;
  Tensor2 predict_field(const Tensor2& x_t, const ConditionBundle& bundle) const;
  /// ToScaleShift output for one block (0-based), L x 6h.
  Tensor2 scale_shift(const ConditionBundle& bundle, std::size_t block) const;

  /// Tape versions used for training.
  Var condition(Graph& g, const ConditionInputs& inputs, double t) const;
  Var forward(Graph& g, const Tensor2& x_t, Var condition) const;

 private:
  static PredictorParams layout(const PredictorConfig& config);
  void check_inputs(const ConditionInputs& inputs) const;
  Var attention(Graph& g, const std::string& prefix, Var queries_from, Var keys_from) const;
  Var block(Graph& g, std::size_t index, Var x, Var condition) const;

  PredictorConfig config_;
  PredictorParams params_;
  Tensor2 frame_positions_;
};

}  // namespace latentflow
