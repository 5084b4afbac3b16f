#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "latentflow/autodiff.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

class Rng;

inline constexpr double kLayerNormEps = 1e-5;
/// Flow time t in [0,1] is embedded at continuous position t * kTimePositionScale.
inline constexpr double kTimePositionScale = 1000.0;

/// x W + b on the tape.
Var dense(Var x, Var weight, Var bias);

/// x W + b with b a 1 x out row.
Tensor2 dense(const Tensor2& x, const Tensor2& weight, const Tensor2& bias);

/// Per-row normalization to mean 0 and population variance 1 (eps inside
/// the square root), no affine parameters.
Tensor2 layer_norm(const Tensor2& x);

struct AttentionWeights {
  Tensor2 query;   // h x h
  Tensor2 key;     // h x h
  Tensor2 value;   // h x h
  Tensor2 output;  // h x h
};

/// Self-attention with a band mask of half-width `half_width`, per-head
/// concat, then output projection. Throws ConfigError when the width is not
/// divisible by `heads`.
Tensor2 banded_self_attention(const Tensor2& x, const AttentionWeights& weights, std::size_t heads,
                              std::size_t half_width);

/// Interleaved [sin, cos] pairs of `position` at frequencies 10000^(-2i/dim).
std::vector<double> sinusoid(double position, std::size_t dim);

/// Flow-time embedding: sinusoid(t * 1000, dim). Throws ConfigError for odd dim.
std::vector<double> sinusoidal_embed(double t, std::size_t dim);

/// Dense init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) over a rows x cols block.
void init_uniform(std::span<double> values, std::size_t fan_in, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Holds the moment buffers; `step` increments
/// the step counter before the update.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

}  // namespace latentflow
