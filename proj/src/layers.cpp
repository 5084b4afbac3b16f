#include "latentflow/layers.hpp"

#include <cmath>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

Var dense(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Tensor2 dense(const Tensor2& x, const Tensor2& weight, const Tensor2& bias) {
  Graph g(false);
  return dense(g.constant(x), g.constant(weight), g.constant(bias)).value();
}

Tensor2 layer_norm(const Tensor2& x) {
  Graph g(false);
  return layer_norm(g.constant(x), kLayerNormEps).value();
}

Tensor2 banded_self_attention(const Tensor2& x, const AttentionWeights& weights, std::size_t heads,
                              std::size_t half_width) {
  if (heads == 0 || x.cols() % heads != 0) {
    throw ConfigError("hidden width " + std::to_string(x.cols()) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  Graph g(false);
  const Var in = g.constant(x);
  const Var q = matmul(in, g.constant(weights.query));
  const Var k = matmul(in, g.constant(weights.key));
  const Var v = matmul(in, g.constant(weights.value));
  return matmul(banded_attention(q, k, v, heads, half_width), g.constant(weights.output)).value();
}

std::vector<double> sinusoid(double position, std::size_t dim) {
  if (dim % 2 != 0) throw ConfigError("sinusoidal embedding needs an even width, got " + std::to_string(dim));
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    out[2 * i] = std::sin(position * freq);
    out[2 * i + 1] = std::cos(position * freq);
  }
  return out;
}

std::vector<double> sinusoidal_embed(double t, std::size_t dim) {
  return sinusoid(t * kTimePositionScale, dim);
}

void init_uniform(std::span<double> values, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : values) v = rng.uniform(-bound, bound);
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const auto& c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * grads[i];
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace latentflow
