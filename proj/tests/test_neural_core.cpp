#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "latentflow/autodiff.hpp"
#include "latentflow/error.hpp"
#include "latentflow/layers.hpp"
#include "latentflow/params.hpp"
#include "latentflow/rng.hpp"
#include "latentflow/tensor.hpp"

using namespace latentflow;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor2::normal(r, c, rng);
}

Tensor2 loop_matmul(const Tensor2& a, const Tensor2& b) {
  Tensor2 out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

struct Shape {
  std::size_t rows, cols;
};

using OpFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Builds parameters for the given shapes, weights the op output by a fixed
// random tensor so the scalar loss is smooth, and returns the worst relative
// error of the tape gradient against central differences.
double gradient_error(const std::vector<Shape>& shapes, const OpFn& op, std::uint64_t seed = 1) {
  PredictorParams params;
  for (std::size_t i = 0; i < shapes.size(); ++i) params.add("in" + std::to_string(i), shapes[i].rows, shapes[i].cols);
  Rng rng(seed);
  for (double& v : params.flat()) v = rng.normal();
  Tensor2 weights;
  auto loss_of = [&](bool record) {
    auto g = std::make_unique<Graph>(record);
    std::vector<Var> inputs;
    for (std::size_t i = 0; i < shapes.size(); ++i) inputs.push_back(g->parameter(params, i));
    const Var out = op(*g, inputs);
    if (weights.empty()) weights = random_tensor(out.value().rows(), out.value().cols(), seed + 99);
    const Var loss = sum(hadamard(out, g->constant(weights)));
    return std::make_pair(std::move(g), loss);
  };
  auto [tape, loss] = loss_of(true);
  const Gradients grads = backward(*tape, loss);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params.flat()[i];
    params.flat()[i] = saved + h;
    const double up = loss_of(false).second.value()(0, 0);
    params.flat()[i] = saved - h;
    const double down = loss_of(false).second.value()(0, 0);
    params.flat()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double rel = std::abs(numeric - grads.values[i]) / std::max(1e-6, std::abs(numeric) + std::abs(grads.values[i]));
    worst = std::max(worst, rel);
  }
  return worst;
}

AttentionWeights random_attention(std::size_t h, std::uint64_t seed) {
  return {random_tensor(h, h, seed), random_tensor(h, h, seed + 1), random_tensor(h, h, seed + 2),
          random_tensor(h, h, seed + 3)};
}

}  // namespace

TEST(Dense, IdentityWeights) {
  const Tensor2 x = random_tensor(3, 4, 1);
  EXPECT_EQ(dense(x, Tensor2::identity(4), Tensor2(1, 4)), x);
}

TEST(Dense, HandCase) {
  const Tensor2 y = dense(Tensor2(1, 2, {1, 2}), Tensor2(2, 1, {3, 4}), Tensor2(1, 1, {5}));
  EXPECT_EQ(y(0, 0), 16.0);
}

TEST(Dense, MatchesTripleLoopOracle) {
  const Tensor2 x = random_tensor(7, 5, 2);
  const Tensor2 w = random_tensor(5, 6, 3);
  const Tensor2 b = random_tensor(1, 6, 4);
  Tensor2 expected = loop_matmul(x, w);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 6; ++j) expected(i, j) += b(0, j);
  EXPECT_LE(max_abs_diff(dense(x, w, b), expected), 1e-12);
}

TEST(Dense, ShapeMismatch) {
  EXPECT_THROW(dense(Tensor2(2, 3), Tensor2(4, 2), Tensor2(1, 2)), ShapeError);
  Graph g;
  EXPECT_THROW(matmul(g.constant(Tensor2(2, 3)), g.constant(Tensor2(2, 3))), ShapeError);
}

TEST(LayerNorm, ConstantRowIsZero) {
  const Tensor2 y = layer_norm(Tensor2(1, 6, 3.5));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, UnitRowUnchangedUpToEps) {
  const Tensor2 y = layer_norm(Tensor2(1, 2, {1, -1}));
  EXPECT_NEAR(y(0, 0), 1.0, 1e-5);
  EXPECT_NEAR(y(0, 1), -1.0, 1e-5);
}

TEST(LayerNorm, RowStatistics) {
  const Tensor2 y = layer_norm(random_tensor(20, 32, 5));
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (double v : y.row(r)) mean += v;
    mean /= 32;
    for (double v : y.row(r)) var += (v - mean) * (v - mean);
    var /= 32;
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_LE(std::abs(var - 1.0), 1e-4);
  }
}

TEST(Attention, WideBandEqualsUnmasked) {
  const Tensor2 x = random_tensor(6, 8, 6);
  const AttentionWeights w = random_attention(8, 10);
  EXPECT_LE(max_abs_diff(banded_self_attention(x, w, 2, 6), banded_self_attention(x, w, 2, 100)), 0.0);
  // unmasked reference computed directly
  const Tensor2 q = matmul(x, w.query), k = matmul(x, w.key), v = matmul(x, w.value);
  Tensor2 concat(6, 8);
  for (std::size_t head = 0; head < 2; ++head) {
    for (std::size_t i = 0; i < 6; ++i) {
      std::vector<double> s(6);
      double mx = -1e300;
      for (std::size_t j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < 4; ++c) acc += q(i, head * 4 + c) * k(j, head * 4 + c);
        s[j] = acc / 2.0;
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t c = 0; c < 4; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 6; ++j) acc += s[j] / z * v(j, head * 4 + c);
        concat(i, head * 4 + c) = acc;
      }
    }
  }
  EXPECT_LE(max_abs_diff(banded_self_attention(x, w, 2, 100), matmul(concat, w.output)), 1e-12);
}

TEST(Attention, ZeroWidthCopiesValueRow) {
  const Tensor2 x = random_tensor(5, 4, 7);
  const AttentionWeights w{Tensor2(4, 4), Tensor2(4, 4), Tensor2::identity(4), Tensor2::identity(4)};
  EXPECT_LE(max_abs_diff(banded_self_attention(x, w, 2, 0), x), 1e-15);
}

TEST(Attention, FramesOutsideBandDoNotMatter) {
  const std::size_t T = 2;
  const Tensor2 x = random_tensor(12, 8, 8);
  const AttentionWeights w = random_attention(8, 20);
  const Tensor2 base = banded_self_attention(x, w, 4, T);
  for (std::size_t l = 0; l + T + 1 < 12; ++l) {
    Tensor2 moved = x;
    for (double& v : moved.row(l + T + 1)) v += 3.0;
    const Tensor2 out = banded_self_attention(moved, w, 4, T);
    for (std::size_t c = 0; c < 8; ++c) EXPECT_LE(std::abs(out(l, c) - base(l, c)), 1e-12);
  }
  Tensor2 moved = x;
  for (double& v : moved.row(6)) v -= 2.0;
  const Tensor2 out = banded_self_attention(moved, w, 4, T);
  for (std::size_t l = 0; l < 12; ++l) {
    const bool inside = l + T >= 6 && l <= 6 + T;
    if (!inside) {
      EXPECT_LE(max_abs_diff(out.slice_rows(l, l + 1), base.slice_rows(l, l + 1)), 1e-12) << l;
    } else {
      EXPECT_GT(max_abs_diff(out.slice_rows(l, l + 1), base.slice_rows(l, l + 1)), 1e-9) << l;
    }
  }
}

TEST(Attention, IndivisibleHeads) {
  EXPECT_THROW(banded_self_attention(random_tensor(3, 6, 1), random_attention(6, 2), 4, 1), ConfigError);
}

TEST(Sinusoid, ZeroTime) {
  const auto e = sinusoidal_embed(0.0, 16);
  for (std::size_t i = 0; i < 16; i += 2) {
    EXPECT_EQ(e[i], 0.0);
    EXPECT_EQ(e[i + 1], 1.0);
  }
}

TEST(Sinusoid, RangeAndFormula) {
  for (double t : {0.0, 0.13, 0.5, 0.999, 1.0}) {
    const auto e = sinusoidal_embed(t, 32);
    for (std::size_t i = 0; i < 16; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / 32.0);
      EXPECT_NEAR(e[2 * i], std::sin(1000.0 * t * freq), 1e-12);
      EXPECT_NEAR(e[2 * i + 1], std::cos(1000.0 * t * freq), 1e-12);
      EXPECT_LE(std::abs(e[2 * i]), 1.0);
      EXPECT_LE(std::abs(e[2 * i + 1]), 1.0);
    }
  }
}

TEST(Sinusoid, Lipschitz) {
  const auto a = sinusoidal_embed(0.4, 64);
  const auto b = sinusoidal_embed(0.4 + 1e-9, 64);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-5);
}

TEST(Sinusoid, OddDim) { EXPECT_THROW(sinusoidal_embed(0.5, 7), ConfigError); }

TEST(Backward, Quadratic) {
  PredictorParams p;
  p.add("w", 1, 5);
  Rng rng(3);
  for (double& v : p.flat()) v = rng.normal();
  Graph g;
  const Var w = g.parameter(p, "w");
  const Gradients grads = backward(g, scale(sum(hadamard(w, w)), 0.5));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(grads.values[i], p.flat()[i], 1e-15);
}

TEST(Backward, DenseBiasGradientCountsRows) {
  PredictorParams p;
  p.add("w", 3, 2);
  p.add("b", 1, 2);
  Graph g;
  const Var y = dense(g.constant(random_tensor(4, 3, 1)), g.parameter(p, "w"), g.parameter(p, "b"));
  const Gradients grads = backward(g, sum(y));
  EXPECT_EQ(grads.values[6], 4.0);
  EXPECT_EQ(grads.values[7], 4.0);
}

TEST(Backward, NoTapeIsStateError) {
  PredictorParams p;
  p.add("w", 1, 1);
  Graph g(false);
  const Var w = g.parameter(p, "w");
  EXPECT_THROW(backward(g, sum(w)), StateError);
}

TEST(GradCheck, Matmul) {
  EXPECT_LE(gradient_error({{3, 4}, {4, 2}}, [](Graph&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }), 1e-6);
}

TEST(GradCheck, AddRowAndElementwise) {
  EXPECT_LE(gradient_error({{3, 4}, {1, 4}, {3, 4}},
                           [](Graph&, const std::vector<Var>& v) {
                             return hadamard(add_row(v[0], v[1]), v[2]) - scale(add_scalar(v[2], 0.5), 2.0) + v[0];
                           }),
            1e-6);
}

TEST(GradCheck, SlicesAndConcat) {
  EXPECT_LE(gradient_error({{5, 6}, {2, 3}},
                           [](Graph&, const std::vector<Var>& v) {
                             return concat_rows(slice_cols(slice_rows(v[0], 1, 4), 2, 5), v[1]);
                           }),
            1e-6);
}

TEST(GradCheck, LayerNorm) {
  EXPECT_LE(gradient_error({{4, 6}}, [](Graph&, const std::vector<Var>& v) { return layer_norm(v[0]); }), 1e-5);
}

TEST(GradCheck, Gelu) {
  EXPECT_LE(gradient_error({{3, 5}}, [](Graph&, const std::vector<Var>& v) { return gelu(v[0]); }), 1e-6);
}

TEST(GradCheck, Reductions) {
  EXPECT_LE(gradient_error({{3, 4}},
                           [](Graph&, const std::vector<Var>& v) {
                             return mean_square(v[0]) + scale(sum(v[0]), 0.1);
                           }),
            1e-6);
  // mean_abs has a kink at zero; seeded normals keep every entry away from it
  EXPECT_LE(gradient_error({{3, 4}}, [](Graph&, const std::vector<Var>& v) { return mean_abs(v[0]); }), 1e-6);
}

TEST(GradCheck, RowDiff) {
  EXPECT_LE(gradient_error({{5, 3}}, [](Graph&, const std::vector<Var>& v) { return row_diff(v[0]); }), 1e-6);
}

TEST(GradCheck, BandedAttention) {
  for (std::size_t T : {0u, 1u, 2u, 10u}) {
    EXPECT_LE(gradient_error({{7, 8}, {7, 8}, {7, 8}},
                             [T](Graph&, const std::vector<Var>& v) { return banded_attention(v[0], v[1], v[2], 2, T); }),
              1e-5)
        << "T=" << T;
  }
}

TEST(Determinism, ForwardAndBackwardBitIdentical) {
  auto run = [] {
    PredictorParams p;
    p.add("w", 6, 6);
    Rng rng(77);
    for (double& v : p.flat()) v = rng.normal();
    Graph g;
    const Var x = g.constant(random_tensor(5, 6, 8));
    const Var w = g.parameter(p, "w");
    const Var y = banded_attention(matmul(x, w), x, layer_norm(x), 3, 1);
    const Var loss = mean_square(gelu(y));
    return std::make_pair(loss.value()(0, 0), backward(g, loss).values);
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<double> p = {1.0, -2.0};
  Adam adam;
  adam.step(p, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLr) {
  std::vector<double> p = {0.5};
  Adam adam({.lr = 0.1});
  adam.step(p, std::vector<double>{1.0});
  EXPECT_NEAR(p[0], 0.4, 1e-7);
}

TEST(Adam, ThreeStepHandTrace) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const std::vector<double> grads = {0.3, -1.2, 0.7};
  double ref = 2.0, m = 0.0, v = 0.0;
  std::vector<double> p = {2.0};
  Adam adam({lr, b1, b2, eps});
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    ref -= lr * mhat / (std::sqrt(vhat) + eps);
    adam.step(p, std::vector<double>{g});
    EXPECT_NEAR(p[0], ref, 1e-14) << "step " << t;
  }
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(Params, FlatAndNamedViewsAlias) {
  PredictorParams p;
  p.add("a", 2, 3);
  p.add("b", 1, 4);
  EXPECT_EQ(p.size(), 10u);
  EXPECT_EQ(p.group(1).offset, 6u);
  p.values("b")[2] = 9.0;
  EXPECT_EQ(p.flat()[8], 9.0);
  p.flat()[1] = -3.0;
  EXPECT_EQ(p.tensor("a")(0, 1), -3.0);
}

TEST(Tensor, Basics) {
  Tensor2 t(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.slice_rows(1, 2), Tensor2(1, 3, {4, 5, 6}));
  t.set_rows(0, Tensor2(1, 3, {7, 8, 9}));
  EXPECT_EQ(t(0, 2), 9.0);
  EXPECT_TRUE(t.all_finite());
  t(1, 1) = std::nan("");
  EXPECT_FALSE(t.all_finite());
  EXPECT_THROW(Tensor2(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}
