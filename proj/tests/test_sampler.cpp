#include <gtest/gtest.h>

#include <cmath>

#include "latentflow/error.hpp"
#include "latentflow/predictor.hpp"
#include "latentflow/rng.hpp"
#include "latentflow/sampler.hpp"

using namespace latentflow;

namespace {

PredictorConfig small_config() {
  PredictorConfig c;
  c.latent_dim = 4;
  c.audio_dim = 3;
  c.hidden = 16;
  c.heads = 2;
  c.blocks = 2;
  c.window = 8;
  c.preceding = 3;
  return c;
}

ConditionInputs random_inputs(const PredictorConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ConditionInputs in;
  in.audio = Tensor2::normal(c.frames(), c.audio_dim, rng);
  in.emotion = {0.1, 0.1, 0.1, 0.4, 0.1, 0.1, 0.1};
  in.source_motion.resize(c.latent_dim);
  for (double& v : in.source_motion) v = rng.normal();
  return in;
}

struct Fixture {
  PredictorConfig config = small_config();
  VectorFieldPredictor predictor{config, 1};
  ConditionInputs inputs;
  Tensor2 x;
  Fixture() {
    predictor.randomize_all(2, 0.5);
    inputs = random_inputs(config, 3);
    Rng rng(4);
    x = Tensor2::normal(config.frames(), config.latent_dim, rng);
  }
  Tensor2 raw(const DropoutMask& m) const { return evaluate(predictor, x, inputs, 0.3, m); }
};

double rms(const Tensor2& a) { return frobenius_norm(a) / std::sqrt(static_cast<double>(a.size())); }

Trajectory decay(Solver solver, std::size_t nfe) {
  return integrate(solver, [](const Tensor2& x, double) { return -1.0 * x; }, Tensor2(1, 1, 1.0), nfe);
}

}  // namespace

TEST(Guidance, Masks) {
  EXPECT_EQ(null_condition(), (DropoutMask{true, true, true, false}));
  EXPECT_EQ(without_emotion(), (DropoutMask{false, true, false, false}));
  EXPECT_EQ(without_audio_emotion(), (DropoutMask{false, true, true, false}));
  EXPECT_EQ(GuidanceSpec::none().evaluations_per_step(), 1u);
  EXPECT_EQ(GuidanceSpec::single(2).evaluations_per_step(), 2u);
  EXPECT_EQ(GuidanceSpec::incremental(2, 1).evaluations_per_step(), 3u);
  EXPECT_THROW(GuidanceSpec::single(std::nan("")).validate(), ConfigError);
  EXPECT_EQ(parse_guidance_mode(to_string(GuidanceMode::Incremental)), GuidanceMode::Incremental);
  EXPECT_THROW(parse_guidance_mode("loud"), ConfigError);
}

TEST(Cfv, GammaOneAndZero) {
  Fixture f;
  EXPECT_LE(max_abs_diff(cfv(f.predictor, f.x, f.inputs, 0.3, 1.0), f.raw({})), 1e-12);
  EXPECT_LE(max_abs_diff(cfv(f.predictor, f.x, f.inputs, 0.3, 0.0), f.raw(null_condition())), 1e-12);
}

TEST(Cfv, GammaTwoRecombination) {
  Fixture f;
  const Tensor2 expected = 2.0 * f.raw({}) - f.raw(null_condition());
  EXPECT_LE(max_abs_diff(cfv(f.predictor, f.x, f.inputs, 0.3, 2.0), expected), 1e-12);
}

TEST(Cfv, NullIsZeroInputs) {
  Fixture f;
  ConditionInputs zeroed = f.inputs;
  std::fill(zeroed.emotion.begin(), zeroed.emotion.end(), 0.0);
  std::fill(zeroed.source_motion.begin(), zeroed.source_motion.end(), 0.0);
  for (std::size_t r = f.config.preceding; r < f.config.frames(); ++r)
    for (double& v : zeroed.audio.row(r)) v = 0.0;
  EXPECT_EQ(f.raw(null_condition()), evaluate(f.predictor, f.x, zeroed, 0.3, {}));
}

TEST(IncrementalCfv, Telescopes) {
  Fixture f;
  EXPECT_LE(max_abs_diff(incremental_cfv(f.predictor, f.x, f.inputs, 0.3, 1.0, 1.0), f.raw({})), 1e-12);
  EXPECT_LE(max_abs_diff(incremental_cfv(f.predictor, f.x, f.inputs, 0.3, 1.0, 0.0), f.raw(without_emotion())), 1e-12);
}

TEST(IncrementalCfv, DefaultScalesRecombination) {
  Fixture f;
  const Tensor2 full = f.raw({}), no_e = f.raw(without_emotion()), no_ae = f.raw(without_audio_emotion());
  const Tensor2 expected = 2.0 * no_e - no_ae + (full - no_e);
  EXPECT_LE(max_abs_diff(incremental_cfv(f.predictor, f.x, f.inputs, 0.3, 2.0, 1.0), expected), 1e-12);
}

TEST(IncrementalCfv, BaseMaskIsApplied) {
  Fixture f;
  const DropoutMask base{false, false, false, true};
  EXPECT_LE(max_abs_diff(incremental_cfv(f.predictor, f.x, f.inputs, 0.3, 1.0, 1.0, base), f.raw(base)), 1e-12);
  EXPECT_LE(max_abs_diff(cfv(f.predictor, f.x, f.inputs, 0.3, 0.0, base), f.raw(base | null_condition())), 1e-12);
}

TEST(GuidedField, CountsEvaluations) {
  Fixture f;
  for (auto [spec, per] : {std::pair{GuidanceSpec::none(), 1u}, {GuidanceSpec::single(1.5), 2u},
                           {GuidanceSpec::incremental(2, 1), 3u}}) {
    GuidedField field(f.predictor, f.inputs, spec);
    euler_integrate(std::ref(field), f.x, 7);
    EXPECT_EQ(field.evaluations(), 7 * per);
    GuidedField mid(f.predictor, f.inputs, spec);
    midpoint_integrate(std::ref(mid), f.x, 7);
    EXPECT_EQ(mid.evaluations(), 14 * per);
  }
}

TEST(Euler, ExactOnConstantField) {
  Rng rng(5);
  const Tensor2 x0 = Tensor2::normal(3, 2, rng), x1 = Tensor2::normal(3, 2, rng);
  const Tensor2 u = x1 - x0;
  for (std::size_t nfe : {1u, 2u, 3u, 10u, 37u}) {
    const Trajectory tr = euler_integrate([&](const Tensor2&, double) { return u; }, x0, nfe);
    EXPECT_EQ(tr.states.size(), nfe + 1);
    EXPECT_LE(max_abs_diff(tr.final_state(), x1), 1e-12) << nfe;
    const Trajectory mid = midpoint_integrate([&](const Tensor2&, double) { return u; }, x0, nfe);
    EXPECT_LE(max_abs_diff(mid.final_state(), x1), 1e-12) << nfe;
  }
}

TEST(Euler, ZeroFieldAndGrid) {
  const Tensor2 x0(2, 2, 0.7);
  std::vector<double> seen;
  const Trajectory tr = euler_integrate([&](const Tensor2& x, double t) {
    seen.push_back(t);
    return Tensor2(x.rows(), x.cols());
  }, x0, 4);
  for (const Tensor2& s : tr.states) EXPECT_EQ(s, x0);
  EXPECT_EQ(seen, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
  EXPECT_EQ(tr.times, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(Euler, FirstOrderConvergence) {
  const double exact = std::exp(-1.0);
  const double e10 = std::abs(decay(Solver::Euler, 10).final_state()(0, 0) - exact);
  const double e20 = std::abs(decay(Solver::Euler, 20).final_state()(0, 0) - exact);
  EXPECT_GE(e20 / e10, 0.4);
  EXPECT_LE(e20 / e10, 0.6);
}

TEST(Midpoint, SecondOrderConvergence) {
  const double exact = std::exp(-1.0);
  const double e10 = std::abs(decay(Solver::Midpoint, 10).final_state()(0, 0) - exact);
  const double e20 = std::abs(decay(Solver::Midpoint, 20).final_state()(0, 0) - exact);
  EXPECT_GE(e20 / e10, 0.2);
  EXPECT_LE(e20 / e10, 0.3);
}

TEST(Integrate, Errors) {
  auto zero = [](const Tensor2& x, double) { return Tensor2(x.rows(), x.cols()); };
  EXPECT_THROW(euler_integrate(zero, Tensor2(1, 1), 0), ConfigError);
  EXPECT_THROW(midpoint_integrate(zero, Tensor2(1, 1), 0), ConfigError);
  auto bad = [](const Tensor2& x, double t) { return Tensor2(x.rows(), x.cols(), t > 0.5 ? std::nan("") : 0.0); };
  try {
    euler_integrate(bad, Tensor2(1, 1), 4);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(parse_solver("midpoint"), Solver::Midpoint);
  EXPECT_THROW(parse_solver("rk4"), ConfigError);
}

TEST(Integrate, ClampHoldsRows) {
  const Tensor2 known(1, 2, {3.0, -1.0});
  const Trajectory tr = euler_integrate([](const Tensor2& x, double) { return Tensor2(x.rows(), x.cols(), 1.0); },
                                        Tensor2(3, 2), 5, [&](Tensor2& x) { x.set_rows(0, known); });
  for (const Tensor2& s : tr.states) EXPECT_EQ(s.slice_rows(0, 1), known);
  EXPECT_NEAR(tr.final_state()(2, 0), 1.0, 1e-12);
}

TEST(Integrate, EulerAndMidpointConverge) {
  Fixture f;
  GuidedField field(f.predictor, f.inputs, GuidanceSpec::none());
  auto gap = [&](std::size_t nfe) {
    return max_abs_diff(euler_integrate(std::ref(field), f.x, nfe).final_state(),
                        midpoint_integrate(std::ref(field), f.x, nfe).final_state());
  };
  const double g10 = gap(10), g20 = gap(20), g40 = gap(40);
  EXPECT_LT(g20, 0.7 * g10);
  EXPECT_LT(g40, 0.7 * g20);
}

TEST(Window, UntrainedPredictorReturnsNoise) {
  const PredictorConfig c = small_config();
  VectorFieldPredictor p(c, 1);
  const ConditionInputs in = random_inputs(c, 3);
  Rng rng(9), copy(9);
  const WindowResult r = generate_window(p, WindowState::initial(c), in, {}, rng);
  const Tensor2 noise = Tensor2::normal(c.frames(), c.latent_dim, copy);
  EXPECT_EQ(r.latents, noise.slice_rows(c.preceding, c.frames()));
  EXPECT_EQ(r.evaluations, 30u);
}

TEST(Window, DeterministicAndCarriesState) {
  Fixture f;
  const WindowState s0 = WindowState::initial(f.config);
  EXPECT_FALSE(s0.has_predecessor());
  EXPECT_EQ(s0.preceding_motion, Tensor2(f.config.preceding, f.config.latent_dim));
  Rng a(11), b(11);
  const WindowResult r1 = generate_window(f.predictor, s0, f.inputs, {}, a);
  const WindowResult r2 = generate_window(f.predictor, s0, f.inputs, {}, b);
  EXPECT_EQ(r1.latents, r2.latents);
  EXPECT_EQ(r1.next.window_index, 1u);
  EXPECT_TRUE(r1.next.has_predecessor());
  EXPECT_EQ(r1.next.preceding_motion, r1.latents.slice_rows(f.config.window - f.config.preceding, f.config.window));
  EXPECT_EQ(r1.next.preceding_audio, f.inputs.audio.slice_rows(f.config.window, f.config.frames()));
  SamplingOptions keep;
  keep.keep_trajectory = true;
  Rng c(12);
  const WindowResult r3 = generate_window(f.predictor, r1.next, f.inputs, keep, c);
  ASSERT_EQ(r3.trajectory.states.size(), 11u);
  for (const Tensor2& s : r3.trajectory.states) EXPECT_EQ(s.slice_rows(0, f.config.preceding), r1.next.preceding_motion);
  EXPECT_EQ(r3.trajectory.final_state().slice_rows(f.config.preceding, f.config.frames()), r3.latents);
}

TEST(Window, UnclampedModeLetsContextMove) {
  Fixture f;
  Rng a(11);
  const WindowResult r1 = generate_window(f.predictor, WindowState::initial(f.config), f.inputs, {}, a);
  SamplingOptions free;
  free.clamp_preceding = false;
  free.keep_trajectory = true;
  Rng b(12);
  const WindowResult r2 = generate_window(f.predictor, r1.next, f.inputs, free, b);
  EXPECT_NE(r2.trajectory.final_state().slice_rows(0, f.config.preceding), r1.next.preceding_motion);
}

TEST(Window, AudioLengthChecked) {
  Fixture f;
  ConditionInputs in = f.inputs;
  in.audio = Tensor2(f.config.window, f.config.audio_dim);
  Rng rng(1);
  EXPECT_THROW(generate_window(f.predictor, WindowState::initial(f.config), in, {}, rng), ShapeError);
}

TEST(Sequence, OneWindowEqualsGenerateWindow) {
  Fixture f;
  Rng rng(13);
  const Tensor2 audio = Tensor2::normal(3 * f.config.window, f.config.audio_dim, rng);
  Rng a(14), b(14);
  const SequenceResult seq = generate_sequence(f.predictor, audio, f.inputs.emotion, f.inputs.source_motion, 1, {}, a);
  ConditionInputs drive{concat_rows(Tensor2(f.config.preceding, f.config.audio_dim), audio.slice_rows(0, f.config.window)),
                        f.inputs.emotion, f.inputs.source_motion, {}};
  const WindowResult w = generate_window(f.predictor, WindowState::initial(f.config), drive, {}, b);
  EXPECT_EQ(seq.latents, w.latents);
  Rng c(14), d(14);
  const SequenceResult three = generate_sequence(f.predictor, audio, f.inputs.emotion, f.inputs.source_motion, 3, {}, c);
  EXPECT_EQ(three.latents.rows(), 3 * f.config.window);
  EXPECT_EQ(three.evaluations, 3 * 30u);
  EXPECT_EQ(three.latents, generate_sequence(f.predictor, audio, f.inputs.emotion, f.inputs.source_motion, 3, {}, d).latents);
  // second window is conditioned on the tail of the first
  EXPECT_EQ(three.windows[1].next.window_index, 2u);
  EXPECT_EQ(three.windows[0].next.preceding_motion,
            three.latents.slice_rows(f.config.window - f.config.preceding, f.config.window));
  Rng e(1);
  EXPECT_THROW(generate_sequence(f.predictor, audio, f.inputs.emotion, f.inputs.source_motion, 4, {}, e), ShapeError);
  EXPECT_THROW(generate_sequence(f.predictor, audio, f.inputs.emotion, f.inputs.source_motion, 0, {}, e), ConfigError);
}

TEST(Redirect, OneHot) {
  const std::vector<double> onehot = {0, 0, 1, 0, 0, 0, 0};
  EXPECT_EQ(redirect_emotion(onehot, 2), onehot);
  EXPECT_EQ(redirect_emotion({0.2, 0.1, 0.1, 0.3, 0.1, 0.1, 0.1}, 5), (std::vector<double>{0, 0, 0, 0, 0, 1, 0}));
  EXPECT_THROW(redirect_emotion(onehot, 7), IndexError);
  EXPECT_THROW(redirect_emotion({1, 0}, 0), ShapeError);
}

TEST(Redirect, LargerEmotionScaleMovesFieldMore) {
  Fixture f;
  ConditionInputs redirected = f.inputs;
  redirected.emotion = redirect_emotion(f.inputs.emotion, 0);
  auto effect = [&](double gamma_e) {
    return rms(incremental_cfv(f.predictor, f.x, redirected, 0.3, 2.0, gamma_e) -
               incremental_cfv(f.predictor, f.x, f.inputs, 0.3, 2.0, gamma_e));
  };
  EXPECT_EQ(effect(0.0), 0.0);
  EXPECT_GT(effect(1.0), 0.0);
  EXPECT_GE(effect(2.0), effect(1.0));
}
