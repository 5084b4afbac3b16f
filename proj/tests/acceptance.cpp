// Acceptance run: one PASS/FAIL line per criterion. argv[1] is a scratch
// directory for checkpoints and reports.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <string>
#include <vector>

#include "latentflow/checkpoint.hpp"
#include "latentflow/evaluation.hpp"
#include "latentflow/flow_matching.hpp"
#include "latentflow/metrics.hpp"
#include "latentflow/motion_space.hpp"
#include "latentflow/rng.hpp"
#include "latentflow/run_config.hpp"
#include "latentflow/sampler.hpp"
#include "latentflow/synth_data.hpp"
#include "latentflow/training.hpp"

using namespace latentflow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void run(int id, const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

ConditionInputs random_inputs(const PredictorConfig& c, Rng& rng) {
  ConditionInputs in;
  in.audio = Tensor2::normal(c.frames(), c.audio_dim, rng);
  in.emotion = {0.05, 0.1, 0.05, 0.6, 0.1, 0.05, 0.05};
  in.source_motion.resize(c.latent_dim);
  for (double& v : in.source_motion) v = rng.normal();
  return in;
}

void cfv_identities() {
  const auto start = Clock::now();
  const PredictorConfig c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    VectorFieldPredictor p(c, seed);
    p.randomize_all(seed + 100, 0.5);
    Rng rng(seed, 7);
    const ConditionInputs in = random_inputs(c, rng);
    const Tensor2 x = Tensor2::normal(c.frames(), c.latent_dim, rng);
    const double t = rng.uniform();
    const Tensor2 full = evaluate(p, x, in, t, {});
    const Tensor2 null = evaluate(p, x, in, t, null_condition());
    const Tensor2 no_e = evaluate(p, x, in, t, without_emotion());
    const Tensor2 no_ae = evaluate(p, x, in, t, without_audio_emotion());
    worst = std::max({worst, max_abs_diff(cfv(p, x, in, t, 1.0), full), max_abs_diff(cfv(p, x, in, t, 0.0), null),
                      max_abs_diff(incremental_cfv(p, x, in, t, 1.0, 1.0), full),
                      max_abs_diff(incremental_cfv(p, x, in, t, 1.0, 0.0), no_e),
                      max_abs_diff(incremental_cfv(p, x, in, t, 0.0, 0.0), no_ae)});
  }
  const double seconds = since(start);
  report(1, "guidance identities", worst <= 1e-12 && seconds < 10.0,
         fmt("max deviation %.3g (tol 1e-12), %.2f s (limit 10)", worst, seconds));
}

void ot_path() {
  const auto start = Clock::now();
  const std::size_t n = 100000;
  Rng rng(31);
  const Tensor2 x0 = Tensor2::normal(6, 3, rng), x1 = Tensor2::normal(6, 3, rng);
  bool ok = max_abs_diff(ot_interpolate(x0, x1, 0.0).x, x0) == 0.0 && max_abs_diff(ot_interpolate(x0, x1, 1.0).x, x1) <= 1e-15;
  double field_dev = 0.0;
  for (double t : {0.0, 0.2, 0.5, 0.9}) field_dev = std::max(field_dev, max_abs_diff(target_field(x0, x1, t), x1 - x0));
  ok = ok && field_dev <= 1e-15;
  double worst_sigma = 0.0;
  const double target = 1.3;
  for (double t : {0.1, 0.5, 0.8}) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ot_interpolate(Tensor2(1, 1, {rng.normal()}), Tensor2(1, 1, {target}), t).x(0, 0);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean), sigma = 1 - t;
    worst_sigma = std::max({worst_sigma, std::abs(mean - t * target) / (sigma / std::sqrt(n)),
                            std::abs(sd - sigma) / (sigma / std::sqrt(2.0 * n))});
  }
  ok = ok && worst_sigma <= 3.0;
  const double seconds = since(start);
  report(2, "OT path", ok && seconds < 30.0,
         fmt("endpoints exact, field deviation %.3g, worst moment deviation %.2f sigma (limit 3), %.2f s (limit 30)",
             field_dev, worst_sigma, seconds));
}

void basis_checks() {
  const auto start = Clock::now();
  const RunConfig rc;
  double ortho = 0.0, trip = 0.0, locality = 0.0;
  std::vector<MotionBasis> bases = {rc.scene().basis()};
  for (std::uint64_t s = 1; s <= 4; ++s) bases.push_back(random_basis(16, 8, s));
  Rng rng(41);
  for (const MotionBasis& b : bases) {
    ortho = std::max(ortho, b.orthonormality_error());
    for (int trial = 0; trial < 50; ++trial) {
      CoefficientVector lam{std::vector<double>(b.count())};
      for (double& v : lam.values) v = 5.0 * rng.normal();
      const CoefficientVector back = project(compose(lam, b), b);
      for (std::size_t m = 0; m < b.count(); ++m) trip = std::max(trip, std::abs(back.values[m] - lam.values[m]));
      MotionLatent w{std::vector<double>(b.dims())};
      for (double& v : w.values) v = rng.normal();
      const std::size_t index = 1 + trial % b.count();
      const CoefficientVector before = project(w, b), after = project(edit_lambda(w, b, index, 10.0), b);
      for (std::size_t m = 0; m < b.count(); ++m)
        locality = std::max(locality, std::abs(after.values[m] - before.values[m] - (m + 1 == index ? 10.0 : 0.0)));
    }
  }
  const double seconds = since(start);
  report(3, "basis and edits", ortho <= 1e-9 && trip <= 1e-9 && locality <= 1e-9 && seconds < 5.0,
         fmt("orthonormality %.3g, round trip %.3g, edit locality %.3g (tol 1e-9), %.2f s (limit 5)", ortho, trip,
             locality, seconds));
}

void gradients(const Dataset& data) {
  const auto start = Clock::now();
  const RunConfig rc;
  VectorFieldPredictor p(rc.predictor, rc.seed);
  p.randomize_all(11, 0.5);
  const TrainingItem item = data.item(7);
  const GradientCheckReport r = check_gradients(p, item, rc.train, 200, 1e-5, 21);
  const double seconds = since(start);
  report(4, "gradient check", r.checked == 200 && r.max_relative_error <= 1e-4 && seconds < 120.0,
         fmt("%zu parameters, max relative error %.3g (tol 1e-4), %.1f s (limit 120)", r.checked,
             r.max_relative_error, seconds));
}

void solvers() {
  const auto start = Clock::now();
  Rng rng(51);
  const Tensor2 x0 = Tensor2::normal(4, 3, rng), x1 = Tensor2::normal(4, 3, rng);
  const Tensor2 u = x1 - x0;
  double exact = 0.0;
  for (std::size_t nfe : {1u, 3u, 10u, 50u})
    exact = std::max(exact, max_abs_diff(euler_integrate([&](const Tensor2&, double) { return u; }, x0, nfe).final_state(), x1));
  auto error = [](Solver s, std::size_t nfe) {
    const Trajectory tr = integrate(s, [](const Tensor2& x, double) { return -1.0 * x; }, Tensor2(1, 1, 1.0), nfe);
    return std::abs(tr.final_state()(0, 0) - std::exp(-1.0));
  };
  const double euler = error(Solver::Euler, 20) / error(Solver::Euler, 10);
  const double mid = error(Solver::Midpoint, 20) / error(Solver::Midpoint, 10);
  const double seconds = since(start);
  report(5, "solver orders",
         exact <= 1e-12 && euler >= 0.4 && euler <= 0.6 && mid >= 0.2 && mid <= 0.3 && seconds < 10.0,
         fmt("constant-field error %.3g, Euler ratio %.3f [0.4,0.6], midpoint ratio %.3f [0.2,0.3], %.2f s", exact,
             euler, mid, seconds));
}

struct Trained {
  VectorFieldPredictor model;
  TrainReport report;
};

Trained train_model(const RunConfig& rc, const Dataset& data, Parameterization objective, const fs::path& path) {
  VectorFieldPredictor model(rc.predictor, rc.seed);
  TrainConfig tc = rc.train;
  tc.objective = objective;
  tc.log_every = 500;
  const TrainReport r = train(model, data, tc, [&](const LossPoint& p) {
    std::printf("  %s step %zu loss %.4f\n", to_string(objective).c_str(), p.step, p.loss);
    std::fflush(stdout);
  });
  save_checkpoint(make_checkpoint(model, objective, rc.seed, tc.steps, r.final_loss(), rc.render()), path);
  return {std::move(model), r};
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t count) {
  double s = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) s += v[i];
  return s / static_cast<double>(count);
}

EvalRequest request(Parameterization p, const GuidanceSpec& g, std::size_t nfe, const std::string& label) {
  EvalRequest r;
  r.sampler.parameterization = p;
  r.sampler.options.guidance = g;
  r.sampler.options.nfe = nfe;
  r.label = label;
  r.field_check = false;
  r.emotion_check = false;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "latentflow_acceptance";
  fs::create_directories(work);
  const RunConfig rc;
  const GuidanceSpec unguided = GuidanceSpec::none();
  const GuidanceSpec guided = rc.sampling.guidance;
  const auto total = Clock::now();

  const Dataset data = make_dataset(rc.scene(), rc.data.clips);
  const Dataset heldout = make_dataset(rc.heldout_scene(), rc.data.heldout_clips);
  std::printf("data: %zu clips, %zu windows; held-out %zu clips\n", data.clips.size(), data.windows.size(),
              heldout.clips.size());

  run(1, "guidance identities", cfv_identities);
  run(2, "OT path", ot_path);
  run(3, "basis and edits", basis_checks);
  run(4, "gradient check", [&] { gradients(data); });
  run(5, "solver orders", solvers);

  std::optional<Trained> fm;
  MetricsReport fm_unguided;
  run(6, "learning", [&] {
    const auto start = Clock::now();
    fm.emplace(train_model(rc, data, Parameterization::Flow, work / "flow.ckpt"));
    const double train_seconds = since(start);
    fm_unguided = evaluate_model(fm->model, heldout, request(Parameterization::Flow, unguided, rc.sampling.nfe, "flow"));
    const MetricsReport g = evaluate_model(fm->model, heldout, request(Parameterization::Flow, guided, rc.sampling.nfe, "flow"));
    const auto& losses = fm->report.step_losses;
    const double early = window_mean(losses, 0, 100), late = window_mean(losses, losses.size() - 100, 100);
    std::printf("  loss: first 100 steps %.4f, last 100 steps %.4f (%.1f%%)\n", early, late, 100.0 * late / early);
    std::printf("  guided %s nfe %zu: r %.4f, energy %.5f (%.2fx floor), boundary %.3f\n", guided.describe().c_str(),
                rc.sampling.nfe, g.correlation, g.energy_distance, g.energy_distance / g.noise_floor, g.boundary_ratio);
    const double ratio = fm_unguided.energy_distance / fm_unguided.noise_floor;
    report(6, "learning",
           fm_unguided.correlation >= 0.8 && ratio <= 3.0 && train_seconds <= 900.0,
           fmt("unguided nfe %zu: r %.4f (min 0.8), energy %.5f = %.2fx floor %.5f (max 3x), training %.0f s (limit 900)",
               rc.sampling.nfe, fm_unguided.correlation, fm_unguided.energy_distance, ratio, fm_unguided.noise_floor,
               train_seconds));
  });

  MetricsReport fm_guided10;
  run(7, "nfe trend", [&] {
    if (!fm) throw std::runtime_error("no trained model");
    const auto start = Clock::now();
    std::vector<MetricsReport> rows;
    for (std::size_t nfe : {2u, 10u, 50u}) {
      rows.push_back(evaluate_model(fm->model, heldout, request(Parameterization::Flow, guided, nfe, "nfe")));
      std::printf("  nfe %zu: energy %.5f, r %.4f, %.4f s/sample\n", nfe, rows.back().energy_distance,
                  rows.back().correlation, rows.back().seconds_per_sample);
    }
    fm_guided10 = rows[1];
    const double seconds = since(start);
    const double e2 = rows[0].energy_distance, e10 = rows[1].energy_distance, e50 = rows[2].energy_distance;
    report(7, "nfe trend", e10 <= e2 && e10 <= 1.05 * e50 && seconds < 300.0,
           fmt("energy nfe2 %.5f, nfe10 %.5f, nfe50 %.5f; nfe10/nfe50 %.3f (max 1.05), sweep %.0f s (limit 300)", e2, e10,
               e50, e10 / e50, seconds));
  });

  std::optional<Trained> eps, x0;
  run(9, "baseline parity", [&] {
    if (!fm) throw std::runtime_error("no trained model");
    eps.emplace(train_model(rc, data, Parameterization::Epsilon, work / "eps.ckpt"));
    x0.emplace(train_model(rc, data, Parameterization::Sample, work / "x0.ckpt"));
    bool ok = true;
    std::string detail = fmt("flow energy %.5f", fm_unguided.energy_distance);
    for (auto [name, t, p] : {std::tuple{"eps", &*eps, Parameterization::Epsilon}, {"x0", &*x0, Parameterization::Sample}}) {
      const auto& curve = t->report.curve;
      const bool finite = std::isfinite(t->report.final_loss());
      const bool decreasing = curve.size() >= 2 && curve.back().loss < curve.front().loss;
      const MetricsReport m = evaluate_model(t->model, heldout, request(p, unguided, rc.sampling.nfe, name));
      const double ratio = m.energy_distance / fm_unguided.energy_distance;
      ok = ok && finite && decreasing && ratio <= 2.0;
      detail += fmt("; %s loss %.4f -> %.4f, DDIM-%zu energy %.5f (%.2fx flow, max 2x)", name, curve.front().loss,
                    curve.back().loss, m.steps, m.energy_distance, ratio);
    }
    report(9, "baseline parity", ok, detail);
  });

  run(8, "efficiency", [&] {
    if (!fm || !eps || !x0) throw std::runtime_error("no trained models");
    const Dataset timing = make_dataset(rc.heldout_scene(), 32);
    const MetricsReport flow = evaluate_model(fm->model, timing, request(Parameterization::Flow, guided, 10, "flow"));
    bool ok = true;
    std::string detail;
    for (auto [name, t, p] : {std::tuple{"eps", &*eps, Parameterization::Epsilon}, {"x0", &*x0, Parameterization::Sample}}) {
      EvalRequest r = request(p, guided, rc.sampling.nfe, name);
      r.sampler.ddim_steps = 50;
      const MetricsReport d = evaluate_model(t->model, timing, r);
      const double k = static_cast<double>(guided.evaluations_per_step() * r.windows);
      const bool counts = flow.evaluations_per_sample == 10.0 * k && d.evaluations_per_sample == 50.0 * k;
      const double speed = d.seconds_per_sample / flow.seconds_per_sample;
      ok = ok && counts && speed >= 3.0;
      detail += fmt("%s%s: evaluations %.0f vs %.0f (expect %.0f vs %.0f), wall-clock %.4f vs %.4f s = %.2fx (min 3x)",
                    detail.empty() ? "" : "; ", name, flow.evaluations_per_sample, d.evaluations_per_sample, 10.0 * k,
                    50.0 * k, flow.seconds_per_sample, d.seconds_per_sample, speed);
    }
    report(8, "efficiency", ok, detail);
  });

  run(10, "continuity", [&] {
    if (!fm) throw std::runtime_error("no trained model");
    bool ok = true;
    std::string detail;
    for (const GuidanceSpec& g : {guided, unguided}) {
      SamplerSpec spec;
      spec.options = rc.sampling;
      spec.options.guidance = g;
      FrameDeltas pooled;
      const std::size_t window = rc.predictor.window;
      for (std::size_t i = 0; i < 100; ++i) {
        const Clip& clip = heldout.clips[i % heldout.clips.size()];
        const std::size_t windows = clip.audio.rows() / window;
        Rng rng(1000 + i);
        const GeneratedSequence s =
            sample_sequence(fm->model, spec, clip.audio, clip.emotion, clip.source_motion(), windows, rng);
        pooled += frame_deltas(s.latents, window);
      }
      const double ratio = pooled.ratio();
      ok = ok && ratio <= 3.0;
      detail += fmt("%s%s: boundary/intra %.3f (max 3)", detail.empty() ? "" : "; ", g.describe().c_str(), ratio);
    }
    report(10, "continuity", ok, detail + ", 100 generations each");
  });

  std::printf("%s: %d failing criteria, %.0f s total\n", failures == 0 ? "ALL PASS" : "FAILURES", failures, since(total));
  return failures == 0 ? 0 : 1;
}
