#include "latentflow/evaluation.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "latentflow/error.hpp"
#include "latentflow/key_values.hpp"
#include "latentflow/metrics.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

std::size_t SamplerSpec::steps() const {
  return parameterization == Parameterization::Flow ? options.nfe : ddim_steps;
}

GeneratedSequence sample_sequence(const VectorFieldPredictor& predictor, const SamplerSpec& sampler,
                                  const Tensor2& audio, const std::vector<double>& emotion,
                                  const std::vector<double>& source_motion, std::size_t windows, Rng& rng) {
  if (sampler.parameterization == Parameterization::Flow) {
    SequenceResult r = generate_sequence(predictor, audio, emotion, source_motion, windows, sampler.options, rng);
    return {std::move(r.latents), r.evaluations, r.integrate_seconds};
  }
  const PredictorConfig& c = predictor.config();
  if (audio.rows() < windows * c.window) throw ShapeError("audio too short for " + std::to_string(windows) + " windows");
  const NoiseSchedule schedule = NoiseSchedule::cosine(sampler.schedule_steps);
  GeneratedSequence out;
  out.latents = Tensor2(windows * c.window, c.latent_dim);
  WindowState state = WindowState::initial(c);
  for (std::size_t w = 0; w < windows; ++w) {
    ConditionInputs drive;
    drive.audio = concat_rows(Tensor2(c.preceding, c.audio_dim), audio.slice_rows(w * c.window, (w + 1) * c.window));
    drive.emotion = emotion;
    drive.source_motion = source_motion;
    DdimWindowResult r = ddim_window(predictor, sampler.parameterization, schedule, sampler.ddim_steps, state, drive,
                                     sampler.options.guidance, rng, sampler.options.clamp_preceding);
    out.latents.set_rows(w * c.window, r.latents);
    out.evaluations += r.evaluations;
    out.integrate_seconds += r.integrate_seconds;
    state = std::move(r.next);
  }
  return out;
}

namespace {

std::string number(double v) { return std::isnan(v) ? "nan" : format_double(v); }

nlohmann::ordered_json json_number(double v) {
  return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

Tensor2 stack(const std::vector<Tensor2>& blocks) {
  std::size_t rows = 0;
  for (const Tensor2& b : blocks) rows += b.rows();
  Tensor2 out(rows, blocks.empty() ? 0 : blocks.front().cols());
  std::size_t at = 0;
  for (const Tensor2& b : blocks) {
    out.set_rows(at, b);
    at += b.rows();
  }
  return out;
}

double mean_abs_delta_error(const Tensor2& generated, const Tensor2& oracle) {
  double s = 0.0;
  for (std::size_t l = 1; l < generated.rows(); ++l) {
    for (std::size_t c = 0; c < generated.cols(); ++c) {
      s += std::abs((generated(l, c) - generated(l - 1, c)) - (oracle(l, c) - oracle(l - 1, c)));
    }
  }
  return s / static_cast<double>((generated.rows() - 1) * generated.cols());
}

struct Split {
  std::size_t half = 0;
  std::size_t frames = 0;
};

Split split_of(const Dataset& heldout, std::size_t windows, std::size_t window) {
  if (heldout.clips.size() < 4) throw DataError("held-out set needs at least 4 clips, has " + std::to_string(heldout.clips.size()));
  const std::size_t frames = windows * window;
  if (heldout.spec.frames < frames) {
    throw DataError("held-out clips have " + std::to_string(heldout.spec.frames) + " frames, need " + std::to_string(frames));
  }
  return {heldout.clips.size() / 2, frames};
}

/// Sampler-agnostic part of the report: `generate(clip, emotion, rng)`
/// returns the latents for a held-out clip.
template <typename Generate>
MetricsReport score(const Dataset& heldout, const EvalRequest& request, std::size_t window, Generate generate) {
  const Split split = split_of(heldout, request.windows, window);
  const MotionBasis basis = heldout.basis();
  MetricsReport report;
  report.label = request.label;
  report.config_hash = request.config_hash;
  report.seed = request.seed;
  report.final_train_loss = request.final_train_loss;
  report.sequences = split.half;

  std::vector<Tensor2> generated;
  std::vector<Tensor2> oracle_a;
  std::vector<Tensor2> oracle_b;
  FrameDeltas deltas;
  double correlation = 0.0;
  double velocity = 0.0;
  double seconds = 0.0;
  double evaluations = 0.0;
  for (std::size_t k = 0; k < split.half; ++k) {
    const Clip& clip = heldout.clips[k];
    Rng rng(request.seed, k);
    const GeneratedSequence seq = generate(clip, clip.emotion, rng);
    const Tensor2 truth = clip.motion.slice_rows(0, split.frames);
    correlation += mean_column_correlation(project_rows(seq.latents, basis), clip.coefficients.slice_rows(0, split.frames));
    velocity += mean_abs_delta_error(seq.latents, truth);
    deltas += frame_deltas(seq.latents, window);
    seconds += seq.integrate_seconds;
    evaluations += static_cast<double>(seq.evaluations);
    generated.push_back(seq.latents);
    oracle_a.push_back(truth);
    oracle_b.push_back(heldout.clips[split.half + k].motion.slice_rows(0, split.frames));
  }
  const double n = static_cast<double>(split.half);
  report.correlation = correlation / n;
  report.velocity_error = velocity / n;
  report.seconds_per_sample = seconds / n;
  report.evaluations_per_sample = evaluations / n;
  report.boundary_ratio = request.windows > 1 ? deltas.ratio() : kNotMeasured;
  const Tensor2 gen = stack(generated);
  const Tensor2 truth_b = stack(oracle_b);
  report.energy_distance = energy_distance(gen, truth_b);
  report.noise_floor = energy_distance(stack(oracle_a), truth_b);
  if (request.config.sliced_wasserstein) {
    report.sliced_wasserstein = sliced_wasserstein(gen, truth_b, request.config.projections, request.seed);
  }

  if (request.emotion_check) {
    const std::size_t clips = std::min(request.config.emotion_clips, split.half);
    const std::size_t m = basis.count();
    std::vector<std::vector<double>> means(kEmotionCount, std::vector<double>(m, 0.0));
    for (std::size_t k = 0; k < clips; ++k) {
      const Clip& clip = heldout.clips[k];
      for (std::size_t e = 0; e < kEmotionCount; ++e) {
        Rng rng(request.seed ^ 0xE30, k);
        const GeneratedSequence seq = generate(clip, redirect_emotion(clip.emotion, e), rng);
        const Tensor2 coeffs = project_rows(seq.latents, basis);
        for (std::size_t l = 0; l < coeffs.rows(); ++l) {
          for (std::size_t j = 0; j < m; ++j) means[e][j] += coeffs(l, j) / static_cast<double>(coeffs.rows() * clips);
        }
      }
    }
    std::vector<double> shift;
    std::vector<double> expected;
    for (std::size_t e = 0; e < kEmotionCount; ++e) {
      if (e == kNeutralEmotion) continue;
      for (std::size_t j = 0; j < m; ++j) {
        shift.push_back(means[e][j] - means[kNeutralEmotion][j]);
        expected.push_back(heldout.spec.emotion_offsets(e, j) - heldout.spec.emotion_offsets(kNeutralEmotion, j));
      }
    }
    report.emotion_cosine = cosine_similarity(shift, expected);
  }
  return report;
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["parameterization"] = parameterization;
  j["solver"] = solver;
  j["guidance"] = guidance;
  j["steps"] = steps;
  j["sequences"] = sequences;
  j["final_train_loss"] = json_number(final_train_loss);
  j["field_mse"] = json_number(field_mse);
  j["correlation"] = json_number(correlation);
  j["energy_distance"] = json_number(energy_distance);
  j["noise_floor"] = json_number(noise_floor);
  j["boundary_ratio"] = json_number(boundary_ratio);
  j["emotion_cosine"] = json_number(emotion_cosine);
  j["velocity_error"] = json_number(velocity_error);
  j["sliced_wasserstein"] = json_number(sliced_wasserstein);
  j["seconds_per_sample"] = json_number(seconds_per_sample);
  j["evaluations_per_sample"] = json_number(evaluations_per_sample);
  return j.dump(2);
}

std::string MetricsReport::csv_header() {
  return "label,config_hash,seed,parameterization,solver,guidance,steps,sequences,final_train_loss,field_mse,"
         "correlation,energy_distance,noise_floor,boundary_ratio,emotion_cosine,velocity_error,"
         "sliced_wasserstein,seconds_per_sample,evaluations_per_sample";
}

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  os << label << ',' << config_hash << ',' << seed << ',' << parameterization << ',' << solver << ',' << guidance
     << ',' << steps << ',' << sequences;
  for (double v : {final_train_loss, field_mse, correlation, energy_distance, noise_floor, boundary_ratio,
                   emotion_cosine, velocity_error, sliced_wasserstein, seconds_per_sample, evaluations_per_sample}) {
    os << ',' << number(v);
  }
  return os.str();
}

double field_mse(const VectorFieldPredictor& predictor, const Dataset& heldout, std::size_t items, std::uint64_t seed) {
  const PredictorConfig& c = predictor.config();
  const std::vector<std::size_t> starts = window_starts(heldout.spec.frames, c.window, c.preceding, heldout.stride);
  if (heldout.clips.empty() || starts.empty() || items == 0) throw DataError("no held-out items for the field check");
  Rng rng(seed, 0xF1E1D);
  double total = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    const Clip& clip = heldout.clips[i % heldout.clips.size()];
    const TrainingItem item = make_item(clip, starts[(i / heldout.clips.size()) % starts.size()], c.window, c.preceding);
    const Tensor2 x0 = Tensor2::normal(c.window, c.latent_dim, rng);
    const double t = rng.uniform();
    DropoutMask mask;
    mask.drop_preceding = !item.has_predecessor;
    const Tensor2 x_t = concat_rows(item.preceding_motion, ot_interpolate(x0, item.target_motion, t).x);
    const Tensor2 v = predictor.predict_field(x_t, predictor.to_condition(item.inputs, t, mask));
    const Tensor2 diff = v.slice_rows(c.preceding, c.frames()) - target_field(x0, item.target_motion);
    total += frobenius_norm(diff) * frobenius_norm(diff) / static_cast<double>(diff.size());
  }
  return total / static_cast<double>(items);
}

MetricsReport evaluate_model(const VectorFieldPredictor& predictor, const Dataset& heldout, const EvalRequest& request) {
  const PredictorConfig& c = predictor.config();
  if (heldout.spec.latent_dim != c.latent_dim || heldout.spec.audio_dim != c.audio_dim) {
    throw ConfigError("held-out data dimensions do not match the predictor");
  }
  MetricsReport report = score(heldout, request, c.window, [&](const Clip& clip, const std::vector<double>& emotion, Rng& rng) {
    return sample_sequence(predictor, request.sampler, clip.audio, emotion, clip.source_motion(), request.windows, rng);
  });
  report.parameterization = to_string(request.sampler.parameterization);
  report.solver = request.sampler.parameterization == Parameterization::Flow ? to_string(request.sampler.options.solver) : "ddim";
  report.guidance = request.sampler.options.guidance.describe();
  report.steps = request.sampler.steps();
  if (request.field_check && request.sampler.parameterization == Parameterization::Flow) {
    report.field_mse = field_mse(predictor, heldout, request.config.field_items, request.seed);
  }
  return report;
}

MetricsReport evaluate_oracle(const Dataset& heldout, const EvalRequest& request) {
  const MotionBasis basis = heldout.basis();
  MetricsReport report = score(heldout, request, heldout.window, [&](const Clip& clip, const std::vector<double>& emotion, Rng&) {
    std::size_t e = clip.emotion_index;
    for (std::size_t k = 0; k < emotion.size(); ++k) {
      if (emotion[k] > emotion[e]) e = k;
    }
    GroundTruth truth = gen_ground_truth(heldout.spec, basis, clip.audio, e, 0);
    return GeneratedSequence{truth.motion.slice_rows(0, request.windows * heldout.window), 0, 0.0};
  });
  report.parameterization = "oracle";
  report.solver = "none";
  report.guidance = "none";
  return report;
}

}  // namespace latentflow
