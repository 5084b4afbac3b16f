#include "latentflow/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "latentflow/binary_io.hpp"
#include "latentflow/checkpoint.hpp"
#include "latentflow/error.hpp"
#include "latentflow/evaluation.hpp"
#include "latentflow/key_values.hpp"
#include "latentflow/rng.hpp"
#include "latentflow/run_config.hpp"
#include "latentflow/sequence_file.hpp"
#include "latentflow/synth_data.hpp"
#include "latentflow/training.hpp"

namespace latentflow {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  bool json = false;
};

RunConfig load_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : RunConfig::parse(read_text(g.config_path));
  if (g.seed) {
    c.seed = *g.seed;
    c.train.seed = *g.seed;
  } else {
    c.train.seed = c.seed;
  }
  c.validate();
  return c;
}

fs::path require_out(const Globals& g, const char* verb) {
  if (g.out.empty()) throw UsageError(std::string(verb) + " needs --out");
  const fs::path out(g.out);
  if (fs::exists(out) && !g.force) throw DataError(out.string() + " exists; pass --force to overwrite");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  return out;
}

/// Report outputs go to <prefix>.csv and <prefix>.json; a trailing .csv or
/// .json on --out is dropped.
fs::path require_report_prefix(const Globals& g, const char* verb) {
  if (g.out.empty()) throw UsageError(std::string(verb) + " needs --out");
  fs::path prefix(g.out);
  if (prefix.extension() == ".json" || prefix.extension() == ".csv") prefix.replace_extension();
  for (const char* ext : {".csv", ".json"}) {
    const fs::path target = prefix.string() + ext;
    if (fs::exists(target) && !g.force) throw DataError(target.string() + " exists; pass --force to overwrite");
  }
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  return prefix;
}

std::string file_hash(const fs::path& path) { return to_hex(sha256(read_file(path))).substr(0, 16); }

/// Basis of the world a checkpoint was trained on.
MotionBasis checkpoint_basis(const Checkpoint& ckpt) {
  const RunConfig c = ckpt.run_config.empty() ? RunConfig{} : RunConfig::parse(ckpt.run_config);
  return c.scene().basis();
}

SamplerSpec sampler_for(const Checkpoint& ckpt, const RunConfig& config) {
  SamplerSpec s;
  s.parameterization = ckpt.parameterization;
  s.options = config.sampling;
  if (ckpt.parameterization != Parameterization::Flow) s.options.guidance = config.baseline_guidance;
  s.ddim_steps = config.ddim_steps;
  s.schedule_steps = config.train.diffusion_steps;
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_report_files(const fs::path& prefix, const std::vector<MetricsReport>& rows,
                        const nlohmann::ordered_json& extra) {
  std::string csv = MetricsReport::csv_header() + "\n";
  nlohmann::ordered_json j = extra;
  j["rows"] = nlohmann::json::array();
  for (const MetricsReport& r : rows) {
    csv += r.csv_row() + "\n";
    j["rows"].push_back(nlohmann::ordered_json::parse(r.to_json()));
  }
  write_text(prefix.string() + ".csv", csv);
  write_text(prefix.string() + ".json", j.dump(2) + "\n");
}

// --- verbs -----------------------------------------------------------------

struct GenDataArgs {
  std::optional<std::size_t> clips;
  bool heldout = false;
};

int cmd_gen_data(const Globals& g, const GenDataArgs& a, std::ostream& out) {
  const RunConfig config = load_config(g);
  const fs::path path = require_out(g, "gen-data");
  const SceneSpec spec = a.heldout ? config.heldout_scene() : config.scene();
  const std::size_t clips = a.clips.value_or(a.heldout ? config.data.heldout_clips : config.data.clips);
  const Dataset data = make_dataset(spec, clips, config.predictor.window, config.predictor.preceding, config.data.stride);
  const std::string checksum = save_dataset(data, path);
  write_text(path.string() + ".config", config.render());
  if (g.json) {
    out << data.manifest_json(checksum);
  } else {
    out << "dataset " << path.string() << "\n"
        << "  clips " << data.clips.size() << ", windows " << data.windows.size() << ", frames " << spec.frames << "\n"
        << "  scene seed " << spec.seed << ", clip seed " << spec.clip_seed << ", config " << config.hash() << "\n"
        << "  sha256 " << checksum << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string data;
  std::optional<std::size_t> steps;
  std::optional<std::string> objective;
  std::optional<double> lr;
  std::optional<double> lambda_vel;
};

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
  RunConfig config = load_config(g);
  if (a.steps) config.train.steps = *a.steps;
  if (a.objective) config.train.objective = parse_parameterization(*a.objective);
  if (a.lr) config.train.lr = *a.lr;
  if (a.lambda_vel) config.train.lambda_vel = *a.lambda_vel;
  config.validate();
  const fs::path path = require_out(g, "train");
  const Dataset data = load_dataset(a.data);

  VectorFieldPredictor model(config.predictor, config.seed);
  std::string curve = "step,loss\n";
  const TrainReport report = train(model, data, config.train, [&](const LossPoint& p) {
    curve += std::to_string(p.step) + "," + format_double(p.loss) + "\n";
    if (!g.json) out << "step " << p.step << " loss " << format_double(p.loss) << "\n" << std::flush;
  });
  const double final_loss = report.curve.empty() ? kNotMeasured : report.final_loss();
  save_checkpoint(make_checkpoint(model, config.train.objective, config.seed, config.train.steps, final_loss,
                                  config.render()),
                  path);
  write_text(path.string() + ".loss.csv", curve);
  write_text(path.string() + ".config", config.render());
  nlohmann::ordered_json j;
  j["checkpoint"] = path.string();
  j["objective"] = to_string(config.train.objective);
  j["predictor_hash"] = config.predictor.hash();
  j["config_hash"] = config.hash();
  j["seed"] = config.seed;
  j["steps"] = config.train.steps;
  j["final_loss"] = std::isnan(final_loss) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(final_loss);
  j["seconds"] = report.seconds;
  if (g.json) out << j.dump(2) << "\n";
  else out << "checkpoint " << path.string() << " (" << config.predictor.hash() << "), " << report.seconds << " s\n";
  return 0;
}

struct SampleArgs {
  std::string checkpoint;
  std::string data;
  std::size_t clip = 0;
  std::optional<std::size_t> windows;
  std::optional<std::size_t> nfe;
  std::optional<std::string> solver;
  std::optional<std::string> guidance;
  std::optional<double> gamma;
  std::optional<double> gamma_a;
  std::optional<double> gamma_e;
  std::optional<std::size_t> emotion;
  std::optional<std::size_t> ddim_steps;
  std::string trajectory;
  bool no_clamp = false;
};

void apply_sampling_overrides(RunConfig& config, const SampleArgs& a) {
  if (a.windows) config.windows = *a.windows;
  if (a.nfe) config.sampling.nfe = *a.nfe;
  if (a.solver) config.sampling.solver = parse_solver(*a.solver);
  for (GuidanceSpec* g : {&config.sampling.guidance, &config.baseline_guidance}) {
    if (a.guidance) g->mode = parse_guidance_mode(*a.guidance);
    if (a.gamma) g->gamma = *a.gamma;
    if (a.gamma_a) g->gamma_a = *a.gamma_a;
    if (a.gamma_e) g->gamma_e = *a.gamma_e;
  }
  if (a.ddim_steps) config.ddim_steps = *a.ddim_steps;
  if (a.no_clamp) config.sampling.clamp_preceding = false;
  config.validate();
}

int cmd_sample(const Globals& g, const SampleArgs& a, std::ostream& out) {
  RunConfig config = load_config(g);
  apply_sampling_overrides(config, a);
  const fs::path path = require_out(g, "sample");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const VectorFieldPredictor model = ckpt.restore(&config.predictor);
  const PredictorConfig& c = model.config();
  const std::size_t frames = config.windows * c.window;

  Tensor2 audio;
  std::vector<double> emotion(kEmotionCount, 0.0);
  std::vector<double> source(c.latent_dim, 0.0);
  std::string drive;
  MotionBasis basis = checkpoint_basis(ckpt);
  if (!a.data.empty()) {
    const Dataset data = load_dataset(a.data);
    if (a.clip >= data.clips.size()) throw IndexError("clip " + std::to_string(a.clip) + " of " + std::to_string(data.clips.size()));
    const Clip& clip = data.clips[a.clip];
    if (clip.audio.rows() < frames) throw DataError("clip has " + std::to_string(clip.audio.rows()) + " frames, need " + std::to_string(frames));
    audio = clip.audio;
    emotion = clip.emotion;
    source = clip.source_motion();
    basis = data.basis();
    drive = a.data + "#" + std::to_string(a.clip);
  } else {
    audio = gen_driving(derive_seed(config.seed, 0xD41), frames, c.audio_dim, config.data.driving_noise);
    emotion[kNeutralEmotion] = 1.0;
    drive = "seeded driving " + std::to_string(config.seed);
  }
  if (a.emotion) emotion = redirect_emotion(emotion, *a.emotion);

  SamplerSpec sampler = sampler_for(ckpt, config);
  sampler.options.keep_trajectory = !a.trajectory.empty();
  Rng rng(config.seed, 0x5A3);
  Tensor2 latents;
  std::size_t evaluations = 0;
  double seconds = 0.0;
  if (sampler.parameterization == Parameterization::Flow) {
    SequenceResult r = generate_sequence(model, audio, emotion, source, config.windows, sampler.options, rng);
    if (!a.trajectory.empty()) {
      std::vector<Trajectory> paths;
      for (const WindowResult& w : r.windows) paths.push_back(w.trajectory);
      save_trajectory(paths, a.trajectory);
    }
    latents = std::move(r.latents);
    evaluations = r.evaluations;
    seconds = r.integrate_seconds;
  } else {
    if (!a.trajectory.empty()) throw UsageError("--trajectory is only available for flow checkpoints");
    GeneratedSequence r = sample_sequence(model, sampler, audio, emotion, source, config.windows, rng);
    latents = std::move(r.latents);
    evaluations = r.evaluations;
    seconds = r.integrate_seconds;
  }

  KeyValues prov;
  prov.entries = {{"config_hash", config.hash()},
                  {"predictor_hash", c.hash()},
                  {"checkpoint", a.checkpoint},
                  {"checkpoint_sha256", file_hash(a.checkpoint)},
                  {"parameterization", to_string(sampler.parameterization)},
                  {"seed", std::to_string(config.seed)},
                  {"drive", drive},
                  {"emotion", a.emotion ? "redirected to " + std::to_string(*a.emotion) : "from drive"},
                  {"windows", std::to_string(config.windows)},
                  {"steps", std::to_string(sampler.steps())},
                  {"solver", sampler.parameterization == Parameterization::Flow ? to_string(sampler.options.solver) : "ddim"},
                  {"guidance", sampler.options.guidance.describe()},
                  {"clamp_preceding", sampler.options.clamp_preceding ? "true" : "false"},
                  {"evaluations", std::to_string(evaluations)}};
  const SequenceFile file = make_sequence_file(latents, basis, prov.render());
  save_sequence(file, path);
  write_text(path.string() + ".config", config.render());

  nlohmann::ordered_json j;
  j["sequence"] = path.string();
  j["frames"] = latents.rows();
  j["evaluations"] = evaluations;
  j["integrate_seconds"] = seconds;
  j["config_hash"] = config.hash();
  j["seed"] = config.seed;
  if (g.json) out << j.dump(2) << "\n";
  else out << "sequence " << path.string() << ": " << latents.rows() << " frames, " << evaluations << " predictor evaluations\n";
  return 0;
}

struct EditArgs {
  std::string input;
  std::size_t index = 1;
  double delta = 0.0;
};

int cmd_edit(const Globals& g, const EditArgs& a, std::ostream& out) {
  const SequenceFile before = load_sequence(a.input);
  const SequenceFile after = edit_sequence(before, a.index, a.delta);
  const fs::path path = require_out(g, "edit");
  save_sequence(after, path);
  nlohmann::ordered_json j;
  j["sequence"] = path.string();
  j["direction"] = a.index;
  j["delta"] = a.delta;
  j["coefficients"] = nlohmann::json::array();
  if (!g.json) out << "direction  mean_before  mean_after\n";
  for (std::size_t m = 0; m < before.coefficients.cols(); ++m) {
    double b = 0.0, e = 0.0;
    for (std::size_t l = 0; l < before.coefficients.rows(); ++l) {
      b += before.coefficients(l, m);
      e += after.coefficients(l, m);
    }
    b /= static_cast<double>(before.coefficients.rows());
    e /= static_cast<double>(before.coefficients.rows());
    j["coefficients"].push_back({{"direction", m + 1}, {"before", b}, {"after", e}});
    if (!g.json) {
      out << std::setw(9) << m + 1 << "  " << std::setw(11) << std::fixed << std::setprecision(6) << b << "  "
          << std::setw(10) << e << "\n";
    }
  }
  if (g.json) out << j.dump(2) << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  SampleArgs sampling;
};

EvalRequest request_for(const RunConfig& config, const Checkpoint& ckpt, const std::string& label) {
  EvalRequest r;
  r.sampler = sampler_for(ckpt, config);
  r.windows = config.windows;
  r.seed = config.seed;
  r.config = config.eval;
  r.label = label;
  r.config_hash = config.hash();
  r.final_train_loss = ckpt.final_loss;
  return r;
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  RunConfig config = load_config(g);
  apply_sampling_overrides(config, a.sampling);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const VectorFieldPredictor model = ckpt.restore(&config.predictor);
  const Dataset heldout = load_dataset(a.data);
  if (heldout.clips.empty()) throw DataError("empty held-out set");
  const MetricsReport report = evaluate_model(model, heldout, request_for(config, ckpt, "eval"));
  if (!g.out.empty()) {
    const fs::path prefix = require_report_prefix(g, "eval");
    write_report_files(prefix, {report}, {{"config_hash", config.hash()}, {"seed", config.seed}});
  }
  if (g.json) {
    out << report.to_json() << "\n";
  } else {
    out << MetricsReport::csv_header() << "\n" << report.csv_row() << "\n";
  }
  return 0;
}

struct SweepArgs {
  std::string checkpoint;
  std::string data;
  std::string axis;
  std::string values;
  SampleArgs sampling;
};

/// Least-squares r^2 of y against x.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) return kNotMeasured;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxx == 0 || syy == 0 ? kNotMeasured : sxy * sxy / (sxx * syy);
}

int cmd_sweep(const Globals& g, const SweepArgs& a, std::ostream& out) {
  RunConfig config = load_config(g);
  apply_sampling_overrides(config, a.sampling);
  static const std::vector<std::string> axes = {"nfe", "gamma_a", "gamma_e", "solver", "baseline"};
  if (std::ranges::find(axes, a.axis) == axes.end()) throw UsageError("unknown sweep axis '" + a.axis + "'");
  const std::vector<std::string> values = split_list(a.values);
  if (values.empty()) throw UsageError("sweep needs at least one value");
  const fs::path prefix = require_report_prefix(g, "sweep");
  const Dataset heldout = load_dataset(a.data);

  std::optional<Checkpoint> base;
  if (a.axis != "baseline") {
    if (a.checkpoint.empty()) throw UsageError("sweep --axis " + a.axis + " needs --checkpoint");
    base = load_checkpoint(a.checkpoint);
  }
  std::vector<MetricsReport> rows;
  std::vector<double> steps, seconds;
  for (const std::string& v : values) {
    RunConfig rc = config;
    Checkpoint ckpt = base ? *base : load_checkpoint(v);
    if (a.axis == "nfe") rc.sampling.nfe = parse_size("nfe", v);
    else if (a.axis == "gamma_a") rc.sampling.guidance.gamma_a = rc.baseline_guidance.gamma_a = parse_double("gamma_a", v);
    else if (a.axis == "gamma_e") rc.sampling.guidance.gamma_e = rc.baseline_guidance.gamma_e = parse_double("gamma_e", v);
    else if (a.axis == "solver") rc.sampling.solver = parse_solver(v);
    rc.validate();
    const VectorFieldPredictor model = ckpt.restore(&rc.predictor);
    EvalRequest request = request_for(rc, ckpt, a.axis + "=" + v);
    request.emotion_check = false;
    MetricsReport row = evaluate_model(model, heldout, request);
    steps.push_back(static_cast<double>(row.steps));
    seconds.push_back(row.seconds_per_sample);
    if (!g.json) out << row.label << ": r " << format_double(row.correlation) << ", energy " << format_double(row.energy_distance)
                     << ", " << format_double(row.seconds_per_sample) << " s/sample\n" << std::flush;
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json extra;
  extra["axis"] = a.axis;
  extra["config_hash"] = config.hash();
  extra["seed"] = config.seed;
  if (a.axis == "nfe") {
    const double r2 = linear_r2(steps, seconds);
    extra["timing_fit_r2"] = std::isnan(r2) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r2);
  }
  write_report_files(prefix, rows, extra);
  if (g.json) out << read_text(prefix.string() + ".json");
  return 0;
}

int cmd_inspect(const Globals& g, const std::string& path, std::ostream& out) {
  const std::string magic = peek_magic(path);
  nlohmann::ordered_json j;
  j["path"] = path;
  if (magic == std::string("LFDATA\0\0", 8)) {
    const Dataset d = load_dataset(path);
    j = nlohmann::ordered_json::parse(d.manifest_json(to_hex(sha256(read_file(path)))));
  } else if (magic == std::string("LFCKPT\0\0", 8)) {
    const Checkpoint c = load_checkpoint(path);
    j["kind"] = "checkpoint";
    j["parameterization"] = to_string(c.parameterization);
    j["predictor_hash"] = c.config.hash();
    j["predictor"] = c.config.canonical();
    j["parameters"] = c.params.size();
    j["seed"] = c.seed;
    j["steps"] = c.steps;
    j["final_loss"] = c.final_loss;
  } else if (magic == std::string("LFSEQ\0\0\0", 8)) {
    const SequenceFile s = load_sequence(path);
    j["kind"] = "sequence";
    j["frames"] = s.latents.rows();
    j["latent_dim"] = s.latents.cols();
    j["directions"] = s.coefficients.cols();
    j["provenance"] = s.provenance;
  } else if (magic == std::string("LFBASIS\0", 8)) {
    const MotionBasis b = MotionBasis::from_bytes(read_file(path));
    j["kind"] = "basis";
    j["dims"] = b.dims();
    j["count"] = b.count();
    j["orthonormality_error"] = b.orthonormality_error();
  } else {
    throw DataError(path + " is not a latentflow file");
  }
  if (g.json) {
    out << j.dump(2) << "\n";
  } else {
    for (const auto& [k, v] : j.items()) out << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  }
  return 0;
}

void add_sampling_options(CLI::App* cmd, SampleArgs& a) {
  cmd->add_option("--windows", a.windows, "Number of sliding windows");
  cmd->add_option("--nfe", a.nfe, "ODE solver steps");
  cmd->add_option("--solver", a.solver, "euler or midpoint");
  cmd->add_option("--guidance", a.guidance, "none, single or incremental");
  cmd->add_option("--gamma", a.gamma, "Single-scale guidance");
  cmd->add_option("--gamma-a", a.gamma_a, "Audio guidance scale");
  cmd->add_option("--gamma-e", a.gamma_e, "Emotion guidance scale");
  cmd->add_option("--ddim-steps", a.ddim_steps, "DDIM steps for diffusion checkpoints");
  cmd->add_flag("--no-clamp", a.no_clamp, "Integrate the preceding rows instead of clamping them");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow-matching motion latent generation on synthetic data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (key = value lines)");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--out", g.out, "Output path");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_flag("--json", g.json, "Machine-readable output");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--clips", gen.clips, "Clip count override");
  gen_cmd->add_flag("--heldout", gen.heldout, "Generate the held-out split");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a predictor");
  train_cmd->add_option("--data", tr.data, "Dataset file")->required();
  train_cmd->add_option("--steps", tr.steps, "Step count override");
  train_cmd->add_option("--objective", tr.objective, "flow, eps or x0");
  train_cmd->add_option("--lr", tr.lr, "Learning rate override");
  train_cmd->add_option("--lambda-vel", tr.lambda_vel, "Velocity loss weight override");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Generate a latent sequence");
  sample_cmd->add_option("--checkpoint", sa.checkpoint, "Checkpoint file")->required();
  sample_cmd->add_option("--data", sa.data, "Dataset supplying the driving clip");
  sample_cmd->add_option("--clip", sa.clip, "Clip index within --data");
  sample_cmd->add_option("--emotion", sa.emotion, "Redirect the emotion label to this class (0..6)");
  sample_cmd->add_option("--trajectory", sa.trajectory, "Write per-step states here");
  add_sampling_options(sample_cmd, sa);

  EditArgs ed;
  auto* edit_cmd = app.add_subcommand("edit", "Shift one basis coefficient of a sequence");
  edit_cmd->add_option("--in", ed.input, "Sequence file")->required();
  edit_cmd->add_option("--index", ed.index, "Direction, 1-based")->required();
  edit_cmd->add_option("--delta", ed.delta, "Coefficient shift")->required();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate along one axis");
  sweep_cmd->add_option("--checkpoint", sw.checkpoint, "Checkpoint file");
  sweep_cmd->add_option("--data", sw.data, "Held-out dataset")->required();
  sweep_cmd->add_option("--axis", sw.axis, "nfe, gamma_a, gamma_e, solver or baseline")->required();
  sweep_cmd->add_option("--values", sw.values, "Comma-separated values (checkpoint paths for baseline)")->required();
  add_sampling_options(sweep_cmd, sw.sampling);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint against held-out ground truth");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Held-out dataset")->required();
  add_sampling_options(eval_cmd, ev.sampling);

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a latentflow file");
  inspect_cmd->add_option("path", inspect_path, "File")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(g, gen, out);
    if (*train_cmd) return cmd_train(g, tr, out);
    if (*sample_cmd) return cmd_sample(g, sa, out);
    if (*edit_cmd) return cmd_edit(g, ed, out);
    if (*sweep_cmd) return cmd_sweep(g, sw, out);
    if (*eval_cmd) return cmd_eval(g, ev, out);
    if (*inspect_cmd) return cmd_inspect(g, inspect_path, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace latentflow
