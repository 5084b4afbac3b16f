#include "latentflow/run_config.hpp"

#include <functional>
#include <vector>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"
#include "latentflow/key_values.hpp"

namespace latentflow {

namespace {

struct Binding {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Member>
Binding size_field(const char* key, Member member) {
  return {key, [=](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [=](RunConfig& c, const std::string& v) { member(c) = parse_size(key, v); }};
}

template <typename Member>
Binding u64_field(const char* key, Member member) {
  return {key, [=](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
          [=](RunConfig& c, const std::string& v) { member(c) = static_cast<std::uint64_t>(parse_size(key, v)); }};
}

template <typename Member>
Binding double_field(const char* key, Member member) {
  return {key, [=](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); },
          [=](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); }};
}

template <typename Member>
Binding bool_field(const char* key, Member member) {
  return {key, [=](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [=](RunConfig& c, const std::string& v) { member(c) = parse_bool(key, v); }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      u64_field("seed", FIELD(seed)),
      size_field("predictor.latent_dim", FIELD(predictor.latent_dim)),
      size_field("predictor.audio_dim", FIELD(predictor.audio_dim)),
      size_field("predictor.hidden", FIELD(predictor.hidden)),
      size_field("predictor.heads", FIELD(predictor.heads)),
      size_field("predictor.half_width", FIELD(predictor.half_width)),
      size_field("predictor.blocks", FIELD(predictor.blocks)),
      size_field("predictor.window", FIELD(predictor.window)),
      size_field("predictor.preceding", FIELD(predictor.preceding)),
      size_field("predictor.extra_dims", FIELD(predictor.extra_dims)),
      size_field("predictor.mlp_ratio", FIELD(predictor.mlp_ratio)),
      {"predictor.conditioning",
       [](const RunConfig& c) {
         return std::string(c.predictor.conditioning == Conditioning::AdaLN ? "adaln" : "cross_attention");
       },
       [](RunConfig& c, const std::string& v) {
         if (v == "adaln") c.predictor.conditioning = Conditioning::AdaLN;
         else if (v == "cross_attention") c.predictor.conditioning = Conditioning::CrossAttention;
         else throw ConfigError("predictor.conditioning: unknown value '" + v + "'");
       }},
      double_field("train.lr", FIELD(train.lr)),
      size_field("train.batch", FIELD(train.batch)),
      size_field("train.steps", FIELD(train.steps)),
      double_field("train.lambda_ot", FIELD(train.lambda_ot)),
      double_field("train.lambda_vel", FIELD(train.lambda_vel)),
      double_field("train.dropout.source", FIELD(train.dropout.source)),
      double_field("train.dropout.emotion", FIELD(train.dropout.emotion)),
      double_field("train.dropout.audio", FIELD(train.dropout.audio)),
      double_field("train.dropout.preceding", FIELD(train.dropout.preceding)),
      size_field("train.log_every", FIELD(train.log_every)),
      {"train.objective", [](const RunConfig& c) { return to_string(c.train.objective); },
       [](RunConfig& c, const std::string& v) { c.train.objective = parse_parameterization(v); }},
      size_field("train.diffusion_steps", FIELD(train.diffusion_steps)),
      u64_field("data.seed", FIELD(data.seed)),
      u64_field("data.clip_seed", FIELD(data.clip_seed)),
      size_field("data.clips", FIELD(data.clips)),
      size_field("data.frames", FIELD(data.frames)),
      size_field("data.directions", FIELD(data.directions)),
      size_field("data.identities", FIELD(data.identities)),
      double_field("data.half_life", FIELD(data.half_life)),
      double_field("data.label_smoothing", FIELD(data.label_smoothing)),
      double_field("data.driving_noise", FIELD(data.driving_noise)),
      size_field("data.stride", FIELD(data.stride)),
      u64_field("data.heldout_clip_seed", FIELD(data.heldout_clip_seed)),
      size_field("data.heldout_clips", FIELD(data.heldout_clips)),
      {"guidance.mode", [](const RunConfig& c) { return to_string(c.sampling.guidance.mode); },
       [](RunConfig& c, const std::string& v) { c.sampling.guidance.mode = parse_guidance_mode(v); }},
      double_field("guidance.gamma", FIELD(sampling.guidance.gamma)),
      double_field("guidance.gamma_a", FIELD(sampling.guidance.gamma_a)),
      double_field("guidance.gamma_e", FIELD(sampling.guidance.gamma_e)),
      {"guidance.baseline.mode", [](const RunConfig& c) { return to_string(c.baseline_guidance.mode); },
       [](RunConfig& c, const std::string& v) { c.baseline_guidance.mode = parse_guidance_mode(v); }},
      double_field("guidance.baseline.gamma", FIELD(baseline_guidance.gamma)),
      double_field("guidance.baseline.gamma_a", FIELD(baseline_guidance.gamma_a)),
      double_field("guidance.baseline.gamma_e", FIELD(baseline_guidance.gamma_e)),
      size_field("sample.nfe", FIELD(sampling.nfe)),
      {"sample.solver", [](const RunConfig& c) { return to_string(c.sampling.solver); },
       [](RunConfig& c, const std::string& v) { c.sampling.solver = parse_solver(v); }},
      bool_field("sample.clamp_preceding", FIELD(sampling.clamp_preceding)),
      size_field("sample.ddim_steps", FIELD(ddim_steps)),
      size_field("sample.windows", FIELD(windows)),
      size_field("eval.field_items", FIELD(eval.field_items)),
      size_field("eval.emotion_clips", FIELD(eval.emotion_clips)),
      bool_field("eval.sliced_wasserstein", FIELD(eval.sliced_wasserstein)),
      size_field("eval.projections", FIELD(eval.projections)),
  };
  return table;
}

#undef FIELD

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  for (const auto& [key, value] : KeyValues::parse(text).entries) {
    bool found = false;
    for (const Binding& b : bindings()) {
      if (key == b.key) {
        b.set(c, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string RunConfig::render() const {
  KeyValues kv;
  for (const Binding& b : bindings()) kv.entries.emplace_back(b.key, b.get(*this));
  return kv.render();
}

std::string RunConfig::hash() const { return short_hash(render()); }

void RunConfig::validate() const {
  predictor.validate();
  train.validate();
  sampling.guidance.validate();
  baseline_guidance.validate();
  if (sampling.nfe == 0) throw ConfigError("sample.nfe must be at least 1");
  if (ddim_steps == 0 || ddim_steps > train.diffusion_steps) {
    throw ConfigError("sample.ddim_steps must lie in 1..train.diffusion_steps");
  }
  if (windows == 0) throw ConfigError("sample.windows must be at least 1");
  if (data.stride == 0) throw ConfigError("data.stride must be positive");
  if (data.frames < predictor.window) throw ConfigError("data.frames shorter than predictor.window");
  if (predictor.preceding > predictor.window) throw ConfigError("predictor.preceding longer than predictor.window");
  scene().validate();
}

SceneSpec RunConfig::scene() const {
  SceneSpec s = SceneSpec::make(data.seed, data.clip_seed, predictor.latent_dim, data.directions, predictor.audio_dim);
  s.identities = data.identities;
  s.frames = data.frames;
  s.half_life = data.half_life;
  s.label_smoothing = data.label_smoothing;
  s.driving_noise = data.driving_noise;
  return s;
}

SceneSpec RunConfig::heldout_scene() const { return scene().heldout(data.heldout_clip_seed, data.identities); }

}  // namespace latentflow
