#include "latentflow/predictor.hpp"

#include <algorithm>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"
#include "latentflow/key_values.hpp"
#include "latentflow/layers.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

const char* conditioning_name(Conditioning c) {
  return c == Conditioning::AdaLN ? "adaln" : "cross_attention";
}

Conditioning parse_conditioning(const std::string& s) {
  if (s == "adaln") return Conditioning::AdaLN;
  if (s == "cross_attention") return Conditioning::CrossAttention;
  throw ConfigError("unknown conditioning '" + s + "'");
}

std::string block_prefix(std::size_t b) { return "block" + std::to_string(b) + "."; }

void check_stage(int stage) {
  if (stage != 1 && stage != 2) throw ConfigError("modulation stage must be 1 or 2");
}

/// Column offset of alpha_i / beta_i / gamma_i inside the 6h modulation.
std::size_t chunk(int stage, int which, std::size_t h) {
  return (static_cast<std::size_t>(stage - 1) * 3 + static_cast<std::size_t>(which)) * h;
}

void check_modulation(const Tensor2& x, const Tensor2& modulation) {
  if (modulation.rows() != x.rows() || modulation.cols() != 6 * x.cols()) {
    throw ShapeError("modulation " + modulation.shape_string() + " for input " + x.shape_string());
  }
}

}  // namespace

void PredictorConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(latent_dim > 0 && audio_dim > 0 && hidden > 0 && heads > 0 && blocks > 0 && window > 0,
          "predictor dimensions must be positive");
  require(hidden % heads == 0, "hidden " + std::to_string(hidden) + " not divisible by heads " +
                                   std::to_string(heads));
  require(hidden % 2 == 0, "hidden width must be even for the sinusoidal embedding");
  require(emotion_dims == kEmotionCount, "emotion_dims must be 7");
  require(mlp_ratio > 0, "mlp_ratio must be positive");
}

std::string PredictorConfig::canonical() const {
  KeyValues kv;
  auto put = [&](const char* k, std::size_t v) { kv.entries.emplace_back(k, std::to_string(v)); };
  put("latent_dim", latent_dim);
  put("audio_dim", audio_dim);
  put("hidden", hidden);
  put("heads", heads);
  put("half_width", half_width);
  put("blocks", blocks);
  put("window", window);
  put("preceding", preceding);
  put("emotion_dims", emotion_dims);
  put("extra_dims", extra_dims);
  put("mlp_ratio", mlp_ratio);
  kv.entries.emplace_back("conditioning", conditioning_name(conditioning));
  return kv.render();
}

std::string PredictorConfig::hash() const { return short_hash(canonical()); }

PredictorConfig PredictorConfig::from_canonical(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  PredictorConfig c;
  for (const auto& [k, v] : kv.entries) {
    if (k == "latent_dim") c.latent_dim = parse_size(k, v);
    else if (k == "audio_dim") c.audio_dim = parse_size(k, v);
    else if (k == "hidden") c.hidden = parse_size(k, v);
    else if (k == "heads") c.heads = parse_size(k, v);
    else if (k == "half_width") c.half_width = parse_size(k, v);
    else if (k == "blocks") c.blocks = parse_size(k, v);
    else if (k == "window") c.window = parse_size(k, v);
    else if (k == "preceding") c.preceding = parse_size(k, v);
    else if (k == "emotion_dims") c.emotion_dims = parse_size(k, v);
    else if (k == "extra_dims") c.extra_dims = parse_size(k, v);
    else if (k == "mlp_ratio") c.mlp_ratio = parse_size(k, v);
    else if (k == "conditioning") c.conditioning = parse_conditioning(v);
    else throw ConfigError("unknown predictor key " + k);
  }
  c.validate();
  return c;
}

std::vector<std::string> PredictorConfig::differences(const PredictorConfig& other) const {
  const KeyValues mine = KeyValues::parse(canonical());
  const KeyValues theirs = KeyValues::parse(other.canonical());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < mine.entries.size(); ++i) {
    if (mine.entries[i].second != theirs.entries[i].second) {
      out.push_back(mine.entries[i].first + ": " + mine.entries[i].second + " vs " +
                    theirs.entries[i].second);
    }
  }
  return out;
}

PredictorConfig PredictorConfig::full_scale() {
  PredictorConfig c;
  c.latent_dim = 512;
  c.audio_dim = 768;
  c.hidden = 1024;
  c.heads = 8;
  c.half_width = 2;
  c.blocks = 4;
  c.window = 50;
  c.preceding = 10;
  return c;
}

Tensor2 frame_wise_adaln(const Tensor2& x, const Tensor2& modulation, int stage) {
  Graph g(false);
  return frame_wise_adaln(g.constant(x), g.constant(modulation), stage).value();
}

Var frame_wise_adaln(Var x, Var modulation, int stage) {
  check_stage(stage);
  check_modulation(x.value(), modulation.value());
  const std::size_t h = x.value().cols();
  const Var beta = slice_cols(modulation, chunk(stage, 1, h), chunk(stage, 1, h) + h);
  const Var gamma = slice_cols(modulation, chunk(stage, 2, h), chunk(stage, 2, h) + h);
  return hadamard(add_scalar(gamma, 1.0), layer_norm(x, kLayerNormEps)) + beta;
}

Tensor2 frame_wise_gate(const Tensor2& x, const Tensor2& modulation, int stage) {
  Graph g(false);
  return frame_wise_gate(g.constant(x), g.constant(modulation), stage).value();
}

Var frame_wise_gate(Var x, Var modulation, int stage) {
  check_stage(stage);
  check_modulation(x.value(), modulation.value());
  const std::size_t h = x.value().cols();
  const Var alpha = slice_cols(modulation, chunk(stage, 0, h), chunk(stage, 0, h) + h);
  return hadamard(add_scalar(alpha, 1.0), x);
}

PredictorParams VectorFieldPredictor::layout(const PredictorConfig& c) {
  const std::size_t h = c.hidden;
  PredictorParams p;
  p.add("input.weight", c.latent_dim, h);
  p.add("input.bias", 1, h);
  p.add("condition.weight", c.condition_input_dim(), h);
  p.add("condition.bias", 1, h);
  for (std::size_t b = 0; b < c.blocks; ++b) {
    const std::string pre = block_prefix(b);
    if (c.conditioning == Conditioning::AdaLN) {
      p.add(pre + "scale_shift.weight", h, 6 * h);
      p.add(pre + "scale_shift.bias", 1, 6 * h);
    }
    for (const char* part : {"query", "key", "value", "output"}) p.add(pre + "attn." + part, h, h);
    p.add(pre + "attn.output_bias", 1, h);
    if (c.conditioning == Conditioning::CrossAttention) {
      for (const char* part : {"query", "key", "value", "output"}) p.add(pre + "cross." + part, h, h);
      p.add(pre + "cross.output_bias", 1, h);
    }
    p.add(pre + "mlp.fc1.weight", h, c.mlp_ratio * h);
    p.add(pre + "mlp.fc1.bias", 1, c.mlp_ratio * h);
    p.add(pre + "mlp.fc2.weight", c.mlp_ratio * h, h);
    p.add(pre + "mlp.fc2.bias", 1, h);
  }
  p.add("output.weight", h, c.latent_dim);
  p.add("output.bias", 1, c.latent_dim);
  return p;
}

VectorFieldPredictor::VectorFieldPredictor(PredictorConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  params_ = layout(config_);
  Rng rng(seed, 0x1417);
  for (std::size_t i = 0; i < params_.groups().size(); ++i) {
    const ParamGroup& g = params_.group(i);
    const bool is_bias = g.rows == 1 && g.name.find("bias") != std::string::npos;
    const bool zero_init =
        g.name.find("scale_shift") != std::string::npos || g.name.rfind("output.", 0) == 0;
    if (is_bias || zero_init) continue;
    init_uniform(params_.values(i), g.rows, rng);
  }
  frame_positions_ = Tensor2(config_.frames(), config_.hidden);
  for (std::size_t l = 0; l < config_.frames(); ++l) {
    const auto row = sinusoid(static_cast<double>(l), config_.hidden);
    std::ranges::copy(row, frame_positions_.row(l).begin());
  }
}

VectorFieldPredictor::VectorFieldPredictor(PredictorConfig config, PredictorParams params)
    : VectorFieldPredictor(config, 0) {
  if (!(params.groups() == params_.groups())) {
    throw ConfigError("parameter layout does not match predictor config " + config_.hash());
  }
  params_ = std::move(params);
}

void VectorFieldPredictor::randomize_all(std::uint64_t seed, double scale) {
  Rng rng(seed, 0xA11);
  for (std::size_t i = 0; i < params_.groups().size(); ++i) {
    const ParamGroup& g = params_.group(i);
    init_uniform(params_.values(i), std::max<std::size_t>(g.rows, 1), rng);
    for (double& v : params_.values(i)) v *= scale;
  }
}

void VectorFieldPredictor::check_inputs(const ConditionInputs& in) const {
  const auto& c = config_;
  if (in.audio.rows() != c.frames() || in.audio.cols() != c.audio_dim) {
    throw ShapeError("audio " + in.audio.shape_string() + ", expected " +
                     std::to_string(c.frames()) + "x" + std::to_string(c.audio_dim));
  }
  if (in.emotion.size() != c.emotion_dims) throw ShapeError("emotion label length " + std::to_string(in.emotion.size()));
  if (in.source_motion.size() != c.latent_dim) {
    throw ShapeError("source motion length " + std::to_string(in.source_motion.size()));
  }
  if (c.extra_dims == 0 ? !in.extra.empty()
                        : (in.extra.rows() != c.frames() || in.extra.cols() != c.extra_dims)) {
    throw ShapeError("extra channel " + in.extra.shape_string() + ", configured width " +
                     std::to_string(c.extra_dims));
  }
}

Var VectorFieldPredictor::condition(Graph& g, const ConditionInputs& in, double t) const {
  check_inputs(in);
  const auto& c = config_;
  Tensor2 raw(c.frames(), c.condition_input_dim());
  for (std::size_t l = 0; l < c.frames(); ++l) {
    auto row = raw.row(l);
    auto it = std::ranges::copy(in.audio.row(l), row.begin()).out;
    it = std::ranges::copy(in.emotion, it).out;
    it = std::ranges::copy(in.source_motion, it).out;
    if (c.extra_dims > 0) std::ranges::copy(in.extra.row(l), it);
  }
  const Var projected =
      dense(g.constant(std::move(raw)), g.parameter(params_, "condition.weight"),
            g.parameter(params_, "condition.bias"));
  return add_row(projected, g.constant(Tensor2::row_vector(sinusoidal_embed(t, c.hidden))));
}

Var VectorFieldPredictor::attention(Graph& g, const std::string& prefix, Var queries_from,
                                    Var keys_from) const {
  const Var q = matmul(queries_from, g.parameter(params_, prefix + "query"));
  const Var k = matmul(keys_from, g.parameter(params_, prefix + "key"));
  const Var v = matmul(keys_from, g.parameter(params_, prefix + "value"));
  const Var mixed = banded_attention(q, k, v, config_.heads, config_.half_width);
  return dense(mixed, g.parameter(params_, prefix + "output"),
               g.parameter(params_, prefix + "output_bias"));
}

Var VectorFieldPredictor::block(Graph& g, std::size_t index, Var x, Var cond) const {
  const std::string pre = block_prefix(index);
  auto mlp = [&](Var y) {
    const Var hidden = gelu(dense(y, g.parameter(params_, pre + "mlp.fc1.weight"),
                                  g.parameter(params_, pre + "mlp.fc1.bias")));
    return dense(hidden, g.parameter(params_, pre + "mlp.fc2.weight"),
                 g.parameter(params_, pre + "mlp.fc2.bias"));
  };

  if (config_.conditioning == Conditioning::CrossAttention) {
    Var y = layer_norm(x, kLayerNormEps);
    x = x + attention(g, pre + "attn.", y, y);
    y = layer_norm(x, kLayerNormEps);
    x = x + attention(g, pre + "cross.", y, cond);
    return x + mlp(layer_norm(x, kLayerNormEps));
  }

  const Var modulation = dense(cond, g.parameter(params_, pre + "scale_shift.weight"),
                               g.parameter(params_, pre + "scale_shift.bias"));
  Var y = frame_wise_adaln(x, modulation, 1);
  x = x + frame_wise_gate(attention(g, pre + "attn.", y, y), modulation, 1);
  y = frame_wise_adaln(x, modulation, 2);
  return x + frame_wise_gate(mlp(y), modulation, 2);
}

Var VectorFieldPredictor::forward(Graph& g, const Tensor2& x_t, Var cond) const {
  const auto& c = config_;
  if (x_t.rows() != c.frames() || x_t.cols() != c.latent_dim) {
    throw ShapeError("latent input " + x_t.shape_string() + ", expected " +
                     std::to_string(c.frames()) + "x" + std::to_string(c.latent_dim));
  }
  if (cond.value().rows() != c.frames() || cond.value().cols() != c.hidden) {
    throw ShapeError("condition " + cond.value().shape_string());
  }
  Var x = dense(g.constant(x_t), g.parameter(params_, "input.weight"),
                g.parameter(params_, "input.bias")) +
          g.constant(frame_positions_);
  for (std::size_t b = 0; b < c.blocks; ++b) x = block(g, b, x, cond);
  return dense(layer_norm(x, kLayerNormEps), g.parameter(params_, "output.weight"),
               g.parameter(params_, "output.bias"));
}

ConditionBundle VectorFieldPredictor::to_condition(const ConditionInputs& inputs, double t,
                                                   const DropoutMask& nulled) const {
  Graph g(false);
  const ConditionInputs effective = apply_null(inputs, nulled, config_.preceding);
  return ConditionBundle{condition(g, effective, t).value(), t, nulled};
}

Tensor2 VectorFieldPredictor::predict_field(const Tensor2& x_t, const ConditionBundle& bundle) const {
  Graph g(false);
  return forward(g, x_t, g.constant(bundle.rows)).value();
}

Tensor2 VectorFieldPredictor::scale_shift(const ConditionBundle& bundle, std::size_t block) const {
  if (config_.conditioning != Conditioning::AdaLN) throw ConfigError("no ToScaleShift in cross-attention mode");
  if (block >= config_.blocks) throw IndexError("block " + std::to_string(block));
  const std::string pre = block_prefix(block);
  return dense(bundle.rows, params_.tensor(pre + "scale_shift.weight"),
               params_.tensor(pre + "scale_shift.bias"));
}

}  // namespace latentflow
