#include "latentflow/synth_data.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

enum Stream : std::uint64_t {
  kBasisStream = 1,
  kMapStream = 2,
  kOffsetStream = 3,
  kClipStream = 4,
  kIdentityStream = 5,
};

constexpr char kDatasetMagic[] = "LFDATA\0\0";

std::string_view dataset_magic() { return {kDatasetMagic, 8}; }

}  // namespace

SceneSpec SceneSpec::make(std::uint64_t seed, std::uint64_t clip_seed, std::size_t latent_dim,
                          std::size_t directions, std::size_t audio_dim) {
  SceneSpec s;
  s.seed = seed;
  s.latent_dim = latent_dim;
  s.directions = directions;
  s.audio_dim = audio_dim;
  s.clip_seed = clip_seed;
  Rng map_rng(seed, kMapStream);
  s.driving_map = (1.0 / std::sqrt(static_cast<double>(s.audio_dim))) *
                  Tensor2::normal(s.directions, s.audio_dim, map_rng);
  Rng offset_rng(seed, kOffsetStream);
  s.emotion_offsets = Tensor2::normal(kEmotionCount, s.directions, offset_rng);
  for (double& v : s.emotion_offsets.row(kNeutralEmotion)) v = 0.0;
  return s;
}

void SceneSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("scene: " + what);
  };
  require(latent_dim > 0 && directions > 0 && audio_dim > 0 && frames > 0, "dimensions must be positive");
  require(directions <= latent_dim, "more directions than latent dimensions");
  require(identities > 0, "need at least one identity");
  require(half_life >= 1.0 && std::isfinite(half_life), "half-life must be >= 1");
  require(label_smoothing >= 0.0 && label_smoothing <= 1.0, "label smoothing outside [0, 1]");
  require(std::isfinite(driving_noise) && driving_noise >= 0.0, "driving noise must be >= 0");
  require(emotion_distribution.size() == kEmotionCount, "emotion distribution needs 7 entries");
  double total = 0.0;
  for (double p : emotion_distribution) {
    require(std::isfinite(p) && p >= 0.0, "emotion probabilities must be finite and >= 0");
    total += p;
  }
  require(std::abs(total - 1.0) < 1e-9, "emotion distribution must sum to 1");
  require(emotion_offsets.rows() == kEmotionCount && emotion_offsets.cols() == directions,
          "emotion offsets must be 7 x M");
  require(driving_map.rows() == directions && driving_map.cols() == audio_dim, "driving map must be M x d_a");
  require(emotion_offsets.all_finite() && driving_map.all_finite(), "non-finite matrices");
}

MotionBasis SceneSpec::basis() const { return random_basis(latent_dim, directions, derive_seed(seed, kBasisStream)); }

SceneSpec SceneSpec::heldout(std::uint64_t new_clip_seed, std::size_t new_identity_offset) const {
  SceneSpec s = *this;
  s.clip_seed = new_clip_seed;
  s.identity_offset = new_identity_offset;
  return s;
}

Tensor2 gen_driving(std::uint64_t seed, std::size_t frames, std::size_t audio_dim, double noise) {
  Rng rng(seed, 0xD217);
  const double amplitude = std::sqrt(2.0 / 3.0);
  Tensor2 out(frames, audio_dim);
  for (std::size_t c = 0; c < audio_dim; ++c) {
    for (int k = 0; k < 3; ++k) {
      const double freq = rng.uniform(0.02, 0.1);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t l = 0; l < frames; ++l) {
        out(l, c) += amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(l) + phase);
      }
    }
  }
  if (noise > 0.0) {
    for (double& v : out.values()) v += noise * rng.normal();
  }
  return out;
}

Tensor2 ema_rows(const Tensor2& x, double half_life) {
  if (!(half_life >= 1.0)) throw ConfigError("half-life must be >= 1");
  const double alpha = 1.0 - std::pow(2.0, -1.0 / half_life);
  Tensor2 out = x;
  for (std::size_t l = 1; l < x.rows(); ++l) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(l, c) = out(l - 1, c) + alpha * (x(l, c) - out(l - 1, c));
  }
  return out;
}

GroundTruth gen_ground_truth(const SceneSpec& spec, const MotionBasis& basis, const Tensor2& driving,
                             std::size_t emotion_index, std::uint64_t identity_seed) {
  if (emotion_index >= kEmotionCount) throw IndexError("emotion index " + std::to_string(emotion_index));
  if (driving.cols() != spec.audio_dim) throw ShapeError("driving " + driving.shape_string());
  GroundTruth out;
  const Tensor2 smoothed = ema_rows(driving, spec.half_life);
  Tensor2 map_t(spec.audio_dim, spec.directions);
  for (std::size_t m = 0; m < spec.directions; ++m) {
    for (std::size_t a = 0; a < spec.audio_dim; ++a) map_t(a, m) = spec.driving_map(m, a);
  }
  out.coefficients = matmul(smoothed, map_t);
  for (std::size_t l = 0; l < out.coefficients.rows(); ++l) {
    for (std::size_t m = 0; m < spec.directions; ++m) {
      out.coefficients(l, m) += spec.emotion_offsets(emotion_index, m);
    }
  }
  out.motion = compose_rows(out.coefficients, basis);
  Rng rng(identity_seed, kIdentityStream);
  out.identity = sample_complement(basis, rng);
  return out;
}

std::vector<double> Clip::source_motion() const {
  const auto row = motion.row(0);
  return {row.begin(), row.end()};
}

std::size_t draw_emotion(const SceneSpec& spec, std::size_t index) {
  Rng rng(derive_seed(spec.clip_seed, index), kClipStream);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t e = 0; e < kEmotionCount; ++e) {
    acc += spec.emotion_distribution[e];
    if (u < acc) return e;
  }
  return kEmotionCount - 1;
}

Clip gen_clip(const SceneSpec& spec, const MotionBasis& basis, std::size_t index) {
  const std::uint64_t clip_key = derive_seed(spec.clip_seed, index);
  Rng rng(clip_key, kIdentityStream);
  Clip clip;
  clip.emotion_index = draw_emotion(spec, index);
  clip.identity_index = spec.identity_offset + rng.below(spec.identities);
  clip.audio = gen_driving(derive_seed(clip_key, 0xA0D10), spec.frames, spec.audio_dim, spec.driving_noise);
  GroundTruth truth = gen_ground_truth(spec, basis, clip.audio, clip.emotion_index,
                                       derive_seed(spec.seed, 0x1D00 + clip.identity_index));
  clip.motion = std::move(truth.motion);
  clip.coefficients = std::move(truth.coefficients);
  clip.identity = std::move(truth.identity.values);
  clip.emotion.assign(kEmotionCount, spec.label_smoothing / static_cast<double>(kEmotionCount));
  clip.emotion[clip.emotion_index] += 1.0 - spec.label_smoothing;
  return clip;
}

std::vector<std::size_t> window_starts(std::size_t frames, std::size_t window, std::size_t preceding,
                                       std::size_t stride) {
  if (stride == 0) throw ConfigError("window stride must be positive");
  std::vector<std::size_t> out;
  if (window > frames) return out;
  out.push_back(0);
  for (std::size_t s = std::max<std::size_t>(preceding, 1); s + window <= frames; s += stride) {
    if (s >= preceding) out.push_back(s);
  }
  return out;
}

TrainingItem make_item(const Clip& clip, std::size_t start, std::size_t window, std::size_t preceding) {
  const std::size_t frames = clip.motion.rows();
  if (start + window > frames) {
    throw IndexError("window at " + std::to_string(start) + " runs past " + std::to_string(frames) + " frames");
  }
  const std::size_t d = clip.motion.cols();
  const std::size_t da = clip.audio.cols();
  TrainingItem item;
  item.has_predecessor = start >= preceding && preceding > 0;
  item.target_motion = clip.motion.slice_rows(start, start + window);
  item.inputs.audio = Tensor2(preceding + window, da);
  item.inputs.audio.set_rows(preceding, clip.audio.slice_rows(start, start + window));
  item.preceding_motion = Tensor2(preceding, d);
  if (item.has_predecessor) {
    item.preceding_motion = clip.motion.slice_rows(start - preceding, start);
    item.inputs.audio.set_rows(0, clip.audio.slice_rows(start - preceding, start));
  }
  item.inputs.emotion = clip.emotion;
  item.inputs.source_motion = clip.source_motion();
  return item;
}

TrainingItem Dataset::item(std::size_t window_index) const {
  if (window_index >= windows.size()) throw IndexError("window " + std::to_string(window_index));
  const WindowRef& ref = windows[window_index];
  return make_item(clips.at(ref.clip), ref.start, window, preceding);
}

Dataset make_dataset(const SceneSpec& spec, std::size_t clips, std::size_t window, std::size_t preceding,
                     std::size_t stride) {
  spec.validate();
  if (clips == 0) throw DataError("dataset needs at least one clip");
  const std::vector<std::size_t> starts = window_starts(spec.frames, window, preceding, stride);
  if (starts.empty()) throw DataError("clips of " + std::to_string(spec.frames) + " frames hold no window");
  Dataset out;
  out.spec = spec;
  const MotionBasis basis = spec.basis();
  out.basis_bytes = basis.to_bytes();
  out.window = window;
  out.preceding = preceding;
  out.stride = stride;
  out.clips.reserve(clips);
  for (std::size_t k = 0; k < clips; ++k) {
    out.clips.push_back(gen_clip(spec, basis, k));
    for (std::size_t s : starts) out.windows.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(s)});
  }
  return out;
}

namespace {

void write_spec(BinaryWriter& w, const SceneSpec& s) {
  w.u64(s.seed);
  w.u64(s.clip_seed);
  for (std::size_t v : {s.latent_dim, s.directions, s.audio_dim, s.identities, s.identity_offset, s.frames}) w.u64(v);
  w.f64s(s.emotion_distribution);
  w.f64(s.half_life);
  w.f64(s.label_smoothing);
  w.f64(s.driving_noise);
  w.tensor(s.emotion_offsets);
  w.tensor(s.driving_map);
}

SceneSpec read_spec(BinaryReader& r) {
  SceneSpec s;
  s.seed = r.u64();
  s.clip_seed = r.u64();
  for (std::size_t* v : {&s.latent_dim, &s.directions, &s.audio_dim, &s.identities, &s.identity_offset, &s.frames}) {
    *v = r.u64();
  }
  s.emotion_distribution = r.f64s(kEmotionCount);
  s.half_life = r.f64();
  s.label_smoothing = r.f64();
  s.driving_noise = r.f64();
  s.emotion_offsets = r.tensor();
  s.driving_map = r.tensor();
  return s;
}

}  // namespace

std::vector<std::uint8_t> Dataset::to_bytes() const {
  BinaryWriter w(dataset_magic());
  w.u32(kVersion);
  write_spec(w, spec);
  w.string({reinterpret_cast<const char*>(basis_bytes.data()), basis_bytes.size()});
  w.u64(window);
  w.u64(preceding);
  w.u64(stride);
  w.u64(clips.size());
  for (const Clip& c : clips) {
    w.tensor(c.audio);
    w.u64(c.emotion_index);
    w.f64s(c.emotion);
    w.u64(c.identity_index);
    w.u64(c.identity.size());
    w.f64s(c.identity);
    w.tensor(c.motion);
    w.tensor(c.coefficients);
  }
  w.u64(windows.size());
  for (const WindowRef& ref : windows) {
    w.u32(ref.clip);
    w.u32(ref.start);
  }
  return std::move(w).finish();
}

Dataset Dataset::from_bytes(std::vector<std::uint8_t> bytes) {
  BinaryReader r(std::move(bytes), dataset_magic());
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw DataError("dataset version " + std::to_string(version) + " unsupported");
  Dataset out;
  out.spec = read_spec(r);
  const std::string basis = r.string();
  out.basis_bytes.assign(basis.begin(), basis.end());
  out.window = r.u64();
  out.preceding = r.u64();
  out.stride = r.u64();
  const std::uint64_t n = r.u64();
  out.clips.resize(n);
  for (Clip& c : out.clips) {
    c.audio = r.tensor();
    c.emotion_index = r.u64();
    c.emotion = r.f64s(kEmotionCount);
    c.identity_index = r.u64();
    c.identity = r.f64s(r.u64());
    c.motion = r.tensor();
    c.coefficients = r.tensor();
    if (c.emotion_index >= kEmotionCount) throw DataError("clip emotion index out of range");
  }
  out.windows.resize(r.u64());
  for (WindowRef& ref : out.windows) {
    ref.clip = r.u32();
    ref.start = r.u32();
    if (ref.clip >= n) throw DataError("window refers to missing clip " + std::to_string(ref.clip));
  }
  if (!r.at_end()) throw DataError("trailing bytes in dataset");
  out.spec.validate();
  return out;
}

std::string Dataset::manifest_json(const std::string& checksum) const {
  nlohmann::ordered_json j;
  j["format"] = "latentflow.dataset";
  j["version"] = kVersion;
  j["checksum_sha256"] = checksum;
  j["clips"] = clips.size();
  j["windows"] = windows.size();
  j["window"] = window;
  j["preceding"] = preceding;
  j["stride"] = stride;
  j["scene"] = {{"seed", spec.seed},
                {"clip_seed", spec.clip_seed},
                {"latent_dim", spec.latent_dim},
                {"directions", spec.directions},
                {"audio_dim", spec.audio_dim},
                {"identities", spec.identities},
                {"identity_offset", spec.identity_offset},
                {"frames", spec.frames},
                {"emotion_distribution", spec.emotion_distribution},
                {"half_life", spec.half_life},
                {"label_smoothing", spec.label_smoothing},
                {"driving_noise", spec.driving_noise}};
  std::vector<std::size_t> counts(kEmotionCount, 0);
  for (const Clip& c : clips) ++counts[c.emotion_index];
  j["emotion_counts"] = counts;
  return j.dump(2) + "\n";
}

std::string save_dataset(const Dataset& data, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = data.to_bytes();
  const std::string checksum = to_hex(sha256(bytes));
  write_file(path, bytes);
  write_text(path.string() + ".json", data.manifest_json(checksum));
  return checksum;
}

Dataset load_dataset(const std::filesystem::path& path) { return Dataset::from_bytes(read_file(path)); }

}  // namespace latentflow
