#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentflow/flow_matching.hpp"
#include "latentflow/motion_space.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

/// Generative law of the synthetic corpus. `seed` fixes the world (basis,
/// driving map, emotion offsets); `clip_seed` fixes which clips are drawn,
/// so a held-out split shares the world and differs in clips.
struct SceneSpec {
  std::uint64_t seed = 1;
  std::uint64_t clip_seed = 1;
  std::size_t latent_dim = 16;
  std::size_t directions = 8;
  std::size_t audio_dim = 8;
  std::size_t identities = 32;
  std::size_t identity_offset = 0;
  std::size_t frames = 48;
  std::vector<double> emotion_distribution = std::vector<double>(7, 1.0 / 7.0);
  double half_life = 4.0;
  double label_smoothing = 0.3;
  double driving_noise = 0.05;
  Tensor2 emotion_offsets;  ///< 7 x M, neutral row zero
  Tensor2 driving_map;      ///< M x d_a

  /// Fills the offsets and driving map from `seed`.
  static SceneSpec make(std::uint64_t seed, std::uint64_t clip_seed, std::size_t latent_dim = 16,
                        std::size_t directions = 8, std::size_t audio_dim = 8);
  /// Throws ConfigError on any violated invariant.
  void validate() const;
  /// Basis derived from `seed`.
  MotionBasis basis() const;
  /// Same world, different clips (and identities).
  SceneSpec heldout(std::uint64_t clip_seed, std::size_t identity_offset) const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Sum of three seeded sinusoids per channel (amplitude sqrt(2/3), frequency
/// in [0.02, 0.1] cycles per frame, uniform phase) plus N(0, noise^2).
Tensor2 gen_driving(std::uint64_t seed, std::size_t frames, std::size_t audio_dim, double noise = 0.05);

/// Exponential moving average along frames with the given half-life;
/// the first row is copied.
Tensor2 ema_rows(const Tensor2& x, double half_life);

struct GroundTruth {
  IdentityLatent identity;
  Tensor2 motion;        ///< frames x d
  Tensor2 coefficients;  ///< frames x M
};

/// lambda(l) = A ema(driving)(l) + offset[emotion]; motion row l =
/// compose(lambda(l), V); identity drawn in the basis complement.
GroundTruth gen_ground_truth(const SceneSpec& spec, const MotionBasis& basis, const Tensor2& driving,
                             std::size_t emotion_index, std::uint64_t identity_seed);

struct Clip {
  Tensor2 audio;                 ///< frames x d_a
  std::size_t emotion_index = 0;
  std::vector<double> emotion;   ///< smoothed label fed to the model
  std::size_t identity_index = 0;
  std::vector<double> identity;  ///< d
  Tensor2 motion;                ///< frames x d
  Tensor2 coefficients;          ///< frames x M

  std::vector<double> source_motion() const;  ///< first motion frame

  friend bool operator==(const Clip&, const Clip&) = default;
};

/// Deterministic clip `index` of the spec.
Clip gen_clip(const SceneSpec& spec, const MotionBasis& basis, std::size_t index);
/// Emotion class drawn for clip `index`.
std::size_t draw_emotion(const SceneSpec& spec, std::size_t index);

struct WindowRef {
  std::uint32_t clip = 0;
  std::uint32_t start = 0;  ///< first generated frame

  friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

/// Window starts for one clip: 0 (no predecessor), then L' + k * stride
/// while start + L <= frames.
std::vector<std::size_t> window_starts(std::size_t frames, std::size_t window, std::size_t preceding,
                                       std::size_t stride);

/// Slices a training item. A start below L' has no predecessor: preceding
/// motion and audio are zero.
TrainingItem make_item(const Clip& clip, std::size_t start, std::size_t window, std::size_t preceding);

struct Dataset {
  static constexpr std::uint32_t kVersion = 1;

  SceneSpec spec;
  std::vector<std::uint8_t> basis_bytes;
  std::size_t window = 24;
  std::size_t preceding = 6;
  std::size_t stride = 6;
  std::vector<Clip> clips;
  std::vector<WindowRef> windows;

  MotionBasis basis() const { return MotionBasis::from_bytes(basis_bytes); }
  TrainingItem item(std::size_t window_index) const;

  std::vector<std::uint8_t> to_bytes() const;
  static Dataset from_bytes(std::vector<std::uint8_t> bytes);
  std::string manifest_json(const std::string& checksum) const;
};

/// Generates `clips` clips and their window index. Throws DataError for 0 clips.
Dataset make_dataset(const SceneSpec& spec, std::size_t clips, std::size_t window = 24,
                     std::size_t preceding = 6, std::size_t stride = 6);

/// Writes `<path>` and `<path>.json`; returns the checksum hex.
std::string save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace latentflow
