#pragma once

#include <cstddef>
#include <vector>

#include "latentflow/tensor.hpp"

namespace latentflow {

inline constexpr std::size_t kEmotionCount = 7;
/// Emotion order of the 7-way label.
inline constexpr const char* kEmotionNames[kEmotionCount] = {
    "angry", "disgust", "fear", "happy", "neutral", "sad", "surprise"};
inline constexpr std::size_t kNeutralEmotion = 4;

/// Which condition channels are replaced by the null token (all zeros).
/// Audio covers the generated-window rows of the per-frame channels;
/// preceding covers the preceding-window rows and the preceding motion.
struct DropoutMask {
  bool drop_source = false;
  bool drop_emotion = false;
  bool drop_audio = false;
  bool drop_preceding = false;

  static DropoutMask none() { return {}; }
  static DropoutMask all() { return {true, true, true, true}; }
  DropoutMask operator|(const DropoutMask& o) const {
    return {drop_source || o.drop_source, drop_emotion || o.drop_emotion,
            drop_audio || o.drop_audio, drop_preceding || o.drop_preceding};
  }
  friend bool operator==(const DropoutMask&, const DropoutMask&) = default;
};

/// Raw driving signals for one window of preceding + generated frames.
struct ConditionInputs {
  Tensor2 audio;                     ///< (L' + L) x d_a
  std::vector<double> emotion;       ///< 7 probabilities
  std::vector<double> source_motion; ///< d
  Tensor2 extra;                     ///< (L' + L) x d_x, or empty when unused
};

/// Null-token substitution. `preceding_rows` is L'.
ConditionInputs apply_null(const ConditionInputs& inputs, const DropoutMask& mask,
                           std::size_t preceding_rows);

}  // namespace latentflow
