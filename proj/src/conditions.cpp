#include "latentflow/conditions.hpp"

#include <algorithm>

#include "latentflow/error.hpp"

namespace latentflow {

namespace {

void zero_rows(Tensor2& t, std::size_t begin, std::size_t end) {
  if (t.empty()) return;
  end = std::min(end, t.rows());
  for (std::size_t r = begin; r < end; ++r) std::ranges::fill(t.row(r), 0.0);
}

}  // namespace

ConditionInputs apply_null(const ConditionInputs& inputs, const DropoutMask& mask,
                           std::size_t preceding_rows) {
  if (preceding_rows > inputs.audio.rows()) {
    throw ShapeError("preceding window of " + std::to_string(preceding_rows) +
                     " rows exceeds audio of " + inputs.audio.shape_string());
  }
  ConditionInputs out = inputs;
  if (mask.drop_source) std::ranges::fill(out.source_motion, 0.0);
  if (mask.drop_emotion) std::ranges::fill(out.emotion, 0.0);
  if (mask.drop_audio) {
    zero_rows(out.audio, preceding_rows, out.audio.rows());
    zero_rows(out.extra, preceding_rows, out.extra.rows());
  }
  if (mask.drop_preceding) {
    zero_rows(out.audio, 0, preceding_rows);
    zero_rows(out.extra, 0, preceding_rows);
  }
  return out;
}

}  // namespace latentflow
