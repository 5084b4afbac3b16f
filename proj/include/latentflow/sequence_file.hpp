#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentflow/motion_space.hpp"
#include "latentflow/sampler.hpp"
#include "latentflow/tensor.hpp"

namespace latentflow {

/// Generated latent sequence with its coefficients over the basis and a
/// provenance header (`key = value` lines).
struct SequenceFile {
  static constexpr std::uint32_t kVersion = 1;

  std::string provenance;
  std::vector<std::uint8_t> basis_bytes;
  Tensor2 latents;       ///< frames x d
  Tensor2 coefficients;  ///< frames x M

  MotionBasis basis() const { return MotionBasis::from_bytes(basis_bytes); }

  /// Latents and coefficients only; the part an identity edit preserves.
  std::vector<std::uint8_t> payload_bytes() const;
  std::vector<std::uint8_t> to_bytes() const;
  static SequenceFile from_bytes(std::vector<std::uint8_t> bytes);
};

SequenceFile make_sequence_file(const Tensor2& latents, const MotionBasis& basis, std::string provenance);

void save_sequence(const SequenceFile& file, const std::filesystem::path& path);
SequenceFile load_sequence(const std::filesystem::path& path);

/// Applies edit_lambda(direction, delta) to every frame and recomputes the
/// coefficients. `direction` is 1-based; IndexError when out of range.
SequenceFile edit_sequence(const SequenceFile& input, std::size_t direction, double delta);

/// Per-step states as one binary file plus a JSON index next to it.
void save_trajectory(const std::vector<Trajectory>& windows, const std::filesystem::path& path);

}  // namespace latentflow
