#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "latentflow/diffusion.hpp"
#include "latentflow/predictor.hpp"

namespace latentflow {

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  PredictorConfig config;
  PredictorParams params;
  Parameterization parameterization = Parameterization::Flow;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  double final_loss = 0.0;
  std::string run_config;  ///< verbatim run configuration echo

  std::vector<std::uint8_t> to_bytes() const;
  /// DataError on corruption; ConfigError when the stored hash disagrees
  /// with the stored config.
  static Checkpoint from_bytes(std::vector<std::uint8_t> bytes);

  /// Builds the predictor. With `expected`, a config mismatch throws
  /// ConfigError listing every differing field.
  VectorFieldPredictor restore(const PredictorConfig* expected = nullptr) const;
};

Checkpoint make_checkpoint(const VectorFieldPredictor& predictor, Parameterization parameterization,
                           std::uint64_t seed, std::uint64_t steps, double final_loss,
                           std::string run_config);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace latentflow
