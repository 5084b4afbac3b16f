#include "latentflow/checkpoint.hpp"

#include <algorithm>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"

namespace latentflow {

namespace {

constexpr char kMagic[] = "LFCKPT\0\0";
std::string_view magic() { return {kMagic, 8}; }

}  // namespace

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
  BinaryWriter w(magic());
  w.u32(kVersion);
  w.string(to_string(parameterization));
  w.string(config.canonical());
  w.string(config.hash());
  w.u64(seed);
  w.u64(steps);
  w.f64(final_loss);
  w.string(run_config);
  w.u64(params.groups().size());
  for (const ParamGroup& g : params.groups()) {
    w.string(g.name);
    w.u64(g.rows);
    w.u64(g.cols);
  }
  w.f64s(params.flat());
  return std::move(w).finish();
}

Checkpoint Checkpoint::from_bytes(std::vector<std::uint8_t> bytes) {
  BinaryReader r(std::move(bytes), magic());
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw DataError("checkpoint version " + std::to_string(version) + " unsupported");
  Checkpoint out;
  out.parameterization = parse_parameterization(r.string());
  const std::string canonical = r.string();
  const std::string hash = r.string();
  out.config = PredictorConfig::from_canonical(canonical);
  if (out.config.hash() != hash) {
    throw ConfigError("checkpoint config hash " + hash + " does not match its config (" + out.config.hash() + ")");
  }
  out.seed = r.u64();
  out.steps = r.u64();
  out.final_loss = r.f64();
  out.run_config = r.string();
  const std::uint64_t groups = r.u64();
  for (std::uint64_t i = 0; i < groups; ++i) {
    std::string name = r.string();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    out.params.add(std::move(name), rows, cols);
  }
  const std::vector<double> flat = r.f64s(out.params.size());
  std::ranges::copy(flat, out.params.flat().begin());
  if (!r.at_end()) throw DataError("trailing bytes in checkpoint");
  return out;
}

VectorFieldPredictor Checkpoint::restore(const PredictorConfig* expected) const {
  if (expected != nullptr && !(*expected == config)) {
    std::string message = "checkpoint config " + config.hash() + " differs from expected " + expected->hash() + ":";
    for (const std::string& d : expected->differences(config)) message += "\n  " + d;
    throw ConfigError(message);
  }
  return VectorFieldPredictor(config, params);
}

Checkpoint make_checkpoint(const VectorFieldPredictor& predictor, Parameterization parameterization,
                           std::uint64_t seed, std::uint64_t steps, double final_loss,
                           std::string run_config) {
  return Checkpoint{predictor.config(), predictor.params(), parameterization, seed, steps, final_loss,
                    std::move(run_config)};
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file(path, checkpoint.to_bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return Checkpoint::from_bytes(read_file(path)); }

}  // namespace latentflow
