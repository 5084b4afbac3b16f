#include "latentflow/sequence_file.hpp"

#include <json.hpp>

#include "latentflow/binary_io.hpp"
#include "latentflow/error.hpp"
#include "latentflow/key_values.hpp"

namespace latentflow {

namespace {

constexpr char kMagic[] = "LFSEQ\0\0\0";
constexpr char kPayloadMagic[] = "LFPAY\0\0\0";
constexpr char kTrajectoryMagic[] = "LFTRAJ\0\0";

}  // namespace

std::vector<std::uint8_t> SequenceFile::payload_bytes() const {
  BinaryWriter w({kPayloadMagic, 8});
  w.tensor(latents);
  w.tensor(coefficients);
  return std::move(w).finish();
}

std::vector<std::uint8_t> SequenceFile::to_bytes() const {
  BinaryWriter w({kMagic, 8});
  w.u32(kVersion);
  w.string(provenance);
  w.string({reinterpret_cast<const char*>(basis_bytes.data()), basis_bytes.size()});
  w.tensor(latents);
  w.tensor(coefficients);
  return std::move(w).finish();
}

SequenceFile SequenceFile::from_bytes(std::vector<std::uint8_t> bytes) {
  BinaryReader r(std::move(bytes), {kMagic, 8});
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw DataError("sequence version " + std::to_string(version) + " unsupported");
  SequenceFile out;
  out.provenance = r.string();
  const std::string basis = r.string();
  out.basis_bytes.assign(basis.begin(), basis.end());
  out.latents = r.tensor();
  out.coefficients = r.tensor();
  if (!r.at_end()) throw DataError("trailing bytes in sequence file");
  if (out.latents.rows() != out.coefficients.rows()) throw DataError("latent and coefficient frame counts differ");
  return out;
}

SequenceFile make_sequence_file(const Tensor2& latents, const MotionBasis& basis, std::string provenance) {
  return SequenceFile{std::move(provenance), basis.to_bytes(), latents, project_rows(latents, basis)};
}

void save_sequence(const SequenceFile& file, const std::filesystem::path& path) { write_file(path, file.to_bytes()); }

SequenceFile load_sequence(const std::filesystem::path& path) { return SequenceFile::from_bytes(read_file(path)); }

SequenceFile edit_sequence(const SequenceFile& input, std::size_t direction, double delta) {
  const MotionBasis basis = input.basis();
  if (direction < 1 || direction > basis.count()) {
    throw IndexError("direction " + std::to_string(direction) + " outside 1.." + std::to_string(basis.count()));
  }
  Tensor2 edited(input.latents.rows(), input.latents.cols());
  for (std::size_t l = 0; l < edited.rows(); ++l) {
    const auto row = input.latents.row(l);
    const MotionLatent w = edit_lambda(MotionLatent{{row.begin(), row.end()}}, basis, direction, delta);
    std::ranges::copy(w.values, edited.row(l).begin());
  }
  std::string provenance = input.provenance;
  provenance += "edit = direction " + std::to_string(direction) + " delta " + format_double(delta) + "\n";
  return make_sequence_file(edited, basis, std::move(provenance));
}

void save_trajectory(const std::vector<Trajectory>& windows, const std::filesystem::path& path) {
  BinaryWriter w({kTrajectoryMagic, 8});
  nlohmann::ordered_json index;
  index["format"] = "latentflow.trajectory";
  index["binary"] = path.filename().string();
  index["windows"] = nlohmann::json::array();
  w.u64(windows.size());
  for (const Trajectory& t : windows) {
    w.u64(t.states.size());
    nlohmann::ordered_json entry;
    entry["states"] = t.states.size();
    entry["times"] = t.times;
    if (!t.states.empty()) entry["shape"] = {t.states.front().rows(), t.states.front().cols()};
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      w.f64(t.times[k]);
      w.tensor(t.states[k]);
    }
    index["windows"].push_back(entry);
  }
  const std::vector<std::uint8_t> bytes = std::move(w).finish();
  index["checksum_sha256"] = to_hex(sha256(bytes));
  write_file(path, bytes);
  write_text(path.string() + ".json", index.dump(2) + "\n");
}

}  // namespace latentflow
