#include "latentflow/binary_io.hpp"

#include <openssl/sha.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "latentflow/error.hpp"
#include "latentflow/tensor.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace latentflow {

Sha256 sha256(std::span<const std::uint8_t> bytes) {
  Sha256 out{};
  SHA256(bytes.data(), bytes.size(), out.data());
  return out;
}

Sha256 sha256(std::string_view text) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::string short_hash(std::string_view text) { return to_hex(sha256(text)).substr(0, 16); }

BinaryWriter::BinaryWriter(std::string_view magic) : bytes_(magic.begin(), magic.end()) {}

void BinaryWriter::u32(std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  bytes_.insert(bytes_.end(), p, p + sizeof v);
}

void BinaryWriter::u64(std::uint64_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  bytes_.insert(bytes_.end(), p, p + sizeof v);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::string(std::string_view s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void BinaryWriter::f64s(std::span<const double> values) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
  bytes_.insert(bytes_.end(), p, p + values.size_bytes());
}

void BinaryWriter::tensor(const Tensor2& t) {
  u64(t.rows());
  u64(t.cols());
  f64s(t.values());
}

std::vector<std::uint8_t> BinaryWriter::finish() && {
  const Sha256 digest = sha256(bytes_);
  bytes_.insert(bytes_.end(), digest.begin(), digest.end());
  return std::move(bytes_);
}

BinaryReader::BinaryReader(std::vector<std::uint8_t> bytes, std::string_view magic)
    : bytes_(std::move(bytes)) {
  if (bytes_.size() < magic.size() + 32) throw DataError("file too short");
  if (std::memcmp(bytes_.data(), magic.data(), magic.size()) != 0) {
    throw DataError("bad magic, expected '" + std::string(magic) + "'");
  }
  payload_end_ = bytes_.size() - 32;
  const Sha256 digest = sha256(std::span<const std::uint8_t>(bytes_.data(), payload_end_));
  if (std::memcmp(digest.data(), bytes_.data() + payload_end_, 32) != 0) {
    throw DataError("checksum mismatch");
  }
  pos_ = magic.size();
}

void BinaryReader::need(std::size_t n) const {
  if (pos_ + n > payload_end_) throw DataError("truncated record");
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, bytes_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, bytes_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::string() {
  const std::uint64_t n = u64();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<double> BinaryReader::f64s(std::size_t count) {
  need(count * 8);
  std::vector<double> out(count);
  std::memcpy(out.data(), bytes_.data() + pos_, count * 8);
  pos_ += count * 8;
  return out;
}

Tensor2 BinaryReader::tensor() {
  const std::uint64_t rows = u64();
  const std::uint64_t cols = u64();
  return Tensor2(rows, cols, f64s(rows * cols));
}

std::string BinaryReader::checksum_hex() const {
  return to_hex(std::span<const std::uint8_t>(bytes_.data() + payload_end_, 32));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string peek_magic(const std::filesystem::path& path, std::size_t length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic(length, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(length));
  magic.resize(static_cast<std::size_t>(in.gcount()));
  return magic;
}

}  // namespace latentflow
