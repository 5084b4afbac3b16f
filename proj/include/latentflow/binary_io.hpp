#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace latentflow {

class Tensor2;

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);
Sha256 sha256(std::string_view text);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// First 16 hex digits of SHA-256 over the text.
std::string short_hash(std::string_view text);

/// Little-endian record builder. `finish()` appends the SHA-256 of
/// everything written so far.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::string_view magic);

  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void string(std::string_view s);
  void f64s(std::span<const double> values);
  void tensor(const Tensor2& t);

  std::vector<std::uint8_t> finish() &&;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Counterpart of BinaryWriter. Construction verifies magic and checksum;
/// every failure is a DataError.
class BinaryReader {
 public:
  BinaryReader(std::vector<std::uint8_t> bytes, std::string_view magic);

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string string();
  std::vector<double> f64s(std::size_t count);
  Tensor2 tensor();

  bool at_end() const { return pos_ == payload_end_; }
  std::string checksum_hex() const;

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t payload_end_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Reads the leading magic of a file without validating the rest.
std::string peek_magic(const std::filesystem::path& path, std::size_t length = 8);

}  // namespace latentflow
