#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "manger/param_store.hpp"
#include "manger/tensor.hpp"

namespace manger {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Trailing checksum does not match; covers truncated files.
class CrcError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class MagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// A tensor is missing or its shape differs from the receiving network.
class ShapeError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
/// Structurally invalid content behind a valid checksum.
class CheckpointFormatError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Layout, all integers little-endian:
///   "MNGR" | u32 version | u32 count |
///   count x { u32 name_len | name | u8 dtype (1 = f64) | u32 rank | rank x u64 dim | f64 values }
///   | u64 CRC-64/XZ of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

std::uint64_t crc64(std::span<const std::uint8_t> bytes);

/// Writes to a temporary file in the same directory, then renames.
void save_checkpoint(const std::vector<NamedTensor>& entries, const std::filesystem::path& path);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Appends every value of `store` under `prefix`.
void append_store(std::vector<NamedTensor>& out, std::string_view prefix, const ParamStore& store);
/// Fills `store` from entries named prefix + parameter name. Every shape is
/// checked before any value is written.
void restore_store(const std::vector<NamedTensor>& entries, std::string_view prefix, ParamStore& store);
const NamedTensor* find_entry(const std::vector<NamedTensor>& entries, std::string_view name);

/// Writes `data` to `path` atomically.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace manger
