#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

inline constexpr std::uint32_t kContainerVersion = 1;

enum class ContainerKind : std::uint32_t { kCheckpoint = 1, kEmbeddings = 2 };

/// Binary artifact shared by checkpoints and embedding tables.
///
///   "KEBIOBIN" | u32 version | u32 kind | u64 config digest | u64 KB digest
///   u32 n_meta  { u32 len, key | u64 len, value }
///   u32 n_tensor { u32 len, name | u32 rank | u64 dims[rank] | f32 data }
///   u64 FNV-1a of every preceding byte
///
/// Integers and floats are little-endian; tensor values are 32-bit floats.
struct Container {
  ContainerKind kind = ContainerKind::kCheckpoint;
  std::uint64_t config_digest = 0;
  std::uint64_t kb_digest = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<NamedTensor> tensors;

  const std::string* meta(std::string_view key) const;
  /// Throws DataError naming the missing entry.
  const std::string& require_meta(std::string_view key) const;
  const Tensor* tensor(std::string_view name) const;
};

std::string encode_container(const Container& c);
/// Rejects bad magic, unknown versions, checksum mismatches and truncation.
Container decode_container(std::string_view bytes, const std::string& origin = "container");

/// Writes to a sibling temp file and renames it into place.
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Writes text atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace kebio::inline KEBIO_PRECISION_NS
