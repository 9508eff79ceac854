#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace amfc {

class HierarchySolution;
struct FPPath;

/// Header of a binary tensor dump: magic "AMFC", then version, N, K, nx, nt as
/// little-endian u32, followed by the row-major payload as little-endian f64.
/// The payload holds (nt + 1) * (nx + 2)^K values.
struct TensorHeader {
  static constexpr std::uint32_t kVersion = 1;
  std::uint32_t version = kVersion;
  std::uint32_t N = 0;
  std::uint32_t K = 0;
  std::uint32_t nx = 0;
  std::uint32_t nt = 0;

  std::size_t payload_size() const;
};

struct Tensor {
  TensorHeader header;
  std::vector<double> values;
};

/// Writes atomically (temporary file, then rename). Throws std::runtime_error on I/O failure
/// and DomainError if the payload size does not match the header.
void write_tensor(const std::filesystem::path& path, const TensorHeader& header,
                  std::span<const double> values);
Tensor read_tensor(const std::filesystem::path& path);

/// One file per level, "<stem>_K<k>.amfc", holding the stored layers (nt = layers - 1).
std::vector<std::filesystem::path> dump_hierarchy(const HierarchySolution& sol,
                                                  const std::filesystem::path& dir,
                                                  const std::string& stem = "V");

/// A density path as a K = 1 tensor.
void dump_path(const FPPath& path, const std::filesystem::path& file);
void dump_rows(const std::vector<std::vector<double>>& rows, int nx, const std::filesystem::path& file);

/// Atomic text write (temporary file, then rename), LF line endings as given.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace amfc
