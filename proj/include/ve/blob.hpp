#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ve/tensor.hpp"

namespace ve {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// TensorBlob: magic "VETS", version byte, dtype byte (0 = float32),
// rank byte, dims as u64 little-endian, payload row-major little-endian.
void write_blob(const std::filesystem::path& path, const TensorF& tensor);
TensorF read_blob(const std::filesystem::path& path);

std::vector<uint8_t> blob_bytes(const TensorF& tensor);
TensorF blob_from_bytes(const uint8_t* data, size_t size);

// Checkpoint: u64 entry count, then per entry a u32 name length, the name
// bytes, and an inline TensorBlob.
struct CheckpointEntry {
  std::string name;
  TensorF tensor;
};

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

}  // namespace ve
