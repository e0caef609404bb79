#include "ve/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ve {

static_assert(std::endian::native == std::endian::little,
              "blob io assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'E', 'T', 'S'};
constexpr uint8_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;

void append_bytes(std::vector<uint8_t>& out, const void* p, size_t n) {
  const auto* b = static_cast<const uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

}  // namespace

std::vector<uint8_t> blob_bytes(const TensorF& tensor) {
  std::vector<uint8_t> out;
  append_bytes(out, kMagic, 4);
  out.push_back(kVersion);
  out.push_back(kDtypeF32);
  out.push_back(static_cast<uint8_t>(tensor.rank()));
  for (int d : tensor.shape) {
    uint64_t v = static_cast<uint64_t>(d);
    append_bytes(out, &v, 8);
  }
  append_bytes(out, tensor.data.data(), tensor.data.size() * 4);
  return out;
}

TensorF blob_from_bytes(const uint8_t* data, size_t size) {
  if (size < 7 || std::memcmp(data, kMagic, 4) != 0)
    throw IoError("not a tensor blob (bad magic)");
  if (data[4] != kVersion) throw IoError("unsupported tensor blob version");
  if (data[5] != kDtypeF32) throw IoError("unsupported tensor blob dtype");
  int rank = data[6];
  size_t offset = 7;
  if (size < offset + 8u * rank) throw IoError("truncated tensor blob header");
  std::vector<int> shape(rank);
  size_t numel = 1;
  for (int i = 0; i < rank; ++i) {
    uint64_t d;
    std::memcpy(&d, data + offset, 8);
    offset += 8;
    shape[i] = static_cast<int>(d);
    numel *= d;
  }
  if (size != offset + numel * 4)
    throw IoError("tensor blob payload length mismatch");
  TensorF t(shape);
  std::memcpy(t.data.data(), data + offset, numel * 4);
  return t;
}

void write_blob(const std::filesystem::path& path, const TensorF& tensor) {
  auto bytes = blob_bytes(tensor);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

TensorF read_blob(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path.string());
  auto size = static_cast<size_t>(f.tellg());
  f.seekg(0);
  std::vector<uint8_t> bytes(size);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!f) throw IoError("read failed: " + path.string());
  return blob_from_bytes(bytes.data(), size);
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  uint64_t count = entries.size();
  f.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto& e : entries) {
    uint32_t len = static_cast<uint32_t>(e.name.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(e.name.data(), len);
    auto bytes = blob_bytes(e.tensor);
    uint64_t blen = bytes.size();
    f.write(reinterpret_cast<const char*>(&blen), 8);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  uint64_t count;
  f.read(reinterpret_cast<char*>(&count), 8);
  std::vector<CheckpointEntry> entries;
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len;
    f.read(reinterpret_cast<char*>(&len), 4);
    std::string name(len, '\0');
    f.read(name.data(), len);
    uint64_t blen;
    f.read(reinterpret_cast<char*>(&blen), 8);
    std::vector<uint8_t> bytes(blen);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(blen));
    if (!f) throw IoError("truncated checkpoint: " + path.string());
    entries.push_back({std::move(name), blob_from_bytes(bytes.data(), blen)});
  }
  return entries;
}

}  // namespace ve
