#pragma once

#include <array>
#include <filesystem>
#include <set>

#include "ve/config.hpp"

namespace ve {

struct ViewRefs {
  std::string rgb, depth, normal, echo, spec;  // paths relative to the root
};

struct DatasetRecord {
  std::string scene_id;
  int position = 0;
  std::array<ViewRefs, 4> views;  // indexed by azimuth / 90
};

struct DatasetSplit {
  std::vector<std::string> train, val, test;
  uint64_t seed = 0;
};

struct SpectrogramStats {
  std::array<double, 2> mean = {0, 0};
  std::array<double, 2> stddev = {1, 1};
};

// Scene-level split, deterministic per seed.
DatasetSplit split_scenes(const std::vector<std::string>& scene_ids,
                          int n_train, int n_val, int n_test, uint64_t seed);

// Generates scenes, poses, RGB-D, normals, echoes, and spectrograms into
// out_dir; writes manifest.jsonl, split.json, stats.json, and per-scene
// JSON files. Fully deterministic per config.
void gen_dataset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::string record_to_json(const DatasetRecord& rec);
DatasetRecord record_from_json(const std::string& line);

// Read-only view over a generated dataset directory. Records every blob
// path it opens so tests can audit split hygiene.
class Dataset {
 public:
  explicit Dataset(const std::filesystem::path& root);

  const std::vector<DatasetRecord>& records() const { return records_; }
  const DatasetSplit& split() const { return split_; }
  const SpectrogramStats& stats() const { return stats_; }
  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& root() const { return root_; }

  // record indices for a split name ("train" / "val" / "test")
  std::vector<size_t> split_records(const std::string& split) const;

  // tensors in network layout; spectrograms are normalized per channel
  TensorF load_rgb(size_t record, int orient_idx) const;        // (3,S,S)
  TensorF load_depth(size_t record, int orient_idx) const;      // (1,S,S)
  TensorF load_normal(size_t record, int orient_idx) const;     // (4,S,S), ch 3 = mask
  TensorF load_spectrogram(size_t record, int orient_idx) const;  // (2,bins,frames)

  DepthMap load_depth_map(size_t record, int orient_idx) const;
  NormalMap load_normal_map(size_t record, int orient_idx) const;

  const std::set<std::string>& accessed_paths() const { return accessed_; }
  void clear_access_log() { accessed_.clear(); }

 private:
  TensorF read(const std::string& rel) const;

  std::filesystem::path root_;
  ExperimentConfig cfg_;
  std::vector<DatasetRecord> records_;
  DatasetSplit split_;
  SpectrogramStats stats_;
  mutable std::set<std::string> accessed_;
};

}  // namespace ve
