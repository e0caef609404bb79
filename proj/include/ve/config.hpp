#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ve/acoustics.hpp"
#include "ve/dsp.hpp"
#include "ve/models.hpp"
#include "ve/render.hpp"
#include "ve/scene.hpp"

namespace ve {

// Minimal TOML reader covering the subset this project writes: [a.b]
// tables, strings, integers, floats, booleans, and flat arrays. Errors
// carry line numbers.
class TomlDoc {
 public:
  using Value = std::variant<std::string, int64_t, double, bool,
                             std::vector<double>, std::vector<std::string>>;

  static TomlDoc parse_file(const std::filesystem::path& path);
  static TomlDoc parse(const std::string& text, const std::string& origin = "");

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_array(const std::string& key,
                                std::vector<double> dflt) const;

  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;  // dotted keys
  std::string origin_;

  [[noreturn]] void fail(const std::string& key, const std::string& why) const;
};

struct TrainHyper {
  int batch = 8;
  double lr = 1e-3;
  // Fine-tuning rate for the downstream runs of the transfer/ablation
  // experiments (applied to scratch and warm-started conditions alike).
  double lr_transfer = 3e-4;
  int epochs_pretext = 30;
  int epochs_depth = 50;
  int epochs_normals = 50;
  std::vector<uint64_t> transfer_seeds = {1, 2, 3};
};

struct ExperimentConfig {
  uint64_t seed = 7;
  int n_scenes = 21;
  SceneGenConfig scene;
  GridSpec grid{1.0, 0.5, 1.5};
  Camera camera{90.0, 64, 64, 10.0};
  EchoConfig echo;
  StftSpec stft;
  int split_train = 16, split_val = 2, split_test = 3;
  ModelConfig model;
  TrainHyper hyper;

  void validate() const;
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_toml(const TomlDoc& doc);
  std::string to_toml() const;
};

}  // namespace ve
