#include "ve/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace ve {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// strip a trailing comment that is not inside a string literal
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

[[noreturn]] void parse_fail(const std::string& origin, int line,
                             const std::string& why) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + why);
}

TomlDoc::Value parse_scalar(const std::string& raw, const std::string& origin,
                            int line) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  if (raw == "true") return true;
  if (raw == "false") return false;
  bool is_float = raw.find_first_of(".eE") != std::string::npos;
  try {
    size_t used = 0;
    if (is_float) {
      double v = std::stod(raw, &used);
      if (used == raw.size()) return v;
    } else {
      int64_t v = std::stoll(raw, &used, 10);
      if (used == raw.size()) return v;
    }
  } catch (const std::exception&) {
  }
  parse_fail(origin, line, "cannot parse value '" + raw + "'");
}

}  // namespace

TomlDoc TomlDoc::parse_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path.string());
}

TomlDoc TomlDoc::parse(const std::string& text, const std::string& origin) {
  TomlDoc doc;
  doc.origin_ = origin.empty() ? "<config>" : origin;
  std::istringstream in(text);
  std::string line, table;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        parse_fail(doc.origin_, lineno, "unterminated table header");
      table = trim(s.substr(1, s.size() - 2));
      if (table.empty()) parse_fail(doc.origin_, lineno, "empty table name");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      parse_fail(doc.origin_, lineno, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      parse_fail(doc.origin_, lineno, "expected key = value");
    std::string full = table.empty() ? key : table + "." + key;
    if (doc.values_.count(full))
      parse_fail(doc.origin_, lineno, "duplicate key " + full);

    if (val.front() == '[') {
      if (val.back() != ']')
        parse_fail(doc.origin_, lineno, "unterminated array");
      std::string body = val.substr(1, val.size() - 2);
      std::vector<double> nums;
      std::vector<std::string> strs;
      std::string item;
      std::istringstream items(body);
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        Value v = parse_scalar(item, doc.origin_, lineno);
        if (std::holds_alternative<std::string>(v))
          strs.push_back(std::get<std::string>(v));
        else if (std::holds_alternative<int64_t>(v))
          nums.push_back(static_cast<double>(std::get<int64_t>(v)));
        else if (std::holds_alternative<double>(v))
          nums.push_back(std::get<double>(v));
        else
          parse_fail(doc.origin_, lineno, "unsupported array element");
      }
      if (!strs.empty() && !nums.empty())
        parse_fail(doc.origin_, lineno, "mixed array types");
      if (!strs.empty())
        doc.values_[full] = strs;
      else
        doc.values_[full] = nums;
    } else {
      doc.values_[full] = parse_scalar(val, doc.origin_, lineno);
    }
  }
  return doc;
}

void TomlDoc::fail(const std::string& key, const std::string& why) const {
  throw ConfigError(origin_ + ": key '" + key + "': " + why);
}

std::string TomlDoc::get_string(const std::string& key,
                                const std::string& dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  if (auto* v = std::get_if<std::string>(&it->second)) return *v;
  fail(key, "expected a string");
}

int64_t TomlDoc::get_int(const std::string& key, int64_t dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  if (auto* v = std::get_if<int64_t>(&it->second)) return *v;
  fail(key, "expected an integer");
}

double TomlDoc::get_double(const std::string& key, double dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  if (auto* v = std::get_if<double>(&it->second)) return *v;
  if (auto* v = std::get_if<int64_t>(&it->second))
    return static_cast<double>(*v);
  fail(key, "expected a number");
}

bool TomlDoc::get_bool(const std::string& key, bool dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  if (auto* v = std::get_if<bool>(&it->second)) return *v;
  fail(key, "expected a boolean");
}

std::vector<double> TomlDoc::get_array(const std::string& key,
                                       std::vector<double> dflt) const {
  auto it = values_.find(key);
  if (it == values_.end()) return dflt;
  if (auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  fail(key, "expected an array of numbers");
}

void ExperimentConfig::validate() const {
  scene.validate();
  camera.validate();
  if (n_scenes <= 0) throw ConfigError("n_scenes must be > 0");
  if (split_train + split_val + split_test > n_scenes)
    throw ConfigError("split sizes exceed scene count");
  if (split_train <= 0 || split_val < 0 || split_test <= 0)
    throw ConfigError("split sizes must be positive");
  if (grid.spacing <= 0) throw ConfigError("grid spacing must be > 0");
  if (hyper.batch <= 0) throw ConfigError("batch size must be > 0");
  if (hyper.transfer_seeds.empty())
    throw ConfigError("at least one transfer seed is required");
  if (echo.chirp_f1 >= echo.sample_rate / 2)
    throw ConfigError("chirp end frequency must be below Nyquist");
  if (stft.nfft < stft.win || stft.hop <= 0)
    throw ConfigError("invalid stft parameters");
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  return from_toml(TomlDoc::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_toml(const TomlDoc& doc) {
  ExperimentConfig c;
  c.seed = static_cast<uint64_t>(doc.get_int("dataset.seed", 7));
  c.n_scenes = static_cast<int>(doc.get_int("dataset.scenes", 21));

  c.scene.room_min_x = doc.get_double("scene.room_min_x", c.scene.room_min_x);
  c.scene.room_max_x = doc.get_double("scene.room_max_x", c.scene.room_max_x);
  c.scene.room_min_y = doc.get_double("scene.room_min_y", c.scene.room_min_y);
  c.scene.room_max_y = doc.get_double("scene.room_max_y", c.scene.room_max_y);
  c.scene.room_min_z = doc.get_double("scene.room_min_z", c.scene.room_min_z);
  c.scene.room_max_z = doc.get_double("scene.room_max_z", c.scene.room_max_z);
  c.scene.obstacles_min =
      static_cast<int>(doc.get_int("scene.obstacles_min", c.scene.obstacles_min));
  c.scene.obstacles_max =
      static_cast<int>(doc.get_int("scene.obstacles_max", c.scene.obstacles_max));
  c.scene.obstacle_min_size =
      doc.get_double("scene.obstacle_min_size", c.scene.obstacle_min_size);
  c.scene.obstacle_max_size =
      doc.get_double("scene.obstacle_max_size", c.scene.obstacle_max_size);

  c.grid.spacing = doc.get_double("grid.spacing", c.grid.spacing);
  c.grid.clearance = doc.get_double("grid.clearance", c.grid.clearance);
  c.grid.sensor_height = doc.get_double("grid.sensor_height", c.grid.sensor_height);

  c.camera.horizontal_fov = doc.get_double("camera.fov", c.camera.horizontal_fov);
  c.camera.width = static_cast<int>(doc.get_int("camera.width", c.camera.width));
  c.camera.height = static_cast<int>(doc.get_int("camera.height", c.camera.height));
  c.camera.max_depth = doc.get_double("camera.max_depth", c.camera.max_depth);

  c.echo.chirp_f0 = doc.get_double("acoustics.chirp_f0", c.echo.chirp_f0);
  c.echo.chirp_f1 = doc.get_double("acoustics.chirp_f1", c.echo.chirp_f1);
  c.echo.chirp_duration =
      doc.get_double("acoustics.chirp_duration", c.echo.chirp_duration);
  c.echo.sample_rate = doc.get_double("acoustics.sample_rate", c.echo.sample_rate);
  c.echo.clip_duration =
      doc.get_double("acoustics.clip_duration", c.echo.clip_duration);
  c.echo.max_order =
      static_cast<int>(doc.get_int("acoustics.max_order", c.echo.max_order));
  c.echo.listener.head_radius =
      doc.get_double("acoustics.head_radius", c.echo.listener.head_radius);
  c.echo.listener.shadow_floor =
      doc.get_double("acoustics.shadow_floor", c.echo.listener.shadow_floor);

  c.stft.win = static_cast<int>(doc.get_int("stft.win", c.stft.win));
  c.stft.hop = static_cast<int>(doc.get_int("stft.hop", c.stft.hop));
  c.stft.nfft = static_cast<int>(doc.get_int("stft.nfft", c.stft.nfft));

  c.split_train = static_cast<int>(doc.get_int("split.train", c.split_train));
  c.split_val = static_cast<int>(doc.get_int("split.val", c.split_val));
  c.split_test = static_cast<int>(doc.get_int("split.test", c.split_test));

  auto widths = [&](const std::string& key, std::vector<int> dflt) {
    std::vector<double> dd(dflt.begin(), dflt.end());
    auto v = doc.get_array(key, dd);
    std::vector<int> out;
    for (double x : v) out.push_back(static_cast<int>(x));
    return out;
  };
  c.model.vis_widths = widths("model.vis_widths", c.model.vis_widths);
  c.model.audio_widths = widths("model.audio_widths", c.model.audio_widths);
  c.model.fusion_dim =
      static_cast<int>(doc.get_int("model.fusion_dim", c.model.fusion_dim));
  c.model.leaky_slope = static_cast<float>(
      doc.get_double("model.leaky_slope", c.model.leaky_slope));

  c.hyper.batch = static_cast<int>(doc.get_int("train.batch", c.hyper.batch));
  c.hyper.lr = doc.get_double("train.lr", c.hyper.lr);
  c.hyper.lr_transfer = doc.get_double("train.lr_transfer", c.hyper.lr_transfer);
  c.hyper.epochs_pretext =
      static_cast<int>(doc.get_int("train.epochs_pretext", c.hyper.epochs_pretext));
  c.hyper.epochs_depth =
      static_cast<int>(doc.get_int("train.epochs_depth", c.hyper.epochs_depth));
  c.hyper.epochs_normals = static_cast<int>(
      doc.get_int("train.epochs_normals", c.hyper.epochs_normals));
  auto seeds = doc.get_array("train.transfer_seeds", {1, 2, 3});
  c.hyper.transfer_seeds.clear();
  for (double s : seeds)
    c.hyper.transfer_seeds.push_back(static_cast<uint64_t>(s));

  // derived model geometry
  c.model.image_size = c.camera.width;
  if (c.camera.width != c.camera.height)
    throw ConfigError("camera width and height must match");
  c.model.max_depth = static_cast<float>(c.camera.max_depth);
  c.model.spec_bins = c.stft.nfft / 2 + 1;
  int clip_samples =
      static_cast<int>(std::lround(c.echo.clip_duration * c.echo.sample_rate));
  c.model.spec_frames = stft_frames(clip_samples, c.stft.win, c.stft.hop);

  c.validate();
  return c;
}

std::string ExperimentConfig::to_toml() const {
  std::ostringstream o;
  o.precision(17);
  o << "[dataset]\nseed = " << seed << "\nscenes = " << n_scenes << "\n\n";
  o << "[scene]\n"
    << "room_min_x = " << scene.room_min_x << "\nroom_max_x = " << scene.room_max_x
    << "\nroom_min_y = " << scene.room_min_y << "\nroom_max_y = " << scene.room_max_y
    << "\nroom_min_z = " << scene.room_min_z << "\nroom_max_z = " << scene.room_max_z
    << "\nobstacles_min = " << scene.obstacles_min
    << "\nobstacles_max = " << scene.obstacles_max
    << "\nobstacle_min_size = " << scene.obstacle_min_size
    << "\nobstacle_max_size = " << scene.obstacle_max_size << "\n\n";
  o << "[grid]\nspacing = " << grid.spacing << "\nclearance = " << grid.clearance
    << "\nsensor_height = " << grid.sensor_height << "\n\n";
  o << "[camera]\nfov = " << camera.horizontal_fov << "\nwidth = " << camera.width
    << "\nheight = " << camera.height << "\nmax_depth = " << camera.max_depth
    << "\n\n";
  o << "[acoustics]\nchirp_f0 = " << echo.chirp_f0 << "\nchirp_f1 = " << echo.chirp_f1
    << "\nchirp_duration = " << echo.chirp_duration
    << "\nsample_rate = " << echo.sample_rate
    << "\nclip_duration = " << echo.clip_duration
    << "\nmax_order = " << echo.max_order
    << "\nhead_radius = " << echo.listener.head_radius
    << "\nshadow_floor = " << echo.listener.shadow_floor << "\n\n";
  o << "[stft]\nwin = " << stft.win << "\nhop = " << stft.hop
    << "\nnfft = " << stft.nfft << "\n\n";
  o << "[split]\ntrain = " << split_train << "\nval = " << split_val
    << "\ntest = " << split_test << "\n\n";
  auto arr = [](const std::vector<int>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i)
      s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
  };
  o << "[model]\nvis_widths = " << arr(model.vis_widths)
    << "\naudio_widths = " << arr(model.audio_widths)
    << "\nfusion_dim = " << model.fusion_dim
    << "\nleaky_slope = " << model.leaky_slope << "\n\n";
  o << "[train]\nbatch = " << hyper.batch << "\nlr = " << hyper.lr
    << "\nlr_transfer = " << hyper.lr_transfer
    << "\nepochs_pretext = " << hyper.epochs_pretext
    << "\nepochs_depth = " << hyper.epochs_depth
    << "\nepochs_normals = " << hyper.epochs_normals << "\ntransfer_seeds = [";
  for (size_t i = 0; i < hyper.transfer_seeds.size(); ++i)
    o << (i ? ", " : "") << hyper.transfer_seeds[i];
  o << "]\n";
  return o.str();
}

}  // namespace ve
