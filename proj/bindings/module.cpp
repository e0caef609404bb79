#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ve/gradcheck.hpp"
#include "ve/train.hpp"

namespace py = pybind11;
using namespace ve;

namespace {

Scene scene_arg(const std::string& json) { return scene_from_json(json); }

AgentPose pose_arg(double x, double y, double z, int azimuth) {
  return {{x, y, z}, orientation_from_degrees(azimuth)};
}

py::array_t<float> tensor_to_array(const TensorF& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<float> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

TensorF array_to_tensor(const py::array_t<float, py::array::c_style |
                                                      py::array::forcecast>& a) {
  std::vector<int> shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i)
    shape.push_back(static_cast<int>(a.shape(i)));
  TensorF t(shape);
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::dict depth_metrics_dict(const DepthMetrics& m) {
  py::dict d;
  d["rms"] = m.rms;
  d["rel"] = m.rel;
  d["log10"] = m.log10;
  d["delta1"] = m.delta1;
  d["delta2"] = m.delta2;
  d["delta3"] = m.delta3;
  d["pixels"] = m.pixel_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_echolab, m) {
  m.doc() = "echo-based spatial representation laboratory";

  m.def("generate_scene_json",
        [](uint64_t seed) { return scene_to_json(generate_scene(seed, {})); },
        py::arg("seed"));

  m.def("navigable_pose_count",
        [](const std::string& scene_json, double spacing, double clearance,
           double sensor_height) {
          Scene s = scene_arg(scene_json);
          return navigable_poses(s, {spacing, clearance, sensor_height}).size();
        },
        py::arg("scene_json"), py::arg("spacing") = 1.0,
        py::arg("clearance") = 0.5, py::arg("sensor_height") = 1.5);

  m.def("render_rgbd",
        [](const std::string& scene_json, double x, double y, double z,
           int azimuth, int size, double fov, double max_depth) {
          Scene s = scene_arg(scene_json);
          Camera cam{fov, size, size, max_depth};
          auto [rgb, depth] = render_rgbd(s, pose_arg(x, y, z, azimuth), cam);
          py::array_t<float> rgb_a({size, size, 3});
          std::copy(rgb.data.begin(), rgb.data.end(), rgb_a.mutable_data());
          py::array_t<float> d_a({size, size});
          std::copy(depth.data.begin(), depth.data.end(), d_a.mutable_data());
          return py::make_tuple(rgb_a, d_a);
        },
        py::arg("scene_json"), py::arg("x"), py::arg("y"), py::arg("z"),
        py::arg("azimuth") = 0, py::arg("size") = 64, py::arg("fov") = 90.0,
        py::arg("max_depth") = 10.0);

  m.def("make_chirp",
        [](double f0, double f1, double duration, double sr) {
          Waveform w = make_chirp(f0, f1, duration, sr);
          py::array_t<double> out(static_cast<py::ssize_t>(w.samples.size()));
          std::copy(w.samples.begin(), w.samples.end(), out.mutable_data());
          return out;
        },
        py::arg("f0") = 20.0, py::arg("f1") = 20000.0,
        py::arg("duration") = 0.003, py::arg("sr") = 44100.0);

  m.def("simulate_echo",
        [](const std::string& scene_json, double x, double y, double z,
           int azimuth, int max_order) {
          Scene s = scene_arg(scene_json);
          EchoConfig cfg;
          cfg.max_order = max_order;
          auto echo = simulate_echo(s, pose_arg(x, y, z, azimuth), cfg);
          py::array_t<double> out(
              {static_cast<py::ssize_t>(2),
               static_cast<py::ssize_t>(echo.left.size())});
          std::copy(echo.left.begin(), echo.left.end(), out.mutable_data());
          std::copy(echo.right.begin(), echo.right.end(),
                    out.mutable_data() + echo.left.size());
          return out;
        },
        py::arg("scene_json"), py::arg("x"), py::arg("y"), py::arg("z"),
        py::arg("azimuth") = 0, py::arg("max_order") = 3);

  m.def("spectrogram",
        [](const py::array_t<double, py::array::c_style |
                                         py::array::forcecast>& wave,
           int win, int hop, int nfft) {
          if (wave.ndim() != 2 || wave.shape(0) != 2)
            throw std::invalid_argument("wave must have shape (2, n)");
          BinauralWaveform w;
          const py::ssize_t n = wave.shape(1);
          w.left.assign(wave.data(), wave.data() + n);
          w.right.assign(wave.data() + n, wave.data() + 2 * n);
          Spectrogram s = stft_log_magnitude(w, win, hop, nfft);
          py::array_t<float> out({2, s.freq_bins, s.time_frames});
          std::copy(s.values.begin(), s.values.end(), out.mutable_data());
          return out;
        },
        py::arg("wave"), py::arg("win") = 64, py::arg("hop") = 16,
        py::arg("nfft") = 512);

  m.def("depth_metrics",
        [](const py::array_t<float, py::array::c_style |
                                        py::array::forcecast>& pred,
           const py::array_t<float, py::array::c_style |
                                        py::array::forcecast>& gt) {
          if (pred.ndim() != 2 || gt.ndim() != 2)
            throw std::invalid_argument("expected 2-D depth maps");
          DepthMap p{static_cast<int>(pred.shape(0)),
                     static_cast<int>(pred.shape(1)),
                     std::vector<float>(pred.data(), pred.data() + pred.size())};
          DepthMap g{static_cast<int>(gt.shape(0)),
                     static_cast<int>(gt.shape(1)),
                     std::vector<float>(gt.data(), gt.data() + gt.size())};
          return depth_metrics_dict(depth_metrics({p}, {g}));
        },
        py::arg("pred"), py::arg("gt"));

  m.def("read_blob",
        [](const std::filesystem::path& p) { return tensor_to_array(read_blob(p)); },
        py::arg("path"));

  m.def("write_blob",
        [](const std::filesystem::path& p,
           const py::array_t<float, py::array::c_style |
                                        py::array::forcecast>& a) {
          write_blob(p, array_to_tensor(a));
        },
        py::arg("path"), py::arg("array"));

  m.def("gen_dataset",
        [](const std::filesystem::path& config,
           const std::filesystem::path& out) {
          gen_dataset(ExperimentConfig::from_file(config), out);
        },
        py::arg("config"), py::arg("out"));

  m.def("train",
        [](const std::filesystem::path& dataset, const std::string& task,
           uint64_t seed, int epochs, const std::filesystem::path& out,
           const std::optional<std::filesystem::path>& init) {
          Dataset data(dataset);
          TrainOptions opt;
          opt.kind = model_kind_from_string(task);
          opt.seed = seed;
          opt.epochs = epochs;
          opt.batch = data.config().hyper.batch;
          opt.lr = data.config().hyper.lr;
          opt.init_checkpoint = init;
          opt.quiet = true;
          auto result = train_model(data, data.config().model, opt, out);
          return result.checkpoint;
        },
        py::arg("dataset"), py::arg("task"), py::arg("seed") = 1,
        py::arg("epochs") = 1, py::arg("out"),
        py::arg("init") = std::nullopt);

  m.def("eval_depth",
        [](const std::filesystem::path& dataset, const std::string& task,
           const std::filesystem::path& checkpoint, const std::string& split) {
          Dataset data(dataset);
          Model model(model_kind_from_string(task), data.config().model, 0);
          model.load(checkpoint);
          return depth_metrics_dict(eval_depth_model(model, data, split));
        },
        py::arg("dataset"), py::arg("task"), py::arg("checkpoint"),
        py::arg("split") = "test");

  m.def("gradcheck", []() {
    py::list out;
    for (const auto& r : run_gradchecks()) {
      py::dict d;
      d["name"] = r.name;
      d["max_err"] = r.max_err;
      d["ok"] = r.ok;
      out.append(d);
    }
    return out;
  });
}
