#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ve/gradcheck.hpp"
#include "ve/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_gen_dataset(const std::string& config, const std::string& out) {
  auto cfg = ve::ExperimentConfig::from_file(config);
  ve::gen_dataset(cfg, out);
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& task, const std::string& init,
              const std::string& dataset, uint64_t seed, const std::string& out,
              int epochs_override, double lr_override) {
  ve::Dataset data(dataset);
  const auto& cfg = data.config();
  ve::TrainOptions opt;
  opt.kind = ve::model_kind_from_string(task);
  opt.seed = seed;
  opt.batch = cfg.hyper.batch;
  opt.lr = cfg.hyper.lr;
  switch (opt.kind) {
    case ve::ModelKind::Pretext:
    case ve::ModelKind::PretextSimple:
    case ve::ModelKind::BinaryMatch:
      opt.epochs = cfg.hyper.epochs_pretext;
      break;
    case ve::ModelKind::Normals:
      opt.epochs = cfg.hyper.epochs_normals;
      break;
    default:
      opt.epochs = cfg.hyper.epochs_depth;
  }
  if (epochs_override > 0) opt.epochs = epochs_override;
  if (lr_override > 0) opt.lr = lr_override;
  if (init != "scratch") opt.init_checkpoint = fs::path(init);
  auto result = ve::train_model(data, cfg.model, opt, out);
  std::cout << "checkpoint: " << result.checkpoint.string() << "\n";
  return 0;
}

int cmd_eval(const std::string& task, const std::string& checkpoint,
             const std::string& dataset, const std::string& split) {
  ve::Dataset data(dataset);
  json report;
  report["task"] = task;
  report["split"] = split;
  if (task == "average") {
    auto m = ve::eval_average_baseline(data, split);
    report["metrics"] = {{"rms", m.rms},       {"rel", m.rel},
                         {"log10", m.log10},   {"delta1", m.delta1},
                         {"delta2", m.delta2}, {"delta3", m.delta3}};
  } else {
    auto kind = ve::model_kind_from_string(task);
    ve::Model model(kind, data.config().model, 0);
    model.load(checkpoint);
    if (kind == ve::ModelKind::Normals) {
      auto m = ve::eval_normals_model(model, data, split);
      report["metrics"] = {{"mean_deg", m.mean_deg},
                           {"median_deg", m.median_deg},
                           {"pct_11_25", m.pct_11},
                           {"pct_22_5", m.pct_22},
                           {"pct_30", m.pct_30}};
    } else if (kind == ve::ModelKind::Pretext ||
               kind == ve::ModelKind::PretextSimple ||
               kind == ve::ModelKind::BinaryMatch) {
      report["metrics"] = {
          {"accuracy", ve::eval_classification_model(model, data, split)}};
    } else {
      auto m = ve::eval_depth_model(model, data, split);
      report["metrics"] = {{"rms", m.rms},       {"rel", m.rel},
                           {"log10", m.log10},   {"delta1", m.delta1},
                           {"delta2", m.delta2}, {"delta3", m.delta3}};
    }
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& name, const std::string& config,
                   const std::string& out) {
  auto cfg = ve::ExperimentConfig::from_file(config);
  fs::path out_root(out);
  fs::path data_dir = out_root / "dataset";
  if (!fs::exists(data_dir / "manifest.jsonl")) {
    std::cerr << "generating dataset at " << data_dir.string() << "\n";
    ve::gen_dataset(cfg, data_dir);
  }
  ve::Dataset data(data_dir);
  std::string summary = ve::run_experiment(name, data, cfg, out_root);
  std::cout << summary << "\n";
  return 0;
}

int cmd_gradcheck() {
  auto results = ve::run_gradchecks();
  bool all_ok = true;
  for (const auto& r : results) {
    std::cout << (r.ok ? "PASS " : "FAIL ") << r.name << " max_err "
              << r.max_err << "\n";
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 1;
}

// Turns a report CSV into per-metric .dat files (condition, value pairs
// for the aggregate rows), ready for gnuplot or any plotting frontend.
int cmd_plot(const std::string& report, const std::string& out) {
  std::ifstream f(report);
  if (!f) {
    std::cerr << "cannot open report " << report << "\n";
    return 1;
  }
  std::string header;
  if (!std::getline(f, header)) {
    std::cerr << "empty report " << report << "\n";
    return 1;
  }
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  if (cols.size() < 3 || cols[0] != "condition" || cols[1] != "seed") {
    std::cerr << "unrecognized report header: " << header << "\n";
    return 1;
  }
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> series;
  std::string line;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != cols.size()) continue;
    // aggregate rows: the seed column holds "mean" or "-"
    if (cells[1] != "mean" && cells[1] != "-") continue;
    for (size_t i = 2; i < cols.size(); ++i) {
      if (cols[i] == "split" || cols[i] == "samples" || cols[i] == "pixels")
        continue;
      series[cols[i]].push_back({cells[0], cells[i]});
    }
  }
  fs::path out_dir = out.empty() ? fs::path(report).parent_path() : fs::path(out);
  fs::create_directories(out_dir);
  fs::path stem = fs::path(report).stem();
  for (const auto& [metric, rows] : series) {
    fs::path p = out_dir / (stem.string() + "_" + metric + ".dat");
    std::ofstream o(p);
    o << "# condition " << metric << "\n";
    for (const auto& [cond, val] : rows) o << cond << " " << val << "\n";
    std::cout << "wrote " << p.string() << "\n";
  }
  if (series.empty()) {
    std::cerr << "no aggregate rows found in " << report << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"echolab: echo-based spatial representation laboratory"};
  app.require_subcommand(1);

  std::string config, out, task, init = "scratch", dataset, checkpoint;
  std::string split = "test", name, report;
  uint64_t seed = 1;
  int epochs = 0;
  double lr = 0;

  auto* gen = app.add_subcommand("gen-dataset", "generate a dataset");
  gen->add_option("--config", config)->required();
  gen->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--task", task)->required();
  train->add_option("--init", init,
                    "'scratch' or a pretext checkpoint to warm-start from");
  train->add_option("--dataset", dataset)->required();
  train->add_option("--seed", seed);
  train->add_option("--out", out)->required();
  train->add_option("--epochs", epochs, "override the configured epoch count");
  train->add_option("--lr", lr, "override the configured learning rate");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--task", task)->required();
  ev->add_option("--checkpoint", checkpoint);
  ev->add_option("--dataset", dataset)->required();
  ev->add_option("--split", split);

  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  exp->add_option("--name", name)->required();
  exp->add_option("--config", config)->required();
  exp->add_option("--out", out, "working directory (default: runs)");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference layer checks");

  auto* plot = app.add_subcommand("plot", "emit plot data from a report CSV");
  plot->add_option("--report", report)->required();
  plot->add_option("--out", out, "output directory (default: beside report)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_dataset(config, out);
    if (train->parsed())
      return cmd_train(task, init, dataset, seed, out, epochs, lr);
    if (ev->parsed()) {
      if (task != "average" && checkpoint.empty()) {
        std::cerr << "error: --checkpoint is required for task " << task << "\n";
        return 2;
      }
      return cmd_eval(task, checkpoint, dataset, split);
    }
    if (exp->parsed())
      return cmd_experiment(name, config, out.empty() ? "runs" : out);
    if (gc->parsed()) return cmd_gradcheck();
    if (plot->parsed()) return cmd_plot(report, plot->count("--out") ? out : "");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
