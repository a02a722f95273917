#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pairpred/app/analyze.hpp"
#include "pairpred/app/evaluate.hpp"
#include "pairpred/app/gradcheck_suite.hpp"
#include "pairpred/app/run_config.hpp"
#include "pairpred/app/trainer.hpp"
#include "pairpred/errors.hpp"

namespace fs = std::filesystem;
using namespace pairpred;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

int cmd_generate(const fs::path& config, const fs::path& out) {
  const auto cfg = app::load_run_config(config);
  app::generate_dataset(out, cfg.synth, cfg.data.map_spacing);
  std::cout << "wrote dataset to " << out.string() << '\n';
  return 0;
}

int cmd_train(const fs::path& config, const fs::path& out) {
  const auto cfg = app::load_run_config(config);
  const auto scenes = app::scene_set_for(cfg);
  std::cout << "training on " << scenes.size() << " scenes\n";
  fs::create_directories(out);
  {
    std::ofstream copy(out / "config.json", std::ios::binary);
    copy << app::to_json(cfg) << '\n';
  }
  app::TrainOptions opts;
  opts.out_dir = out;
  opts.stride = cfg.data.stride;
  opts.on_epoch = [](std::size_t epoch, double mgnll) {
    std::printf("epoch %zu  mean_mgnll %.6f\n", epoch, mgnll);
    std::fflush(stdout);
  };
  app::train_model(cfg.model, cfg.training, scenes, opts);
  return 0;
}

void print_report(const char* label, const metrics::MetricsReport& r) {
  std::printf("%-9s %g,%.6f,%.6f,%.6f,%zu\n", label, r.horizon_s, r.min_sade, r.min_sfde, r.smr, r.n_scenes);
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data, int horizon, const fs::path& out) {
  const auto loaded = app::load_model(checkpoint);
  const auto scenes = app::load_scene_set(data, loaded.model.config().t_f, loaded.stride);
  const auto r = app::evaluate_model(loaded.model, scenes, horizon);
  std::printf("%-9s horizon_s,min_sade,min_sfde,smr,n_scenes\n", "");
  print_report("model", r.model);
  print_report("cv", r.baseline);
  if (!out.empty()) {
    fs::create_directories(out);
    metrics::write_metrics_csv(out / "metrics.csv", std::span(&r.model, 1));
    metrics::write_metrics_csv(out / "metrics_cv.csv", std::span(&r.baseline, 1));
  }
  return 0;
}

int cmd_analyze(const fs::path& checkpoint, const fs::path& data, const fs::path& out, bool weighted) {
  const auto loaded = app::load_model(checkpoint);
  const auto scenes = app::load_scene_set(data, loaded.model.config().t_f, loaded.stride);
  const auto r = app::analyze_model(loaded.model, scenes, out,
                                    weighted ? interaction::ModeSelection::probability_weighted
                                             : interaction::ModeSelection::best_sfde);
  std::cout << "wrote " << r.plots.size() << " plots and " << app::kDependencyFile << " to " << out.string() << '\n';
  if (!scenes.labels.empty()) {
    const auto sep = app::interaction_separation(scenes, r.scenes);
    std::printf("ego pairs: %zu interacting, %zu checked, %zu unrelated; AUC %.4f (vs checked only %.4f)\n",
                sep.interacting.size(), sep.checked.size(), sep.unlabeled.size(), sep.auc, sep.auc_checked);
  }
  return 0;
}

int cmd_gradcheck() {
  const auto report = app::run_gradcheck_suite();
  app::print_gradcheck_report(std::cout, report);
  return report.all_passed() ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Agent-pair trajectory prediction with joint Gaussian covariances"};
  cli.require_subcommand(1);

  fs::path config, out, checkpoint, data;
  int horizon = 3;
  bool weighted = false;

  auto* generate = cli.add_subcommand("generate", "Write a synthetic roundabout dataset");
  generate->add_option("--config", config, "Run configuration (JSON)")->required();
  generate->add_option("--out", out, "Output directory")->required();

  auto* train = cli.add_subcommand("train", "Train a model");
  train->add_option("--config", config, "Run configuration (JSON)")->required();
  train->add_option("--out", out, "Output directory for log and checkpoint")->required();

  auto* eval = cli.add_subcommand("eval", "Evaluate a checkpoint and the constant-velocity baseline");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--horizon", horizon, "Prediction horizon in seconds")->check(CLI::IsMember({3, 5}));
  eval->add_option("--out", out, "Optional directory for metrics CSVs");

  auto* analyze = cli.add_subcommand("analyze", "Write dependency scores and scene plots");
  analyze->add_option("--checkpoint", checkpoint)->required();
  analyze->add_option("--data", data, "Dataset directory")->required();
  analyze->add_option("--out", out, "Output directory")->required();
  analyze->add_flag("--weighted", weighted, "Average scores over modes by probability");

  auto* gradcheck = cli.add_subcommand("gradcheck", "Finite-difference gradient checks");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (*generate) return cmd_generate(config, out);
    if (*train) return cmd_train(config, out);
    if (*eval) return cmd_eval(checkpoint, data, horizon, out);
    if (*analyze) return cmd_analyze(checkpoint, data, out, weighted);
    if (*gradcheck) return cmd_gradcheck();
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
