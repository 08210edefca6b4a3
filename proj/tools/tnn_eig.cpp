#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tnn/checkpoint.hpp"
#include "tnn/driver.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Leading eigenpairs of separable eigenvalue problems with tensor neural networks"};
  std::string config_path, preset, out_dir, resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps_adam, steps_lbfgs, k;
  std::optional<double> lr;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "problem preset")
      ->check(CLI::IsMember({"ho2d", "ho2d-coupled", "ho5d-coupled", "hydrogen", "box-laplace"}));
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory for results.json, results.txt and model.ckpt");
  app.add_option("--steps-adam", steps_adam, "Adam steps");
  app.add_option("--steps-lbfgs", steps_lbfgs, "L-BFGS iterations");
  app.add_option("--k", k, "number of eigenpairs");
  app.add_option("--lr", lr, "Adam learning rate");
  app.add_option("--resume", resume, "checkpoint to start from")->check(CLI::ExistingFile);
  app.add_flag("-q,--quiet", quiet, "no progress output");
  CLI11_PARSE(app, argc, argv);

  tnn::RunConfig cfg;
  try {
    cfg = tnn::RunConfig::preset(preset.empty() ? "ho2d" : preset);
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(is);
      } catch (const nlohmann::json::exception& e) {
        throw tnn::ConfigError(config_path + ": " + e.what());
      }
      cfg = tnn::RunConfig::from_json(j, cfg);
      // --preset on the command line beats the file's problem
      if (!preset.empty() && cfg.problem != preset) {
        j.erase("problem");
        cfg = tnn::RunConfig::from_json(j, tnn::RunConfig::preset(preset));
      }
    }
    if (seed) cfg.seed = *seed;
    if (steps_adam) cfg.adam_steps = *steps_adam;
    if (steps_lbfgs) cfg.lbfgs_steps = *steps_lbfgs;
    if (k) cfg.k = *k;
    if (lr) cfg.adam_lr = *lr;
    if (!resume.empty()) cfg.resume_path = resume;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      cfg.results_path = (fs::path(out_dir) / "results.json").string();
      cfg.table_path = (fs::path(out_dir) / "results.txt").string();
      cfg.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
    }
    cfg.validate();
  } catch (const tnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  tnn::ProgressFn progress;
  if (!quiet)
    progress = [](const std::string& phase, std::size_t step, double loss) {
      std::fprintf(stderr, "%-6s %8zu  loss %.15g\n", phase.c_str(), step, loss);
    };
  try {
    const auto report = tnn::run(cfg, progress);
    tnn::report_emit(report, cfg);
    tnn::write_table(std::cout, report);
    if (!quiet) std::fprintf(stderr, "done in %.1f s\n", report.wall_seconds);
  } catch (const tnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tnn::TrainingError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (!cfg.checkpoint_path.empty()) std::cerr << "partial checkpoint: " << cfg.checkpoint_path << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
