#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnn/model.hpp"
#include "tnn/problems.hpp"

namespace tnn {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kResultsSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training aborted by a numerical failure; `step` is the global step index.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& phase, std::size_t step, const std::string& what);
  std::string phase;
  std::size_t step;
};

struct RunConfig {
  std::string problem = "ho2d";   // preset name, or "oscillator" with `matrix`
  std::vector<std::vector<double>> matrix;  // custom oscillator A
  std::size_t k = 16;
  std::vector<NetworkArch> networks;  // one per TNN; empty -> `network` for all
  NetworkArch network{10, 3, 20, Activation::Sin};
  std::vector<DimensionSpec> dims;    // overrides the preset's quadrature/domain
  int box_dims = 2;
  double beta_init = 1.0;
  double adam_lr = 1e-3;
  std::size_t adam_steps = 20000;
  std::size_t lbfgs_steps = 500;
  std::size_t lbfgs_history = 20;
  std::uint64_t seed = 1;
  std::size_t log_every = 100;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::string results_path;          // empty: no files written
  std::string table_path;
  std::string checkpoint_path;
  std::string resume_path;

  static RunConfig preset(const std::string& name);
  /// Fields present in `j` override `base`. Unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  nlohmann::json to_json() const;
  void validate() const;
};

Problem build_problem(const RunConfig& cfg);

struct LossPoint {
  std::size_t step;
  double value;
};

struct JitterEvent {
  std::size_t step;
  double delta;
};

struct ErrorRow {
  std::size_t n = 0;
  std::string label;
  std::optional<double> exact;
  double approx = 0.0;
  std::optional<double> err_e;
  std::optional<double> err_l2;
  std::optional<double> err_h1;
};

struct TrainReport {
  nlohmann::json config;
  std::vector<LossPoint> loss;
  std::vector<JitterEvent> jitter;
  std::vector<double> ritz_values;
  Matrix ritz_vectors;
  Matrix a, b;
  std::vector<ErrorRow> rows;
  std::string lbfgs_status;
  std::size_t lbfgs_iterations = 0;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  std::string started_at;
};

using ProgressFn = std::function<void(const std::string& phase, std::size_t step, double loss)>;

/// Initialization, Adam phase, L-BFGS phase, Rayleigh-Ritz and errors.
TrainReport run(const RunConfig& cfg, const ProgressFn& progress = {});

/// Rayleigh-Ritz and the error table for a trained model.
TrainReport evaluate_model(const RunConfig& cfg, const Problem& problem, const TnnModel& model);

/// Results document without the timing field, then the timing field.
nlohmann::json report_json(const TrainReport& r, bool include_timing = true);
void write_table(std::ostream& os, const TrainReport& r);
/// Writes results/table files named in the config. I/O failures throw.
void report_emit(const TrainReport& r, const RunConfig& cfg);

}  // namespace tnn
