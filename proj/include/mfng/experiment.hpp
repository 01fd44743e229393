#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfng/eval.hpp"
#include "mfng/model.hpp"
#include "mfng/optim.hpp"

namespace mfng {

struct DataConfig {
  enum class Source { kBarsStripes, kRandomBernoulli, kIdx };
  Source source = Source::kBarsStripes;
  int rows = 3, cols = 4;  // bars_stripes grid
  int size = 64;
  int dim = 16;            // random_bernoulli width
  double p = 0.5;
  std::uint64_t seed = 0;
  std::string images;      // idx image file
  double threshold = 0.5;
  int subset = 0;          // 0: all examples
  double train_fraction = 0.75;
};

struct EvalSettings {
  enum class Method { kAuto, kExact, kAis, kNone };
  Method method = Method::kAuto;
  int every = 1;  // epochs between evaluations
  AisConfig ais;
  int ais_beta_count = 1000;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::vector<int> layer_sizes;
  std::string offsets_policy = "data_mean";  // or "zero"
  double weight_init_std = 0.05;
  TrainConfig train;
  DataConfig data;
  EvalSettings eval;
  int checkpoint_every = 0;  // 0: only final
  std::string output_dir;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Variational lower bound on log p*(v) = log sum_h exp(-E(v, h)) from the
// mean-field posterior; used when the model is too large to enumerate.
double mean_field_log_pstar(const DbmModel& model, const Eigen::VectorXd& visible,
                            int iterations);

// Runs a full experiment: builds the dataset and model, trains, evaluates at
// the configured cadence and writes metrics.csv, timing.csv, updates.jsonl
// and checkpoints under output_dir. With resume = true, continues a previous
// run from its last checkpoint. Returns a process exit status.
int run_experiment(const ExperimentConfig& config, bool resume = false);

}  // namespace mfng
