#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mfng/eval.hpp"
#include "mfng/experiment.hpp"
#include "mfng/io.hpp"

namespace {

int cmd_train(const std::string& config_path, long long seed_override,
              const std::string& output_override,
              const std::string& algorithm_override, bool resume) {
  mfng::ExperimentConfig config = mfng::load_experiment_config(config_path);
  if (seed_override >= 0)
    config.train.seed = static_cast<std::uint64_t>(seed_override);
  if (!output_override.empty()) config.output_dir = output_override;
  if (!algorithm_override.empty()) {
    if (algorithm_override == "mfng")
      config.train.algorithm = mfng::Algorithm::kMfng;
    else if (algorithm_override == "mfng_diag")
      config.train.algorithm = mfng::Algorithm::kMfngDiag;
    else if (algorithm_override == "sml")
      config.train.algorithm = mfng::Algorithm::kSml;
    else
      throw std::invalid_argument("unknown algorithm: " + algorithm_override);
  }
  return mfng::run_experiment(config, resume);
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             double threshold, int particles, int betas, std::uint64_t seed) {
  const mfng::DbmModel model = mfng::load_checkpoint(checkpoint);
  Eigen::MatrixXd data;
  if (!data_path.empty()) {
    const mfng::IdxData idx = mfng::load_idx(data_path);
    data = mfng::binarize(idx.values, threshold);
  }

  double log_z;
  if (model.num_units() <= mfng::kEnumerationCap) {
    log_z = mfng::exact_log_z(model);
    std::cout << "log_z (exact): " << log_z << "\n";
  } else {
    if (data.rows() == 0)
      throw std::invalid_argument("AIS evaluation needs --data for base rates");
    mfng::AisConfig config;
    config.n_particles = particles;
    config.betas = mfng::linear_betas(betas);
    config.seed = seed;
    const mfng::AisResult r =
        mfng::ais_log_z(model, mfng::base_rate_biases(data), config);
    log_z = r.log_z;
    std::cout << "log_z (AIS, " << particles << " particles, " << betas
              << " betas): " << log_z << "\n";
    std::cout << "log_weight_variance: " << r.log_weight_variance << "\n";
  }
  if (data.rows() > 0 && model.num_units() <= mfng::kEnumerationCap)
    std::cout << "mean_loglik: " << mfng::exact_loglik(model, data) << "\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  // Checkpoints, pool snapshots and IDX files all carry self-describing
  // headers; dispatch on the magic.
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path);
  char magic[8] = {};
  const std::size_t got = std::fread(magic, 1, 8, f);
  std::fclose(f);
  if (got != 8) throw std::runtime_error("file too short: " + path);

  if (std::string(magic, 8) == "MFNGCKPT") {
    const mfng::DbmModel model = mfng::load_checkpoint(path);
    std::cout << "model checkpoint, layers:";
    for (int n : model.layer_sizes()) std::cout << ' ' << n;
    std::cout << "\nparameters: " << model.num_params()
              << "\nparam norm: " << model.params().norm()
              << "\noffset mean: " << model.unit_offset().mean() << "\n";
    return 0;
  }
  if (std::string(magic, 8) == "MFNGPOOL") {
    std::cout << "chain pool snapshot (pair with its model checkpoint)\n";
    return 0;
  }
  const mfng::IdxData idx = mfng::load_idx(path);
  std::cout << "idx file, dims:";
  for (int d : idx.dims) std::cout << ' ' << d;
  std::cout << "\nvalue mean: " << idx.values.mean() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-free natural gradient training for Boltzmann machines"};
  app.require_subcommand(1);

  std::string config_path, output_override, algorithm_override;
  long long seed_override = -1;
  bool resume = false;
  auto* train = app.add_subcommand("train", "Run a training experiment");
  train->add_option("-c,--config", config_path, "Experiment config (JSON)")
      ->required();
  train->add_option("--seed", seed_override, "Override the training seed");
  train->add_option("-o,--output", output_override, "Override the output directory");
  train->add_option("--algorithm", algorithm_override,
                    "Override the algorithm (mfng, mfng_diag, sml)");
  train->add_flag("--resume", resume, "Continue from the last checkpoint");

  std::string checkpoint, data_path;
  double threshold = 0.5;
  int particles = 100, betas = 1000;
  std::uint64_t ais_seed = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a model checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint file")->required();
  eval->add_option("--data", data_path, "IDX dataset for likelihood / AIS base rates");
  eval->add_option("--threshold", threshold, "Binarization threshold");
  eval->add_option("--ais-particles", particles, "AIS particle count");
  eval->add_option("--ais-betas", betas, "AIS interpolation count");
  eval->add_option("--ais-seed", ais_seed, "AIS seed");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Describe a checkpoint or data file");
  inspect->add_option("path", inspect_path, "File to inspect")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, seed_override, output_override,
                       algorithm_override, resume);
    if (eval->parsed())
      return cmd_eval(checkpoint, data_path, threshold, particles, betas, ais_seed);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
