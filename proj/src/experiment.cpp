#include "mfng/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mfng/io.hpp"

namespace mfng {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object())
    throw std::invalid_argument("config: " + context + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key))
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " +
                                  context);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<T>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "mfng") return Algorithm::kMfng;
  if (name == "mfng_diag") return Algorithm::kMfngDiag;
  if (name == "sml") return Algorithm::kSml;
  throw std::invalid_argument("config: unknown algorithm \"" + name + "\"");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kMfng: return "mfng";
    case Algorithm::kMfngDiag: return "mfng_diag";
    case Algorithm::kSml: return "sml";
  }
  return "?";
}

// Scoped lockfile: no two experiments may share an output directory.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    if (fs::exists(path_))
      throw std::runtime_error("output directory is locked: " + path_.string());
    std::ofstream(path_) << "locked\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
};

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  check_keys(j, {"schema_version", "model", "train", "data", "eval",
                 "checkpoint_every", "output_dir"},
             "top level");
  ExperimentConfig c;
  c.schema_version = get_or(j, "schema_version", 1);
  if (c.schema_version != 1)
    throw std::invalid_argument("config: unsupported schema_version");

  const json& model = j.at("model");
  check_keys(model, {"layer_sizes", "offsets", "weight_init_std"}, "model");
  c.layer_sizes = model.at("layer_sizes").get<std::vector<int>>();
  c.offsets_policy = get_or<std::string>(model, "offsets", "data_mean");
  if (c.offsets_policy != "data_mean" && c.offsets_policy != "zero")
    throw std::invalid_argument("config: offsets must be data_mean or zero");
  c.weight_init_std = get_or(model, "weight_init_std", 0.05);

  const json& train = j.at("train");
  check_keys(train,
             {"algorithm", "learning_rate", "batch_size", "epochs", "seed",
              "chains", "damping", "gibbs_sweeps", "inference", "solver"},
             "train");
  c.train.algorithm = parse_algorithm(get_or<std::string>(train, "algorithm", "mfng"));
  c.train.learning_rate = get_or(train, "learning_rate", 5e-3);
  c.train.batch_size = get_or(train, "batch_size", 25);
  c.train.epochs = get_or(train, "epochs", 1);
  c.train.seed = get_or<std::uint64_t>(train, "seed", 0);
  c.train.chains = get_or(train, "chains", 0);
  c.train.damping = get_or(train, "damping", 0.1);
  c.train.gibbs_sweeps = get_or(train, "gibbs_sweeps", 5);
  if (train.contains("inference")) {
    const json& inf = train.at("inference");
    check_keys(inf, {"mode", "iterations"}, "train.inference");
    const auto mode = get_or<std::string>(inf, "mode", "mean_field");
    if (mode == "mean_field")
      c.train.inference.mode = InferenceConfig::Mode::kMeanField;
    else if (mode == "gibbs")
      c.train.inference.mode = InferenceConfig::Mode::kGibbs;
    else
      throw std::invalid_argument("config: unknown inference mode");
    c.train.inference.iterations = get_or(inf, "iterations", 5);
  }
  if (train.contains("solver")) {
    const json& sol = train.at("solver");
    check_keys(sol, {"tolerance", "max_iterations", "preconditioner", "warm_start"},
               "train.solver");
    c.train.solver.tolerance = get_or(sol, "tolerance", 1e-5);
    c.train.solver.max_iterations = get_or(sol, "max_iterations", 200);
    c.train.solver.warm_start = get_or(sol, "warm_start", false);
    const auto pre = get_or<std::string>(sol, "preconditioner", "none");
    if (pre == "jacobi")
      c.train.jacobi = true;
    else if (pre != "none")
      throw std::invalid_argument("config: unknown preconditioner");
  }
  c.train.validate();

  const json& data = j.at("data");
  check_keys(data,
             {"source", "rows", "cols", "size", "dim", "p", "seed", "images",
              "threshold", "subset", "train_fraction"},
             "data");
  const auto source = data.at("source").get<std::string>();
  if (source == "bars_stripes")
    c.data.source = DataConfig::Source::kBarsStripes;
  else if (source == "random_bernoulli")
    c.data.source = DataConfig::Source::kRandomBernoulli;
  else if (source == "idx")
    c.data.source = DataConfig::Source::kIdx;
  else
    throw std::invalid_argument("config: unknown data source");
  c.data.rows = get_or(data, "rows", 3);
  c.data.cols = get_or(data, "cols", 4);
  c.data.size = get_or(data, "size", 64);
  c.data.dim = get_or(data, "dim", 16);
  c.data.p = get_or(data, "p", 0.5);
  c.data.seed = get_or<std::uint64_t>(data, "seed", 0);
  c.data.images = get_or<std::string>(data, "images", "");
  c.data.threshold = get_or(data, "threshold", 0.5);
  c.data.subset = get_or(data, "subset", 0);
  c.data.train_fraction = get_or(data, "train_fraction", 0.75);
  if (c.data.train_fraction <= 0.0 || c.data.train_fraction > 1.0)
    throw std::invalid_argument("config: train_fraction must be in (0,1]");

  if (j.contains("eval")) {
    const json& ev = j.at("eval");
    check_keys(ev, {"method", "every", "ais"}, "eval");
    const auto method = get_or<std::string>(ev, "method", "auto");
    if (method == "auto")
      c.eval.method = EvalSettings::Method::kAuto;
    else if (method == "exact")
      c.eval.method = EvalSettings::Method::kExact;
    else if (method == "ais")
      c.eval.method = EvalSettings::Method::kAis;
    else if (method == "none")
      c.eval.method = EvalSettings::Method::kNone;
    else
      throw std::invalid_argument("config: unknown eval method");
    c.eval.every = get_or(ev, "every", 1);
    if (c.eval.every < 1) throw std::invalid_argument("config: eval.every >= 1");
    if (ev.contains("ais")) {
      const json& ais = ev.at("ais");
      check_keys(ais, {"particles", "betas", "seed"}, "eval.ais");
      c.eval.ais.n_particles = get_or(ais, "particles", 100);
      c.eval.ais_beta_count = get_or(ais, "betas", 1000);
      c.eval.ais.seed = get_or<std::uint64_t>(ais, "seed", 0);
    }
  }
  c.checkpoint_every = get_or(j, "checkpoint_every", 0);
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["model"] = {{"layer_sizes", c.layer_sizes},
                {"offsets", c.offsets_policy},
                {"weight_init_std", c.weight_init_std}};
  j["train"] = {
      {"algorithm", algorithm_name(c.train.algorithm)},
      {"learning_rate", c.train.learning_rate},
      {"batch_size", c.train.batch_size},
      {"epochs", c.train.epochs},
      {"seed", c.train.seed},
      {"chains", c.train.chains},
      {"damping", c.train.damping},
      {"gibbs_sweeps", c.train.gibbs_sweeps},
      {"inference",
       {{"mode", c.train.inference.mode == InferenceConfig::Mode::kMeanField
                     ? "mean_field"
                     : "gibbs"},
        {"iterations", c.train.inference.iterations}}},
      {"solver",
       {{"tolerance", c.train.solver.tolerance},
        {"max_iterations", c.train.solver.max_iterations},
        {"preconditioner", c.train.jacobi ? "jacobi" : "none"},
        {"warm_start", c.train.solver.warm_start}}}};
  switch (c.data.source) {
    case DataConfig::Source::kBarsStripes:
      j["data"] = {{"source", "bars_stripes"}, {"rows", c.data.rows},
                   {"cols", c.data.cols},      {"size", c.data.size},
                   {"seed", c.data.seed},      {"train_fraction", c.data.train_fraction}};
      break;
    case DataConfig::Source::kRandomBernoulli:
      j["data"] = {{"source", "random_bernoulli"}, {"size", c.data.size},
                   {"dim", c.data.dim},            {"p", c.data.p},
                   {"seed", c.data.seed},          {"train_fraction", c.data.train_fraction}};
      break;
    case DataConfig::Source::kIdx:
      j["data"] = {{"source", "idx"},
                   {"images", c.data.images},
                   {"threshold", c.data.threshold},
                   {"subset", c.data.subset},
                   {"train_fraction", c.data.train_fraction}};
      break;
  }
  const char* method = "auto";
  if (c.eval.method == EvalSettings::Method::kExact) method = "exact";
  if (c.eval.method == EvalSettings::Method::kAis) method = "ais";
  if (c.eval.method == EvalSettings::Method::kNone) method = "none";
  j["eval"] = {{"method", method},
               {"every", c.eval.every},
               {"ais",
                {{"particles", c.eval.ais.n_particles},
                 {"betas", c.eval.ais_beta_count},
                 {"seed", c.eval.ais.seed}}}};
  j["checkpoint_every"] = c.checkpoint_every;
  j["output_dir"] = c.output_dir;
  return j;
}

double mean_field_log_pstar(const DbmModel& model, const Eigen::VectorXd& visible,
                            int iterations) {
  const auto mu =
      mean_field_posterior(model, visible.transpose(), iterations);
  JointState state;
  state.push_back(visible);
  double entropy = 0.0;
  for (const auto& layer : mu) {
    state.push_back(layer.row(0).transpose());
    for (int i = 0; i < layer.cols(); ++i) {
      const double m = layer(0, i);
      entropy += -m * std::log(m) - (1.0 - m) * std::log(1.0 - m);
    }
  }
  return -model.energy(state) + entropy;
}

namespace {

Eigen::MatrixXd build_dataset(const DataConfig& d) {
  switch (d.source) {
    case DataConfig::Source::kBarsStripes:
      return bars_stripes_dataset(d.rows, d.cols, d.size, d.seed);
    case DataConfig::Source::kRandomBernoulli:
      return random_bernoulli_dataset(d.size, d.dim, d.p, d.seed);
    case DataConfig::Source::kIdx: {
      IdxData idx = load_idx(d.images);
      Eigen::MatrixXd values = binarize(idx.values, d.threshold);
      if (d.subset > 0 && d.subset < values.rows())
        values = values.topRows(d.subset).eval();
      return values;
    }
  }
  throw std::invalid_argument("unknown data source");
}

struct Evaluator {
  EvalSettings::Method method;
  AisConfig ais;
  int mean_field_iters;

  // train/test mean log-likelihood
  std::pair<double, double> operator()(const DbmModel& model,
                                       const Eigen::MatrixXd& train,
                                       const Eigen::MatrixXd& test) const {
    const int hidden = model.num_units() - model.layer_sizes()[0];
    switch (method) {
      case EvalSettings::Method::kNone:
        return {std::nan(""), std::nan("")};
      case EvalSettings::Method::kExact:
        return {exact_loglik(model, train),
                test.rows() > 0 ? exact_loglik(model, test) : std::nan("")};
      default:
        break;
    }
    if (method == EvalSettings::Method::kAuto &&
        model.num_units() <= kEnumerationCap)
      return {exact_loglik(model, train),
              test.rows() > 0 ? exact_loglik(model, test) : std::nan("")};
    const AisResult z = ais_log_z(model, base_rate_biases(train), ais);
    auto mean_ll = [&](const Eigen::MatrixXd& data) {
      if (data.rows() == 0) return std::nan("");
      double total = 0.0;
      for (int r = 0; r < data.rows(); ++r) {
        const Eigen::VectorXd v = data.row(r).transpose();
        const double lp = hidden <= kEnumerationCap
                              ? exact_log_z_clamped(model, v)
                              : mean_field_log_pstar(model, v, mean_field_iters);
        total += lp - z.log_z;
      }
      return total / data.rows();
    };
    return {mean_ll(train), mean_ll(test)};
  }
};

}  // namespace

int run_experiment(const ExperimentConfig& config, bool resume) {
  if (config.output_dir.empty())
    throw std::invalid_argument("config: output_dir is required");
  if (config.layer_sizes.empty())
    throw std::invalid_argument("config: layer_sizes is required");
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  DirLock lock(dir);

  const Eigen::MatrixXd all = build_dataset(config.data);
  if (all.cols() != config.layer_sizes[0])
    throw std::invalid_argument("dataset width does not match visible layer");
  const int n_train =
      std::max(1, static_cast<int>(std::floor(all.rows() * config.data.train_fraction)));
  const Eigen::MatrixXd train_data = all.topRows(n_train);
  const Eigen::MatrixXd test_data = all.bottomRows(all.rows() - n_train);

  // Model: visible offsets from the training pixel means, hidden at 0.5.
  int total_units = 0;
  for (int n : config.layer_sizes) total_units += n;
  Eigen::VectorXd offsets = Eigen::VectorXd::Zero(total_units);
  if (config.offsets_policy == "data_mean") {
    offsets.setConstant(0.5);
    offsets.head(config.layer_sizes[0]) = train_data.colwise().mean();
  }

  DbmModel model(config.layer_sizes, offsets);
  ChainPool pool;
  int start_epoch = 0;
  const fs::path state_path = dir / "state.json";

  if (resume && fs::exists(state_path)) {
    json state;
    std::ifstream(state_path) >> state;
    start_epoch = state.at("last_epoch").get<int>();
    model = load_checkpoint((dir / "model_latest.ckpt").string());
    pool = load_pool((dir / "pool_latest.pool").string(), model);
  } else {
    PhiloxRng init_rng(config.train.seed, std::uint64_t{1} << 42);
    Eigen::VectorXd theta = model.params();
    for (int l = 1; l < model.num_layers(); ++l) {
      auto w = model.layout().view(theta, weight_name(l));
      for (int cidx = 0; cidx < w.cols(); ++cidx)
        for (int ridx = 0; ridx < w.rows(); ++ridx)
          w(ridx, cidx) = config.weight_init_std * init_rng.next_normal();
    }
    model.set_params(theta);
    pool = ChainPool(model, config.train.resolved_chains(), config.train.seed);
  }

  AisConfig ais = config.eval.ais;
  ais.betas = linear_betas(config.eval.ais_beta_count);
  Evaluator evaluate{config.eval.method, ais, config.train.inference.iterations};

  std::ofstream config_out(dir / "config.json");
  config_out << to_json(config).dump(2) << "\n";
  config_out.close();

  const bool fresh = start_epoch == 0;
  std::ofstream metrics(dir / "metrics.csv", fresh ? std::ios::trunc : std::ios::app);
  std::ofstream timing(dir / "timing.csv", fresh ? std::ios::trunc : std::ios::app);
  std::ofstream jsonl(dir / "updates.jsonl", fresh ? std::ios::trunc : std::ios::app);
  if (fresh) {
    metrics << "epoch,cpu_seconds,updates,train_loglik,test_loglik,"
               "solver_iters_mean,grad_norm_mean\n";
    timing << "epoch,t_pos_phase,t_neg_phase,t_build_S,t_solve,t_apply,t_total\n";
  }

  const std::clock_t cpu0 = std::clock();
  auto cpu_seconds = [cpu0] {
    return static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
  };
  const int updates_per_epoch =
      (n_train + config.train.batch_size - 1) / config.train.batch_size;
  long long updates_done =
      static_cast<long long>(start_epoch) * updates_per_epoch;

  auto write_metrics_row = [&](int epoch, double train_ll, double test_ll,
                               double iters_mean, double grad_mean) {
    metrics << epoch << ',' << fmt(cpu_seconds()) << ',' << updates_done << ','
            << fmt(train_ll) << ',' << fmt(test_ll) << ',' << fmt(iters_mean)
            << ',' << fmt(grad_mean) << '\n';
    metrics.flush();
  };

  if (fresh) {
    const auto [ll_train, ll_test] = evaluate(model, train_data, test_data);
    write_metrics_row(0, ll_train, ll_test, 0.0, 0.0);
  }

  auto save_state = [&](int epoch) {
    save_checkpoint((dir / "model_latest.ckpt").string(), model);
    save_pool((dir / "pool_latest.pool").string(), pool, model);
    std::ofstream(state_path) << json{{"last_epoch", epoch}}.dump() << "\n";
  };

  auto callback = [&](int epoch, const DbmModel& m, const ChainPool&,
                      const std::vector<UpdateReport>& epoch_updates) {
    updates_done += static_cast<long long>(epoch_updates.size());
    PhaseTimings mean;
    double iters = 0.0, grad = 0.0;
    for (const auto& u : epoch_updates) {
      mean.positive += u.timings.positive;
      mean.negative += u.timings.negative;
      mean.build += u.timings.build;
      mean.solve += u.timings.solve;
      mean.apply += u.timings.apply;
      mean.total += u.timings.total;
      iters += u.solver_iterations;
      grad += u.grad_norm;
    }
    const double k = std::max<std::size_t>(1, epoch_updates.size());
    timing << epoch << ',' << fmt(mean.positive / k) << ',' << fmt(mean.negative / k)
           << ',' << fmt(mean.build / k) << ',' << fmt(mean.solve / k) << ','
           << fmt(mean.apply / k) << ',' << fmt(mean.total / k) << '\n';
    timing.flush();
    if (epoch % config.eval.every == 0 || epoch == config.train.epochs) {
      const auto [ll_train, ll_test] = evaluate(m, train_data, test_data);
      write_metrics_row(epoch, ll_train, ll_test, iters / k, grad / k);
    }
    if ((config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) ||
        epoch == config.train.epochs)
      save_state(epoch);
  };

  try {
    train(model, train_data, config.train, pool, callback, &jsonl, start_epoch);
  } catch (const std::exception& e) {
    save_checkpoint((dir / "model_diverged.ckpt").string(), model);
    metrics.flush();
    timing.flush();
    jsonl.flush();
    std::ofstream(dir / "error.txt") << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mfng
