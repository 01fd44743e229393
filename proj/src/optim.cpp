#include "mfng/optim.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mfng {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream id blocks: chains use [1, M], these stay clear of them.
constexpr std::uint64_t kPositiveStreamBase = std::uint64_t{1} << 40;
constexpr std::uint64_t kShuffleStreamBase = std::uint64_t{1} << 41;

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max_iter";
    case Termination::kBreakdown: return "breakdown";
  }
  return "unknown";
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (damping < 0.0) throw std::invalid_argument("damping must be >= 0");
  if (gibbs_sweeps < 1) throw std::invalid_argument("gibbs_sweeps must be >= 1");
  if (inference.iterations < 1)
    throw std::invalid_argument("inference iterations must be >= 1");
}

Eigen::VectorXd nll_gradient(const DbmModel& model,
                             const std::vector<JointState>& positive,
                             const std::vector<JointState>& negative) {
  return nll_gradient(model, positive, Eigen::VectorXd(), negative,
                      Eigen::VectorXd());
}

Eigen::VectorXd nll_gradient(const DbmModel& model,
                             const std::vector<JointState>& positive,
                             const Eigen::VectorXd& positive_weights,
                             const std::vector<JointState>& negative,
                             const Eigen::VectorXd& negative_weights) {
  if (positive.empty() || negative.empty())
    throw std::invalid_argument("empty sample set");
  const SampleMatrix pos = build_sample_matrix(model, positive, positive_weights);
  const SampleMatrix neg = build_sample_matrix(model, negative, negative_weights);
  return pos.s_bar - neg.s_bar;
}

UpdateDirection mfng_direction(const DbmModel& model,
                               const std::vector<JointState>& positive,
                               const Eigen::VectorXd& positive_weights,
                               const std::vector<JointState>& negative,
                               const Eigen::VectorXd& negative_weights,
                               const TrainConfig& config,
                               const Eigen::VectorXd* warm_start) {
  UpdateDirection out;
  out.gradient =
      nll_gradient(model, positive, positive_weights, negative, negative_weights);
  const SampleMatrix neg = build_sample_matrix(model, negative, negative_weights);
  const MetricOperator metric(neg, config.damping);
  LinearOperator op{metric.dimension(),
                    [&metric](const Eigen::VectorXd& y) { return metric.apply(y); }};
  Eigen::VectorXd x0 = warm_start != nullptr && warm_start->size() == op.dimension
                           ? *warm_start
                           : Eigen::VectorXd::Zero(op.dimension);
  const SolveResult solve = minres(op, out.gradient, x0, config.solver);
  out.solver_iterations = solve.iterations;
  out.solver_residual = solve.final_relative_residual;
  out.solver_termination = solve.termination;
  if (solve.termination == Termination::kBreakdown || !solve.x.allFinite()) {
    out.delta = out.gradient;
    out.fallback = true;
  } else {
    out.delta = solve.x;
  }
  return out;
}

namespace {

struct Phases {
  std::vector<JointState> positive;
  PhaseTimings timings;
};

Phases run_phases(const DbmModel& model, const Eigen::MatrixXd& batch,
                  ChainPool& pool, const TrainConfig& config,
                  PhiloxRng* positive_rng) {
  if (batch.rows() == 0) throw std::invalid_argument("empty batch");
  Phases out;
  auto t0 = Clock::now();
  out.positive = positive_phase(model, batch, config.inference, positive_rng);
  out.timings.positive = seconds_since(t0);
  t0 = Clock::now();
  sample_negative(model, pool, config.gibbs_sweeps);
  out.timings.negative = seconds_since(t0);
  return out;
}

void fill_report(UpdateReport* report, const PhaseTimings& timings,
                 const Eigen::VectorXd& gradient, const Eigen::VectorXd& delta,
                 const UpdateDirection* dir) {
  if (report == nullptr) return;
  report->timings = timings;
  report->grad_norm = gradient.norm();
  report->natural_grad_norm = delta.norm();
  if (dir != nullptr) {
    report->solver_iterations = dir->solver_iterations;
    report->solver_residual = dir->solver_residual;
    report->solver_termination = dir->solver_termination;
    report->fallback = dir->fallback;
  }
}

}  // namespace

Eigen::VectorXd mfng_iteration(const DbmModel& model, const Eigen::MatrixXd& batch,
                               ChainPool& pool, const TrainConfig& config,
                               PhiloxRng* positive_rng,
                               const Eigen::VectorXd* warm_start,
                               UpdateReport* report) {
  const auto total0 = Clock::now();
  Phases ph = run_phases(model, batch, pool, config, positive_rng);

  auto t0 = Clock::now();
  const Eigen::VectorXd g =
      nll_gradient(model, ph.positive, pool.states);
  const SampleMatrix neg = build_sample_matrix(model, pool);
  const MetricOperator metric(neg, config.damping);
  ph.timings.build = seconds_since(t0);

  t0 = Clock::now();
  LinearOperator op{metric.dimension(),
                    [&metric](const Eigen::VectorXd& y) { return metric.apply(y); }};
  Eigen::VectorXd x0 = warm_start != nullptr && warm_start->size() == op.dimension
                           ? *warm_start
                           : Eigen::VectorXd::Zero(op.dimension);
  SolverConfig solver_config = config.solver;
  if (config.jacobi) solver_config.jacobi_diagonal = metric.diagonal();
  const SolveResult solve = minres(op, g, x0, solver_config);
  ph.timings.solve = seconds_since(t0);

  UpdateDirection dir;
  dir.solver_iterations = solve.iterations;
  dir.solver_residual = solve.final_relative_residual;
  dir.solver_termination = solve.termination;
  if (solve.termination == Termination::kBreakdown || !solve.x.allFinite()) {
    dir.delta = g;
    dir.fallback = true;
  } else {
    dir.delta = solve.x;
  }
  ph.timings.total = seconds_since(total0);
  fill_report(report, ph.timings, g, dir.delta, &dir);
  return dir.delta;
}

Eigen::VectorXd mfng_diag_iteration(const DbmModel& model,
                                    const Eigen::MatrixXd& batch, ChainPool& pool,
                                    const TrainConfig& config,
                                    PhiloxRng* positive_rng,
                                    UpdateReport* report) {
  const auto total0 = Clock::now();
  Phases ph = run_phases(model, batch, pool, config, positive_rng);
  auto t0 = Clock::now();
  const Eigen::VectorXd g = nll_gradient(model, ph.positive, pool.states);
  const SampleMatrix neg = build_sample_matrix(model, pool);
  const MetricOperator metric(neg, config.damping);
  const Eigen::VectorXd d = metric.diagonal();
  ph.timings.build = seconds_since(t0);
  t0 = Clock::now();
  const Eigen::VectorXd delta = g.cwiseQuotient(d);
  ph.timings.solve = seconds_since(t0);
  ph.timings.total = seconds_since(total0);
  fill_report(report, ph.timings, g, delta, nullptr);
  return delta;
}

Eigen::VectorXd sml_iteration(const DbmModel& model, const Eigen::MatrixXd& batch,
                              ChainPool& pool, const TrainConfig& config,
                              PhiloxRng* positive_rng, UpdateReport* report) {
  const auto total0 = Clock::now();
  Phases ph = run_phases(model, batch, pool, config, positive_rng);
  auto t0 = Clock::now();
  const Eigen::VectorXd g = nll_gradient(model, ph.positive, pool.states);
  ph.timings.build = seconds_since(t0);
  ph.timings.total = seconds_since(total0);
  fill_report(report, ph.timings, g, g, nullptr);
  return g;
}

std::vector<UpdateReport> train(DbmModel& model, const Eigen::MatrixXd& data,
                                const TrainConfig& config, ChainPool& pool,
                                const EpochCallback& callback,
                                std::ostream* jsonl, int start_epoch) {
  config.validate();
  if (data.rows() == 0) throw std::invalid_argument("empty dataset");
  const int n_examples = static_cast<int>(data.rows());
  std::vector<UpdateReport> all;
  Eigen::VectorXd prev_delta;
  int global_update = start_epoch * ((n_examples + config.batch_size - 1) /
                                     config.batch_size);

  for (int epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
    PhiloxRng shuffle_rng(config.seed,
                          kShuffleStreamBase + static_cast<std::uint64_t>(epoch));
    std::vector<int> order(n_examples);
    for (int i = 0; i < n_examples; ++i) order[i] = i;
    for (int i = n_examples - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.next_below(i + 1)]);

    std::vector<UpdateReport> epoch_updates;
    for (int start = 0; start < n_examples; start += config.batch_size) {
      const int count = std::min(config.batch_size, n_examples - start);
      Eigen::MatrixXd batch(count, data.cols());
      for (int r = 0; r < count; ++r) batch.row(r) = data.row(order[start + r]);

      const auto total0 = Clock::now();
      PhiloxRng pos_rng(config.seed, kPositiveStreamBase +
                                         static_cast<std::uint64_t>(global_update));
      UpdateReport report;
      report.epoch = epoch;
      report.update = global_update;
      Eigen::VectorXd delta;
      switch (config.algorithm) {
        case Algorithm::kMfng:
          delta = mfng_iteration(model, batch, pool, config, &pos_rng,
                                 config.solver.warm_start ? &prev_delta : nullptr,
                                 &report);
          break;
        case Algorithm::kMfngDiag:
          delta = mfng_diag_iteration(model, batch, pool, config, &pos_rng, &report);
          break;
        case Algorithm::kSml:
          delta = sml_iteration(model, batch, pool, config, &pos_rng, &report);
          break;
      }
      const auto t_apply = Clock::now();
      model.set_params(model.params() - config.learning_rate * delta);
      report.timings.apply = seconds_since(t_apply);
      report.timings.total = seconds_since(total0);
      prev_delta = delta;
      ++global_update;

      if (!model.params().allFinite())
        throw std::runtime_error("non-finite parameters after update " +
                                 std::to_string(report.update));

      if (jsonl != nullptr) {
        nlohmann::json rec{
            {"epoch", report.epoch},
            {"update", report.update},
            {"grad_norm", report.grad_norm},
            {"natural_grad_norm", report.natural_grad_norm},
            {"solver_iterations", report.solver_iterations},
            {"solver_residual", report.solver_residual},
            {"solver_termination", termination_name(report.solver_termination)},
            {"fallback", report.fallback},
            {"t_pos_phase", report.timings.positive},
            {"t_neg_phase", report.timings.negative},
            {"t_build_S", report.timings.build},
            {"t_solve", report.timings.solve},
            {"t_apply", report.timings.apply},
            {"t_total", report.timings.total}};
        *jsonl << rec.dump() << "\n";
      }
      epoch_updates.push_back(report);
      all.push_back(report);
    }
    if (callback) callback(epoch, model, pool, epoch_updates);
  }
  return all;
}

}  // namespace mfng
