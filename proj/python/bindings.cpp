#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfng/eval.hpp"
#include "mfng/experiment.hpp"
#include "mfng/inference.hpp"
#include "mfng/io.hpp"
#include "mfng/metric.hpp"
#include "mfng/model.hpp"
#include "mfng/optim.hpp"
#include "mfng/solver.hpp"

namespace py = pybind11;
using namespace mfng;

namespace {

SolveResult solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& x0, const SolverConfig& config,
                        bool use_cg) {
  LinearOperator op{static_cast<int>(a.rows()),
                    [&a](const Eigen::VectorXd& y) -> Eigen::VectorXd { return a * y; }};
  return use_cg ? cg(op, rhs, x0, config) : minres(op, rhs, x0, config);
}

}  // namespace

PYBIND11_MODULE(_mfng, m) {
  m.doc() = "Metric-free natural gradient training for Boltzmann machines";

  py::class_<GenericBm>(m, "GenericBm")
      .def(py::init<int, Eigen::VectorXd>(), py::arg("n"),
           py::arg("offsets") = Eigen::VectorXd())
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd, Eigen::VectorXd>(),
           py::arg("weights"), py::arg("bias"),
           py::arg("offsets") = Eigen::VectorXd())
      .def_property_readonly("num_units", &GenericBm::num_units)
      .def_property_readonly("num_params", &GenericBm::num_params)
      .def("params", &GenericBm::params)
      .def("set_params", &GenericBm::set_params)
      .def("energy", py::overload_cast<const Eigen::VectorXd&>(
                         &GenericBm::energy, py::const_))
      .def("energy_grad", py::overload_cast<const Eigen::VectorXd&>(
                              &GenericBm::energy_grad, py::const_))
      .def("set_weight", &GenericBm::set_weight)
      .def("set_bias", &GenericBm::set_bias);

  py::class_<DbmModel>(m, "DbmModel")
      .def(py::init<std::vector<int>, Eigen::VectorXd>(), py::arg("layer_sizes"),
           py::arg("offsets") = Eigen::VectorXd())
      .def_property_readonly("layer_sizes", &DbmModel::layer_sizes)
      .def_property_readonly("num_units", &DbmModel::num_units)
      .def_property_readonly("num_params", &DbmModel::num_params)
      .def("params", &DbmModel::params)
      .def("set_params", &DbmModel::set_params)
      .def("energy", py::overload_cast<const Eigen::VectorXd&>(&DbmModel::energy,
                                                               py::const_))
      .def("energy_grad", py::overload_cast<const Eigen::VectorXd&>(
                              &DbmModel::energy_grad, py::const_))
      .def("uncentered", &DbmModel::uncentered)
      .def("unit_offset", &DbmModel::unit_offset)
      .def("coupling", &DbmModel::coupling);

  py::class_<InferenceConfig> inf(m, "InferenceConfig");
  inf.def(py::init<>())
      .def_readwrite("mode", &InferenceConfig::mode)
      .def_readwrite("iterations", &InferenceConfig::iterations);
  py::enum_<InferenceConfig::Mode>(inf, "Mode")
      .value("mean_field", InferenceConfig::Mode::kMeanField)
      .value("gibbs", InferenceConfig::Mode::kGibbs);

  py::class_<ChainPool>(m, "ChainPool")
      .def(py::init<const DbmModel&, int, std::uint64_t, std::uint64_t>(),
           py::arg("model"), py::arg("chains"), py::arg("seed"),
           py::arg("stream_base") = 1)
      .def_property_readonly("size", &ChainPool::size)
      .def_readwrite("states", &ChainPool::states);

  m.def("mean_field_posterior", &mean_field_posterior, py::arg("model"),
        py::arg("visible"), py::arg("iterations"));
  m.def("gibbs_sweep", &gibbs_sweep, py::arg("model"), py::arg("pool"),
        py::arg("clamp_visible"));
  m.def("sample_negative", &sample_negative, py::arg("model"), py::arg("pool"),
        py::arg("k_sweeps"));

  py::class_<SampleMatrix>(m, "SampleMatrix")
      .def_readonly("S", &SampleMatrix::S)
      .def_readonly("s_bar", &SampleMatrix::s_bar)
      .def_readonly("weights", &SampleMatrix::weights);
  m.def("build_sample_matrix",
        [](const DbmModel& model, const ChainPool& pool) {
          return build_sample_matrix(model, pool);
        });

  py::class_<MetricOperator>(m, "MetricOperator")
      .def(py::init<const SampleMatrix&, double>(), py::arg("samples"),
           py::arg("alpha"))
      .def_property_readonly("dimension", &MetricOperator::dimension)
      .def("apply", &MetricOperator::apply)
      .def("diagonal", &MetricOperator::diagonal)
      .def("dense", &MetricOperator::dense, py::arg("cap") = 2000);

  py::enum_<Termination>(m, "Termination")
      .value("converged", Termination::kConverged)
      .value("max_iterations", Termination::kMaxIterations)
      .value("breakdown", Termination::kBreakdown);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("tolerance", &SolverConfig::tolerance)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("jacobi_diagonal", &SolverConfig::jacobi_diagonal)
      .def_readwrite("warm_start", &SolverConfig::warm_start);

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("x", &SolveResult::x)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("final_relative_residual", &SolveResult::final_relative_residual)
      .def_readonly("termination", &SolveResult::termination)
      .def_readonly("residual_history", &SolveResult::residual_history);

  m.def("minres_dense", &solve_dense, py::arg("a"), py::arg("rhs"), py::arg("x0"),
        py::arg("config") = SolverConfig(), py::arg("use_cg") = false);

  m.def("exact_log_z",
        [](const DbmModel& model) { return exact_log_z(model); });
  m.def("exact_log_z_generic",
        [](const GenericBm& model) { return exact_log_z(model); });
  m.def("exact_loglik", [](const DbmModel& model, const Eigen::MatrixXd& v) {
    return exact_loglik(model, v);
  });
  py::enum_<FimForm>(m, "FimForm")
      .value("covariance", FimForm::kCovariance)
      .value("hessian_log_z", FimForm::kHessianLogZ)
      .value("score_outer", FimForm::kScoreOuter);
  m.def("exact_fim",
        [](const DbmModel& model, FimForm form) { return exact_fim(model, form); });
  m.def("exact_fim_generic", [](const GenericBm& model, FimForm form) {
    return exact_fim(model, form);
  });
  m.def("exact_natural_gradient",
        [](const DbmModel& model, const Eigen::MatrixXd& v, double alpha) {
          return exact_natural_gradient(model, v, alpha);
        });
  m.def("base_rate_biases", &base_rate_biases, py::arg("data"),
        py::arg("clip") = 10.0);
  m.def("linear_betas", &linear_betas);

  py::class_<AisConfig>(m, "AisConfig")
      .def(py::init<>())
      .def_readwrite("n_particles", &AisConfig::n_particles)
      .def_readwrite("betas", &AisConfig::betas)
      .def_readwrite("seed", &AisConfig::seed);
  py::class_<AisResult>(m, "AisResult")
      .def_readonly("log_z", &AisResult::log_z)
      .def_readonly("log_weight_variance", &AisResult::log_weight_variance)
      .def_readonly("log_weights", &AisResult::log_weights);
  m.def("ais_log_z", &ais_log_z, py::arg("model"), py::arg("base_visible_bias"),
        py::arg("config"));

  py::enum_<Algorithm>(m, "Algorithm")
      .value("mfng", Algorithm::kMfng)
      .value("mfng_diag", Algorithm::kMfngDiag)
      .value("sml", Algorithm::kSml);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &TrainConfig::algorithm)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("inference", &TrainConfig::inference)
      .def_readwrite("solver", &TrainConfig::solver)
      .def_readwrite("jacobi", &TrainConfig::jacobi)
      .def_readwrite("damping", &TrainConfig::damping)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("chains", &TrainConfig::chains)
      .def_readwrite("gibbs_sweeps", &TrainConfig::gibbs_sweeps);

  m.def(
      "mfng_iteration",
      [](const DbmModel& model, const Eigen::MatrixXd& batch, ChainPool& pool,
         const TrainConfig& config) {
        return mfng_iteration(model, batch, pool, config);
      },
      py::arg("model"), py::arg("batch"), py::arg("pool"), py::arg("config"));
  m.def(
      "mfng_diag_iteration",
      [](const DbmModel& model, const Eigen::MatrixXd& batch, ChainPool& pool,
         const TrainConfig& config) {
        return mfng_diag_iteration(model, batch, pool, config);
      },
      py::arg("model"), py::arg("batch"), py::arg("pool"), py::arg("config"));
  m.def(
      "sml_iteration",
      [](const DbmModel& model, const Eigen::MatrixXd& batch, ChainPool& pool,
         const TrainConfig& config) {
        return sml_iteration(model, batch, pool, config);
      },
      py::arg("model"), py::arg("batch"), py::arg("pool"), py::arg("config"));
  m.def(
      "train",
      [](DbmModel& model, const Eigen::MatrixXd& data, const TrainConfig& config,
         ChainPool& pool) {
        train(model, data, config, pool);
        return model.params();
      },
      py::arg("model"), py::arg("data"), py::arg("config"), py::arg("pool"));

  m.def("binarize", &binarize, py::arg("values"), py::arg("threshold") = 0.5);
  m.def("bars_stripes_patterns", &bars_stripes_patterns);
  m.def("bars_stripes_dataset", &bars_stripes_dataset);
  m.def("random_bernoulli_dataset", &random_bernoulli_dataset);
  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", &load_checkpoint);

  m.def(
      "run_experiment",
      [](const std::string& config_json, bool resume) {
        return run_experiment(
            parse_experiment_config(nlohmann::json::parse(config_json)), resume);
      },
      py::arg("config_json"), py::arg("resume") = false);
}
