#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace mfng {

// Abstract symmetric linear map y -> A y.
struct LinearOperator {
  int dimension = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
};

enum class Termination { kConverged, kMaxIterations, kBreakdown };

struct SolveResult {
  Eigen::VectorXd x;
  int iterations = 0;
  // ||A x - b|| / ||b||, recomputed with one extra operator application.
  double final_relative_residual = 0.0;
  Termination termination = Termination::kConverged;
  // Internal residual-norm estimate after each iteration.
  std::vector<double> residual_history;
};

struct SolverConfig {
  double tolerance = 1e-5;
  int max_iterations = 200;
  // Empty: no preconditioning. Otherwise the diagonal of A for Jacobi.
  Eigen::VectorXd jacobi_diagonal;
  bool warm_start = false;
};

// MinRes (Paige & Saunders) for symmetric, possibly indefinite or singular
// operators. From x0 = 0 on a consistent singular system it converges to the
// minimum-norm solution. Never throws on numerical trouble; reports
// breakdown instead.
SolveResult minres(const LinearOperator& op, const Eigen::VectorXd& rhs,
                   const Eigen::VectorXd& x0, const SolverConfig& config);

// Conjugate gradient for SPD operators. Non-positive curvature is reported
// as breakdown with the best iterate so far.
SolveResult cg(const LinearOperator& op, const Eigen::VectorXd& rhs,
               const Eigen::VectorXd& x0, const SolverConfig& config);

}  // namespace mfng
