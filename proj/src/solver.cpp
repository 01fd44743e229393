#include "mfng/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfng {

namespace {

constexpr double kTiny = 1e-300;

bool finite(double v) { return std::isfinite(v); }

SolveResult minres_core(const LinearOperator& op, const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& x0, const SolverConfig& config) {
  const int n = op.dimension;
  SolveResult res;
  res.x = x0;

  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    res.termination = Termination::kConverged;
    return res;
  }

  Eigen::VectorXd r1 = rhs - op.apply(x0);
  double beta1 = r1.norm();
  if (!finite(beta1)) {
    res.termination = Termination::kBreakdown;
    return res;
  }
  if (beta1 / bnorm <= config.tolerance) {
    res.termination = Termination::kConverged;
    return res;
  }

  Eigen::VectorXd y = r1;
  Eigen::VectorXd r2 = r1;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(n);

  res.termination = Termination::kMaxIterations;
  while (res.iterations < config.max_iterations) {
    if (beta < kTiny) {
      // Krylov space exhausted; the current iterate is final.
      res.termination = phibar / bnorm <= config.tolerance
                            ? Termination::kConverged
                            : Termination::kBreakdown;
      break;
    }
    ++res.iterations;
    const Eigen::VectorXd v = y / beta;
    y = op.apply(v);
    if (res.iterations >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = r2.norm();

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::sqrt(gbar * gbar + beta * beta);
    gamma = std::max(gamma, kTiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    const Eigen::VectorXd w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    res.x += phi * w;

    if (!finite(phibar) || !finite(beta) || !res.x.allFinite()) {
      res.termination = Termination::kBreakdown;
      break;
    }
    res.residual_history.push_back(phibar);
    if (phibar / bnorm <= config.tolerance) {
      res.termination = Termination::kConverged;
      break;
    }
  }
  return res;
}

template <typename Solver>
SolveResult with_jacobi(Solver&& solve, const LinearOperator& op,
                        const Eigen::VectorXd& rhs, const Eigen::VectorXd& x0,
                        const SolverConfig& config) {
  if (config.jacobi_diagonal.size() == 0) return solve(op, rhs, x0, config);
  if (config.jacobi_diagonal.size() != op.dimension)
    throw std::invalid_argument("preconditioner diagonal size mismatch");
  if ((config.jacobi_diagonal.array() <= 0.0).any())
    throw std::invalid_argument("Jacobi diagonal must be positive");
  const Eigen::VectorXd half = config.jacobi_diagonal.cwiseSqrt();
  const Eigen::VectorXd inv_half = half.cwiseInverse();
  LinearOperator scaled;
  scaled.dimension = op.dimension;
  scaled.apply = [&op, &inv_half](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return inv_half.cwiseProduct(op.apply(inv_half.cwiseProduct(z)));
  };
  SolverConfig inner = config;
  inner.jacobi_diagonal = Eigen::VectorXd();
  SolveResult res = solve(scaled, inv_half.cwiseProduct(rhs),
                          half.cwiseProduct(x0), inner);
  res.x = inv_half.cwiseProduct(res.x);
  return res;
}

void recompute_residual(const LinearOperator& op, const Eigen::VectorXd& rhs,
                        SolveResult& res) {
  const double bnorm = rhs.norm();
  if (bnorm == 0.0 || !res.x.allFinite()) {
    res.final_relative_residual = 0.0;
    return;
  }
  res.final_relative_residual = (op.apply(res.x) - rhs).norm() / bnorm;
}

SolveResult cg_core(const LinearOperator& op, const Eigen::VectorXd& rhs,
                    const Eigen::VectorXd& x0, const SolverConfig& config) {
  SolveResult res;
  res.x = x0;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return res;

  Eigen::VectorXd r = rhs - op.apply(x0);
  double rs = r.squaredNorm();
  if (std::sqrt(rs) / bnorm <= config.tolerance) return res;
  Eigen::VectorXd p = r;

  res.termination = Termination::kMaxIterations;
  while (res.iterations < config.max_iterations) {
    ++res.iterations;
    const Eigen::VectorXd ap = op.apply(p);
    const double pap = p.dot(ap);
    if (!finite(pap) || pap <= 0.0) {
      res.termination = Termination::kBreakdown;
      break;
    }
    const double step = rs / pap;
    res.x += step * p;
    r -= step * ap;
    const double rs_new = r.squaredNorm();
    res.residual_history.push_back(std::sqrt(rs_new));
    if (!finite(rs_new) || !res.x.allFinite()) {
      res.termination = Termination::kBreakdown;
      break;
    }
    if (std::sqrt(rs_new) / bnorm <= config.tolerance) {
      res.termination = Termination::kConverged;
      break;
    }
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return res;
}

}  // namespace

SolveResult minres(const LinearOperator& op, const Eigen::VectorXd& rhs,
                   const Eigen::VectorXd& x0, const SolverConfig& config) {
  if (rhs.size() != op.dimension || x0.size() != op.dimension)
    throw std::invalid_argument("vector size mismatch");
  if (config.tolerance <= 0.0 || config.max_iterations < 1)
    throw std::invalid_argument("invalid solver configuration");
  SolveResult res = with_jacobi(minres_core, op, rhs, x0, config);
  recompute_residual(op, rhs, res);
  return res;
}

SolveResult cg(const LinearOperator& op, const Eigen::VectorXd& rhs,
               const Eigen::VectorXd& x0, const SolverConfig& config) {
  if (rhs.size() != op.dimension || x0.size() != op.dimension)
    throw std::invalid_argument("vector size mismatch");
  if (config.tolerance <= 0.0 || config.max_iterations < 1)
    throw std::invalid_argument("invalid solver configuration");
  SolveResult res = with_jacobi(cg_core, op, rhs, x0, config);
  recompute_residual(op, rhs, res);
  return res;
}

}  // namespace mfng
