#include "mfng/eval.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfng/rng.hpp"

namespace mfng {

namespace {

constexpr double kLog2 = 0.6931471805599453;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Streaming log-sum-exp with Kahan compensation; rescales on a new maximum.
class LogSumExp {
 public:
  void add(double v) {
    if (v > mx_) {
      const double scale = std::exp(mx_ - v);
      sum_ *= scale;
      comp_ *= scale;
      mx_ = v;
    }
    const double term = std::exp(v - mx_) - comp_;
    const double t = sum_ + term;
    comp_ = (t - sum_) - term;
    sum_ = t;
  }
  double value() const { return mx_ + std::log(sum_); }

 private:
  double mx_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct PairwiseView {
  Eigen::MatrixXd W;
  Eigen::VectorXd b, c;
};

PairwiseView view_of(const EnergyModel& m) {
  return {m.coupling(), m.unit_bias(), m.unit_offset()};
}

// Visits every configuration of the `free_idx` units (others held at their
// value in x) in Gray-code order, with O(n) incremental energy updates.
template <class Visitor>
void gray_enumerate(const PairwiseView& pv, Eigen::VectorXd x,
                    const std::vector<int>& free_idx, Visitor&& visit) {
  Eigen::VectorXd y = x - pv.c;
  Eigen::VectorXd f = pv.W * y;
  double energy = -0.5 * y.dot(f) - pv.b.dot(y);
  visit(x, energy);
  const std::uint64_t total = std::uint64_t{1} << free_idx.size();
  for (std::uint64_t i = 1; i < total; ++i) {
    const int j = free_idx[std::countr_zero(i)];
    const double dy = x[j] == 0.0 ? 1.0 : -1.0;
    energy -= dy * (f[j] + pv.b[j]);
    f += dy * pv.W.col(j);
    x[j] += dy;
    visit(x, energy);
  }
}

std::vector<int> iota_range(int begin, int end) {
  std::vector<int> idx;
  for (int i = begin; i < end; ++i) idx.push_back(i);
  return idx;
}

void check_cap(int free_units, int cap, const char* what) {
  if (free_units > cap)
    throw std::invalid_argument(std::string(what) +
                                ": unit count exceeds the enumeration cap");
}

double log_z_over(const PairwiseView& pv, Eigen::VectorXd x0,
                  const std::vector<int>& free_idx) {
  LogSumExp lse;
  gray_enumerate(pv, std::move(x0), free_idx,
                 [&](const Eigen::VectorXd&, double e) { lse.add(-e); });
  return lse.value();
}

}  // namespace

double exact_log_z(const EnergyModel& model) {
  const int n = model.num_units();
  check_cap(n, kEnumerationCap, "exact_log_z");
  return log_z_over(view_of(model), Eigen::VectorXd::Zero(n), iota_range(0, n));
}

double exact_log_z_clamped(const EnergyModel& model,
                           const Eigen::VectorXd& visible) {
  const int n = model.num_units();
  const int nv = static_cast<int>(visible.size());
  if (nv > n) throw std::invalid_argument("visible vector too long");
  check_cap(n - nv, kEnumerationCap, "exact_log_z_clamped");
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  x0.head(nv) = visible;
  return log_z_over(view_of(model), std::move(x0), iota_range(nv, n));
}

double exact_loglik(const EnergyModel& model, const Eigen::MatrixXd& visible) {
  if (visible.rows() == 0) throw std::invalid_argument("empty dataset");
  const double log_z = exact_log_z(model);
  double total = 0.0;
  for (int r = 0; r < visible.rows(); ++r)
    total += exact_log_z_clamped(model, visible.row(r).transpose()) - log_z;
  return total / static_cast<double>(visible.rows());
}

std::pair<std::vector<Eigen::VectorXd>, Eigen::VectorXd> enumerate_joint(
    const EnergyModel& model) {
  const int n = model.num_units();
  check_cap(n, kStateListCap, "enumerate_joint");
  const PairwiseView pv = view_of(model);
  const auto free_idx = iota_range(0, n);
  std::vector<Eigen::VectorXd> states;
  std::vector<double> energies;
  LogSumExp lse;
  gray_enumerate(pv, Eigen::VectorXd::Zero(n), free_idx,
                 [&](const Eigen::VectorXd& x, double e) {
                   states.push_back(x);
                   energies.push_back(e);
                   lse.add(-e);
                 });
  const double log_z = lse.value();
  Eigen::VectorXd probs(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    probs[i] = std::exp(-energies[i] - log_z);
  return {std::move(states), std::move(probs)};
}

std::pair<std::vector<Eigen::VectorXd>, Eigen::VectorXd> enumerate_clamped(
    const EnergyModel& model, const Eigen::VectorXd& visible) {
  const int n = model.num_units();
  const int nv = static_cast<int>(visible.size());
  check_cap(n - nv, kStateListCap, "enumerate_clamped");
  const PairwiseView pv = view_of(model);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  x0.head(nv) = visible;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> energies;
  LogSumExp lse;
  gray_enumerate(pv, std::move(x0), iota_range(nv, n),
                 [&](const Eigen::VectorXd& x, double e) {
                   states.push_back(x);
                   energies.push_back(e);
                   lse.add(-e);
                 });
  const double log_z = lse.value();
  Eigen::VectorXd probs(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    probs[i] = std::exp(-energies[i] - log_z);
  return {std::move(states), std::move(probs)};
}

namespace {

Eigen::VectorXd expected_energy_grad(const EnergyModel& model) {
  auto [states, probs] = enumerate_joint(model);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.num_params());
  for (std::size_t i = 0; i < states.size(); ++i)
    mean += probs[i] * model.energy_grad(states[i]);
  return mean;
}

Eigen::MatrixXd fim_covariance(const EnergyModel& model) {
  auto [states, probs] = enumerate_joint(model);
  const int N = model.num_params();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(N);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Eigen::VectorXd g = model.energy_grad(states[i]);
    mean += probs[i] * g;
    second.selfadjointView<Eigen::Lower>().rankUpdate(g, probs[i]);
  }
  Eigen::MatrixXd cov =
      Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>()) -
      mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd fim_score_outer(const EnergyModel& model) {
  auto [states, probs] = enumerate_joint(model);
  const int N = model.num_params();
  Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(N);
  for (std::size_t i = 0; i < states.size(); ++i)
    mean_grad += probs[i] * model.energy_grad(states[i]);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < states.size(); ++i) {
    // score = d log p / d theta = -dE/dtheta + E_p[dE/dtheta]
    const Eigen::VectorXd score = mean_grad - model.energy_grad(states[i]);
    outer.selfadjointView<Eigen::Lower>().rankUpdate(score, probs[i]);
  }
  return Eigen::MatrixXd(outer.selfadjointView<Eigen::Lower>());
}

Eigen::MatrixXd fim_hessian_log_z(const EnergyModel& model, double h) {
  const int N = model.num_params();
  const Eigen::VectorXd theta = model.params();
  std::unique_ptr<EnergyModel> work = model.clone();
  auto log_z_at = [&](const Eigen::VectorXd& t) {
    work->set_params(t);
    return exact_log_z(*work);
  };
  const double f0 = log_z_at(theta);
  Eigen::MatrixXd hess(N, N);
  Eigen::VectorXd t = theta;
  for (int i = 0; i < N; ++i) {
    t = theta;
    t[i] = theta[i] + h;
    const double fp = log_z_at(t);
    t[i] = theta[i] - h;
    const double fm = log_z_at(t);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int j = i + 1; j < N; ++j) {
      t = theta;
      t[i] = theta[i] + h;
      t[j] = theta[j] + h;
      const double fpp = log_z_at(t);
      t[j] = theta[j] - h;
      const double fpm = log_z_at(t);
      t[i] = theta[i] - h;
      const double fmm = log_z_at(t);
      t[j] = theta[j] + h;
      const double fmp = log_z_at(t);
      hess(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return hess;
}

}  // namespace

Eigen::MatrixXd exact_fim(const EnergyModel& model, FimForm form, double fd_step) {
  switch (form) {
    case FimForm::kCovariance:
      return fim_covariance(model);
    case FimForm::kScoreOuter:
      return fim_score_outer(model);
    case FimForm::kHessianLogZ:
      return fim_hessian_log_z(model, fd_step);
  }
  throw std::invalid_argument("unknown FIM form");
}

Eigen::VectorXd exact_nll_gradient(const EnergyModel& model,
                                   const Eigen::MatrixXd& visible) {
  if (visible.rows() == 0) throw std::invalid_argument("empty dataset");
  Eigen::VectorXd positive = Eigen::VectorXd::Zero(model.num_params());
  for (int r = 0; r < visible.rows(); ++r) {
    auto [states, probs] = enumerate_clamped(model, visible.row(r).transpose());
    for (std::size_t i = 0; i < states.size(); ++i)
      positive += probs[i] * model.energy_grad(states[i]);
  }
  positive /= static_cast<double>(visible.rows());
  return positive - expected_energy_grad(model);
}

Eigen::VectorXd exact_natural_gradient(const EnergyModel& model,
                                       const Eigen::MatrixXd& visible,
                                       double alpha) {
  const Eigen::VectorXd g = exact_nll_gradient(model, visible);
  Eigen::MatrixXd metric = fim_covariance(model);
  if (alpha > 0.0) {
    metric.diagonal().array() += alpha;
    return metric.ldlt().solve(g);
  }
  return metric.completeOrthogonalDecomposition().solve(g);
}

Eigen::VectorXd base_rate_biases(const Eigen::MatrixXd& data, double clip) {
  Eigen::VectorXd means = data.colwise().mean();
  Eigen::VectorXd b(means.size());
  for (int i = 0; i < means.size(); ++i) {
    const double m = means[i];
    if (m <= 0.0)
      b[i] = -clip;
    else if (m >= 1.0)
      b[i] = clip;
    else
      b[i] = std::clamp(std::log(m / (1.0 - m)), -clip, clip);
  }
  return b;
}

Eigen::VectorXd linear_betas(int count) {
  if (count < 2) throw std::invalid_argument("need at least two betas");
  return Eigen::VectorXd::LinSpaced(count, 0.0, 1.0);
}

namespace {

// Unnormalized log probability of the even-layer configuration under the
// interpolated distribution, odd layers summed out analytically.
double log_pstar_even(const DbmModel& m, const Eigen::VectorXd& base_bias,
                      double beta, const JointState& state,
                      const std::vector<Eigen::VectorXd>& centered) {
  const int K = m.num_layers() - 1;
  double val = (1.0 - beta) * base_bias.dot(state[0]);
  for (int l = 0; l <= K; l += 2) val += beta * m.bias(l).dot(centered[l]);
  for (int l = 1; l <= K; l += 2) {
    Eigen::VectorXd phi = m.bias(l);
    phi += m.weight(l).transpose() * centered[l - 1];
    if (l < K) phi += m.weight(l + 1) * centered[l + 1];
    auto off = m.offset(l);
    for (int i = 0; i < phi.size(); ++i)
      val += -beta * off[i] * phi[i] + softplus(beta * phi[i]);
  }
  return val;
}

void ais_sweep(const DbmModel& m, const Eigen::VectorXd& base_bias, double beta,
               JointState& state, std::vector<Eigen::VectorXd>& centered,
               PhiloxRng& rng) {
  const int K = m.num_layers() - 1;
  auto sample = [&](int l, const Eigen::VectorXd& field) {
    auto off = m.offset(l);
    for (int i = 0; i < field.size(); ++i) {
      state[l][i] = rng.bernoulli(sigmoid(field[i])) ? 1.0 : 0.0;
      centered[l][i] = state[l][i] - off[i];
    }
  };
  for (int parity = 1; parity >= 0; --parity) {
    for (int l = parity; l <= K; l += 2) {
      Eigen::VectorXd field = m.bias(l);
      if (l >= 1) field += m.weight(l).transpose() * centered[l - 1];
      if (l < K) field += m.weight(l + 1) * centered[l + 1];
      field *= beta;
      if (l == 0) field += (1.0 - beta) * base_bias;
      sample(l, field);
    }
  }
}

}  // namespace

AisResult ais_log_z(const DbmModel& model,
                    const Eigen::VectorXd& base_visible_bias,
                    const AisConfig& config) {
  const int K = model.num_layers() - 1;
  if (K < 1) throw std::invalid_argument("AIS needs at least one hidden layer");
  if (base_visible_bias.size() != model.layer_sizes()[0])
    throw std::invalid_argument("base bias size mismatch");
  const Eigen::VectorXd& betas = config.betas;
  if (betas.size() < 2 || betas[0] != 0.0 || betas[betas.size() - 1] != 1.0)
    throw std::invalid_argument("betas must run from 0 to 1");
  for (int i = 1; i < betas.size(); ++i)
    if (betas[i] <= betas[i - 1])
      throw std::invalid_argument("betas must be strictly increasing");
  if (config.n_particles < 1)
    throw std::invalid_argument("need at least one particle");

  // log Z of the base-rate model; hidden units are unbiased.
  double log_z_a = 0.0;
  for (int i = 0; i < base_visible_bias.size(); ++i)
    log_z_a += softplus(base_visible_bias[i]);
  log_z_a += kLog2 * (model.num_units() - model.layer_sizes()[0]);

  Eigen::VectorXd log_weights(config.n_particles);
  for (int p = 0; p < config.n_particles; ++p) {
    PhiloxRng rng(config.seed, static_cast<std::uint64_t>(p));
    JointState state;
    std::vector<Eigen::VectorXd> centered;
    for (int l = 0; l <= K; ++l) {
      Eigen::VectorXd s(model.layer_sizes()[l]);
      for (int i = 0; i < s.size(); ++i) {
        const double prob = l == 0 ? sigmoid(base_visible_bias[i]) : 0.5;
        s[i] = rng.bernoulli(prob) ? 1.0 : 0.0;
      }
      centered.push_back(s - model.offset(l));
      state.push_back(std::move(s));
    }

    double logw = 0.0;
    double prev = log_pstar_even(model, base_visible_bias, betas[0], state, centered);
    for (int t = 1; t < betas.size(); ++t) {
      const double cur =
          log_pstar_even(model, base_visible_bias, betas[t], state, centered);
      logw += cur - prev;
      ais_sweep(model, base_visible_bias, betas[t], state, centered, rng);
      prev = log_pstar_even(model, base_visible_bias, betas[t], state, centered);
    }
    if (!std::isfinite(logw))
      throw std::runtime_error("non-finite AIS weight at particle " +
                               std::to_string(p));
    log_weights[p] = logw;
  }

  LogSumExp lse;
  for (int p = 0; p < config.n_particles; ++p) lse.add(log_weights[p]);
  AisResult out;
  out.log_z = log_z_a + lse.value() - std::log(double(config.n_particles));
  const double mean = log_weights.mean();
  out.log_weight_variance =
      (log_weights.array() - mean).square().sum() /
      std::max(1, config.n_particles - 1);
  out.log_weights = std::move(log_weights);
  return out;
}

}  // namespace mfng
