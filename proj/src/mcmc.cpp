#include "mars/mcmc.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace mars {

void SamplerConfig::validate() const {
  if (n_chains < 1)
    throw ConfigError("n_chains must be >= 1");
  if (thin < 1)
    throw ConfigError("thin must be >= 1");
  if (n_burnin < 0 || n_burnin >= n_iter)
    throw ConfigError("n_burnin must satisfy 0 <= n_burnin < n_iter");
  if (retained_per_chain() < 1)
    throw ConfigError("no draws retained after burn-in and thinning");
  if (adapt_window < 1)
    throw ConfigError("adapt_window must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw ConfigError("target_accept must lie in (0, 1)");
}

Eigen::Index PosteriorDraws::column(const std::string &name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ConfigError("unknown parameter '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

std::vector<Eigen::VectorXd> PosteriorDraws::chains_of(Eigen::Index col) const {
  std::vector<Eigen::VectorXd> out;
  for (int c = 0; c < n_chains; ++c)
    out.emplace_back(values.col(col).segment(
        static_cast<Eigen::Index>(c) * draws_per_chain, draws_per_chain));
  return out;
}

std::vector<std::string> parameter_names(const ModelData &data) {
  std::vector<std::string> names;
  const auto J = data.intervals();
  for (Eigen::Index j = 1; j <= J; ++j)
    names.push_back("beta[" + std::to_string(j) + "]");
  for (Eigen::Index j = 1; j <= J; ++j)
    names.push_back("log_lambda[" + std::to_string(j) + "]");
  for (const auto &id : data.alpha_ids)
    names.push_back("alpha[" + id + "]");
  for (const auto &id : data.mu_ids)
    names.push_back("mu[" + id + "]");
  for (const char *n : {"mu_beta", "mu_lambda", "mu_alpha", "mu_0",
                        "sigma2_beta", "sigma2_lambda", "sigma2_alpha",
                        "sigma2_mu", "rho_beta", "rho_lambda"})
    names.emplace_back(n);
  return names;
}

Eigen::VectorXd flatten(const ModelParameters &p) {
  const Eigen::Index J = p.beta.size();
  Eigen::VectorXd out(2 * J + p.alpha.size() + p.mu.size() + 10);
  const Hyperparameters &h = p.hypers;
  out << p.beta, p.log_lambda, p.alpha, p.mu, h.mu_beta, h.mu_lambda,
      h.mu_alpha, h.mu_0, h.sigma2_beta, h.sigma2_lambda, h.sigma2_alpha,
      h.sigma2_mu, h.rho_beta, h.rho_lambda;
  return out;
}

ModelParameters unflatten(const Eigen::Ref<const Eigen::VectorXd> &row,
                          Eigen::Index J, Eigen::Index n_alpha,
                          Eigen::Index n_mu) {
  if (row.size() != 2 * J + n_alpha + n_mu + 10)
    throw ConfigError("parameter row has the wrong length");
  ModelParameters p;
  Eigen::Index at = 0;
  p.beta = row.segment(at, J);
  at += J;
  p.log_lambda = row.segment(at, J);
  at += J;
  p.alpha = row.segment(at, n_alpha);
  at += n_alpha;
  p.mu = row.segment(at, n_mu);
  at += n_mu;
  Hyperparameters &h = p.hypers;
  for (double *dst : {&h.mu_beta, &h.mu_lambda, &h.mu_alpha, &h.mu_0,
                      &h.sigma2_beta, &h.sigma2_lambda, &h.sigma2_alpha,
                      &h.sigma2_mu, &h.rho_beta, &h.rho_lambda})
    *dst = row[at++];
  return p;
}

double log_posterior(const ModelData &data, const ModelParameters &p,
                     const HyperpriorConstants &c) {
  return total_loglik(data, p) + log_prior(p) + log_hyperprior(p.hypers, c);
}

std::uint64_t chain_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr int kRhoRepeats = 5;

// Engine plus the normal distribution's cached state; one per chain.
struct Rng {
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  std::mt19937_64 engine;
  std::normal_distribution<double> normal;
};

double uniform01(Rng &rng) {
  return std::generate_canonical<double, 53>(rng.engine);
}

double std_normal(Rng &rng) { return rng.normal(rng.engine); }

bool accept(double log_ratio, Rng &rng) {
  if (!std::isfinite(log_ratio))
    return log_ratio > 0.0;
  return log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
}

// Robbins-Monro tuned scalar random-walk step.
struct ScalarTuner {
  double log_step = std::log(0.1);
  double target = 0.44;
  int accepted = 0;
  int proposed = 0;
  int window_accepted = 0;
  int window_proposed = 0;
  int windows = 0;

  double step() const { return std::exp(log_step); }
  void record(bool ok) {
    ++proposed;
    ++window_proposed;
    if (ok) {
      ++accepted;
      ++window_accepted;
    }
  }
  void adapt() {
    if (window_proposed == 0)
      return;
    const double rate = static_cast<double>(window_accepted) / window_proposed;
    log_step += 1.5 * (rate - target) / std::sqrt(1.0 + windows);
    ++windows;
    window_accepted = window_proposed = 0;
  }
  void reset_counts() { accepted = proposed = window_accepted = window_proposed = 0; }
  double rate() const {
    return proposed ? static_cast<double>(accepted) / proposed : 0.0;
  }
};

// Adaptive-covariance random walk for a vector block.
struct BlockTuner {
  ScalarTuner scale;
  Eigen::MatrixXd chol;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;
  long samples = 0;

  BlockTuner(const Eigen::VectorXd &initial_sd, double target) {
    const auto d = initial_sd.size();
    chol = initial_sd.asDiagonal();
    mean = Eigen::VectorXd::Zero(d);
    scatter = Eigen::MatrixXd::Zero(d, d);
    scale.log_step = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    scale.target = target;
  }

  Eigen::VectorXd propose(const Eigen::VectorXd &x, Rng &rng) const {
    Eigen::VectorXd z(x.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] = std_normal(rng);
    return x + scale.step() * (chol * z);
  }

  void observe(const Eigen::VectorXd &x) {
    ++samples;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(samples);
    scatter += delta * (x - mean).transpose();
  }

  void adapt() {
    scale.adapt();
    const auto d = mean.size();
    if (samples < 2 * d + 10)
      return;
    Eigen::MatrixXd cov = scatter / static_cast<double>(samples - 1);
    const double ridge = 1e-8 + 1e-6 * cov.diagonal().mean();
    cov.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success)
      chol = llt.matrixL();
  }
};

double rho_from_unconstrained(double z, double bound) {
  return bound * std::tanh(z);
}
double unconstrained_from_rho(double rho, double bound) {
  return std::atanh(rho / bound);
}
// log |d rho / d z|
double rho_log_jacobian(double z, double bound) {
  const double t = std::tanh(z);
  return std::log(bound) + std::log1p(-t * t);
}

// logit(exp(-H)) without cancellation.
double logit_survival(double H) { return -H - std::log(-std::expm1(-H)); }

class ChainSampler {
public:
  ChainSampler(const ModelData &data, const SamplerConfig &config,
               std::uint64_t seed)
      : data_(data), cfg_(config), rng_(seed), J_(data.intervals()),
        n_alpha_(static_cast<Eigen::Index>(data.alpha_ids.size())),
        n_mu_(static_cast<Eigen::Index>(data.mu_ids.size())),
        beta_tuner_(Eigen::VectorXd::Constant(J_, 0.1), config.target_accept),
        eta_tuner_(Eigen::VectorXd::Constant(J_, 0.1), config.target_accept) {
    pooled_events_ = Eigen::ArrayXXd::Zero(J_, 2);
    for (const auto &s : data_.type1)
      pooled_events_ += s.cells.events;
    type1_by_alpha_.resize(n_alpha_);
    type1_by_mu_.resize(n_mu_);
    type2_by_mu_.resize(n_mu_);
    type3_by_alpha_.resize(n_alpha_);
    type3_by_mu_.resize(n_mu_);
    for (std::size_t i = 0; i < data_.type1.size(); ++i) {
      type1_by_alpha_[data_.type1[i].alpha].push_back(i);
      if (data_.type1[i].mu >= 0)
        type1_by_mu_[data_.type1[i].mu].push_back(i);
    }
    for (std::size_t i = 0; i < data_.type2.size(); ++i)
      type2_by_mu_[data_.type2[i].mu].push_back(i);
    for (std::size_t i = 0; i < data_.type3.size(); ++i) {
      type3_by_alpha_[data_.type3[i].alpha].push_back(i);
      if (data_.type3[i].mu >= 0)
        type3_by_mu_[data_.type3[i].mu].push_back(i);
    }
    alpha_tuners_.resize(n_alpha_);
    mu_tuners_.resize(n_mu_);
    initial_proposal_scales();
  }

  void initialize() {
    const auto &fx = cfg_.fixed;
    Eigen::ArrayXd events = Eigen::ArrayXd::Zero(J_);
    Eigen::ArrayXd exposure = Eigen::ArrayXd::Zero(J_);
    for (const auto &s : data_.type1) {
      events += s.cells.events.rowwise().sum();
      exposure += s.cells.exposure.rowwise().sum();
    }
    Eigen::VectorXd crude(J_);
    for (Eigen::Index j = 0; j < J_; ++j)
      crude[j] = exposure[j] > 0.0 ? std::log((events[j] + 0.5) / exposure[j])
                                   : std::log(0.01);

    for (int attempt = 0; attempt <= 100; ++attempt) {
      const double jitter = attempt == 0 ? 0.1 : 0.1 * (1.0 + attempt);
      p_.log_lambda = crude;
      for (Eigen::Index j = 0; j < J_; ++j)
        p_.log_lambda[j] += jitter * std_normal(rng_);
      p_.beta = Eigen::VectorXd::Zero(J_);
      p_.alpha = Eigen::VectorXd::Zero(n_alpha_);
      p_.mu = Eigen::VectorXd::Zero(n_mu_);
      Hyperparameters &h = p_.hypers;
      h = Hyperparameters{};
      h.mu_beta = fx.mu_beta.value_or(0.0);
      h.mu_lambda = fx.mu_lambda.value_or(0.0);
      h.sigma2_beta = fx.sigma2_beta.value_or(1.0);
      h.sigma2_lambda = fx.sigma2_lambda.value_or(1.0);
      h.sigma2_alpha = fx.sigma2_alpha.value_or(1.0);
      h.sigma2_mu = fx.sigma2_mu.value_or(1.0);
      h.rho_beta = fx.rho_beta.value_or(0.0);
      h.rho_lambda = fx.rho_lambda.value_or(0.0);
      z_rho_beta_ = unconstrained_from_rho(h.rho_beta, bound());
      z_rho_lambda_ = unconstrained_from_rho(h.rho_lambda, bound());
      if (std::isfinite(log_posterior(data_, p_, cfg_.constants)))
        return;
    }
    throw InitializationError(
        "log posterior not finite at initialization after 100 jittered restarts");
  }

  // One full sweep; `adapting` enables proposal tuning.
  void iterate(bool adapting) {
    refresh_pooled_exposure();
    update_newton_block();
    update_beta_block();
    update_eta_block();
    if (!cfg_.fixed.sigma2_beta)
      rescale_beta();
    if (!cfg_.fixed.sigma2_lambda)
      rescale_eta();
    if (cfg_.study_effects) {
      for (Eigen::Index a = 0; a < n_alpha_; ++a)
        update_alpha(a);
      for (Eigen::Index m = 0; m < n_mu_; ++m)
        update_mu(m);
      if (n_alpha_ > 0 && !cfg_.fixed.sigma2_alpha)
        rescale_alpha();
      if (n_mu_ > 0 && !cfg_.fixed.sigma2_mu)
        rescale_mu();
      if (n_mu_ > 0)
        translate_beta_mu();
      if (n_alpha_ > 0)
        translate_eta_alpha();
    }
    gibbs_hyperparameters();
    for (int r = 0; r < kRhoRepeats; ++r) {
      update_rho(true);
      update_rho(false);
    }

    ++iteration_;
    if (adapting) {
      beta_tuner_.observe(p_.beta);
      eta_tuner_.observe(p_.log_lambda);
      if (iteration_ % cfg_.adapt_window == 0)
        adapt_all();
    }
  }

  void freeze() {
    for (ScalarTuner *t : all_scalar_tuners())
      t->reset_counts();
    beta_tuner_.scale.reset_counts();
    eta_tuner_.scale.reset_counts();
    newton_tuner_.reset_counts();
  }

  const ModelParameters &state() const { return p_; }

  std::map<std::string, double> acceptance() const {
    std::map<std::string, double> out;
    out["newton_block"] = newton_tuner_.rate();
    out["beta_block"] = beta_tuner_.scale.rate();
    out["log_lambda_block"] = eta_tuner_.scale.rate();
    auto mean_rate = [](const std::vector<ScalarTuner> &ts) {
      double sum = 0.0;
      for (const auto &t : ts)
        sum += t.rate();
      return ts.empty() ? 0.0 : sum / static_cast<double>(ts.size());
    };
    if (cfg_.study_effects) {
      if (n_alpha_ > 0)
        out["alpha"] = mean_rate(alpha_tuners_);
      if (n_mu_ > 0)
        out["mu"] = mean_rate(mu_tuners_);
    }
    if (!cfg_.fixed.rho_beta)
      out["rho_beta"] = rho_beta_tuner_.rate();
    if (!cfg_.fixed.rho_lambda)
      out["rho_lambda"] = rho_lambda_tuner_.rate();
    return out;
  }

private:
  double bound() const { return cfg_.constants.rho_bound; }

  std::vector<ScalarTuner *> all_scalar_tuners() {
    std::vector<ScalarTuner *> out{&rescale_beta_tuner_, &rescale_eta_tuner_,
                                   &rescale_alpha_tuner_, &rescale_mu_tuner_,
                                   &shift_beta_tuner_,    &shift_eta_tuner_,
                                   &rho_beta_tuner_,      &rho_lambda_tuner_};
    for (auto &t : alpha_tuners_)
      out.push_back(&t);
    for (auto &t : mu_tuners_)
      out.push_back(&t);
    return out;
  }

  void adapt_all() {
    beta_tuner_.adapt();
    eta_tuner_.adapt();
    for (ScalarTuner *t : all_scalar_tuners())
      t->adapt();
  }

  void initial_proposal_scales() {
    Eigen::ArrayXXd events = pooled_events_;
    Eigen::VectorXd beta_sd(J_), eta_sd(J_);
    for (Eigen::Index j = 0; j < J_; ++j) {
      beta_sd[j] = std::min(
          0.5, std::sqrt(1.0 / (events(j, 0) + 1.0) + 1.0 / (events(j, 1) + 1.0)));
      eta_sd[j] = std::min(0.5, std::sqrt(1.0 / (events(j, 0) + events(j, 1) + 1.0)));
    }
    beta_tuner_ = BlockTuner(beta_sd, cfg_.target_accept);
    eta_tuner_ = BlockTuner(eta_sd, cfg_.target_accept);
  }

  double effect_alpha(int idx) const { return idx >= 0 ? p_.alpha[idx] : 0.0; }
  double effect_mu(int idx) const { return idx >= 0 ? p_.mu[idx] : 0.0; }

  // sum_k e_kjx exp(alpha_k + mu_k x) over type I studies.
  void refresh_pooled_exposure() {
    pooled_exposure_ = Eigen::ArrayXXd::Zero(J_, 2);
    for (const auto &s : data_.type1) {
      const double a = effect_alpha(s.alpha);
      const double m = effect_mu(s.mu);
      pooled_exposure_.col(0) += s.cells.exposure.col(0) * std::exp(a);
      pooled_exposure_.col(1) += s.cells.exposure.col(1) * std::exp(a + m);
    }
  }

  double type2_loglik(const ModelData::TypeTwo &s, const Eigen::VectorXd &beta,
                      double mu) const {
    const double mean = mu + s.weights.dot(beta);
    const double z = s.record.theta_hat - mean;
    return -0.5 * z * z / (s.record.se * s.record.se);
  }

  double type3_loglik(const ModelData::TypeThree &s, const Eigen::VectorXd &eta,
                      const Eigen::VectorXd &beta, double alpha, double mu) const {
    const int x = arm_value(s.record.arm);
    const double H =
        (s.exposure.array() * (eta.array() + alpha + (mu + beta.array()) * x).exp())
            .sum();
    const double z = s.logit_observed - logit_survival(H);
    return -0.5 * z * z / s.variance;
  }

  double type1_loglik(const ModelData::TypeOne &s, const Eigen::VectorXd &eta,
                      const Eigen::VectorXd &beta, double alpha, double mu) const {
    double total = 0.0;
    for (Eigen::Index j = 0; j < J_; ++j) {
      for (int x = 0; x < 2; ++x) {
        const double e = s.cells.exposure(j, x);
        if (e <= 0.0)
          continue;
        const double lin = eta[j] + alpha + (mu + beta[j]) * x;
        total += s.cells.events(j, x) * lin - e * std::exp(lin);
      }
    }
    return total;
  }

  // Likelihood terms that depend on (eta, beta), given study effects.
  double block_loglik(const Eigen::VectorXd &eta, const Eigen::VectorXd &beta) const {
    double total = 0.0;
    for (Eigen::Index j = 0; j < J_; ++j) {
      total += pooled_events_(j, 0) * eta[j] -
               pooled_exposure_(j, 0) * std::exp(eta[j]);
      const double lin = eta[j] + beta[j];
      total += pooled_events_(j, 1) * lin - pooled_exposure_(j, 1) * std::exp(lin);
    }
    for (const auto &s : data_.type2)
      total += type2_loglik(s, beta, effect_mu(s.mu));
    for (const auto &s : data_.type3)
      total += type3_loglik(s, eta, beta, effect_alpha(s.alpha), effect_mu(s.mu));
    return total;
  }

  double beta_prior(const Eigen::VectorXd &beta, double sigma2) const {
    const auto &h = p_.hypers;
    return ar1_logpdf(beta, h.mu_beta, sigma2, h.rho_beta);
  }
  double eta_prior(const Eigen::VectorXd &eta, double sigma2) const {
    const auto &h = p_.hypers;
    return ar1_logpdf(eta, h.mu_lambda, sigma2, h.rho_lambda);
  }

  // log density of a variance whose precision has the Gamma hyperprior,
  // including the precision -> variance Jacobian.
  double variance_hyperprior(double sigma2) const {
    return gamma_logpdf(1.0 / sigma2, cfg_.constants.gamma_shape,
                        cfg_.constants.gamma_rate) -
           2.0 * std::log(sigma2);
  }

  // Gaussian approximation of the (eta, beta) conditional around a point:
  // one Newton step on the log target with the expected information.
  struct NewtonPoint {
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_target = 0.0;
    bool ok = false;
  };

  static Eigen::MatrixXd ar1_precision_matrix(Eigen::Index n, double rho) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      r.col(i) = ar1_precision_times(Eigen::VectorXd::Unit(n, i), rho);
    }
    return r;
  }

  NewtonPoint newton_point(const Eigen::VectorXd &theta) const {
    const Eigen::VectorXd eta = theta.head(J_);
    const Eigen::VectorXd beta = theta.tail(J_);
    const auto &h = p_.hypers;
    NewtonPoint out;
    out.log_target = block_loglik(eta, beta) + eta_prior(eta, h.sigma2_lambda) +
                     beta_prior(beta, h.sigma2_beta);
    if (!std::isfinite(out.log_target))
      return out;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * J_);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(2 * J_, 2 * J_);
    for (Eigen::Index j = 0; j < J_; ++j) {
      const double m0 = pooled_exposure_(j, 0) * std::exp(eta[j]);
      const double m1 = pooled_exposure_(j, 1) * std::exp(eta[j] + beta[j]);
      grad[j] += pooled_events_(j, 0) - m0 + pooled_events_(j, 1) - m1;
      grad[J_ + j] += pooled_events_(j, 1) - m1;
      info(j, j) += m0 + m1;
      info(j, J_ + j) += m1;
      info(J_ + j, j) += m1;
      info(J_ + j, J_ + j) += m1;
    }
    for (const auto &s : data_.type2) {
      const double se2 = s.record.se * s.record.se;
      const double resid = s.record.theta_hat - effect_mu(s.mu) - s.weights.dot(beta);
      grad.tail(J_) += s.weights * (resid / se2);
      info.bottomRightCorner(J_, J_) += s.weights * s.weights.transpose() / se2;
    }
    for (const auto &s : data_.type3) {
      const int x = arm_value(s.record.arm);
      const Eigen::ArrayXd terms =
          s.exposure.array() *
          (eta.array() + effect_alpha(s.alpha) + (effect_mu(s.mu) + beta.array()) * x).exp();
      const double H = terms.sum();
      const double slope = -1.0 / -std::expm1(-H);
      Eigen::VectorXd dlin(2 * J_);
      dlin.head(J_) = terms.matrix();
      dlin.tail(J_) = terms.matrix() * static_cast<double>(x);
      const double resid = s.logit_observed - logit_survival(H);
      grad += dlin * (resid * slope / s.variance);
      info += dlin * dlin.transpose() * (slope * slope / s.variance);
    }
    grad.head(J_) -= ar1_precision_times((eta.array() - h.mu_lambda).matrix(),
                                         h.rho_lambda) / h.sigma2_lambda;
    grad.tail(J_) -= ar1_precision_times((beta.array() - h.mu_beta).matrix(),
                                         h.rho_beta) / h.sigma2_beta;
    info.topLeftCorner(J_, J_) += ar1_precision_matrix(J_, h.rho_lambda) / h.sigma2_lambda;
    info.bottomRightCorner(J_, J_) += ar1_precision_matrix(J_, h.rho_beta) / h.sigma2_beta;
    out.llt.compute(info);
    if (out.llt.info() != Eigen::Success)
      return out;
    out.mean = theta + out.llt.solve(grad);
    out.ok = out.mean.allFinite();
    return out;
  }

  // log N(x; mean, info^{-1}) up to a constant shared by both directions.
  static double newton_log_density(const NewtonPoint &pt, const Eigen::VectorXd &x) {
    const Eigen::VectorXd r = pt.llt.matrixU() * (x - pt.mean);
    const double log_det = pt.llt.matrixLLT().diagonal().array().log().sum();
    return log_det - 0.5 * r.squaredNorm();
  }

  void update_newton_block() {
    Eigen::VectorXd theta(2 * J_);
    theta << p_.log_lambda, p_.beta;
    const NewtonPoint fwd = newton_point(theta);
    if (!fwd.ok)
      return;
    Eigen::VectorXd z(2 * J_);
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] = std_normal(rng_);
    const Eigen::VectorXd proposal = fwd.mean + fwd.llt.matrixU().solve(z);
    const NewtonPoint rev = newton_point(proposal);
    bool ok = false;
    if (rev.ok) {
      const double log_ratio = rev.log_target - fwd.log_target +
                               newton_log_density(rev, theta) -
                               newton_log_density(fwd, proposal);
      ok = accept(log_ratio, rng_);
    }
    newton_tuner_.record(ok);
    if (ok) {
      p_.log_lambda = proposal.head(J_);
      p_.beta = proposal.tail(J_);
    }
  }

  void update_beta_block() {
    const Eigen::VectorXd proposal = beta_tuner_.propose(p_.beta, rng_);
    const double log_ratio =
        block_loglik(p_.log_lambda, proposal) - block_loglik(p_.log_lambda, p_.beta) +
        beta_prior(proposal, p_.hypers.sigma2_beta) -
        beta_prior(p_.beta, p_.hypers.sigma2_beta);
    const bool ok = accept(log_ratio, rng_);
    beta_tuner_.scale.record(ok);
    if (ok)
      p_.beta = proposal;
  }

  void update_eta_block() {
    const Eigen::VectorXd proposal = eta_tuner_.propose(p_.log_lambda, rng_);
    const double log_ratio =
        block_loglik(proposal, p_.beta) - block_loglik(p_.log_lambda, p_.beta) +
        eta_prior(proposal, p_.hypers.sigma2_lambda) -
        eta_prior(p_.log_lambda, p_.hypers.sigma2_lambda);
    const bool ok = accept(log_ratio, rng_);
    eta_tuner_.scale.record(ok);
    if (ok)
      p_.log_lambda = proposal;
  }

  // Joint move (sigma^2, v) -> (sigma^2 e^{2u}, centre + (v - centre) e^u).
  void rescale_beta() {
    const double u = rescale_beta_tuner_.step() * std_normal(rng_);
    const double s2 = p_.hypers.sigma2_beta;
    const double s2_new = s2 * std::exp(2.0 * u);
    const Eigen::VectorXd b_new =
        (p_.beta.array() - p_.hypers.mu_beta) * std::exp(u) + p_.hypers.mu_beta;
    const double log_ratio =
        block_loglik(p_.log_lambda, b_new) - block_loglik(p_.log_lambda, p_.beta) +
        beta_prior(b_new, s2_new) - beta_prior(p_.beta, s2) +
        variance_hyperprior(s2_new) - variance_hyperprior(s2) +
        static_cast<double>(J_ + 2) * u;
    const bool ok = accept(log_ratio, rng_);
    rescale_beta_tuner_.record(ok);
    if (ok) {
      p_.beta = b_new;
      p_.hypers.sigma2_beta = s2_new;
    }
  }

  void rescale_eta() {
    const double u = rescale_eta_tuner_.step() * std_normal(rng_);
    const double s2 = p_.hypers.sigma2_lambda;
    const double s2_new = s2 * std::exp(2.0 * u);
    const Eigen::VectorXd e_new =
        (p_.log_lambda.array() - p_.hypers.mu_lambda) * std::exp(u) +
        p_.hypers.mu_lambda;
    const double log_ratio =
        block_loglik(e_new, p_.beta) - block_loglik(p_.log_lambda, p_.beta) +
        eta_prior(e_new, s2_new) - eta_prior(p_.log_lambda, s2) +
        variance_hyperprior(s2_new) - variance_hyperprior(s2) +
        static_cast<double>(J_ + 2) * u;
    const bool ok = accept(log_ratio, rng_);
    rescale_eta_tuner_.record(ok);
    if (ok) {
      p_.log_lambda = e_new;
      p_.hypers.sigma2_lambda = s2_new;
    }
  }

  double alpha_study_loglik(Eigen::Index a, double alpha) const {
    double total = 0.0;
    for (auto i : type1_by_alpha_[a]) {
      const auto &s = data_.type1[i];
      total += type1_loglik(s, p_.log_lambda, p_.beta, alpha, effect_mu(s.mu));
    }
    for (auto i : type3_by_alpha_[a]) {
      const auto &s = data_.type3[i];
      total += type3_loglik(s, p_.log_lambda, p_.beta, alpha, effect_mu(s.mu));
    }
    return total;
  }

  double mu_study_loglik(Eigen::Index m, double mu) const {
    double total = 0.0;
    for (auto i : type1_by_mu_[m]) {
      const auto &s = data_.type1[i];
      total += type1_loglik(s, p_.log_lambda, p_.beta, effect_alpha(s.alpha), mu);
    }
    for (auto i : type2_by_mu_[m])
      total += type2_loglik(data_.type2[i], p_.beta, mu);
    for (auto i : type3_by_mu_[m]) {
      const auto &s = data_.type3[i];
      total += type3_loglik(s, p_.log_lambda, p_.beta, effect_alpha(s.alpha), mu);
    }
    return total;
  }

  void update_alpha(Eigen::Index a) {
    ScalarTuner &t = alpha_tuners_[a];
    const double cur = p_.alpha[a];
    const double prop = cur + t.step() * std_normal(rng_);
    const auto &h = p_.hypers;
    const double log_ratio =
        alpha_study_loglik(a, prop) - alpha_study_loglik(a, cur) +
        normal_logpdf(prop, h.mu_alpha, h.sigma2_alpha) -
        normal_logpdf(cur, h.mu_alpha, h.sigma2_alpha);
    const bool ok = accept(log_ratio, rng_);
    t.record(ok);
    if (ok)
      p_.alpha[a] = prop;
  }

  void update_mu(Eigen::Index m) {
    ScalarTuner &t = mu_tuners_[m];
    const double cur = p_.mu[m];
    const double prop = cur + t.step() * std_normal(rng_);
    const auto &h = p_.hypers;
    const double log_ratio = mu_study_loglik(m, prop) - mu_study_loglik(m, cur) +
                             normal_logpdf(prop, h.mu_0, h.sigma2_mu) -
                             normal_logpdf(cur, h.mu_0, h.sigma2_mu);
    const bool ok = accept(log_ratio, rng_);
    t.record(ok);
    if (ok)
      p_.mu[m] = prop;
  }

  double effects_loglik(const Eigen::VectorXd &alpha, const Eigen::VectorXd &mu) const {
    auto pick = [](const Eigen::VectorXd &v, int idx) { return idx >= 0 ? v[idx] : 0.0; };
    double total = 0.0;
    for (const auto &s : data_.type1)
      total += type1_loglik(s, p_.log_lambda, p_.beta, pick(alpha, s.alpha),
                            pick(mu, s.mu));
    for (const auto &s : data_.type2)
      total += type2_loglik(s, p_.beta, pick(mu, s.mu));
    for (const auto &s : data_.type3)
      total += type3_loglik(s, p_.log_lambda, p_.beta, pick(alpha, s.alpha),
                            pick(mu, s.mu));
    return total;
  }

  static double iid_normal(const Eigen::VectorXd &v, double mean, double var) {
    double total = 0.0;
    for (double x : v)
      total += normal_logpdf(x, mean, var);
    return total;
  }

  void rescale_alpha() {
    const double u = rescale_alpha_tuner_.step() * std_normal(rng_);
    const auto &h = p_.hypers;
    const double s2_new = h.sigma2_alpha * std::exp(2.0 * u);
    const Eigen::VectorXd a_new =
        (p_.alpha.array() - h.mu_alpha) * std::exp(u) + h.mu_alpha;
    const double log_ratio =
        effects_loglik(a_new, p_.mu) - effects_loglik(p_.alpha, p_.mu) +
        iid_normal(a_new, h.mu_alpha, s2_new) -
        iid_normal(p_.alpha, h.mu_alpha, h.sigma2_alpha) +
        variance_hyperprior(s2_new) - variance_hyperprior(h.sigma2_alpha) +
        static_cast<double>(n_alpha_ + 2) * u;
    const bool ok = accept(log_ratio, rng_);
    rescale_alpha_tuner_.record(ok);
    if (ok) {
      p_.alpha = a_new;
      p_.hypers.sigma2_alpha = s2_new;
    }
  }

  void rescale_mu() {
    const double u = rescale_mu_tuner_.step() * std_normal(rng_);
    const auto &h = p_.hypers;
    const double s2_new = h.sigma2_mu * std::exp(2.0 * u);
    const Eigen::VectorXd m_new = (p_.mu.array() - h.mu_0) * std::exp(u) + h.mu_0;
    const double log_ratio =
        effects_loglik(p_.alpha, m_new) - effects_loglik(p_.alpha, p_.mu) +
        iid_normal(m_new, h.mu_0, s2_new) - iid_normal(p_.mu, h.mu_0, h.sigma2_mu) +
        variance_hyperprior(s2_new) - variance_hyperprior(h.sigma2_mu) +
        static_cast<double>(n_mu_ + 2) * u;
    const bool ok = accept(log_ratio, rng_);
    rescale_mu_tuner_.record(ok);
    if (ok) {
      p_.mu = m_new;
      p_.hypers.sigma2_mu = s2_new;
    }
  }

  double prior_and_hyperprior(const ModelParameters &p) const {
    return log_prior(p) + log_hyperprior(p.hypers, cfg_.constants);
  }

  // beta + c, mu_k - c leaves every likelihood term unchanged.
  void translate_beta_mu() {
    const double c = shift_beta_tuner_.step() * std_normal(rng_);
    ModelParameters next = p_;
    next.beta.array() += c;
    next.mu.array() -= c;
    if (!cfg_.fixed.mu_beta)
      next.hypers.mu_beta += c;
    if (cfg_.sample_study_means)
      next.hypers.mu_0 -= c;
    const bool ok = accept(prior_and_hyperprior(next) - prior_and_hyperprior(p_), rng_);
    shift_beta_tuner_.record(ok);
    if (ok)
      p_ = std::move(next);
  }

  void translate_eta_alpha() {
    const double c = shift_eta_tuner_.step() * std_normal(rng_);
    ModelParameters next = p_;
    next.log_lambda.array() += c;
    next.alpha.array() -= c;
    if (!cfg_.fixed.mu_lambda)
      next.hypers.mu_lambda += c;
    if (cfg_.sample_study_means)
      next.hypers.mu_alpha -= c;
    const bool ok = accept(prior_and_hyperprior(next) - prior_and_hyperprior(p_), rng_);
    shift_eta_tuner_.record(ok);
    if (ok)
      p_ = std::move(next);
  }

  double draw_gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(rng_.engine);
  }

  // Normal conjugate update for the mean of an AR(1) block.
  double draw_ar1_mean(const Eigen::VectorXd &v, double sigma2, double rho) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(v.size());
    const Eigen::VectorXd r_ones = ar1_precision_times(ones, rho);
    const double precision = 1.0 / cfg_.constants.mean_variance +
                             ones.dot(r_ones) / sigma2;
    const double mean = (r_ones.dot(v) / sigma2) / precision;
    return mean + std_normal(rng_) / std::sqrt(precision);
  }

  double draw_iid_mean(const Eigen::VectorXd &v, double sigma2) {
    const double precision = 1.0 / cfg_.constants.mean_variance +
                             static_cast<double>(v.size()) / sigma2;
    const double mean = (v.sum() / sigma2) / precision;
    return mean + std_normal(rng_) / std::sqrt(precision);
  }

  double draw_variance(double sum_squares, Eigen::Index n) {
    const double shape = cfg_.constants.gamma_shape + 0.5 * static_cast<double>(n);
    const double rate = cfg_.constants.gamma_rate + 0.5 * sum_squares;
    return 1.0 / draw_gamma(shape, rate);
  }

  void gibbs_hyperparameters() {
    Hyperparameters &h = p_.hypers;
    const auto &fx = cfg_.fixed;
    if (!fx.mu_beta)
      h.mu_beta = draw_ar1_mean(p_.beta, h.sigma2_beta, h.rho_beta);
    if (!fx.mu_lambda)
      h.mu_lambda = draw_ar1_mean(p_.log_lambda, h.sigma2_lambda, h.rho_lambda);
    if (!fx.sigma2_beta)
      h.sigma2_beta = draw_variance(
          ar1_quadratic_form((p_.beta.array() - h.mu_beta).matrix(), h.rho_beta), J_);
    if (!fx.sigma2_lambda)
      h.sigma2_lambda = draw_variance(
          ar1_quadratic_form((p_.log_lambda.array() - h.mu_lambda).matrix(),
                             h.rho_lambda),
          J_);
    if (!cfg_.study_effects)
      return;
    if (cfg_.sample_study_means) {
      if (n_alpha_ > 0)
        h.mu_alpha = draw_iid_mean(p_.alpha, h.sigma2_alpha);
      if (n_mu_ > 0)
        h.mu_0 = draw_iid_mean(p_.mu, h.sigma2_mu);
    }
    if (n_alpha_ > 0 && !fx.sigma2_alpha)
      h.sigma2_alpha =
          draw_variance((p_.alpha.array() - h.mu_alpha).square().sum(), n_alpha_);
    if (n_mu_ > 0 && !fx.sigma2_mu)
      h.sigma2_mu = draw_variance((p_.mu.array() - h.mu_0).square().sum(), n_mu_);
  }

  void update_rho(bool for_beta) {
    if (for_beta ? cfg_.fixed.rho_beta.has_value() : cfg_.fixed.rho_lambda.has_value())
      return;
    if (J_ < 2) {
      // the correlation does not enter a one-interval prior: draw from its prior
      const double r = (2.0 * uniform01(rng_) - 1.0) * bound();
      (for_beta ? p_.hypers.rho_beta : p_.hypers.rho_lambda) = r;
      return;
    }
    ScalarTuner &t = for_beta ? rho_beta_tuner_ : rho_lambda_tuner_;
    double &z = for_beta ? z_rho_beta_ : z_rho_lambda_;
    const Hyperparameters &h = p_.hypers;
    const Eigen::VectorXd &v = for_beta ? p_.beta : p_.log_lambda;
    const double mean = for_beta ? h.mu_beta : h.mu_lambda;
    const double s2 = for_beta ? h.sigma2_beta : h.sigma2_lambda;
    const double z_new = z + t.step() * std_normal(rng_);
    const double r_old = rho_from_unconstrained(z, bound());
    const double r_new = rho_from_unconstrained(z_new, bound());
    const double log_ratio = ar1_logpdf(v, mean, s2, r_new) -
                             ar1_logpdf(v, mean, s2, r_old) +
                             rho_log_jacobian(z_new, bound()) -
                             rho_log_jacobian(z, bound());
    const bool ok = accept(log_ratio, rng_) && std::abs(r_new) < bound();
    t.record(ok);
    if (ok) {
      z = z_new;
      (for_beta ? p_.hypers.rho_beta : p_.hypers.rho_lambda) = r_new;
    }
  }

  const ModelData &data_;
  const SamplerConfig &cfg_;
  Rng rng_;
  Eigen::Index J_;
  Eigen::Index n_alpha_;
  Eigen::Index n_mu_;
  ModelParameters p_;
  double z_rho_beta_ = 0.0;
  double z_rho_lambda_ = 0.0;
  long iteration_ = 0;
  ScalarTuner newton_tuner_;

  Eigen::ArrayXXd pooled_events_;
  Eigen::ArrayXXd pooled_exposure_;
  std::vector<std::vector<std::size_t>> type1_by_alpha_, type1_by_mu_, type2_by_mu_,
      type3_by_alpha_, type3_by_mu_;

  BlockTuner beta_tuner_;
  BlockTuner eta_tuner_;
  std::vector<ScalarTuner> alpha_tuners_;
  std::vector<ScalarTuner> mu_tuners_;
  ScalarTuner rescale_beta_tuner_, rescale_eta_tuner_, rescale_alpha_tuner_,
      rescale_mu_tuner_, shift_beta_tuner_, shift_eta_tuner_, rho_beta_tuner_,
      rho_lambda_tuner_;
};

struct ChainOutput {
  Eigen::MatrixXd draws;
  Eigen::VectorXd log_posterior;
  std::map<std::string, double> acceptance;
  std::exception_ptr error;
};

ChainOutput run_chain(const ModelData &data, const SamplerConfig &cfg,
                      std::uint64_t seed) {
  ChainOutput out;
  ChainSampler sampler(data, cfg, seed);
  sampler.initialize();
  for (int it = 0; it < cfg.n_burnin; ++it)
    sampler.iterate(true);
  sampler.freeze();
  const int keep = cfg.retained_per_chain();
  const Eigen::Index n_par = flatten(sampler.state()).size();
  out.draws.resize(keep, n_par);
  out.log_posterior.resize(keep);
  int row = 0;
  for (int it = cfg.n_burnin; it < cfg.n_iter && row < keep; ++it) {
    sampler.iterate(false);
    if ((it - cfg.n_burnin + 1) % cfg.thin == 0) {
      out.draws.row(row) = flatten(sampler.state()).transpose();
      out.log_posterior[row] =
          log_posterior(data, sampler.state(), cfg.constants);
      ++row;
    }
  }
  out.acceptance = sampler.acceptance();
  return out;
}

} // namespace

FitResult fit(const ModelData &data, const SamplerConfig &config,
              const std::string &fingerprint) {
  config.validate();
  if (data.studies() == 0)
    throw ConfigError("fit needs at least one study");

  std::vector<ChainOutput> chains(config.n_chains);
  int threads = config.n_threads > 0
                    ? config.n_threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, config.n_chains);
  auto work = [&](int first) {
    for (int c = first; c < config.n_chains; c += threads) {
      try {
        chains[c] = run_chain(data, config, chain_seed(config.seed, c));
      } catch (...) {
        chains[c].error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, t);
    for (auto &th : pool)
      th.join();
  }
  for (const auto &c : chains)
    if (c.error)
      std::rethrow_exception(c.error);

  FitResult result;
  PosteriorDraws &d = result.draws;
  d.names = parameter_names(data);
  d.grid = data.grid;
  d.fingerprint = fingerprint;
  d.alpha_ids = data.alpha_ids;
  d.mu_ids = data.mu_ids;
  d.n_chains = config.n_chains;
  d.draws_per_chain = config.retained_per_chain();
  d.values.resize(static_cast<Eigen::Index>(d.n_chains) * d.draws_per_chain,
                  static_cast<Eigen::Index>(d.names.size()));
  d.log_posterior.resize(d.values.rows());
  for (int c = 0; c < config.n_chains; ++c) {
    d.values.middleRows(static_cast<Eigen::Index>(c) * d.draws_per_chain,
                        d.draws_per_chain) = chains[c].draws;
    d.log_posterior.segment(static_cast<Eigen::Index>(c) * d.draws_per_chain,
                            d.draws_per_chain) = chains[c].log_posterior;
  }

  result.diagnostics = diagnose(d);
  for (const auto &c : chains)
    for (const auto &[block, rate] : c.acceptance)
      result.diagnostics.acceptance[block] += rate / config.n_chains;
  return result;
}

} // namespace mars
