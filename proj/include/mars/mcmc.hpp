#pragma once

// Blocked adaptive Metropolis-within-Gibbs sampler for the multilevel
// piecewise-exponential model, plus split R-hat and ESS diagnostics.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mars/evidence.hpp"
#include "mars/priors.hpp"

namespace mars {

/// Hyperparameters held at a constant instead of being sampled.
struct FixedParameters {
  std::optional<double> mu_beta;
  std::optional<double> mu_lambda;
  std::optional<double> sigma2_beta;
  std::optional<double> sigma2_lambda;
  std::optional<double> sigma2_alpha;
  std::optional<double> sigma2_mu;
  std::optional<double> rho_beta;
  std::optional<double> rho_lambda;
};

struct SamplerConfig {
  int n_chains = 4;
  int n_iter = 10000;
  int n_burnin = 5000;
  int thin = 1;
  std::uint64_t seed = 0;
  int adapt_window = 50;
  double target_accept = 0.3;
  /// Worker threads for chains; 0 picks the hardware concurrency. Never
  /// affects draw values.
  int n_threads = 0;
  /// Sample the study-effect centres mu_alpha and mu_0. When false they are
  /// held at 0 and the random effects are centred.
  bool sample_study_means = false;
  /// When false every alpha_k and mu_k is held at 0.
  bool study_effects = true;
  FixedParameters fixed;
  HyperpriorConstants constants;

  int retained_per_chain() const { return (n_iter - n_burnin) / thin; }
  /// Throws ConfigError.
  void validate() const;
};

/// Retained draws. Rows are chain-major (all of chain 0, then chain 1, ...);
/// columns follow `names`:
///   beta[1..J], log_lambda[1..J], alpha[<study>]..., mu[<study>]...,
///   mu_beta, mu_lambda, mu_alpha, mu_0,
///   sigma2_beta, sigma2_lambda, sigma2_alpha, sigma2_mu,
///   rho_beta, rho_lambda
struct PosteriorDraws {
  std::vector<std::string> names;
  TimeGrid grid;
  std::string fingerprint;
  std::vector<std::string> alpha_ids;
  std::vector<std::string> mu_ids;
  int n_chains = 0;
  int draws_per_chain = 0;
  Eigen::MatrixXd values;
  /// Log posterior (up to a constant) of every retained draw.
  Eigen::VectorXd log_posterior;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index column(const std::string &name) const;
  Eigen::Index intervals() const { return grid.intervals(); }

  auto beta(Eigen::Index row) const {
    return values.row(row).segment(0, intervals()).transpose();
  }
  auto log_lambda(Eigen::Index row) const {
    return values.row(row).segment(intervals(), intervals()).transpose();
  }
  double value(Eigen::Index row, const std::string &name) const {
    return values(row, column(name));
  }
  /// Draws of one parameter split by chain.
  std::vector<Eigen::VectorXd> chains_of(Eigen::Index col) const;
};

std::vector<std::string> parameter_names(const ModelData &data);

/// Flatten / restore a parameter state in the documented column order.
Eigen::VectorXd flatten(const ModelParameters &p);
ModelParameters unflatten(const Eigen::Ref<const Eigen::VectorXd> &row,
                          Eigen::Index intervals, Eigen::Index n_alpha,
                          Eigen::Index n_mu);

struct Diagnostics {
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess;
  std::vector<bool> ess_degenerate;
  std::map<std::string, double> acceptance;
  double max_rhat = 1.0;
  double min_ess = 0.0;
  bool converged = false;
};

/// Convergence gate thresholds for inference output.
inline constexpr double kMaxRhat = 1.05;
inline constexpr double kMinEss = 400.0;

struct FitResult {
  PosteriorDraws draws;
  Diagnostics diagnostics;
};

/// Log posterior up to a constant: likelihood + priors + hyperpriors.
double log_posterior(const ModelData &data, const ModelParameters &p,
                     const HyperpriorConstants &c = {});

/// Throws InitializationError when no finite starting point is found.
FitResult fit(const ModelData &data, const SamplerConfig &config,
              const std::string &fingerprint = "");

/// Per-chain seed derived from the master seed (splitmix64 of seed and
/// chain index); thread scheduling never enters.
std::uint64_t chain_seed(std::uint64_t master, std::uint64_t stream);

double split_rhat(const std::vector<Eigen::VectorXd> &chains);
Eigen::VectorXd split_rhat(const PosteriorDraws &draws);

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};
EssResult effective_sample_size(const std::vector<Eigen::VectorXd> &chains);

Diagnostics diagnose(const PosteriorDraws &draws);

} // namespace mars
