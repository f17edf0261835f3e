#pragma once

// Fixtures and oracles shared by the unit tests and the acceptance run.

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "mars/mcmc.hpp"
#include "mars/simulator.hpp"

namespace support {

/// Asymptotic Kolmogorov tail P(K > sqrt(n) D) with the Stephens correction.
double ks_pvalue(double d, std::size_t n);
/// One-sample KS statistic against N(mean, sd^2).
double ks_statistic_normal(std::vector<double> sample, double mean, double sd);

/// One HR study with J = 1, study effects off and every hyperparameter
/// fixed: the log HR posterior is N(post_mean, post_var).
struct Conjugate {
  mars::ModelData data;
  mars::SamplerConfig config;
  double post_mean = 0.0;
  double post_var = 0.0;
};
Conjugate conjugate_fixture(std::uint64_t seed);

struct ConjugateResult {
  double ks_p = 0.0;
  std::size_t draws = 0;
  double mean = 0.0;
  double var = 0.0;
};
ConjugateResult run_conjugate(std::uint64_t seed);

/// Large type I dataset from a fixed piecewise-exponential truth (K = 10,
/// n = 500, J = 5).
struct Recovery {
  mars::PiecewiseTruth truth;
  mars::ModelData data;
};
Recovery recovery_fixture(std::uint64_t seed);

struct RecoveryResult {
  double max_z = 0.0; ///< max |posterior mean - truth| / posterior sd
  Eigen::VectorXd beta_z;
  Eigen::VectorXd log_lambda_z;
  bool converged = false;
};
RecoveryResult run_recovery(std::uint64_t seed, const mars::SamplerConfig &config);

/// Fits one dataset with 1 and with 4 worker threads and compares every
/// retained value bit for bit.
bool deterministic_across_threads(const mars::ModelData &data, mars::SamplerConfig config);

/// Exact KM of a simulated arm with the matching published at-risk table.
struct KmRoundTrip {
  int fixtures = 0;
  int exact_fixtures = 0; ///< per-interval event counts recovered exactly
  int random_trials = 0;
  int random_within = 0;  ///< sup-norm error below 0.02
};
KmRoundTrip km_round_trips(int exact_fixtures, int random_trials, std::uint64_t seed);

struct LikelihoodEquivalence {
  double max_cells_vs_observations = 0.0; ///< relative discrepancy
  double max_cells_vs_exact = 0.0;        ///< relative, after constants
};
LikelihoodEquivalence likelihood_equivalence(int datasets, std::uint64_t seed);

} // namespace support
