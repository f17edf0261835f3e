#pragma once

#include <Eigen/Core>

namespace mars {

/// Hyperparameters of the multilevel prior. Variances, not precisions.
struct Hyperparameters {
  double mu_beta = 0.0;
  double mu_lambda = 0.0;
  double mu_alpha = 0.0;
  double mu_0 = 0.0;
  double sigma2_beta = 1.0;
  double sigma2_mu = 1.0;
  double sigma2_lambda = 1.0;
  double sigma2_alpha = 1.0;
  double rho_beta = 0.0;
  double rho_lambda = 0.0;
};

/// One full parameter state. `log_lambda` and `beta` have one entry per grid
/// interval; `alpha` and `mu` are aligned with ModelData::alpha_ids and
/// ModelData::mu_ids.
struct ModelParameters {
  Eigen::VectorXd log_lambda;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd mu;
  Hyperparameters hypers;
};

} // namespace mars
