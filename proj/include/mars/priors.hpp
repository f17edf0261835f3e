#pragma once

// AR(1) multivariate-normal priors on the log baseline rates and the
// interval log hazard ratios, normal priors on study effects, and the
// diffuse hyperpriors.

#include <Eigen/Core>

#include <cmath>
#include <numbers>

#include "mars/errors.hpp"
#include "mars/parameters.hpp"

namespace mars {

/// Hyperprior constants; overridable from the CLI config file.
struct HyperpriorConstants {
  double mean_variance = 1000.0; ///< N(0, mean_variance) on the four means
  double gamma_shape = 0.01;     ///< Gamma(shape, rate) on each precision
  double gamma_rate = 0.01;
  double rho_bound = 0.99; ///< Uniform(-bound, bound) on the correlations
};

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
ar1_covariance(Scalar sigma2, Scalar rho, Eigen::Index J) {
  using std::abs;
  using std::pow;
  if (!(abs(rho) < Scalar(1)))
    throw DomainError("ar1_covariance: |rho| must be < 1");
  if (!(sigma2 > Scalar(0)) || J < 1)
    throw DomainError("ar1_covariance: sigma2 > 0 and J >= 1 required");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(J, J);
  for (Eigen::Index i = 0; i < J; ++i)
    for (Eigen::Index l = 0; l < J; ++l)
      out(i, l) = sigma2 * pow(rho, Scalar(std::abs(i - l)));
  return out;
}

/// v' R^{-1} v for the unit-variance AR(1) correlation matrix R, through the
/// tridiagonal precision: v_1^2 + sum_i (v_i - rho v_{i-1})^2 / (1 - rho^2).
template <typename Derived>
typename Derived::Scalar ar1_quadratic_form(const Eigen::MatrixBase<Derived> &v,
                                            typename Derived::Scalar rho) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0)
    return Scalar(0);
  Scalar innovations(0);
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    const Scalar e = v[i] - rho * v[i - 1];
    innovations += e * e;
  }
  return v[0] * v[0] + innovations / (Scalar(1) - rho * rho);
}

/// R^{-1} v for the unit-variance AR(1) correlation matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
ar1_precision_times(const Eigen::MatrixBase<Derived> &v,
                    typename Derived::Scalar rho) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  const Scalar scale = Scalar(1) / (Scalar(1) - rho * rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool interior = i > 0 && i + 1 < n;
    const Scalar diag = (n == 1) ? Scalar(1) - rho * rho
                                 : (interior ? Scalar(1) + rho * rho : Scalar(1));
    Scalar acc = diag * v[i];
    if (i > 0)
      acc -= rho * v[i - 1];
    if (i + 1 < n)
      acc -= rho * v[i + 1];
    out[i] = scale * acc;
  }
  return out;
}

/// log N(v; mean * 1, sigma2 * R(rho)) without forming the matrix.
template <typename Derived>
typename Derived::Scalar ar1_logpdf(const Eigen::MatrixBase<Derived> &v,
                                    typename Derived::Scalar mean,
                                    typename Derived::Scalar sigma2,
                                    typename Derived::Scalar rho) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  const auto J = static_cast<Scalar>(v.size());
  const auto centered = (v.array() - mean).matrix().eval();
  const Scalar log_det =
      J * log(sigma2) + (J - Scalar(1)) * log(Scalar(1) - rho * rho);
  return Scalar(-0.5) *
         (J * log(Scalar(2) * Scalar(std::numbers::pi)) + log_det +
          ar1_quadratic_form(centered, rho) / sigma2);
}

double gamma_logpdf(double x, double shape, double rate);

double log_prior(const ModelParameters &params);

/// Hyperprior density in the (means, precisions, correlations)
/// parameterization; -inf outside the support.
double log_hyperprior(const Hyperparameters &h,
                      const HyperpriorConstants &c = {});

} // namespace mars
