#include "mars/priors.hpp"

#include <cmath>
#include <limits>

#include "mars/evidence.hpp"

namespace mars {

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0))
    return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double log_prior(const ModelParameters &p) {
  const Hyperparameters &h = p.hypers;
  double total = ar1_logpdf(p.beta, h.mu_beta, h.sigma2_beta, h.rho_beta) +
                 ar1_logpdf(p.log_lambda, h.mu_lambda, h.sigma2_lambda,
                            h.rho_lambda);
  for (double a : p.alpha)
    total += normal_logpdf(a, h.mu_alpha, h.sigma2_alpha);
  for (double m : p.mu)
    total += normal_logpdf(m, h.mu_0, h.sigma2_mu);
  return total;
}

double log_hyperprior(const Hyperparameters &h, const HyperpriorConstants &c) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (!(std::abs(h.rho_beta) < c.rho_bound) ||
      !(std::abs(h.rho_lambda) < c.rho_bound))
    return neg_inf;
  double total = 0.0;
  for (double m : {h.mu_beta, h.mu_lambda, h.mu_alpha, h.mu_0})
    total += normal_logpdf(m, 0.0, c.mean_variance);
  for (double s2 : {h.sigma2_beta, h.sigma2_mu, h.sigma2_lambda, h.sigma2_alpha}) {
    if (!(s2 > 0.0))
      return neg_inf;
    total += gamma_logpdf(1.0 / s2, c.gamma_shape, c.gamma_rate);
  }
  total += 2.0 * -std::log(2.0 * c.rho_bound);
  return total;
}

} // namespace mars
