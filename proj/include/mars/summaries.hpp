#pragma once

// Posterior summaries for reporting: population survival curves, stepwise
// log hazard ratios, median survival and restricted mean survival time.

#include <Eigen/Core>

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mars/mcmc.hpp"
#include "mars/survival.hpp"

namespace mars {

struct SummaryRow {
  std::string measure;
  double time = std::numeric_limits<double>::quiet_NaN();
  int interval = -1; ///< 1-based interval for step rows, -1 otherwise
  int arm = -1;      ///< -1 for between-arm contrasts
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN(); ///< 2.5% quantile
  double upper = std::numeric_limits<double>::quiet_NaN(); ///< 97.5% quantile
  std::string status = "ok";
  double finite_fraction = 1.0;
};

using SummaryTable = std::vector<SummaryRow>;

/// Mean, SD and central 95% interval (linear-interpolated quantiles).
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};
Moments summarize(std::span<const double> values);
double quantile(std::vector<double> values, double prob);

/// Population-level hazard of one draw: study effects at their centres.
PiecewiseGroupHazard<double> population_hazard(const PosteriorDraws &draws,
                                               Eigen::Index row);

/// Duration-weighted mean (1/t_J) sum beta_j |I_j| of one draw, plus mu_0.
double grand_log_hr(const PosteriorDraws &draws, Eigen::Index row);
Eigen::VectorXd grand_log_hr_draws(const PosteriorDraws &draws);

SummaryTable posterior_survival_curve(const PosteriorDraws &draws, Arm arm,
                                      std::span<const double> times);
SummaryTable posterior_loghr_steps(const PosteriorDraws &draws);
/// Reported only when at least this share of draws reach the median.
inline constexpr double kMedianReachedShare = 0.95;
SummaryRow posterior_median_survival(const PosteriorDraws &draws, Arm arm);
/// RMST rows for `arm` followed by arm-1-minus-arm-0 difference rows.
SummaryTable posterior_rmst(const PosteriorDraws &draws, Arm arm,
                            std::span<const double> taus);

} // namespace mars
