#include "mars/summaries.hpp"

#include <algorithm>
#include <cmath>

namespace mars {

double quantile(std::vector<double> values, double prob) {
  if (values.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Moments summarize(std::span<const double> values) {
  Moments m;
  const auto n = static_cast<double>(values.size());
  if (values.empty())
    return m;
  double sum = 0.0;
  for (double v : values)
    sum += v;
  m.mean = sum / n;
  double ss = 0.0;
  for (double v : values)
    ss += (v - m.mean) * (v - m.mean);
  m.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> copy(values.begin(), values.end());
  m.lower = quantile(copy, 0.025);
  m.upper = quantile(std::move(copy), 0.975);
  return m;
}

PiecewiseGroupHazard<double> population_hazard(const PosteriorDraws &draws,
                                               Eigen::Index row) {
  return {draws.grid, draws.log_lambda(row), draws.beta(row),
          draws.value(row, "mu_alpha"), draws.value(row, "mu_0")};
}

double grand_log_hr(const PosteriorDraws &draws, Eigen::Index row) {
  const TimeGrid &g = draws.grid;
  return draws.value(row, "mu_0") + g.widths().dot(draws.beta(row)) / g.horizon();
}

Eigen::VectorXd grand_log_hr_draws(const PosteriorDraws &draws) {
  Eigen::VectorXd out(draws.size());
  for (Eigen::Index r = 0; r < draws.size(); ++r)
    out[r] = grand_log_hr(draws, r);
  return out;
}

namespace {

SummaryRow make_row(std::string measure, std::span<const double> values) {
  SummaryRow row;
  row.measure = std::move(measure);
  const Moments m = summarize(values);
  row.mean = m.mean;
  row.sd = m.sd;
  row.lower = m.lower;
  row.upper = m.upper;
  return row;
}

} // namespace

SummaryTable posterior_survival_curve(const PosteriorDraws &draws, Arm arm,
                                      std::span<const double> times) {
  for (double t : times)
    if (!(t >= 0.0) || t > draws.grid.horizon())
      throw DomainError("survival curve time outside [0, t_J]");
  std::vector<std::vector<double>> per_time(times.size());
  for (Eigen::Index r = 0; r < draws.size(); ++r) {
    const auto h = population_hazard(draws, r);
    for (std::size_t i = 0; i < times.size(); ++i)
      per_time[i].push_back(survival_at(h, times[i], arm));
  }
  SummaryTable out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    SummaryRow row = make_row("survival", per_time[i]);
    row.time = times[i];
    row.arm = arm_value(arm);
    out.push_back(std::move(row));
  }
  return out;
}

SummaryTable posterior_loghr_steps(const PosteriorDraws &draws) {
  const Eigen::Index J = draws.intervals();
  const TimeGrid &g = draws.grid;
  std::vector<std::vector<double>> steps(static_cast<std::size_t>(J));
  std::vector<double> weighted, unweighted;
  for (Eigen::Index r = 0; r < draws.size(); ++r) {
    const double mu0 = draws.value(r, "mu_0");
    const Eigen::VectorXd b = draws.beta(r);
    for (Eigen::Index j = 0; j < J; ++j)
      steps[static_cast<std::size_t>(j)].push_back(mu0 + b[j]);
    weighted.push_back(grand_log_hr(draws, r));
    unweighted.push_back(mu0 + b.mean());
  }
  SummaryTable out;
  for (Eigen::Index j = 0; j < J; ++j) {
    SummaryRow row = make_row("log_hr_step", steps[static_cast<std::size_t>(j)]);
    row.interval = static_cast<int>(j + 1);
    row.time = g.upper(j);
    out.push_back(std::move(row));
  }
  out.push_back(make_row("log_hr_grand_weighted", weighted));
  out.push_back(make_row("log_hr_grand_unweighted", unweighted));
  return out;
}

SummaryRow posterior_median_survival(const PosteriorDraws &draws, Arm arm) {
  std::vector<double> finite;
  for (Eigen::Index r = 0; r < draws.size(); ++r)
    if (auto m = median_survival(population_hazard(draws, r), arm))
      finite.push_back(*m);
  const double share =
      draws.size() ? static_cast<double>(finite.size()) / static_cast<double>(draws.size())
                   : 0.0;
  SummaryRow row;
  if (share >= kMedianReachedShare) {
    row = make_row("median_survival", finite);
  } else {
    row.measure = "median_survival";
    row.status = "not_reached";
  }
  row.arm = arm_value(arm);
  row.finite_fraction = share;
  return row;
}

SummaryTable posterior_rmst(const PosteriorDraws &draws, Arm arm,
                            std::span<const double> taus) {
  for (double tau : taus)
    if (!(tau > 0.0) || tau > draws.grid.horizon())
      throw DomainError("RMST horizon outside (0, t_J]");
  std::vector<std::vector<double>> own(taus.size()), diff(taus.size());
  for (Eigen::Index r = 0; r < draws.size(); ++r) {
    const auto h = population_hazard(draws, r);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const double r0 = rmst(h, Arm::Reference, taus[i]);
      const double r1 = rmst(h, Arm::Treated, taus[i]);
      own[i].push_back(arm == Arm::Treated ? r1 : r0);
      diff[i].push_back(r1 - r0);
    }
  }
  SummaryTable out;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    SummaryRow row = make_row("rmst", own[i]);
    row.time = taus[i];
    row.arm = arm_value(arm);
    out.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    SummaryRow row = make_row("rmst_difference", diff[i]);
    row.time = taus[i];
    out.push_back(std::move(row));
  }
  return out;
}

} // namespace mars
