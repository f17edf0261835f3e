#include "mars/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mars {

LogHrEstimate piecewise_exponential_hr(const PoissonCells &cells) {
  const Eigen::ArrayXd d0 = cells.events.col(0);
  const Eigen::ArrayXd d1 = cells.events.col(1);
  const Eigen::ArrayXd e0 = cells.exposure.col(0);
  const Eigen::ArrayXd e1 = cells.exposure.col(1);
  LogHrEstimate out;
  if (d0.sum() == 0.0 || d1.sum() == 0.0) {
    out.continuity_corrected = true;
    const double r1 = (d1.sum() + 0.5) / e1.sum();
    const double r0 = (d0.sum() + 0.5) / e0.sum();
    out.theta = std::log(r1 / r0);
    out.se = std::sqrt(1.0 / (d1.sum() + 0.5) + 1.0 / (d0.sum() + 0.5));
    return out;
  }
  const Eigen::ArrayXd d = d0 + d1;
  auto score_info = [&](double b) {
    const Eigen::ArrayXd w = e1 * std::exp(b);
    const Eigen::ArrayXd denom = e0 + w;
    double score = d1.sum();
    double info = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (d[j] == 0.0 || denom[j] <= 0.0)
        continue;
      score -= d[j] * w[j] / denom[j];
      info += d[j] * e0[j] * w[j] / (denom[j] * denom[j]);
    }
    return std::pair{score, info};
  };
  double b = std::log((d1.sum() / e1.sum()) / (d0.sum() / e0.sum()));
  for (int it = 0; it < 100; ++it) {
    const auto [score, info] = score_info(b);
    if (info <= 0.0)
      break;
    const double step = std::clamp(score / info, -2.0, 2.0);
    b += step;
    if (std::abs(step) < 1e-12)
      break;
  }
  const auto [score, info] = score_info(b);
  (void)score;
  out.theta = b;
  out.se = 1.0 / std::sqrt(info);
  return out;
}

RandomEffectsResult dersimonian_laird(std::span<const LogHrEstimate> est) {
  if (est.empty())
    throw ConfigError("random-effects pooling needs at least one estimate");
  double sw = 0.0, sw2 = 0.0, swt = 0.0;
  for (const auto &e : est) {
    const double w = 1.0 / (e.se * e.se);
    sw += w;
    sw2 += w * w;
    swt += w * e.theta;
  }
  const double fixed = swt / sw;
  double q = 0.0;
  for (const auto &e : est)
    q += (e.theta - fixed) * (e.theta - fixed) / (e.se * e.se);
  const double k = static_cast<double>(est.size());
  RandomEffectsResult out;
  out.tau2 = est.size() > 1 ? std::max(0.0, (q - (k - 1.0)) / (sw - sw2 / sw)) : 0.0;
  double sw_star = 0.0, swt_star = 0.0;
  for (const auto &e : est) {
    const double w = 1.0 / (e.se * e.se + out.tau2);
    sw_star += w;
    swt_star += w * e.theta;
  }
  out.mean = swt_star / sw_star;
  out.se = 1.0 / std::sqrt(sw_star);
  out.lower = out.mean - 1.959963984540054 * out.se;
  out.upper = out.mean + 1.959963984540054 * out.se;
  return out;
}

KaplanMeierPoint kaplan_meier_at(const ReconstructedArm &arm, double t) {
  std::map<double, std::pair<int, int>> at;
  for (double x : arm.event_times)
    ++at[x].first;
  for (double x : arm.censor_times)
    ++at[x].second;
  int n = static_cast<int>(arm.subjects());
  double s = 1.0, greenwood = 0.0;
  for (const auto &[time, dc] : at) {
    if (time > t)
      break;
    const auto [d, c] = dc;
    if (d > 0 && n > 0) {
      s *= 1.0 - static_cast<double>(d) / n;
      if (n > d)
        greenwood += static_cast<double>(d) / (static_cast<double>(n) * (n - d));
    }
    n -= d + c;
  }
  return {s, s * std::sqrt(greenwood)};
}

} // namespace mars
