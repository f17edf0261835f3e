#include <algorithm>
#include <cmath>
#include <limits>

#include "mars/mcmc.hpp"

namespace mars {

namespace {

double mean_of(const Eigen::VectorXd &v) { return v.mean(); }

double sample_variance(const Eigen::VectorXd &v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

// Biased autocovariance at `lag`.
double autocovariance(const Eigen::VectorXd &v, double mean, Eigen::Index lag) {
  const Eigen::Index n = v.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i + lag < n; ++i)
    acc += (v[i] - mean) * (v[i + lag] - mean);
  return acc / static_cast<double>(n);
}

} // namespace

double split_rhat(const std::vector<Eigen::VectorXd> &chains) {
  std::vector<Eigen::VectorXd> splits;
  for (const auto &c : chains) {
    const Eigen::Index half = c.size() / 2;
    if (half < 4)
      throw DiagnosticError("split_rhat needs at least 4 draws per split");
    splits.emplace_back(c.head(half));
    splits.emplace_back(c.tail(half));
  }
  if (splits.size() < 2)
    throw DiagnosticError("split_rhat needs at least one chain");
  const auto n = static_cast<double>(splits.front().size());
  const auto m = static_cast<double>(splits.size());
  Eigen::VectorXd means(splits.size());
  double within = 0.0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    means[static_cast<Eigen::Index>(s)] = mean_of(splits[s]);
    within += sample_variance(splits[s]);
  }
  within /= m;
  const double grand = means.mean();
  const double between = n * (means.array() - grand).square().sum() / (m - 1.0);
  if (within <= 0.0)
    return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

EssResult effective_sample_size(const std::vector<Eigen::VectorXd> &chains) {
  EssResult out;
  if (chains.empty())
    return out;
  const Eigen::Index n = chains.front().size();
  const auto M = static_cast<double>(chains.size());
  const double total = M * static_cast<double>(n);
  if (n < 4) {
    out.ess = total;
    out.degenerate = true;
    return out;
  }

  std::vector<double> means;
  double within = 0.0;
  for (const auto &c : chains) {
    means.push_back(c.mean());
    within += sample_variance(c);
  }
  within /= M;
  double var_plus = within * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
  if (chains.size() > 1) {
    const Eigen::Map<const Eigen::VectorXd> mv(means.data(),
                                               static_cast<Eigen::Index>(means.size()));
    var_plus += (mv.array() - mv.mean()).square().sum() / (M - 1.0);
  }
  if (!(within > 0.0) || !(var_plus > 0.0)) {
    out.ess = total;
    out.degenerate = true;
    return out;
  }

  auto rho = [&](Eigen::Index lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c)
      acov += autocovariance(chains[c], means[c], lag);
    acov /= M;
    return 1.0 - (within - acov) / var_plus;
  };

  // Geyer initial positive and monotone sequence over lag pairs.
  double tau = -1.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0)
      break;
    pair = std::min(pair, previous_pair);
    previous_pair = pair;
    tau += 2.0 * pair;
  }
  out.ess = std::min(total, total / std::max(tau, 1.0 / std::log10(total)));
  return out;
}

Eigen::VectorXd split_rhat(const PosteriorDraws &draws) {
  Eigen::VectorXd out(draws.values.cols());
  for (Eigen::Index p = 0; p < out.size(); ++p)
    out[p] = split_rhat(draws.chains_of(p));
  return out;
}

Diagnostics diagnose(const PosteriorDraws &draws) {
  Diagnostics d;
  const Eigen::Index P = draws.values.cols();
  d.rhat = Eigen::VectorXd::Constant(P, std::numeric_limits<double>::quiet_NaN());
  d.ess = Eigen::VectorXd::Zero(P);
  d.ess_degenerate.assign(static_cast<std::size_t>(P), false);
  bool rhat_available = true;
  d.max_rhat = 1.0;
  d.min_ess = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto chains = draws.chains_of(p);
    try {
      d.rhat[p] = split_rhat(chains);
      d.max_rhat = std::max(d.max_rhat, d.rhat[p]);
    } catch (const DiagnosticError &) {
      rhat_available = false;
    }
    const EssResult e = effective_sample_size(chains);
    d.ess[p] = e.ess;
    d.ess_degenerate[static_cast<std::size_t>(p)] = e.degenerate;
    if (!e.degenerate)
      d.min_ess = std::min(d.min_ess, e.ess);
  }
  if (!std::isfinite(d.min_ess))
    d.min_ess = static_cast<double>(draws.values.rows());
  d.converged = rhat_available && d.max_rhat <= kMaxRhat && d.min_ess >= kMinEss;
  return d;
}

} // namespace mars
