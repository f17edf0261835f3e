#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "mars/km_reconstruct.hpp"

namespace support {

using namespace mars;
using Eigen::VectorXd;

double ks_pvalue(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2)
    return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16)
      break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_statistic_normal(std::vector<double> sample, double mean, double sd) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = 0.5 * std::erfc(-(sample[i] - mean) / (sd * std::sqrt(2.0)));
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

Conjugate conjugate_fixture(std::uint64_t seed) {
  const TimeGrid grid{0, 24};
  Dataset d;
  Study s;
  s.id = "hr";
  s.hazard_ratio = HazardRatioRecord{0.3, 0.2, 24.0};
  d.studies.push_back(s);

  Conjugate c;
  c.data = prepare(d, grid);
  c.config.n_chains = 4;
  c.config.n_iter = 26250;
  c.config.n_burnin = 1250;
  c.config.thin = 20;
  c.config.seed = seed;
  c.config.n_threads = 1;
  c.config.study_effects = false;
  auto &f = c.config.fixed;
  f.mu_beta = 0.0;
  f.sigma2_beta = 1.0;
  f.rho_beta = 0.0;
  f.mu_lambda = -3.0;
  f.sigma2_lambda = 1.0;
  f.rho_lambda = 0.0;
  f.sigma2_alpha = 1.0;
  f.sigma2_mu = 1.0;
  // prior precision 1, data precision 1 / 0.04 = 25
  c.post_var = 1.0 / 26.0;
  c.post_mean = c.post_var * 25.0 * 0.3;
  return c;
}

ConjugateResult run_conjugate(std::uint64_t seed) {
  const Conjugate c = conjugate_fixture(seed);
  const FitResult fit = mars::fit(c.data, c.config);
  const Eigen::Index col = fit.draws.column("beta[1]");
  std::vector<double> beta(fit.draws.values.col(col).data(),
                           fit.draws.values.col(col).data() + fit.draws.size());
  ConjugateResult r;
  r.draws = beta.size();
  const VectorXd v = fit.draws.values.col(col);
  r.mean = v.mean();
  r.var = (v.array() - r.mean).square().sum() / static_cast<double>(v.size() - 1);
  r.ks_p = ks_pvalue(ks_statistic_normal(beta, c.post_mean, std::sqrt(c.post_var)),
                     beta.size());
  return r;
}

Recovery recovery_fixture(std::uint64_t seed) {
  Recovery r;
  r.truth.grid = TimeGrid{0, 6, 12, 24, 36, 60};
  r.truth.log_lambda = VectorXd(5);
  r.truth.log_lambda << -3.2, -3.5, -3.9, -4.1, -4.4;
  r.truth.beta = VectorXd(5);
  r.truth.beta << -0.6, -0.4, -0.2, 0.0, 0.2;
  r.truth.n_studies = 10;
  r.truth.study_size = 500;
  r.truth.alpha_variance = 0.01;
  r.truth.mu_variance = 0.01;
  r.truth.censoring_rate = 0.01;
  const SimulatedTrials trials = gen_piecewise(r.truth, seed);
  Dataset d;
  for (const auto &s : trials.studies)
    d.studies.push_back(Study{s.id, s.arms(), std::nullopt, {}, std::nullopt});
  r.data = prepare(d, r.truth.grid);
  return r;
}

RecoveryResult run_recovery(std::uint64_t seed, const SamplerConfig &config) {
  const Recovery fixture = recovery_fixture(seed);
  const FitResult fit = mars::fit(fixture.data, config);
  const Eigen::Index J = fixture.truth.grid.intervals();
  RecoveryResult r;
  r.converged = fit.diagnostics.converged;
  r.beta_z.resize(J);
  r.log_lambda_z.resize(J);
  auto z = [&](Eigen::Index col, double truth) {
    const VectorXd v = fit.draws.values.col(col);
    const double m = v.mean();
    const double sd = std::sqrt((v.array() - m).square().sum() / (v.size() - 1.0));
    return (m - truth) / sd;
  };
  for (Eigen::Index j = 0; j < J; ++j) {
    r.beta_z[j] = z(j, fixture.truth.beta[j]);
    r.log_lambda_z[j] = z(J + j, fixture.truth.log_lambda[j]);
  }
  r.max_z = std::max(r.beta_z.cwiseAbs().maxCoeff(), r.log_lambda_z.cwiseAbs().maxCoeff());
  return r;
}

bool deterministic_across_threads(const ModelData &data, SamplerConfig config) {
  config.n_threads = 1;
  const FitResult one = fit(data, config);
  config.n_threads = 4;
  const FitResult four = fit(data, config);
  if (one.draws.values.rows() != four.draws.values.rows() ||
      one.draws.values.cols() != four.draws.values.cols())
    return false;
  return std::equal(one.draws.values.data(),
                    one.draws.values.data() + one.draws.values.size(),
                    four.draws.values.data()) &&
         one.draws.log_posterior == four.draws.log_posterior;
}

namespace {

int count_in(const std::vector<double> &v, double lo, double hi) {
  return static_cast<int>(
      std::count_if(v.begin(), v.end(), [&](double t) { return t > lo && t <= hi; }));
}

// Published at-risk numbers: still at risk just after any drop at r.
AtRiskTable published_at_risk(const ReconstructedArm &arm, const std::vector<double> &times) {
  AtRiskTable table;
  for (double r : times) {
    int n = static_cast<int>(std::count_if(arm.event_times.begin(), arm.event_times.end(),
                                           [&](double t) { return t > r; }));
    n += static_cast<int>(std::count_if(arm.censor_times.begin(), arm.censor_times.end(),
                                        [&](double t) { return t >= r; }));
    table.entries.push_back({r, r == 0.0 ? static_cast<int>(arm.subjects()) : n});
  }
  return table;
}

DigitizedCurve plotted(const ReconstructedArm &arm, double horizon) {
  DigitizedCurve curve = km_estimator(arm);
  if (curve.last_time() < horizon)
    curve.points.push_back({horizon, curve.points.back().survival});
  return curve;
}

} // namespace

KmRoundTrip km_round_trips(int exact_fixtures, int random_trials, std::uint64_t seed) {
  KmRoundTrip out;
  std::mt19937_64 rng(seed);
  const std::vector<double> cuts{0, 12, 24, 36, 48, 60};
  for (int f = 0; f < exact_fixtures; ++f) {
    std::exponential_distribution<double> event(0.02);
    ReconstructedArm truth;
    for (int i = 0; i < 50; ++i) {
      const double t = event(rng);
      (t <= 60.0 ? truth.event_times : truth.censor_times).push_back(std::min(t, 60.0));
    }
    const auto [rec, report] = reconstruct_arm(plotted(truth, 60.0), published_at_risk(truth, cuts));
    bool exact = rec.subjects() == truth.subjects() && report.max_abs_survival_error < 1e-9;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      exact = exact && count_in(rec.event_times, cuts[k], cuts[k + 1]) ==
                           count_in(truth.event_times, cuts[k], cuts[k + 1]);
    ++out.fixtures;
    out.exact_fixtures += exact;
  }

  std::uniform_int_distribution<int> size(30, 200);
  std::uniform_real_distribution<double> rate(0.005, 0.05), unit(0.0, 1.0);
  const double horizon = 72.0;
  std::vector<double> table_times;
  for (double r = 0.0; r <= horizon; r += 12.0)
    table_times.push_back(r);
  for (int trial = 0; trial < random_trials; ++trial) {
    const int n = size(rng);
    std::exponential_distribution<double> event(rate(rng));
    ReconstructedArm truth;
    for (int i = 0; i < n; ++i) {
      const double t = event(rng);
      const double end = std::min(std::max(1e-3, 2.0 * horizon * unit(rng)), horizon);
      (t <= end ? truth.event_times : truth.censor_times).push_back(std::min(t, end));
    }
    const DigitizedCurve curve = plotted(truth, horizon);
    const auto [rec, report] = reconstruct_arm(curve, published_at_risk(truth, table_times));
    ++out.random_trials;
    out.random_within += reconstruction_error(curve, km_estimator(rec)) < 0.02;
  }
  return out;
}

LikelihoodEquivalence likelihood_equivalence(int datasets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 0.5);
  const TimeGrid grid{0, 6, 12, 24, 36, 60};
  const int J = 5;
  LikelihoodEquivalence out;
  for (int rep = 0; rep < datasets; ++rep) {
    ReconstructedArm arms[2];
    arms[1].arm = Arm::Treated;
    for (auto &arm : arms) {
      const int n = 5 + static_cast<int>(60 * u(rng));
      for (int i = 0; i < n; ++i)
        (u(rng) < 0.6 ? arm.event_times : arm.censor_times).push_back(0.01 + 59.99 * u(rng));
    }
    VectorXd eta(J), beta(J);
    for (int j = 0; j < J; ++j) {
      eta[j] = -3.0 + z(rng);
      beta[j] = z(rng);
    }
    const double alpha = z(rng), mu = z(rng);
    PoissonCells cells = bin_to_cells(arms[0], Arm::Reference, grid);
    cells += bin_to_cells(arms[1], Arm::Treated, grid);
    const double aggregated = loglik_type1(cells, eta, beta, alpha, mu);

    // Poisson term per (subject, interval) pseudo-observation, and the
    // piecewise-exponential log density (events) or log survival (censored)
    double observations = 0.0, exact = 0.0, obs_const = 0.0;
    for (const auto &arm : arms) {
      const int x = arm.arm == Arm::Treated ? 1 : 0;
      auto visit = [&](double t, bool event) {
        double cum = 0.0;
        for (int j = 0; j < J && t > grid.lower(j); ++j) {
          const double e = std::min(t, grid.upper(j)) - grid.lower(j);
          const double log_rate = eta[j] + alpha + (mu + beta[j]) * x;
          const bool d = event && t <= grid.upper(j);
          observations += (d ? std::log(e) + log_rate : 0.0) - e * std::exp(log_rate);
          if (d) {
            obs_const += std::log(e);
            exact += log_rate;
          }
          cum += e * std::exp(log_rate);
        }
        exact -= cum;
      };
      for (double t : arm.event_times)
        visit(t, true);
      for (double t : arm.censor_times)
        visit(t, false);
    }
    double cell_const = 0.0;
    for (int j = 0; j < J; ++j)
      for (int x = 0; x < 2; ++x)
        if (cells.exposure(j, x) > 0.0)
          cell_const += cells.events(j, x) * std::log(cells.exposure(j, x));
    const double scale = std::max(1.0, std::abs(exact));
    out.max_cells_vs_observations =
        std::max(out.max_cells_vs_observations,
                 std::abs((aggregated - cell_const) - (observations - obs_const)) / scale);
    out.max_cells_vs_exact =
        std::max(out.max_cells_vs_exact, std::abs((aggregated - cell_const) - exact) / scale);
  }
  return out;
}

} // namespace support
