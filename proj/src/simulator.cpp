#include "mars/simulator.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <thread>
#include <tuple>

#include "mars/summaries.hpp"

namespace mars {

namespace {

using boost::math::quadrature::gauss_kronrod;

template <typename F> double integrate(F f, double a, double b) {
  if (b <= a)
    return 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

const Case2Integral &case2_integral() {
  static const Case2Integral g(400.0);
  return g;
}

struct StudyDraw {
  int n;
  double follow_up;
  double alpha;
  double mu;
};

StudyDraw draw_study(const ScenarioConfig &c, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> size(c.min_size, c.max_size);
  const int steps =
      static_cast<int>(std::lround((c.follow_up_max - c.follow_up_min) / c.follow_up_step));
  std::uniform_int_distribution<int> fu(0, steps);
  std::normal_distribution<double> z(0.0, 1.0);
  StudyDraw d{};
  d.n = size(rng);
  d.follow_up = c.follow_up_min + c.follow_up_step * fu(rng);
  d.alpha = std::sqrt(c.alpha_variance) * z(rng);
  d.mu = std::sqrt(c.mu_variance) * z(rng);
  return d;
}

// event_time(x, alpha, mu, unit exponential) -> latent event time
template <typename EventTime>
SimulatedTrials generate_with(const ScenarioConfig &c, std::uint64_t seed,
                              EventTime event_time) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution treat(c.treated_share);
  std::exponential_distribution<double> unit(1.0);
  SimulatedTrials out;
  out.studies.reserve(static_cast<std::size_t>(c.n_studies));
  for (int k = 0; k < c.n_studies; ++k) {
    const StudyDraw d = draw_study(c, rng);
    SimulatedStudy s;
    s.id = "S" + std::to_string(k + 1);
    s.follow_up = d.follow_up;
    s.alpha = d.alpha;
    s.mu = d.mu;
    for (int i = 0; i < d.n; ++i) {
      const int x = treat(rng) ? 1 : 0;
      double t = event_time(x, d.alpha, d.mu, unit(rng));
      double cens = c.censoring_rate > 0.0
                        ? unit(rng) / c.censoring_rate
                        : std::numeric_limits<double>::infinity();
      t = std::max(t, 1e-9);
      cens = std::max(cens, 1e-9);
      const double end = std::min(cens, d.follow_up);
      s.treated.push_back(x);
      if (t <= end) {
        s.time.push_back(t);
        s.event.push_back(1);
      } else {
        s.time.push_back(end);
        s.event.push_back(0);
      }
    }
    out.studies.push_back(std::move(s));
  }
  return out;
}

double step_ase(const TimeGrid &grid, const Eigen::VectorXd &steps,
                const ScenarioConfig &c) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < grid.intervals(); ++j) {
    const double v = steps[j];
    total += integrate(
        [&](double t) {
          const double e = v - true_log_hr(c, t);
          return e * e;
        },
        grid.lower(j), grid.upper(j));
  }
  return total / grid.horizon();
}

struct GatedFit {
  std::optional<FitResult> result;
  int reruns = 0;
};

GatedFit gated_fit(const Dataset &dataset, const TimeGrid &grid,
                   SamplerConfig sampler) {
  const ModelData data = prepare(dataset, grid);
  sampler.n_threads = 1;
  GatedFit out;
  FitResult first = fit(data, sampler);
  if (first.diagnostics.converged) {
    out.result = std::move(first);
    return out;
  }
  out.reruns = 1;
  sampler.n_iter *= 2;
  sampler.n_burnin *= 2;
  FitResult second = fit(data, sampler);
  if (second.diagnostics.converged)
    out.result = std::move(second);
  return out;
}

void add_fit_estimates(const std::string &method, const PosteriorDraws &draws,
                       const ScenarioConfig &c, std::vector<Estimate> &out) {
  const Eigen::VectorXd grand = grand_log_hr_draws(draws);
  std::vector<double> g(grand.data(), grand.data() + grand.size());
  const Moments m = summarize(g);
  out.push_back({method, "log_hr", std::numeric_limits<double>::quiet_NaN(), -1,
                 true_grand_log_hr(c), m.mean, m.sd * m.sd, m.lower, m.upper});

  if (c.case_id == 2) {
    const Eigen::Index J = draws.intervals();
    Eigen::VectorXd steps = Eigen::VectorXd::Zero(J);
    const Eigen::Index c0 = draws.column("mu_0");
    for (Eigen::Index r = 0; r < draws.size(); ++r)
      steps += draws.beta(r) + Eigen::VectorXd::Constant(J, draws.values(r, c0));
    steps /= static_cast<double>(draws.size());
    const double ase = step_ase(draws.grid, steps, c);
    out.push_back({method, "ase_log_hr", std::numeric_limits<double>::quiet_NaN(),
                   -1, 0.0, ase, 0.0, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN()});
  }

  for (Arm arm : {Arm::Reference, Arm::Treated}) {
    const int a = arm_value(arm);
    for (const SummaryRow &row : posterior_survival_curve(draws, arm, c.report_times))
      out.push_back({method, "survival", row.time, a, true_survival(c, row.time, arm),
                     row.mean, row.sd * row.sd, row.lower, row.upper});
    const SummaryRow med = posterior_median_survival(draws, arm);
    if (med.status == "ok")
      out.push_back({method, "median", std::numeric_limits<double>::quiet_NaN(), a,
                     true_median(c, arm), med.mean, med.sd * med.sd, med.lower,
                     med.upper});
  }
  for (const SummaryRow &row : posterior_rmst(draws, Arm::Reference, c.report_times)) {
    if (row.measure == "rmst")
      out.push_back({method, "rmst", row.time, row.arm,
                     true_rmst(c, row.time, Arm::Reference), row.mean,
                     row.sd * row.sd, row.lower, row.upper});
  }
  for (const SummaryRow &row : posterior_rmst(draws, Arm::Treated, c.report_times)) {
    const double truth = row.measure == "rmst"
                             ? true_rmst(c, row.time, Arm::Treated)
                             : true_rmst(c, row.time, Arm::Treated) -
                                   true_rmst(c, row.time, Arm::Reference);
    out.push_back({method, row.measure, row.time, row.arm, truth, row.mean,
                   row.sd * row.sd, row.lower, row.upper});
  }
}

bool same_key(const Estimate &e, const OperatingRow &r) {
  const bool same_time =
      (std::isnan(e.time) && std::isnan(r.time)) || e.time == r.time;
  return e.method == r.method && e.measure == r.measure && same_time &&
         e.arm == r.arm;
}

} // namespace

ScenarioConfig ScenarioConfig::case1() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::case2() {
  ScenarioConfig c;
  c.case_id = 2;
  c.n_studies = 20;
  c.partition = {9, 12, 5, 4};
  return c;
}

void ScenarioConfig::validate() const {
  if (case_id != 1 && case_id != 2)
    throw ConfigError("scenario case must be 1 or 2");
  if (n_studies < 1)
    throw ConfigError("n_studies must be positive");
  if (min_size < 1 || max_size < min_size)
    throw ConfigError("size range is empty");
  if (!(follow_up_min > 0.0) || follow_up_max < follow_up_min ||
      !(follow_up_step > 0.0))
    throw ConfigError("follow-up range is empty");
  if (follow_up_max > grid.horizon() + 1e-9)
    throw ConfigError("follow-up exceeds the grid horizon");
  if (censoring_rate < 0.0)
    throw ConfigError("censoring rate must be non-negative");
  if (!(treated_share > 0.0 && treated_share < 1.0))
    throw ConfigError("treated share must be in (0, 1)");
  if (alpha_variance < 0.0 || mu_variance < 0.0)
    throw ConfigError("study-effect variances must be non-negative");
  const ReportingPartition &p = partition;
  if (p.km < 0 || p.hr < 0 || p.rates < 0 || p.km_and_hr < 0 ||
      p.km_and_hr > std::min(p.km, p.hr))
    throw ConfigError("reporting partition counts are inconsistent");
  if (p.total() != n_studies)
    throw ConfigError("reporting partition covers " + std::to_string(p.total()) +
                      " studies, n_studies is " + std::to_string(n_studies));
  if (replications < 1)
    throw ConfigError("replications must be positive");
  if (rate_report_time && !(*rate_report_time > 0.0 &&
                            *rate_report_time <= grid.horizon()))
    throw ConfigError("rate report time outside the grid");
  for (double t : report_times)
    if (!(t > 0.0) || t > grid.horizon())
      throw ConfigError("report time outside the grid");
  sampler.validate();
}

std::vector<ReconstructedArm> SimulatedStudy::arms() const {
  std::vector<ReconstructedArm> out(2);
  out[0].arm = Arm::Reference;
  out[1].arm = Arm::Treated;
  for (std::size_t i = 0; i < time.size(); ++i) {
    auto &arm = out[static_cast<std::size_t>(treated[i])];
    (event[i] ? arm.event_times : arm.censor_times).push_back(time[i]);
  }
  return out;
}

double case2_log_hr(double t) { return 1.0 - std::pow(0.2, t / 30.0 - 1.0); }

Case2Integral::Case2Integral(double horizon) : horizon_(horizon) {
  const int n = static_cast<int>(std::ceil(horizon));
  table_.assign(static_cast<std::size_t>(n) + 1, 0.0);
  auto f = [](double u) { return std::exp(case2_log_hr(u)); };
  for (int i = 0; i < n; ++i)
    table_[i + 1] = table_[i] + gauss_kronrod<double, 15>::integrate(
                                    f, i, std::min<double>(i + 1, horizon), 10, 1e-14);
}

double Case2Integral::operator()(double t) const {
  if (!(t >= 0.0) || t > horizon_)
    throw DomainError("Case2Integral: t outside [0, horizon]");
  const auto i = static_cast<std::size_t>(std::min(std::floor(t), double(table_.size() - 1)));
  if (t == static_cast<double>(i))
    return table_[i];
  return table_[i] + gauss_kronrod<double, 15>::integrate(
                         [](double u) { return std::exp(case2_log_hr(u)); },
                         static_cast<double>(i), t, 10, 1e-14);
}

std::optional<double> Case2Integral::invert(double target) const {
  if (target < 0.0)
    throw DomainError("Case2Integral::invert: negative target");
  if (target > table_.back())
    return std::nullopt;
  if (target == 0.0)
    return 0.0;
  const auto it = std::lower_bound(table_.begin(), table_.end(), target);
  const auto hi = static_cast<std::size_t>(it - table_.begin());
  const double a = static_cast<double>(hi - 1);
  const double b = std::min(static_cast<double>(hi), horizon_);
  auto f = [&](double t) { return (*this)(t) - target; };
  const double fa = f(a), fb = f(b);
  if (fa > 0.0 || fb < 0.0)
    throw std::logic_error("Case2Integral::invert: root not bracketed");
  if (fb == 0.0)
    return b;
  std::uintmax_t iters = 200;
  const auto [lo, up] = boost::math::tools::toms748_solve(
      f, a, b, fa, fb, [](double l, double u) { return u - l < 1e-10; }, iters);
  return 0.5 * (lo + up);
}

SimulatedTrials gen_case1(const ScenarioConfig &c, std::uint64_t seed) {
  if (c.case_id != 1)
    throw ConfigError("gen_case1 needs a case 1 scenario");
  return generate_with(c, seed, [&](int x, double alpha, double mu, double e) {
    const double scale = c.baseline.rate * std::exp(alpha + (mu + c.log_hr) * x);
    return std::pow(e / scale, 1.0 / c.baseline.shape);
  });
}

SimulatedTrials gen_case2(const ScenarioConfig &c, std::uint64_t seed) {
  if (c.case_id != 2)
    throw ConfigError("gen_case2 needs a case 2 scenario");
  const Case2Integral &g = case2_integral();
  return generate_with(c, seed, [&](int x, double alpha, double mu, double e) {
    const double scaled = e / (c.case2_baseline_rate * std::exp(alpha));
    if (x == 0)
      return scaled;
    const auto t = g.invert(scaled / std::exp(mu));
    return t ? *t : std::numeric_limits<double>::infinity();
  });
}

SimulatedTrials generate(const ScenarioConfig &c, std::uint64_t seed) {
  return c.case_id == 1 ? gen_case1(c, seed) : gen_case2(c, seed);
}

SimulatedTrials gen_piecewise(const PiecewiseTruth &truth, std::uint64_t seed) {
  const TimeGrid &g = truth.grid;
  if (truth.log_lambda.size() != g.intervals() || truth.beta.size() != g.intervals())
    throw ConfigError("piecewise truth: parameter length != intervals");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution treat(truth.treated_share);
  std::exponential_distribution<double> unit(1.0);
  SimulatedTrials out;
  for (int k = 0; k < truth.n_studies; ++k) {
    SimulatedStudy s;
    s.id = "P" + std::to_string(k + 1);
    s.follow_up = g.horizon();
    s.alpha = std::sqrt(truth.alpha_variance) * z(rng);
    s.mu = std::sqrt(truth.mu_variance) * z(rng);
    for (int i = 0; i < truth.study_size; ++i) {
      const int x = treat(rng) ? 1 : 0;
      double remaining = unit(rng);
      double t = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < g.intervals(); ++j) {
        const double rate = std::exp(truth.log_lambda[j] + s.alpha +
                                     (truth.beta[j] + s.mu) * x);
        const double h = rate * g.width(j);
        if (remaining <= h) {
          t = g.lower(j) + remaining / rate;
          break;
        }
        remaining -= h;
      }
      double end = g.horizon();
      if (truth.censoring_rate > 0.0)
        end = std::min(end, unit(rng) / truth.censoring_rate);
      s.treated.push_back(x);
      if (t <= end) {
        s.time.push_back(std::max(t, 1e-9));
        s.event.push_back(1);
      } else {
        s.time.push_back(end);
        s.event.push_back(0);
      }
    }
    out.studies.push_back(std::move(s));
  }
  return out;
}

double true_log_hr(const ScenarioConfig &c, double t) {
  return c.case_id == 1 ? c.log_hr : case2_log_hr(t);
}

double true_survival(const ScenarioConfig &c, double t, Arm arm) {
  if (t < 0.0)
    throw DomainError("true_survival: negative time");
  const int x = arm_value(arm);
  if (c.case_id == 1)
    return std::exp(-c.baseline.cumulative(t) * std::exp(c.log_hr * x));
  const double h = x == 0 ? t : case2_integral()(t);
  return std::exp(-c.case2_baseline_rate * h);
}

double true_median(const ScenarioConfig &c, Arm arm) {
  const int x = arm_value(arm);
  if (c.case_id == 1)
    return std::pow(std::numbers::ln2 / (c.baseline.rate * std::exp(c.log_hr * x)),
                    1.0 / c.baseline.shape);
  const double target = std::numbers::ln2 / c.case2_baseline_rate;
  if (x == 0)
    return target;
  const auto t = case2_integral().invert(target);
  return t ? *t : std::numeric_limits<double>::infinity();
}

double true_rmst(const ScenarioConfig &c, double tau, Arm arm) {
  return integrate([&](double t) { return true_survival(c, t, arm); }, 0.0, tau);
}

double true_grand_log_hr(const ScenarioConfig &c) {
  if (c.case_id == 1)
    return c.log_hr;
  const TimeGrid &g = c.grid;
  return integrate([](double t) { return case2_log_hr(t); }, 0.0, g.horizon()) /
         g.horizon();
}

EmulatedEvidence emulate_reporting(const SimulatedTrials &trials,
                                   const ScenarioConfig &c) {
  const ReportingPartition &p = c.partition;
  if (static_cast<int>(trials.studies.size()) != p.total())
    throw ConfigError("partition does not match the number of studies");
  EmulatedEvidence out;
  const TimeGrid &g = c.grid;
  for (int k = 0; k < p.total(); ++k) {
    const SimulatedStudy &s = trials.studies[static_cast<std::size_t>(k)];
    const std::vector<ReconstructedArm> arms = s.arms();
    Study ipd;
    ipd.id = s.id;
    ipd.arms = arms;
    out.ipd.studies.push_back(ipd);

    const bool km = k < p.km;
    const bool hr = k < p.km_and_hr || (k >= p.km && k < p.km + p.hr_only());
    Study pub;
    pub.id = s.id;
    if (km)
      pub.arms = arms;
    if (hr) {
      PoissonCells cells = bin_to_cells(arms[0], Arm::Reference, g);
      cells += bin_to_cells(arms[1], Arm::Treated, g);
      const LogHrEstimate e = piecewise_exponential_hr(cells);
      if (e.continuity_corrected)
        out.flags.push_back(s.id + ": zero events in one arm, continuity-corrected HR");
      out.reported_hr.push_back(e);
      pub.hazard_ratio = HazardRatioRecord{e.theta, e.se, s.follow_up};
    }
    if (!km && !hr) {
      double t_report = 0.0;
      if (c.rate_report_time) {
        t_report = *c.rate_report_time;
      } else {
        const Eigen::VectorXd &cut = g.cutpoints();
        Eigen::Index best = 1;
        for (Eigen::Index i = 1; i < cut.size(); ++i)
          if (std::abs(cut[i] - s.follow_up / 2) < std::abs(cut[best] - s.follow_up / 2))
            best = i;
        t_report = cut[best];
      }
      for (const ReconstructedArm &arm : arms) {
        const KaplanMeierPoint km_point = kaplan_meier_at(arm, t_report);
        if (km_point.survival >= 1.0 || km_point.survival <= 0.0 || !(km_point.se > 0.0)) {
          out.flags.push_back(s.id + ": degenerate survival rate in arm " +
                              std::to_string(arm_value(arm.arm)) + ", excluded");
          continue;
        }
        pub.survival_rates.push_back({t_report, arm.arm, km_point.survival, km_point.se});
      }
      if (pub.survival_rates.empty()) {
        out.flags.push_back(s.id + ": no usable evidence, study dropped");
        continue;
      }
    }
    switch (pub.classify()) {
    case EvidenceType::Reconstructed: ++out.n_type1; break;
    case EvidenceType::HazardRatio: ++out.n_type2; break;
    case EvidenceType::SurvivalRate: ++out.n_type3; break;
    }
    out.mars.studies.push_back(std::move(pub));
  }
  return out;
}

Dataset without_type3(const Dataset &dataset) {
  Dataset out;
  for (const Study &s : dataset.studies)
    if (s.classify() != EvidenceType::SurvivalRate)
      out.studies.push_back(s);
  return out;
}

ReplicationRecord run_replication(const ScenarioConfig &c, int index) {
  ReplicationRecord rec;
  rec.index = index;
  rec.seed = chain_seed(c.seed, static_cast<std::uint64_t>(index));
  try {
    const SimulatedTrials trials = generate(c, rec.seed);
    const EmulatedEvidence ev = emulate_reporting(trials, c);
    for (const auto &f : ev.flags)
      rec.note += (rec.note.empty() ? "" : "; ") + f;

    auto run = [&](const std::string &method, const Dataset &data,
                   std::uint64_t stream) {
      SamplerConfig s = c.sampler;
      s.seed = chain_seed(rec.seed, stream);
      GatedFit f = gated_fit(data, c.grid, s);
      rec.reruns += f.reruns;
      if (!f.result) {
        rec.excluded = true;
        rec.note += (rec.note.empty() ? "" : "; ") + method + " failed the convergence gate";
        return;
      }
      add_fit_estimates(method, f.result->draws, c, rec.estimates);
    };
    run("MARS", ev.mars, 1);
    if (c.run_without_rates)
      run("MARS_I_II", without_type3(ev.mars), 2);
    if (c.run_ipd)
      run("IPD", ev.ipd, 3);
    if (c.run_ad && !ev.reported_hr.empty()) {
      const RandomEffectsResult ad = dersimonian_laird(ev.reported_hr);
      rec.estimates.push_back({"AD", "log_hr", std::numeric_limits<double>::quiet_NaN(),
                               -1, true_grand_log_hr(c), ad.mean, ad.se * ad.se,
                               ad.lower, ad.upper});
      if (c.case_id == 2)
        rec.estimates.push_back(
            {"AD", "ase_log_hr", std::numeric_limits<double>::quiet_NaN(), -1, 0.0,
             step_ase(c.grid, Eigen::VectorXd::Constant(c.grid.intervals(), ad.mean), c),
             0.0, std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()});
    }
  } catch (const std::exception &e) {
    rec.excluded = true;
    rec.note += (rec.note.empty() ? "" : "; ") + std::string(e.what());
  }
  if (rec.excluded)
    rec.estimates.clear();
  return rec;
}

OperatingCharacteristics aggregate(const ScenarioConfig &c,
                                   std::vector<ReplicationRecord> records) {
  OperatingCharacteristics oc;
  oc.partition = c.partition;
  std::vector<std::vector<const Estimate *>> groups;
  for (const ReplicationRecord &r : records) {
    if (r.excluded) {
      ++oc.excluded;
      continue;
    }
    for (const Estimate &e : r.estimates) {
      auto it = std::find_if(oc.rows.begin(), oc.rows.end(),
                             [&](const OperatingRow &row) { return same_key(e, row); });
      if (it == oc.rows.end()) {
        OperatingRow row;
        row.method = e.method;
        row.measure = e.measure;
        row.time = e.time;
        row.arm = e.arm;
        row.truth = e.truth;
        oc.rows.push_back(row);
        groups.emplace_back();
        it = oc.rows.end() - 1;
      }
      groups[static_cast<std::size_t>(it - oc.rows.begin())].push_back(&e);
    }
  }
  for (std::size_t i = 0; i < oc.rows.size(); ++i) {
    OperatingRow &row = oc.rows[i];
    const auto &g = groups[i];
    const double n = static_cast<double>(g.size());
    row.n = static_cast<int>(g.size());
    double sum = 0.0, se = 0.0, covered = 0.0, length = 0.0;
    int with_interval = 0;
    for (const Estimate *e : g) {
      sum += e->value;
      se += (e->value - e->truth) * (e->value - e->truth);
      if (!std::isnan(e->lower)) {
        ++with_interval;
        covered += (e->lower <= e->truth && e->truth <= e->upper) ? 1.0 : 0.0;
        length += e->upper - e->lower;
      }
    }
    row.mean = sum / n;
    double ss = 0.0;
    for (const Estimate *e : g)
      ss += (e->value - row.mean) * (e->value - row.mean);
    row.sd = g.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.mse = se / n;
    row.coverage = with_interval ? covered / with_interval
                                 : std::numeric_limits<double>::quiet_NaN();
    row.interval_length = with_interval ? length / with_interval
                                        : std::numeric_limits<double>::quiet_NaN();
  }
  oc.replications = std::move(records);
  return oc;
}

const OperatingRow *OperatingCharacteristics::find(const std::string &method,
                                                   const std::string &measure,
                                                   double time, int arm) const {
  Estimate key{method, measure, time, arm};
  for (const OperatingRow &r : rows)
    if (same_key(key, r))
      return &r;
  return nullptr;
}

bool OperatingCharacteristics::failed() const {
  const double n = static_cast<double>(replications.size());
  return excluded > kMaxExcludedShare * n;
}

OperatingCharacteristics run_replications(const ScenarioConfig &c) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<ReplicationRecord> records(static_cast<std::size_t>(c.replications));
  int threads = c.n_threads > 0 ? c.n_threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, c.replications);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < c.replications; i = next++)
      records[static_cast<std::size_t>(i)] = run_replication(c, i);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto &t : pool)
      t.join();
  }
  OperatingCharacteristics oc = aggregate(c, std::move(records));
  if (!oc.replications.empty()) {
    const EmulatedEvidence ev = emulate_reporting(generate(c, oc.replications[0].seed), c);
    oc.n_type1 = ev.n_type1;
    oc.n_type2 = ev.n_type2;
    oc.n_type3 = ev.n_type3;
  }
  oc.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return oc;
}

} // namespace mars
