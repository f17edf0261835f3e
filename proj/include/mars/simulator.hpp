#pragma once

// Scenario generators for the two simulation cases, emulation of what each
// study publishes, and the replication harness computing operating
// characteristics for MARS and two comparators.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mars/comparators.hpp"
#include "mars/evidence.hpp"
#include "mars/mcmc.hpp"

namespace mars {

/// Cumulative baseline hazard rate * t^shape.
struct WeibullBaseline {
  double rate = 0.1;
  double shape = 0.5;

  double cumulative(double t) const { return rate * std::pow(t, shape); }
};

/// Study order after generation: the first `km` studies publish a KM plot
/// (the first `km_and_hr` of them also an HR), then the HR-only studies,
/// then the rate-only studies.
struct ReportingPartition {
  int km = 6;
  int hr = 6;
  int km_and_hr = 3;
  int rates = 4;

  int hr_only() const { return hr - km_and_hr; }
  int total() const { return km + hr_only() + rates; }
};

struct ScenarioConfig {
  int case_id = 1;
  int n_studies = 13;
  int min_size = 50;
  int max_size = 150;
  double follow_up_min = 80.0;
  double follow_up_max = 120.0;
  double follow_up_step = 5.0;
  double censoring_rate = 0.01;
  double treated_share = 0.55;
  double alpha_variance = 0.01;
  double mu_variance = 0.1;
  double log_hr = -0.6;                ///< case 1 constant effect
  WeibullBaseline baseline;            ///< case 1
  double case2_baseline_rate = 0.01;   ///< case 2
  ReportingPartition partition;
  TimeGrid grid = TimeGrid::equal_width(12.0, 120.0);
  /// Time at which rate studies report; default is the study's follow-up
  /// midpoint rounded to the nearest cutpoint.
  std::optional<double> rate_report_time;
  std::vector<double> report_times{12.0, 36.0, 60.0, 120.0};
  int replications = 1000;
  std::uint64_t seed = 0;
  /// Replications run concurrently; 0 picks the hardware concurrency.
  int n_threads = 0;
  bool run_ipd = true;
  bool run_ad = true;
  /// Also fit MARS with the rate-only studies removed.
  bool run_without_rates = false;
  SamplerConfig sampler;

  static ScenarioConfig case1();
  static ScenarioConfig case2();
  /// Throws ConfigError.
  void validate() const;
};

struct SimulatedStudy {
  std::string id;
  double follow_up = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  std::vector<double> time;
  std::vector<int> event; ///< 1 event, 0 censored
  std::vector<int> treated;

  /// Split into reference and treated arms.
  std::vector<ReconstructedArm> arms() const;
};

struct SimulatedTrials {
  std::vector<SimulatedStudy> studies;
};

/// Case 2 log hazard ratio 1 - 0.2^(t/30 - 1).
double case2_log_hr(double t);

/// Integral of exp(case2_log_hr) over [0, t], tabulated on a monthly grid and
/// refined by adaptive Gauss-Kronrod quadrature.
class Case2Integral {
public:
  explicit Case2Integral(double horizon = 200.0);
  double operator()(double t) const;
  /// Smallest t in [0, horizon] with value(t) = target; nullopt when the
  /// target exceeds value(horizon). Tolerance 1e-10 in time.
  std::optional<double> invert(double target) const;
  double horizon() const { return horizon_; }

private:
  double horizon_;
  std::vector<double> table_;
};

SimulatedTrials gen_case1(const ScenarioConfig &config, std::uint64_t seed);
SimulatedTrials gen_case2(const ScenarioConfig &config, std::uint64_t seed);
SimulatedTrials generate(const ScenarioConfig &config, std::uint64_t seed);

/// Piecewise-exponential known truth for sampler recovery checks.
struct PiecewiseTruth {
  TimeGrid grid;
  Eigen::VectorXd log_lambda;
  Eigen::VectorXd beta;
  int n_studies = 10;
  int study_size = 500;
  double alpha_variance = 0.01;
  double mu_variance = 0.01;
  double censoring_rate = 0.0;
  double treated_share = 0.5;
};
SimulatedTrials gen_piecewise(const PiecewiseTruth &truth, std::uint64_t seed);

/// Population-level truth of a scenario (study effects at zero).
double true_log_hr(const ScenarioConfig &config, double t);
double true_survival(const ScenarioConfig &config, double t, Arm arm);
double true_median(const ScenarioConfig &config, Arm arm);
double true_rmst(const ScenarioConfig &config, double tau, Arm arm);
/// Duration-weighted mean of the true log HR over the grid horizon.
double true_grand_log_hr(const ScenarioConfig &config);

struct EmulatedEvidence {
  Dataset mars;          ///< what the studies publish, one type each
  Dataset ipd;           ///< every study as exact individual data
  std::vector<LogHrEstimate> reported_hr; ///< every HR-reporting study
  std::vector<std::string> flags;
  int n_type1 = 0, n_type2 = 0, n_type3 = 0;
};

EmulatedEvidence emulate_reporting(const SimulatedTrials &trials,
                                   const ScenarioConfig &config);

/// Dataset with every rate-only study removed.
Dataset without_type3(const Dataset &dataset);

struct Estimate {
  std::string method; ///< MARS, MARS_I_II, IPD, AD
  std::string measure;
  double time = std::numeric_limits<double>::quiet_NaN();
  int arm = -1;
  double truth = 0.0;
  double value = 0.0;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool excluded = false;
  int reruns = 0;
  std::string note;
  std::vector<Estimate> estimates;
};

struct OperatingRow {
  std::string method;
  std::string measure;
  double time = std::numeric_limits<double>::quiet_NaN();
  int arm = -1;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  double coverage = 0.0;
  double interval_length = 0.0;
  int n = 0;
};

struct OperatingCharacteristics {
  std::vector<OperatingRow> rows;
  std::vector<ReplicationRecord> replications;
  int excluded = 0;
  double wall_seconds = 0.0;
  ReportingPartition partition;
  int n_type1 = 0, n_type2 = 0, n_type3 = 0; ///< evidence counts of replication 0

  const OperatingRow *find(const std::string &method, const std::string &measure,
                           double time = std::numeric_limits<double>::quiet_NaN(),
                           int arm = -1) const;
  bool failed() const;
};

/// Share of excluded replications that fails a batch.
inline constexpr double kMaxExcludedShare = 0.02;

/// One replication: generate, emulate, fit, summarize.
ReplicationRecord run_replication(const ScenarioConfig &config, int index);

OperatingCharacteristics aggregate(const ScenarioConfig &config,
                                   std::vector<ReplicationRecord> records);

/// All replications, parallel over replications; results ordered by index.
OperatingCharacteristics run_replications(const ScenarioConfig &config);

} // namespace mars
