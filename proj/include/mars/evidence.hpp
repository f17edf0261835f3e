#pragma once

// Study evidence of the three aggregate-data types and the log-likelihood of
// the multilevel piecewise-exponential model built from them.

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "mars/km_reconstruct.hpp"
#include "mars/parameters.hpp"
#include "mars/time_grid.hpp"

namespace mars {

enum class EvidenceType : int {
  Reconstructed = 1, ///< type I: pseudo-IPD from a KM curve
  HazardRatio = 2,   ///< type II: reported log HR with SE and duration
  SurvivalRate = 3   ///< type III: reported survival rates with SE
};

std::string to_string(EvidenceType type);

struct HazardRatioRecord {
  double theta_hat = 0.0; ///< log HR, treated vs reference
  double se = 1.0;
  double duration = 0.0; ///< months of follow-up the HR summarizes
};

struct SurvivalRateRecord {
  double time = 0.0;
  Arm arm = Arm::Reference;
  double s_hat = 0.5;
  double se = 0.1;
};

/// A study may report several evidence types; exactly one is used.
struct Study {
  std::string id;
  std::vector<ReconstructedArm> arms;
  std::optional<HazardRatioRecord> hazard_ratio;
  std::vector<SurvivalRateRecord> survival_rates;
  std::optional<EvidenceType> use; ///< overrides the I > II > III precedence

  bool has(EvidenceType type) const;
  /// Throws ConfigError when the study carries no usable evidence or the
  /// override names a type the study does not have.
  EvidenceType classify() const;
};

struct Dataset {
  std::vector<Study> studies;
};

/// Sufficient statistics of the pseudo-observation Poisson model:
/// events and exposure per (interval, arm).
struct PoissonCells {
  using Table = Eigen::Array<double, Eigen::Dynamic, 2>;
  Table events;
  Table exposure;

  PoissonCells() = default;
  explicit PoissonCells(Eigen::Index intervals)
      : events(Table::Zero(intervals, 2)), exposure(Table::Zero(intervals, 2)) {}

  PoissonCells &operator+=(const PoissonCells &other) {
    events += other.events;
    exposure += other.exposure;
    return *this;
  }
};

PoissonCells bin_to_cells(const ReconstructedArm &arm_data, Arm arm,
                          const TimeGrid &grid);

/// Dataset bound to a grid: studies classified, cells aggregated, study
/// effects indexed.
struct ModelData {
  struct TypeOne {
    std::string id;
    int alpha = -1;
    int mu = -1; ///< -1 when only the reference arm was reported
    PoissonCells cells;
  };
  struct TypeTwo {
    std::string id;
    int mu = -1;
    HazardRatioRecord record;
    Eigen::VectorXd weights; ///< |I_j intersect (0, T]| / T
  };
  struct TypeThree {
    std::string id;
    int alpha = -1;
    int mu = -1;
    SurvivalRateRecord record;
    Eigen::VectorXd exposure; ///< |I_j intersect (0, t]|
    double logit_observed = 0.0;
    double variance = 1.0; ///< se^2 / (s^2 (1 - s)^2)
  };

  TimeGrid grid;
  std::vector<std::string> alpha_ids;
  std::vector<std::string> mu_ids;
  std::vector<TypeOne> type1;
  std::vector<TypeTwo> type2;
  std::vector<TypeThree> type3;

  Eigen::Index intervals() const { return grid.intervals(); }
  std::size_t studies() const { return type1.size() + type2.size() + type3.size(); }
};

/// Classify, validate and aggregate. Throws ConfigError / DataError.
ModelData prepare(const Dataset &dataset, const TimeGrid &grid);

double loglik_type1(const PoissonCells &cells, const Eigen::VectorXd &log_lambda,
                    const Eigen::VectorXd &beta, double alpha, double mu);

/// Duration-weighted average log HR over (0, duration].
double average_loghr(const Eigen::VectorXd &beta, double mu, double duration,
                     const TimeGrid &grid);

double loglik_type2(const HazardRatioRecord &rec, const Eigen::VectorXd &beta,
                    double mu, const TimeGrid &grid);

double loglik_type3(const SurvivalRateRecord &rec,
                    const Eigen::VectorXd &log_lambda,
                    const Eigen::VectorXd &beta, double alpha, double mu,
                    const TimeGrid &grid);

double total_loglik(const ModelData &data, const ModelParameters &params);

double normal_logpdf(double x, double mean, double variance);

/// Entry point used by validation: all rule violations of a dataset.
struct Violation {
  std::string study_id;
  std::string rule;
  std::string message;
};
std::vector<Violation> validate_dataset(const Dataset &dataset,
                                        const TimeGrid &grid);

/// Accepted-but-flagged conditions (survival rates within 1e-4 of 0 or 1).
std::vector<Violation> dataset_warnings(const Dataset &dataset);
} // namespace mars
