#include "mars/evidence.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace mars {

namespace {
constexpr double kNearDegenerate = 1e-4;
}

std::string to_string(EvidenceType type) {
  switch (type) {
  case EvidenceType::Reconstructed:
    return "I";
  case EvidenceType::HazardRatio:
    return "II";
  case EvidenceType::SurvivalRate:
    return "III";
  }
  return "?";
}

bool Study::has(EvidenceType type) const {
  switch (type) {
  case EvidenceType::Reconstructed:
    for (const auto &a : arms)
      if (!a.empty())
        return true;
    return false;
  case EvidenceType::HazardRatio:
    return hazard_ratio.has_value();
  case EvidenceType::SurvivalRate:
    return !survival_rates.empty();
  }
  return false;
}

EvidenceType Study::classify() const {
  if (use) {
    if (!has(*use))
      throw ConfigError("study '" + id + "' requests type " + to_string(*use) +
                        " evidence it does not report");
    return *use;
  }
  for (auto t : {EvidenceType::Reconstructed, EvidenceType::HazardRatio,
                 EvidenceType::SurvivalRate})
    if (has(t))
      return t;
  throw ConfigError("study '" + id + "' has no usable evidence");
}

double normal_logpdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + z * z / variance);
}

PoissonCells bin_to_cells(const ReconstructedArm &arm_data, Arm arm,
                          const TimeGrid &grid) {
  PoissonCells cells(grid.intervals());
  const int col = arm_value(arm);
  auto add_exposure = [&](double t) {
    if (!(t > 0.0))
      throw DataError("subject time must be positive, got " + std::to_string(t));
    for (Eigen::Index j = 0; j < grid.intervals() && t > grid.lower(j); ++j)
      cells.exposure(j, col) += grid.overlap(j, t);
  };
  for (double t : arm_data.event_times) {
    add_exposure(t);
    if (t <= grid.horizon())
      cells.events(grid.interval_index(t), col) += 1.0;
  }
  for (double t : arm_data.censor_times)
    add_exposure(t);
  return cells;
}

double loglik_type1(const PoissonCells &cells, const Eigen::VectorXd &log_lambda,
                    const Eigen::VectorXd &beta, double alpha, double mu) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < cells.events.rows(); ++j) {
    for (int x = 0; x < 2; ++x) {
      const double d = cells.events(j, x);
      const double e = cells.exposure(j, x);
      if (e <= 0.0) {
        if (d > 0.0)
          return -std::numeric_limits<double>::infinity();
        continue;
      }
      const double log_m =
          std::log(e) + log_lambda[j] + alpha + (mu + beta[j]) * x;
      total += d * log_m - std::exp(log_m);
    }
  }
  return total;
}

double average_loghr(const Eigen::VectorXd &beta, double mu, double duration,
                     const TimeGrid &grid) {
  if (!(duration > 0.0) || duration > grid.horizon())
    throw DomainError("average_loghr: duration outside (0, t_J]");
  return mu + grid.exposure_profile(duration).dot(beta) / duration;
}

double loglik_type2(const HazardRatioRecord &rec, const Eigen::VectorXd &beta,
                    double mu, const TimeGrid &grid) {
  return normal_logpdf(rec.theta_hat, average_loghr(beta, mu, rec.duration, grid),
                       rec.se * rec.se);
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// logit(exp(-H)) computed without cancellation.
double logit_survival(double cum_hazard) {
  return -cum_hazard - std::log(-std::expm1(-cum_hazard));
}

double rate_variance(const SurvivalRateRecord &rec) {
  const double s = rec.s_hat;
  return rec.se * rec.se / (s * s * (1.0 - s) * (1.0 - s));
}

double type3_cum_hazard(const Eigen::VectorXd &exposure,
                        const Eigen::VectorXd &log_lambda,
                        const Eigen::VectorXd &beta, double alpha, double mu,
                        Arm arm) {
  const int x = arm_value(arm);
  return (exposure.array() *
          (log_lambda.array() + alpha + (mu + beta.array()) * x).exp())
      .sum();
}

void check_rate(const SurvivalRateRecord &rec, const TimeGrid &grid,
                const std::string &id) {
  if (!(rec.s_hat > 0.0 && rec.s_hat < 1.0))
    throw DataError("study '" + id + "': survival rate must lie strictly in (0,1)");
  if (!(rec.se > 0.0))
    throw DataError("study '" + id + "': survival-rate SE must be positive");
  if (!(rec.time > 0.0) || rec.time > grid.horizon())
    throw DataError("study '" + id + "': survival-rate time outside (0, t_J]");
}

} // namespace

double loglik_type3(const SurvivalRateRecord &rec,
                    const Eigen::VectorXd &log_lambda,
                    const Eigen::VectorXd &beta, double alpha, double mu,
                    const TimeGrid &grid) {
  check_rate(rec, grid, "");
  const double H = type3_cum_hazard(grid.exposure_profile(rec.time), log_lambda,
                                    beta, alpha, mu, rec.arm);
  return normal_logpdf(logit(rec.s_hat), logit_survival(H), rate_variance(rec));
}

ModelData prepare(const Dataset &dataset, const TimeGrid &grid) {
  ModelData data;
  data.grid = grid;
  std::set<std::string> seen;
  for (const Study &study : dataset.studies) {
    if (!seen.insert(study.id).second)
      throw ConfigError("duplicate study id '" + study.id + "'");
    switch (study.classify()) {
    case EvidenceType::Reconstructed: {
      ModelData::TypeOne t1{study.id, -1, -1, PoissonCells(grid.intervals())};
      std::set<int> arms_seen;
      for (const auto &arm : study.arms) {
        if (!arms_seen.insert(arm_value(arm.arm)).second)
          throw DataError("study '" + study.id + "' repeats an arm");
        t1.cells += bin_to_cells(arm, arm.arm, grid);
      }
      t1.alpha = static_cast<int>(data.alpha_ids.size());
      data.alpha_ids.push_back(study.id);
      if (t1.cells.exposure.col(1).sum() > 0.0) {
        t1.mu = static_cast<int>(data.mu_ids.size());
        data.mu_ids.push_back(study.id);
      }
      data.type1.push_back(std::move(t1));
      break;
    }
    case EvidenceType::HazardRatio: {
      const HazardRatioRecord &rec = *study.hazard_ratio;
      if (!(rec.se > 0.0))
        throw DataError("study '" + study.id + "': HR standard error must be positive");
      if (!(rec.duration > 0.0) || rec.duration > grid.horizon())
        throw DataError("study '" + study.id + "': HR duration outside (0, t_J]");
      ModelData::TypeTwo t2{study.id, static_cast<int>(data.mu_ids.size()), rec,
                            grid.exposure_profile(rec.duration) / rec.duration};
      data.mu_ids.push_back(study.id);
      data.type2.push_back(std::move(t2));
      break;
    }
    case EvidenceType::SurvivalRate: {
      const int alpha = static_cast<int>(data.alpha_ids.size());
      data.alpha_ids.push_back(study.id);
      int mu = -1;
      for (const auto &rec : study.survival_rates)
        if (rec.arm == Arm::Treated)
          mu = static_cast<int>(data.mu_ids.size());
      if (mu >= 0)
        data.mu_ids.push_back(study.id);
      for (const auto &rec : study.survival_rates) {
        check_rate(rec, grid, study.id);
        data.type3.push_back({study.id, alpha, rec.arm == Arm::Treated ? mu : -1,
                              rec, grid.exposure_profile(rec.time),
                              logit(rec.s_hat), rate_variance(rec)});
      }
      break;
    }
    }
  }
  return data;
}

double total_loglik(const ModelData &data, const ModelParameters &p) {
  double total = 0.0;
  auto effect = [](const Eigen::VectorXd &v, int idx) {
    return idx >= 0 ? v[idx] : 0.0;
  };
  for (const auto &s : data.type1)
    total += loglik_type1(s.cells, p.log_lambda, p.beta, effect(p.alpha, s.alpha),
                          effect(p.mu, s.mu));
  for (const auto &s : data.type2)
    total += normal_logpdf(s.record.theta_hat,
                           effect(p.mu, s.mu) + s.weights.dot(p.beta),
                           s.record.se * s.record.se);
  for (const auto &s : data.type3) {
    const double H = type3_cum_hazard(s.exposure, p.log_lambda, p.beta,
                                      effect(p.alpha, s.alpha),
                                      effect(p.mu, s.mu), s.record.arm);
    total += normal_logpdf(s.logit_observed, logit_survival(H), s.variance);
  }
  return total;
}

std::vector<Violation> validate_dataset(const Dataset &dataset,
                                        const TimeGrid &grid) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const Study &study : dataset.studies) {
    const std::string &id = study.id;
    if (!seen.insert(id).second)
      out.push_back({id, "duplicate-id", "study id appears more than once"});
    try {
      study.classify();
    } catch (const ConfigError &e) {
      out.push_back({id, "unclassified", e.what()});
    }
    std::set<int> arms_seen;
    for (const auto &arm : study.arms) {
      if (!arms_seen.insert(arm_value(arm.arm)).second)
        out.push_back({id, "arm-coding", "arm listed twice"});
      for (const auto *times : {&arm.event_times, &arm.censor_times})
        for (double t : *times)
          if (!(t > 0.0) || !std::isfinite(t)) {
            out.push_back({id, "range", "non-positive subject time"});
            break;
          }
    }
    if (study.hazard_ratio) {
      const auto &hr = *study.hazard_ratio;
      if (!(hr.se > 0.0))
        out.push_back({id, "standard-error", "HR standard error must be positive"});
      if (!(hr.duration > 0.0) || hr.duration > grid.horizon())
        out.push_back({id, "range", "HR duration " + std::to_string(hr.duration) +
                                        " outside (0, t_J]"});
    }
    for (const auto &r : study.survival_rates) {
      if (!(r.s_hat > 0.0 && r.s_hat < 1.0))
        out.push_back({id, "degenerate-rate",
                       "survival rate " + std::to_string(r.s_hat) +
                           " must lie strictly inside (0,1)"});
      if (!(r.se > 0.0))
        out.push_back({id, "standard-error", "survival-rate SE must be positive"});
      if (!(r.time > 0.0) || r.time > grid.horizon())
        out.push_back({id, "range", "survival-rate time outside (0, t_J]"});
    }
  }
  return out;
}

/// Near-boundary survival rates are accepted but worth a warning.
std::vector<Violation> dataset_warnings(const Dataset &dataset) {
  std::vector<Violation> out;
  for (const Study &study : dataset.studies)
    for (const auto &r : study.survival_rates)
      if (r.s_hat > 0.0 && r.s_hat < 1.0 &&
          (r.s_hat < kNearDegenerate || r.s_hat > 1.0 - kNearDegenerate))
        out.push_back({study.id, "near-degenerate-rate",
                       "survival rate " + std::to_string(r.s_hat) +
                           " is within 1e-4 of the boundary"});
  return out;
}

} // namespace mars
