#pragma once

// Study-level estimators used to emulate published summaries and the
// conventional aggregate-data comparator.

#include <span>
#include <vector>

#include "mars/evidence.hpp"

namespace mars {

struct LogHrEstimate {
  double theta = 0.0;
  double se = 0.0;
  bool continuity_corrected = false;
};

/// Constant log HR from a piecewise-exponential fit with one free baseline
/// rate per interval (baseline profiled out). Falls back to a 0.5
/// continuity-corrected crude rate ratio when either arm has no events.
LogHrEstimate piecewise_exponential_hr(const PoissonCells &cells);

struct RandomEffectsResult {
  double mean = 0.0;
  double se = 0.0;
  double tau2 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// DerSimonian-Laird inverse-variance random-effects pooling with a normal
/// 95% interval.
RandomEffectsResult dersimonian_laird(std::span<const LogHrEstimate> estimates);

struct KaplanMeierPoint {
  double survival = 1.0;
  double se = 0.0; ///< Greenwood
};

/// Product-limit estimate and Greenwood standard error at time t.
KaplanMeierPoint kaplan_meier_at(const ReconstructedArm &arm, double t);

} // namespace mars
