#pragma once

// Reconstruction of pseudo individual-level data from a digitized
// Kaplan-Meier curve and its published numbers-at-risk table.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mars/survival.hpp"

namespace mars {

struct CurvePoint {
  double time = 0.0;
  double survival = 1.0;
};

/// Right-continuous step function: `survival` holds from `time` until the
/// next point. After preprocessing the first point is (0, 1).
struct DigitizedCurve {
  std::vector<CurvePoint> points;
  Arm arm = Arm::Reference;

  double last_time() const { return points.empty() ? 0.0 : points.back().time; }
  /// Value of the step function at t (right-continuous).
  double value_at(double t) const;
  /// Value just before t.
  double value_before(double t) const;
};

struct AtRiskEntry {
  double time = 0.0;
  int n_at_risk = 0;
};

/// Published numbers at risk; n_at_risk at time r counts subjects still at
/// risk once the curve drop at r (if any) has happened.
struct AtRiskTable {
  std::vector<AtRiskEntry> entries;

  /// Throws DataError when the table is not strictly increasing in time
  /// from 0, or when the counts increase.
  void validate() const;
};

struct ReconstructedArm {
  std::vector<double> event_times;
  std::vector<double> censor_times;
  Arm arm = Arm::Reference;

  std::size_t subjects() const { return event_times.size() + censor_times.size(); }
  bool empty() const { return subjects() == 0; }
};

struct ReconstructionReport {
  double max_abs_survival_error = 0.0;
  /// |implied - published| number at risk at the end of every table interval.
  std::vector<int> per_interval_at_risk_error;
  int total_events_reconstructed = 0;
  /// reconstructed minus reported total events, when a total was supplied.
  std::optional<int> total_events_discrepancy;
  /// Subjects still at risk at the last plotted time, censored there.
  int censored_at_end = 0;
  /// Set when no table beyond the initial count and no total were given.
  bool assumed_no_censoring = false;
};

/// Sort, collapse duplicate times to their minimum, clamp to [0, 1], enforce
/// a running minimum and prepend (0, 1) when absent.
DigitizedCurve preprocess_curve(std::span<const CurvePoint> raw,
                                Arm arm = Arm::Reference);

/// Interval-wise iterative inversion of the product-limit estimator.
std::pair<ReconstructedArm, ReconstructionReport>
reconstruct_arm(const DigitizedCurve &curve, const AtRiskTable &at_risk,
                std::optional<int> total_events = std::nullopt);

/// Product-limit estimate; a point at every distinct event time plus the
/// last observed time.
DigitizedCurve km_estimator(const ReconstructedArm &arm);

/// Sup-norm distance between two step functions over their common range.
double reconstruction_error(const DigitizedCurve &original,
                            const DigitizedCurve &rebuilt);

/// Censor every time beyond `cap` at `cap`.
ReconstructedArm apply_follow_up_cap(ReconstructedArm arm, double cap);

} // namespace mars
