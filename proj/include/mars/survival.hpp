#pragma once

// Piecewise-exponential survival mathematics. Everything here is a pure
// function of a grid and a set of per-interval log rates, templated on the
// scalar type so the same code serves double evaluation and the oracle tests.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <optional>

#include "mars/errors.hpp"
#include "mars/time_grid.hpp"

namespace mars {

/// Treatment indicator; 0 is the reference arm.
enum class Arm : int { Reference = 0, Treated = 1 };

inline int arm_value(Arm x) { return static_cast<int>(x); }

/// Hazard of one group: exp(log_baseline_j + study_offset
///   + (study_hr_offset + log_hr_j) * x) on interval j.
template <typename Scalar> struct PiecewiseGroupHazard {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TimeGrid grid;
  Vector log_baseline;
  Vector log_hr;
  Scalar study_offset = Scalar(0);
  Scalar study_hr_offset = Scalar(0);

  PiecewiseGroupHazard(TimeGrid g, Vector baseline, Vector hr,
                       Scalar offset = Scalar(0), Scalar hr_offset = Scalar(0))
      : grid(std::move(g)), log_baseline(std::move(baseline)),
        log_hr(std::move(hr)), study_offset(offset),
        study_hr_offset(hr_offset) {
    if (log_baseline.size() != grid.intervals() ||
        log_hr.size() != grid.intervals())
      throw DomainError("PiecewiseGroupHazard: parameter length != J");
  }

  Scalar log_rate(Eigen::Index j, Arm x) const {
    using std::exp;
    return log_baseline[j] + study_offset +
           (study_hr_offset + log_hr[j]) * Scalar(arm_value(x));
  }
  Scalar rate(Eigen::Index j, Arm x) const {
    using std::exp;
    return exp(log_rate(j, x));
  }
};

/// Constant-rate helper used by tests and examples.
template <typename Scalar = double>
PiecewiseGroupHazard<Scalar> constant_hazard(const TimeGrid &grid, Scalar rate) {
  using std::log;
  using Vector = typename PiecewiseGroupHazard<Scalar>::Vector;
  return {grid, Vector::Constant(grid.intervals(), log(rate)),
          Vector::Zero(grid.intervals())};
}

template <typename Scalar>
Scalar cumulative_hazard(const PiecewiseGroupHazard<Scalar> &h, double t,
                         Arm x) {
  const TimeGrid &g = h.grid;
  if (!(t >= 0.0) || t > g.horizon())
    throw DomainError("cumulative_hazard: t outside [0, t_J]");
  Scalar total(0);
  for (Eigen::Index j = 0; j < g.intervals() && t > g.lower(j); ++j)
    total += h.rate(j, x) * Scalar(g.overlap(j, t));
  return total;
}

template <typename Scalar>
Scalar survival_at(const PiecewiseGroupHazard<Scalar> &h, double t, Arm x) {
  using std::exp;
  return exp(-cumulative_hazard(h, t, x));
}

/// Smallest t with H(t) = log 2, by exact inversion of the piecewise-linear
/// cumulative hazard. Empty when H(t_J) < log 2.
template <typename Scalar>
std::optional<Scalar> median_survival(const PiecewiseGroupHazard<Scalar> &h,
                                      Arm x) {
  const Scalar target(std::numbers::ln2);
  const TimeGrid &g = h.grid;
  Scalar at_start(0);
  for (Eigen::Index j = 0; j < g.intervals(); ++j) {
    const Scalar r = h.rate(j, x);
    const Scalar at_end = at_start + r * Scalar(g.width(j));
    if (at_end >= target)
      return Scalar(g.lower(j)) + (target - at_start) / r;
    at_start = at_end;
  }
  return std::nullopt;
}

/// Area under S(u) on [0, tau], integrated exactly segment by segment.
template <typename Scalar>
Scalar rmst(const PiecewiseGroupHazard<Scalar> &h, Arm x, double tau) {
  using std::exp;
  using std::expm1;
  const TimeGrid &g = h.grid;
  if (!(tau > 0.0) || tau > g.horizon())
    throw DomainError("rmst: tau outside (0, t_J]");
  Scalar area(0);
  Scalar cum(0);
  for (Eigen::Index j = 0; j < g.intervals() && tau > g.lower(j); ++j) {
    const double dt = g.overlap(j, tau);
    const Scalar r = h.rate(j, x);
    const Scalar s_start = exp(-cum);
    if (r < Scalar(1e-12))
      area += s_start * Scalar(dt);
    else
      area += s_start * (-expm1(-r * Scalar(dt))) / r;
    cum += r * Scalar(dt);
  }
  return area;
}

} // namespace mars
