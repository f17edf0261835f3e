#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "mars/errors.hpp"

namespace mars {

/// Partition 0 = t_0 < t_1 < ... < t_J of the follow-up axis (months).
/// Interval j (0-based) is the half-open-left interval (t_j, t_{j+1}].
class TimeGrid {
public:
  TimeGrid() = default;

  explicit TimeGrid(Eigen::VectorXd cutpoints) : cut_(std::move(cutpoints)) {
    validate();
  }
  TimeGrid(std::initializer_list<double> cutpoints)
      : cut_(Eigen::Map<const Eigen::VectorXd>(
            cutpoints.begin(), static_cast<Eigen::Index>(cutpoints.size()))) {
    validate();
  }

  /// Equal-width segments of `width` covering [0, horizon]; the last segment
  /// is shortened when `horizon` is not a multiple of `width`.
  static TimeGrid equal_width(double width, double horizon) {
    if (!(width > 0.0) || !(horizon > 0.0) || !std::isfinite(horizon))
      throw DomainError("equal_width: width and horizon must be positive");
    std::vector<double> cuts{0.0};
    while (cuts.back() + width < horizon - 1e-9 * horizon)
      cuts.push_back(cuts.back() + width);
    cuts.push_back(horizon);
    return TimeGrid(Eigen::Map<Eigen::VectorXd>(
        cuts.data(), static_cast<Eigen::Index>(cuts.size())));
  }

  Eigen::Index intervals() const { return cut_.size() - 1; }
  const Eigen::VectorXd &cutpoints() const { return cut_; }
  double lower(Eigen::Index j) const { return cut_[j]; }
  double upper(Eigen::Index j) const { return cut_[j + 1]; }
  double width(Eigen::Index j) const { return cut_[j + 1] - cut_[j]; }
  double horizon() const { return cut_[cut_.size() - 1]; }

  Eigen::VectorXd widths() const {
    return cut_.tail(intervals()) - cut_.head(intervals());
  }

  /// Unique j with t_j < t <= t_{j+1}.
  Eigen::Index interval_index(double t) const {
    if (!(t > 0.0) || t > horizon())
      throw DomainError("interval_index: t=" + std::to_string(t) +
                        " outside (0, " + std::to_string(horizon()) + "]");
    // first cutpoint >= t, searched over t_1..t_J
    const double *first = cut_.data() + 1;
    const double *last = cut_.data() + cut_.size();
    const double *it = std::lower_bound(first, last, t);
    return static_cast<Eigen::Index>(it - first);
  }

  /// Length of (0, t] intersected with interval j; t may exceed the horizon.
  double overlap(Eigen::Index j, double t) const {
    return std::clamp(t - cut_[j], 0.0, width(j));
  }

  /// Vector of overlaps of (0, t] with every interval.
  Eigen::VectorXd exposure_profile(double t) const {
    Eigen::VectorXd out(intervals());
    for (Eigen::Index j = 0; j < intervals(); ++j)
      out[j] = overlap(j, t);
    return out;
  }

  bool operator==(const TimeGrid &other) const {
    return cut_.size() == other.cut_.size() && cut_ == other.cut_;
  }

private:
  void validate() const {
    if (cut_.size() < 2)
      throw DomainError("TimeGrid needs at least one interval");
    if (cut_[0] != 0.0)
      throw DomainError("TimeGrid must start at exactly 0");
    for (Eigen::Index i = 0; i < cut_.size(); ++i) {
      if (!std::isfinite(cut_[i]))
        throw DomainError("TimeGrid cutpoints must be finite");
      if (i > 0 && !(cut_[i] > cut_[i - 1]))
        throw DomainError("TimeGrid cutpoints must be strictly increasing");
    }
  }

  Eigen::VectorXd cut_;
};

} // namespace mars
