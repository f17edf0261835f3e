#include "mars/km_reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mars {

double DigitizedCurve::value_at(double t) const {
  double s = 1.0;
  for (const auto &p : points) {
    if (p.time > t)
      break;
    s = p.survival;
  }
  return s;
}

double DigitizedCurve::value_before(double t) const {
  double s = 1.0;
  for (const auto &p : points) {
    if (p.time >= t)
      break;
    s = p.survival;
  }
  return s;
}

void AtRiskTable::validate() const {
  if (entries.empty())
    throw DataError("at-risk table is empty");
  if (entries.front().time != 0.0)
    throw DataError("at-risk table must start at time 0");
  if (entries.front().n_at_risk < 1)
    throw DataError("at-risk table must start with at least one subject");
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i].time > entries[i - 1].time))
      throw DataError("at-risk times must be strictly increasing");
    if (entries[i].n_at_risk < 0)
      throw DataError("negative number at risk");
    if (entries[i].n_at_risk > entries[i - 1].n_at_risk)
      throw ReconstructionError(
          "number at risk increases; implied events plus censors < 0",
          static_cast<int>(i - 1));
  }
}

DigitizedCurve preprocess_curve(std::span<const CurvePoint> raw, Arm arm) {
  if (raw.empty())
    throw FormatError("digitized curve is empty");
  std::map<double, double> by_time;
  for (const auto &p : raw) {
    if (!std::isfinite(p.time) || p.time < 0.0)
      throw FormatError("digitized curve has a negative or non-finite time");
    if (!std::isfinite(p.survival) || p.survival < -0.05 || p.survival > 1.05)
      throw FormatError("digitized survival " + std::to_string(p.survival) +
                        " outside [-0.05, 1.05] at t=" + std::to_string(p.time));
    auto [it, inserted] = by_time.emplace(p.time, p.survival);
    if (!inserted)
      it->second = std::min(it->second, p.survival);
  }
  DigitizedCurve out;
  out.arm = arm;
  if (by_time.begin()->first > 0.0)
    out.points.push_back({0.0, 1.0});
  double running = 1.0;
  for (const auto &[t, s] : by_time) {
    running = std::min(running, std::clamp(s, 0.0, 1.0));
    out.points.push_back({t, running});
  }
  out.points.front().survival = 1.0;
  return out;
}

namespace {

struct SweepResult {
  int n_end = 0;
  double km_last = 1.0;
  std::vector<std::pair<double, int>> events; // (time, count)
  std::vector<double> censors;
};

// One pass over (start, end]: curve drops produce events by product-limit
// inversion, censors sit at the midpoints of `n_censor` equal sub-intervals.
SweepResult sweep(const DigitizedCurve &curve, double start, double end,
                  int n_start, int n_censor, double km_last) {
  SweepResult r;
  r.km_last = km_last;
  const double length = end - start;
  std::vector<double> censor_times;
  if (length > 0.0) {
    for (int i = 1; i <= n_censor; ++i)
      censor_times.push_back(start + (i - 0.5) * length / n_censor);
  }

  int n = n_start;
  double prev_s = curve.value_at(start);
  auto next_censor = censor_times.begin();
  auto drain_censors_before = [&](double t) {
    while (next_censor != censor_times.end() && *next_censor < t) {
      if (n > 0) {
        --n;
        r.censors.push_back(*next_censor);
      }
      ++next_censor;
    }
  };

  for (const auto &p : curve.points) {
    if (p.time <= start || p.time > end)
      continue;
    drain_censors_before(p.time);
    if (p.survival < prev_s && n > 0 && r.km_last > 0.0) {
      const double raw = n * (1.0 - p.survival / r.km_last);
      const int d = std::clamp(static_cast<int>(std::lround(raw)), 0, n);
      if (d > 0) {
        r.km_last *= 1.0 - static_cast<double>(d) / n;
        n -= d;
        r.events.emplace_back(p.time, d);
      }
    }
    prev_s = p.survival;
  }
  drain_censors_before(end + 1.0);
  r.n_end = n;
  return r;
}

int total_events(const SweepResult &r) {
  int total = 0;
  for (const auto &e : r.events)
    total += e.second;
  return total;
}

void append(ReconstructedArm &arm, const SweepResult &r) {
  for (const auto &[t, d] : r.events)
    arm.event_times.insert(arm.event_times.end(), d, t);
  arm.censor_times.insert(arm.censor_times.end(), r.censors.begin(),
                          r.censors.end());
}

} // namespace

std::pair<ReconstructedArm, ReconstructionReport>
reconstruct_arm(const DigitizedCurve &curve, const AtRiskTable &at_risk,
                std::optional<int> total_events_reported) {
  at_risk.validate();
  if (curve.points.empty() || curve.points.front().time != 0.0)
    throw FormatError("curve must be preprocessed (start at time 0)");
  const double t_end = curve.last_time();
  const auto &rows = at_risk.entries;
  if (rows.back().time > t_end)
    throw DataError("at-risk entry beyond the last plotted time");

  ReconstructedArm arm;
  arm.arm = curve.arm;
  ReconstructionReport report;

  double km_last = 1.0;
  int n = rows.front().n_at_risk;
  double censor_time_so_far = 0.0;
  int censors_so_far = 0;

  for (std::size_t a = 0; a + 1 < rows.size(); ++a) {
    const double start = rows[a].time;
    const double end = rows[a + 1].time;
    const int target = rows[a + 1].n_at_risk;
    const int interval = static_cast<int>(a);
    if (n == 0 && target > 0)
      throw ReconstructionError("at-risk count rises from zero", interval);
    if (curve.value_at(end) <= 0.0 && target > 0)
      throw ReconstructionError(
          "curve reaches zero while the table still reports subjects at risk",
          interval);

    const double s_start = curve.value_at(start);
    const double s_end = curve.value_at(end);
    if (n == 0 && s_end < s_start)
      throw ReconstructionError("curve drops after t=" + std::to_string(start) +
                                    " with nobody left at risk",
                                interval);
    int n_censor = 0;
    if (s_start > 0.0)
      n_censor = static_cast<int>(std::lround(n * s_end / s_start - target));
    n_censor = std::clamp(n_censor, 0, n);

    // Adjust the censor count by the at-risk mismatch until it closes or
    // stops improving.
    std::set<int> tried;
    SweepResult best;
    int best_gap = -1;
    for (int iter = 0; iter < 1000 && tried.insert(n_censor).second; ++iter) {
      SweepResult r = sweep(curve, start, end, n, n_censor, km_last);
      const int gap = r.n_end - target;
      if (best_gap < 0 || std::abs(gap) < best_gap) {
        best_gap = std::abs(gap);
        best = std::move(r);
      }
      if (gap == 0)
        break;
      n_censor = std::clamp(n_censor + gap, 0, n);
    }
    report.per_interval_at_risk_error.push_back(best_gap);
    append(arm, best);
    km_last = best.km_last;
    n = best.n_end;
    censors_so_far += static_cast<int>(best.censors.size());
    censor_time_so_far += end - start;
  }

  // Tail after the last table entry.
  const double start = rows.back().time;
  int events_before_tail = static_cast<int>(arm.event_times.size());
  int n_censor = 0;
  if (rows.size() >= 2 && censor_time_so_far > 0.0) {
    const double rate = censors_so_far / censor_time_so_far;
    n_censor = std::clamp(
        static_cast<int>(std::lround(rate * (t_end - start))), 0, n);
  } else if (!total_events_reported) {
    report.assumed_no_censoring = true;
  }

  SweepResult tail =
      sweep(curve, start, t_end, n, n_censor, km_last);
  if (total_events_reported) {
    std::set<int> tried{n_censor};
    for (int iter = 0; iter < 1000; ++iter) {
      const int gap =
          events_before_tail + total_events(tail) - *total_events_reported;
      if (gap == 0)
        break;
      // too many events -> more censoring, too few -> less
      const int next = std::clamp(n_censor + (gap > 0 ? 1 : -1), 0, n);
      if (!tried.insert(next).second)
        break;
      SweepResult r = sweep(curve, start, t_end, n, next, km_last);
      const int new_gap =
          events_before_tail + total_events(r) - *total_events_reported;
      if (std::abs(new_gap) > std::abs(gap))
        break;
      n_censor = next;
      tail = std::move(r);
    }
  }
  append(arm, tail);
  report.censored_at_end = tail.n_end;
  arm.censor_times.insert(arm.censor_times.end(), tail.n_end, t_end);

  std::sort(arm.event_times.begin(), arm.event_times.end());
  std::sort(arm.censor_times.begin(), arm.censor_times.end());
  report.total_events_reconstructed = static_cast<int>(arm.event_times.size());
  if (total_events_reported)
    report.total_events_discrepancy =
        report.total_events_reconstructed - *total_events_reported;
  report.max_abs_survival_error =
      reconstruction_error(curve, km_estimator(arm));
  return {std::move(arm), report};
}

DigitizedCurve km_estimator(const ReconstructedArm &arm) {
  DigitizedCurve out;
  out.arm = arm.arm;
  out.points.push_back({0.0, 1.0});
  std::map<double, std::pair<int, int>> at; // time -> (events, censors)
  for (double t : arm.event_times)
    ++at[t].first;
  for (double t : arm.censor_times)
    ++at[t].second;
  int n = static_cast<int>(arm.subjects());
  double s = 1.0;
  for (const auto &[t, dc] : at) {
    const auto [d, c] = dc;
    if (d > 0 && n > 0) {
      s *= 1.0 - static_cast<double>(d) / n;
      if (t > 0.0)
        out.points.push_back({t, s});
      else
        out.points.front().survival = s;
    }
    n -= d + c;
  }
  if (!at.empty() && at.rbegin()->first > out.points.back().time)
    out.points.push_back({at.rbegin()->first, s});
  return out;
}

double reconstruction_error(const DigitizedCurve &original,
                            const DigitizedCurve &rebuilt) {
  const double range = std::min(original.last_time(), rebuilt.last_time());
  std::vector<double> breaks{0.0};
  for (const auto *c : {&original, &rebuilt})
    for (const auto &p : c->points)
      if (p.time <= range)
        breaks.push_back(p.time);
  double sup = 0.0;
  for (double t : breaks)
    sup = std::max(sup, std::abs(original.value_at(t) - rebuilt.value_at(t)));
  return sup;
}

ReconstructedArm apply_follow_up_cap(ReconstructedArm arm, double cap) {
  if (!(cap > 0.0))
    throw DomainError("follow-up cap must be positive");
  std::vector<double> events;
  for (double t : arm.event_times) {
    if (t > cap)
      arm.censor_times.push_back(cap);
    else
      events.push_back(t);
  }
  arm.event_times = std::move(events);
  for (double &t : arm.censor_times)
    t = std::min(t, cap);
  std::sort(arm.censor_times.begin(), arm.censor_times.end());
  return arm;
}

} // namespace mars
