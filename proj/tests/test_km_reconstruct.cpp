#include <doctest.h>

#include <algorithm>
#include <random>

#include "mars/km_reconstruct.hpp"

using namespace mars;

namespace {

int count_in(const std::vector<double> &v, double lo, double hi) {
  return static_cast<int>(std::count_if(v.begin(), v.end(),
                                        [&](double t) { return t > lo && t <= hi; }));
}

AtRiskTable true_at_risk(const ReconstructedArm &arm, const std::vector<double> &times) {
  AtRiskTable table;
  for (double r : times) {
    // still at risk just after any drop at r; censoring at r follows events at r
    int n = static_cast<int>(std::count_if(arm.event_times.begin(), arm.event_times.end(),
                                           [&](double t) { return t > r; }));
    n += static_cast<int>(std::count_if(arm.censor_times.begin(), arm.censor_times.end(),
                                        [&](double t) { return t >= r; }));
    table.entries.push_back({r, r == 0.0 ? static_cast<int>(arm.subjects()) : n});
  }
  return table;
}

} // namespace

TEST_CASE("preprocess collapses duplicates and enforces monotonicity") {
  const std::vector<CurvePoint> raw{{0, 1}, {3, 0.9}, {3, 0.88}, {6, 0.91}};
  const DigitizedCurve c = preprocess_curve(raw);
  REQUIRE(c.points.size() == 3);
  CHECK(c.points[0].time == 0.0);
  CHECK(c.points[1].time == 3.0);
  CHECK(c.points[2].time == 6.0);
  CHECK(c.points[0].survival == 1.0);
  CHECK(c.points[1].survival == 0.88);
  CHECK(c.points[2].survival == 0.88);

  const std::vector<CurvePoint> single{{2, 0.95}};
  const DigitizedCurve p = preprocess_curve(single);
  REQUIRE(p.points.size() == 2);
  CHECK(p.points[0].time == 0.0);
  CHECK(p.points[0].survival == 1.0);
  CHECK(p.points[1].survival == 0.95);

  CHECK_THROWS_AS(preprocess_curve(std::vector<CurvePoint>{}), FormatError);
  CHECK_THROWS_AS(preprocess_curve(std::vector<CurvePoint>{{1, 1.2}}), FormatError);
  CHECK_THROWS_AS(preprocess_curve(std::vector<CurvePoint>{{1, -0.1}}), FormatError);
  CHECK_THROWS_AS(preprocess_curve(std::vector<CurvePoint>{{-1, 0.9}}), FormatError);

  const DigitizedCurve clamped = preprocess_curve(std::vector<CurvePoint>{{0, 1.03}, {4, -0.02}});
  CHECK(clamped.points[1].survival == 0.0);
}

TEST_CASE("product-limit estimator hand values") {
  ReconstructedArm a;
  a.event_times = {2, 4};
  a.censor_times = {3, 5};
  const DigitizedCurve km = km_estimator(a);
  CHECK(km.value_at(2.0) == doctest::Approx(0.75));
  CHECK(km.value_at(3.5) == doctest::Approx(0.75));
  CHECK(km.value_at(4.0) == doctest::Approx(0.375));
  CHECK(km.value_before(4.0) == doctest::Approx(0.75));
  CHECK(km.last_time() == 5.0);

  ReconstructedArm both;
  both.event_times = {5, 5};
  CHECK(km_estimator(both).value_at(5.0) == 0.0);

  ReconstructedArm none;
  none.censor_times = {1, 7};
  const DigitizedCurve flat = km_estimator(none);
  CHECK(flat.value_at(6.0) == 1.0);
}

TEST_CASE("reconstruction error is the sup distance") {
  const DigitizedCurve a = preprocess_curve(std::vector<CurvePoint>{{0, 1}, {2, 0.8}, {5, 0.5}});
  CHECK(reconstruction_error(a, a) == 0.0);
  DigitizedCurve shifted = a;
  for (auto &p : shifted.points)
    p.survival -= 0.02;
  CHECK(reconstruction_error(a, shifted) == doctest::Approx(0.02));
  // step at 3 instead of 2 and 0.6 instead of 0.5: sup over {2,3,5} is 0.2
  const DigitizedCurve b = preprocess_curve(std::vector<CurvePoint>{{0, 1}, {3, 0.8}, {5, 0.6}});
  CHECK(reconstruction_error(a, b) == doctest::Approx(0.2));
}

TEST_CASE("flat curve gives no events and uniform censoring") {
  const DigitizedCurve c = preprocess_curve(std::vector<CurvePoint>{{0, 1}, {60, 1}});
  AtRiskTable t;
  t.entries = {{0, 100}, {60, 80}};
  const auto [arm, report] = reconstruct_arm(c, t);
  CHECK(arm.event_times.empty());
  CHECK(arm.subjects() == 100);
  CHECK(count_in(arm.censor_times, 0.0, 59.999) == 20);
  CHECK(arm.censor_times.front() == doctest::Approx(1.5));
  CHECK(arm.censor_times[19] == doctest::Approx(58.5));
  CHECK(report.censored_at_end == 80);
  CHECK(report.per_interval_at_risk_error == std::vector<int>{0});
}

TEST_CASE("single drop inverts to the hand count") {
  const DigitizedCurve c = preprocess_curve(std::vector<CurvePoint>{{0, 1}, {10, 0.5}});
  AtRiskTable t;
  t.entries = {{0, 10}, {10, 5}};
  const auto [arm, report] = reconstruct_arm(c, t);
  CHECK(arm.event_times == std::vector<double>(5, 10.0));
  CHECK(count_in(arm.censor_times, 0.0, 9.999) == 0);
  CHECK(report.censored_at_end == 5);
  CHECK(report.total_events_reconstructed == 5);
  CHECK(report.max_abs_survival_error < 1e-12);
}

TEST_CASE("at-risk validation") {
  const DigitizedCurve c = preprocess_curve(std::vector<CurvePoint>{{0, 1}, {10, 0.5}, {20, 0.4}});
  AtRiskTable rising;
  rising.entries = {{0, 10}, {10, 12}};
  CHECK_THROWS_AS(reconstruct_arm(c, rising), ReconstructionError);
  try {
    (void)reconstruct_arm(c, rising);
  } catch (const ReconstructionError &e) {
    CHECK(e.interval() == 0);
  }
  AtRiskTable late_start;
  late_start.entries = {{1, 10}};
  CHECK_THROWS_AS(reconstruct_arm(c, late_start), DataError);
  AtRiskTable beyond;
  beyond.entries = {{0, 10}, {30, 2}};
  CHECK_THROWS_AS(reconstruct_arm(c, beyond), DataError);
}

TEST_CASE("no table beyond the start assumes no censoring") {
  const DigitizedCurve c =
      preprocess_curve(std::vector<CurvePoint>{{0, 1}, {4, 0.8}, {9, 0.6}, {12, 0.6}});
  AtRiskTable t;
  t.entries = {{0, 20}};
  const auto [arm, report] = reconstruct_arm(c, t);
  CHECK(report.assumed_no_censoring);
  CHECK(arm.event_times.size() == 8);
  CHECK(report.censored_at_end == 12);

  const auto [arm2, report2] = reconstruct_arm(c, t, 6);
  CHECK_FALSE(report2.assumed_no_censoring);
  REQUIRE(report2.total_events_discrepancy.has_value());
  CHECK(std::abs(*report2.total_events_discrepancy) <= 1);
  CHECK(arm2.subjects() == 20);
}

TEST_CASE("exact KM input recovers per-interval event counts") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> event(0.02);
    ReconstructedArm truth;
    for (int i = 0; i < 50; ++i) {
      const double t = event(rng);
      if (t <= 60.0)
        truth.event_times.push_back(t);
      else
        truth.censor_times.push_back(60.0);
    }
    const std::vector<double> cuts{0, 12, 24, 36, 48, 60};
    DigitizedCurve curve = km_estimator(truth);
    if (curve.last_time() < 60.0)
      curve.points.push_back({60.0, curve.points.back().survival});
    const AtRiskTable table = true_at_risk(truth, cuts);
    const auto [rec, report] = reconstruct_arm(curve, table);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
      CHECK(count_in(rec.event_times, cuts[k], cuts[k + 1]) ==
            count_in(truth.event_times, cuts[k], cuts[k + 1]));
    CHECK(rec.subjects() == 50);
    CHECK(report.max_abs_survival_error < 1e-9);
    for (int e : report.per_interval_at_risk_error)
      CHECK(e == 0);
  }
}

TEST_CASE("random arms reconstruct within 0.02 in at least 95% of trials") {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> size(30, 200);
  std::uniform_real_distribution<double> rate(0.005, 0.05), cens(0.0, 1.0);
  int good = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = size(rng);
    const double horizon = 72.0;
    std::exponential_distribution<double> event(rate(rng));
    ReconstructedArm truth;
    for (int i = 0; i < n; ++i) {
      const double t = event(rng);
      const double c = std::max(1e-3, cens(rng) * 2.0 * horizon);
      const double end = std::min(c, horizon);
      if (t <= end)
        truth.event_times.push_back(t);
      else
        truth.censor_times.push_back(end);
    }
    DigitizedCurve curve = km_estimator(truth);
    if (curve.last_time() < horizon)
      curve.points.push_back({horizon, curve.points.back().survival});
    std::vector<double> cuts;
    for (double r = 0.0; r <= horizon; r += 12.0)
      cuts.push_back(r);
    const auto [rec, report] = reconstruct_arm(curve, true_at_risk(truth, cuts));
    CHECK(rec.subjects() == static_cast<std::size_t>(n));
    if (reconstruction_error(curve, km_estimator(rec)) < 0.02)
      ++good;
  }
  MESSAGE("trials under 0.02: " << good << "/" << trials);
  CHECK(good >= 190);
}

TEST_CASE("follow-up cap censors late times") {
  ReconstructedArm a;
  a.event_times = {5, 50, 130};
  a.censor_times = {20, 140};
  const ReconstructedArm capped = apply_follow_up_cap(a, 120);
  CHECK(capped.event_times == std::vector<double>{5, 50});
  CHECK(capped.censor_times == std::vector<double>{20, 120, 120});
  CHECK_THROWS_AS(apply_follow_up_cap(a, 0.0), DomainError);
}
