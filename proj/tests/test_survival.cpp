#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "mars/survival.hpp"

using namespace mars;
using Vec = Eigen::VectorXd;

namespace {

PiecewiseGroupHazard<double> two_rate(double r1, double r2) {
  TimeGrid g{0.0, 12.0, 24.0};
  Vec eta(2);
  eta << std::log(r1), std::log(r2);
  return {g, eta, Vec::Zero(2)};
}

} // namespace

TEST_CASE("time grid validation and lookup") {
  TimeGrid g{0.0, 12.0, 24.0};
  CHECK(g.intervals() == 2);
  CHECK(g.interval_index(12.0) == 0);
  CHECK(g.interval_index(12.5) == 1);
  CHECK(g.interval_index(1e-9) == 0);
  CHECK(g.interval_index(24.0) == 1);
  CHECK_THROWS_AS(g.interval_index(25.0), DomainError);
  CHECK_THROWS_AS(g.interval_index(0.0), DomainError);
  CHECK_THROWS_AS(g.interval_index(-1.0), DomainError);

  CHECK_THROWS_AS((TimeGrid{1.0, 2.0}), DomainError);
  CHECK_THROWS_AS((TimeGrid{0.0}), DomainError);
  CHECK_THROWS_AS((TimeGrid{0.0, 5.0, 5.0}), DomainError);

  const TimeGrid e = TimeGrid::equal_width(12.0, 120.0);
  CHECK(e.intervals() == 10);
  CHECK(e.horizon() == doctest::Approx(120.0));
  const TimeGrid ragged = TimeGrid::equal_width(6.0, 20.0);
  CHECK(ragged.intervals() == 4);
  CHECK(ragged.width(3) == doctest::Approx(2.0));
}

TEST_CASE("cumulative hazard and survival hand values") {
  const auto flat = constant_hazard(TimeGrid::equal_width(12.0, 120.0), 0.01);
  CHECK(cumulative_hazard(flat, 100.0, Arm::Reference) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cumulative_hazard(flat, 0.0, Arm::Reference) == 0.0);
  CHECK(survival_at(flat, 100.0, Arm::Reference) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(survival_at(flat, 0.0, Arm::Treated) == 1.0);
  CHECK_THROWS_AS(cumulative_hazard(flat, 121.0, Arm::Reference), DomainError);
  CHECK_THROWS_AS(survival_at(flat, -0.5, Arm::Reference), DomainError);

  const auto h = two_rate(0.01, 0.02);
  CHECK(cumulative_hazard(h, 18.0, Arm::Reference) == doctest::Approx(0.24).epsilon(1e-14));
  CHECK(survival_at(h, 24.0, Arm::Reference) == doctest::Approx(std::exp(-0.36)).epsilon(1e-14));
  CHECK(survival_at(h, 24.0, Arm::Reference) == doctest::Approx(0.69768).epsilon(1e-5));
}

TEST_CASE("treated arm rate includes log HR and study offsets") {
  TimeGrid g{0.0, 10.0};
  PiecewiseGroupHazard<double> h(g, Vec::Constant(1, std::log(0.1)),
                                 Vec::Constant(1, std::log(2.0)), 0.3, -0.2);
  CHECK(h.rate(0, Arm::Reference) == doctest::Approx(0.1 * std::exp(0.3)));
  CHECK(h.rate(0, Arm::Treated) == doctest::Approx(0.1 * std::exp(0.3) * 2.0 * std::exp(-0.2)));
  CHECK_THROWS_AS(PiecewiseGroupHazard<double>(g, Vec::Zero(2), Vec::Zero(1)), DomainError);
}

TEST_CASE("cumulative hazard is continuous at cutpoints") {
  const auto h = two_rate(0.03, 0.07);
  const double left = cumulative_hazard(h, 12.0, Arm::Reference);
  const double right = cumulative_hazard(h, std::nextafter(12.0, 13.0), Arm::Reference);
  CHECK(std::abs(left - right) < 1e-14);
  CHECK(left == doctest::Approx(0.36));
}

TEST_CASE("median survival") {
  const auto flat = constant_hazard(TimeGrid::equal_width(12.0, 120.0), 0.01);
  const auto m = median_survival(flat, Arm::Reference);
  REQUIRE(m.has_value());
  CHECK(*m == doctest::Approx(100.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(*m - 69.3147) < 1e-4);

  const auto slow = constant_hazard(TimeGrid::equal_width(12.0, 120.0), 0.001);
  CHECK_FALSE(median_survival(slow, Arm::Reference).has_value());

  const auto h = two_rate(0.05, 0.10);
  const auto m2 = median_survival(h, Arm::Reference);
  REQUIRE(m2.has_value());
  CHECK(*m2 == doctest::Approx(12.0 + (std::log(2.0) - 0.6) / 0.10).epsilon(1e-12));
  CHECK(std::abs(*m2 - 12.931471805599454) < 1e-10);
}

TEST_CASE("RMST closed forms") {
  const auto e = constant_hazard(TimeGrid{0.0, 1.0, 2.0, 4.0}, 0.5);
  CHECK(std::abs(rmst(e, Arm::Reference, 2.0) - (1.0 - std::exp(-1.0)) / 0.5) < 1e-10);
  CHECK(std::abs(rmst(e, Arm::Reference, 2.0) - 1.2642411176571153) < 1e-10);

  const auto zero = constant_hazard(TimeGrid{0.0, 5.0, 10.0}, 1e-300);
  CHECK(rmst(zero, Arm::Reference, 7.5) == doctest::Approx(7.5).epsilon(1e-12));

  const auto h = two_rate(0.05, 0.10);
  CHECK(std::abs(rmst(h, Arm::Reference, 24.0) - 12.85889475684387) < 1e-10);
  CHECK_THROWS_AS(rmst(h, Arm::Reference, 0.0), DomainError);
  CHECK_THROWS_AS(rmst(h, Arm::Reference, 24.5), DomainError);
}

TEST_CASE("exponential closed forms over many rates") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rate(0.001, 2.0), tau(0.1, 50.0);
  for (int i = 0; i < 200; ++i) {
    const double r = rate(rng), t = tau(rng);
    const auto h = constant_hazard(TimeGrid::equal_width(t / 3.0, t), r);
    CHECK(std::abs(rmst(h, Arm::Reference, t) - (-std::expm1(-r * t)) / r) <
          1e-10 * std::max(1.0, t));
    const auto m = median_survival(h, Arm::Reference);
    if (r * t >= std::log(2.0)) {
      REQUIRE(m.has_value());
      CHECK(std::abs(*m - std::log(2.0) / r) < 1e-10 * std::max(1.0, *m));
    } else {
      CHECK_FALSE(m.has_value());
    }
  }
}

TEST_CASE("RMST matches adaptive quadrature on random hazards") {
  using boost::math::quadrature::gauss_kronrod;
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> n_int(1, 8);
  std::uniform_real_distribution<double> width(0.5, 20.0), log_rate(-6.0, 0.5),
      log_hr(-1.5, 1.5), frac(0.05, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int J = n_int(rng);
    std::vector<double> cuts{0.0};
    for (int j = 0; j < J; ++j)
      cuts.push_back(cuts.back() + width(rng));
    TimeGrid g(Eigen::Map<Vec>(cuts.data(), J + 1));
    Vec eta(J), beta(J);
    for (int j = 0; j < J; ++j) {
      eta[j] = log_rate(rng);
      beta[j] = log_hr(rng);
    }
    PiecewiseGroupHazard<double> h(g, eta, beta, 0.1 * log_hr(rng), 0.1 * log_hr(rng));
    const Arm arm = trial % 2 ? Arm::Treated : Arm::Reference;
    const double tau = frac(rng) * g.horizon();
    // integrate piece by piece so the kinks sit on panel ends
    double oracle = 0.0;
    for (int j = 0; j < J && tau > g.lower(j); ++j) {
      const double a = g.lower(j), b = std::min(tau, g.upper(j));
      oracle += gauss_kronrod<double, 61>::integrate(
          [&](double u) { return survival_at(h, u, arm); }, a, b, 20, 1e-14);
    }
    const double value = rmst(h, arm, tau);
    CHECK(std::abs(value - oracle) <= 1e-8 * oracle);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("median satisfies S(median) = 0.5 on random hazards") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> log_rate(-5.0, 0.0), log_hr(-1.0, 1.0);
  int found = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int J = 1 + trial % 7;
    const TimeGrid g = TimeGrid::equal_width(10.0, 10.0 * J);
    Vec eta(J), beta(J);
    for (int j = 0; j < J; ++j) {
      eta[j] = log_rate(rng);
      beta[j] = log_hr(rng);
    }
    PiecewiseGroupHazard<double> h(g, eta, beta);
    for (Arm arm : {Arm::Reference, Arm::Treated}) {
      const auto m = median_survival(h, arm);
      if (!m) {
        CHECK(cumulative_hazard(h, g.horizon(), arm) < std::log(2.0));
        continue;
      }
      ++found;
      CHECK(std::abs(survival_at(h, *m, arm) - 0.5) < 1e-10);
    }
  }
  CHECK(found > 100);
}

TEST_CASE("survival is nonincreasing and RMST nondecreasing") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> log_rate(-4.0, 0.0);
  Vec eta(6);
  for (auto &v : eta)
    v = log_rate(rng);
  PiecewiseGroupHazard<double> h(TimeGrid::equal_width(5.0, 30.0), eta, Vec::Constant(6, -0.4));
  double prev_s = 1.0, prev_r = 0.0;
  for (double t = 0.25; t <= 30.0; t += 0.25) {
    const double s = survival_at(h, t, Arm::Treated);
    const double r = rmst(h, Arm::Treated, t);
    CHECK(s <= prev_s);
    CHECK(r >= prev_r);
    CHECK(r <= t);
    CHECK(s == doctest::Approx(std::exp(-cumulative_hazard(h, t, Arm::Treated))));
    prev_s = s;
    prev_r = r;
  }
}
