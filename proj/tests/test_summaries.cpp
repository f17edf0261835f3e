#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mars/summaries.hpp"

using namespace mars;
using Eigen::VectorXd;

namespace {

struct DrawSpec {
  VectorXd log_lambda;
  VectorXd beta;
  double mu_0 = 0.0;
};

PosteriorDraws make_draws(const TimeGrid &grid, const std::vector<DrawSpec> &specs,
                          int n_chains = 1) {
  const ModelData empty = prepare(Dataset{}, grid);
  PosteriorDraws d;
  d.names = parameter_names(empty);
  d.grid = grid;
  d.n_chains = n_chains;
  d.draws_per_chain = static_cast<int>(specs.size()) / n_chains;
  d.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(specs.size()),
                                   static_cast<Eigen::Index>(d.names.size()));
  const Eigen::Index J = grid.intervals();
  for (std::size_t r = 0; r < specs.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    d.values.row(row).segment(0, J) = specs[r].beta.transpose();
    d.values.row(row).segment(J, J) = specs[r].log_lambda.transpose();
    d.values(row, d.column("mu_0")) = specs[r].mu_0;
  }
  d.log_posterior = VectorXd::Zero(d.values.rows());
  return d;
}

DrawSpec constant(Eigen::Index J, double rate, double log_hr = 0.0) {
  return {VectorXd::Constant(J, std::log(rate)), VectorXd::Constant(J, log_hr), 0.0};
}

} // namespace

TEST_CASE("quantiles and moments") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({1.0, 2.0, 3.0}, 0.025) == doctest::Approx(1.05));
  CHECK(quantile({1.0, 2.0, 3.0}, 0.975) == doctest::Approx(2.95));
  const std::vector<double> v{-0.2, 0.1, 0.4};
  const Moments m = summarize(v);
  CHECK(m.mean == doctest::Approx(0.1));
  CHECK(m.sd == doctest::Approx(0.3));
  CHECK(m.lower == doctest::Approx(-0.2 + 0.05 * 0.3));
  CHECK(m.upper == doctest::Approx(0.4 - 0.05 * 0.3));
}

TEST_CASE("posterior survival curve") {
  const TimeGrid grid{0, 10, 20};
  const std::vector<double> times{0.0, 5.0, 15.0, 20.0};

  const auto single = make_draws(grid, {constant(2, 0.05, -0.3)});
  const auto rows = posterior_survival_curve(single, Arm::Treated, times);
  CHECK(rows[0].mean == 1.0);
  CHECK(rows[0].lower == 1.0);
  CHECK(rows[0].upper == 1.0);
  const auto h = population_hazard(single, 0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(rows[i].mean == doctest::Approx(survival_at(h, times[i], Arm::Treated)));
    CHECK(rows[i].sd == 0.0);
  }

  const auto pair = make_draws(grid, {constant(2, 0.02), constant(2, 0.06)});
  const auto two = posterior_survival_curve(pair, Arm::Reference, times);
  const double a = std::exp(-0.02 * 15), b = std::exp(-0.06 * 15);
  CHECK(two[2].mean == doctest::Approx((a + b) / 2));
  CHECK(two[2].lower == doctest::Approx(b + 0.025 * (a - b)));
  CHECK(two[2].upper == doctest::Approx(b + 0.975 * (a - b)));
  for (std::size_t i = 1; i < two.size(); ++i)
    CHECK(two[i].mean <= two[i - 1].mean);

  const std::vector<double> bad{25.0};
  CHECK_THROWS_AS(posterior_survival_curve(pair, Arm::Reference, bad), DomainError);
}

TEST_CASE("stepwise log hazard ratios") {
  const TimeGrid grid{0, 12, 24, 48};
  const auto flat = make_draws(grid, {constant(3, 0.01, -0.4), constant(3, 0.01, -0.4)});
  const auto rows = posterior_loghr_steps(flat);
  REQUIRE(rows.size() == 5);
  for (int j = 0; j < 3; ++j) {
    CHECK(rows[j].interval == j + 1);
    CHECK(rows[j].mean == doctest::Approx(-0.4));
  }
  CHECK(rows[3].measure == "log_hr_grand_weighted");
  CHECK(rows[3].mean == doctest::Approx(-0.4));

  const TimeGrid even{0, 10, 20};
  DrawSpec s = constant(2, 0.01);
  s.beta << 0.0, 0.4;
  const auto steps = posterior_loghr_steps(make_draws(even, {s}));
  CHECK(steps[2].mean == doctest::Approx(0.2));
  CHECK(steps[3].mean == doctest::Approx(0.2));

  // unequal widths separate the weighted and unweighted grand means
  DrawSpec u = constant(3, 0.01);
  u.beta << 0.3, 0.0, -0.3;
  const auto uneven = posterior_loghr_steps(make_draws(grid, {u}));
  CHECK(uneven[3].mean == doctest::Approx((0.3 * 12 - 0.3 * 24) / 48.0));
  CHECK(uneven[4].mean == doctest::Approx(0.0));

  // three draws with hand quantiles
  std::vector<DrawSpec> three;
  for (double b : {0.5, -0.1, 0.2})
    three.push_back(constant(2, 0.01, b));
  const auto q = posterior_loghr_steps(make_draws(even, three));
  CHECK(q[0].mean == doctest::Approx(0.2));
  CHECK(q[0].lower == doctest::Approx(-0.1 + 0.05 * 0.3));
  CHECK(q[0].upper == doctest::Approx(0.2 + 0.95 * 0.3));
}

TEST_CASE("posterior median survival") {
  const TimeGrid grid{0, 50, 100};
  const auto row = posterior_median_survival(make_draws(grid, {constant(2, 0.01)}), Arm::Reference);
  CHECK(row.status == "ok");
  CHECK(row.mean == doctest::Approx(100 * std::numbers::ln2).epsilon(1e-12));
  CHECK(row.lower == row.upper);

  const auto never = posterior_median_survival(make_draws(grid, {constant(2, 0.001)}), Arm::Reference);
  CHECK(never.status == "not_reached");
  CHECK(never.finite_fraction == 0.0);

  const auto mixed = posterior_median_survival(
      make_draws(grid, {constant(2, 0.01), constant(2, 0.001)}), Arm::Reference);
  CHECK(mixed.status == "not_reached");
  CHECK(mixed.finite_fraction == 0.5);
}

TEST_CASE("posterior RMST") {
  const TimeGrid grid{0, 1, 2};
  const std::vector<double> tau{2.0};
  const auto rows = posterior_rmst(make_draws(grid, {constant(2, 0.5)}), Arm::Reference, tau);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == doctest::Approx(1.2642411176571153).epsilon(1e-12));
  CHECK(rows[1].measure == "rmst_difference");
  CHECK(rows[1].mean == 0.0);
  CHECK(rows[1].lower == 0.0);
  CHECK(rows[1].upper == 0.0);

  const auto two = posterior_rmst(make_draws(grid, {constant(2, 0.5), constant(2, 1.0)}),
                                  Arm::Reference, tau);
  const double a = (1 - std::exp(-1.0)) / 0.5, b = 1 - std::exp(-2.0);
  CHECK(two[0].mean == doctest::Approx((a + b) / 2));
  CHECK(two[0].lower == doctest::Approx(b + 0.025 * (a - b)));

  const std::vector<double> taus{0.5, 1.0, 1.5, 2.0};
  const auto grow = posterior_rmst(make_draws(grid, {constant(2, 0.3, -0.5)}), Arm::Treated, taus);
  for (std::size_t i = 1; i < taus.size(); ++i)
    CHECK(grow[i].mean >= grow[i - 1].mean);
  CHECK(grow[4].mean > 0.0);

  const std::vector<double> bad{3.0};
  CHECK_THROWS_AS(posterior_rmst(make_draws(grid, {constant(2, 0.5)}), Arm::Reference, bad),
                  DomainError);
}

TEST_CASE("summaries ignore chain order") {
  const TimeGrid grid{0, 12, 24};
  std::vector<DrawSpec> specs;
  for (int i = 0; i < 8; ++i)
    specs.push_back(constant(2, 0.01 + 0.005 * i, -0.1 * i));
  std::vector<DrawSpec> swapped(specs.begin() + 4, specs.end());
  swapped.insert(swapped.end(), specs.begin(), specs.begin() + 4);
  const auto a = posterior_loghr_steps(make_draws(grid, specs, 2));
  const auto b = posterior_loghr_steps(make_draws(grid, swapped, 2));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean == doctest::Approx(b[i].mean).epsilon(1e-14));
    CHECK(a[i].lower == b[i].lower);
    CHECK(a[i].upper == b[i].upper);
  }
}
