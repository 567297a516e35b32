#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nvsense/compensation.hpp"
#include "oracles/reference_values.hpp"

using namespace nvsense;
using std::numbers::pi;

TEST_CASE("dc_weight") {
  CHECK(dc_weight(0.01, 1e6, 0.0) == 0.0);
  CHECK(dc_weight(0.01, 1e6, 2.5e-7) == doctest::Approx(oracle::kDcWeightExample).epsilon(1e-14));
  CHECK(dc_weight(0.01, 1e6, 2.5e-7) == doctest::Approx(7.58e-10).epsilon(1e-3));

  const double gamma = 1e6, h = 1e-13;
  for (int i = 1; i <= 100; ++i) {
    const double t = i / 101.0 / (2 * gamma);
    CHECK((dc_weight(0.01, gamma, t + h) - dc_weight(0.01, gamma, t - h)) / (2 * h) > 0.0);
  }
  CHECK_THROWS_AS((void)dc_weight(0.01, 1e6, -1.0), std::invalid_argument);
}

TEST_CASE("ac_weight") {
  const double w = 1e7;
  CHECK(std::abs(ac_weight(0.01, 1e6, pi / w, w)) < 1e-22);
  CHECK(ac_weight(0.01, 0.0, 2 * pi / w, w) == doctest::Approx(0.005 * 4 / w));

  // f(theta) ~ -theta^2/4 near zero
  const double t = 1e-10;
  const double small = ac_weight(0.01, 1e6, t, w);
  CHECK(small < 0.0);
  CHECK(small == doctest::Approx(-(0.01 / 2) * w * t * t / 4).epsilon(1e-3));

  const double gp = 1e6, theta = optimize_theta();
  const double omega = 4 * theta * gp;
  const double target = 0.005 * std::exp(-0.5) * echo_filter(theta) / omega;
  CHECK(ac_weight(0.01, gp, 1 / (4 * gp), omega) == doctest::Approx(target).epsilon(1e-13));
  CHECK_THROWS_AS((void)ac_weight(0.01, 1e6, 1e-7, 0.0), std::invalid_argument);
}

TEST_CASE("draw_inhomogeneous") {
  const auto a = draw_inhomogeneous(5, 200, {});
  const auto b = draw_inhomogeneous(5, 300, {});
  REQUIRE(a.size() == 200);
  for (std::size_t j = 0; j < a.size(); ++j) {
    CHECK(a.delta_alpha[j] > 0.0);
    CHECK(a.rate[j] > 0.0);
    // prefix stability: sample j depends only on (seed, j)
    CHECK(a.delta_alpha[j] == b.delta_alpha[j]);
  }
  double mean = 0.0;
  for (double v : b.delta_alpha) mean += v / 300;
  CHECK(mean == doctest::Approx(0.01).epsilon(0.02));

  // very wide distribution still yields positive draws
  const auto wide = draw_inhomogeneous(5, 1000, {0.01, 0.02, 1e6, 2e6});
  for (std::size_t j = 0; j < wide.size(); ++j) {
    CHECK(wide.delta_alpha[j] > 0.0);
    CHECK(wide.rate[j] > 0.0);
  }
  CHECK_THROWS_AS((void)draw_inhomogeneous(1, 4, {-0.01, 0.001, 1e6, 1e5}), std::invalid_argument);
}

TEST_CASE("solve_schedule") {
  SUBCASE("homogeneous draws sit at the optimum") {
    InhomogeneousDraw d{std::vector<double>(5, 0.01), std::vector<double>(5, 1e6)};
    for (CompensationMode m : {CompensationMode::dc, CompensationMode::ac}) {
      const auto s = solve_schedule(d, m);
      for (double t : s.times) CHECK(t == doctest::Approx(2.5e-7).epsilon(1e-12));
    }
  }

  SUBCASE("Gaussian draws, both modes") {
    const auto d = draw_inhomogeneous(2026, 200, {});
    for (CompensationMode m : {CompensationMode::dc, CompensationMode::ac}) {
      const auto s = solve_schedule(d, m);
      CHECK(s.max_relative_error() <= 1e-9);
      const double g_max = *std::max_element(d.rate.begin(), d.rate.end());
      CHECK(s.t_max == 1.0 / (4.0 * g_max));
      for (double t : s.times) {
        CHECK(t > 0.0);
        CHECK(t <= s.t_max);
      }
      if (m == CompensationMode::ac) CHECK(*s.omega_ac == doctest::Approx(4 * optimize_theta() * g_max));
    }
  }

  SUBCASE("AC takes the largest root") {
    const auto d = draw_inhomogeneous(7, 50, {});
    const auto s = solve_schedule(d, CompensationMode::ac);
    for (std::size_t j = 0; j < d.size(); ++j) {
      // weight stays above target between t_j and t_max
      for (int i = 1; i <= 20; ++i) {
        const double t = s.times[j] + (s.t_max - s.times[j]) * i / 20.0;
        CHECK(ac_weight(d.delta_alpha[j], d.rate[j], t, *s.omega_ac) >= s.target * (1 - 1e-9));
      }
    }
  }

  SUBCASE("impossible samples raise NoRootError") {
    // contrast below the minimum cannot happen for valid draws; fake it by
    // making a sample both slow and weak relative to the bound.
    InhomogeneousDraw d{{0.01, 0.01}, {1e6, 1e6}};
    const auto ok = solve_schedule(d, CompensationMode::dc);
    CHECK(ok.times[0] == doctest::Approx(2.5e-7));
    InhomogeneousDraw bad{{0.01, -0.01}, {1e6, 1e6}};
    CHECK_THROWS_AS((void)solve_schedule(bad, CompensationMode::dc), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_schedule(InhomogeneousDraw{}, CompensationMode::dc), std::invalid_argument);
  }
}

TEST_CASE("compensated_plan") {
  const auto d = draw_inhomogeneous(11, 4, {});
  const auto s = solve_schedule(d, CompensationMode::ac);
  const auto plan = compensated_plan(s, Component::y);
  CHECK(plan.kind == ProtocolKind::mf_ac);
  CHECK(plan.repetition_time() == s.t_max);
  CHECK(plan.signs == multifreq_signs(Component::y));
  CHECK_THROWS_AS((void)compensated_params(d, 0.005), std::invalid_argument);
}

TEST_CASE("sensitivity_ratio_curve") {
  RatioCurveConfig cfg;
  cfg.samples = 4000;
  cfg.seed = 99;

  const auto dc = sensitivity_ratio_curve(cfg);
  cfg.mode = CompensationMode::ac;
  const auto ac = sensitivity_ratio_curve(cfg);
  REQUIRE(dc.points.size() == 11);
  CHECK(dc.points[0].r_mean == 1.0);
  CHECK(ac.points[0].r_mean == 1.0);
  for (std::size_t i = 0; i < dc.points.size(); ++i) {
    const auto& p = dc.points[i];
    CHECK(p.n_failed == 0);
    CHECK(p.r_mean >= 1.0);
    CHECK(std::abs(p.r_mean - oracle::kRatioQuadrature[i]) <= 4 * p.r_stderr + 1e-12);
    // DC and AC use independent streams
    const double se = std::hypot(p.r_stderr, ac.points[i].r_stderr);
    CHECK(std::abs(p.r_mean - ac.points[i].r_mean) <= 3 * se + 1e-12);
    if (i > 0) CHECK(p.r_mean >= dc.points[i - 1].r_mean);
  }

  SUBCASE("deterministic across worker counts") {
    RatioCurveConfig c1;
    c1.samples = 500;
    RatioCurveConfig c4 = c1;
    c4.workers = 4;
    const auto a = sensitivity_ratio_curve(c1);
    const auto b = sensitivity_ratio_curve(c4);
    std::ostringstream sa, sb;
    write_ratio_curve_csv(sa, a);
    write_ratio_curve_csv(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("sigma_prime,r_mean,r_stderr,n_success,n_failed\n", 0) == 0);
  }

  SUBCASE("grid must contain zero") {
    RatioCurveConfig bad;
    bad.sigma_grid = {0.01, 0.02};
    CHECK_THROWS_AS((void)sensitivity_ratio_curve(bad), std::invalid_argument);
  }
}

TEST_CASE("schedule CSV") {
  const auto d = draw_inhomogeneous(3, 4, {});
  const auto s = solve_schedule(d, CompensationMode::dc);
  std::ostringstream out;
  write_schedule_csv(out, d, s);
  CHECK(out.str().rfind("j,delta_alpha_j,gamma_j,t_j,weight_j\n1,", 0) == 0);
}
