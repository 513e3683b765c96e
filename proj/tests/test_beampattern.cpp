#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "beamforge/beampattern.hpp"

using namespace beamforge;

namespace {

// Average pattern of a uniform random disk array with matched weights:
// mu^2 b^2 [N A + N (N - 1) B |2 J1(x)/x|^2], x = 2 pi R * 2 sin(|phi - phi_m|/2),
// A = E|a_mi|^2 |x_i|^2 and B = |E a*_mi x_i|^2.
double average_pattern(const SystemParams& p, double phi) {
  const double A = p.sigma_s_sq * 2 * p.sigma_a_sq * p.sigma_a_sq +
                   (p.K - 1) * p.sigma_s_sq * p.sigma_a_sq * p.sigma_a_sq + p.sigma_a_sq * p.sigma_w_sq;
  const double B = p.sigma_s_sq * p.sigma_a_sq * p.sigma_a_sq;
  const double x = two_pi * p.R_over_lambda * 2.0 * std::abs(std::sin(0.5 * (phi - p.dest_angle)));
  const double c = x < 1e-12 ? 1.0 : 2.0 * std::cyl_bessel_j(1.0, x) / x;
  return p.mu_m * p.mu_m * p.b_m * p.b_m * (p.N * A + p.N * (p.N - 1.0) * B * c * c);
}

SystemParams pattern_params() {
  auto p = derive_powers(10.0, 20.0, SystemParams::with_nodes(16));
  p.K = 2;
  p.L = 4;
  p.R_over_lambda = 1.0;
  p.dest_angle = 0.4;
  return p;
}

}  // namespace

TEST(Beampattern, GridIsInclusive) {
  const auto g = uniform_grid(-1.0, 1.0, 5);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), -1.0);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g[2], 0.0);
  EXPECT_THROW(uniform_grid(0, 1, 0), UsageError);
}

TEST(Beampattern, MatchesRandomArrayAveragePattern) {
  const auto p = pattern_params();
  const std::vector<double> grid{p.dest_angle, p.dest_angle + 0.1, p.dest_angle + 0.3, p.dest_angle - 1.0,
                                 p.dest_angle + std::numbers::pi};
  const auto curve = mc_beampattern(p, Perfect{}, grid, 20'000, 8);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double want = average_pattern(p, grid[k]);
    EXPECT_NEAR(curve.power[k], want, 4.0 * curve.stderr_[k]) << "phi=" << grid[k];
  }
  // Mainlobe: mu^2 [N(N+1) + (K-1) N + N sigma_w^2] in unit conventions.
  EXPECT_NEAR(average_pattern(p, p.dest_angle),
              p.mu_m * p.mu_m * (p.N * (p.N + 1.0) + (p.K - 1.0) * p.N + p.N * p.sigma_w_sq), 1e-12);
}

TEST(Beampattern, ThreadIndependentAndFixedGeometryDeterministic) {
  const auto p = pattern_params();
  const auto grid = uniform_grid(-1.0, 1.0, 7);
  const auto a = mc_beampattern(p, ClosedLoopPhase{5.0}, grid, 500, 3, {false, 1});
  const auto b = mc_beampattern(p, ClosedLoopPhase{5.0}, grid, 500, 3, {false, 3});
  EXPECT_EQ(a.power, b.power);
  EXPECT_EQ(a.stderr_, b.stderr_);
  const auto c = mc_beampattern(p, Perfect{}, grid, 200, 3, {true, 2});
  const auto d = mc_beampattern(p, Perfect{}, grid, 200, 3, {true, 1});
  EXPECT_EQ(c.power, d.power);
}

TEST(Beampattern, DeltaAnalyticByHand) {
  auto p = derive_powers(20.0, 20.0, SystemParams::with_nodes(100));
  // mu^2 b^2 sigma_delta^2 N (K sigma_a^2 sigma_s^2 + sigma_w^2)
  for (double sd : {0.01, 0.1}) {
    const double want = p.mu_m * p.mu_m * sd * p.N * (p.K + p.sigma_w_sq);
    EXPECT_NEAR(delta_pav_analytic(p, sd), want, 1e-15);
  }
  EXPECT_EQ(delta_pav_analytic(p, 0.0), 0.0);
}

TEST(Beampattern, ComparisonDifferenceIsFlatLift) {
  const auto p = pattern_params();
  const auto grid = uniform_grid(p.dest_angle - 1.5, p.dest_angle + 1.5, 9);
  const auto cmp = mc_beampattern_comparison(p, {0.05, 0.2}, grid, 4000, 21);
  ASSERT_EQ(cmp.size(), 2u);
  for (const auto& c : cmp) {
    const double lift = delta_pav_analytic(p, c.sigma_delta_sq);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      EXPECT_NEAR(c.imperfect.power[k] - c.perfect.power[k], c.difference.power[k], 1e-12 * c.imperfect.power[k]);
      EXPECT_NEAR(c.difference.power[k], lift, 4.0 * c.difference.stderr_[k]);
    }
  }
  // Exact scaling between the two requested variances.
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(cmp[1].difference.power[k], 4.0 * cmp[0].difference.power[k], 1e-12);
}

TEST(Beampattern, ChannelErrorPatternIsUnbiased) {
  // Antithetic estimator against the plain imperfect-weights average.
  const auto p = pattern_params();
  const std::vector<double> grid{p.dest_angle, p.dest_angle + 2.0};
  const auto curve = mc_beampattern(p, ChannelError{0.3}, grid, 6000, 2);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double want = average_pattern(p, grid[k]) + delta_pav_analytic(p, 0.3);
    EXPECT_NEAR(curve.power[k], want, 4.0 * curve.stderr_[k]);
  }
}

TEST(Beampattern, LiftLinearInVarianceAndIndependentOfDestination) {
  auto p = derive_powers(20.0, 20.0, SystemParams::with_nodes(100));
  const double base = delta_pav_analytic(p, 0.01);
  EXPECT_NEAR(delta_pav_analytic(p, 0.07), 7.0 * base, 1e-15);
  p.dest_angle = 2.2;
  EXPECT_EQ(delta_pav_analytic(p, 0.01), base);
}

TEST(Beampattern, ShiftingDestinationShiftsThePattern) {
  auto p = pattern_params();
  const std::vector<double> offsets{0.0, 0.2, 0.5, 1.3};
  auto grid_for = [&](double dest) {
    std::vector<double> g;
    for (double o : offsets) g.push_back(dest + o);
    return g;
  };
  const auto a = mc_beampattern(p, Perfect{}, grid_for(p.dest_angle), 6000, 1);
  auto q = p;
  q.dest_angle = p.dest_angle + 1.0;
  const auto b = mc_beampattern(q, Perfect{}, grid_for(q.dest_angle), 6000, 2);
  for (std::size_t k = 0; k < offsets.size(); ++k)
    EXPECT_NEAR(a.power[k], b.power[k], 3.0 * std::hypot(a.stderr_[k], b.stderr_[k])) << offsets[k];
}
