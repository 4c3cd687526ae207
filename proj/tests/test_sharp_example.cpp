#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "decouple_lab/sharp_example.hpp"

using namespace dlab;

namespace {

bool within_factor(double a, double b, double f) { return a <= f * b && b <= f * a; }

}  // namespace

TEST(Kappa, ExactValues) {
  EXPECT_NEAR(kappa_from_alpha(3, 2, 2.0), 1.0 / 6.0, 1e-15);
  EXPECT_EQ(kappa_from_alpha(3, 3, 3.0), 0.0);
  EXPECT_EQ(kappa_from_alpha(2, 2, 2.0), 0.0);
  EXPECT_NEAR(kappa_from_alpha(2, 2, 0.5), 0.25, 1e-15);
}

TEST(Kappa, OutOfRange) {
  for (auto [d, m, a] : {std::tuple{3, 2, 1.4}, std::tuple{3, 2, 3.1}, std::tuple{3, 1, 2.5}, std::tuple{3, 4, 2.5}}) {
    try {
      kappa_from_alpha(d, m, a);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
  }
}

TEST(Build, RejectsBadParameters) {
  try {
    build_sharp_example<2>(2, 1.0, 32.0, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidScale);
  }
  try {
    build_sharp_example<2>(2, 1.0, 256.0, 0.02);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
  try {
    build_sharp_example<2>(2, 1.5, 1024.0, 1e-3, 1000, 0.0, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Budget);
  }
}

TEST(Build, OmegaCountAndMass) {
  for (double R : {1024.0, 4096.0, 16384.0}) {
    auto ex = build_sharp_example<2>(2, 0.5, R, 1e-3);
    const double kap = ex.kappa;
    EXPECT_TRUE(within_factor(double(ex.omega_centers.size()), std::pow(R, kap), 8.0)) << R;
    // centers 2 pi R^{-kappa} k inside (-1, 1)
    const double step = 2.0 * std::numbers::pi * std::pow(R, -kap);
    EXPECT_EQ(ex.omega_centers.size(), 2 * static_cast<std::size_t>(std::floor((1.0 - 1e-12) / step)) + 1);
    EXPECT_NEAR(ex.omega_mass(), ex.omega_centers.size() * 2.0 * 1e-3 / R, 1e-15);
  }
  auto ex3 = build_sharp_example<3>(3, 2.0, 4096.0, 1e-3);
  EXPECT_TRUE(within_factor(double(ex3.omega_centers.size()), std::pow(4096.0, 2.0 * ex3.kappa), 8.0));
}

TEST(Build, LambdaCountMatchesLatticeVolume) {
  for (auto [a, R] : {std::pair{0.5, 1024.0}, std::pair{1.0, 4096.0}, std::pair{1.5, 1024.0}}) {
    auto ex = build_sharp_example<2>(2, a, R, 1e-3);
    // area of B_R divided by the lattice cell R^kappa * R^{2 kappa} / 2 pi
    const double want = 2.0 * std::numbers::pi * std::numbers::pi * std::pow(R, 2.0 - 3.0 * ex.kappa);
    EXPECT_NEAR(double(ex.lambda_count) / want, 1.0, 0.05) << a << " " << R;
    EXPECT_TRUE(within_factor(double(ex.lambda_count) / (2.0 * std::numbers::pi * std::numbers::pi),
                              std::pow(R, 2.0 - 3.0 * ex.kappa), 8.0));
  }
}

TEST(Build, KappaZeroHasOneCenterAtOrigin) {
  auto ex = build_sharp_example<2>(2, 2.0, 256.0, 1e-3);
  ASSERT_EQ(ex.omega_centers.size(), 1u);
  EXPECT_EQ(ex.omega_centers[0][0], 0.0);
}

TEST(Build, SubsamplingKeepsBudgetAndInflation) {
  auto ex = build_sharp_example<2>(2, 1.5, 1024.0, 1e-3, 100000);
  EXPECT_LE(ex.lambda_points.size(), 100000u);
  EXPECT_NEAR(ex.inflation * ex.lambda_points.size(), double(ex.lambda_count), 1e-6);
}

TEST(Build, RebuildIsBitIdentical) {
  auto a = build_sharp_example<3>(2, 2.0, 256.0, 1e-3);
  auto b = build_sharp_example<3>(2, 2.0, 256.0, 1e-3);
  EXPECT_EQ(a.omega.nodes, b.omega.nodes);
  EXPECT_EQ(a.lambda_points, b.lambda_points);
  auto ra = example_report<3>(a, 4.0), rb = example_report<3>(b, 4.0);
  EXPECT_EQ(ra.metrics, rb.metrics);
}

TEST(Phase, DeviationIsSmallOnLambda) {
  for (double a : {0.5, 1.0}) {
    auto ex = build_sharp_example<2>(2, a, 4096.0, 1e-3);
    EXPECT_LT(phase_deviation<2>(ex), 0.01 + 3e-3);
  }
  auto ex3 = build_sharp_example<3>(2, 2.0, 256.0, 1e-3);
  EXPECT_LT(phase_deviation<3>(ex3), 0.01 + 3e-3);
}

TEST(Phase, HalfStepShiftBreaksCoherence) {
  // needs Omega balls at k = +-1, i.e. R^kappa > 2 pi
  auto ex = build_sharp_example<2>(2, 0.5, 4096.0, 1e-3);
  ASSERT_GE(ex.omega_centers.size(), 3u);
  EXPECT_GT(phase_deviation<2>(ex, 0.5 * ex.step_d), 0.01);
}

TEST(Report, CoherenceAndScales) {
  ExampleFields<2> keep;
  auto ex = build_sharp_example<2>(2, 0.5, 4096.0, 1e-3);
  auto rep = example_report<2>(ex, 4.0, &keep);
  EXPECT_GE(rep.get("coherence_min"), 0.9);
  EXPECT_TRUE(within_factor(rep.get("cap_magnitude_normalized"), rep.get("cap_magnitude_predicted"), 8.0));
  EXPECT_TRUE(within_factor(rep.get("M"), rep.get("M_predicted"), 8.0));
  // coherence oracle: |f| >= cos(phase deviation) times the Omega mass
  const double floor = std::cos(phase_deviation<2>(ex)) * extension_normalization<2>() * ex.omega_mass();
  for (const auto& v : keep.on_lambda.values) EXPECT_GE(std::abs(v), 0.9 * floor);
}

TEST(Report, RatioIdentityRecomputed) {
  for (double p : {3.0, 4.0}) {
    ExampleFields<3> keep;
    auto ex = build_sharp_example<3>(2, 2.0, 256.0, 1e-3);
    auto rep = example_report<3>(ex, p, &keep);
    double lhs = 0.0;
    for (std::size_t i = 0; i < keep.on_lambda.size(); ++i)
      lhs += keep.on_lambda.point_weights[i] * std::pow(std::abs(keep.on_lambda.values[i]), p);
    lhs = std::pow(lhs, 1.0 / p);
    double acc = 0.0;
    for (const auto& [cap, vals] : keep.per_cap) {
      double s = 0.0;
      for (std::size_t i = 0; i < vals.size(); ++i) s += keep.y.point_weights[i] * std::pow(std::abs(vals[i]), p);
      acc += s;
    }
    const double rhs = std::pow(double(keep.incidence.M), 0.5 - 1.0 / p) * std::pow(acc, 1.0 / p);
    EXPECT_NEAR(rep.get("lhs_norm") / lhs, 1.0, 1e-9);
    EXPECT_NEAR(rep.get("rhs") / rhs, 1.0, 1e-9);
    EXPECT_NEAR(rep.get("ratio"), lhs / rhs, 1e-9 * lhs / rhs);
    EXPECT_EQ(rep.get("M"), double(keep.incidence.M));
    EXPECT_EQ(rep.get("W_size"), double(keep.W.size()));
  }
}

TEST(Report, TubesLieInsideY) {
  auto ex = build_sharp_example<2>(2, 0.5, 4096.0, 1e-3);
  auto W = example_tubes<2>(ex);
  ASSERT_FALSE(W.empty());
  for (const auto& t : W)
    for (const auto& q : tube_boundary_samples<2>(t, 1.0)) EXPECT_LT(norm<2>(q), ex.y_outer);
}

// The ratio carries a factor c^{m/p} from the Omega ball radii; the R power
// follows the predicted exponent.
TEST(Report, RatioMatchesPredictedPowerAfterBallNormalization) {
  for (auto [D3, m, a, R] : {std::tuple{false, 2, 0.5, 1024.0}, std::tuple{false, 2, 1.5, 1024.0},
                             std::tuple{true, 2, 2.0, 256.0}}) {
    const double p = 4.0, c = 1e-3;
    ExperimentReport rep;
    if (D3)
      rep = example_report<3>(build_sharp_example<3>(m, a, R, c), p);
    else
      rep = example_report<2>(build_sharp_example<2>(m, a, R, c), p);
    const double normalized = rep.get("ratio") / std::pow(c, m / p);
    EXPECT_TRUE(within_factor(normalized, std::pow(R, rep.get("ratio_exponent_predicted")), 8.0)) << normalized;
  }
}

TEST(LambdaWeight, CountsCellsInBox) {
  auto ex = build_sharp_example<2>(2, 1.0, 1024.0, 1e-3);
  auto w = lambda_weight<2>(ex, ex.R);
  EXPECT_EQ(static_cast<long>(w.values.size()), ex.lambda_count);
  EXPECT_NEAR(w.integral(), ex.lambda_volume(), 1e-9 * ex.lambda_volume());
}

TEST(Sweep, ReportsFitAgainstPrediction) {
  auto rep = sharp_sweep<2>(2, 1.0, {256.0, 512.0, 1024.0}, 4.0, 1e-3, 1000000);
  EXPECT_TRUE(rep.has("ratio_R256"));
  EXPECT_TRUE(rep.has("ratio_R1024"));
  EXPECT_NEAR(rep.get("predicted_slope"), (1.0 / 6.0) * (0.5 - 0.75), 1e-15);
  EXPECT_TRUE(std::isfinite(rep.get("fitted_slope")));
}

TEST(LambdaWeight, BallConditionAtRootScale) {
  for (double a : {0.5, 1.0, 1.5}) {
    const double R = 4096.0, s = std::sqrt(R);
    auto ex = build_sharp_example<2>(2, a, R, 1e-3);
    auto prof = ball_condition_profile<2>(lambda_weight<2>(ex, 4.0 * s), a, {s});
    ASSERT_EQ(prof.size(), 1u);
    // cells in the heaviest cube against R^{alpha/2}
    const double cells = prof[0].second * std::pow(s, a) / ex.lambda_cell_volume;
    EXPECT_TRUE(within_factor(cells, std::pow(R, a / 2.0), 16.0)) << a << " " << cells;
  }
}
