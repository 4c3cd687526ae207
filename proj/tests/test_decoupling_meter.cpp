#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "decouple_lab/decoupling_meter.hpp"

using namespace dlab;

namespace {

template <int D>
SampledField<D> random_field(std::uint64_t seed, int n, double radius) {
  std::mt19937_64 g(seed);
  SampledField<D> f;
  for (int i = 0; i < n; ++i) {
    Point<D> x;
    for (auto& v : x) v = uniform(g, -radius, radius);
    f.points.push_back(x);
    f.values.push_back(cplx(gaussian(g), gaussian(g)));
    f.point_weights.push_back(uniform(g, 0.5, 2.0));
  }
  return f;
}

template <int D>
CubeRegion<D> cubes_around_origin(double side, int reach) {
  CubeRegion<D> r;
  r.all = false;
  r.side = side;
  std::array<long, D> k;
  for (auto& v : k) v = -reach;
  while (true) {
    CubeIndex<D> c;
    for (int i = 0; i < D; ++i) c[i] = k[i];
    r.cubes.insert(c);
    int j = D - 1;
    while (j >= 0 && ++k[j] >= reach) k[j--] = -reach;
    if (j < 0) break;
  }
  return r;
}

}  // namespace

TEST(WeightedNorm, ConstantFieldGivesVolumePower) {
  auto f = ball_lattice<2>(10.0, 0.5, 1.0);
  for (auto& v : f.values) v = 1.0;
  double vol = 0.0;
  for (double w : f.point_weights) vol += w;
  for (double p : {1.0, 2.0, 4.0, 7.5}) EXPECT_NEAR(weighted_lp_norm<2>(f, CubeRegion<2>::everything(), p), std::pow(vol, 1.0 / p), 1e-12);
}

TEST(WeightedNorm, TwoNormMatchesDirectSum) {
  auto f = random_field<3>(1, 300, 5.0);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.point_weights[i] * std::norm(f.values[i]);
  EXPECT_NEAR(weighted_lp_norm<3>(f, CubeRegion<3>::everything(), 2.0), std::sqrt(s), 1e-12);
}

TEST(WeightedNorm, MonotoneInRegion) {
  auto f = random_field<2>(2, 500, 8.0);
  auto small = cubes_around_origin<2>(2.0, 2), big = cubes_around_origin<2>(2.0, 3);
  for (double p : {2.0, 4.0})
    EXPECT_LE(weighted_lp_norm<2>(f, small, p), weighted_lp_norm<2>(f, big, p) + 1e-15);
}

TEST(WeightedNorm, EmptyRegionAndBadExponent) {
  auto f = random_field<2>(3, 20, 1.0);
  CubeRegion<2> far;
  far.all = false;
  far.side = 1.0;
  far.cubes.insert(CubeIndex<2>{100, 100});
  try {
    weighted_lp_norm<2>(f, far, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyRegion);
  }
  EXPECT_THROW(weighted_lp_norm<2>(f, CubeRegion<2>::everything(), 0.0), Error);
}

TEST(WeightedNorm, LogConvexInReciprocalExponent) {
  // ||f||_{p_t} <= ||f||_{p0}^{1-t} ||f||_{p1}^t with 1/p_t = (1-t)/p0 + t/p1
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto f = random_field<2>(seed, 100, 3.0);
    const double p0 = 2.0, p1 = 8.0, t = 0.3;
    const double pt = 1.0 / ((1.0 - t) / p0 + t / p1);
    auto all = CubeRegion<2>::everything();
    double lhs = weighted_lp_norm<2>(f, all, pt);
    double rhs = std::pow(weighted_lp_norm<2>(f, all, p0), 1.0 - t) * std::pow(weighted_lp_norm<2>(f, all, p1), t);
    EXPECT_LE(lhs, rhs * (1.0 + 1e-9));
  }
}

TEST(Incidence, SingleTubeMeetsALineOfCubes) {
  const double R = 1024.0;
  auto W = random_central_tubes<2>(R, 1, 1);
  auto prof = incidence_count<2>(W, R);
  EXPECT_EQ(prof.M, 1);
  // length R, cube side R^{1/2}, tube radius R^{1/2}: a few cubes across
  const double along = R / std::sqrt(R);
  EXPECT_GE(double(prof.Y_cubes.size()), along);
  EXPECT_LE(double(prof.Y_cubes.size()), 6.0 * along);
}

TEST(Incidence, DuplicatedTubeDoublesM) {
  auto W = random_central_tubes<2>(256.0, 2, 1);
  W.push_back(W[0]);
  EXPECT_EQ(incidence_count<2>(W, 256.0).M, 2);
}

TEST(Incidence, EmptySetHasNoIncidences) {
  auto prof = incidence_count<3>({}, 256.0);
  EXPECT_EQ(prof.M, 0);
  EXPECT_TRUE(prof.Y_cubes.empty());
}

TEST(Incidence, PermutationInvariant) {
  auto W = random_central_tubes<3>(256.0, 3, 12);
  auto a = incidence_count<3>(W, 256.0);
  std::mt19937_64 g(4);
  std::shuffle(W.begin(), W.end(), g);
  auto b = incidence_count<3>(W, 256.0);
  EXPECT_EQ(a.M, b.M);
  EXPECT_EQ(a.per_cube_counts, b.per_cube_counts);
}

TEST(Incidence, AdditiveOverDisjointUnion) {
  auto W = random_central_tubes<2>(1024.0, 5, 10);
  std::vector<Tube<2>> A(W.begin(), W.begin() + 4), B(W.begin() + 4, W.end());
  auto pa = incidence_count<2>(A, 1024.0), pb = incidence_count<2>(B, 1024.0), pw = incidence_count<2>(W, 1024.0);
  for (const auto& [k, c] : pw.per_cube_counts) {
    int ca = pa.per_cube_counts.count(k) ? pa.per_cube_counts.at(k) : 0;
    int cb = pb.per_cube_counts.count(k) ? pb.per_cube_counts.at(k) : 0;
    EXPECT_EQ(c, ca + cb);
  }
  EXPECT_LE(pw.M, pa.M + pb.M);
}

TEST(Ratio, SingleTubeIsAtMostOne) {
  const double R = 256.0;
  auto W = random_central_tubes<2>(R, 6, 1);
  auto grid = ball_lattice<2>(0.5 * R, 2.0, R);
  auto field = random_packet_field<2>(W, 6, R, grid.points, grid.point_weights);
  DecouplingCase c;
  c.d = 2;
  c.p = 4.0;
  c.R = R;
  auto rep = decoupling_ratio<2>(field.packets, CubeRegion<2>::everything(), c, 1);
  EXPECT_LE(rep.get("ratio"), 1.0 + 1e-12);
}

TEST(Ratio, ScaleMismatch) {
  const double R = 256.0;
  auto W = random_central_tubes<2>(R, 6, 2);
  auto grid = ball_lattice<2>(0.5 * R, 4.0, R);
  auto field = random_packet_field<2>(W, 6, R, grid.points, grid.point_weights);
  DecouplingCase c;
  c.d = 2;
  c.p = 4.0;
  c.R = 512.0;
  try {
    decoupling_ratio<2>(field.packets, CubeRegion<2>::everything(), c, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ScaleMismatch);
  }
}

TEST(Ratio, InvariantUnderAmplitudeScaling) {
  const double R = 256.0;
  auto W = random_central_tubes<2>(R, 7, 5);
  auto grid = ball_lattice<2>(0.5 * R, 4.0, R);
  auto field = random_packet_field<2>(W, 7, R, grid.points, grid.point_weights, 3.0);
  auto scaled = field.packets;
  const cplx a(-3.7, 12.5);
  for (auto& pk : scaled.packets)
    for (auto& v : pk.vals) v *= a;
  DecouplingCase c;
  c.d = 2;
  c.p = 6.0;
  c.R = R;
  const int M = incidence_count<2>(W, R).M;
  auto r1 = decoupling_ratio<2>(field.packets, CubeRegion<2>::everything(), c, M);
  auto r2 = decoupling_ratio<2>(scaled, CubeRegion<2>::everything(), c, M);
  EXPECT_NEAR(r1.get("ratio"), r2.get("ratio"), 1e-12 * r1.get("ratio"));
}

TEST(Exponents, KnownValues) {
  DecouplingCase c;
  c.d = 2;
  c.m = 2;
  c.p = 4.0;
  EXPECT_EQ(theoretical_exponent(c).R_exponent, 0.0);
  c.d = 3;
  c.m = 3;
  c.p = 6.0;
  EXPECT_NEAR(theoretical_exponent(c).R_exponent, 1.0 / 6.0, 1e-15);
  c.variant = Variant::b;
  c.m = 2;
  c.p = 4.0;
  c.alpha = 2.0;
  EXPECT_NEAR(theoretical_exponent(c).R_exponent, -1.0 / 24.0, 1e-15);
  EXPECT_DOUBLE_EQ(p_critical(2), 6.0);
  EXPECT_DOUBLE_EQ(p_critical(3), 4.0);
}

TEST(Exponents, InvalidCases) {
  DecouplingCase c;
  c.d = 3;
  c.m = 2;
  c.p = 1.5;
  EXPECT_THROW(theoretical_exponent(c), Error);
  c.variant = Variant::b;
  c.p = 7.0;
  try {
    theoretical_exponent(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidCase);
  }
  c.variant = Variant::c;
  c.p = 5.0;
  c.R = 256.0;
  c.r = 0.01;
  EXPECT_THROW(theoretical_exponent(c), Error);
  c.r = 0.5;
  EXPECT_NO_THROW(theoretical_exponent(c));
}

TEST(Fit, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double R : {256.0, 512.0, 1024.0, 2048.0}) pts.emplace_back(R, 3.0 * std::pow(R, -0.37));
  auto fit = exponent_fit(pts);
  EXPECT_NEAR(fit.slope, -0.37, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-10);
  EXPECT_NEAR(fit.stderr_slope, 0.0, 1e-10);
  auto two = exponent_fit({{2.0, 8.0}, {4.0, 64.0}});
  EXPECT_NEAR(two.slope, 3.0, 1e-14);
}

TEST(Fit, NoisySlopeWithinThreeStandardErrors) {
  std::mt19937_64 g(42);
  std::vector<std::pair<double, double>> pts;
  for (int k = 6; k <= 16; ++k) {
    double R = std::ldexp(1.0, k);
    pts.emplace_back(R, std::pow(R, 0.25) * std::exp(0.05 * gaussian(g)));
  }
  auto fit = exponent_fit(pts);
  EXPECT_GT(fit.stderr_slope, 0.0);
  EXPECT_LE(std::abs(fit.slope - 0.25), 3.0 * fit.stderr_slope);
}

TEST(Fit, Errors) {
  try {
    exponent_fit({{2.0, 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  EXPECT_THROW(exponent_fit({{2.0, 1.0}, {2.0, 3.0}}), Error);
  EXPECT_THROW(exponent_fit({{2.0, 1.0}, {4.0, -1.0}}), Error);
}

TEST(Generic, TrialStaysBelowCeiling) {
  auto rep = generic_decoupling_trial<2>(256.0, {4.0, 6.0}, 0, 16);
  for (const char* k : {"p4_ratio", "p6_ratio"}) EXPECT_LE(rep.get(k), 10.0 * std::pow(256.0, 0.1));
  EXPECT_EQ(rep.get("tubes"), 16.0);
}

TEST(Generic, CentralTubesAreDistinctCaps) {
  auto W = random_central_tubes<3>(256.0, 9, 20);
  ASSERT_EQ(W.size(), 20u);
  std::set<int> caps;
  for (const auto& t : W) {
    caps.insert(t.cap_index);
    EXPECT_LE(norm<3>(t.axis_point), 2.0 * t.radius);
  }
  EXPECT_EQ(caps.size(), 20u);
  try {
    random_central_tubes<2>(256.0, 0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}
