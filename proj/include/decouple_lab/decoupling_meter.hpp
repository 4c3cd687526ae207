#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "extension.hpp"
#include "report.hpp"
#include "weights.hpp"

namespace dlab {

template <int D>
using CubeIndex = std::array<long, D>;

template <int D>
CubeIndex<D> cube_of(const Point<D>& x, double side) {
  CubeIndex<D> k;
  for (int i = 0; i < D; ++i) k[i] = static_cast<long>(std::floor(x[i] / side));
  return k;
}

// A union of origin-anchored lattice cubes, or everything when `all` is set.
template <int D>
struct CubeRegion {
  double side = 1.0;
  bool all = true;
  std::set<CubeIndex<D>> cubes;

  static CubeRegion everything() { return {}; }

  bool contains(const Point<D>& x) const { return all || cubes.count(cube_of<D>(x, side)) > 0; }
};

// (sum_x w(x) H(x) |f(x)|^p)^{1/p} over the sample points in the region.
template <int D, typename HFn>
double weighted_lp_norm(const SampledField<D>& f, const CubeRegion<D>& region, HFn&& H, double p) {
  if (!(p > 0.0)) fail(ErrorKind::Domain, "p must be positive");
  CompensatedSum s;
  std::size_t used = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!region.contains(f.points[i])) continue;
    ++used;
    double h = H(f.points[i]);
    if (h != 0.0) s.add(f.point_weights[i] * h * std::pow(std::abs(f.values[i]), p));
  }
  if (used == 0) fail(ErrorKind::EmptyRegion, "region contains no sample points");
  return std::pow(s.value(), 1.0 / p);
}

template <int D>
double weighted_lp_norm(const SampledField<D>& f, const CubeRegion<D>& region, double p) {
  return weighted_lp_norm<D>(f, region, [](const Point<D>&) { return 1.0; }, p);
}

template <int D>
double weighted_lp_norm(const SampledField<D>& f, const CubeRegion<D>& region, const Weight<D>& h, double p) {
  return weighted_lp_norm<D>(f, region, [&h](const Point<D>& x) { return h.value_at(x); }, p);
}

// ---------------------------------------------------------------------------
// Incidences

template <int D>
struct IncidenceProfile {
  std::map<CubeIndex<D>, int> per_cube_counts;
  int M = 0;
  std::vector<CubeIndex<D>> Y_cubes;
  double mean = 0.0;
  std::map<int, long> histogram;
  double side = 0.0;
};

template <int D>
double point_box_distance(const Point<D>& p, const Point<D>& lo, const Point<D>& hi) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) {
    double e = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
    s += e * e;
  }
  return std::sqrt(s);
}

// Distance from the axis segment of t to a box; convex in the axial
// parameter, minimized by golden-section search.
template <int D>
double segment_box_distance(const Tube<D>& t, const Point<D>& lo, const Point<D>& hi) {
  auto h = [&](double a) { return point_box_distance<D>(t.axis_point + a * t.direction, lo, hi); };
  double a = -0.5 * t.length, b = 0.5 * t.length;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = h(x1), f2 = h(x2);
  for (int it = 0; it < 90 && (b - a) > 1e-12 * t.length; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = h(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = h(x2);
    }
  }
  return std::min({f1, f2, h(-0.5 * t.length), h(0.5 * t.length)});
}

// Cubes of side `side` met by t, where meeting means the cube comes within
// the tube radius of the axis segment.
template <int D>
std::vector<CubeIndex<D>> cubes_met(const Tube<D>& t, double side) {
  std::set<CubeIndex<D>> cand;
  const int reach = static_cast<int>(std::ceil(t.radius / side)) + 1;
  const int steps = static_cast<int>(std::ceil(t.length / (0.5 * side))) + 1;
  for (int s = 0; s <= steps; ++s) {
    double a = -0.5 * t.length + t.length * s / steps;
    auto c = cube_of<D>(t.axis_point + a * t.direction, side);
    std::array<int, D> off{};
    for (auto& o : off) o = -reach;
    while (true) {
      CubeIndex<D> k;
      for (int i = 0; i < D; ++i) k[i] = c[i] + off[i];
      cand.insert(k);
      int q = D - 1;
      while (q >= 0 && ++off[q] > reach) off[q--] = -reach;
      if (q < 0) break;
    }
  }
  std::vector<CubeIndex<D>> out;
  for (const auto& k : cand) {
    Point<D> lo, hi;
    for (int i = 0; i < D; ++i) {
      lo[i] = k[i] * side;
      hi[i] = (k[i] + 1) * side;
    }
    if (segment_box_distance<D>(t, lo, hi) < t.radius) out.push_back(k);
  }
  return out;
}

template <int D>
IncidenceProfile<D> incidence_count(const std::vector<Tube<D>>& W, double R) {
  IncidenceProfile<D> prof;
  prof.side = std::sqrt(R);
  if (W.empty()) return prof;
  std::vector<std::vector<CubeIndex<D>>> met(W.size());
  parallel_for(W.size(), [&](std::size_t i) { met[i] = cubes_met<D>(W[i], prof.side); });
  for (const auto& v : met)
    for (const auto& k : v) ++prof.per_cube_counts[k];
  long total = 0;
  for (const auto& [k, c] : prof.per_cube_counts) {
    prof.M = std::max(prof.M, c);
    prof.Y_cubes.push_back(k);
    ++prof.histogram[c];
    total += c;
  }
  prof.mean = prof.per_cube_counts.empty() ? 0.0 : double(total) / double(prof.per_cube_counts.size());
  return prof;
}

// ---------------------------------------------------------------------------
// Exponents

enum class Variant { a, b, c };

struct DecouplingCase {
  Variant variant = Variant::a;
  int d = 2;
  int m = 2;
  double p = 2.0;
  double alpha = 0.0;
  double r = 1.0;
  double R = 1.0;
};

inline double p_critical(int k) {
  if (k < 2) fail(ErrorKind::InvalidCase, "p_k needs k >= 2");
  return 2.0 * (k + 1) / (k - 1);
}

inline double gamma_m(int m, double p) {
  if (p < p_critical(m)) return 0.0;
  return (m - 1) / 4.0 - (m + 1) / (2.0 * p);
}

inline void validate_case(const DecouplingCase& c) {
  if (c.m < 2 || c.m > c.d) fail(ErrorKind::InvalidCase, "need 2 <= m <= d");
  const double tol = 1e-12;
  switch (c.variant) {
    case Variant::a:
      if (c.p < 2.0 - tol) fail(ErrorKind::InvalidCase, "variant a needs p >= 2");
      break;
    case Variant::b:
      if (c.p < 2.0 - tol || c.p > p_critical(c.m) + tol) fail(ErrorKind::InvalidCase, "variant b needs 2 <= p <= p_m");
      break;
    case Variant::c:
      if (c.p < p_critical(c.d) - tol || c.p > p_critical(c.m) + tol)
        fail(ErrorKind::InvalidCase, "variant c needs p_d <= p <= p_m");
      if (c.r < 1.0 / std::sqrt(c.R) - tol || c.r > 1.0 + tol)
        fail(ErrorKind::InvalidCase, "variant c needs R^{-1/2} <= r <= 1");
      break;
  }
}

struct ExponentBundle {
  double R_exponent = 0.0;
  double r_exponent = 0.0;
};

inline ExponentBundle theoretical_exponent(const DecouplingCase& c) {
  validate_case(c);
  switch (c.variant) {
    case Variant::a:
      return {gamma_m(c.m, c.p), 0.0};
    case Variant::b:
      return {0.5 * (c.alpha - c.d) * (1.0 / c.p - 1.0 / p_critical(c.m)), 0.0};
    case Variant::c: {
      double e = (c.d - 1) / 4.0 - (c.d + 1) / (2.0 * c.p);
      return {e, (c.d - c.alpha) * (1.0 / c.p - 1.0 / p_critical(c.m)) + 2.0 * e};
    }
  }
  return {};
}

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

// Ordinary least squares of log(value) on log(R).
inline FitResult exponent_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) fail(ErrorKind::InsufficientData, "need at least two samples");
  std::vector<double> x, y;
  for (const auto& [R, v] : samples) {
    if (!(R > 0.0)) fail(ErrorKind::Domain, "R must be positive");
    if (!(v > 0.0)) fail(ErrorKind::Domain, "values must be positive");
    x.push_back(std::log(R));
    y.push_back(std::log(v));
  }
  const double n = static_cast<double>(x.size());
  double mx = compensated_total(x.begin(), x.end()) / n;
  double my = compensated_total(y.begin(), y.end()) / n;
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (!(sxx.value() > 0.0)) fail(ErrorKind::InsufficientData, "need at least two distinct R");
  FitResult fr;
  fr.slope = sxy.value() / sxx.value();
  fr.intercept = my - fr.slope * mx;
  if (x.size() > 2) {
    CompensatedSum sse;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double e = y[i] - fr.intercept - fr.slope * x[i];
      sse.add(e * e);
    }
    fr.stderr_slope = std::sqrt(sse.value() / (n - 2.0) / sxx.value());
  }
  return fr;
}

// ---------------------------------------------------------------------------
// Decoupling ratio

template <int D, typename HFn>
ExperimentReport decoupling_ratio(const WavePacketSet<D>& ws, const CubeRegion<D>& Y, HFn&& H,
                                  const DecouplingCase& c, int M) {
  if (std::abs(ws.scale - c.R) > 1e-9 * std::max(1.0, std::abs(c.R)))
    fail(ErrorKind::ScaleMismatch, "packet scale differs from the case scale");
  if (c.d != D) fail(ErrorKind::InvalidCase, "case dimension differs from the field dimension");
  auto ex = theoretical_exponent(c);
  SampledField<D> sum;
  sum.points = ws.points;
  sum.point_weights = ws.point_weights;
  sum.scale = ws.scale;
  sum.values = ws.packet_sum();
  double lhs = weighted_lp_norm<D>(sum, Y, H, c.p);
  CompensatedSum acc;
  for (std::size_t k = 0; k < ws.packets.size(); ++k) acc.add(std::pow(ws.packet_lp(k, c.p), c.p));
  double rhs = std::pow(double(M), 0.5 - 1.0 / c.p) * std::pow(acc.value(), 1.0 / c.p);
  ExperimentReport rep;
  rep.add("lhs", lhs);
  rep.add("rhs", rhs);
  rep.add("ratio", rhs > 0.0 ? lhs / rhs : 0.0);
  rep.add("M", M);
  rep.add("packets", static_cast<double>(ws.packets.size()));
  rep.add("R_exponent", ex.R_exponent);
  rep.add("r_exponent", ex.r_exponent);
  return rep;
}

template <int D>
ExperimentReport decoupling_ratio(const WavePacketSet<D>& ws, const CubeRegion<D>& Y, const DecouplingCase& c,
                                  int M) {
  return decoupling_ratio<D>(ws, Y, [](const Point<D>&) { return 1.0; }, c, M);
}

// n_tubes tubes in distinct random caps, each through B(0, 2R^{1/2+beta}).
template <int D>
std::vector<Tube<D>> random_central_tubes(double R, std::uint64_t seed, int n_tubes, double beta = 0.0) {
  if (n_tubes < 1) fail(ErrorKind::EmptyInput, "need at least one tube");
  auto caps = build_caps<D>(R);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(caps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto fam = empty_family<D>(R, beta, ScaleMode::scale_R);
  std::vector<Tube<D>> W;
  for (std::size_t q = 0; q < order.size() && static_cast<int>(W.size()) < n_tubes; ++q) {
    const auto& cap = caps[order[q]];
    std::vector<Tube<D>> near;
    for (const auto& t : add_direction_tubes<D>(fam, cap.id, cap.normal))
      if (norm<D>(t.axis_point) <= 2.0 * t.radius) near.push_back(t);
    if (near.empty()) continue;
    W.push_back(near[static_cast<std::size_t>(uniform01(rng) * double(near.size()))]);
  }
  return W;
}

// One seeded trial of the generic ratio on random_central_tubes, sampled on a
// lattice inside B(0, R/2) and truncated to 3T. Metrics are prefixed by p,
// e.g. "p4_ratio".
template <int D>
ExperimentReport generic_decoupling_trial(double R, const std::vector<double>& ps, std::uint64_t seed, int n_tubes,
                                          double spacing = 2.5, double beta = 0.0) {
  if (!(spacing > 0.0)) fail(ErrorKind::Domain, "spacing must be positive");
  auto W = random_central_tubes<D>(R, seed, n_tubes, beta);
  auto grid = ball_lattice<D>(0.5 * R, spacing, R);
  auto field = random_packet_field<D>(W, seed, R, grid.points, grid.point_weights, 3.0);
  const int M = incidence_count<D>(W, R).M;
  ExperimentReport rep;
  rep.add("R", R);
  rep.add("tubes", static_cast<double>(W.size()));
  rep.add("sample_points", static_cast<double>(grid.size()));
  for (double p : ps) {
    DecouplingCase c;
    c.variant = Variant::a;
    c.d = D;
    c.m = D;
    c.p = p;
    c.R = R;
    std::ostringstream pre;
    pre << "p" << p << "_";
    rep.merge(decoupling_ratio<D>(field.packets, CubeRegion<D>::everything(), c, M), pre.str());
  }
  return rep;
}

}  // namespace dlab
