#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "decoupling_meter.hpp"
#include "distance_sets.hpp"
#include "geometry.hpp"
#include "report.hpp"
#include "sharp_example.hpp"
#include "weights.hpp"

namespace dlab {

inline std::string scale_tag(double R) { return std::to_string(static_cast<long long>(std::llround(R))); }

template <int D>
ExperimentReport cap_report(double R) {
  auto caps = build_caps<D>(R);
  CompensatedSum area;
  for (const auto& c : caps) area.add(c.area());
  ExperimentReport rep;
  rep.add("R", R);
  rep.add("cap_count", static_cast<double>(caps.size()));
  rep.add("cells_per_axis", cap_cells_per_axis<D>(R));
  rep.add("total_area", area.value());
  rep.add("square_area", std::pow(2.0, D - 1));
  return rep;
}

// Random (thickness, m)-plate whose central plane passes through a uniform
// point of B(0, anchor_radius).
template <int D>
Plate<D> random_plate(std::mt19937_64& g, int m, double thickness, double anchor_radius = 1.0) {
  std::vector<Point<D>> v(m);
  for (auto& x : v)
    for (auto& c : x) c = gaussian(g);
  Plate<D> p;
  p.basis = orthonormalize<D>(v);
  p.m = m;
  p.thickness = thickness;
  Point<D> a;
  do {
    for (auto& c : a) c = uniform(g, -1.0, 1.0);
  } while (!(norm<D>(a) < 1.0));
  p.anchor = anchor_radius * a;
  return p;
}

// Covering fraction over `trials` random (r/2, m)-plates meeting B(0,1), and
// the worst counting constant count / (s/r)^{(m+1)(d-m)} over `big` random
// (s, m)-plates at s/r = 2 and 4. Counting uses traces in B(0,2).
template <int D>
ExperimentReport net_check(double r, int m, int trials, int big, std::uint64_t seed) {
  auto net = build_plate_net<D>(r, m);
  std::mt19937_64 g(seed);
  long covered = 0;
  for (int i = 0; i < trials; ++i) {
    auto p = random_plate<D>(g, m, 0.5 * r);
    if (plate_in_plate<D>(p, net.plate(covering_index<D>(net, p)))) ++covered;
  }
  ExperimentReport rep;
  rep.add("net_size", static_cast<double>(net.size()));
  rep.add("orientations", static_cast<double>(net.orientations.size()));
  rep.add("translations", static_cast<double>(net.translations.size()));
  rep.add("covered_fraction", trials > 0 ? double(covered) / trials : 1.0);
  for (int ratio : {2, 4}) {
    double worst = 0.0;
    for (int i = 0; i < big; ++i) {
      auto b = random_plate<D>(g, m, ratio * r);
      double scale = std::pow(double(ratio), (m + 1) * (D - m));
      worst = std::max(worst, double(count_contained<D>(net, b, 2.0)) / scale);
    }
    rep.add("counting_constant_s" + std::to_string(ratio), worst);
  }
  return rep;
}

// Worst and mean generic ratio over seeds seed0, ..., seed0 + trials - 1 at each R.
template <int D>
ExperimentReport decouple_sweep(const std::vector<double>& Rs, const std::vector<double>& ps, int trials,
                                std::uint64_t seed0, int n_tubes) {
  ExperimentReport rep;
  for (double p : ps) {
    std::ostringstream pre;
    pre << "p" << p << "_";
    DecouplingCase c;
    c.d = D;
    c.m = D;
    c.p = p;
    c.R = Rs.empty() ? 1.0 : Rs.front();
    rep.add(pre.str() + "R_exponent", theoretical_exponent(c).R_exponent);
  }
  for (double R : Rs) {
    std::vector<double> worst(ps.size(), 0.0), mean(ps.size(), 0.0);
    for (int s = 0; s < trials; ++s) {
      auto t = generic_decoupling_trial<D>(R, ps, seed0 + static_cast<std::uint64_t>(s), n_tubes);
      for (std::size_t k = 0; k < ps.size(); ++k) {
        std::ostringstream key;
        key << "p" << ps[k] << "_ratio";
        double v = t.get(key.str());
        worst[k] = std::max(worst[k], v);
        mean[k] += v / trials;
      }
    }
    for (std::size_t k = 0; k < ps.size(); ++k) {
      std::ostringstream pre;
      pre << "p" << ps[k] << "_";
      rep.add(pre.str() + "max_ratio_R" + scale_tag(R), worst[k]);
      rep.add(pre.str() + "mean_ratio_R" + scale_tag(R), mean[k]);
    }
    rep.add("ceiling_R" + scale_tag(R), 10.0 * std::pow(R, 0.1));
  }
  return rep;
}

// Decomposes E g, with g the frequency data of a seeded random packet field on
// random_central_tubes, into wave packets over the full tube family. Samples a
// lattice of the given spacing inside B(0, R/2).
template <int D>
ExperimentReport decomposition_trial(double R, std::uint64_t seed, int n_tubes, double spacing) {
  auto W = random_central_tubes<D>(R, seed, n_tubes);
  auto grid = ball_lattice<D>(0.5 * R, spacing, R);
  auto rp = random_packet_field<D>(W, seed, R, grid.points, grid.point_weights);
  auto caps = build_caps<D>(R);
  auto fam = build_tube_family<D>(caps, R, 0.0, ScaleMode::scale_R);
  auto ws = decompose_wave_packets<D>(rp.g, caps, fam, grid.points, grid.point_weights);
  const double parent = l2_squared<D>(ws.parent.values, ws.point_weights);
  const double resid = l2_squared<D>(ws.residual.values, ws.point_weights);
  double outside = 0.0;
  CompensatedSum separate;
  for (std::size_t k = 0; k < ws.packets.size(); ++k) {
    outside = std::max(outside, ws.outside_mass_fraction(k, 2.0));
    separate.add(std::pow(ws.packet_lp(k, 2.0), 2.0));
  }
  const double together = l2_squared<D>(ws.packet_sum(), ws.point_weights);
  ExperimentReport rep;
  rep.add("R", R);
  rep.add("packets", static_cast<double>(ws.packets.size()));
  rep.add("reconstruction_error", std::sqrt(resid / parent));
  rep.add("max_outside_2T", outside);
  rep.add("orthogonality_ratio", together / separate.value());
  return rep;
}

template <int D>
struct MeasurePair {
  DiscreteMeasure<D> mu1, mu2;
};

// Two random Cantor measures of dimension about alpha in cubes of side 1/2,
// centered at -0.45 e_1 and +0.45 e_1.
template <int D>
MeasurePair<D> separated_cantor_pair(double alpha, int depth, std::uint64_t seed) {
  auto ch = best_cantor_choice<D>(alpha);
  KeepPattern kp;
  kp.base = ch.base;
  kp.keep = ch.keep;
  Point<D> a{}, b{};
  a[0] = -0.45;
  b[0] = 0.45;
  MeasurePair<D> out;
  out.mu1 = place_measure<D>(cantor_measure<D>(alpha, depth, kp, 2 * seed + 1), a, 0.5);
  out.mu2 = place_measure<D>(cantor_measure<D>(alpha, depth, kp, 2 * seed + 2), b, 0.5);
  return out;
}

template <int D>
double median_bad_mass(const GoodBadSplit<D>& sp, const MeasurePair<D>& pair, int pins) {
  const std::size_t n = pair.mu2.size();
  const std::size_t stride = std::max<std::size_t>(1, n / static_cast<std::size_t>(std::max(pins, 1)));
  std::vector<double> v;
  for (std::size_t i = 0; i < n && static_cast<int>(v.size()) < pins; i += stride)
    v.push_back(bad_mass<D>(sp, pair.mu1, pair.mu2.atoms[i]));
  std::sort(v.begin(), v.end());
  return v.empty() ? 0.0 : v[v.size() / 2];
}

template <int D>
ExperimentReport split_report(const GoodBadSplit<D>& sp, const MeasurePair<D>& pair, int pins) {
  ExperimentReport rep;
  rep.add("R_j", sp.R_j);
  rep.add("delta", sp.delta);
  rep.add("m", sp.m);
  rep.add("tubes", static_cast<double>(sp.family.tubes.size()));
  rep.add("bad_tubes", static_cast<double>(sp.bad.size()));
  rep.add("bad_fraction", double(sp.bad.size()) / double(std::max<std::size_t>(1, sp.family.tubes.size())));
  rep.add("median_bad_mass", median_bad_mass<D>(sp, pair, pins));
  rep.add("incidence_constant", incidence_constant<D>(sp, pair.mu2));
  for (const auto& [r, n] : sp.concentrated_count) {
    std::ostringstream key;
    key << "concentrated_plates_r" << r;
    rep.add(key.str(), static_cast<double>(n));
  }
  return rep;
}

// Energy of a Cantor measure of dimension about alpha in [0,1]^D for each
// exponent; in d = 1 also the energy with atoms spread over their cells.
template <int D>
ExperimentReport energy_report(double alpha, int depth, const std::vector<double>& exponents, std::uint64_t seed) {
  DiscreteMeasure<D> mu;
  if (D == 1 && std::abs(alpha - std::log(2.0) / std::log(3.0)) < 1e-9) {
    KeepPattern kp;
    kp.base = 3;
    kp.per_axis = {{0, 2}};
    mu = cantor_measure<D>(alpha, depth, kp, seed, false);
  } else {
    auto ch = best_cantor_choice<D>(alpha);
    KeepPattern kp;
    kp.base = ch.base;
    kp.keep = ch.keep;
    mu = cantor_measure<D>(alpha, depth, kp, seed, false);
  }
  ExperimentReport rep;
  rep.add("atoms", static_cast<double>(mu.size()));
  rep.add("dimension", mu.alpha);
  for (double b : exponents) {
    std::ostringstream tag;
    tag << b;
    rep.add("energy_" + tag.str(), energy_integral<D>(mu, b));
    if constexpr (D == 1) {
      if (b < 1.0) rep.add("cell_energy_" + tag.str(), cell_energy_integral(mu, b, mu.cell_side));
    }
  }
  return rep;
}

}  // namespace dlab
