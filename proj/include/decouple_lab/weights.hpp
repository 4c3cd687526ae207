#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>
#include <utility>
#include <vector>

#include "numeric.hpp"

namespace dlab {

template <int D>
struct DiscreteMeasure {
  std::vector<Point<D>> atoms;
  std::vector<double> masses;
  double alpha = 0.0;
  double c_mu = 0.0;
  double cell_side = 0.0;  // side of the generating cells, 0 if none
  double scale_lo = 0.0;   // scale range over which c_mu was certified
  double scale_hi = 0.0;

  std::size_t size() const { return atoms.size(); }
  double total() const { return compensated_total(masses.begin(), masses.end()); }
};

struct KeepPattern {
  int base = 0;
  int keep = 0;                             // random mode: keep this many of base^d children
  std::vector<std::vector<int>> per_axis;   // product mode: kept digits per axis
};

struct CantorChoice {
  int base;
  int keep;
  double dimension;
};

// (k, b) with b <= 8 whose dimension log k / log b is closest to alpha.
template <int D>
CantorChoice best_cantor_choice(double alpha) {
  CantorChoice best{2, 1, 0.0};
  double err = 1e300;
  for (int b = 2; b <= 8; ++b) {
    long cells = 1;
    for (int i = 0; i < D; ++i) cells *= b;
    for (long k = 1; k <= cells; ++k) {
      double dim = std::log(double(k)) / std::log(double(b));
      if (std::abs(dim - alpha) < err - 1e-12) {
        err = std::abs(dim - alpha);
        best = {b, static_cast<int>(k), dim};
      }
    }
  }
  return best;
}

template <int D>
double frostman_constant(const DiscreteMeasure<D>& mu, double alpha, std::vector<double> scales);

template <int D>
std::vector<double> frostman_scales(const DiscreteMeasure<D>& mu) {
  double lo = mu.cell_side > 0.0 ? mu.cell_side : 1.0 / 1024.0;
  return dyadic_between(lo, 1.0);
}

// Iterated subdivision of [0,1]^D. Atoms sit at the centers of the kept
// depth-level cells, each with mass keep^{-depth}.
template <int D>
DiscreteMeasure<D> cantor_measure(double alpha_target, int depth, const KeepPattern& pattern, std::uint64_t seed,
                                  bool certify = true) {
  if (!(alpha_target > 0.0 && alpha_target <= D)) fail(ErrorKind::Domain, "alpha_target must lie in (0, d]");
  if (depth < 0 || depth > 10) fail(ErrorKind::Domain, "depth must lie in [0, 10]");
  DiscreteMeasure<D> mu;
  std::vector<std::array<long, D>> cells(1, std::array<long, D>{});
  int base = 1;
  double dim = 0.0;
  long keep_total = 1;

  if (!pattern.per_axis.empty()) {
    if (pattern.base < 2) fail(ErrorKind::Domain, "keep pattern needs a base >= 2");
    std::vector<std::vector<int>> axes(D);
    for (int i = 0; i < D; ++i) {
      axes[i] = pattern.per_axis.size() == 1 ? pattern.per_axis[0] : pattern.per_axis.at(i);
      if (axes[i].empty()) fail(ErrorKind::Domain, "empty keep list");
      for (int v : axes[i])
        if (v < 0 || v >= pattern.base) fail(ErrorKind::Domain, "kept digit outside the base");
      keep_total *= static_cast<long>(axes[i].size());
      dim += std::log(double(axes[i].size())) / std::log(double(pattern.base));
    }
    if (std::abs(dim - alpha_target) > 0.1 + 1e-12)
      fail(ErrorKind::UnachievableDimension, "keep pattern dimension differs from the target by more than 0.1");
    base = pattern.base;
    for (int lvl = 0; lvl < depth; ++lvl) {
      std::vector<std::array<long, D>> next;
      next.reserve(cells.size() * keep_total);
      for (const auto& c : cells) {
        std::array<std::size_t, D> pos{};
        while (true) {
          std::array<long, D> ch;
          for (int i = 0; i < D; ++i) ch[i] = c[i] * base + axes[i][pos[i]];
          next.push_back(ch);
          int j = D - 1;
          while (j >= 0 && ++pos[j] == axes[j].size()) pos[j--] = 0;
          if (j < 0) break;
        }
      }
      cells.swap(next);
    }
  } else {
    CantorChoice ch{pattern.base, pattern.keep, 0.0};
    if (ch.base >= 2 && ch.keep >= 1) {
      ch.dimension = std::log(double(ch.keep)) / std::log(double(ch.base));
    } else {
      ch = best_cantor_choice<D>(alpha_target);
    }
    long children = 1;
    for (int i = 0; i < D; ++i) children *= ch.base;
    if (ch.keep > children) fail(ErrorKind::Domain, "cannot keep more cells than exist");
    if (std::abs(ch.dimension - alpha_target) > 0.1 + 1e-12)
      fail(ErrorKind::UnachievableDimension, "no (k, b) pattern within 0.1 of the target dimension");
    base = ch.base;
    dim = ch.dimension;
    keep_total = ch.keep;
    std::mt19937_64 rng(seed);
    std::vector<long> order(children);
    for (int lvl = 0; lvl < depth; ++lvl) {
      std::vector<std::array<long, D>> next;
      next.reserve(cells.size() * keep_total);
      for (const auto& c : cells) {
        std::iota(order.begin(), order.end(), 0L);
        for (long i = 0; i < ch.keep; ++i) {
          long j = i + static_cast<long>(uniform01(rng) * double(children - i));
          std::swap(order[i], order[j]);
        }
        std::vector<long> kept(order.begin(), order.begin() + ch.keep);
        std::sort(kept.begin(), kept.end());
        for (long q : kept) {
          std::array<long, D> chc;
          long r = q;
          for (int i = D - 1; i >= 0; --i) {
            chc[i] = c[i] * base + r % base;
            r /= base;
          }
          next.push_back(chc);
        }
      }
      cells.swap(next);
    }
  }
  const double side = std::pow(double(base), -depth);
  const double mass = std::pow(double(keep_total), -depth);
  mu.atoms.reserve(cells.size());
  for (const auto& c : cells) {
    Point<D> x;
    for (int i = 0; i < D; ++i) x[i] = (c[i] + 0.5) * side;
    mu.atoms.push_back(x);
  }
  mu.masses.assign(cells.size(), mass);
  mu.alpha = dim;
  mu.cell_side = side;
  if (certify) {
    auto sc = frostman_scales<D>(mu);
    mu.c_mu = frostman_constant<D>(mu, dim, sc);
    mu.scale_lo = sc.front();
    mu.scale_hi = sc.back();
  }
  return mu;
}

// Affine copy of a measure on [0,1]^D into the cube of side `side` centered at `center`.
template <int D>
DiscreteMeasure<D> place_measure(DiscreteMeasure<D> mu, const Point<D>& center, double side) {
  for (auto& a : mu.atoms)
    for (int i = 0; i < D; ++i) a[i] = center[i] + side * (a[i] - 0.5);
  mu.cell_side *= side;
  mu.c_mu *= std::pow(side, -mu.alpha);
  mu.scale_lo *= side;
  mu.scale_hi *= side;
  return mu;
}

template <int D>
DiscreteMeasure<D> combine_measures(const DiscreteMeasure<D>& a, const DiscreteMeasure<D>& b) {
  DiscreteMeasure<D> out = a;
  out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
  out.masses.insert(out.masses.end(), b.masses.begin(), b.masses.end());
  out.alpha = std::min(a.alpha, b.alpha);
  out.c_mu = 0.0;
  return out;
}

template <int D>
struct CellKeyHash {
  std::size_t operator()(const std::array<long, D>& k) const {
    std::size_t h = 1469598103934665603ull;
    for (long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

// mu(B(x,t)) for every atom x, open balls.
template <int D>
std::vector<double> ball_masses(const DiscreteMeasure<D>& mu, double t) {
  std::unordered_map<std::array<long, D>, std::vector<std::size_t>, CellKeyHash<D>> grid;
  auto key = [t](const Point<D>& x) {
    std::array<long, D> k;
    for (int i = 0; i < D; ++i) k[i] = static_cast<long>(std::floor(x[i] / t));
    return k;
  };
  for (std::size_t i = 0; i < mu.size(); ++i) grid[key(mu.atoms[i])].push_back(i);
  std::vector<double> out(mu.size());
  parallel_for(mu.size(), [&](std::size_t i) {
    const auto& x = mu.atoms[i];
    auto k0 = key(x);
    CompensatedSum s;
    std::array<int, D> off{};
    for (auto& o : off) o = -1;
    while (true) {
      std::array<long, D> k;
      for (int q = 0; q < D; ++q) k[q] = k0[q] + off[q];
      auto it = grid.find(k);
      if (it != grid.end())
        for (std::size_t j : it->second)
          if (dist<D>(mu.atoms[j], x) < t) s.add(mu.masses[j]);
      int q = D - 1;
      while (q >= 0 && ++off[q] > 1) off[q--] = -1;
      if (q < 0) break;
    }
    out[i] = s.value();
  });
  return out;
}

// sup over atoms x and scales t of mu(B(x,t)) / t^alpha.
template <int D>
double frostman_constant(const DiscreteMeasure<D>& mu, double alpha, std::vector<double> scales) {
  if (scales.empty()) fail(ErrorKind::EmptyInput, "no scales");
  if (mu.size() == 0) return 0.0;
  std::sort(scales.begin(), scales.end());
  const double total = mu.total();
  double best = 0.0;
  for (double t : scales) {
    if (!(t > 0.0)) fail(ErrorKind::Domain, "scales must be positive");
    if (total / std::pow(t, alpha) <= best) continue;
    auto bm = ball_masses<D>(mu, t);
    for (double m : bm) best = std::max(best, m / std::pow(t, alpha));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Weights

template <int D>
struct Weight {
  std::vector<Point<D>> support_points;  // cell centers
  std::vector<double> values;
  double cell_volume = 0.0;
  Point<D> cell_extent{};
  double c1 = 0.0;
  double grid = 0.0;  // > 0 when cells are the origin-anchored lattice of this side
  std::unordered_map<std::array<long, D>, std::size_t, CellKeyHash<D>> lookup;

  double integral() const {
    CompensatedSum s;
    for (double v : values) s.add(v * cell_volume);
    return s.value();
  }

  double value_at(const Point<D>& x) const {
    if (!(grid > 0.0)) fail(ErrorKind::Domain, "weight has no lattice lookup");
    std::array<long, D> k;
    for (int i = 0; i < D; ++i) k[i] = static_cast<long>(std::floor(x[i] / grid));
    auto it = lookup.find(k);
    return it == lookup.end() ? 0.0 : values[it->second];
  }
};

// H(y) = c1 R^{alpha-D} (mu * phi_{1/R})(y/R) as cell averages on the lattice
// of side 1/4 anchored at the origin; c1 makes max H = 1.
template <int D>
Weight<D> weight_from_measure(const DiscreteMeasure<D>& mu, double R, double alpha, double cell = 0.25) {
  if (!(R >= 4.0)) fail(ErrorKind::InvalidScale, "weight_from_measure needs R >= 4");
  Weight<D> w;
  w.grid = cell;
  w.cell_volume = std::pow(cell, D);
  for (auto& e : w.cell_extent) e = cell;
  std::map<std::array<long, D>, CompensatedSum> acc;
  const double Z = std::pow(bump_integral(), D);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    if (mu.masses[a] == 0.0) continue;
    Point<D> c = R * mu.atoms[a];
    std::array<long, D> lo, hi;
    std::array<std::vector<double>, D> part;
    for (int i = 0; i < D; ++i) {
      lo[i] = static_cast<long>(std::floor((c[i] - 1.0) / cell));
      hi[i] = static_cast<long>(std::floor((c[i] + 1.0) / cell));
      for (long k = lo[i]; k <= hi[i]; ++k)
        part[i].push_back(bump_cdf((k + 1) * cell - c[i]) - bump_cdf(k * cell - c[i]));
    }
    std::array<long, D> k = lo;
    while (true) {
      double v = mu.masses[a] / Z;
      for (int i = 0; i < D; ++i) v *= part[i][k[i] - lo[i]];
      if (v > 0.0) acc[k].add(v);
      int q = D - 1;
      while (q >= 0 && ++k[q] > hi[q]) {
        k[q] = lo[q];
        --q;
      }
      if (q < 0) break;
    }
  }
  double vmax = 0.0;
  std::vector<double> raw;
  for (const auto& [k, s] : acc) {
    Point<D> x;
    for (int i = 0; i < D; ++i) x[i] = (k[i] + 0.5) * cell;
    w.lookup[k] = w.support_points.size();
    w.support_points.push_back(x);
    double v = std::pow(R, alpha) * s.value() / w.cell_volume;
    raw.push_back(v);
    vmax = std::max(vmax, v);
  }
  if (vmax > 0.0) {
    w.c1 = 1.0 / vmax;
    for (double v : raw) w.values.push_back(v / vmax);
  } else {
    w.c1 = 0.0;
    w.values.assign(raw.size(), 0.0);
  }
  return w;
}

// For each scale s: max over the origin-anchored s-lattice and its half-shift
// of (integral of H over the cube) / s^alpha.
template <int D>
std::vector<std::pair<double, double>> ball_condition_profile(const Weight<D>& h, double alpha,
                                                              const std::vector<double>& scales) {
  std::vector<std::pair<double, double>> out;
  double vmax = 0.0;
  for (double v : h.values) vmax = std::max(vmax, v);
  for (double s : scales) {
    if (!(s > 0.0)) fail(ErrorKind::Domain, "scales must be positive");
    double worst = 0.0;
    bool fine = true;
    double per = 1.0;
    for (int i = 0; i < D; ++i) per *= std::ceil(h.cell_extent[i] / s) + 1.0;
    if (per > 4096.0) fine = false;
    if (!fine) {
      // cubes much smaller than a cell: the sup is attained inside the largest cell
      double m = 1.0;
      for (int i = 0; i < D; ++i) m *= std::min(s, h.cell_extent[i]);
      worst = vmax * m / std::pow(s, alpha);
      out.emplace_back(s, worst);
      continue;
    }
    for (double shift : {0.0, 0.5 * s}) {
      std::unordered_map<std::array<long, D>, CompensatedSum, CellKeyHash<D>> cubes;
      for (std::size_t c = 0; c < h.support_points.size(); ++c) {
        if (h.values[c] == 0.0) continue;
        std::array<long, D> lo, hi;
        std::array<double, D> clo, chi;
        for (int i = 0; i < D; ++i) {
          clo[i] = h.support_points[c][i] - 0.5 * h.cell_extent[i];
          chi[i] = h.support_points[c][i] + 0.5 * h.cell_extent[i];
          lo[i] = static_cast<long>(std::floor((clo[i] - shift) / s));
          hi[i] = static_cast<long>(std::floor((chi[i] - shift) / s));
        }
        std::array<long, D> k = lo;
        while (true) {
          double ov = 1.0;
          for (int i = 0; i < D; ++i) {
            double a = std::max(clo[i], shift + k[i] * s), b = std::min(chi[i], shift + (k[i] + 1) * s);
            ov *= std::max(0.0, b - a);
          }
          if (ov > 0.0) cubes[k].add(h.values[c] * ov);
          int q = D - 1;
          while (q >= 0 && ++k[q] > hi[q]) {
            k[q] = lo[q];
            --q;
          }
          if (q < 0) break;
        }
      }
      for (const auto& [k, m] : cubes) worst = std::max(worst, m.value() / std::pow(s, alpha));
    }
    out.emplace_back(s, worst);
  }
  return out;
}

}  // namespace dlab
