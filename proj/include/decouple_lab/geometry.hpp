#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "numeric.hpp"

namespace dlab {

// ---------------------------------------------------------------------------
// Caps on the truncated paraboloid

template <int D>
struct Cap {
  static_assert(D >= 2);
  Point<D - 1> center{};
  Point<D - 1> lo{}, hi{};
  double scale = 0.0;  // lattice spacing R^{-1/2}
  Point<D> normal{};
  std::array<int, D - 1> index{};
  int id = 0;

  bool contains(const Point<D - 1>& xi) const {
    for (int i = 0; i < D - 1; ++i)
      if (xi[i] < lo[i] || xi[i] >= hi[i]) return false;
    return true;
  }
  double area() const {
    double a = 1.0;
    for (int i = 0; i < D - 1; ++i) a *= hi[i] - lo[i];
    return a;
  }
};

// Unit normal of the graph of |xi|^2, pointing to decreasing x_d.
template <int D>
Point<D> paraboloid_normal(const Point<D - 1>& xi) {
  Point<D> n{};
  double s = 1.0;
  for (int i = 0; i < D - 1; ++i) {
    n[i] = 2.0 * xi[i];
    s += 4.0 * xi[i] * xi[i];
  }
  n[D - 1] = -1.0;
  double inv = 1.0 / std::sqrt(s);
  for (auto& v : n) v *= inv;
  return n;
}

template <int D>
int cap_cells_per_axis(double R) {
  double s = 1.0 / std::sqrt(R);
  return static_cast<int>(std::ceil(2.0 / s - 1e-9));
}

// Lattice cells of spacing R^{-1/2} anchored at -1; the last cell per axis is
// clipped at 1.
template <int D>
std::vector<Cap<D>> build_caps(double R) {
  if (!(R >= 4.0)) fail(ErrorKind::InvalidScale, "build_caps needs R >= 4");
  const double s = 1.0 / std::sqrt(R);
  const int n = cap_cells_per_axis<D>(R);
  std::vector<Cap<D>> caps;
  std::array<int, D - 1> idx{};
  while (true) {
    Cap<D> c;
    c.scale = s;
    c.index = idx;
    for (int i = 0; i < D - 1; ++i) {
      c.lo[i] = -1.0 + idx[i] * s;
      c.hi[i] = (idx[i] == n - 1) ? 1.0 : -1.0 + (idx[i] + 1) * s;
      c.center[i] = 0.5 * (c.lo[i] + c.hi[i]);
    }
    c.normal = paraboloid_normal<D>(c.center);
    c.id = static_cast<int>(caps.size());
    caps.push_back(c);
    int k = D - 2;
    while (k >= 0 && ++idx[k] == n) idx[k--] = 0;
    if (k < 0) break;
  }
  return caps;
}

// Index of the cap containing xi, on the lattice used by build_caps.
template <int D>
int cap_index_of(const Point<D - 1>& xi, double R) {
  const double s = 1.0 / std::sqrt(R);
  const int n = cap_cells_per_axis<D>(R);
  int id = 0;
  for (int i = 0; i < D - 1; ++i) {
    int k = static_cast<int>(std::floor((xi[i] + 1.0) / s));
    k = std::clamp(k, 0, n - 1);
    id = id * n + k;
  }
  return id;
}

// Orthonormal basis of v^perp by Gram-Schmidt against the standard basis.
template <int D>
std::array<Point<D>, D - 1> perp_basis(const Point<D>& v) {
  std::array<Point<D>, D - 1> out{};
  std::vector<Point<D>> acc{v};
  int got = 0;
  for (int e = 0; e < D && got < D - 1; ++e) {
    Point<D> w{};
    w[e] = 1.0;
    for (const auto& b : acc) {
      double c = dot<D>(w, b);
      for (int i = 0; i < D; ++i) w[i] -= c * b[i];
    }
    double nw = norm<D>(w);
    if (nw < 1e-6) continue;
    for (auto& x : w) x /= nw;
    acc.push_back(w);
    out[got++] = w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tubes

enum class ScaleMode { scale_R, unit_ball };

template <int D>
struct Tube {
  Point<D> axis_point{};
  Point<D> direction{};
  double radius = 0.0;
  double length = 0.0;
  int cap_index = 0;
  ScaleMode mode = ScaleMode::scale_R;
  std::array<int, D - 1> perp_index{};

  double axial(const Point<D>& x) const { return dot<D>(x - axis_point, direction); }

  double perp_distance(const Point<D>& x) const {
    Point<D> w = x - axis_point;
    double a = dot<D>(w, direction);
    for (int i = 0; i < D; ++i) w[i] -= a * direction[i];
    return norm<D>(w);
  }

  // Strict membership in the dilate dil*T (same center).
  bool contains(const Point<D>& x, double dil = 1.0) const {
    Point<D> w = x - axis_point;
    double a = dot<D>(w, direction);
    if (!(std::abs(a) < 0.5 * dil * length)) return false;
    double p2 = 0.0;
    for (int i = 0; i < D; ++i) {
      double q = w[i] - a * direction[i];
      p2 += q * q;
    }
    return p2 < dil * dil * radius * radius;
  }
};

struct TubeShape {
  double radius;
  double length;
  double region;  // radius of the ball the family covers
};

inline TubeShape tube_shape(double R, double beta, ScaleMode mode) {
  if (mode == ScaleMode::scale_R) return {std::pow(R, 0.5 + beta), R, 0.5 * R};
  return {std::pow(R, -0.5 + beta), 2.0, 1.0};
}

// All tubes of one direction, on a perpendicular lattice through the origin.
// The lattice spacing keeps the cube circumradius below the tube radius.
template <int D>
struct DirectionTubes {
  Point<D> direction{};
  std::array<Point<D>, D - 1> basis{};
  double spacing = 0.0;
  std::map<std::array<int, D - 1>, int> by_index;  // perp lattice index -> tube id
};

template <int D>
struct TubeFamily {
  double R = 0.0;
  double beta = 0.0;
  ScaleMode mode = ScaleMode::scale_R;
  TubeShape shape{};
  std::vector<Tube<D>> tubes;
  std::map<int, DirectionTubes<D>> by_cap;  // cap id -> lattice data

  // Bump radius of the perpendicular partition of unity, relative to the tube radius.
  static constexpr double partition_radius = 1.2;

  std::array<double, D - 1> perp_coords(int cap, const Point<D>& x) const {
    const auto& dt = by_cap.at(cap);
    std::array<double, D - 1> c{};
    for (int i = 0; i < D - 1; ++i) c[i] = dot<D>(x, dt.basis[i]);
    return c;
  }

  // eta_T(x) for the tubes of one cap: a partition of unity in the
  // perpendicular variable, supported in 1.2T.
  std::vector<std::pair<int, double>> partition(int cap, const Point<D>& x) const {
    std::vector<std::pair<int, double>> out;
    const auto& dt = by_cap.at(cap);
    auto c = perp_coords(cap, x);
    const double rb = partition_radius * shape.radius;
    const int reach = static_cast<int>(std::ceil(rb / dt.spacing)) + 1;
    std::array<int, D - 1> base{};
    for (int i = 0; i < D - 1; ++i) base[i] = static_cast<int>(std::lround(c[i] / dt.spacing));
    std::array<int, D - 1> off{};
    for (auto& o : off) o = -reach;
    double total = 0.0;
    while (true) {
      std::array<int, D - 1> k{};
      double r2 = 0.0;
      for (int i = 0; i < D - 1; ++i) {
        k[i] = base[i] + off[i];
        double q = c[i] - k[i] * dt.spacing;
        r2 += q * q;
      }
      double b = bump(std::sqrt(r2) / rb);
      if (b > 0.0) {
        auto it = dt.by_index.find(k);
        if (it != dt.by_index.end()) {
          out.emplace_back(it->second, b);
          total += b;
        }
      }
      int j = D - 2;
      while (j >= 0 && ++off[j] > reach) off[j--] = -reach;
      if (j < 0) break;
    }
    if (total > 0.0)
      for (auto& [id, w] : out) w /= total;
    return out;
  }
};

// Appends the tubes of one direction to fam and returns them.
template <int D>
std::vector<Tube<D>> add_direction_tubes(TubeFamily<D>& fam, int cap_id, const Point<D>& dir) {
  DirectionTubes<D> dt;
  dt.direction = dir;
  dt.basis = perp_basis<D>(dir);
  const double rho = fam.shape.radius;
  dt.spacing = 1.9 * rho / std::sqrt(static_cast<double>(D - 1));
  const double keep = fam.shape.region + rho;
  const int n = static_cast<int>(std::ceil(keep / dt.spacing));
  std::vector<Tube<D>> out;
  std::array<int, D - 1> k{};
  for (auto& v : k) v = -n;
  while (true) {
    Point<D> o{};
    double r2 = 0.0;
    for (int i = 0; i < D - 1; ++i) {
      for (int j = 0; j < D; ++j) o[j] += k[i] * dt.spacing * dt.basis[i][j];
      r2 += (k[i] * dt.spacing) * (k[i] * dt.spacing);
    }
    if (std::sqrt(r2) < keep) {
      Tube<D> t;
      t.axis_point = o;
      t.direction = dir;
      t.radius = rho;
      t.length = fam.shape.length;
      t.cap_index = cap_id;
      t.mode = fam.mode;
      t.perp_index = k;
      dt.by_index[k] = static_cast<int>(fam.tubes.size());
      fam.tubes.push_back(t);
      out.push_back(t);
    }
    int j = D - 2;
    while (j >= 0 && ++k[j] > n) k[j--] = -n;
    if (j < 0) break;
  }
  fam.by_cap[cap_id] = std::move(dt);
  return out;
}

template <int D>
TubeFamily<D> empty_family(double R, double beta, ScaleMode mode) {
  if (beta < 0.0 || beta > 0.1) fail(ErrorKind::Domain, "beta must lie in [0, 0.1]");
  TubeFamily<D> f;
  f.R = R;
  f.beta = beta;
  f.mode = mode;
  f.shape = tube_shape(R, beta, mode);
  return f;
}

// Tubes of one cap covering the ball of radius shape.region.
template <int D>
std::vector<Tube<D>> build_tubes(const Cap<D>& cap, double R, double beta, ScaleMode mode) {
  auto fam = empty_family<D>(R, beta, mode);
  return add_direction_tubes<D>(fam, cap.id, cap.normal);
}

template <int D>
TubeFamily<D> build_tube_family(const std::vector<Cap<D>>& caps, double R, double beta, ScaleMode mode) {
  auto fam = empty_family<D>(R, beta, mode);
  for (const auto& c : caps) add_direction_tubes<D>(fam, c.id, c.normal);
  return fam;
}

// Direction caps on the full sphere S^{D-1} at angular scale R^{-1/2}.
template <int D>
std::vector<Point<D>> sphere_directions(double R) {
  std::vector<Point<D>> out;
  const double w = 1.0 / std::sqrt(R);
  if constexpr (D == 2) {
    int n = static_cast<int>(std::ceil(2.0 * std::numbers::pi / w));
    for (int i = 0; i < n; ++i) {
      double t = 2.0 * std::numbers::pi * (i + 0.5) / n;
      out.push_back({std::cos(t), std::sin(t)});
    }
  } else if constexpr (D == 3) {
    int n = static_cast<int>(std::ceil(4.0 * std::numbers::pi / (w * w)));
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - (2.0 * i + 1.0) / n;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
    }
  } else {
    fail(ErrorKind::InvalidDimension, "sphere directions implemented for d = 2, 3");
  }
  return out;
}

// Angular radius of the support of each direction bump, for sphere_directions.
template <int D>
double sphere_cap_radius(std::size_t n) {
  if constexpr (D == 2) return 1.5 * 2.0 * std::numbers::pi / static_cast<double>(n);
  return 1.5 * std::sqrt(4.0 * std::numbers::pi / static_cast<double>(n));
}

template <int D>
TubeFamily<D> build_sphere_tube_family(double R, double beta) {
  auto fam = empty_family<D>(R, beta, ScaleMode::unit_ball);
  auto dirs = sphere_directions<D>(R);
  for (std::size_t i = 0; i < dirs.size(); ++i) add_direction_tubes<D>(fam, static_cast<int>(i), dirs[i]);
  return fam;
}

// ---------------------------------------------------------------------------
// Plates

template <int D>
struct Plate {
  Point<D> anchor{};
  std::vector<Point<D>> basis;  // m orthonormal vectors
  double thickness = 0.0;
  int m = 0;

  double distance(const Point<D>& z) const {
    Point<D> w = z - anchor;
    for (const auto& b : basis) {
      double c = dot<D>(w, b);
      for (int i = 0; i < D; ++i) w[i] -= c * b[i];
    }
    return norm<D>(w);
  }
  bool contains(const Point<D>& z) const { return distance(z) < thickness; }
};

// Orthonormal completion of an orthonormal family.
template <int D>
std::vector<Point<D>> orthogonal_complement(const std::vector<Point<D>>& basis) {
  std::vector<Point<D>> acc = basis, out;
  for (int e = 0; e < D && static_cast<int>(acc.size()) < D; ++e) {
    Point<D> w{};
    w[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : acc) {
        double c = dot<D>(w, b);
        for (int i = 0; i < D; ++i) w[i] -= c * b[i];
      }
    double nw = norm<D>(w);
    if (nw < 1e-6) continue;
    for (auto& x : w) x /= nw;
    acc.push_back(w);
    out.push_back(w);
  }
  return out;
}

template <int D>
std::vector<Point<D>> orthonormalize(std::vector<Point<D>> v) {
  std::vector<Point<D>> out;
  for (auto w : v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : out) {
        double c = dot<D>(w, b);
        for (int i = 0; i < D; ++i) w[i] -= c * b[i];
      }
    double nw = norm<D>(w);
    if (nw < 1e-9) continue;
    for (auto& x : w) x /= nw;
    out.push_back(w);
  }
  return out;
}

// sin of the largest principal angle between two subspaces of equal dimension.
template <int D>
double subspace_sin_distance(const std::vector<Point<D>>& a, const std::vector<Point<D>>& b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidDimension, "subspace dimensions differ");
  if (a.empty()) return 0.0;
  const int m = static_cast<int>(a.size());
  Eigen::MatrixXd res(D, m);
  for (int j = 0; j < m; ++j) {
    Point<D> w = a[j];
    for (const auto& v : b) {
      double c = dot<D>(w, v);
      for (int i = 0; i < D; ++i) w[i] -= c * v[i];
    }
    for (int i = 0; i < D; ++i) res(i, j) = w[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(res);
  return std::min(1.0, svd.singularValues()(0));
}

// Extreme points of the superset (central-plane disc within B(0,ball)) x
// (normal ball of radius 0.999 r) of a plate's trace in B(0,ball).
template <int D>
std::vector<Point<D>> plate_trace_samples(const Plate<D>& p, double ball = 1.0) {
  std::vector<Point<D>> out;
  auto comp = orthogonal_complement<D>(p.basis);
  // closest point of the central plane to the origin
  Point<D> c = p.anchor;
  for (const auto& b : p.basis) {
    double t = dot<D>(c, b);
    for (int i = 0; i < D; ++i) c[i] -= t * b[i];
  }
  double dc = norm<D>(c);
  double g = std::max(0.0, dc - p.thickness);
  double disc = std::sqrt(std::max(0.0, ball * ball - g * g));
  std::vector<Point<D>> in_dirs, out_dirs;
  auto sphere_dirs = [](const std::vector<Point<D>>& basis) {
    std::vector<Point<D>> dirs;
    const int k = static_cast<int>(basis.size());
    if (k == 0) return dirs;
    if (k == 1) {
      dirs.push_back(basis[0]);
      dirs.push_back(-1.0 * basis[0]);
      return dirs;
    }
    if (k == 2) {
      for (int s = 0; s < 32; ++s) {
        double t = 2.0 * std::numbers::pi * s / 32.0;
        dirs.push_back(std::cos(t) * basis[0] + std::sin(t) * basis[1]);
      }
      return dirs;
    }
    // k >= 3: axes and sign diagonals
    for (int i = 0; i < k; ++i) {
      dirs.push_back(basis[i]);
      dirs.push_back(-1.0 * basis[i]);
    }
    for (int mask = 0; mask < (1 << k); ++mask) {
      Point<D> w{};
      for (int i = 0; i < k; ++i) w = w + (((mask >> i) & 1) ? 1.0 : -1.0) / std::sqrt(double(k)) * basis[i];
      dirs.push_back(w);
    }
    return dirs;
  };
  in_dirs = sphere_dirs(p.basis);
  out_dirs = sphere_dirs(comp);
  if (in_dirs.empty()) in_dirs.push_back(Point<D>{});
  if (out_dirs.empty()) out_dirs.push_back(Point<D>{});
  for (const auto& u : in_dirs)
    for (const auto& n : out_dirs) out.push_back(c + disc * u + (0.999 * p.thickness) * n);
  return out;
}

// Sampled test of (inner ∩ B(0,ball)) ⊂ outer.
template <int D>
bool plate_in_plate(const Plate<D>& inner, const Plate<D>& outer, double ball = 1.0) {
  for (const auto& q : plate_trace_samples<D>(inner, ball))
    if (!outer.contains(q)) return false;
  return true;
}

// Samples of the dilated tube: 8 rings along the axis, each with the axis
// point, +-radius along the perpendicular axes and the 2^{d-1} sign diagonals.
template <int D>
std::vector<Point<D>> tube_boundary_samples(const Tube<D>& t, double dilation) {
  std::vector<Point<D>> out;
  auto basis = perp_basis<D>(t.direction);
  std::vector<Point<D>> ring;
  ring.push_back(Point<D>{});
  for (int i = 0; i < D - 1; ++i) {
    ring.push_back(basis[i]);
    ring.push_back(-1.0 * basis[i]);
  }
  for (int mask = 0; mask < (1 << (D - 1)); ++mask) {
    Point<D> w{};
    for (int i = 0; i < D - 1; ++i)
      w = w + (((mask >> i) & 1) ? 1.0 : -1.0) / std::sqrt(double(D - 1)) * basis[i];
    ring.push_back(w);
  }
  const double half = 0.5 * dilation * t.length;
  const double rad = dilation * t.radius;
  for (int k = 0; k < 8; ++k) {
    double a = -half + 2.0 * half * k / 7.0;
    Point<D> c = t.axis_point + a * t.direction;
    for (const auto& u : ring) out.push_back(c + rad * u);
  }
  return out;
}

template <int D>
bool tube_in_plate(const Tube<D>& t, const Plate<D>& h, double dilation) {
  if (!(dilation >= 1.0)) fail(ErrorKind::Domain, "dilation must be >= 1");
  for (const auto& q : tube_boundary_samples<D>(t, dilation))
    if (!h.contains(q)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Plate nets

// Unit vectors on the positive faces of the cube [-1,1]^D, one per cell of a
// face grid with n cells per axis. Each line through the origin has a
// representative within angle asin(sqrt(D-1)/n) of some vector.
template <int D>
std::vector<Point<D>> face_grid_directions(int n) {
  std::vector<Point<D>> out;
  for (int f = 0; f < D; ++f) {
    std::array<int, D - 1> k{};
    while (true) {
      Point<D> v{};
      int j = 0;
      for (int i = 0; i < D; ++i) {
        if (i == f) {
          v[i] = 1.0;
        } else {
          v[i] = -1.0 + (2.0 * k[j] + 1.0) / n;
          ++j;
        }
      }
      double nv = norm<D>(v);
      for (auto& x : v) x /= nv;
      out.push_back(v);
      int q = D - 2;
      while (q >= 0 && ++k[q] == n) k[q--] = 0;
      if (q < 0) break;
    }
  }
  return out;
}

template <int D>
struct PlateNet {
  double r = 0.0;
  int m = 0;
  int d = D;
  double orient_budget = 0.0;     // sin of principal angle covered by the orientation net
  double translate_budget = 0.0;  // covering radius of the translation grid
  std::vector<std::vector<Point<D>>> orientations;  // plane bases
  std::vector<std::vector<Point<D>>> complements;   // normal bases
  double grid_step = 0.0;
  std::vector<std::vector<double>> translations;    // coordinates in the normal basis

  std::size_t size() const { return orientations.size() * translations.size(); }

  Plate<D> plate(std::size_t i) const {
    std::size_t o = i / translations.size(), t = i % translations.size();
    return make(o, t);
  }

  Plate<D> make(std::size_t o, std::size_t t) const {
    Plate<D> p;
    p.basis = orientations[o];
    p.thickness = r;
    p.m = m;
    for (std::size_t k = 0; k < complements[o].size(); ++k) p.anchor = p.anchor + translations[t][k] * complements[o][k];
    return p;
  }

  std::vector<Plate<D>> plates() const {
    std::vector<Plate<D>> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(plate(i));
    return out;
  }
};

// Orientation net for m-planes: the returned bases are within sin-distance a
// of every m-plane.
template <int D>
std::vector<std::vector<Point<D>>> orientation_net(int m, double a) {
  std::vector<std::vector<Point<D>>> out;
  if (m == D) {
    std::vector<Point<D>> id;
    for (int i = 0; i < D; ++i) {
      Point<D> e{};
      e[i] = 1.0;
      id.push_back(e);
    }
    out.push_back(id);
    return out;
  }
  auto dirs_for = [](double ang) {
    int n = static_cast<int>(std::ceil(std::sqrt(double(D - 1)) / std::sin(std::min(ang, 1.5))));
    return face_grid_directions<D>(std::max(n, 1));
  };
  if (m == 1) {
    for (const auto& v : dirs_for(a)) out.push_back({v});
    return out;
  }
  if (m == D - 1) {
    for (const auto& nrm : dirs_for(a)) out.push_back(orthogonal_complement<D>({nrm}));
    return out;
  }
  // Generic m: Gram-Schmidt on direction tuples, deduplicated.
  auto dirs = dirs_for(a / (2.0 * std::sqrt(double(m))));
  std::vector<std::size_t> idx(m, 0);
  const std::size_t n = dirs.size();
  std::size_t budget = 0;
  while (true) {
    bool increasing = true;
    for (int i = 1; i < m; ++i)
      if (idx[i] <= idx[i - 1]) increasing = false;
    if (increasing) {
      if (++budget > 20000000) fail(ErrorKind::Budget, "orientation net too large");
      std::vector<Point<D>> tuple;
      for (auto i : idx) tuple.push_back(dirs[i]);
      auto b = orthonormalize<D>(tuple);
      if (static_cast<int>(b.size()) == m) {
        bool dup = false;
        for (const auto& o : out)
          if (subspace_sin_distance<D>(b, o) < 0.5 * a) {
            dup = true;
            break;
          }
        if (!dup) out.push_back(b);
      }
    }
    int q = m - 1;
    while (q >= 0 && ++idx[q] == n) idx[q--] = 0;
    if (q < 0) break;
  }
  return out;
}

// Net of (r,m)-plates meeting B(0,1). With orientation budget a and
// translation budget b, a half-scale plate whose trace in B(0,1) is covered
// needs r/2 + b + a(1 + r/2) < r. The split b = (r/2)/(1+m),
// a(1 + r/2) = m(r/2)/(1+m) minimizes the plate count a^{-m(d-m)} b^{-(d-m)}.
template <int D>
PlateNet<D> build_plate_net(double r, int m) {
  if (m < 1 || m > D) fail(ErrorKind::InvalidDimension, "plate dimension m must lie in [1, d]");
  if (!(r >= std::ldexp(1.0, -12) && r <= 1.0)) fail(ErrorKind::InvalidScale, "plate scale must lie in [2^-12, 1]");
  PlateNet<D> net;
  net.r = r;
  net.m = m;
  const double slack = 0.99 * 0.5 * r / (1.0 + m);
  net.orient_budget = m * slack / (1.0 + 0.5 * r);
  net.translate_budget = slack;
  net.orientations = orientation_net<D>(m, net.orient_budget);
  for (const auto& b : net.orientations) net.complements.push_back(orthogonal_complement<D>(b));
  const int k = D - m;
  if (k == 0) {
    net.translations.push_back({});
    return net;
  }
  net.grid_step = 2.0 * net.translate_budget / std::sqrt(double(k));
  const double reach = 1.0 + 0.5 * r + 2.0 * net.translate_budget;
  const int n = static_cast<int>(std::ceil(reach / net.grid_step));
  std::vector<int> c(k, -n);
  while (true) {
    std::vector<double> t(k);
    double t2 = 0.0;
    for (int i = 0; i < k; ++i) {
      t[i] = c[i] * net.grid_step;
      t2 += t[i] * t[i];
    }
    if (std::sqrt(t2) < reach) net.translations.push_back(t);
    int q = k - 1;
    while (q >= 0 && ++c[q] > n) c[q--] = -n;
    if (q < 0) break;
  }
  return net;
}

// Net plate chosen by the covering argument: nearest orientation, then
// nearest translation. Returns the net index.
template <int D>
std::size_t covering_index(const PlateNet<D>& net, const Plate<D>& p) {
  std::size_t best_o = 0;
  double best = 2.0;
  for (std::size_t o = 0; o < net.orientations.size(); ++o) {
    double s = subspace_sin_distance<D>(p.basis, net.orientations[o]);
    if (s < best) {
      best = s;
      best_o = o;
    }
  }
  const auto& comp = net.complements[best_o];
  // closest point of p's plane to the origin, in the normal coordinates of the net orientation
  Point<D> c = p.anchor;
  for (const auto& b : p.basis) {
    double t = dot<D>(c, b);
    for (int i = 0; i < D; ++i) c[i] -= t * b[i];
  }
  std::size_t best_t = 0;
  double bd = 1e300;
  for (std::size_t t = 0; t < net.translations.size(); ++t) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      double q = dot<D>(c, comp[k]) - net.translations[t][k];
      d2 += q * q;
    }
    if (d2 < bd) {
      bd = d2;
      best_t = t;
    }
  }
  return best_o * net.translations.size() + best_t;
}

// Net plates whose trace in B(0,ball) lies in the (s,m)-plate big.
template <int D>
std::size_t count_contained(const PlateNet<D>& net, const Plate<D>& big, double ball = 1.0) {
  std::size_t count = 0;
  for (std::size_t o = 0; o < net.orientations.size(); ++o) {
    const double sn = subspace_sin_distance<D>(net.orientations[o], big.basis);
    const auto& comp = net.complements[o];
    for (std::size_t t = 0; t < net.translations.size(); ++t) {
      Point<D> anchor{};
      for (std::size_t k = 0; k < comp.size(); ++k)
        for (int i = 0; i < D; ++i) anchor[i] += net.translations[t][k] * comp[k][i];
      const double tc = norm<D>(anchor);
      // the anchor is the plane point closest to the origin and must lie in big
      if (tc < ball) {
        if (!big.contains(anchor)) continue;
        if (sn * std::sqrt(ball * ball - tc * tc) >= big.thickness + net.r) continue;
      }
      if (plate_in_plate<D>(net.make(o, t), big, ball)) ++count;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Subspace concentration

template <int D>
struct ConcentrationResult {
  std::vector<Point<D>> basis;
  double max_angle = 0.0;
};

template <int D>
double max_angle_to(const std::vector<Point<D>>& dirs, const std::vector<Point<D>>& basis) {
  double worst = 0.0;
  for (const auto& v : dirs) {
    Point<D> w = v;
    for (const auto& b : basis) {
      double c = dot<D>(w, b);
      for (int i = 0; i < D; ++i) w[i] -= c * b[i];
    }
    double s = std::min(1.0, norm<D>(w) / norm<D>(v));
    worst = std::max(worst, std::asin(s));
  }
  return worst;
}

// Top-m principal subspace of the second-moment form, followed by a seeded
// minimax refinement over the Grassmannian.
template <int D>
ConcentrationResult<D> concentration_angle(std::vector<Point<D>> dirs, int m) {
  if (dirs.empty()) fail(ErrorKind::EmptyInput, "no directions");
  if (m < 1 || m > D) fail(ErrorKind::InvalidDimension, "subspace dimension must lie in [1, d]");
  std::sort(dirs.begin(), dirs.end());
  Eigen::Matrix<double, D, D> M = Eigen::Matrix<double, D, D>::Zero();
  for (const auto& v : dirs) {
    Eigen::Matrix<double, D, 1> x;
    for (int i = 0; i < D; ++i) x(i) = v[i];
    M += x * x.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es(M);
  std::vector<Point<D>> basis;
  for (int j = D - 1; j >= D - m; --j) {
    Point<D> b;
    for (int i = 0; i < D; ++i) b[i] = es.eigenvectors()(i, j);
    basis.push_back(b);
  }
  basis = orthonormalize<D>(basis);
  double best = max_angle_to<D>(dirs, basis);
  if (m < D && best > 0.0) {
    std::mt19937_64 rng(0x5eed);
    double step = 0.5;
    for (int it = 0; it < 4000 && step > 1e-7; ++it) {
      std::vector<Point<D>> cand = basis;
      for (auto& b : cand)
        for (int i = 0; i < D; ++i) b[i] += step * gaussian(rng);
      cand = orthonormalize<D>(cand);
      if (static_cast<int>(cand.size()) != m) continue;
      double v = max_angle_to<D>(dirs, cand);
      if (v < best) {
        best = v;
        basis = cand;
      } else if (it % 50 == 49) {
        step *= 0.7;
      }
    }
  }
  return {basis, best};
}

}  // namespace dlab
