#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "report.hpp"
#include "weights.hpp"

namespace dlab {

// ---------------------------------------------------------------------------
// Pushforward under x -> |x - y|

template <int D>
struct PushforwardDensity {
  std::vector<double> bin_edges;
  std::vector<double> masses;
  Point<D> pin{};

  double total() const { return compensated_total(masses.begin(), masses.end()); }
};

template <int D>
PushforwardDensity<D> pinned_pushforward(const DiscreteMeasure<D>& mu, const Point<D>& x, double bin_width) {
  if (!(bin_width > 0.0)) fail(ErrorKind::Domain, "bin width must be positive");
  PushforwardDensity<D> out;
  out.pin = x;
  std::vector<std::size_t> bin(mu.size());
  std::size_t nb = 1;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    bin[i] = static_cast<std::size_t>(std::floor(dist<D>(mu.atoms[i], x) / bin_width));
    nb = std::max(nb, bin[i] + 1);
  }
  std::vector<CompensatedSum> acc(nb);
  for (std::size_t i = 0; i < mu.size(); ++i) acc[bin[i]].add(mu.masses[i]);
  for (std::size_t b = 0; b <= nb; ++b) out.bin_edges.push_back(b * bin_width);
  for (const auto& a : acc) out.masses.push_back(a.value());
  return out;
}

// ---------------------------------------------------------------------------
// Concentrated plates

template <int D>
struct PlateMasses {
  std::vector<std::size_t> index;  // net indices with mass >= gamma
  std::vector<double> mass;
  int max_multiplicity = 0;        // most net plates containing a single atom
};

template <int D>
bool in_plate_domain(const Point<D>& z) {
  for (double v : z)
    if (std::abs(v) > 10.0) return false;
  return true;
}

// Net plate masses, computed per orientation by binning atoms on the
// translation grid.
template <int D>
PlateMasses<D> plate_masses(const DiscreteMeasure<D>& mu, const PlateNet<D>& net, double gamma) {
  PlateMasses<D> out;
  const int k = D - net.m;
  std::vector<int> mult(mu.size(), 0);
  if (k == 0) {
    CompensatedSum s;
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (in_plate_domain<D>(mu.atoms[i])) {
        s.add(mu.masses[i]);
        mult[i] = 1;
      }
    if (s.value() >= gamma) {
      out.index.push_back(0);
      out.mass.push_back(s.value());
    }
    for (int v : mult) out.max_multiplicity = std::max(out.max_multiplicity, v);
    return out;
  }
  const double h = net.grid_step;
  std::map<std::vector<long>, std::size_t> grid;
  for (std::size_t t = 0; t < net.translations.size(); ++t) {
    std::vector<long> key(k);
    for (int q = 0; q < k; ++q) key[q] = std::lround(net.translations[t][q] / h);
    grid[key] = t;
  }
  const int reach = static_cast<int>(std::ceil(net.r / h));
  std::vector<CompensatedSum> acc(net.translations.size());
  for (std::size_t o = 0; o < net.orientations.size(); ++o) {
    std::fill(acc.begin(), acc.end(), CompensatedSum{});
    const auto& comp = net.complements[o];
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!in_plate_domain<D>(mu.atoms[i])) continue;
      std::vector<double> y(k);
      std::vector<long> base(k);
      for (int q = 0; q < k; ++q) {
        y[q] = dot<D>(mu.atoms[i], comp[q]);
        base[q] = std::lround(y[q] / h);
      }
      std::vector<long> off(k, -reach);
      while (true) {
        std::vector<long> key(k);
        double d2 = 0.0;
        for (int q = 0; q < k; ++q) {
          key[q] = base[q] + off[q];
          double e = y[q] - key[q] * h;
          d2 += e * e;
        }
        if (d2 < net.r * net.r) {
          auto it = grid.find(key);
          if (it != grid.end()) {
            acc[it->second].add(mu.masses[i]);
            ++mult[i];
          }
        }
        int q = k - 1;
        while (q >= 0 && ++off[q] > reach) off[q--] = -reach;
        if (q < 0) break;
      }
    }
    for (std::size_t t = 0; t < acc.size(); ++t)
      if (acc[t].value() >= gamma) {
        out.index.push_back(o * net.translations.size() + t);
        out.mass.push_back(acc[t].value());
      }
  }
  for (int v : mult) out.max_multiplicity = std::max(out.max_multiplicity, v);
  return out;
}

template <int D>
std::vector<Plate<D>> concentrated_plates(const DiscreteMeasure<D>& mu, const PlateNet<D>& net, double gamma) {
  if (gamma < 0.0) fail(ErrorKind::Domain, "gamma must be nonnegative");
  std::vector<Plate<D>> out;
  for (std::size_t i : plate_masses<D>(mu, net, gamma).index) out.push_back(net.plate(i));
  return out;
}

// Smallest dyadic r in [C0 delta, 1] with a concentrated plate containing 2T;
// 1 when there is none.
template <int D>
double r_of_tube(const Tube<D>& t, const std::map<double, std::vector<Plate<D>>>& nets, double C0, double delta) {
  for (double r : dyadic_between(C0 * delta, 1.0)) {
    auto it = nets.find(r);
    if (it == nets.end()) fail(ErrorKind::IncompleteInput, "missing plate scale");
    for (const auto& h : it->second)
      if (tube_in_plate<D>(t, h, 2.0)) return r;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Good and bad tubes

struct ClassifyParams {
  double alpha = 1.5;
  double beta = 0.01;
  double epsilon = 0.1;
  double eta = 0.05;
  double C0 = 8.0;
  double R0 = 256.0;
  int m = 0;  // 0: the integer with m-1 < alpha <= m
};

inline int plate_dimension_for(double alpha, int m) {
  int mm = m > 0 ? m : static_cast<int>(std::ceil(alpha - 1e-12));
  if (!(alpha > mm - 1 && alpha <= mm + 1e-12)) fail(ErrorKind::InvalidDimension, "need m-1 < alpha <= m");
  return mm;
}

template <int D>
struct GoodBadSplit {
  int j = 0;
  double R_j = 0.0;
  double delta = 0.0;
  ClassifyParams params;
  int m = 0;
  TubeFamily<D> family;
  std::vector<double> r_of;       // per tube
  std::vector<double> mass_4T;    // mu2(4T) per tube
  std::vector<double> threshold;  // per tube
  std::vector<char> is_bad;
  std::vector<int> good, bad;
  std::map<double, std::size_t> concentrated_count;
};

inline double bad_threshold(double delta, double alpha, double epsilon, double r, int m) {
  return std::pow(delta, alpha - 2.0 * epsilon) / std::pow(r, alpha - (m - 1));
}

// mu(dil*T) for every tube of the family, one perpendicular bucket grid per direction.
template <int D>
std::vector<double> tube_masses(const TubeFamily<D>& fam, const DiscreteMeasure<D>& mu, double dil) {
  std::vector<double> out(fam.tubes.size(), 0.0);
  std::vector<int> caps;
  for (const auto& [c, dt] : fam.by_cap) caps.push_back(c);
  parallel_for(caps.size(), [&](std::size_t ci) {
    const auto& dt = fam.by_cap.at(caps[ci]);
    const double cell = dil * fam.shape.radius;
    std::unordered_map<std::array<long, D - 1>, std::vector<std::size_t>, CellKeyHash<D - 1>> grid;
    std::vector<std::array<double, D - 1>> pc(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      std::array<long, D - 1> key;
      for (int q = 0; q < D - 1; ++q) {
        pc[i][q] = dot<D>(mu.atoms[i], dt.basis[q]);
        key[q] = static_cast<long>(std::floor(pc[i][q] / cell));
      }
      grid[key].push_back(i);
    }
    for (const auto& [idx, tid] : dt.by_index) {
      const auto& t = fam.tubes[tid];
      std::array<double, D - 1> ac;
      std::array<long, D - 1> k0;
      for (int q = 0; q < D - 1; ++q) {
        ac[q] = dot<D>(t.axis_point, dt.basis[q]);
        k0[q] = static_cast<long>(std::floor(ac[q] / cell));
      }
      CompensatedSum s;
      std::array<int, D - 1> off{};
      for (auto& o : off) o = -1;
      while (true) {
        std::array<long, D - 1> key;
        for (int q = 0; q < D - 1; ++q) key[q] = k0[q] + off[q];
        auto it = grid.find(key);
        if (it != grid.end())
          for (std::size_t i : it->second)
            if (t.contains(mu.atoms[i], dil)) s.add(mu.masses[i]);
        int q = D - 2;
        while (q >= 0 && ++off[q] > 1) off[q--] = -1;
        if (q < 0) break;
      }
      out[tid] = s.value();
    }
  });
  return out;
}

template <int D>
GoodBadSplit<D> classify_tubes(const DiscreteMeasure<D>& mu1, const DiscreteMeasure<D>& mu2, int j,
                               const ClassifyParams& params) {
  GoodBadSplit<D> sp;
  sp.m = plate_dimension_for(params.alpha, params.m);
  if (sp.m > D) fail(ErrorKind::InvalidDimension, "alpha exceeds the ambient dimension");
  sp.j = j;
  sp.params = params;
  sp.R_j = std::ldexp(params.R0, j);
  sp.delta = 2.0 * std::pow(sp.R_j, -0.5 + params.beta);
  sp.family = build_sphere_tube_family<D>(sp.R_j, params.beta);
  const auto both = combine_measures<D>(mu1, mu2);
  const double gamma = std::pow(sp.delta, params.eta);
  std::map<double, std::vector<Plate<D>>> nets;
  for (double r : dyadic_between(params.C0 * sp.delta, 1.0)) {
    auto net = build_plate_net<D>(r, sp.m);
    nets[r] = concentrated_plates<D>(both, net, gamma);
    sp.concentrated_count[r] = nets[r].size();
  }
  const std::size_t n = sp.family.tubes.size();
  sp.r_of.assign(n, 1.0);
  sp.threshold.assign(n, 0.0);
  sp.is_bad.assign(n, 0);
  sp.mass_4T = tube_masses<D>(sp.family, mu2, 4.0);
  parallel_for(n, [&](std::size_t i) {
    sp.r_of[i] = r_of_tube<D>(sp.family.tubes[i], nets, params.C0, sp.delta);
    sp.threshold[i] = bad_threshold(sp.delta, params.alpha, params.epsilon, sp.r_of[i], sp.m);
    sp.is_bad[i] = sp.mass_4T[i] >= sp.threshold[i];
  });
  for (std::size_t i = 0; i < n; ++i) (sp.is_bad[i] ? sp.bad : sp.good).push_back(static_cast<int>(i));
  return sp;
}

// Tube ids of bad tubes whose 2T contains x.
template <int D>
std::vector<int> bad_tubes_through(const GoodBadSplit<D>& sp, const Point<D>& x) {
  std::vector<int> out;
  const auto& fam = sp.family;
  for (const auto& [cap, dt] : fam.by_cap) {
    std::array<long, D - 1> base;
    for (int q = 0; q < D - 1; ++q) base[q] = std::lround(dot<D>(x, dt.basis[q]) / dt.spacing);
    const int reach = static_cast<int>(std::ceil(2.0 * fam.shape.radius / dt.spacing)) + 1;
    std::array<int, D - 1> off{};
    for (auto& o : off) o = -reach;
    while (true) {
      std::array<int, D - 1> key;
      for (int q = 0; q < D - 1; ++q) key[q] = static_cast<int>(base[q] + off[q]);
      auto it = dt.by_index.find(key);
      if (it != dt.by_index.end() && sp.is_bad[it->second] && fam.tubes[it->second].contains(x, 2.0))
        out.push_back(it->second);
      int q = D - 2;
      while (q >= 0 && ++off[q] > reach) off[q--] = -reach;
      if (q < 0) break;
    }
  }
  return out;
}

// mu1 mass of the union of 2T over bad T with x in 2T.
template <int D>
double bad_mass(const GoodBadSplit<D>& sp, const DiscreteMeasure<D>& mu1, const Point<D>& x) {
  auto ids = bad_tubes_through<D>(sp, x);
  if (ids.empty()) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    for (int id : ids)
      if (sp.family.tubes[id].contains(mu1.atoms[i], 2.0)) {
        s.add(mu1.masses[i]);
        break;
      }
  }
  return s.value();
}

// Worst constant C in M mu2(Y_M) <= C |W| delta^{alpha-2 eps} / r^{alpha-(m-1)},
// over groups W of good tubes sharing r(T) and levels M, with Y_M the atoms of
// mu2 lying in at least M tubes of W.
template <int D>
double incidence_constant(const GoodBadSplit<D>& sp, const DiscreteMeasure<D>& mu2) {
  std::map<double, std::vector<int>> groups;
  for (int id : sp.good) groups[sp.r_of[id]].push_back(id);
  double worst = 0.0;
  for (const auto& [r, ids] : groups) {
    std::vector<int> hits(mu2.size(), 0);
    std::vector<char> member(sp.family.tubes.size(), 0);
    for (int id : ids) member[id] = 1;
    for (std::size_t i = 0; i < mu2.size(); ++i) {
      const auto& x = mu2.atoms[i];
      for (const auto& [cap, dt] : sp.family.by_cap) {
        std::array<long, D - 1> base;
        for (int q = 0; q < D - 1; ++q) base[q] = std::lround(dot<D>(x, dt.basis[q]) / dt.spacing);
        const int reach = static_cast<int>(std::ceil(sp.family.shape.radius / dt.spacing)) + 1;
        std::array<int, D - 1> off{};
        for (auto& o : off) o = -reach;
        while (true) {
          std::array<int, D - 1> key;
          for (int q = 0; q < D - 1; ++q) key[q] = static_cast<int>(base[q] + off[q]);
          auto it = dt.by_index.find(key);
          if (it != dt.by_index.end() && member[it->second] && sp.family.tubes[it->second].contains(x, 1.0))
            ++hits[i];
          int q = D - 2;
          while (q >= 0 && ++off[q] > reach) off[q--] = -reach;
          if (q < 0) break;
        }
      }
    }
    int maxhit = 0;
    for (int h : hits) maxhit = std::max(maxhit, h);
    const double budget = double(ids.size()) * bad_threshold(sp.delta, sp.params.alpha, sp.params.epsilon, r, sp.m);
    for (int M = 1; M <= maxhit; M *= 2) {
      CompensatedSum y;
      for (std::size_t i = 0; i < mu2.size(); ++i)
        if (hits[i] >= M) y.add(mu2.masses[i]);
      worst = std::max(worst, M * y.value() / budget);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Energies

template <int D>
double energy_integral(const DiscreteMeasure<D>& mu, double beta) {
  if (!(beta > 0.0)) fail(ErrorKind::Domain, "energy exponent must be positive");
  if (mu.size() < 2) fail(ErrorKind::UndefinedEnergy, "energy needs at least two atoms");
  std::vector<double> row(mu.size(), 0.0);
  parallel_for(mu.size(), [&](std::size_t i) {
    CompensatedSum s;
    for (std::size_t j = i + 1; j < mu.size(); ++j) {
      double r = dist<D>(mu.atoms[i], mu.atoms[j]);
      if (r == 0.0) fail(ErrorKind::UndefinedEnergy, "coincident atoms");
      s.add(mu.masses[j] * std::pow(r, -beta));
    }
    row[i] = 2.0 * mu.masses[i] * s.value();
  });
  return compensated_total(row.begin(), row.end());
}

// Energy of the measure whose atoms are spread uniformly over their cells
// (intervals of length cell_side centered at the atoms, d = 1): the
// off-diagonal sum plus the exact self-energy of each cell. Valid for beta < 1.
inline double cell_energy_integral(const DiscreteMeasure<1>& mu, double beta, double cell_side) {
  if (!(beta > 0.0 && beta < 1.0)) fail(ErrorKind::Domain, "cell energy needs 0 < beta < 1");
  if (!(cell_side > 0.0)) fail(ErrorKind::Domain, "cell side must be positive");
  double off = mu.size() >= 2 ? energy_integral<1>(mu, beta) : 0.0;
  CompensatedSum self;
  const double k = 2.0 / ((1.0 - beta) * (2.0 - beta)) * std::pow(cell_side, -beta);
  for (double m : mu.masses) self.add(m * m * k);
  return off + self.value();
}

// ---------------------------------------------------------------------------
// Spherical averages

inline double gamma_exponent(int d, double alpha) {
  if (d < 3) fail(ErrorKind::OutOfRange, "the exponent is defined for d >= 3");
  if (d == 3) return alpha - alpha * alpha / 6.0;
  return d * alpha / (d + 1.0);
}

inline double falconer_threshold(int d) {
  if (d < 3) fail(ErrorKind::OutOfRange, "threshold defined for d >= 3");
  if (d == 3) return 1.5 + 0.25 + (17.0 - 12.0 * std::sqrt(2.0)) / 4.0;
  return d / 2.0 + 0.25 - 1.0 / (8.0 * d + 4.0);
}

// Fourier transform of normalized surface measure on S^{D-1} at radius s.
template <int D>
double sigma_hat(double s) {
  if constexpr (D == 2) {
    return std::cyl_bessel_j(0.0, std::abs(s));
  } else if constexpr (D == 3) {
    return s == 0.0 ? 1.0 : std::sin(s) / s;
  } else {
    double nu = 0.5 * D - 1.0;
    if (s == 0.0) return 1.0;
    return std::tgamma(nu + 1.0) * std::pow(2.0 / std::abs(s), nu) * std::cyl_bessel_j(nu, std::abs(s));
  }
}

// (mu * sigma_R^)(x) in closed form.
template <int D>
double spherical_average_transform(const DiscreteMeasure<D>& mu, const Point<D>& x, double R) {
  CompensatedSum s;
  for (std::size_t i = 0; i < mu.size(); ++i) s.add(mu.masses[i] * sigma_hat<D>(R * dist<D>(x, mu.atoms[i])));
  return s.value();
}

template <int D>
double sphere_area() {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * D) / std::tgamma(0.5 * D);
}

template <int D>
std::size_t min_sphere_nodes(double R) {
  return static_cast<std::size_t>(std::ceil(sphere_area<D>() * std::pow(2.0 * R / std::numbers::pi, D - 1)));
}

// Equal-weight unit vectors: uniform angles (d = 2), Fibonacci lattice (d = 3).
template <int D>
std::vector<Point<D>> sphere_nodes(std::size_t K) {
  std::vector<Point<D>> out;
  if constexpr (D == 2) {
    for (std::size_t k = 0; k < K; ++k) {
      double t = 2.0 * std::numbers::pi * (k + 0.5) / double(K);
      out.push_back({std::cos(t), std::sin(t)});
    }
  } else if constexpr (D == 3) {
    const double ga = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < K; ++k) {
      double z = 1.0 - (2.0 * k + 1.0) / double(K);
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back({r * std::cos(ga * k), r * std::sin(ga * k), z});
    }
  } else {
    fail(ErrorKind::InvalidDimension, "sphere quadrature implemented for d = 2, 3");
  }
  return out;
}

// Gauss-Laguerre nodes and weights (weight e^{-v} on [0, inf)) by Golub-Welsch.
inline std::vector<std::pair<double, double>> gauss_laguerre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    J(k, k) = 2.0 * k + 1.0;
    if (k + 1 < n) J(k, k + 1) = J(k + 1, k) = k + 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < n; ++k) {
    double v = es.eigenvectors()(0, k);
    out.emplace_back(es.eigenvalues()(k), v * v);
  }
  return out;
}

template <int D>
cplx measure_transform(const DiscreteMeasure<D>& mu, const Point<D>& omega) {
  CompensatedComplexSum s;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double ph = -dot<D>(mu.atoms[i], omega);
    s.add(mu.masses[i] * cplx(std::cos(ph), std::sin(ph)));
  }
  return s.value();
}

// R^{-(d-1)} * integral of |mu^|^2 (1 + |R - |xi||)^{-100} over R^D.
template <int D>
double psi_r_energy(const DiscreteMeasure<D>& mu, double R, std::size_t K) {
  auto us = sphere_nodes<D>(K);
  auto gl = gauss_laguerre(16);
  CompensatedSum total;
  for (double side : {-1.0, 1.0}) {
    for (auto [v, w] : gl) {
      double t = std::expm1(v / 99.0);
      double rho = R + side * t;
      if (rho <= 0.0) continue;
      CompensatedSum a;
      for (const auto& u : us) a.add(std::norm(measure_transform<D>(mu, rho * u)));
      double A = sphere_area<D>() * a.value() / double(K);
      total.add(w / 99.0 * std::pow(rho, D - 1) * A);
    }
  }
  return total.value() * std::pow(R, -(D - 1));
}

// mu_{1,g} * sigma_R^ evaluated at the atoms of mu2. Each frequency node
// omega = R u is weighted per atom x_i of mu1 by
//   psi0(omega) + (1 - psi0(omega)) sum_tau psi_tau(u) sum_{good T in tau} eta_T(x_i),
// i.e. the spatial cutoff is applied to mu1 before the angular cutoff.
template <int D>
ExperimentReport good_spherical_l2(const DiscreteMeasure<D>& mu1, const DiscreteMeasure<D>& mu2,
                                   const GoodBadSplit<D>& sp, double R, std::size_t nodes) {
  if (!(R >= 4.0)) fail(ErrorKind::InvalidScale, "R must be at least 4");
  if (nodes < min_sphere_nodes<D>(R)) fail(ErrorKind::Resolution, "too few sphere nodes for this R");
  const auto& fam = sp.family;
  auto us = sphere_nodes<D>(nodes);
  std::vector<int> caps;
  std::vector<Point<D>> cap_dirs;
  for (const auto& [c, dt] : fam.by_cap) {
    caps.push_back(c);
    cap_dirs.push_back(dt.direction);
  }
  const double cap_rad = sphere_cap_radius<D>(caps.size());
  // angular partition of unity psi_tau at each node
  std::vector<std::vector<std::pair<std::size_t, double>>> psi(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    double tot = 0.0;
    for (std::size_t c = 0; c < caps.size(); ++c) {
      double ang = std::acos(std::clamp(dot<D>(us[k], cap_dirs[c]), -1.0, 1.0));
      double b = bump(ang / cap_rad);
      if (b > 0.0) {
        psi[k].emplace_back(c, b);
        tot += b;
      }
    }
    for (auto& [c, b] : psi[k]) b /= tot;
  }
  // good spatial weight per (cap, atom of mu1)
  std::vector<std::vector<double>> G(caps.size(), std::vector<double>(mu1.size(), 0.0));
  parallel_for(caps.size(), [&](std::size_t c) {
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      double s = 0.0;
      for (const auto& [tid, eta] : fam.partition(caps[c], mu1.atoms[i]))
        if (!sp.is_bad[tid]) s += eta;
      G[c][i] = s;
    }
  });
  const double psi0 = bump(R / (2.0 * sp.params.R0));
  // transforms per node: full and good
  std::vector<cplx> full(nodes), good(nodes);
  parallel_for(nodes, [&](std::size_t k) {
    Point<D> om = R * us[k];
    CompensatedComplexSum f, g;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      double ph = -dot<D>(mu1.atoms[i], om);
      cplx e = mu1.masses[i] * cplx(std::cos(ph), std::sin(ph));
      double w = 0.0;
      for (const auto& [c, b] : psi[k]) w += b * G[c][i];
      f.add(e);
      g.add((psi0 + (1.0 - psi0) * w) * e);
    }
    full[k] = f.value();
    good[k] = g.value();
  });
  CompensatedSum l2g, l2f, m2;
  for (std::size_t x = 0; x < mu2.size(); ++x) {
    CompensatedComplexSum fg, ff;
    for (std::size_t k = 0; k < nodes; ++k) {
      double ph = dot<D>(mu2.atoms[x], R * us[k]);
      cplx e(std::cos(ph), std::sin(ph));
      fg.add(good[k] * e);
      ff.add(full[k] * e);
    }
    l2g.add(mu2.masses[x] * std::norm(fg.value() / double(nodes)));
    l2f.add(mu2.masses[x] * std::norm(ff.value() / double(nodes)));
    m2.add(mu2.masses[x]);
  }
  double good_mass = 0.0;
  {
    // mass of mu_{1,g} seen through the spatial weights, averaged over directions
    CompensatedSum s;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      double avg = 0.0;
      for (std::size_t c = 0; c < caps.size(); ++c) avg += G[c][i];
      s.add(mu1.masses[i] * (psi0 + (1.0 - psi0) * avg / double(caps.size())));
    }
    good_mass = s.value();
  }
  ExperimentReport rep;
  rep.add("l2_good", m2.value() > 0.0 ? l2g.value() / m2.value() : 0.0);
  rep.add("l2_full", m2.value() > 0.0 ? l2f.value() / m2.value() : 0.0);
  rep.add("good_mass", good_mass);
  rep.add("mu1_mass", mu1.total());
  rep.add("psi_r_energy", psi_r_energy<D>(mu1, R, nodes));
  rep.add("bad_tubes", static_cast<double>(sp.bad.size()));
  rep.add("tubes", static_cast<double>(fam.tubes.size()));
  if (D >= 3) rep.add("gamma_exponent", gamma_exponent(D, sp.params.alpha));
  return rep;
}

}  // namespace dlab
