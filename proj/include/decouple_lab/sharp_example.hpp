#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "decoupling_meter.hpp"
#include "extension.hpp"
#include "geometry.hpp"
#include "weights.hpp"

namespace dlab {

inline double kappa_from_alpha(int d, int m, double alpha) {
  if (m < 2 || m > d) fail(ErrorKind::OutOfRange, "need 2 <= m <= d");
  const double lo = d - 0.5 * (m + 1);
  if (alpha < lo - 1e-12 || alpha > d + 1e-12) fail(ErrorKind::OutOfRange, "alpha outside [d-(m+1)/2, d]");
  return (d - alpha) / (2.0 * (m + 1));
}

struct LambdaRow {
  std::vector<long> n;  // x'' lattice coordinates
  long l_max = 0;       // x_d indices run over [-l_max, l_max]
};

template <int D>
struct ExampleInstance {
  int d = D;
  int m = 2;
  double alpha = 0.0;
  double kappa = 0.0;
  double R = 0.0;
  double c = 1e-3;
  double beta = 0.0;

  FrequencySet<D> omega;
  std::vector<Point<D - 1>> omega_centers;

  // Lambda lattice: x' = 0, x'' in R^kappa Z^{m-1}, x_d in (R^{2 kappa}/2pi) Z, inside B_R
  double step_mid = 0.0;
  double step_d = 0.0;
  std::vector<LambdaRow> rows;
  long lambda_count = 0;
  std::vector<Point<D>> lambda_points;  // kept cell centers
  double inflation = 1.0;
  double lambda_cell_volume = 0.0;

  double y_inner = 0.0;  // radius of the x' factor of Y
  double y_outer = 0.0;  // radius of the (x'', x_d) factor of Y
  double M_predicted = 0.0;

  int n_prime() const { return D - m; }

  double omega_mass() const { return compensated_total(omega.weights.begin(), omega.weights.end()); }
  double lambda_volume() const { return lambda_count * lambda_cell_volume; }
};

// Stencil offsets (in units of the factor radius) for a k-dimensional ball.
inline double stencil_fraction(int k) {
  if (k == 0) return 0.0;
  double f = 2.0 / 3.0;
  if (f * std::sqrt(double(k)) >= 1.0) f = 0.9 / std::sqrt(double(k));
  return f;
}

template <int D>
ExampleInstance<D> build_sharp_example(int m, double alpha, double R, double c, long budget = 1000000,
                                       double beta = 0.0, bool allow_subsample = true) {
  ExampleInstance<D> ex;
  ex.m = m;
  ex.alpha = alpha;
  ex.kappa = kappa_from_alpha(D, m, alpha);
  if (!(R >= 64.0)) fail(ErrorKind::InvalidScale, "the sharp example needs R >= 64");
  if (!(c > 0.0 && c <= 0.01)) fail(ErrorKind::Domain, "c must lie in (0, 1/100]");
  ex.R = R;
  ex.c = c;
  ex.beta = beta;
  const int np = D - m;      // dim of x', xi'
  const int nm = m - 1;      // dim of x'', xi''
  const double kap = ex.kappa;

  // Omega: balls around (0, 2 pi R^{-kappa} k) inside the unit ball
  const double om_step = 2.0 * std::numbers::pi * std::pow(R, -kap);
  const double rho_p = c / std::sqrt(R), rho_m = c / R;
  const double w = unit_ball_volume(np) * std::pow(rho_p, np) * unit_ball_volume(nm) * std::pow(rho_m, nm) /
                   std::pow(3.0, D - 1);
  const double fp = stencil_fraction(np), fm = stencil_fraction(nm);
  const int kmax = static_cast<int>(std::floor(1.0 / om_step)) + 1;
  std::vector<int> k(nm, -kmax);
  while (true) {
    Point<D - 1> ctr{};
    double r2 = 0.0;
    for (int i = 0; i < nm; ++i) {
      ctr[np + i] = om_step * k[i];
      r2 += ctr[np + i] * ctr[np + i];
    }
    if (std::sqrt(r2) < 1.0) {
      ex.omega_centers.push_back(ctr);
      const int cap = cap_index_of<D>(ctr, R);
      std::array<int, D - 1> s{};
      while (true) {
        Point<D - 1> xi = ctr;
        for (int i = 0; i < D - 1; ++i) xi[i] += (s[i] - 1) * (i < np ? fp * rho_p : fm * rho_m);
        double q = 0.0;
        for (double v : xi) q += v * v;
        if (q <= 1.0) ex.omega.add(xi, w, cplx(1.0, 0.0), cap);
        int j = D - 2;
        while (j >= 0 && ++s[j] == 3) s[j--] = 0;
        if (j < 0) break;
      }
    }
    if (nm == 0) break;
    int j = nm - 1;
    while (j >= 0 && ++k[j] > kmax) k[j--] = -kmax;
    if (j < 0) break;
  }

  // Lambda
  ex.step_mid = std::pow(R, kap);
  ex.step_d = std::pow(R, 2.0 * kap) / (2.0 * std::numbers::pi);
  ex.lambda_cell_volume = unit_ball_volume(np) * std::pow(c * std::sqrt(R), np) * unit_ball_volume(nm) *
                          std::pow(c, nm) * 2.0 * c;
  const long nmax = static_cast<long>(std::floor(R / ex.step_mid)) + 1;
  std::vector<long> n(nm, -nmax);
  while (true) {
    double r2 = 0.0;
    for (int i = 0; i < nm; ++i) r2 += (n[i] * ex.step_mid) * (n[i] * ex.step_mid);
    if (r2 < R * R) {
      double rad = std::sqrt(R * R - r2);
      long lm = static_cast<long>(std::ceil(rad / ex.step_d)) - 1;
      while (lm >= 0 && (lm + 1) * ex.step_d < rad) ++lm;
      while (lm >= 0 && lm * ex.step_d >= rad) --lm;
      if (lm >= 0) {
        ex.rows.push_back({n, lm});
        ex.lambda_count += 2 * lm + 1;
      }
    }
    if (nm == 0) break;
    int j = nm - 1;
    while (j >= 0 && ++n[j] > nmax) n[j--] = -nmax;
    if (j < 0) break;
  }
  long stride = 1;
  if (ex.lambda_count > budget) {
    if (!allow_subsample) fail(ErrorKind::Budget, "Lambda exceeds the point budget");
    stride = (ex.lambda_count + budget - 1) / budget;
  }
  long g = 0;
  for (const auto& row : ex.rows) {
    long first = -row.l_max;
    long len = 2 * row.l_max + 1;
    long start = (stride - g % stride) % stride;
    for (long q = start; q < len; q += stride) {
      Point<D> x{};
      for (int i = 0; i < nm; ++i) x[np + i] = row.n[i] * ex.step_mid;
      x[D - 1] = (first + q) * ex.step_d;
      ex.lambda_points.push_back(x);
    }
    g += len;
  }
  ex.inflation = double(ex.lambda_count) / double(ex.lambda_points.size());
  ex.y_inner = c * std::sqrt(R);
  ex.y_outer = R;
  ex.M_predicted = std::pow(R, kap * (m - 1));
  return ex;
}

// Max distance of the phase to 2 pi Z over extreme points of the sampled
// Lambda cells and Omega balls. x_shift moves every Lambda point along x_d.
template <int D>
double phase_deviation(const ExampleInstance<D>& ex, double x_shift = 0.0) {
  const int np = D - ex.m;
  const int nm = ex.m - 1;
  // extreme offsets of a product of balls: each factor at its center, or at
  // 0.999 of its radius along +- each axis
  auto offsets = [](int dim0, const std::vector<std::pair<int, double>>& factors) {
    std::vector<std::vector<double>> out(1, std::vector<double>(dim0, 0.0));
    int base = 0;
    for (auto [k, rad] : factors) {
      std::vector<std::vector<double>> next;
      for (const auto& o : out) {
        next.push_back(o);
        for (int i = 0; i < k; ++i)
          for (double sgn : {-1.0, 1.0}) {
            auto q = o;
            q[base + i] = sgn * 0.999 * rad;
            next.push_back(q);
          }
      }
      out.swap(next);
      base += k;
    }
    return out;
  };
  auto xo = offsets(D, {{np, ex.c * std::sqrt(ex.R)}, {nm, ex.c}, {1, ex.c}});
  auto xio = offsets(D - 1, {{np, ex.c / std::sqrt(ex.R)}, {nm, ex.c / ex.R}});
  std::vector<Point<D - 1>> xis;
  for (const auto& ctr : ex.omega_centers)
    for (const auto& o : xio) {
      Point<D - 1> xi = ctr;
      for (int i = 0; i < D - 1; ++i) xi[i] += o[i];
      double q = 0.0;
      for (double v : xi) q += v * v;
      if (q <= 1.0) xis.push_back(xi);
    }
  std::vector<double> worst(ex.lambda_points.size(), 0.0);
  parallel_for(ex.lambda_points.size(), [&](std::size_t j) {
    double wv = 0.0;
    for (const auto& o : xo) {
      Point<D> x = ex.lambda_points[j];
      for (int i = 0; i < D; ++i) x[i] += o[i];
      x[D - 1] += x_shift;
      for (const auto& xi : xis) {
        double s = 0.0, ph = 0.0;
        for (int i = 0; i < D - 1; ++i) {
          ph += x[i] * xi[i];
          s += xi[i] * xi[i];
        }
        ph += x[D - 1] * s;
        wv = std::max(wv, distance_to_2pi_z(ph));
      }
    }
    worst[j] = wv;
  });
  double out = 0.0;
  for (double v : worst) out = std::max(out, v);
  return out;
}

// Y-sample: x' = 0 (the x' factor of Y is far below the oscillation scale),
// (x'', x_d) on a lattice of spacing R^{1/2}/4 inside B^m_R.
template <int D>
SampledField<D> y_sample(const ExampleInstance<D>& ex) {
  const int np = D - ex.m;
  const double h = 0.25 * std::sqrt(ex.R);
  const double wgt = std::pow(h, ex.m) * unit_ball_volume(np) * std::pow(ex.y_inner, np);
  SampledField<D> f;
  f.scale = ex.R;
  const long n = static_cast<long>(std::floor(ex.y_outer / h));
  std::vector<long> k(ex.m, -n);
  while (true) {
    Point<D> x{};
    double r2 = 0.0;
    for (int i = 0; i < ex.m; ++i) {
      x[np + i] = k[i] * h;
      r2 += x[np + i] * x[np + i];
    }
    if (std::sqrt(r2) < ex.y_outer) {
      f.points.push_back(x);
      f.point_weights.push_back(wgt);
    }
    int j = ex.m - 1;
    while (j >= 0 && ++k[j] > n) k[j--] = -n;
    if (j < 0) break;
  }
  f.values.assign(f.points.size(), cplx(0.0, 0.0));
  return f;
}

template <int D>
bool tube_inside_y(const ExampleInstance<D>& ex, const Tube<D>& t) {
  const int np = D - ex.m;
  auto pts = tube_boundary_samples<D>(t, 1.0);
  const std::size_t ring = pts.size() / 8;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double outer = 0.0, inner = 0.0;
    for (int q = 0; q < D; ++q) (q < np ? inner : outer) += pts[i][q] * pts[i][q];
    if (!(std::sqrt(outer) < ex.y_outer)) return false;
    if (i % ring == 0 && !(std::sqrt(inner) < std::max(ex.y_inner, t.radius))) return false;
  }
  return true;
}

template <int D>
struct ExampleFields {
  SampledField<D> on_lambda;                 // f on kept Lambda cells, weights include the inflation
  SampledField<D> y;                         // Y sample points
  std::map<int, std::vector<cplx>> per_cap;  // f_theta on the Y sample
  std::vector<Tube<D>> W;
  IncidenceProfile<D> incidence;
};

// Tubes of the caps met by Omega that lie in Y.
template <int D>
std::vector<Tube<D>> example_tubes(const ExampleInstance<D>& ex) {
  std::map<int, int> caps;
  for (int cidx : ex.omega.cap_of) caps[cidx] = 1;
  auto all_caps = build_caps<D>(ex.R);
  auto fam = empty_family<D>(ex.R, ex.beta, ScaleMode::scale_R);
  std::vector<Tube<D>> W;
  for (const auto& [cidx, one] : caps)
    for (const auto& t : add_direction_tubes<D>(fam, cidx, all_caps.at(cidx).normal))
      if (tube_inside_y<D>(ex, t)) W.push_back(t);
  return W;
}

template <int D>
ExampleFields<D> example_fields(const ExampleInstance<D>& ex) {
  ExampleFields<D> out;
  out.on_lambda = extend<D>(ex.omega, ex.lambda_points, ex.R,
                            std::vector<double>(ex.lambda_points.size(), ex.lambda_cell_volume * ex.inflation));
  out.y = y_sample<D>(ex);
  std::map<int, int> caps;
  for (int cidx : ex.omega.cap_of) caps[cidx] = 1;
  for (const auto& [cidx, one] : caps)
    out.per_cap[cidx] = extend_values<D>(restrict_to_cap<D>(ex.omega, cidx), out.y.points);
  out.W = example_tubes<D>(ex);
  out.incidence = incidence_count<D>(out.W, ex.R);
  return out;
}

template <int D>
ExperimentReport example_report(const ExampleInstance<D>& ex, double p, ExampleFields<D>* keep = nullptr) {
  if (!(p > 0.0)) fail(ErrorKind::Domain, "p must be positive");
  auto fields = example_fields<D>(ex);
  ExperimentReport rep;
  const double norm_c = extension_normalization<D>();
  const double mass = ex.omega_mass();
  double lhs = weighted_lp_norm<D>(fields.on_lambda, CubeRegion<D>::everything(), p);
  double coh = 1e300;
  for (const auto& v : fields.on_lambda.values) coh = std::min(coh, std::abs(v));
  coh /= norm_c * mass;

  CompensatedSum acc;
  CompensatedSum mag;
  std::size_t nmag = 0;
  for (const auto& [cidx, vals] : fields.per_cap) {
    SampledField<D> ft = fields.y;
    ft.values = vals;
    acc.add(std::pow(weighted_lp_norm<D>(ft, CubeRegion<D>::everything(), p), p));
    for (const auto& v : vals) {
      mag.add(std::abs(v));
      ++nmag;
    }
  }
  const int np = D - ex.m, nm = ex.m - 1;
  const double unit = norm_c * unit_ball_volume(np) * std::pow(ex.c, np) * unit_ball_volume(nm) * std::pow(ex.c, nm);
  const int M = fields.incidence.M;
  const double rhs = std::pow(double(std::max(M, 1)), 0.5 - 1.0 / p) * std::pow(acc.value(), 1.0 / p);

  rep.add("kappa", ex.kappa);
  rep.add("omega_balls", static_cast<double>(ex.omega_centers.size()));
  rep.add("omega_mass", mass);
  rep.add("lambda_count", static_cast<double>(ex.lambda_count));
  rep.add("lambda_volume", ex.lambda_volume());
  rep.add("lambda_inflation", ex.inflation);
  rep.add("coherence_min", coh);
  rep.add("lhs_norm", lhs);
  rep.add("cap_count", static_cast<double>(fields.per_cap.size()));
  rep.add("cap_magnitude_normalized", nmag ? mag.value() / double(nmag) / unit : 0.0);
  rep.add("cap_magnitude_predicted", std::pow(ex.R, -0.5 * np - nm));
  rep.add("W_size", static_cast<double>(fields.W.size()));
  rep.add("M", M);
  rep.add("M_mean", fields.incidence.mean);
  rep.add("M_predicted", ex.M_predicted);
  rep.add("rhs", rhs);
  rep.add("ratio", rhs > 0.0 ? lhs / rhs : 0.0);
  rep.add("ratio_exponent_predicted", ex.kappa * (0.5 * (ex.m - 1) - (ex.m + 1) / p));
  if (keep) *keep = std::move(fields);
  return rep;
}

// Lambda as a weight, restricted to cells with centers in [-half, half]^D.
template <int D>
Weight<D> lambda_weight(const ExampleInstance<D>& ex, double half) {
  const int np = D - ex.m, nm = ex.m - 1;
  Weight<D> w;
  w.cell_volume = ex.lambda_cell_volume;
  for (int i = 0; i < D; ++i) {
    if (i < np)
      w.cell_extent[i] = std::pow(unit_ball_volume(np), 1.0 / np) * ex.c * std::sqrt(ex.R);
    else if (i < D - 1)
      w.cell_extent[i] = std::pow(unit_ball_volume(nm), 1.0 / nm) * ex.c;
    else
      w.cell_extent[i] = 2.0 * ex.c;
  }
  w.c1 = 1.0;
  for (const auto& row : ex.rows) {
    bool inside = true;
    for (int i = 0; i < nm; ++i)
      if (std::abs(row.n[i] * ex.step_mid) > half) inside = false;
    if (!inside) continue;
    long lim = std::min<long>(row.l_max, static_cast<long>(std::floor(half / ex.step_d)));
    for (long l = -lim; l <= lim; ++l) {
      Point<D> x{};
      for (int i = 0; i < nm; ++i) x[np + i] = row.n[i] * ex.step_mid;
      x[D - 1] = l * ex.step_d;
      w.support_points.push_back(x);
      w.values.push_back(1.0);
    }
  }
  return w;
}

// Ratio sweep over R with a log-log fit.
template <int D>
ExperimentReport sharp_sweep(int m, double alpha, const std::vector<double>& Rs, double p, double c, long budget,
                             double beta = 0.0) {
  ExperimentReport rep;
  std::vector<std::pair<double, double>> pts;
  double kap = kappa_from_alpha(D, m, alpha);
  for (double R : Rs) {
    auto ex = build_sharp_example<D>(m, alpha, R, c, budget, beta);
    auto r = example_report<D>(ex, p);
    rep.add("ratio_R" + std::to_string(static_cast<long long>(std::llround(R))), r.get("ratio"));
    pts.emplace_back(R, r.get("ratio"));
  }
  if (pts.size() >= 2) {
    auto fit = exponent_fit(pts);
    rep.add("fitted_slope", fit.slope);
    rep.add("slope_stderr", fit.stderr_slope);
  }
  rep.add("predicted_slope", kap * (0.5 * (m - 1) - (m + 1) / p));
  return rep;
}

}  // namespace dlab
