#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace dlab {

// Quadrature for g on the parameter ball B^{D-1}(0,1).
template <int D>
struct FrequencySet {
  std::vector<Point<D - 1>> nodes;
  std::vector<double> weights;
  std::vector<cplx> values;
  std::vector<int> cap_of;

  std::size_t size() const { return nodes.size(); }

  void add(const Point<D - 1>& xi, double w, cplx v, int cap) {
    nodes.push_back(xi);
    weights.push_back(w);
    values.push_back(v);
    cap_of.push_back(cap);
  }

  double weighted_l1() const {
    CompensatedSum s;
    for (std::size_t i = 0; i < size(); ++i) s.add(weights[i] * std::abs(values[i]));
    return s.value();
  }
};

template <int D>
struct SampledField {
  std::vector<Point<D>> points;
  std::vector<cplx> values;
  std::vector<double> point_weights;
  double scale = 0.0;

  std::size_t size() const { return points.size(); }
};

// Centered cubic lattice of the given spacing inside the open ball B(0, radius),
// each point carrying weight spacing^D.
template <int D>
SampledField<D> ball_lattice(double radius, double spacing, double scale) {
  SampledField<D> f;
  f.scale = scale;
  const int n = static_cast<int>(std::floor(radius / spacing));
  std::array<int, D> k{};
  for (auto& v : k) v = -n;
  const double w = std::pow(spacing, D);
  while (true) {
    Point<D> x;
    for (int i = 0; i < D; ++i) x[i] = k[i] * spacing;
    if (norm<D>(x) < radius) {
      f.points.push_back(x);
      f.point_weights.push_back(w);
    }
    int j = D - 1;
    while (j >= 0 && ++k[j] > n) k[j--] = -n;
    if (j < 0) break;
  }
  f.values.assign(f.points.size(), cplx(0.0, 0.0));
  return f;
}

template <int D>
double extension_normalization() {
  return std::pow(2.0 * std::numbers::pi, -0.5 * D);
}

// f(x) = (2 pi)^{-D/2} sum_k w_k g_k exp(i (x'.xi_k + x_d |xi_k|^2)), one
// compensated sum per point in node order.
template <int D>
std::vector<cplx> extend_values(const FrequencySet<D>& g, const std::vector<Point<D>>& points) {
  const std::size_t n = g.size();
  std::vector<double> sq(n);
  std::vector<cplx> amp(n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < D - 1; ++i) s += g.nodes[k][i] * g.nodes[k][i];
    if (s > 1.0 + 1e-12) fail(ErrorKind::Domain, "frequency node outside the unit ball");
    sq[k] = s;
    amp[k] = g.weights[k] * g.values[k];
  }
  const double c = extension_normalization<D>();
  std::vector<cplx> out(points.size());
  parallel_for(points.size(), [&](std::size_t j) {
    const auto& x = points[j];
    CompensatedComplexSum acc;
    for (std::size_t k = 0; k < n; ++k) {
      double ph = x[D - 1] * sq[k];
      for (int i = 0; i < D - 1; ++i) ph += x[i] * g.nodes[k][i];
      acc.add(amp[k] * cplx(std::cos(ph), std::sin(ph)));
    }
    out[j] = c * acc.value();
  });
  return out;
}

template <int D>
SampledField<D> extend(const FrequencySet<D>& g, const std::vector<Point<D>>& points, double scale = 0.0,
                       const std::vector<double>& point_weights = {}) {
  if (points.empty()) fail(ErrorKind::EmptyInput, "no evaluation points");
  SampledField<D> f;
  f.points = points;
  f.values = extend_values<D>(g, points);
  f.point_weights = point_weights.empty() ? std::vector<double>(points.size(), 1.0) : point_weights;
  f.scale = scale;
  return f;
}

template <int D>
FrequencySet<D> restrict_to_cap(const FrequencySet<D>& g, int cap) {
  FrequencySet<D> out;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.cap_of[k] == cap) out.add(g.nodes[k], g.weights[k], g.values[k], cap);
  return out;
}

// ---------------------------------------------------------------------------
// Wave packets

// A packet is stored densely over the parent points when idx is empty,
// otherwise only at the listed point indices.
template <int D>
struct Packet {
  Tube<D> tube;
  int tube_id = -1;
  std::vector<std::uint32_t> idx;
  std::vector<cplx> vals;

  bool dense() const { return idx.empty(); }
};

template <int D>
struct WavePacketSet {
  std::vector<Point<D>> points;
  std::vector<double> point_weights;
  double scale = 0.0;
  std::vector<Packet<D>> packets;
  SampledField<D> residual;
  SampledField<D> parent;
  std::string description;

  template <typename Fn>
  void for_each_value(const Packet<D>& p, Fn&& fn) const {
    if (p.dense()) {
      for (std::size_t i = 0; i < p.vals.size(); ++i) fn(i, p.vals[i]);
    } else {
      for (std::size_t i = 0; i < p.idx.size(); ++i) fn(static_cast<std::size_t>(p.idx[i]), p.vals[i]);
    }
  }

  SampledField<D> packet_field(std::size_t k) const {
    SampledField<D> f;
    f.points = points;
    f.point_weights = point_weights;
    f.scale = scale;
    f.values.assign(points.size(), cplx(0.0, 0.0));
    for_each_value(packets[k], [&](std::size_t i, cplx v) { f.values[i] = v; });
    return f;
  }

  // Pointwise sum of all packets, accumulated in packet order.
  std::vector<cplx> packet_sum() const {
    std::vector<CompensatedComplexSum> acc(points.size());
    for (const auto& p : packets) for_each_value(p, [&](std::size_t i, cplx v) { acc[i].add(v); });
    std::vector<cplx> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = acc[i].value();
    return out;
  }

  double packet_lp(std::size_t k, double p) const {
    CompensatedSum s;
    for_each_value(packets[k], [&](std::size_t i, cplx v) { s.add(point_weights[i] * std::pow(std::abs(v), p)); });
    return std::pow(s.value(), 1.0 / p);
  }

  // Fraction of the squared L2 mass of packet k lying outside dil*T.
  double outside_mass_fraction(std::size_t k, double dil = 2.0) const {
    CompensatedSum all, out;
    const auto& t = packets[k].tube;
    for_each_value(packets[k], [&](std::size_t i, cplx v) {
      double m = point_weights[i] * std::norm(v);
      all.add(m);
      if (!t.contains(points[i], dil)) out.add(m);
    });
    return all.value() > 0.0 ? out.value() / all.value() : 0.0;
  }
};

template <int D>
double l2_squared(const std::vector<cplx>& v, const std::vector<double>& w) {
  CompensatedSum s;
  for (std::size_t i = 0; i < v.size(); ++i) s.add(w[i] * std::norm(v[i]));
  return s.value();
}

// f_T = eta_T * E(g restricted to theta(T)), with eta_T the perpendicular
// partition of unity of the cap's tubes. Packets are stored where eta_T > 0.
template <int D>
WavePacketSet<D> decompose_wave_packets(const FrequencySet<D>& g, const std::vector<Cap<D>>& caps,
                                        const TubeFamily<D>& tubes, const std::vector<Point<D>>& points,
                                        const std::vector<double>& point_weights = {}) {
  if (points.empty()) fail(ErrorKind::EmptyInput, "no evaluation points");
  (void)caps;
  std::map<int, std::size_t> present;
  for (int c : g.cap_of) ++present[c];
  for (const auto& [c, n] : present)
    if (!tubes.by_cap.count(c)) fail(ErrorKind::IncompleteCover, "tube family misses cap " + std::to_string(c));

  WavePacketSet<D> ws;
  ws.points = points;
  ws.point_weights = point_weights.empty() ? std::vector<double>(points.size(), 1.0) : point_weights;
  ws.scale = tubes.R;
  ws.description = "decomposition of E(g), " + std::to_string(g.size()) + " nodes";
  ws.parent.points = points;
  ws.parent.point_weights = ws.point_weights;
  ws.parent.scale = tubes.R;
  ws.parent.values = extend_values<D>(g, points);

  std::map<int, std::size_t> slot;  // tube id -> packet index
  std::vector<CompensatedComplexSum> recon(points.size());
  for (const auto& [cap, n] : present) {
    auto gc = restrict_to_cap<D>(g, cap);
    auto ftheta = extend_values<D>(gc, points);
    std::vector<std::vector<std::pair<int, double>>> parts(points.size());
    parallel_for(points.size(), [&](std::size_t i) { parts[i] = tubes.partition(cap, points[i]); });
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (const auto& [tid, eta] : parts[i]) {
        auto it = slot.find(tid);
        if (it == slot.end()) {
          it = slot.emplace(tid, ws.packets.size()).first;
          Packet<D> p;
          p.tube = tubes.tubes[tid];
          p.tube_id = tid;
          ws.packets.push_back(std::move(p));
        }
        cplx v = eta * ftheta[i];
        auto& pk = ws.packets[it->second];
        pk.idx.push_back(static_cast<std::uint32_t>(i));
        pk.vals.push_back(v);
        recon[i].add(v);
      }
    }
  }
  ws.residual.points = points;
  ws.residual.point_weights = ws.point_weights;
  ws.residual.scale = tubes.R;
  ws.residual.values.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) ws.residual.values[i] = ws.parent.values[i] - recon[i].value();
  return ws;
}

// Cap center recovered from the paraboloid normal.
template <int D>
Point<D - 1> center_from_normal(const Point<D>& n) {
  Point<D - 1> xi{};
  for (int i = 0; i < D - 1; ++i) xi[i] = -n[i] / (2.0 * n[D - 1]);
  return xi;
}

template <int D>
struct RandomPacketField {
  SampledField<D> field;
  WavePacketSet<D> packets;
  FrequencySet<D> g;
};

// Each packet is E of a tensor bump of half-width R^{-1/2} around the cap
// center, modulated to sit on the tube axis, with a seeded random phase and
// unit L2 norm on the sample points. With a positive support dilation each
// packet is evaluated and stored only inside that dilate of its tube.
template <int D>
RandomPacketField<D> random_packet_field(const std::vector<Tube<D>>& W, std::uint64_t seed, double R,
                                         const std::vector<Point<D>>& points,
                                         const std::vector<double>& point_weights = {},
                                         double support_dilation = 0.0) {
  if (W.empty()) fail(ErrorKind::EmptyInput, "empty tube subset");
  if (support_dilation < 0.0) fail(ErrorKind::Domain, "support dilation must be nonnegative");
  if (points.empty()) fail(ErrorKind::EmptyInput, "no evaluation points");
  RandomPacketField<D> out;
  auto& ws = out.packets;
  ws.points = points;
  ws.point_weights = point_weights.empty() ? std::vector<double>(points.size(), 1.0) : point_weights;
  ws.scale = R;
  ws.description = "random packet field, seed " + std::to_string(seed);
  std::mt19937_64 rng(seed);
  const double half = 1.0 / std::sqrt(R);
  const int nsub = static_cast<int>(std::ceil(2.0 * std::sqrt(R) / std::numbers::pi)) + 1;
  const double h = 2.0 * half / nsub;
  for (std::size_t t = 0; t < W.size(); ++t) {
    const auto& tube = W[t];
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    auto xc = center_from_normal<D>(tube.direction);
    FrequencySet<D> gt;
    std::array<int, D - 1> k{};
    while (true) {
      Point<D - 1> xi;
      double amp = 1.0;
      for (int i = 0; i < D - 1; ++i) {
        double u = -1.0 + (2.0 * k[i] + 1.0) / nsub;
        xi[i] = xc[i] + u * half;
        amp *= bump(u);
      }
      double s = 0.0;
      for (int i = 0; i < D - 1; ++i) s += xi[i] * xi[i];
      if (s <= 1.0 && amp > 0.0) {
        double ph = phase - tube.axis_point[D - 1] * s;
        for (int i = 0; i < D - 1; ++i) ph -= tube.axis_point[i] * xi[i];
        gt.add(xi, std::pow(h, D - 1), amp * cplx(std::cos(ph), std::sin(ph)), tube.cap_index);
      }
      int j = D - 2;
      while (j >= 0 && ++k[j] == nsub) k[j--] = 0;
      if (j < 0) break;
    }
    if (gt.size() == 0) fail(ErrorKind::Domain, "tube direction has no frequency support in the unit ball");
    Packet<D> p;
    p.tube = tube;
    p.tube_id = static_cast<int>(t);
    std::vector<double> wsub;
    if (support_dilation > 0.0) {
      std::vector<Point<D>> sub;
      for (std::size_t i = 0; i < points.size(); ++i)
        if (tube.contains(points[i], support_dilation)) {
          p.idx.push_back(static_cast<std::uint32_t>(i));
          sub.push_back(points[i]);
          wsub.push_back(ws.point_weights[i]);
        }
      if (sub.empty()) fail(ErrorKind::Domain, "packet support misses the sample points");
      p.vals = extend_values<D>(gt, sub);
    } else {
      p.vals = extend_values<D>(gt, points);
      wsub = ws.point_weights;
    }
    double nrm = std::sqrt(l2_squared<D>(p.vals, wsub));
    if (!(nrm > 0.0)) fail(ErrorKind::Domain, "packet vanishes on the sample points");
    for (auto& v : p.vals) v /= nrm;
    for (auto& v : gt.values) v /= nrm;
    for (std::size_t q = 0; q < gt.size(); ++q) out.g.add(gt.nodes[q], gt.weights[q], gt.values[q], gt.cap_of[q]);
    ws.packets.push_back(std::move(p));
  }
  out.field.points = points;
  out.field.point_weights = ws.point_weights;
  out.field.scale = R;
  out.field.values = ws.packet_sum();
  ws.parent = out.field;
  ws.residual = out.field;
  std::fill(ws.residual.values.begin(), ws.residual.values.end(), cplx(0.0, 0.0));
  return out;
}

}  // namespace dlab
