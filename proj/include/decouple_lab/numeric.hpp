#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace dlab {

using cplx = std::complex<double>;

template <int D>
using Point = std::array<double, D>;

template <int D>
inline double dot(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <int D>
inline double norm2(const Point<D>& a) { return dot<D>(a, a); }

template <int D>
inline double norm(const Point<D>& a) { return std::sqrt(norm2<D>(a)); }

template <std::size_t N>
inline std::array<double, N> operator+(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t N>
inline std::array<double, N> operator-(const std::array<double, N>& a, const std::array<double, N>& b) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t N>
inline std::array<double, N> operator*(double s, const std::array<double, N>& a) {
  std::array<double, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = s * a[i];
  return r;
}

template <int D>
inline double dist(const Point<D>& a, const Point<D>& b) { return norm<D>(a - b); }

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(cplx z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_, im_;
};

template <typename It>
inline double compensated_total(It first, It last) {
  CompensatedSum s;
  for (; first != last; ++first) s.add(*first);
  return s.value();
}

// Standard bump exp(-1/(1-u^2)) on |u| < 1.
inline double bump(double u) {
  double q = 1.0 - u * u;
  if (q <= 0.0) return 0.0;
  return std::exp(-1.0 / q);
}

// 8-point Gauss-Legendre nodes on [-1,1].
inline const std::array<std::pair<double, double>, 8>& gauss_legendre8() {
  static const std::array<std::pair<double, double>, 8> t = {{
      {-0.9602898564975363, 0.1012285362903763},
      {-0.7966664774136267, 0.2223810344533745},
      {-0.5255324099163290, 0.3137066458778873},
      {-0.1834346424956498, 0.3626837833783620},
      {0.1834346424956498, 0.3626837833783620},
      {0.5255324099163290, 0.3137066458778873},
      {0.7966664774136267, 0.2223810344533745},
      {0.9602898564975363, 0.1012285362903763},
  }};
  return t;
}

// Integral of bump over [-1, t], composite Gauss-Legendre with 64 panels.
inline double bump_cdf(double t) {
  if (t <= -1.0) return 0.0;
  t = std::min(t, 1.0);
  const int panels = 64;
  double h = (t + 1.0) / panels;
  CompensatedSum s;
  for (int k = 0; k < panels; ++k) {
    double a = -1.0 + k * h;
    for (auto [x, w] : gauss_legendre8()) s.add(0.5 * h * w * bump(a + 0.5 * h * (x + 1.0)));
  }
  return s.value();
}

inline double bump_integral() {
  static const double v = bump_cdf(1.0);
  return v;
}

// Thread count: DECOUPLE_LAB_THREADS, 0 or unset means hardware concurrency.
inline unsigned thread_count() {
  unsigned n = 0;
  if (const char* e = std::getenv("DECOUPLE_LAB_THREADS")) n = static_cast<unsigned>(std::strtoul(e, nullptr, 10));
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

// Runs fn(i) for i in [0, n). Each index is independent, so the output does
// not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned nt = std::min<std::size_t>(thread_count(), n);
  if (nt <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// Platform-independent uniform double in [0,1) from raw engine output.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

// Standard normal via Box-Muller on uniform01.
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g), u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double unit_ball_volume(int k) {
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

// Distance from t to the nearest multiple of 2*pi.
inline double distance_to_2pi_z(double t) {
  const double tau = 2.0 * std::numbers::pi;
  double r = std::remainder(t, tau);
  return std::abs(r);
}

inline bool is_power_of_two_scale(double r) {
  int e;
  double m = std::frexp(r, &e);
  return m == 0.5;
}

// Dyadic values 2^-k inside [lo, hi], ascending.
inline std::vector<double> dyadic_between(double lo, double hi) {
  std::vector<double> out;
  if (!(lo > 0) || hi < lo) return out;
  int k = static_cast<int>(std::floor(std::log2(hi)));
  for (double s = std::ldexp(1.0, k); s >= lo; s *= 0.5)
    if (s <= hi) out.push_back(s);
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace dlab
