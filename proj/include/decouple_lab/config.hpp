#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace dlab {

enum class Command { none, caps, netcheck, example, sweep, decouple, distset, energy, threshold };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::none: return "none";
    case Command::caps: return "caps";
    case Command::netcheck: return "netcheck";
    case Command::example: return "example";
    case Command::sweep: return "sweep";
    case Command::decouple: return "decouple";
    case Command::distset: return "distset";
    case Command::energy: return "energy";
    case Command::threshold: return "threshold";
  }
  return "none";
}

inline bool parse_command(const std::string& s, Command& out) {
  for (Command c : {Command::caps, Command::netcheck, Command::example, Command::sweep, Command::decouple,
                    Command::distset, Command::energy, Command::threshold})
    if (s == to_string(c)) {
      out = c;
      return true;
    }
  return false;
}

struct ExperimentConfig {
  Command command = Command::none;
  int d = 2;
  int m = 2;
  double alpha = 1.0;
  double p = 4.0;
  double c = 0.001;
  double beta = 0.01;
  double epsilon = 0.1;
  double eta = 0.05;
  double C0 = 8.0;
  std::vector<double> R_list{256.0, 512.0, 1024.0};
  std::uint64_t seed = 0;
  long budget = 1000000;
  std::string output_path;
  // command-specific extras
  int depth = 6;
  double r = 0.125;
  int trials = 20;
  int tubes = 16;
  double R0 = 256.0;
  int j = 0;
  int pins = 32;
  std::vector<double> exponents{0.5};

  bool operator==(const ExperimentConfig&) const = default;
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
  return s;
}

// Canonical key=value form; parse_config(to_text(c)) == c.
inline std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  if (c.command != Command::none) o << "command = " << to_string(c.command) << "\n";
  o << "d = " << c.d << "\n";
  o << "m = " << c.m << "\n";
  o << "alpha = " << format_real(c.alpha) << "\n";
  o << "p = " << format_real(c.p) << "\n";
  o << "c = " << format_real(c.c) << "\n";
  o << "beta = " << format_real(c.beta) << "\n";
  o << "epsilon = " << format_real(c.epsilon) << "\n";
  o << "eta = " << format_real(c.eta) << "\n";
  o << "C0 = " << format_real(c.C0) << "\n";
  o << "R_list = " << format_list(c.R_list) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "budget = " << c.budget << "\n";
  if (!c.output_path.empty()) o << "output_path = " << c.output_path << "\n";
  o << "depth = " << c.depth << "\n";
  o << "r = " << format_real(c.r) << "\n";
  o << "trials = " << c.trials << "\n";
  o << "tubes = " << c.tubes << "\n";
  o << "R0 = " << format_real(c.R0) << "\n";
  o << "j = " << c.j << "\n";
  o << "pins = " << c.pins << "\n";
  o << "exponents = " << format_list(c.exponents) << "\n";
  return o.str();
}

namespace detail {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

inline double parse_real(const std::string& v, int line) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "not a number: " + v);
  }
  if (used != v.size() || !std::isfinite(x)) throw ParseError(line, "not a finite number: " + v);
  return x;
}

inline long long parse_integer(const std::string& v, int line) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ParseError(line, "not an integer: " + v);
  }
  if (used != v.size()) throw ParseError(line, "not an integer: " + v);
  return x;
}

inline std::vector<double> parse_reals(const std::string& v, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), line));
  if (out.empty()) throw ParseError(line, "empty list");
  return out;
}

inline int parse_int(const std::string& v, int line) {
  long long x = parse_integer(v, line);
  if (x < -1000000000LL || x > 1000000000LL) throw ParseError(line, "integer out of range: " + v);
  return static_cast<int>(x);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c);

// One key = value pair per line; '#' starts a comment line. Unknown or
// repeated keys are parse errors. The result is validated.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace detail;
  ExperimentConfig c;
  std::vector<std::string> seen;
  std::stringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key");
    if (val.empty()) throw ParseError(line, "missing value for " + key);
    for (const auto& k : seen)
      if (k == key) throw ParseError(line, "duplicate key " + key);
    seen.push_back(key);
    if (key == "command") {
      if (!parse_command(val, c.command)) throw ParseError(line, "unknown command " + val);
    } else if (key == "d") {
      c.d = parse_int(val, line);
    } else if (key == "m") {
      c.m = parse_int(val, line);
    } else if (key == "alpha") {
      c.alpha = parse_real(val, line);
    } else if (key == "p") {
      c.p = parse_real(val, line);
    } else if (key == "c") {
      c.c = parse_real(val, line);
    } else if (key == "beta") {
      c.beta = parse_real(val, line);
    } else if (key == "epsilon") {
      c.epsilon = parse_real(val, line);
    } else if (key == "eta") {
      c.eta = parse_real(val, line);
    } else if (key == "C0") {
      c.C0 = parse_real(val, line);
    } else if (key == "R_list") {
      c.R_list = parse_reals(val, line);
    } else if (key == "seed") {
      long long v = parse_integer(val, line);
      if (v < 0) throw ParseError(line, "seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "budget") {
      c.budget = static_cast<long>(parse_integer(val, line));
    } else if (key == "output_path") {
      c.output_path = val;
    } else if (key == "depth") {
      c.depth = parse_int(val, line);
    } else if (key == "r") {
      c.r = parse_real(val, line);
    } else if (key == "trials") {
      c.trials = parse_int(val, line);
    } else if (key == "tubes") {
      c.tubes = parse_int(val, line);
    } else if (key == "R0") {
      c.R0 = parse_real(val, line);
    } else if (key == "j") {
      c.j = parse_int(val, line);
    } else if (key == "pins") {
      c.pins = parse_int(val, line);
    } else if (key == "exponents") {
      c.exponents = parse_reals(val, line);
    } else {
      throw ParseError(line, "unknown key " + key);
    }
  }
  validate(c);
  return c;
}

inline void invalid(const std::string& msg) { throw Error(ErrorKind::Validation, msg); }

inline void validate(const ExperimentConfig& c) {
  if (!(c.beta >= 0.0)) invalid("β ≥ 0 violated");
  if (!(c.beta < c.eta)) invalid("β < η violated");
  if (!(c.eta < c.epsilon)) invalid("η < ε violated");
  if (!(c.c > 0.0 && c.c <= 0.01)) invalid("c ∈ (0, 0.01] violated");
  if (!(c.p > 0.0)) invalid("p > 0 violated");
  if (!(c.C0 > 0.0)) invalid("C0 > 0 violated");
  if (!(c.R0 >= 4.0)) invalid("R0 ≥ 4 violated");
  if (c.budget < 1) invalid("budget ≥ 1 violated");
  if (c.depth < 0 || c.depth > 10) invalid("depth ∈ [0, 10] violated");
  if (!(c.r > 0.0 && c.r <= 1.0)) invalid("r ∈ (0, 1] violated");
  if (c.trials < 1 || c.tubes < 1 || c.pins < 1) invalid("trials, tubes, pins ≥ 1 violated");
  if (c.j < 0 || c.j > 20) invalid("j ∈ [0, 20] violated");
  for (double R : c.R_list)
    if (!(R >= 4.0)) invalid("R ≥ 4 violated");
  for (double b : c.exponents)
    if (!(b > 0.0)) invalid("energy exponents > 0 violated");
  auto need_d = [&](int lo, int hi) {
    if (c.d < lo || c.d > hi)
      invalid("d ∈ [" + std::to_string(lo) + ", " + std::to_string(hi) + "] violated for " + to_string(c.command));
  };
  switch (c.command) {
    case Command::none:
      break;
    case Command::caps:
      need_d(2, 4);
      break;
    case Command::netcheck:
      need_d(2, 4);
      if (c.m < 1 || c.m > c.d) invalid("1 ≤ m ≤ d violated");
      break;
    case Command::example:
    case Command::sweep: {
      need_d(2, 3);
      if (c.m < 2 || c.m > c.d) invalid("2 ≤ m ≤ d violated");
      double lo = c.d - 0.5 * (c.m + 1), hi = c.d;
      if (!(c.alpha >= lo && c.alpha <= hi)) invalid("κ range violated: need d − (m+1)/2 ≤ α ≤ d");
      break;
    }
    case Command::decouple:
      need_d(2, 3);
      if (c.p < 2.0) invalid("p ≥ 2 violated");
      break;
    case Command::distset:
      need_d(2, 3);
      if (c.m < 1 || c.m > c.d) invalid("1 ≤ m ≤ d violated");
      if (!(c.alpha > c.m - 1 && c.alpha <= c.m)) invalid("m−1 < α ≤ m violated");
      break;
    case Command::energy:
      need_d(1, 3);
      if (!(c.alpha > 0.0 && c.alpha <= c.d)) invalid("0 < α ≤ d violated");
      break;
    case Command::threshold:
      if (c.d < 3) invalid("d ≥ 3 violated for threshold");
      break;
  }
}

}  // namespace dlab
