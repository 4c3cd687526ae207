#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "config.hpp"
#include "experiments.hpp"

namespace dlab {

inline constexpr const char* artifact_version = "1.0.0";

template <int D>
ExperimentReport run_dim(const ExperimentConfig& c) {
  switch (c.command) {
    case Command::caps:
      if constexpr (D >= 2) return cap_report<D>(c.R_list.front());
      break;
    case Command::netcheck:
      if constexpr (D >= 2) return net_check<D>(c.r, c.m, 1000, c.trials, c.seed);
      break;
    case Command::example:
      if constexpr (D >= 2 && D <= 3) {
        auto ex = build_sharp_example<D>(c.m, c.alpha, c.R_list.front(), c.c, c.budget, c.beta);
        auto rep = example_report<D>(ex, c.p);
        rep.add("phase_deviation", phase_deviation<D>(ex));
        return rep;
      }
      break;
    case Command::sweep:
      if constexpr (D >= 2 && D <= 3) return sharp_sweep<D>(c.m, c.alpha, c.R_list, c.p, c.c, c.budget, c.beta);
      break;
    case Command::decouple:
      if constexpr (D >= 2 && D <= 3) return decouple_sweep<D>(c.R_list, {c.p}, c.trials, c.seed, c.tubes);
      break;
    case Command::distset:
      if constexpr (D >= 2 && D <= 3) {
        auto pair = separated_cantor_pair<D>(c.alpha, c.depth, c.seed);
        ClassifyParams pr;
        pr.alpha = c.alpha;
        pr.beta = c.beta;
        pr.epsilon = c.epsilon;
        pr.eta = c.eta;
        pr.C0 = c.C0;
        pr.R0 = c.R0;
        pr.m = c.m;
        auto sp = classify_tubes<D>(pair.mu1, pair.mu2, c.j, pr);
        auto rep = split_report<D>(sp, pair, c.pins);
        rep.merge(good_spherical_l2<D>(pair.mu1, pair.mu2, sp, sp.R_j, min_sphere_nodes<D>(sp.R_j)), "spherical_");
        return rep;
      }
      break;
    case Command::energy:
      if constexpr (D <= 3) return energy_report<D>(c.alpha, c.depth, c.exponents, c.seed);
      break;
    default:
      break;
  }
  fail(ErrorKind::Validation, std::string("command ") + to_string(c.command) + " does not support d = " +
                                  std::to_string(D));
}

// Dispatches the configured experiment. No files are written.
inline ExperimentReport run_experiment(const ExperimentConfig& c) {
  validate(c);
  if (c.command == Command::none) fail(ErrorKind::Validation, "no command given");
  if (c.command == Command::threshold) {
    ExperimentReport rep;
    rep.add("falconer_threshold", falconer_threshold(c.d));
    if (c.alpha > 0.0 && c.alpha <= c.d) rep.add("gamma_exponent", gamma_exponent(c.d, c.alpha));
    return rep;
  }
  switch (c.d) {
    case 1: return run_dim<1>(c);
    case 2: return run_dim<2>(c);
    case 3: return run_dim<3>(c);
    case 4: return run_dim<4>(c);
    default: fail(ErrorKind::Validation, "unsupported dimension");
  }
}

// name,value rows with 17 significant digits and LF line endings.
inline std::string to_csv(const ExperimentReport& rep) {
  std::string out = "name,value\n";
  for (const auto& [n, v] : rep.metrics) out += n + "," + format_real(v) + "\n";
  return out;
}

inline std::string metadata_json(const ExperimentConfig& c, const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["artifact_version"] = artifact_version;
  j["command"] = to_string(c.command);
  j["seed"] = c.seed;
  j["config_text"] = to_text(c);
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rep.metadata) extra[k] = v;
  j["metadata"] = extra;
  return j.dump(2) + "\n";
}

inline std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

inline void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp);
    f << text;
    f.flush();
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("cannot write " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 other errors.
inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::InvalidScale:
    case ErrorKind::InvalidDimension:
    case ErrorKind::InvalidCase:
    case ErrorKind::OutOfRange:
    case ErrorKind::Domain:
    case ErrorKind::EmptyInput:
      return 2;
    default:
      return 3;
  }
}

struct RunOutcome {
  int exit_code = 0;
  std::string message;
  ExperimentReport report;
};

// Runs the experiment and writes the CSV and its JSON sidecar. On failure
// no output file is left behind.
inline RunOutcome run_and_write(const ExperimentConfig& c, const std::string& csv_path) {
  RunOutcome out;
  const std::string json_path = sidecar_path(csv_path);
  try {
    out.report = run_experiment(c);
    write_atomic(csv_path, to_csv(out.report));
    write_atomic(json_path, metadata_json(c, out.report));
  } catch (const Error& e) {
    out.exit_code = exit_code_for(e.kind());
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.message = e.what();
  }
  if (out.exit_code != 0) {
    std::error_code ec;
    for (const auto& p : {csv_path, json_path, csv_path + ".tmp", json_path + ".tmp"}) std::filesystem::remove(p, ec);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace dlab
