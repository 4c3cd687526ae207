#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace dlab {

// Named scalar metrics in insertion order plus free-form metadata.
struct ExperimentReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::map<std::string, std::string> metadata;

  void add(const std::string& name, double value) {
    if (!std::isfinite(value)) fail(ErrorKind::Domain, "metric " + name + " is not finite");
    if (has(name)) fail(ErrorKind::Domain, "duplicate metric " + name);
    metrics.emplace_back(name, value);
  }

  bool has(const std::string& name) const {
    for (const auto& [n, v] : metrics)
      if (n == name) return true;
    return false;
  }

  double get(const std::string& name) const {
    for (const auto& [n, v] : metrics)
      if (n == name) return v;
    fail(ErrorKind::Domain, "no metric " + name);
  }

  void merge(const ExperimentReport& other, const std::string& prefix = "") {
    for (const auto& [n, v] : other.metrics) add(prefix + n, v);
  }
};

}  // namespace dlab
