// Builds the sharp example in the plane, reports its decoupling ratio, then
// runs a threshold experiment from config text and prints it as CSV.

#include <cstdio>

#include "decouple_lab/cli.hpp"
#include "decouple_lab/experiments.hpp"

int main() {
  using namespace dlab;

  auto ex = build_sharp_example<2>(2, 1.0, 1024.0, 1e-3);
  auto rep = example_report<2>(ex, 4.0);
  std::printf("kappa %.4f, |Omega| %.3g, Lambda cells %ld\n", ex.kappa, ex.omega_mass(), ex.lambda_count);
  std::printf("ratio %.4g, predicted R exponent %.4g, M %g\n", rep.get("ratio"), rep.get("ratio_exponent_predicted"),
              rep.get("M"));

  auto cfg = parse_config("command = threshold\nd = 3\nalpha = 1.6\n");
  std::fputs(to_csv(run_experiment(cfg)).c_str(), stdout);
}
