#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "decouple_lab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on Fourier extension, decoupling and distance sets"};
  std::string command, config_path, out_path;
  app.add_option("command", command, "caps, netcheck, example, sweep, decouple, distset, energy or threshold")
      ->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_path, "CSV output path; the JSON sidecar takes the same stem");
  CLI11_PARSE(app, argc, argv);

  dlab::ExperimentConfig cfg;
  try {
    cfg = dlab::parse_config(dlab::read_file(config_path));
    dlab::Command cmd;
    if (!dlab::parse_command(command, cmd)) throw dlab::Error(dlab::ErrorKind::Validation, "unknown command " + command);
    if (cfg.command != dlab::Command::none && cfg.command != cmd)
      throw dlab::Error(dlab::ErrorKind::Validation, "command differs from the config file");
    cfg.command = cmd;
    dlab::validate(cfg);
  } catch (const dlab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return dlab::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (out_path.empty()) out_path = cfg.output_path.empty() ? command + ".csv" : cfg.output_path;
  auto res = dlab::run_and_write(cfg, out_path);
  if (res.exit_code != 0) {
    std::fprintf(stderr, "error: %s\n", res.message.c_str());
    return res.exit_code;
  }
  std::printf("wrote %s (%zu metrics)\n", out_path.c_str(), res.report.metrics.size());
  return 0;
}
