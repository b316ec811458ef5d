#include <CLI11.hpp>

#include "owqc/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"One-way quantum computation on continuous-variable cluster states"};
  app.require_subcommand(1);
  owqc::CommandRequest req;
  std::map<std::string, std::string> flags;
  const std::vector<std::pair<std::string, std::string>> names{
      {"analyze", "Analytic transformation and error matrix for a configuration"},
      {"search4", "Exhaustive single-mode configuration search"},
      {"verify", "Compare the analytic solution with the Gaussian oracle"},
      {"oracle", "Raw Gaussian simulation statistics"},
      {"decompose", "Euler factors and four-node angles of a 2x2 matrix"}};
  for (const auto& [name, help] : names) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", req.config_path, "Configuration JSON");
    sub->add_option("--output", req.output_path, "Report path (stdout when omitted)");
    for (const char* opt : {"seed", "samples", "mode", "nodes", "weights", "case", "variant", "matrix"})
      sub->add_option(std::string("--") + opt, flags[opt]);
    sub->callback([&req, name = name] { req.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  req.options = flags;
  return owqc::run_command(req);
}
