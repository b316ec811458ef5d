#include "owqc/cli.hpp"

#include <iostream>

namespace owqc {

namespace detail {

inline std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, std::string(what) + " must be a non-negative integer");
  }
}

inline std::vector<double> parse_weights(const std::string& s) {
  std::vector<double> w;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      w.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "weights must be a comma-separated list of numbers");
    }
  }
  if (w.empty()) throw Error(ErrorCode::ParseError, "empty weight list");
  return w;
}

inline Variant parse_variant(const std::string& s) {
  if (s == "upper") return Variant::Upper;
  if (s == "lower") return Variant::Lower;
  throw Error(ErrorCode::ParseError, "variant must be upper or lower");
}

inline Config require_config(const CommandRequest& req) {
  if (req.config_path.empty()) throw Error(ErrorCode::ParseError, req.command + " needs --config");
  return load_config(req.config_path);
}

inline CaseSolution analyze(const Config& c, const CommandRequest& req) {
  const std::string want = req.option("case", "auto");
  const Layout layout = c.partition.layout();
  if (want != "auto") {
    const std::map<std::string, Layout> names{{"1", Layout::Case1}, {"2", Layout::Case2}, {"3", Layout::Case3}};
    auto it = names.find(want);
    if (it == names.end()) throw Error(ErrorCode::ParseError, "case must be auto, 1, 2 or 3");
    if (it->second != layout) throw Error(ErrorCode::LayoutMismatch, "partition does not have the requested case layout");
  }
  return solve(c.model, c.partition, c.angles, parse_variant(req.option("variant", "upper")));
}

inline SchemeProgram program_of(const Config& c) {
  return SchemeProgram{c.model, c.partition, c.angles, Vec(), c.input_covariance, c.squeezing_r};
}

inline OracleOutput run_oracle(const Config& c, const CommandRequest& req) {
  const std::string mode = req.option("mode", c.mode);
  const SchemeProgram prog = program_of(c);
  if (mode == "covariance_exact") return simulate_exact(prog);
  if (mode == "monte_carlo")
    return simulate_monte_carlo(prog, parse_u64(req.option("samples", std::to_string(c.samples)), "samples"),
                                parse_u64(req.option("seed", std::to_string(c.seed)), "seed"));
  throw Error(ErrorCode::ParseError, "mode must be monte_carlo or covariance_exact");
}

}  // namespace detail

CommandResult execute(const CommandRequest& req) {
  CommandResult res;
  json& out = res.report;
  out["command"] = req.command;
  if (req.command == "analyze") {
    const Config c = detail::require_config(req);
    out["layout"] = c.partition.layout() == Layout::Case1 ? 1 : c.partition.layout() == Layout::Case2 ? 2 : 3;
    out["solution"] = to_json(detail::analyze(c, req), c.model);
  } else if (req.command == "search4") {
    SearchSettings s;
    s.seed = detail::parse_u64(req.option("seed", "2024"), "seed");
    const int n = static_cast<int>(detail::parse_u64(req.option("nodes", "4"), "nodes"));
    out["search"] = to_json(search_configurations(n, detail::parse_weights(req.option("weights", "0,1")), s));
  } else if (req.command == "verify") {
    const Config c = detail::require_config(req);
    const CaseSolution sol = detail::analyze(c, req);
    const OracleOutput sim = detail::run_oracle(c, req);
    const double tol = sim.mode == OracleMode::CovarianceExact ? 1e-9 : 1e-3;
    const DefectReport rep = compare_with_analytic(sol, c.model, detail::program_of(c), sim, tol);
    out["case"] = case_tag_name(sol.case_tag);
    out["oracle_mode"] = sim.mode == OracleMode::MonteCarlo ? "monte_carlo" : "covariance_exact";
    out["report"] = to_json(rep);
    if (!rep.pass) res.exit_code = 3;
  } else if (req.command == "oracle") {
    const Config c = detail::require_config(req);
    out["oracle"] = to_json(detail::run_oracle(c, req));
  } else if (req.command == "decompose") {
    if (req.option("matrix", "").empty()) throw Error(ErrorCode::ParseError, "decompose needs --matrix");
    const Mat m = matrix_from_json(parse_json_text(req.option("matrix", ""), "matrix"), "matrix");
    const EulerFactors f = euler_decompose(m);
    out["euler"] = to_json(f);
    out["reconstruction_residual"] = max_abs(f.reconstruct() - m);
    json four = json::object();
    for (int j = 1; j <= 5; ++j) {
      auto a = four_node_invert(j, m);
      four[std::to_string(j)] = a ? json{{"theta3", a->theta3}, {"theta4", a->theta4}, {"theta_plus", a->theta_plus},
                                         {"theta_minus", a->theta_minus}}
                                  : json(nullptr);
    }
    out["four_node_angles"] = four;
  } else {
    throw Error(ErrorCode::ParseError, "unknown command '" + req.command + "'");
  }
  return res;
}

void write_report(const json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::ParseError, "cannot write " + path);
  f << text;
}

int run_command(const CommandRequest& req) {
  try {
    CommandResult res = execute(req);
    write_report(res.report, req.output_path);
    return res.exit_code;
  } catch (const Error& e) {
    const json err{{"error", error_name(e.code())}, {"code", static_cast<int>(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    const json err{{"error", "Internal"}, {"code", 1}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}

}  // namespace owqc
