#pragma once

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "owqc/config_search.hpp"
#include "owqc/gaussian_oracle.hpp"

namespace owqc {

using json = nlohmann::ordered_json;

inline Mat matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw Error(ErrorCode::ParseError, std::string(what) + " must be a non-empty array of arrays");
  const auto rows = static_cast<Eigen::Index>(j.size()), cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorCode::ParseError, std::string(what) + " rows have unequal length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw Error(ErrorCode::ParseError, std::string(what) + " entries must be numbers");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

inline Vec vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::ParseError, std::string(what) + " entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline std::vector<int> indices_from_json(const json& j, const char* what) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an array");
  std::vector<int> v;
  for (const auto& x : j) {
    if (!x.is_number_integer()) throw Error(ErrorCode::ParseError, std::string(what) + " entries must be integers");
    v.push_back(x.get<int>());
  }
  return v;
}

inline json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline double db_to_r(double db) { return db * std::log(10.0) / 20.0; }

struct Config {
  ClusterModel model;
  NodePartition partition;
  MeasurementAngles angles;
  double squeezing_r = 0.0;
  Mat input_covariance;
  std::string mode = "covariance_exact";
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

inline json parse_json_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

inline Config config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  if (!j.contains("adjacency")) throw Error(ErrorCode::ParseError, "config needs \"adjacency\"");
  if (!j.contains("partition")) throw Error(ErrorCode::ParseError, "config needs \"partition\"");
  std::optional<Mat> o;
  if (j.contains("orthogonal_freedom") && !j["orthogonal_freedom"].is_null())
    o = matrix_from_json(j["orthogonal_freedom"], "orthogonal_freedom");
  Config c{build_cluster(matrix_from_json(j["adjacency"], "adjacency"), o), {}, {}, 0.0, {}};
  const json& p = j["partition"];
  c.partition.input_mixed = indices_from_json(p.value("input_mixed", json()), "input_mixed");
  c.partition.outputs = indices_from_json(p.value("outputs", json()), "outputs");
  c.partition.measured_only = indices_from_json(p.value("measured_only", json()), "measured_only");
  c.partition.validate(c.model.n());

  const auto m = static_cast<Eigen::Index>(c.partition.m()), l = static_cast<Eigen::Index>(c.partition.l());
  const json ang = j.value("angles", json::object());
  c.angles.theta_sum = ang.contains("sum") ? vector_from_json(ang["sum"], "angles.sum") : Vec::Zero(m);
  c.angles.theta_diff = ang.contains("diff") ? vector_from_json(ang["diff"], "angles.diff")
                                             : Vec(Vec::Constant(m, -kPi / 2));
  c.angles.theta_cluster = ang.contains("cluster") ? vector_from_json(ang["cluster"], "angles.cluster") : Vec::Zero(l);
  c.angles.local_oscillator_amplitude = ang.value("local_oscillator_amplitude", 1.0);
  c.squeezing_r = db_to_r(j.value("squeezing_db", 0.0));
  c.input_covariance = j.contains("input_covariance") ? matrix_from_json(j["input_covariance"], "input_covariance")
                                                      : Mat(0.25 * Mat::Identity(2 * m, 2 * m));
  c.mode = j.value("mode", std::string("covariance_exact"));
  c.samples = j.value("samples", std::size_t{100000});
  c.seed = j.value("seed", std::uint64_t{1});
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(parse_json_text(ss.str(), "config"));
}

inline json to_json(const CaseSolution& sol, const ClusterModel& model) {
  json j;
  j["case"] = case_tag_name(sol.case_tag);
  j["u_tilde"] = to_json(sol.u_tilde);
  j["error_on_ys"] = to_json(effective_error_on_ys(sol, model));
  j["error_on_yr"] = to_json(sol.e_on_yr);
  j["symplectic_defect"] = sol.symplectic_defect();
  json inter = json::object();
  for (const auto& [k, v] : sol.intermediates) inter[k] = to_json(v);
  j["intermediates"] = inter;
  return j;
}

inline json to_json(const EulerFactors& f) { return {{"phi1", f.phi1}, {"r", f.r}, {"phi2", f.phi2}}; }

inline json to_json(const OracleOutput& o) {
  json j;
  j["mode"] = o.mode == OracleMode::MonteCarlo ? "monte_carlo" : "covariance_exact";
  j["mean"] = to_json(o.mean);
  j["covariance"] = to_json(o.covariance);
  if (o.mode == OracleMode::MonteCarlo) {
    j["samples"] = o.samples;
    j["seed"] = o.seed;
    j["mean_stderr"] = to_json(o.mean_stderr);
    j["covariance_stderr"] = to_json(o.covariance_stderr);
  }
  j["feedforward_gain"] = to_json(o.feedforward_gain);
  return j;
}

inline json to_json(const DefectReport& r) {
  return {{"defect", r.defect},
          {"relative_defect", r.relative_defect},
          {"max_sigma_ratio", r.max_sigma_ratio},
          {"tolerance", r.tolerance},
          {"pass", r.pass},
          {"predicted", to_json(r.predicted)},
          {"simulated", to_json(r.simulated)}};
}

inline json to_json(const ConfigurationClass& c) {
  json j;
  j["representative"] = to_json(c.representative);
  j["members"] = c.members;
  j["matched_template"] = c.matched_template ? json(*c.matched_template) : json(nullptr);
  j["template_residual_u"] = c.matched_template ? json(c.match.u_residual) : json(nullptr);
  j["template_residual_e"] = c.matched_template ? json(c.match.e_residual) : json(nullptr);
  j["measured_nodes_swapped"] = c.match.swapped;
  j["universality_score"] = c.universality_score;
  j["normal_form_certified"] = c.certified;
  return j;
}

inline json to_json(const FourNodeSearchReport& r) {
  json j;
  j["settings"] = {{"starts", r.settings.starts},
                   {"budget", r.settings.budget},
                   {"tolerance", r.settings.tolerance},
                   {"seed", r.settings.seed},
                   {"targets", r.target_count}};
  j["universal_class_count"] = r.universal_classes.size();
  j["reachable_class_count"] = r.reachable_classes.size();
  json u = json::array(), a = json::array(), g = json::array();
  for (const auto& c : r.universal_classes) u.push_back(to_json(c));
  for (const auto& c : r.reachable_classes) a.push_back(to_json(c));
  for (const auto& s : r.graphs)
    g.push_back({{"index", s.mask}, {"score", s.score}, {"reachable", s.reachable},
                 {"certified", s.certificate.certified}, {"universal", s.universal}});
  j["classes"] = u;
  j["reachable_classes"] = a;
  j["graphs"] = g;
  return j;
}

}  // namespace owqc
