#pragma once

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "owqc/owqc_engine.hpp"

namespace owqc {

// ---- graph enumeration -----------------------------------------------------

inline std::vector<std::pair<int, int>> edge_list(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return e;
}

// Nodes with equal group labels may be permuted; others stay pinned.
inline std::vector<std::vector<int>> role_permutations(const std::vector<int>& groups) {
  std::vector<int> perm(groups.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::vector<std::vector<int>> out;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) ok = groups[i] == groups[static_cast<std::size_t>(perm[i])];
    if (ok) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline Mat permute_graph(const Mat& a, const std::vector<int>& perm) {
  Mat b(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) b(perm[i], perm[j]) = a(i, j);
  return b;
}

inline std::vector<double> graph_key(const Mat& a) {
  std::vector<double> k;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) k.push_back(a(i, j));
  return k;
}

inline std::vector<double> canonical_key(const Mat& a, const std::vector<std::vector<int>>& perms) {
  std::vector<double> best;
  for (const auto& p : perms) {
    auto k = graph_key(permute_graph(a, p));
    if (best.empty() || k < best) best = k;
  }
  return best;
}

// All symmetric zero-diagonal n x n matrices over `weights`, in lexicographic
// edge order; deduplicated up to role-preserving relabeling when groups are given.
inline std::vector<Mat> enumerate_graphs(int n, const std::vector<double>& weights,
                                         const std::optional<std::vector<int>>& role_groups = std::nullopt) {
  if (n < 1 || n > 8) throw Error(ErrorCode::TooLarge, "node count must be in 1..8");
  if (weights.empty()) throw Error(ErrorCode::InvalidWeight, "empty weight set");
  const auto edges = edge_list(n);
  const double total = std::pow(static_cast<double>(weights.size()), static_cast<double>(edges.size()));
  if (total > 5e6) throw Error(ErrorCode::TooLarge, "too many labeled graphs");
  std::vector<std::vector<int>> perms;
  if (role_groups) {
    if (static_cast<int>(role_groups->size()) != n) throw Error(ErrorCode::DimensionMismatch, "role group size");
    perms = role_permutations(*role_groups);
  }
  std::vector<Mat> out;
  std::set<std::vector<double>> seen;
  std::vector<std::size_t> digit(edges.size(), 0);
  for (std::size_t count = 0; count < static_cast<std::size_t>(total); ++count) {
    Mat a = Mat::Zero(n, n);
    for (std::size_t e = 0; e < edges.size(); ++e)
      a(edges[e].first, edges[e].second) = a(edges[e].second, edges[e].first) = weights[digit[e]];
    if (!role_groups || seen.insert(canonical_key(a, perms)).second) out.push_back(a);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (++digit[e] < weights.size()) break;
      digit[e] = 0;
    }
  }
  return out;
}

// ---- reachability ----------------------------------------------------------

// Maps a parameter vector to a transformation; may throw owqc::Error on singular points.
struct Family {
  int dims = 0;
  std::function<Mat(const Vec&)> eval;
  // Optional closed-form inversion tried before numerical search.
  std::function<std::optional<Vec>(const Mat&)> analytic;
};

struct ReachabilityReport {
  Mat target;
  double best_residual = std::numeric_limits<double>::infinity();
  Vec best_params;
  std::size_t attempts = 0;     // starts used
  std::size_t evaluations = 0;  // family evaluations used
  bool reached = false;
  bool analytic = false;
  bool budget_exhausted = false;
};

struct SearchSettings {
  int starts = 64;
  std::size_t budget = 10000;
  std::size_t evals_per_start = 600;
  double tolerance = 1e-6;
  std::uint64_t seed = 2024;
};

inline std::vector<Mat> seeded_targets(int count, std::uint64_t seed, double r_max = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(-kPi, kPi), sq(-r_max, r_max);
  std::vector<Mat> t;
  for (int i = 0; i < count; ++i) {
    EulerFactors f;
    f.phi1 = ang(rng);
    f.r = sq(rng);
    f.phi2 = ang(rng);
    t.push_back(f.reconstruct());
  }
  return t;
}

namespace detail {

inline constexpr double kPenalty = 1e3;

struct FamilyResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const Family* family;
  const Mat* target;
  std::size_t* counter;
  std::size_t limit;  // family evaluations allowed; beyond it every point scores the penalty

  int inputs() const { return family->dims; }
  int values() const { return static_cast<int>(target->size()); }

  int operator()(const Vec& x, Vec& fvec) const {
    fvec.resize(target->size());
    if (*counter >= limit) {
      fvec.setConstant(kPenalty);
      return 0;
    }
    ++*counter;
    try {
      const Mat m = family->eval(x);
      if (!m.allFinite()) throw Error(ErrorCode::DegenerateAngles, "non-finite");
      const Mat d = m - *target;
      for (Eigen::Index i = 0; i < d.size(); ++i) fvec(i) = d.data()[i];
    } catch (const Error&) {
      fvec.setConstant(kPenalty);
    }
    return 0;
  }
};

inline double residual_of(const Family& f, const Vec& x, const Mat& target) {
  try {
    const Mat m = f.eval(x);
    return m.allFinite() ? max_abs(m - target) : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

// Multi-start Levenberg-Marquardt from uniform angle starts in (-pi, pi].
inline ReachabilityReport reach_target(const Family& family, const Mat& target, const SearchSettings& s,
                                       std::mt19937_64& rng) {
  ReachabilityReport rep;
  rep.target = target;
  if (family.analytic) {
    if (auto x = family.analytic(target)) {
      const double res = detail::residual_of(family, *x, target);
      ++rep.evaluations;
      if (res < s.tolerance) {
        rep.best_residual = res;
        rep.best_params = *x;
        rep.reached = rep.analytic = true;
        return rep;
      }
    }
  }
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int start = 0; start < s.starts && rep.evaluations + 2 <= s.budget; ++start) {
    Vec x(family.dims);
    for (int i = 0; i < family.dims; ++i) x(i) = ang(rng);
    std::size_t counter = 0;
    const std::size_t limit = std::min(s.evals_per_start, s.budget - rep.evaluations - 1);
    detail::FamilyResidual functor{&family, &target, &counter, limit};
    Eigen::NumericalDiff<detail::FamilyResidual> nd(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::FamilyResidual>> lm(nd);
    lm.parameters.maxfev = static_cast<Eigen::Index>(limit);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-16;
    lm.minimize(x);
    rep.evaluations += counter + 1;
    ++rep.attempts;
    const double res = detail::residual_of(family, x, target);
    if (res < rep.best_residual) {
      rep.best_residual = res;
      rep.best_params = x;
    }
    if (res < s.tolerance) {
      rep.reached = true;
      return rep;
    }
  }
  rep.budget_exhausted = true;
  return rep;
}

struct ScoreResult {
  double score = 0.0;
  std::vector<ReachabilityReport> reports;
};

inline ScoreResult universality_score(const Family& family, const std::vector<Mat>& targets, const SearchSettings& s) {
  ScoreResult out;
  std::mt19937_64 rng(s.seed);
  std::size_t hit = 0;
  for (const Mat& t : targets) {
    out.reports.push_back(reach_target(family, t, s, rng));
    hit += out.reports.back().reached ? 1 : 0;
  }
  out.score = targets.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(targets.size());
  return out;
}

// Infimum residual over independent starts (no early exit).
inline ReachabilityReport infeasibility_probe(const Family& family, const Mat& target, int starts,
                                              std::size_t evals_per_start, std::uint64_t seed) {
  SearchSettings s;
  s.starts = starts;
  s.evals_per_start = evals_per_start;
  s.budget = static_cast<std::size_t>(starts) * (evals_per_start + 2);
  s.tolerance = -1.0;
  std::mt19937_64 rng(seed);
  Family plain{family.dims, family.eval, {}};
  ReachabilityReport r = reach_target(plain, target, s, rng);
  r.reached = r.best_residual < 1e-6;
  r.budget_exhausted = false;
  return r;
}

// ---- families --------------------------------------------------------------

inline MeasurementAngles angles_from(const Vec& sum, const Vec& diff, const Vec& cluster) {
  MeasurementAngles a;
  a.theta_sum = sum;
  a.theta_diff = diff;
  a.theta_cluster = cluster;
  return a;
}

// Two-node teleportation, A12 = -1: parameters (theta_sum, theta_diff).
inline Family two_node_family() {
  Mat a(2, 2);
  a << 0, -1, -1, 0;
  auto model = std::make_shared<ClusterModel>(build_cluster(a));
  return {2, [model](const Vec& x) {
            return solve_case2(*model, NodePartition{{0}, {1}, {}},
                               angles_from(x.segment(0, 1), x.segment(1, 1), Vec(0)))
                .u_tilde;
          }, {}};
}

// Case 3 on a fixed graph; parameters (theta_sum[m], theta_diff[m], theta_cluster[l]).
inline Family case3_family(const Mat& adjacency, const NodePartition& p) {
  auto model = std::make_shared<ClusterModel>(build_cluster(adjacency));
  const auto m = static_cast<Eigen::Index>(p.m()), l = static_cast<Eigen::Index>(p.l());
  return {static_cast<int>(2 * m + l), [model, p, m, l](const Vec& x) {
            return solve_any_variant(*model, p, angles_from(x.segment(0, m), x.segment(m, m), x.segment(2 * m, l)))
                .u_tilde;
          }, {}};
}

inline Mat symmetric_from(const Vec& w, Eigen::Index n) {
  Mat a = Mat::Zero(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) a(i, j) = a(j, i) = w(k++);
  return a;
}

// Case 1 with free weights: parameters (theta_in[m], theta_cluster[l], weights[n(n-1)/2]).
inline Family case1_free_family(int m, int l) {
  const int n = m + l, ne = n * (n - 1) / 2;
  NodePartition p;
  for (int i = 0; i < m; ++i) p.input_mixed.push_back(i);
  p.outputs = p.input_mixed;
  for (int i = m; i < n; ++i) p.measured_only.push_back(i);
  return {m + l + ne, [p, m, l, n, ne](const Vec& x) {
            const ClusterModel model = build_cluster(symmetric_from(x.segment(m + l, ne), n));
            MeasurementAngles a;
            a.theta_sum = x.segment(0, m);
            a.theta_cluster = x.segment(m, l);
            return solve_case1(model, p, a, Variant::Upper).u_tilde;
          }, {}};
}

// Case 2 with free weights: parameters (theta_sum[m], theta_diff[m], weights).
inline Family case2_free_family(int m) {
  const int n = 2 * m, ne = n * (n - 1) / 2;
  NodePartition p;
  for (int i = 0; i < m; ++i) p.input_mixed.push_back(i);
  for (int i = m; i < n; ++i) p.outputs.push_back(i);
  return {2 * m + ne, [p, m, n, ne](const Vec& x) {
            const ClusterModel model = build_cluster(symmetric_from(x.segment(2 * m, ne), n));
            return solve_case2(model, p, angles_from(x.segment(0, m), x.segment(m, m), Vec(0))).u_tilde;
          }, {}};
}

inline Mat fourier_target(Eigen::Index m) { return rotate_of(Vec::Constant(m, kPi / 2)); }

// Closed-form template inversion: tries equivalent Euler forms of the target.
inline std::optional<FourNodeAngles> four_node_invert(int j, const Mat& target) {
  const EulerFactors e = euler_decompose(target);
  const int l = four_node_l(j), p = four_node_p(j);
  // R(a) S(r) R(b) = R(a + pi/2) S(-r) R(b - pi/2) = R(a + pi) S(r) R(b + pi).
  const std::array<EulerFactors, 4> forms{{{e.phi1, e.r, e.phi2},
                                           {e.phi1 + kPi / 2, -e.r, e.phi2 - kPi / 2},
                                           {e.phi1 + kPi, e.r, e.phi2 + kPi},
                                           {e.phi1 - kPi / 2, -e.r, e.phi2 + kPi / 2}}};
  for (const auto& f : forms) {
    try {
      const FourNodeDecomposition d = four_node_angles_for(j, f.phi1 + l * kPi / 2, f.r);
      FourNodeAngles a = d.angles;
      a.theta_minus = kPi / 2;
      a.theta_plus = wrap_angle(d.phi2 - p * kPi / 2 - f.phi2);
      if (max_abs(four_node_transform(j, a).u_tilde - target) < 1e-9) return a;
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

// Template family j: parameters (theta3, theta4, theta_plus, theta_minus).
inline Family four_node_template_family(int j) {
  Family f;
  f.dims = 4;
  f.eval = [j](const Vec& x) { return four_node_transform(j, FourNodeAngles{x(0), x(1), x(2), x(3)}).u_tilde; };
  f.analytic = [j](const Mat& target) -> std::optional<Vec> {
    auto a = four_node_invert(j, target);
    if (!a) return std::nullopt;
    Vec x(4);
    x << a->theta3, a->theta4, a->theta_plus, a->theta_minus;
    return x;
  };
  return f;
}

// ---- four-node search ------------------------------------------------------

// Measured-node factor W at theta_plus = 0, theta_minus = pi/2 for homodyne phases (a, b).
inline Mat four_node_measured_factor(const ClusterModel& model, double a, double b) {
  Vec c(2);
  c << a, b;
  return solve_any_variant(model, four_node_partition(),
                           angles_from(Vec::Constant(1, kPi / 4), Vec::Constant(1, -kPi / 4), c))
      .u_tilde;
}

struct NormalFormCertificate {
  bool certified = false;
  bool swapped = false;  // node 3 carries the first parameter
  std::array<int, 2> reparam{0, 0};  // 0: tan, 1: -tan, 2: cot, 3: -cot
  int left_quarter_turns = 0;
  int right_quarter_turns = 0;
};

// Checks W(a, b) = R(k pi/2) [[t3 t4 - 1, t4], [-t3, -1]] R(k' pi/2) with each t
// one of +-tan, +-cot of a measured phase.
inline NormalFormCertificate normal_form_certificate(const Mat& adjacency, std::uint64_t seed = 7) {
  NormalFormCertificate cert;
  const ClusterModel model = build_cluster(adjacency);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.15, kPi / 2 - 0.15);
  std::vector<std::array<double, 2>> pts;
  std::vector<Mat> ws;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 2> pt{ang(rng) * (k % 2 ? -1 : 1), ang(rng) * (k / 2 ? -1 : 1)};
    try {
      ws.push_back(four_node_measured_factor(model, pt[0], pt[1]));
      pts.push_back(pt);
    } catch (const Error&) {
      return cert;
    }
  }
  auto fn = [](int kind, double th) {
    switch (kind) {
      case 0: return std::tan(th);
      case 1: return -std::tan(th);
      case 2: return 1.0 / std::tan(th);
      default: return -1.0 / std::tan(th);
    }
  };
  for (int sw = 0; sw < 2; ++sw)
    for (int k3 = 0; k3 < 4; ++k3)
      for (int k4 = 0; k4 < 4; ++k4)
        for (int lq = 0; lq < 4; ++lq)
          for (int rq = 0; rq < 4; ++rq) {
            bool ok = true;
            for (std::size_t i = 0; i < pts.size() && ok; ++i) {
              const double t3 = fn(k3, pts[i][sw]), t4 = fn(k4, pts[i][1 - sw]);
              Mat c(2, 2);
              c << t3 * t4 - 1, t4, -t3, -1;
              ok = max_abs(rotate_of(lq * kPi / 2) * c * rotate_of(rq * kPi / 2) - ws[i]) < 1e-9;
            }
            if (ok) return {true, sw == 1, {k3, k4}, lq, rq};
          }
  return cert;
}

struct TemplateMatch {
  int config_id = 0;
  bool swapped = false;
  double u_residual = std::numeric_limits<double>::infinity();
  double e_residual = std::numeric_limits<double>::infinity();
};

// Compares (U, E) of the graph with every template under the two relabelings of
// the measured nodes, at several template angle sets.
inline TemplateMatch match_template(const Mat& adjacency, std::uint64_t seed = 11) {
  const ClusterModel model = build_cluster(adjacency);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.2, 1.3), pm(-1.0, 1.0);
  std::vector<FourNodeAngles> pts;
  for (int k = 0; k < 3; ++k)
    pts.push_back({ang(rng) * (k == 1 ? -1 : 1), ang(rng) * (k == 2 ? -1 : 1), pm(rng), kPi / 2 + 0.5 * pm(rng)});
  TemplateMatch best;
  for (int j = 1; j <= 5; ++j)
    for (int sw = 0; sw < 2; ++sw) {
      double ru = 0.0, re = 0.0;
      try {
        for (const auto& f : pts) {
          const CaseSolution tpl = four_node_transform(j, f);
          FourNodeAngles g = f;
          if (sw) std::swap(g.theta3, g.theta4);
          MeasurementAngles a = four_node_measurement(g);
          const CaseSolution sol = solve_any_variant(model, four_node_partition(), a);
          Mat e = sol.e_on_yr;
          if (sw) e.col(2).swap(e.col(3));
          ru = std::max(ru, max_abs(sol.u_tilde - tpl.u_tilde));
          re = std::max(re, max_abs(e - tpl.e_on_yr));
        }
      } catch (const Error&) {
        continue;
      }
      if (std::max(ru, re) < std::max(best.u_residual, best.e_residual)) best = {j, sw == 1, ru, re};
    }
  if (std::max(best.u_residual, best.e_residual) > 1e-9) best.config_id = 0;
  return best;
}

struct GraphScore {
  int mask = 0;  // enumeration index; the edge bitmask for weights {0, 1}
  Mat adjacency;
  double score = 0.0;
  bool reachable = false;  // score >= 0.99
  NormalFormCertificate certificate;
  bool universal = false;
};

struct ConfigurationClass {
  Mat representative;
  NodePartition partition;
  std::vector<int> members;  // edge masks
  std::optional<int> matched_template;
  TemplateMatch match;
  double universality_score = 0.0;
  bool certified = false;
};

struct FourNodeSearchReport {
  std::vector<GraphScore> graphs;
  std::vector<ConfigurationClass> universal_classes;    // reachability and normal-form certificate
  std::vector<ConfigurationClass> reachable_classes;    // reachability alone
  SearchSettings settings;
  int target_count = 0;
};

inline Mat graph_from_mask(int mask, int n = 4) {
  const auto edges = edge_list(n);
  Mat a = Mat::Zero(n, n);
  for (std::size_t b = 0; b < edges.size(); ++b)
    if (mask >> b & 1) a(edges[b].first, edges[b].second) = a(edges[b].second, edges[b].first) = 1.0;
  return a;
}

// Node 0 input-mixed, node 1 output, the rest measured-only.
inline NodePartition single_mode_partition(int n) {
  NodePartition p{{0}, {1}, {}};
  for (int k = 2; k < n; ++k) p.measured_only.push_back(k);
  return p;
}

inline std::vector<int> single_mode_roles(int n) {
  std::vector<int> g(static_cast<std::size_t>(n), 2);
  g[0] = 0;
  g[1] = 1;
  return g;
}

namespace detail {

inline std::vector<ConfigurationClass> group_classes(const std::vector<GraphScore>& graphs, int n,
                                                     const std::function<bool(const GraphScore&)>& keep) {
  const auto perms = role_permutations(single_mode_roles(n));
  std::map<std::vector<double>, ConfigurationClass> classes;
  std::map<std::vector<double>, int> counts;
  for (const GraphScore& g : graphs) {
    if (!keep(g)) continue;
    const auto key = canonical_key(g.adjacency, perms);
    auto [it, fresh] = classes.try_emplace(key);
    ConfigurationClass& c = it->second;
    if (fresh) {
      c.representative = g.adjacency;
      c.partition = single_mode_partition(n);
      c.certified = g.certificate.certified;
    }
    c.members.push_back(g.mask);
    c.universality_score += g.score;
    ++counts[key];
  }
  std::vector<ConfigurationClass> out;
  for (auto& [key, c] : classes) {
    c.universality_score /= counts[key];
    if (n == 4) {
      c.match = match_template(c.representative);
      if (c.match.config_id) c.matched_template = c.match.config_id;
    }
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const ConfigurationClass& a, const ConfigurationClass& b) {
    const int ja = a.matched_template.value_or(99), jb = b.matched_template.value_or(99);
    return ja != jb ? ja < jb : a.members.front() < b.members.front();
  });
  return out;
}

}  // namespace detail

// Exhaustive single-mode search over graphs with node 0 input-mixed, node 1
// output and the remaining nodes measured-only. The normal-form certificate
// is defined for four nodes; elsewhere universality is reachability alone.
inline FourNodeSearchReport search_configurations(int n, const std::vector<double>& weights, const SearchSettings& s,
                                                  int target_count = 100) {
  if (n < 3 || n > 5) throw Error(ErrorCode::TooLarge, "single-mode search supports 3..5 nodes");
  FourNodeSearchReport rep;
  rep.settings = s;
  rep.target_count = target_count;
  const std::vector<Mat> targets = seeded_targets(target_count, s.seed);
  const std::vector<Mat> graphs = enumerate_graphs(n, weights);
  const NodePartition p = single_mode_partition(n);
  for (std::size_t idx = 0; idx < graphs.size(); ++idx) {
    GraphScore g;
    g.mask = static_cast<int>(idx);
    g.adjacency = graphs[idx];
    g.score = universality_score(case3_family(g.adjacency, p), targets, s).score;
    g.reachable = g.score >= 0.99;
    if (n == 4) g.certificate = normal_form_certificate(g.adjacency);
    g.universal = g.reachable && (n != 4 || g.certificate.certified);
    rep.graphs.push_back(g);
  }
  rep.universal_classes = detail::group_classes(rep.graphs, n, [](const GraphScore& g) { return g.universal; });
  rep.reachable_classes = detail::group_classes(rep.graphs, n, [](const GraphScore& g) { return g.reachable; });
  return rep;
}

// Unweighted four-node search; graph indices are edge bitmasks over (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
inline FourNodeSearchReport search_four_node(const SearchSettings& s = {}, int target_count = 100) {
  return search_configurations(4, {0.0, 1.0}, s, target_count);
}

}  // namespace owqc
