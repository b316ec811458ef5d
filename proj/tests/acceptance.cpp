#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "owqc/config_search.hpp"
#include "owqc/gaussian_oracle.hpp"
#include "support/corpus.hpp"

using namespace owqc;
using owqc::fixtures::Instance;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double inf_norm(const Mat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

Mat random_gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

Mat random_symmetric_zero_diag(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = nd(rng);
  return a;
}

Mat random_symplectic(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-kPi, kPi), sq(-1.0, 1.0);
  Vec a(m), r(m), b(m);
  for (int i = 0; i < m; ++i) {
    a(i) = ang(rng);
    r(i) = sq(rng);
    b(i) = ang(rng);
  }
  const Mat w = random_symmetric_zero_diag(m, rng);
  return rotate_of(a) * squeeze_of(r) * cz_of(w) * rotate_of(b);
}

// 1. Blockwise inversion.
Outcome blockwise_inversion() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(2, 12);
  double worst = 0.0, agree = 0.0;
  int both = 0, none = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const Mat m = random_gaussian(n, n, rng);
    BlockPartition2x2 b{m.topLeftCorner(k, k), m.topRightCorner(k, n - k), m.bottomLeftCorner(n - k, k),
                        m.bottomRightCorner(n - k, n - k)};
    std::optional<Mat> up, lo;
    try {
      up = blockwise_invert_upper(b);
    } catch (const Error&) {
    }
    try {
      lo = blockwise_invert_lower(b);
    } catch (const Error&) {
    }
    const Mat id = Mat::Identity(n, n);
    if (up) worst = std::max(worst, inf_norm(*up * m - id));
    if (lo) worst = std::max(worst, inf_norm(*lo * m - id));
    if (up && lo) {
      ++both;
      agree = std::max(agree, max_abs(*up - *lo) / std::max(1.0, max_abs(*up)));
    }
    if (!up && !lo) ++none;
  }
  return {worst < 1e-9 && agree < 1e-9 && none == 0,
          fmt("max residual %.2e, max relative disagreement %.2e over %d pairs, %d uninvertible", worst, agree, both,
              none)};
}

// 2. Variant agreement.
Outcome variant_agreement() {
  std::mt19937_64 rng(202);
  const std::vector<fixtures::Shape> shapes{{1, 1, 1}, {1, 2, 1}, {1, 2, 3}, {1, 3, 2}, {1, 1, 3},
                                           {3, 1, 1}, {3, 1, 2}, {3, 2, 1}, {3, 2, 3}, {3, 3, 2}};
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto& s = shapes[static_cast<std::size_t>(i) % shapes.size()];
    const Instance in = fixtures::random_instance(s.layout, s.m, s.l, rng, i % 3 == 0);
    const CaseSolution u = solve(in.model, in.partition, in.angles, Variant::Upper);
    const CaseSolution d = solve(in.model, in.partition, in.angles, Variant::Lower);
    worst = std::max({worst, max_abs(u.u_tilde - d.u_tilde), max_abs(u.e_on_yr - d.e_on_yr)});
  }
  return {worst < 1e-9, fmt("max |upper - lower| over (U, E) = %.2e on 200 configurations", worst)};
}

// 3. Symplecticity over the corpus.
Outcome symplecticity() {
  const auto c = fixtures::corpus(528, 303);
  double worst = 0.0;
  std::size_t checked = 0;
  for (const Instance& in : c) {
    std::vector<CaseSolution> sols{solve(in.model, in.partition, in.angles, Variant::Upper),
                                   solve_by_elimination(in.model, in.partition, in.angles)};
    if (in.partition.layout() != Layout::Case2) sols.push_back(solve(in.model, in.partition, in.angles, Variant::Lower));
    for (const auto& s : sols) {
      worst = std::max(worst, s.symplectic_defect());
      ++checked;
    }
  }
  return {worst < 1e-9 && c.size() >= 500,
          fmt("%zu instances, %zu transformations, max defect %.2e", c.size(), checked, worst)};
}

// 4. CZ recovery.
Outcome cz_recovery() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int m = 1 + i % 4;
    const Mat a22 = random_symmetric_zero_diag(m, rng);
    const Mat a = block2(Mat::Zero(m, m), -Mat::Identity(m, m), -Mat::Identity(m, m), a22);
    const ClusterModel model = build_cluster(a);
    NodePartition p = fixtures::layout_partition(m, 1, 0);
    MeasurementAngles ang;
    ang.theta_sum = Vec::Constant(m, kPi / 4);
    ang.theta_diff = Vec::Constant(m, -kPi / 4);
    const CaseSolution sol = solve_case2(model, p, ang);
    const CaseSolution el = solve_by_elimination(model, p, ang);
    worst = std::max({worst, max_abs(sol.u_tilde - cz_of(a22)), max_abs(el.u_tilde - cz_of(a22))});
  }
  return {worst < 1e-10, fmt("max |U - CZ[A22]| = %.2e over 50 instances, m = 1..4", worst)};
}

// 5. CZ with squeezing in case 1 at sin(theta_in) = 0.
Outcome cz_squeezing() {
  std::mt19937_64 rng(505);
  double worst_p = 0.0, worst_a11 = 0.0, worst_free = 0.0;
  int instances = 0;
  for (int i = 0; i < 60; ++i) {
    const int m = 1 + i % 3, l = i % 4;
    Instance in = fixtures::random_instance(1, m, l, rng);
    in.angles.theta_sum = Vec::Zero(m);
    const BlockSet b = partition_blocks(in.model.graph, in.partition);
    const Vec& t = in.angles.theta_cluster;
    const Mat d = Mat(t.array().cos().matrix().asDiagonal()) + Mat(t.array().sin().matrix().asDiagonal()) * b.a22;
    if (l > 0 && rcond(d) < 1e-3) continue;
    ++instances;
    const Mat pp = l == 0 ? b.a11
                          : Mat(b.a11 - b.a12 * d.inverse() * Mat(t.array().sin().matrix().asDiagonal()) *
                                            b.a12.transpose());
    const Mat expect = squeeze_of(Vec::Constant(m, -0.5 * std::log(2.0))) * shear_of(pp);
    for (Variant v : {Variant::Upper, Variant::Lower})
      worst_p = std::max(worst_p, max_abs(solve_case1(in.model, in.partition, in.angles, v).u_tilde - expect));
    worst_p = std::max(worst_p, max_abs(solve_by_elimination(in.model, in.partition, in.angles).u_tilde - expect));
    worst_p = std::max(worst_p, max_abs(case1_cz_squeeze(in.model, in.partition, t).u_tilde - expect));

    // theta_cluster = 0 gives P = A11, a true CZ.
    MeasurementAngles zero = in.angles;
    zero.theta_cluster = Vec::Zero(l);
    const Mat cz = squeeze_of(Vec::Constant(m, -0.5 * std::log(2.0))) * cz_of(b.a11);
    worst_free = std::max(worst_free, max_abs(solve_by_elimination(in.model, in.partition, zero).u_tilde - cz));

    // A12 = 0 gives CZ[A11] for any cluster phases.
    if (l > 0) {
      Mat a = in.model.a();
      a.topRightCorner(m, l).setZero();
      a.bottomLeftCorner(l, m).setZero();
      const ClusterModel dec = build_cluster(a);
      const CaseSolution s = solve_by_elimination(dec, in.partition, in.angles);
      worst_a11 = std::max(worst_a11, max_abs(s.u_tilde - cz));
    }
  }
  const double worst = std::max({worst_p, worst_a11, worst_free});
  return {worst < 1e-10, fmt("%d instances: S*CZ[P] %.2e, theta_cluster = 0 %.2e, A12 = 0 %.2e", instances, worst_p,
                             worst_free, worst_a11)};
}

// 6. Fourier infeasibility of case 1, case 2 negative control.
Outcome fourier_infeasibility() {
  const int starts = 10000;
  const std::size_t evals = 120;
  std::ostringstream os;
  bool pass = true;
  for (auto [m, l] : std::vector<std::pair<int, int>>{{1, 0}, {1, 1}, {2, 0}, {2, 1}}) {
    const auto r = infeasibility_probe(case1_free_family(m, l), fourier_target(m), starts, evals, 600 + m * 10 + l);
    pass = pass && r.best_residual > 0.05;
    os << fmt("case1 m=%d l=%d floor %.3f; ", m, l, r.best_residual);
  }
  Mat w(2, 2);
  w << 0, 0.7, 0.7, 0;
  const std::vector<std::pair<std::string, std::pair<int, Mat>>> controls{
      {"fourier m=1", {1, fourier_target(1)}}, {"fourier m=2", {2, fourier_target(2)}}, {"CZ m=2", {2, cz_of(w)}}};
  for (const auto& [name, t] : controls) {
    const auto r = infeasibility_probe(case2_free_family(t.first), t.second, starts, evals, 700 + t.first);
    pass = pass && r.best_residual < 1e-6;
    os << fmt("case2 %s %.1e; ", name.c_str(), r.best_residual);
  }
  os << starts << " starts each";
  return {pass, os.str()};
}

// 7. Four-node search.
Outcome four_node_search() {
  const FourNodeSearchReport rep = search_four_node();
  std::set<int> templates;
  double worst = 0.0;
  bool all_matched = true;
  for (const auto& c : rep.universal_classes) {
    if (!c.matched_template) {
      all_matched = false;
      continue;
    }
    templates.insert(*c.matched_template);
    worst = std::max({worst, c.match.u_residual, c.match.e_residual});
  }
  const bool pass = rep.universal_classes.size() == 5 && all_matched && templates.size() == 5 && worst < 1e-9;
  return {pass, fmt("%zu universal classes (%zu by reachability alone), %zu distinct templates, max residual %.2e",
                    rep.universal_classes.size(), rep.reachable_classes.size(), templates.size(), worst)};
}

// 8. Four-node angle decomposition and Euler round trip.
Outcome four_node_decomposition() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> ang(-kPi, kPi), sq(-2.0, 2.0);
  double worst = 0.0;
  std::ostringstream os;
  for (int j = 1; j <= 5; ++j) {
    int feasible = 0, drawn = 0;
    while (feasible < 200) {
      const double phi1 = ang(rng), r = sq(rng);
      ++drawn;
      FourNodeDecomposition d;
      try {
        d = four_node_angles_for(j, phi1, r);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutOfBranch) continue;
        throw;
      }
      ++feasible;
      const Mat target = rotate_of(-four_node_l(j) * kPi / 2 + phi1) * squeeze_of(r) *
                         rotate_of(d.phi2 - four_node_p(j) * kPi / 2);
      worst = std::max(worst, max_abs(four_node_core(j, d.angles.theta3, d.angles.theta4) - target));
    }
    os << fmt("j%d %d/%d feasible; ", j, feasible, drawn);
  }
  double euler = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat s = random_symplectic(1, rng);
    euler = std::max(euler, max_abs(euler_decompose(s).reconstruct() - s));
  }
  os << fmt("template residual %.2e, euler round trip %.2e", worst, euler);
  return {worst < 1e-9 && euler < 1e-9, os.str()};
}

// 9. Three-node z-family.
Outcome z_family() {
  double worst = 0.0, worst_graph = 0.0;
  bool distinct = true;
  for (double a23 : {0.5, 1.0, 2.0}) {
    std::vector<std::pair<double, double>> pairs;
    for (int z = 1; z <= 10; ++z) {
      const ZFamilyWeights w = three_node_weights_for_z(z, a23);
      for (double theta : {-2.5, -1.0, 0.0, 0.3, 1.2, 2.9}) {
        const CaseSolution s = three_node_family(w.a12, w.a13, w.a23, w.theta3, w.theta_plus_for(theta), w.theta_minus);
        worst = std::max(worst, max_abs(s.u_tilde - z_family_target(z, theta)));
        Mat adj(3, 3);
        adj << 0, w.a12, w.a13, w.a12, 0, w.a23, w.a13, w.a23, 0;
        MeasurementAngles a;
        a.theta_sum = Vec::Constant(1, 0.5 * (w.theta_plus_for(theta) + w.theta_minus));
        a.theta_diff = Vec::Constant(1, 0.5 * (w.theta_plus_for(theta) - w.theta_minus));
        a.theta_cluster = Vec::Constant(1, w.theta3);
        const CaseSolution e = solve_by_elimination(build_cluster(adj), NodePartition{{0}, {1}, {2}}, a);
        worst_graph = std::max(worst_graph, max_abs(e.u_tilde - z_family_target(z, theta)));
      }
      for (const auto& [p, q] : pairs)
        if (std::abs(p - w.a12) < 1e-12 && std::abs(q - w.a13) < 1e-12) distinct = false;
      pairs.emplace_back(w.a12, w.a13);
    }
  }
  return {worst < 1e-9 && worst_graph < 1e-9 && distinct,
          fmt("closed form %.2e, graph elimination %.2e, weight pairs %s", worst, worst_graph,
              distinct ? "pairwise distinct" : "repeated")};
}

// 10. Two-node non-universality versus four-node templates.
Outcome universality_scores() {
  const auto targets = seeded_targets(100, 1010);
  const SearchSettings s;
  const double two = universality_score(two_node_family(), targets, s).score;
  std::ostringstream os;
  os << fmt("two-node %.2f; templates", two);
  bool pass = two < 0.2;
  for (int j = 1; j <= 5; ++j) {
    const double sc = universality_score(four_node_template_family(j), targets, s).score;
    pass = pass && sc == 1.0;
    os << fmt(" j%d %.2f", j, sc);
  }
  return {pass, os.str()};
}

SchemeProgram program_for(const Instance& in, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sq(0.3, 1.5);
  const int m = static_cast<int>(in.partition.m());
  const Mat s = random_symplectic(m, rng);
  return SchemeProgram{in.model, in.partition, in.angles, Vec(), Mat(0.25 * s * s.transpose()), sq(rng)};
}

// 11. Oracle equivalence.
Outcome oracle_equivalence() {
  std::mt19937_64 rng(1111);
  const auto c = fixtures::corpus(64, 1112);
  double worst = 0.0;
  std::set<Layout> layouts;
  for (const Instance& in : c) {
    const SchemeProgram prog = program_for(in, rng);
    const CaseSolution sol = solve(in.model, in.partition, in.angles);
    worst = std::max(worst, compare_with_analytic(sol, in.model, prog, simulate_exact(prog), 1e-9).defect);
    layouts.insert(in.partition.layout());
  }
  double rel = 0.0, sig = 0.0;
  int mc_pass = 0, mc_total = 0;
  for (int layout : {1, 2, 3})
    for (int k = 0; k < 3; ++k) {
      const Instance in = fixtures::random_instance(layout, 1 + k % 2, 1 + k, rng);
      const SchemeProgram prog = program_for(in, rng);
      const CaseSolution sol = solve(in.model, in.partition, in.angles);
      const DefectReport r = compare_with_analytic(sol, in.model, prog,
                                                   simulate_monte_carlo(prog, 100000, 1200 + 10 * layout + k), 1e-3);
      rel = std::max(rel, r.relative_defect);
      sig = std::max(sig, r.max_sigma_ratio);
      mc_pass += r.pass ? 1 : 0;
      ++mc_total;
    }
  return {worst < 1e-9 && layouts.size() == 3 && mc_pass == mc_total,
          fmt("exact: %zu configurations, max defect %.2e; monte carlo 1e5: %d/%d within 3 sigma (max %.2f sigma, "
              "max relative %.1e)",
              c.size(), worst, mc_pass, mc_total, sig, rel)};
}

// 12. Case 3 with A13 = A23 = 0 reduces to case 2.
Outcome reduction_chain() {
  std::mt19937_64 rng(1212);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const int m = 1 + done % 3, l = 1 + done % 2;
    Instance in = fixtures::random_instance(3, m, l, rng);
    Mat a = in.model.a();
    a.block(0, 2 * m, 2 * m, l).setZero();
    a.block(2 * m, 0, l, 2 * m).setZero();
    in.model = build_cluster(a);
    if (!fixtures::well_conditioned(in)) continue;
    const Mat sub = a.topLeftCorner(2 * m, 2 * m);
    MeasurementAngles a2 = in.angles;
    a2.theta_cluster = Vec(0);
    const CaseSolution c2 = solve_case2(build_cluster(sub), fixtures::layout_partition(m, 1, 0), a2);
    for (Variant v : {Variant::Upper, Variant::Lower}) {
      const CaseSolution c3 = solve_case3(in.model, in.partition, in.angles, v);
      worst = std::max({worst, max_abs(c3.u_tilde - c2.u_tilde), max_abs(c3.e_on_yr.leftCols(2 * m) - c2.e_on_yr),
                        max_abs(c3.e_on_yr.rightCols(l))});
    }
    ++done;
  }
  return {worst < 1e-9, fmt("max |case3 - case2| = %.2e on %d instances", worst, done)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"blockwise inversion", blockwise_inversion},
      {"variant agreement", variant_agreement},
      {"symplecticity", symplecticity},
      {"CZ recovery", cz_recovery},
      {"CZ with squeezing", cz_squeezing},
      {"Fourier infeasibility", fourier_infeasibility},
      {"four-node search", four_node_search},
      {"four-node decomposition", four_node_decomposition},
      {"three-node z-family", z_family},
      {"two-node non-universality", universality_scores},
      {"oracle equivalence", oracle_equivalence},
      {"reduction chain", reduction_chain},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s %2zu %-26s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
