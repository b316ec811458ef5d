#include <gtest/gtest.h>

#include <set>

#include "owqc/config_search.hpp"

using namespace owqc;

TEST(Enumeration, LabeledGraphCounts) {
  EXPECT_EQ(enumerate_graphs(2, {0, 1}).size(), 2u);
  EXPECT_EQ(enumerate_graphs(3, {0, 1}).size(), 8u);
  EXPECT_EQ(enumerate_graphs(4, {0, 1}).size(), 64u);
  EXPECT_EQ(enumerate_graphs(3, {0, 1, -1}).size(), 27u);
  for (const Mat& a : enumerate_graphs(4, {0, 1})) EXPECT_NO_THROW(ClusterGraph{a}.validate());
}

TEST(Enumeration, RoleDeduplication) {
  // Unlabeled 4-node graphs up to full relabeling: 11.
  EXPECT_EQ(enumerate_graphs(4, {0, 1}, std::vector<int>{0, 0, 0, 0}).size(), 11u);
  // Roles (in, out, measured, measured) only allow swapping the measured pair.
  EXPECT_EQ(enumerate_graphs(4, {0, 1}, single_mode_roles(4)).size(), 40u);
}

TEST(Enumeration, TooLarge) {
  try {
    enumerate_graphs(9, {0, 1});
    FAIL() << "expected TooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}

TEST(Reachability, IdentityTargetReached) {
  std::mt19937_64 rng(1);
  const auto rep = reach_target(two_node_family(), Mat::Identity(2, 2), SearchSettings{}, rng);
  EXPECT_TRUE(rep.reached);
  EXPECT_LT(rep.best_residual, 1e-6);
}

TEST(Reachability, TargetInsideFamily) {
  const Family f = case3_family(four_node_graph(3), four_node_partition());
  Vec x(4);
  x << 0.2, -1.1, 0.5, 0.9;
  const Mat target = f.eval(x);
  const auto probe = infeasibility_probe(f, target, 40, 400, 3);
  EXPECT_LT(probe.best_residual, 1e-6);
}

TEST(Reachability, TwoNodeFamilyIsNotUniversal) {
  const auto targets = seeded_targets(40, 5);
  const ScoreResult r = universality_score(two_node_family(), targets, SearchSettings{});
  EXPECT_LT(r.score, 1.0);
  EXPECT_EQ(r.reports.size(), targets.size());
  for (const auto& rep : r.reports) EXPECT_LE(rep.evaluations, SearchSettings{}.budget);
}

TEST(Reachability, TwoNodeReachesCoincidentRotations) {
  // Targets R(a) S(r) R(a) are inside the two-node family.
  std::mt19937_64 rng(6);
  for (double a : {0.4, -1.3}) {
    const Mat t = rotate_of(a) * squeeze_of(0.7) * rotate_of(a);
    EXPECT_TRUE(reach_target(two_node_family(), t, SearchSettings{}, rng).reached);
  }
}

TEST(Reachability, TemplateFamiliesAreUniversal) {
  const auto targets = seeded_targets(60, 7);
  for (int j = 1; j <= 5; ++j) EXPECT_EQ(universality_score(four_node_template_family(j), targets, {}).score, 1.0) << j;
}

TEST(Reachability, AnalyticInversionReconstructs) {
  int analytic = 0;
  for (const Mat& t : seeded_targets(50, 8))
    for (int j = 1; j <= 5; ++j)
      if (auto a = four_node_invert(j, t)) {
        ++analytic;
        EXPECT_LT(max_abs(four_node_transform(j, *a).u_tilde - t), 1e-9);
      }
  EXPECT_GT(analytic, 100);
}

TEST(Infeasibility, FourierFloorForCaseOne) {
  const auto r = infeasibility_probe(case1_free_family(1, 1), fourier_target(1), 500, 120, 9);
  EXPECT_GT(r.best_residual, 0.05);
  EXPECT_FALSE(r.reached);
  EXPECT_EQ(r.attempts, 500u);
}

TEST(Infeasibility, CaseTwoReachesControlledZ) {
  Mat w(2, 2);
  w << 0, -0.4, -0.4, 0;
  const auto r = infeasibility_probe(case2_free_family(2), cz_of(w), 200, 120, 10);
  EXPECT_LT(r.best_residual, 1e-6);
}

TEST(Certificate, RepresentativeGraphsAreCertified) {
  for (int j = 1; j <= 5; ++j) {
    const NormalFormCertificate c = normal_form_certificate(four_node_graph(j));
    EXPECT_TRUE(c.certified) << j;
    const TemplateMatch m = match_template(four_node_graph(j));
    EXPECT_EQ(m.config_id, j);
    EXPECT_LT(m.u_residual, 1e-9);
    EXPECT_LT(m.e_residual, 1e-9);
  }
  Mat isolated = Mat::Zero(4, 4);
  isolated(0, 2) = isolated(2, 0) = isolated(1, 2) = isolated(2, 1) = 1.0;
  EXPECT_FALSE(normal_form_certificate(isolated).certified);
}

TEST(Search, ThreeNodeSearch) {
  SearchSettings s;
  const FourNodeSearchReport r3 = search_configurations(3, {0, 1}, s, 30);
  EXPECT_EQ(r3.graphs.size(), 8u);
  for (const auto& g : r3.graphs) {
    if (g.adjacency.isZero()) {
      EXPECT_EQ(g.score, 0.0);
    }
  }
}

TEST(Search, FourNodeClassesStableAcrossSeeds) {
  std::vector<std::set<std::vector<int>>> classes;
  for (std::uint64_t seed : {11u, 12u}) {
    SearchSettings s;
    s.seed = seed;
    const FourNodeSearchReport r = search_four_node(s, 24);
    EXPECT_EQ(r.universal_classes.size(), 5u);
    std::set<int> ids;
    std::set<std::vector<int>> members;
    for (const auto& c : r.universal_classes) {
      ASSERT_TRUE(c.matched_template.has_value());
      ids.insert(*c.matched_template);
      members.insert(c.members);
      EXPECT_LT(c.match.u_residual, 1e-9);
      EXPECT_LT(c.match.e_residual, 1e-9);
      EXPECT_TRUE(c.certified);
      EXPECT_EQ(c.universality_score, 1.0);
    }
    EXPECT_EQ(ids, (std::set<int>{1, 2, 3, 4, 5}));
    for (const auto& g : r.graphs) {
      if (g.adjacency.isZero()) {
        EXPECT_EQ(g.score, 0.0);
      }
    }
    classes.push_back(members);
  }
  EXPECT_EQ(classes[0], classes[1]);
}
