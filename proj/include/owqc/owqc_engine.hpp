#pragma once

#include <map>
#include <string>
#include <vector>

#include "owqc/cluster_model.hpp"
#include "owqc/gate_algebra.hpp"

namespace owqc {

// Homodyne phases by beam-splitter port. theta_sum acts on (in + cluster)/sqrt2,
// theta_diff on (in - cluster)/sqrt2, theta_cluster on the measured-only nodes.
// Case 1 measures only the sum port.
struct MeasurementAngles {
  Vec theta_sum;
  Vec theta_diff;
  Vec theta_cluster;
  double local_oscillator_amplitude = 1.0;

  Vec theta_plus() const { return theta_sum + theta_diff; }
  Vec theta_minus() const { return theta_sum - theta_diff; }
};

enum class CaseTag { Case1Q, Case1D, Case2, Case3Q, Case3D, ThreeNode, FourNode, Elimination };

inline const char* case_tag_name(CaseTag t) {
  switch (t) {
    case CaseTag::Case1Q: return "case1_q";
    case CaseTag::Case1D: return "case1_d";
    case CaseTag::Case2: return "case2";
    case CaseTag::Case3Q: return "case3_q";
    case CaseTag::Case3D: return "case3_d";
    case CaseTag::ThreeNode: return "three_node";
    case CaseTag::FourNode: return "four_node";
    case CaseTag::Elimination: return "elimination";
  }
  return "unknown";
}

enum class Variant { Upper, Lower };

using IntermediateBlocks = std::map<std::string, Mat>;

// e_on_yr columns follow the original node numbering of the model.
struct CaseSolution {
  Mat u_tilde;
  Mat e_on_yr;
  CaseTag case_tag = CaseTag::Elimination;
  IntermediateBlocks intermediates;

  double symplectic_defect() const { return owqc::symplectic_defect(u_tilde); }
};

namespace detail {

inline Mat diag_cos(const Vec& v) { return v.array().cos().matrix().asDiagonal(); }
inline Mat diag_sin(const Vec& v) { return v.array().sin().matrix().asDiagonal(); }

inline Mat scatter_columns(const Mat& e_reordered, const std::vector<int>& order, Eigen::Index n) {
  Mat out = Mat::Zero(e_reordered.rows(), n);
  for (std::size_t k = 0; k < order.size(); ++k) out.col(order[k]) = e_reordered.col(static_cast<Eigen::Index>(k));
  return out;
}

inline void check_angles(const NodePartition& p, const MeasurementAngles& a, bool need_diff) {
  const auto m = static_cast<Eigen::Index>(p.m()), l = static_cast<Eigen::Index>(p.l());
  if (a.theta_sum.size() != m || (need_diff && a.theta_diff.size() != m) || a.theta_cluster.size() != l)
    throw Error(ErrorCode::DimensionMismatch, "angle vector lengths do not match the partition");
  if (!a.theta_sum.allFinite() || (need_diff && !a.theta_diff.allFinite()) || !a.theta_cluster.allFinite())
    throw Error(ErrorCode::DimensionMismatch, "non-finite angle");
}

inline Mat rotation_half_turn(const Vec& theta_minus) {
  Vec flip(theta_minus.size());
  for (Eigen::Index i = 0; i < flip.size(); ++i) flip(i) = std::tan(0.5 * theta_minus(i)) < 0 ? kPi : 0.0;
  return rotate_of(flip);
}

inline Vec log_abs_tan_half(const Vec& theta_minus) {
  Vec out(theta_minus.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::log(std::abs(std::tan(0.5 * theta_minus(i))));
  return out;
}

}  // namespace detail

// Linear system of the whole scheme. Measured quadratures q and outputs are
// affine in (x_in, y_in), x_r, y_r; zero photocurrents fix x_r.
struct HomodyneSystem {
  Mat m_in, m_x, m_y;  // q = m_in in + m_x x_r + m_y y_r
  Mat o_in, o_x, o_y;  // out = o_in in + o_x x_r + o_y y_r
  Mat gain;            // feedforward on q: out_final = out - gain q
  Mat u_tilde, e_on_yr;
  std::vector<std::string> labels;  // one label per measured quadrature
};

inline HomodyneSystem homodyne_system(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a) {
  p.validate(model.n());
  const Layout layout = p.layout();
  detail::check_angles(p, a, layout != Layout::Case1);
  const Eigen::Index n = model.n(), m = static_cast<Eigen::Index>(p.m());
  const Mat& adj = model.a();
  const double h = 1.0 / std::sqrt(2.0);

  struct Row {
    Vec in, x, y;
  };
  auto zero = [&] { return Row{Vec::Zero(2 * m), Vec::Zero(n), Vec::Zero(n)}; };
  auto big_x = [&](int k) {
    Row r = zero();
    r.x(k) = 1.0;
    r.y = -adj.row(k).transpose();
    return r;
  };
  auto big_y = [&](int k) {
    Row r = zero();
    r.y(k) = 1.0;
    r.x = adj.row(k).transpose();
    return r;
  };
  auto combine = [&](const Row& u, double cu, const Row& v, double cv) {
    return Row{cu * u.in + cv * v.in, cu * u.x + cv * v.x, cu * u.y + cv * v.y};
  };
  // (in +/- cluster)/sqrt2 on mode i attached to node k.
  auto port = [&](Eigen::Index i, int k, double sign, bool quad_y) {
    Row r = quad_y ? big_y(k) : big_x(k);
    r.in(quad_y ? m + i : i) = sign;
    return combine(r, sign * h, zero(), 0.0);
  };

  std::vector<Row> meas;
  HomodyneSystem s;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int k = p.input_mixed[static_cast<std::size_t>(i)];
    const double ts = a.theta_sum(i);
    meas.push_back(combine(port(i, k, 1.0, false), std::cos(ts), port(i, k, 1.0, true), std::sin(ts)));
    s.labels.push_back("sum" + std::to_string(i));
    if (layout != Layout::Case1) {
      const double td = a.theta_diff(i);
      meas.push_back(combine(port(i, k, -1.0, false), std::cos(td), port(i, k, -1.0, true), std::sin(td)));
      s.labels.push_back("diff" + std::to_string(i));
    }
  }
  for (std::size_t j = 0; j < p.l(); ++j) {
    const int k = p.measured_only[j];
    const double t = a.theta_cluster(static_cast<Eigen::Index>(j));
    meas.push_back(combine(big_x(k), std::cos(t), big_y(k), std::sin(t)));
    s.labels.push_back("node" + std::to_string(k));
  }
  std::vector<Row> outs;
  if (layout == Layout::Case1) {
    for (Eigen::Index i = 0; i < m; ++i) outs.push_back(port(i, p.input_mixed[static_cast<std::size_t>(i)], -1.0, false));
    for (Eigen::Index i = 0; i < m; ++i) outs.push_back(port(i, p.input_mixed[static_cast<std::size_t>(i)], -1.0, true));
  } else {
    for (int k : p.outputs) outs.push_back(big_x(k));
    for (int k : p.outputs) outs.push_back(big_y(k));
  }
  auto stack = [](const std::vector<Row>& rows, Mat& min, Mat& mx, Mat& my) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    min.resize(r, rows[0].in.size());
    mx.resize(r, rows[0].x.size());
    my.resize(r, rows[0].y.size());
    for (Eigen::Index i = 0; i < r; ++i) {
      min.row(i) = rows[static_cast<std::size_t>(i)].in.transpose();
      mx.row(i) = rows[static_cast<std::size_t>(i)].x.transpose();
      my.row(i) = rows[static_cast<std::size_t>(i)].y.transpose();
    }
  };
  stack(meas, s.m_in, s.m_x, s.m_y);
  stack(outs, s.o_in, s.o_x, s.o_y);
  if (s.m_x.rows() != n) throw Error(ErrorCode::LayoutMismatch, "number of measurements differs from node count");
  s.gain = s.o_x * checked_inverse(s.m_x, "homodyne system");
  s.u_tilde = s.o_in - s.gain * s.m_in;
  s.e_on_yr = s.o_y - s.gain * s.m_y;
  return s;
}

// Elimination of the homodyne system; independent of the closed forms.
inline CaseSolution solve_by_elimination(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a) {
  HomodyneSystem s = homodyne_system(model, p, a);
  CaseSolution sol{s.u_tilde, s.e_on_yr, CaseTag::Elimination, {}};
  sol.intermediates["feedforward_gain"] = s.gain;
  return sol;
}

inline CaseSolution solve_case1(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a,
                                Variant variant) {
  if (p.layout() != Layout::Case1)
    throw Error(ErrorCode::LayoutMismatch, "case 1 needs outputs on the mixed nodes");
  const BlockSet b = partition_blocks(model.graph, p);
  detail::check_angles(p, a, false);
  const Eigen::Index m = b.a11.rows(), l = b.a22.rows();
  const Mat im = Mat::Identity(m, m), il = Mat::Identity(l, l);
  const Mat ci = detail::diag_cos(a.theta_sum), si = detail::diag_sin(a.theta_sum);
  const Mat c1 = detail::diag_cos(a.theta_cluster), s1 = detail::diag_sin(a.theta_cluster);
  const Mat &a11 = b.a11, &a12 = b.a12, &a22 = b.a22;
  const double h = 1.0 / std::sqrt(2.0);
  CaseSolution sol;
  Mat left, right, err;
  if (variant == Variant::Upper) {
    const Mat q = ci + si * a11;
    const Mat qi = checked_inverse(q, "Q");
    const Mat hh = s1 * (a22 - a12.transpose() * qi * si * a12) + c1;
    const Mat hi = checked_inverse(hh, "H");
    const Mat ll = im + qi * si * a12 * hi * s1 * a12.transpose();
    const Mat v = a11 * ll - a12 * hi * s1 * a12.transpose();
    const Mat me1 = hi * (c1 * a12.transpose() - s1 * a12.transpose() * qi * (ci * a11 - si));
    const Mat me2 = hi * (c1 * a22 - s1 * (a12.transpose() * qi * ci * a12 + il));
    sol.u_tilde = h * block2(im + ll * qi * ci, ll * qi * si, v * qi * ci, im + v * qi * si);
    err = h * block2(im, Mat::Zero(m, m), a11, -im) * vstack({qi * si, im}) *
          hstack({im + a11 * a11 + a12 * me1, a11 * a12 + a12 * me2});
    sol.case_tag = CaseTag::Case1Q;
    sol.intermediates = {{"Q", q}, {"L", ll}, {"V", v}, {"H", hh}, {"M_e1", me1}, {"M_e2", me2}};
  } else {
    const Mat d = c1 + s1 * a22;
    const Mat di = checked_inverse(d, "D");
    const Mat pp = a11 - a12 * di * s1 * a12.transpose();
    const Mat k = ci + si * pp;
    const Mat ki = checked_inverse(k, "K");
    const Mat me3 = di * (c1 * a12.transpose() - s1 * a12.transpose() * a11);
    const Mat me4 = di * (c1 * a22 - s1 * (a12.transpose() * a12 + il));
    sol.u_tilde = h * block2(im + ki * ci, ki * si, pp * ki * ci, im + pp * ki * si);
    err = h * block2(im, Mat::Zero(m, m), pp, -im) * vstack({ki * si, im}) *
          hstack({im + a11 * a11 + a12 * me3, a11 * a12 + a12 * me4});
    sol.case_tag = CaseTag::Case1D;
    sol.intermediates = {{"K", k}, {"P", pp}, {"D", d}, {"M_e3", me3}, {"M_e4", me4}};
  }
  sol.e_on_yr = detail::scatter_columns(err, b.order, model.n());
  return sol;
}

// Theta_in = 0: S(-ln2/2) [[I,0],[P,I]].
inline CaseSolution case1_cz_squeeze(const ClusterModel& model, const NodePartition& p, const Vec& theta_cluster) {
  MeasurementAngles a;
  a.theta_sum = Vec::Zero(static_cast<Eigen::Index>(p.m()));
  a.theta_cluster = theta_cluster;
  CaseSolution sol = solve_case1(model, p, a, Variant::Lower);
  const Mat& pp = sol.intermediates.at("P");
  const Eigen::Index m = pp.rows();
  sol.u_tilde = squeeze_of(Vec::Constant(m, -0.5 * std::log(2.0))) * shear_of(pp);
  return sol;
}

inline CaseSolution case1_cz_squeeze(const ClusterModel& model, const NodePartition& p) {
  return case1_cz_squeeze(model, p, Vec::Zero(static_cast<Eigen::Index>(p.l())));
}

inline CaseSolution solve_case2(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a) {
  if (p.layout() != Layout::Case2) throw Error(ErrorCode::LayoutMismatch, "case 2 needs n = 2m with no measured-only nodes");
  const BlockSet b = partition_blocks(model.graph, p);
  detail::check_angles(p, a, true);
  const Eigen::Index m = b.a11.rows();
  const Mat im = Mat::Identity(m, m), zm = Mat::Zero(m, m);
  if (!is_invertible(b.a12)) throw Error(ErrorCode::SingularA12, "A12 is singular");
  const Vec tp = a.theta_plus(), tm = a.theta_minus();
  const Mat phi = phi_of(tp, tm);
  const Mat a12i = checked_inverse(b.a12, "A12");
  const Mat w = block2(-a12i, a12i * b.a11, -b.a22 * a12i, b.a22 * a12i * b.a11 - b.a12.transpose());

  CaseSolution sol;
  sol.case_tag = CaseTag::Case2;
  sol.u_tilde = shear_of(b.a22) * block2(-a12i, zm, zm, -b.a12.transpose()) * rotate_of(Vec::Constant(m, -kPi / 2)) *
                shear_of(b.a11) * rotate_of(Vec(Vec::Constant(m, kPi / 2) - 0.5 * tp)) *
                detail::rotation_half_turn(tm) * squeeze_of(detail::log_abs_tan_half(tm)) * rotate_of(Vec(-0.5 * tp));
  const Mat ar = b.reassemble();
  const Mat err = -block2(a12i, zm, b.a22 * a12i, -im) * (ar * ar + Mat::Identity(2 * m, 2 * m));
  sol.e_on_yr = detail::scatter_columns(err, b.order, model.n());
  sol.intermediates = {{"W", w}, {"Phi", phi}};
  return sol;
}

inline CaseSolution solve_case3(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a,
                                Variant variant) {
  if (p.layout() != Layout::Case3) throw Error(ErrorCode::LayoutMismatch, "case 3 needs measured-only nodes");
  const BlockSet b = partition_blocks(model.graph, p);
  detail::check_angles(p, a, true);
  const Eigen::Index m = b.a11.rows(), l = b.a33.rows();
  const Mat im = Mat::Identity(m, m), il = Mat::Identity(l, l), zml = Mat::Zero(m, l);
  const Mat &a11 = b.a11, &a12 = b.a12, &a13 = b.a13, &a22 = b.a22, &a23 = b.a23, &a33 = b.a33;
  const Mat c1 = detail::diag_cos(a.theta_sum), s1 = detail::diag_sin(a.theta_sum);
  const Mat c2 = detail::diag_cos(a.theta_diff), s2 = detail::diag_sin(a.theta_diff);
  const Mat c3 = detail::diag_cos(a.theta_cluster), s3 = detail::diag_sin(a.theta_cluster);
  const Mat phi = phi_of(a.theta_plus(), a.theta_minus());

  CaseSolution sol;
  sol.intermediates["Q~"] = block2(c1 + s1 * a11, s1 * a12, -c2 - s2 * a11, -s2 * a12);
  sol.intermediates["T~"] = vstack({s1 * a13, -s2 * a13});
  sol.intermediates["C~"] = hstack({s3 * a13.transpose(), s3 * a23.transpose()});
  sol.intermediates["D~"] = c3 + s3 * a33;
  sol.intermediates["Phi"] = phi;

  Mat w, e1, e2;
  if (variant == Variant::Upper) {
    if (!is_invertible(a12)) throw Error(ErrorCode::SingularBlock, "A12 is singular");
    const Mat a12i = checked_inverse(a12, "A12");
    const Mat ht = c3 + s3 * (a33 - a23.transpose() * a12i * a13);
    const Mat hti = checked_inverse(ht, "H~");
    const Mat k1 = a12i * a13 * hti * s3;
    const Mat k2 = a23.transpose() * a12i * a11 - a13.transpose();
    w = block2(-(k1 * a23.transpose() + im) * a12i, k1 * k2 + a12i * a11, a23 * hti * s3 * a23.transpose() * a12i,
               -a12.transpose() - a23 * hti * s3 * k2);
    const Mat x = k1 * k2 + a12i * a11;
    const Mat top11 = -(k1 * a23.transpose() + im) * a12i;
    const Mat e11 = top11 - x * a11 - a12i * a13 * hti * c3 * a13.transpose() - a12.transpose();
    const Mat e12 = -x * a12 - a12i * a13 * hti * c3 * a23.transpose() - a22;
    const Mat e13 = -x * a13 + a12i * a13 * hti * (s3 - c3 * a33) - a23;
    const Mat e21 = a12.transpose() * a11 +
                    a23 * (hti * s3 * (a23.transpose() * a12i + k2 * a11) + hti * c3 * a13.transpose()) +
                    a22 * (top11 - x * a11 - a12i * a13 * hti * c3 * a13.transpose());
    const Mat e22 = im + a12.transpose() * a12 + a22 * (-x * a12 - a12i * a13 * hti * c3 * a23.transpose()) +
                    a23 * (hti * s3 * k2 * a12 + hti * c3 * a23.transpose());
    const Mat e23 = a12.transpose() * a13 + a22 * (-x * a13 + a12i * a13 * hti * (s3 - c3 * a33)) +
                    a23 * (hti * s3 * k2 * a13 + hti * (c3 * a33 - s3));
    e1 = hstack({e11, e12, e13});
    e2 = hstack({e21, e22, e23});
    sol.case_tag = CaseTag::Case3Q;
    sol.intermediates["K1"] = k1;
    sol.intermediates["K2"] = k2;
    sol.intermediates["H~"] = ht;
  } else {
    const Mat dt = sol.intermediates["D~"];
    const Mat dti = checked_inverse(dt, "D~");
    const Mat kt1 = a11 - a13 * dti * s3 * a13.transpose();
    const Mat kt2 = a12 - a13 * dti * s3 * a23.transpose();
    const Mat kt2i = checked_inverse(kt2, "K~2");
    const Mat kt3 = a23.transpose() * kt2i * kt1 - a13.transpose();
    w = block2(-kt2i, kt2i * kt1, a23 * dti * s3 * a23.transpose() * kt2i, -a12.transpose() - a23 * dti * s3 * kt3);
    const Mat t11 = -kt2i * kt1 * a11 - kt2i * a13 * dti * c3 * a13.transpose() - kt2i - a12.transpose();
    const Mat t12 = -kt2i * kt1 * a12 - kt2i * a13 * dti * c3 * a23.transpose() - a22;
    const Mat t13 = -kt2i * kt1 * a13 + kt2i * a13 * dti * (s3 - c3 * a33) - a23;
    e1 = hstack({t11, t12, t13});
    // Second row from the measured-node solution x3 = N y - D~^-1 s3 (A13^T x1 + A23^T x2).
    const Mat x1 = hstack({a11, a12, a13});
    const Mat x2 = e1 + hstack({a12.transpose(), a22, a23});
    const Mat nu = dti * (c3 * hstack({a13.transpose(), a23.transpose(), a33}) - hstack({Mat::Zero(l, 2 * m), s3}));
    const Mat x3 = nu - dti * s3 * a13.transpose() * x1 - dti * s3 * a23.transpose() * x2;
    e2 = hstack({Mat::Zero(m, m), im, zml}) + a12.transpose() * x1 + a22 * x2 + a23 * x3;
    sol.case_tag = CaseTag::Case3D;
    sol.intermediates["K~1"] = kt1;
    sol.intermediates["K~2"] = kt2;
    sol.intermediates["K~3"] = kt3;
    (void)il;
  }
  sol.intermediates["W"] = w;
  sol.u_tilde = shear_of(a22) * w * phi;
  sol.e_on_yr = detail::scatter_columns(vstack({e1, e2}), b.order, model.n());
  return sol;
}

inline CaseSolution solve(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a,
                          Variant variant = Variant::Upper) {
  switch (p.layout()) {
    case Layout::Case1: return solve_case1(model, p, a, variant);
    case Layout::Case2: return solve_case2(model, p, a);
    case Layout::Case3: return solve_case3(model, p, a, variant);
  }
  throw Error(ErrorCode::LayoutMismatch, "unknown layout");
}

// Tries the requested variant, then the other one.
inline CaseSolution solve_any_variant(const ClusterModel& model, const NodePartition& p, const MeasurementAngles& a,
                                      Variant first = Variant::Upper) {
  try {
    return solve(model, p, a, first);
  } catch (const Error& e) {
    if (p.layout() == Layout::Case2 || (e.code() != ErrorCode::SingularBlock && e.code() != ErrorCode::SingularA12))
      throw;
    return solve(model, p, a, first == Variant::Upper ? Variant::Lower : Variant::Upper);
  }
}

inline CaseSolution three_node_family(double a12, double a13, double a23, double theta3, double theta_plus,
                                      double theta_minus) {
  const double c = std::cos(theta3), s = std::sin(theta3);
  const double d = a12 * c - a23 * a13 * s;
  if (std::abs(d) < 1e-12) throw Error(ErrorCode::DegenerateD, "d vanishes");
  Mat core(2, 2);
  core << -c, -a13 * a13 * s, a23 * a23 * s, -a12 * d + a13 * a12 * a23 * s;
  core /= d;
  CaseSolution sol;
  sol.case_tag = CaseTag::ThreeNode;
  const Mat phi = phi_of(theta_plus, theta_minus);
  sol.u_tilde = core * phi;
  sol.intermediates = {{"d", Mat::Constant(1, 1, d)}, {"W", core}, {"Phi", phi}};
  Mat adj(3, 3);
  adj << 0, a12, a13, a12, 0, a23, a13, a23, 0;
  const ClusterModel model = build_cluster(adj);
  MeasurementAngles ang;
  ang.theta_sum = Vec::Constant(1, 0.5 * (theta_plus + theta_minus));
  ang.theta_diff = Vec::Constant(1, 0.5 * (theta_plus - theta_minus));
  ang.theta_cluster = Vec::Constant(1, theta3);
  sol.e_on_yr = solve_any_variant(model, NodePartition{{0}, {1}, {2}}, ang).e_on_yr;
  return sol;
}

struct ZFamilyWeights {
  double a12, a13, a23, theta3, theta_minus;
  // theta_plus = -theta for the target angle theta.
  double theta_plus_for(double theta) const { return -theta; }
};

inline ZFamilyWeights three_node_weights_for_z(int z, double a23) {
  if (z < 1) throw Error(ErrorCode::DimensionMismatch, "z must be a positive integer");
  if (a23 == 0.0) throw Error(ErrorCode::InvalidWeight, "a23 must be nonzero");
  const double root = std::sqrt(1.0 + z);
  return {1.0 / (1.0 + root), a23 * root, a23, std::atan2(1.0, a23 * a23 * z), kPi / 2};
}

// [[z cos + (z+1) sin, (z+1) cos - z sin], [-cos - sin, sin - cos]].
inline Mat z_family_target(int z, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat t(2, 2);
  t << z * c + (z + 1) * s, (z + 1) * c - z * s, -c - s, s - c;
  return t;
}

// Representative four-node graph per template: node 0 input-mixed, 1 output,
// 2 carries theta3, 3 carries theta4.
inline Mat four_node_graph(int j) {
  static const std::vector<std::vector<std::pair<int, int>>> edges{
      {{0, 2}, {0, 3}, {1, 3}},
      {{0, 2}, {1, 2}, {1, 3}},
      {{0, 2}, {1, 3}, {2, 3}},
      {{0, 1}, {0, 2}, {1, 3}},
      {{0, 1}, {0, 3}, {1, 2}, {2, 3}},
  };
  if (j < 1 || j > 5) throw Error(ErrorCode::DimensionMismatch, "config id must be 1..5");
  Mat a = Mat::Zero(4, 4);
  for (auto [u, v] : edges[static_cast<std::size_t>(j - 1)]) a(u, v) = a(v, u) = 1.0;
  return a;
}

inline const NodePartition& four_node_partition() {
  static const NodePartition p{{0}, {1}, {2, 3}};
  return p;
}

// Homodyne angles realizing template angles on the representative graph.
inline MeasurementAngles four_node_measurement(const FourNodeAngles& f) {
  MeasurementAngles a;
  a.theta_sum = Vec::Constant(1, 0.5 * (f.theta_plus + f.theta_minus));
  a.theta_diff = Vec::Constant(1, 0.5 * (f.theta_plus - f.theta_minus));
  a.theta_cluster = Vec(2);
  a.theta_cluster << -f.theta3, -f.theta4;
  return a;
}

// Error matrix on y_r for the four-node templates, columns (in, out, node3, node4).
inline Mat four_node_error(int j, double theta3, double theta4) {
  const double t3 = std::tan(theta3), t4 = std::tan(theta4);
  const double c3 = 1.0 / t3, c4 = 1.0 / t4;
  Mat e(2, 4);
  switch (j) {
    case 1: e << -3 * c4, -c4, -2 * t3 * c4 - 1, -t3 * c4 - 3, -2, 1, -2 * t3, -t3; break;
    case 2: e << -2 * c3, -c3, -3, -1, -1 - 2 * t4 * c3, 2 - t4 * c3, -2 * t4, t4; break;
    case 3: e << 1 - 2 * c3 * c4, -c4, -3 * c4, -2 - c3 * c4, -2 * c3, 1, -2, -c3; break;
    case 4: e << -3, -t3, -2 * t3, -1, -2 * t4, 3 - t3 * t4, 1 - 2 * t3 * t4, t4; break;
    case 5: e << t3 * t4 - 3, -2 * t4, -t3 * t4 - 2, -3 * t4, -t3, 3, t3, 2; break;
    default: throw Error(ErrorCode::DimensionMismatch, "config id must be 1..5");
  }
  if (!e.allFinite() || max_abs(e) > 1e12) throw Error(ErrorCode::DegenerateAngles, "tan/cot singular");
  return e;
}

inline CaseSolution four_node_transform(int j, const FourNodeAngles& f) {
  CaseSolution sol;
  sol.case_tag = CaseTag::FourNode;
  const Mat w = four_node_core(j, f.theta3, f.theta4);
  const Mat phi = phi_of(f.theta_plus, f.theta_minus);
  sol.u_tilde = w * phi;
  sol.e_on_yr = four_node_error(j, f.theta3, f.theta4);
  sol.intermediates = {{"W", w}, {"Phi", phi}};
  return sol;
}

inline Mat effective_error_on_ys(const CaseSolution& sol, const ClusterModel& model) {
  if (sol.e_on_yr.cols() != model.re_u.rows()) throw Error(ErrorCode::DimensionMismatch, "error matrix width != node count");
  return sol.e_on_yr * model.re_u;
}

// U Sigma_in U^T + (e^{-2r}/4) E_s E_s^T.
inline Mat predicted_output_covariance(const CaseSolution& sol, const ClusterModel& model, const Mat& sigma_in,
                                       double r) {
  if (sigma_in.rows() != sol.u_tilde.cols()) throw Error(ErrorCode::DimensionMismatch, "input covariance size");
  const Mat es = effective_error_on_ys(sol, model);
  return sol.u_tilde * sigma_in * sol.u_tilde.transpose() + 0.25 * std::exp(-2.0 * r) * es * es.transpose();
}

}  // namespace owqc
