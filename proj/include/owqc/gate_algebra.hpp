#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "owqc/matrix_core.hpp"

namespace owqc {

inline constexpr double kPi = std::numbers::pi;

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline Mat cz_of(const Mat& w) {
  if (w.rows() != w.cols()) throw Error(ErrorCode::InvalidWeight, "CZ weight matrix must be square");
  if (max_abs(w - w.transpose()) > 0.0) throw Error(ErrorCode::InvalidWeight, "CZ weight matrix must be symmetric");
  if (max_abs(w.diagonal()) > 0.0) throw Error(ErrorCode::InvalidWeight, "CZ weight matrix must have zero diagonal");
  const Eigen::Index m = w.rows();
  return block2(Mat::Identity(m, m), Mat::Zero(m, m), w, Mat::Identity(m, m));
}

// Lower shear [[I,0],[W,I]] without the zero-diagonal requirement.
inline Mat shear_of(const Mat& w) {
  const Eigen::Index m = w.rows();
  return block2(Mat::Identity(m, m), Mat::Zero(m, m), w, Mat::Identity(m, m));
}

inline Mat squeeze_of(const Vec& r) {
  const Eigen::Index m = r.size();
  Mat s = Mat::Zero(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s(i, i) = std::exp(-r(i));
    s(m + i, m + i) = std::exp(r(i));
  }
  return s;
}

inline Mat rotate_of(const Vec& theta) {
  const Eigen::Index m = theta.size();
  Mat r = Mat::Zero(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double c = std::cos(theta(i)), s = std::sin(theta(i));
    r(i, i) = c;
    r(i, m + i) = -s;
    r(m + i, i) = s;
    r(m + i, m + i) = c;
  }
  return r;
}

inline Mat squeeze_of(double r) { return squeeze_of(Vec::Constant(1, r)); }
inline Mat rotate_of(double theta) { return rotate_of(Vec::Constant(1, theta)); }

inline void check_theta_minus(const Vec& theta_minus) {
  for (Eigen::Index i = 0; i < theta_minus.size(); ++i)
    if (std::abs(std::sin(theta_minus(i))) < 1e-12)
      throw Error(ErrorCode::DegenerateAngles, "sin(theta_minus) vanishes");
}

// [[cos T- + cos T+, sin T+], [-sin T+, cos T+ - cos T-]] csc T-, per mode.
inline Mat phi_of(const Vec& theta_plus, const Vec& theta_minus) {
  if (theta_plus.size() != theta_minus.size())
    throw Error(ErrorCode::DimensionMismatch, "theta_plus and theta_minus lengths differ");
  check_theta_minus(theta_minus);
  const Eigen::Index m = theta_plus.size();
  Mat f = Mat::Zero(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double tp = theta_plus(i), tm = theta_minus(i), csc = 1.0 / std::sin(tm);
    f(i, i) = (std::cos(tm) + std::cos(tp)) * csc;
    f(i, m + i) = std::sin(tp) * csc;
    f(m + i, i) = -std::sin(tp) * csc;
    f(m + i, m + i) = (std::cos(tp) - std::cos(tm)) * csc;
  }
  return f;
}

// R(-T+/2) S(ln tan(T-/2)) R(-T+/2); a negative tangent contributes R(pi).
inline Mat phi_rsr(const Vec& theta_plus, const Vec& theta_minus) {
  check_theta_minus(theta_minus);
  const Eigen::Index m = theta_plus.size();
  Vec lg(m), flip(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = std::tan(0.5 * theta_minus(i));
    lg(i) = std::log(std::abs(t));
    flip(i) = t < 0 ? kPi : 0.0;
  }
  const Mat half = rotate_of(Vec(-0.5 * theta_plus));
  return half * rotate_of(flip) * squeeze_of(lg) * half;
}

inline Mat phi_of(double theta_plus, double theta_minus) {
  return phi_of(Vec::Constant(1, theta_plus), Vec::Constant(1, theta_minus));
}

struct EulerFactors {
  double phi1 = 0.0;
  double r = 0.0;
  double phi2 = 0.0;

  Mat reconstruct() const { return rotate_of(phi1) * squeeze_of(r) * rotate_of(phi2); }
};

// M = R(phi1) S(r) R(phi2), r >= 0, phi2 in (-pi/2, pi/2], phi2 = 0 when r = 0.
inline EulerFactors euler_decompose(const Mat& m) {
  if (m.rows() != 2 || m.cols() != 2) throw Error(ErrorCode::DimensionMismatch, "euler_decompose needs a 2x2 matrix");
  if (!m.allFinite() || symplectic_defect(m) > 1e-8 * std::max(1.0, m.squaredNorm()))
    throw Error(ErrorCode::DecompositionFailure, "matrix is not symplectic");
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double s1 = svd.singularValues()(0), s2 = svd.singularValues()(1);
  EulerFactors f;
  f.r = 0.5 * std::log(s1 / s2);
  if (f.r < 1e-10) {
    f.r = 0.0;
    f.phi1 = wrap_angle(std::atan2(m(1, 0) - m(0, 1), m(0, 0) + m(1, 1)));
    return f;
  }
  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  Mat u = svd.matrixU() * swap, v = svd.matrixV() * swap;
  if (u.determinant() < 0) {
    u.col(1) *= -1.0;
    v.col(1) *= -1.0;
  }
  f.phi1 = std::atan2(u(1, 0), u(0, 0));
  f.phi2 = std::atan2(v(0, 1), v(0, 0));
  if (f.phi2 > kPi / 2 || f.phi2 <= -kPi / 2) {
    f.phi1 += kPi;
    f.phi2 += kPi;
  }
  f.phi1 = wrap_angle(f.phi1);
  f.phi2 = wrap_angle(f.phi2);
  return f;
}

struct FourNodeAngles {
  double theta3 = 0.0;
  double theta4 = 0.0;
  double theta_plus = 0.0;
  double theta_minus = kPi / 2;
};

// Measured-node factor W_j of the four-node templates, Ũ_j = W_j Φ.
// Template phases are the negated homodyne phases of the measured-only nodes.
inline Mat four_node_core(int j, double theta3, double theta4) {
  const double t3 = std::tan(theta3), t4 = std::tan(theta4);
  const double c3 = 1.0 / t3, c4 = 1.0 / t4;
  Mat w(2, 2);
  switch (j) {
    case 1: w << -c4, 1.0 + t3 * c4, -1.0, t3; break;
    case 2: w << -c3, 1.0, -1.0 - t4 * c3, t4; break;
    case 3: w << 1.0 - c3 * c4, c4, -c3, 1.0; break;
    case 4: w << -1.0, t3, -t4, t3 * t4 - 1.0; break;
    case 5: w << t3 * t4 - 1.0, t4, -t3, -1.0; break;
    default: throw Error(ErrorCode::DimensionMismatch, "config id must be 1..5");
  }
  if (!w.allFinite() || max_abs(w) > 1e12)
    throw Error(ErrorCode::DegenerateAngles, "tan/cot singular for this configuration");
  return w;
}

enum class TrigKind { Tan, Cot };

struct FourNodeDecomposition {
  FourNodeAngles angles;
  double phi2 = 0.0;
  TrigKind kind3 = TrigKind::Tan;
  TrigKind kind4 = TrigKind::Tan;
  double residual = 0.0;
};

inline constexpr std::array<std::array<TrigKind, 2>, 5> kFourNodeTrig{{
    {TrigKind::Tan, TrigKind::Cot},
    {TrigKind::Cot, TrigKind::Tan},
    {TrigKind::Cot, TrigKind::Cot},
    {TrigKind::Tan, TrigKind::Tan},
    {TrigKind::Tan, TrigKind::Tan},
}};

inline int four_node_l(int j) { return (j == 2 || j == 4) ? 1 : 0; }
inline int four_node_p(int j) { return (j == 1 || j == 4) ? 1 : 0; }

// Closed-form angles with W_j = R(-l pi/2 + phi1) S(r) R(phi2 - p pi/2) at theta_minus = pi/2.
// The closed forms are written in the linear gain g = e^r.
inline FourNodeDecomposition four_node_angles_for(int j, double phi1, double r, double tol = 1e-9) {
  if (j < 1 || j > 5) throw Error(ErrorCode::DimensionMismatch, "config id must be 1..5");
  const double s = std::sin(phi1), c = std::cos(phi1);
  if (std::abs(s) < 1e-12) throw Error(ErrorCode::OutOfBranch, "sin(phi1) vanishes");
  const double g = std::exp(r), g2 = g * g, g4 = g2 * g2;
  const double csc = 1.0 / s, cot = c / s;
  double rad3 = s * s * (g4 * c * c - g2 + s * s);
  double rad4 = (g2 - 1.0) * s * s * ((g2 + 1.0) * std::cos(2.0 * phi1) + g2 - 1.0);
  const double eps = 1e-13 * std::max(1.0, g4);
  if (rad3 < -eps || rad4 < -eps) throw Error(ErrorCode::OutOfBranch, "angle radicand negative");
  const double q3 = std::sqrt(std::max(rad3, 0.0)), q4 = std::sqrt(std::max(rad4, 0.0));

  const int l = four_node_l(j), p = four_node_p(j);
  const Mat target = rotate_of(-l * kPi / 2 + phi1) * squeeze_of(r);
  std::optional<FourNodeDecomposition> best;

  const auto preferred = kFourNodeTrig[static_cast<std::size_t>(j - 1)];
  std::array<std::array<TrigKind, 2>, 4> kinds{{preferred,
                                                {preferred[0], preferred[1] == TrigKind::Tan ? TrigKind::Cot : TrigKind::Tan},
                                                {preferred[0] == TrigKind::Tan ? TrigKind::Cot : TrigKind::Tan, preferred[1]},
                                                {preferred[0] == TrigKind::Tan ? TrigKind::Cot : TrigKind::Tan,
                                                 preferred[1] == TrigKind::Tan ? TrigKind::Cot : TrigKind::Tan}}};
  auto angle_of = [](TrigKind k, double x) { return k == TrigKind::Tan ? std::atan(x) : std::atan2(1.0, x); };

  for (const auto& kk : kinds)
    for (double sq3 : {1.0, -1.0})
      for (double sq4 : {1.0, -1.0}) {
        const double x3 = csc * sq3 * q3 / g;
        const double x4 = (2.0 * (g4 - 1.0) * cot + std::sqrt(2.0) * g * csc * csc * csc * sq4 * q4) /
                          (2.0 * g4 * cot * cot + 2.0);
        const double phi2_base =
            std::atan2(g * (csc * csc * csc * sq3 * q3 - g * cot), g2 * csc * csc - 1.0);
        for (double sg3 : {1.0, -1.0})
          for (double sg4 : {1.0, -1.0})
            for (double shift : {0.0, kPi}) {
              FourNodeDecomposition d;
              d.angles.theta3 = wrap_angle(angle_of(kk[0], sg3 * x3));
              d.angles.theta4 = wrap_angle(angle_of(kk[1], sg4 * x4));
              d.phi2 = wrap_angle(phi2_base + shift);
              d.kind3 = kk[0];
              d.kind4 = kk[1];
              Mat w;
              try {
                w = four_node_core(j, d.angles.theta3, d.angles.theta4);
              } catch (const Error&) {
                continue;
              }
              d.residual = max_abs(w - target * rotate_of(d.phi2 - p * kPi / 2));
              if (d.residual < tol) return d;
              if (!best || d.residual < best->residual) best = d;
            }
      }
  throw Error(ErrorCode::OutOfBranch,
              "no branch reconstructs the target (best residual " + std::to_string(best ? best->residual : INFINITY) + ")");
}

}  // namespace owqc
