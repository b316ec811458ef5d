#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "owqc/error.hpp"

namespace owqc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kRcondThreshold = 1e-12;

// 2x2 block layout [[q, t], [c, d]].
struct BlockPartition2x2 {
  Mat q, t, c, d;

  Mat compose() const {
    Mat m(q.rows() + c.rows(), q.cols() + t.cols());
    m << q, t, c, d;
    return m;
  }

  void validate() const {
    if (q.rows() != q.cols() || d.rows() != d.cols() || t.rows() != q.rows() ||
        t.cols() != d.cols() || c.rows() != d.rows() || c.cols() != q.cols())
      throw Error(ErrorCode::DimensionMismatch, "blocks do not compose into a square matrix");
  }
};

// Reciprocal condition number estimate in the 1-norm.
inline double rcond(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "rcond of non-square matrix");
  if (a.size() == 0) return 1.0;
  Eigen::PartialPivLU<Mat> lu(a);
  double est = lu.rcond();
  return std::isfinite(est) ? est : 0.0;
}

inline bool is_invertible(const Mat& a) { return rcond(a) >= kRcondThreshold; }

inline Mat checked_inverse(const Mat& a, const char* what) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " not square");
  if (a.size() == 0) return a;
  if (!is_invertible(a)) throw Error(ErrorCode::SingularBlock, std::string(what) + " is numerically singular");
  return Eigen::PartialPivLU<Mat>(a).inverse();
}

// Inverse through the Schur complement of q: H = d - c q^-1 t.
inline Mat blockwise_invert_upper(const BlockPartition2x2& b) {
  b.validate();
  const Mat qi = checked_inverse(b.q, "block Q");
  const Mat h = b.d - b.c * qi * b.t;
  const Mat hi = checked_inverse(h, "Schur complement H");
  const Eigen::Index k = b.q.rows(), j = b.d.rows();
  Mat out(k + j, k + j);
  out.topLeftCorner(k, k) = qi + qi * b.t * hi * b.c * qi;
  out.topRightCorner(k, j) = -qi * b.t * hi;
  out.bottomLeftCorner(j, k) = -hi * b.c * qi;
  out.bottomRightCorner(j, j) = hi;
  return out;
}

// Inverse through the Schur complement of d: Pi = q - t d^-1 c.
inline Mat blockwise_invert_lower(const BlockPartition2x2& b) {
  b.validate();
  const Mat di = checked_inverse(b.d, "block D");
  const Mat pi = b.q - b.t * di * b.c;
  const Mat pii = checked_inverse(pi, "Schur complement Pi");
  const Eigen::Index k = b.q.rows(), j = b.d.rows();
  Mat out(k + j, k + j);
  out.topLeftCorner(k, k) = pii;
  out.topRightCorner(k, j) = -pii * b.t * di;
  out.bottomLeftCorner(j, k) = -di * b.c * pii;
  out.bottomRightCorner(j, j) = di + di * b.c * pii * b.t * di;
  return out;
}

inline Mat symplectic_form(Eigen::Index k) {
  Mat j = Mat::Zero(2 * k, 2 * k);
  j.topRightCorner(k, k).setIdentity();
  j.bottomLeftCorner(k, k) = -Mat::Identity(k, k);
  return j;
}

inline double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// ||M J M^T - J||_inf, element-wise.
inline double symplectic_defect(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw Error(ErrorCode::DimensionMismatch, "symplectic_defect needs a 2k x 2k matrix");
  const Mat j = symplectic_form(m.rows() / 2);
  return max_abs(m * j * m.transpose() - j);
}

inline Mat inv_sqrt_posdef(const Mat& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "inv_sqrt_posdef of non-square matrix");
  if (max_abs(a - a.transpose()) > 1e-12 * std::max(1.0, max_abs(a)))
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Vec& ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() <= tol)
    throw Error(ErrorCode::NotPositiveDefinite, "eigenvalue below tolerance");
  const Mat& v = es.eigenvectors();
  Mat b = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return 0.5 * (b + b.transpose());
}

inline Mat sqrt_posdef(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  const Mat& v = es.eigenvectors();
  Mat b = v * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * v.transpose();
  return 0.5 * (b + b.transpose());
}

// Rows/columns selected by index lists.
template <class Idx>
Mat submatrix(const Mat& a, const Idx& rows, const Idx& cols) {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

inline Mat hstack(std::initializer_list<Mat> parts) {
  Eigen::Index rows = parts.begin()->rows(), cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Mat out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error(ErrorCode::DimensionMismatch, "hstack row mismatch");
    out.middleCols(c, p.cols()) = p;
    c += p.cols();
  }
  return out;
}

inline Mat vstack(std::initializer_list<Mat> parts) {
  Eigen::Index cols = parts.begin()->cols(), rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error(ErrorCode::DimensionMismatch, "vstack column mismatch");
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

inline Mat block2(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
  return vstack({hstack({a, b}), hstack({c, d})});
}

}  // namespace owqc
