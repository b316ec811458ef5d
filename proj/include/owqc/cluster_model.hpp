#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "owqc/matrix_core.hpp"

namespace owqc {

struct ClusterGraph {
  Mat adjacency;

  Eigen::Index n() const { return adjacency.rows(); }

  void validate() const {
    if (adjacency.rows() == 0 || adjacency.rows() != adjacency.cols())
      throw Error(ErrorCode::InvalidGraph, "adjacency must be square and non-empty");
    if (!adjacency.allFinite()) throw Error(ErrorCode::InvalidGraph, "non-finite weight");
    if (max_abs(adjacency - adjacency.transpose()) > 0.0)
      throw Error(ErrorCode::InvalidGraph, "adjacency is not symmetric");
    if (max_abs(adjacency.diagonal()) > 0.0)
      throw Error(ErrorCode::InvalidGraph, "adjacency has a nonzero diagonal");
  }
};

enum class Layout { Case1, Case2, Case3 };

// When outputs equal input_mixed the output is the unmeasured beam-splitter
// port of each mixed node (case 1).
struct NodePartition {
  std::vector<int> input_mixed;
  std::vector<int> outputs;
  std::vector<int> measured_only;

  std::size_t m() const { return input_mixed.size(); }
  std::size_t l() const { return measured_only.size(); }

  Layout layout() const {
    if (outputs == input_mixed) return Layout::Case1;
    return measured_only.empty() ? Layout::Case2 : Layout::Case3;
  }

  void validate(Eigen::Index n) const {
    if (input_mixed.empty()) throw Error(ErrorCode::InvalidPartition, "no input-mixed nodes");
    if (outputs.size() != input_mixed.size())
      throw Error(ErrorCode::InvalidPartition, "need exactly one output per input");
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    auto mark = [&](const std::vector<int>& v) {
      for (int k : v) {
        if (k < 0 || k >= n) throw Error(ErrorCode::InvalidPartition, "node index out of range");
        if (seen[static_cast<std::size_t>(k)]++)
          throw Error(ErrorCode::InvalidPartition, "node assigned to more than one role");
      }
    };
    mark(input_mixed);
    if (layout() != Layout::Case1) mark(outputs);
    mark(measured_only);
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw Error(ErrorCode::InvalidPartition, "partition does not cover every node");
  }

  // Role-reordered node list: mixed, outputs, measured (case 1: mixed, measured).
  std::vector<int> order() const {
    std::vector<int> o = input_mixed;
    if (layout() != Layout::Case1) o.insert(o.end(), outputs.begin(), outputs.end());
    o.insert(o.end(), measured_only.begin(), measured_only.end());
    return o;
  }
};

struct ClusterModel {
  ClusterGraph graph;
  Mat re_u;
  Mat orthogonal_freedom;

  Eigen::Index n() const { return graph.n(); }
  const Mat& a() const { return graph.adjacency; }

  double unitarity_residual() const {
    const Mat i = Mat::Identity(n(), n());
    return max_abs(re_u.transpose() * (i + a() * a()) * re_u - i);
  }

  // (x_s, y_s) -> (X, Y): X = x_r - A y_r, Y = y_r + A x_r with x_r = ReU x_s.
  Mat preparation_map() const {
    const Mat ar = a() * re_u;
    return block2(re_u, -ar, ar, re_u);
  }
};

inline ClusterModel build_cluster(const Mat& adjacency, const std::optional<Mat>& orthogonal_freedom = std::nullopt) {
  ClusterGraph g{adjacency};
  g.validate();
  const Eigen::Index n = g.n();
  Mat o = Mat::Identity(n, n);
  if (orthogonal_freedom) {
    o = *orthogonal_freedom;
    if (o.rows() != n || o.cols() != n) throw Error(ErrorCode::NotOrthogonal, "orthogonal freedom has wrong shape");
    if (max_abs(o.transpose() * o - Mat::Identity(n, n)) > 1e-9)
      throw Error(ErrorCode::NotOrthogonal, "matrix is not orthogonal");
  }
  const Mat i = Mat::Identity(n, n);
  return ClusterModel{g, inv_sqrt_posdef(i + adjacency * adjacency) * o, o};
}

// Block naming. Cases 2/3: 1 = mixed, 2 = outputs, 3 = measured.
// Case 1: A11 = mixed, A12 = mixed x measured, A22 = measured; the *3 blocks are empty.
struct BlockSet {
  Mat a11, a12, a13, a22, a23, a33;
  std::vector<int> order;
  Layout layout = Layout::Case3;

  Mat reassemble() const {
    if (layout == Layout::Case1) return block2(a11, a12, a12.transpose(), a22);
    return vstack({hstack({a11, a12, a13}), hstack({a12.transpose(), a22, a23}),
                   hstack({a13.transpose(), a23.transpose(), a33})});
  }
};

inline BlockSet partition_blocks(const ClusterGraph& g, const NodePartition& p) {
  g.validate();
  p.validate(g.n());
  BlockSet b;
  b.order = p.order();
  b.layout = p.layout();
  const Mat& a = g.adjacency;
  if (b.layout == Layout::Case1) {
    b.a11 = submatrix(a, p.input_mixed, p.input_mixed);
    b.a12 = submatrix(a, p.input_mixed, p.measured_only);
    b.a22 = submatrix(a, p.measured_only, p.measured_only);
    b.a13 = Mat(b.a11.rows(), 0);
    b.a23 = Mat(b.a22.rows(), 0);
    b.a33 = Mat(0, 0);
    return b;
  }
  b.a11 = submatrix(a, p.input_mixed, p.input_mixed);
  b.a12 = submatrix(a, p.input_mixed, p.outputs);
  b.a13 = submatrix(a, p.input_mixed, p.measured_only);
  b.a22 = submatrix(a, p.outputs, p.outputs);
  b.a23 = submatrix(a, p.outputs, p.measured_only);
  b.a33 = submatrix(a, p.measured_only, p.measured_only);
  return b;
}

// N = (A^2 + I) ReU y_s.
inline Mat nullifier_map(const ClusterModel& model) {
  const Eigen::Index n = model.n();
  return (model.a() * model.a() + Mat::Identity(n, n)) * model.re_u;
}

}  // namespace owqc
