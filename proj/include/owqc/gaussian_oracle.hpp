#pragma once

#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "owqc/owqc_engine.hpp"

namespace owqc {

// Quadratures ordered (x_1..x_k, y_1..y_k); vacuum variance 1/4.
struct GaussianState {
  Vec mean;
  Mat cov;
  std::vector<int> labels;  // external mode id per position

  Eigen::Index modes() const { return mean.size() / 2; }

  Eigen::Index position_of(int label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<Eigen::Index>(i);
    throw Error(ErrorCode::DimensionMismatch, "mode " + std::to_string(label) + " not present");
  }
};

inline GaussianState init_squeezed(Eigen::Index n, double r) {
  GaussianState s;
  s.mean = Vec::Zero(2 * n);
  s.cov = Mat::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.cov(i, i) = 0.25 * std::exp(2.0 * r);
    s.cov(n + i, n + i) = 0.25 * std::exp(-2.0 * r);
  }
  for (Eigen::Index i = 0; i < n; ++i) s.labels.push_back(static_cast<int>(i));
  return s;
}

inline GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
  const Eigen::Index na = a.modes(), nb = b.modes(), n = na + nb;
  GaussianState s;
  s.mean = Vec::Zero(2 * n);
  s.cov = Mat::Zero(2 * n, 2 * n);
  auto place = [&](const GaussianState& src, Eigen::Index off, Eigen::Index k) {
    for (Eigen::Index i = 0; i < 2 * k; ++i) {
      const Eigen::Index gi = (i < k ? off + i : n + off + i - k);
      s.mean(gi) = src.mean(i);
      for (Eigen::Index j = 0; j < 2 * k; ++j) s.cov(gi, j < k ? off + j : n + off + j - k) = src.cov(i, j);
    }
  };
  place(a, 0, na);
  place(b, na, nb);
  s.labels = a.labels;
  s.labels.insert(s.labels.end(), b.labels.begin(), b.labels.end());
  return s;
}

inline GaussianState apply_symplectic(const GaussianState& state, const Mat& s) {
  if (s.rows() != state.cov.rows() || s.cols() != state.cov.cols())
    throw Error(ErrorCode::DimensionMismatch, "symplectic size does not match state");
  GaussianState out = state;
  out.mean = s * state.mean;
  out.cov = s * state.cov * s.transpose();
  return out;
}

// Embeds a 2k x 2k map acting on the listed positions.
inline Mat embed(const Mat& s, const std::vector<Eigen::Index>& positions, Eigen::Index n) {
  const auto k = static_cast<Eigen::Index>(positions.size());
  if (s.rows() != 2 * k) throw Error(ErrorCode::DimensionMismatch, "embedded map size");
  Mat full = Mat::Identity(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < 2 * k; ++i) {
    const Eigen::Index gi = i < k ? positions[i] : n + positions[i - k];
    for (Eigen::Index j = 0; j < 2 * k; ++j) full(gi, j < k ? positions[j] : n + positions[j - k]) = s(i, j);
  }
  return full;
}

// a <- (a + b)/sqrt2, b <- (a - b)/sqrt2 on both quadratures.
inline GaussianState beamsplitter_mix(const GaussianState& state, int mode_a, int mode_b) {
  if (mode_a == mode_b) throw Error(ErrorCode::DimensionMismatch, "beam splitter needs distinct modes");
  const double h = 1.0 / std::sqrt(2.0);
  Mat bs(4, 4);
  bs << h, h, 0, 0, h, -h, 0, 0, 0, 0, h, h, 0, 0, h, -h;
  return apply_symplectic(state, embed(bs, {state.position_of(mode_a), state.position_of(mode_b)}, state.modes()));
}

struct HomodyneResult {
  GaussianState state;
  double outcome = 0.0;
  double variance = 0.0;
  Vec cross;  // Cov(state, q) before the mode is removed
  Eigen::Index position = 0;
};

inline Vec homodyne_row(Eigen::Index n, Eigen::Index pos, double angle) {
  Vec h = Vec::Zero(2 * n);
  h(pos) = std::cos(angle);
  h(n + pos) = std::sin(angle);
  return h;
}

inline GaussianState remove_mode(const GaussianState& s, Eigen::Index pos) {
  const Eigen::Index n = s.modes();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    if (i != pos && i != n + pos) keep.push_back(i);
  GaussianState out;
  out.mean = Vec(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) out.mean(static_cast<Eigen::Index>(i)) = s.mean(keep[i]);
  out.cov = submatrix(s.cov, keep, keep);
  out.labels = s.labels;
  out.labels.erase(out.labels.begin() + pos);
  return out;
}

// Measures x cos(angle) + y sin(angle) of `mode` and conditions the rest on it.
template <class Rng = std::mt19937_64>
HomodyneResult homodyne_measure(const GaussianState& state, int mode, double angle, std::optional<double> outcome,
                                Rng* rng = nullptr) {
  const Eigen::Index n = state.modes(), pos = state.position_of(mode);
  const Vec h = homodyne_row(n, pos, angle);
  HomodyneResult res;
  res.position = pos;
  res.variance = h.dot(state.cov * h);
  if (!(res.variance > 1e-300)) throw Error(ErrorCode::DegenerateVariance, "measured quadrature has no variance");
  const double mu = h.dot(state.mean);
  if (outcome) {
    res.outcome = *outcome;
  } else {
    if (!rng) throw Error(ErrorCode::DegenerateVariance, "sampling requested without a generator");
    std::normal_distribution<double> nd(0.0, 1.0);
    res.outcome = mu + std::sqrt(res.variance) * nd(*rng);
  }
  res.cross = state.cov * h;
  GaussianState cond = state;
  cond.mean += res.cross * ((res.outcome - mu) / res.variance);
  cond.cov -= res.cross * res.cross.transpose() / res.variance;
  res.state = remove_mode(cond, pos);
  return res;
}

// Symplectic eigenvalues of a covariance matrix in (x.., y..) ordering.
inline Vec symplectic_eigenvalues(const Mat& cov) {
  const Eigen::Index n = cov.rows() / 2;
  Eigen::EigenSolver<Mat> es(symplectic_form(n) * cov);
  std::vector<double> v;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) v.push_back(std::abs(es.eigenvalues()(i).imag()));
  std::sort(v.begin(), v.end());
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = v[static_cast<std::size_t>(2 * i)];
  return out;
}

enum class OracleMode { MonteCarlo, CovarianceExact };

struct SchemeProgram {
  ClusterModel model;
  NodePartition partition;
  MeasurementAngles angles;
  Vec input_mean;
  Mat input_covariance;
  double squeezing = 0.0;  // r of every cluster oscillator
};

struct OracleOutput {
  Vec mean;
  Mat covariance;
  Mat covariance_stderr;  // Monte-Carlo only
  Vec mean_stderr;        // Monte-Carlo only
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  OracleMode mode = OracleMode::CovarianceExact;
  Mat feedforward_gain;
};

namespace detail {

struct Prepared {
  GaussianState state;                                // after preparation and beam splitters
  std::vector<std::pair<int, double>> measurements;  // (mode label, angle) in homodyne-system order
  std::vector<int> output_modes;
  Mat gain;
};

inline Prepared prepare_program(const SchemeProgram& prog) {
  const ClusterModel& model = prog.model;
  const NodePartition& p = prog.partition;
  p.validate(model.n());
  const auto m = static_cast<Eigen::Index>(p.m());
  const Eigen::Index n = model.n();
  if (prog.input_covariance.rows() != 2 * m || prog.input_covariance.cols() != 2 * m)
    throw Error(ErrorCode::DimensionMismatch, "input covariance must be 2m x 2m");

  GaussianState input;
  input.mean = prog.input_mean.size() ? prog.input_mean : Vec::Zero(2 * m);
  input.cov = prog.input_covariance;
  for (Eigen::Index i = 0; i < m; ++i) input.labels.push_back(static_cast<int>(i));
  GaussianState cluster = init_squeezed(n, prog.squeezing);
  for (Eigen::Index k = 0; k < n; ++k) cluster.labels[static_cast<std::size_t>(k)] = static_cast<int>(m + k);
  cluster = apply_symplectic(cluster, model.preparation_map());

  Prepared pr;
  pr.state = direct_sum(input, cluster);
  const bool case1 = p.layout() == Layout::Case1;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int node = static_cast<int>(m) + p.input_mixed[static_cast<std::size_t>(i)];
    pr.state = beamsplitter_mix(pr.state, static_cast<int>(i), node);
    pr.measurements.emplace_back(static_cast<int>(i), prog.angles.theta_sum(i));
    if (!case1) pr.measurements.emplace_back(node, prog.angles.theta_diff(i));
  }
  for (std::size_t j = 0; j < p.l(); ++j)
    pr.measurements.emplace_back(static_cast<int>(m) + p.measured_only[j],
                                 prog.angles.theta_cluster(static_cast<Eigen::Index>(j)));
  for (std::size_t i = 0; i < p.m(); ++i)
    pr.output_modes.push_back(static_cast<int>(m) + (case1 ? p.input_mixed[i] : p.outputs[i]));
  pr.gain = homodyne_system(model, p, prog.angles).gain;
  return pr;
}

// Rows selecting the measured quadratures and the output quadratures.
inline void selection_rows(const Prepared& pr, Mat& q_rows, Mat& o_rows) {
  const GaussianState& s = pr.state;
  const Eigen::Index n = s.modes();
  q_rows = Mat::Zero(static_cast<Eigen::Index>(pr.measurements.size()), 2 * n);
  for (std::size_t k = 0; k < pr.measurements.size(); ++k)
    q_rows.row(static_cast<Eigen::Index>(k)) =
        homodyne_row(n, s.position_of(pr.measurements[k].first), pr.measurements[k].second).transpose();
  const auto mo = static_cast<Eigen::Index>(pr.output_modes.size());
  o_rows = Mat::Zero(2 * mo, 2 * n);
  for (Eigen::Index i = 0; i < mo; ++i) {
    const Eigen::Index pos = s.position_of(pr.output_modes[static_cast<std::size_t>(i)]);
    o_rows(i, pos) = 1.0;
    o_rows(mo + i, n + pos) = 1.0;
  }
}

// Output quadratures of the conditioned state, in output order.
inline Mat output_selector(const GaussianState& s, const std::vector<int>& outputs) {
  const Eigen::Index n = s.modes(), mo = static_cast<Eigen::Index>(outputs.size());
  Mat sel = Mat::Zero(2 * mo, 2 * n);
  for (Eigen::Index i = 0; i < mo; ++i) {
    const Eigen::Index pos = s.position_of(outputs[static_cast<std::size_t>(i)]);
    sel(i, pos) = 1.0;
    sel(mo + i, n + pos) = 1.0;
  }
  return sel;
}

}  // namespace detail

// Exact mode: sequential conditioning at zero gives Sigma_c; the feedforward
// -G q adds (K - G) Cov(q) (K - G)^T with K the conditional-mean gain.
inline OracleOutput simulate_exact(const SchemeProgram& prog) {
  const detail::Prepared pr = detail::prepare_program(prog);
  Mat q_rows, o_rows;
  detail::selection_rows(pr, q_rows, o_rows);
  const Mat& sig = pr.state.cov;
  const Mat s_qq = q_rows * sig * q_rows.transpose();
  const Mat s_oq = o_rows * sig * q_rows.transpose();
  const Mat k = s_oq * checked_inverse(s_qq, "measured covariance");

  GaussianState st = pr.state;
  st.mean.setZero();
  for (const auto& [mode, angle] : pr.measurements) st = homodyne_measure(st, mode, angle, 0.0).state;
  const Mat sel = detail::output_selector(st, pr.output_modes);
  const Mat sigma_c = sel * st.cov * sel.transpose();

  OracleOutput out;
  out.mode = OracleMode::CovarianceExact;
  out.feedforward_gain = pr.gain;
  const Mat d = k - pr.gain;
  out.covariance = sigma_c + d * s_qq * d.transpose();
  out.mean = o_rows * pr.state.mean - pr.gain * (q_rows * pr.state.mean);
  return out;
}

inline OracleOutput simulate_monte_carlo(const SchemeProgram& prog, std::size_t samples, std::uint64_t seed,
                                         unsigned streams = 0) {
  if (samples < 2) throw Error(ErrorCode::DimensionMismatch, "need at least two samples");
  const detail::Prepared pr = detail::prepare_program(prog);

  // Conditioning chain; conditional covariances do not depend on outcomes.
  struct Step {
    Eigen::Index pos;
    Vec h, cross;
    double var;
  };
  std::vector<Step> chain;
  GaussianState st = pr.state;
  for (const auto& [mode, angle] : pr.measurements) {
    HomodyneResult r = homodyne_measure(st, mode, angle, 0.0);
    chain.push_back({r.position, homodyne_row(st.modes(), r.position, angle), r.cross, r.variance});
    st = r.state;
  }
  const Mat sel = detail::output_selector(st, pr.output_modes);
  const Mat sigma_c = sel * st.cov * sel.transpose();
  const Mat chol = sqrt_posdef(sigma_c);
  const Eigen::Index dim = sigma_c.rows();
  const auto nq = static_cast<Eigen::Index>(pr.measurements.size());

  if (streams == 0) streams = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<Mat> raw(streams);
  auto run = [&](unsigned w) {
    const std::size_t begin = samples * w / streams, end = samples * (w + 1) / streams;
    std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(w)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat block(dim, static_cast<Eigen::Index>(end - begin));
    Vec q(nq), xi(dim);
    for (std::size_t t = begin; t < end; ++t) {
      GaussianState cur;
      Vec mean = pr.state.mean;
      Eigen::Index nmodes = pr.state.modes();
      for (Eigen::Index k = 0; k < nq; ++k) {
        const Step& s = chain[static_cast<std::size_t>(k)];
        const double mu = s.h.dot(mean);
        q(k) = mu + std::sqrt(s.var) * nd(rng);
        mean += s.cross * ((q(k) - mu) / s.var);
        Vec next(2 * (nmodes - 1));
        Eigen::Index c = 0;
        for (Eigen::Index i = 0; i < 2 * nmodes; ++i)
          if (i != s.pos && i != nmodes + s.pos) next(c++) = mean(i);
        mean = next;
        --nmodes;
      }
      for (Eigen::Index i = 0; i < dim; ++i) xi(i) = nd(rng);
      block.col(static_cast<Eigen::Index>(t - begin)) = sel * mean + chol * xi - pr.gain * q;
    }
    raw[w] = block;
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < streams; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& th : pool) th.join();

  Mat all(dim, static_cast<Eigen::Index>(samples));
  Eigen::Index col = 0;
  for (unsigned w = 0; w < streams; ++w) {
    all.middleCols(col, raw[w].cols()) = raw[w];
    col += raw[w].cols();
  }
  const double nn = static_cast<double>(samples);
  OracleOutput out;
  out.mode = OracleMode::MonteCarlo;
  out.samples = samples;
  out.seed = seed;
  out.feedforward_gain = pr.gain;
  out.mean = all.rowwise().mean();
  const Mat centered = all.colwise() - out.mean;
  out.covariance = centered * centered.transpose() / (nn - 1.0);
  out.mean_stderr = (out.covariance.diagonal() / nn).cwiseSqrt();
  out.covariance_stderr = Mat(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Eigen::ArrayXd prod = centered.row(i).array() * centered.row(j).array();
      const double mu = prod.mean();
      out.covariance_stderr(i, j) = std::sqrt((prod - mu).square().sum() / (nn - 1.0) / nn);
    }
  return out;
}

inline OracleOutput simulate_owqc(const SchemeProgram& prog, OracleMode mode, std::size_t samples = 100000,
                                  std::uint64_t seed = 1) {
  return mode == OracleMode::CovarianceExact ? simulate_exact(prog) : simulate_monte_carlo(prog, samples, seed);
}

struct DefectReport {
  double defect = 0.0;           // max-abs covariance deviation
  double relative_defect = 0.0;  // defect / max-abs predicted entry
  double max_sigma_ratio = 0.0;  // Monte-Carlo: max |deviation| / stderr
  double tolerance = 0.0;
  bool pass = false;
  Mat predicted;
  Mat simulated;
};

// Exact mode passes on defect < tolerance; Monte-Carlo mode on every entry within `sigmas` standard errors.
inline DefectReport compare_with_analytic(const CaseSolution& sol, const ClusterModel& model, const SchemeProgram& prog,
                                          const OracleOutput& sim, double tolerance, double sigmas = 3.0) {
  DefectReport rep;
  rep.tolerance = tolerance;
  rep.predicted = predicted_output_covariance(sol, model, prog.input_covariance, prog.squeezing);
  rep.simulated = sim.covariance;
  if (rep.predicted.rows() != sim.covariance.rows()) throw Error(ErrorCode::DimensionMismatch, "output sizes differ");
  const Mat diff = sim.covariance - rep.predicted;
  rep.defect = max_abs(diff);
  rep.relative_defect = rep.defect / std::max(max_abs(rep.predicted), 1e-300);
  if (sim.mode == OracleMode::CovarianceExact) {
    rep.pass = rep.defect < tolerance;
  } else {
    for (Eigen::Index i = 0; i < diff.rows(); ++i)
      for (Eigen::Index j = 0; j < diff.cols(); ++j)
        rep.max_sigma_ratio = std::max(rep.max_sigma_ratio, std::abs(diff(i, j)) / sim.covariance_stderr(i, j));
    rep.pass = rep.max_sigma_ratio <= sigmas;
  }
  return rep;
}

}  // namespace owqc
