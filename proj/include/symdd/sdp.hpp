#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "symdd/core.hpp"

namespace symdd {

/// One affine matrix constraint F0 + sum_i v_i * Fi  >= 0 (PSD).
struct LmiBlock {
  Mat F0;
  std::vector<Mat> Fi;  // one symmetric matrix per scalar variable
};

struct SdpOptions {
  double gap_tol = 1e-8;      // stop when barrier duality gap <= gap_tol * max(1,|obj|)
  double tau0 = 1.0;
  double tau_mult = 10.0;
  int max_newton = 200;
  double newton_tol = 1e-10;  // Newton decrement^2 / 2
  double feas_margin = 1e-6;  // required strict margin at end of phase 1
};

struct SdpResult {
  bool feasible = false;
  Vec v;
  double objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
};

class infeasible_error : public error {
 public:
  infeasible_error(const std::string& what, double best_margin)
      : error(what), best_margin(best_margin) {}
  double best_margin;  // largest achieved min-eigenvalue over blocks
};

namespace detail_sdp {

inline Mat block_value(const LmiBlock& b, const Vec& v) {
  Mat B = b.F0;
  for (size_t i = 0; i < b.Fi.size(); ++i) B += v[static_cast<Eigen::Index>(i)] * b.Fi[i];
  return B;
}

inline double min_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool all_pd(const std::vector<LmiBlock>& blocks, const Vec& v) {
  for (const auto& b : blocks) {
    Eigen::LLT<Mat> llt(block_value(b, v));
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

inline double barrier_objective(const std::vector<LmiBlock>& blocks, const Vec& c,
                                const Vec& v, double tau) {
  double obj = tau * c.dot(v);
  for (const auto& b : blocks) {
    Eigen::LLT<Mat> llt(block_value(b, v));
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    // -log det B = -2 * sum log diag(L)
    double logdet = 0.0;
    const Mat& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += std::log(L(i, i));
    obj -= 2.0 * logdet;
  }
  return obj;
}

/// Damped Newton minimization of tau*c'v - sum log det B_j(v).
/// Returns false if progress stalls before reaching the tolerance.
inline bool newton_center(const std::vector<LmiBlock>& blocks, const Vec& c, Vec& v,
                          double tau, const SdpOptions& opts) {
  const Eigen::Index d = v.size();
  for (int it = 0; it < opts.max_newton; ++it) {
    Vec g = tau * c;
    Mat H = Mat::Zero(d, d);
    for (const auto& b : blocks) {
      const Mat B = block_value(b, v);
      Eigen::LLT<Mat> llt(B);
      if (llt.info() != Eigen::Success) return false;
      const Mat Binv = llt.solve(Mat::Identity(B.rows(), B.cols()));
      std::vector<Mat> W(b.Fi.size());
      for (size_t i = 0; i < b.Fi.size(); ++i) {
        W[i] = Binv * b.Fi[i];
        g[static_cast<Eigen::Index>(i)] -= W[i].trace();
      }
      for (size_t i = 0; i < b.Fi.size(); ++i)
        for (size_t k = i; k < b.Fi.size(); ++k) {
          const double h = (W[i] * W[k]).trace();
          H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += h;
          if (k != i) H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) += h;
        }
    }
    // small ridge keeps the factorization stable when directions are flat
    H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Mat> ldlt(H);
    const Vec dv = ldlt.solve(-g);
    const double decrement = -0.5 * g.dot(dv);
    if (!(decrement > opts.newton_tol)) return true;
    const double f0 = barrier_objective(blocks, c, v, tau);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec vt = v + step * dv;
      const double ft = barrier_objective(blocks, c, vt, tau);
      if (ft < f0 - 1e-4 * step * (-g.dot(dv))) {
        v = vt;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return true;  // stalled at numerical precision
  }
  return true;
}

}  // namespace detail_sdp

/// Largest s such that B_j(v) - s*I >= 0 for all blocks at the given point.
inline double lmi_margin(const std::vector<LmiBlock>& blocks, const Vec& v) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) m = std::min(m, detail_sdp::min_eig(detail_sdp::block_value(b, v)));
  return m;
}

/// Phase-1: find v with all blocks strictly positive definite, by minimizing
/// an added slack s over {B_j(v) + s*I >= 0}.  Throws if the best achievable
/// margin is not strictly positive.
inline Vec sdp_find_strictly_feasible(const std::vector<LmiBlock>& blocks, Eigen::Index d,
                                      const SdpOptions& opts = {}) {
  std::vector<LmiBlock> aug(blocks.size());
  for (size_t j = 0; j < blocks.size(); ++j) {
    aug[j].F0 = blocks[j].F0;
    aug[j].Fi = blocks[j].Fi;
    aug[j].Fi.push_back(Mat::Identity(blocks[j].F0.rows(), blocks[j].F0.cols()));
  }
  Vec v = Vec::Zero(d + 1);
  double m0 = lmi_margin(blocks, v.head(d));
  v[d] = -m0 + 1.0;
  Vec c = Vec::Zero(d + 1);
  c[d] = 1.0;
  for (double tau = opts.tau0; tau <= 1e10; tau *= opts.tau_mult) {
    if (!detail_sdp::newton_center(aug, c, v, tau, opts))
      throw infeasible_error("sdp phase 1: centering failed", lmi_margin(blocks, v.head(d)));
    // feasible as soon as the original blocks are comfortably PD
    if (lmi_margin(blocks, v.head(d)) > opts.feas_margin) return v.head(d);
  }
  const double best = lmi_margin(blocks, v.head(d));
  throw infeasible_error("sdp phase 1: no strictly feasible point (best margin " +
                             format_double(best) + ")",
                         best);
}

/// Minimize c'v subject to affine PSD blocks, via log-det barrier path
/// following from a strictly feasible start.
inline SdpResult sdp_minimize(const std::vector<LmiBlock>& blocks, const Vec& c,
                              const Vec& v0, const SdpOptions& opts = {}) {
  Vec v = v0;
  int total_dim = 0;
  for (const auto& b : blocks) total_dim += static_cast<int>(b.F0.rows());
  SdpResult res;
  for (double tau = opts.tau0; ; tau *= opts.tau_mult) {
    detail_sdp::newton_center(blocks, c, v, tau, opts);
    res.v = v;
    res.objective = c.dot(v);
    res.gap = total_dim / tau;
    if (res.gap <= opts.gap_tol * std::max(1.0, std::abs(res.objective))) break;
    if (tau > 1e16) break;
  }
  res.feasible = detail_sdp::all_pd(blocks, res.v);
  return res;
}

/// Convenience: phase-1 followed by minimization.
inline SdpResult sdp_solve(const std::vector<LmiBlock>& blocks, const Vec& c,
                           const SdpOptions& opts = {}) {
  const Eigen::Index d = c.size();
  const Vec v0 = sdp_find_strictly_feasible(blocks, d, opts);
  return sdp_minimize(blocks, c, v0, opts);
}

}  // namespace symdd
