#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symdd/core.hpp"
#include "symdd/data.hpp"
#include "symdd/plant.hpp"
#include "symdd/poly.hpp"
#include "symdd/sdp.hpp"

namespace symdd {

/// Linear-equality system tying the decision variables
///   Xi (sym n x n), Theta (n x n), Y1/Y2 coefficient blocks (T x n per basis
/// element) together:  M*Y1_k = Ups_k*Xi,  O+*Y1_k = [k constant]*Theta, and
/// the same for the second trajectory.  All equalities are homogeneous, so
/// the solution set is the kernel of one dense matrix.
struct ConstraintSystem {
  int n = 0;
  int T = 0;
  int M = 0;
  std::vector<Monomial> basis;  // constant first, then graded-lex
  MonomialDictionary dict;
  PolynomialMatrix upsilon;
  Mat Mmat1, Mmat2;    // M x T lifted data
  Mat Oplus1, Oplus2;  // n x T successors
  Mat E;               // equality matrix, E z = 0
  Mat kernel;          // orthonormal null-space basis of E
  std::map<std::string, std::pair<int, int>> groups;  // row ranges per condition

  int K() const { return static_cast<int>(basis.size()); }
  int num_xi() const { return n * (n + 1) / 2; }
  int num_variables() const { return num_xi() + n * n + 2 * K() * T * n; }

  int idx_xi(int i, int j) const {
    if (i > j) std::swap(i, j);
    // row-major upper triangle
    return i * n - i * (i - 1) / 2 + (j - i);
  }
  int idx_theta(int i, int j) const { return num_xi() + i * n + j; }
  int idx_y(int traj, int k, int r, int c) const {
    return num_xi() + n * n + traj * K() * T * n + (k * T + r) * n + c;
  }

  Mat extract_xi(const Vec& z) const {
    Mat Xi(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Xi(i, j) = z[idx_xi(i, j)];
    return Xi;
  }
  Mat extract_theta(const Vec& z) const {
    Mat Th(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Th(i, j) = z[idx_theta(i, j)];
    return Th;
  }
  PolynomialMatrix extract_y(int traj, const Vec& z) const {
    PolynomialMatrix Y;
    Y.rows = T;
    Y.cols = n;
    Y.nvars = n;
    Y.basis = basis;
    Y.coeffs.assign(basis.size(), Mat::Zero(T, n));
    for (int k = 0; k < K(); ++k)
      for (int r = 0; r < T; ++r)
        for (int c = 0; c < n; ++c) Y.coeffs[static_cast<size_t>(k)](r, c) = z[idx_y(traj, k, r, c)];
    return Y;
  }

  /// Max |E z| per condition group.
  std::map<std::string, double> residuals(const Vec& z) const {
    std::map<std::string, double> out;
    const Vec r = E * z;
    for (const auto& [name, range] : groups) {
      double mx = 0.0;
      for (int i = range.first; i < range.second; ++i) mx = std::max(mx, std::abs(r[i]));
      out[name] = mx;
    }
    return out;
  }
};

class assembly_error : public error {
 public:
  explicit assembly_error(const std::string& what) : error(what) {}
};

inline ConstraintSystem assemble_constraints(const MonomialDictionary& dict,
                                             const PolynomialMatrix& upsilon,
                                             const DataMatrices& dm1,
                                             const TrajectoryBatch& b1,
                                             const DataMatrices& dm2,
                                             const TrajectoryBatch& b2,
                                             const std::vector<Monomial>& basis) {
  if (b1.T != b2.T) throw assembly_error("assemble_constraints: trajectory horizons differ");
  if (!check_rank(dm1, dict.size(), b1.T).pass || !check_rank(dm2, dict.size(), b2.T).pass)
    throw assembly_error("assemble_constraints: data matrices do not pass the rank check");

  ConstraintSystem cs;
  cs.n = dict.n;
  cs.T = b1.T;
  cs.M = dict.size();
  cs.basis = basis;
  cs.dict = dict;
  cs.upsilon = upsilon;
  cs.Mmat1 = dm1.Mmat;
  cs.Mmat2 = dm2.Mmat;
  cs.Oplus1 = b1.Oplus;
  cs.Oplus2 = b2.Oplus;

  // Upsilon coefficient matrix per declared basis element; every monomial
  // actually present in Upsilon must appear in the basis.
  const int K = cs.K();
  std::vector<Mat> ups_k(static_cast<size_t>(K), Mat::Zero(cs.M, cs.n));
  for (size_t ku = 0; ku < upsilon.basis.size(); ++ku) {
    if (upsilon.coeffs[ku].isZero(0.0)) continue;
    const auto it = std::find(basis.begin(), basis.end(), upsilon.basis[ku]);
    if (it == basis.end())
      throw assembly_error("assemble_constraints: basis missing monomial " +
                           upsilon.basis[ku].to_string() + " present in Upsilon");
    ups_k[static_cast<size_t>(it - basis.begin())] = upsilon.coeffs[ku];
  }
  if (basis.empty() || basis[0].degree() != 0)
    throw assembly_error("assemble_constraints: basis must start with the constant term");

  const int nvars = cs.num_variables();
  const int rows_a = K * cs.M * cs.n;  // per trajectory
  const int rows_c = K * cs.n * cs.n;  // per trajectory
  cs.E = Mat::Zero(2 * rows_a + 2 * rows_c, nvars);

  int row = 0;
  const auto emit_data_eqs = [&](int traj, const Mat& Mmat, const char* name) {
    const int begin = row;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < cs.M; ++i)
        for (int j = 0; j < cs.n; ++j) {
          for (int r = 0; r < cs.T; ++r) cs.E(row, cs.idx_y(traj, k, r, j)) = Mmat(i, r);
          for (int l = 0; l < cs.n; ++l) cs.E(row, cs.idx_xi(l, j)) -= ups_k[static_cast<size_t>(k)](i, l);
          ++row;
        }
    cs.groups[name] = {begin, row};
  };
  const auto emit_theta_eqs = [&](int traj, const Mat& Oplus, const char* name) {
    const int begin = row;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < cs.n; ++i)
        for (int j = 0; j < cs.n; ++j) {
          for (int r = 0; r < cs.T; ++r) cs.E(row, cs.idx_y(traj, k, r, j)) = Oplus(i, r);
          if (k == 0) cs.E(row, cs.idx_theta(i, j)) -= 1.0;
          ++row;
        }
    cs.groups[name] = {begin, row};
  };
  emit_data_eqs(0, cs.Mmat1, "12a");
  emit_data_eqs(1, cs.Mmat2, "12b");
  emit_theta_eqs(0, cs.Oplus1, "12c");
  emit_theta_eqs(1, cs.Oplus2, "12d");

  // orthonormal kernel via SVD
  Eigen::JacobiSVD<Mat> svd(cs.E, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = (sv.size() ? sv[0] : 0.0) *
                     std::max(cs.E.rows(), cs.E.cols()) *
                     std::numeric_limits<double>::epsilon();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  cs.kernel = svd.matrixV().rightCols(nvars - rank);
  return cs;
}

/// Verified feasibility point of the data-driven program, together with the
/// measured equality residuals and the margin of the contraction LMI.
struct AsfCertificate {
  int n = 0;
  int T = 0;
  double gamma = 0.0;
  double mu = 0.0;
  Mat Xi;
  Mat P;  // Xi^{-1}
  Mat Theta;
  PolynomialMatrix Y1;  // T x n, function of x
  PolynomialMatrix Y2;  // T x n, function of xhat
  MonomialDictionary dict;
  std::map<std::string, double> residuals;
  double lmi_margin = 0.0;

  double max_residual() const {
    double r = 0.0;
    for (const auto& [k, v] : residuals) r = std::max(r, v);
    return r;
  }
};

inline Mat contraction_block(const Mat& Xi, const Mat& Theta, double gamma, double mu) {
  const int n = static_cast<int>(Xi.rows());
  Mat G = Mat::Zero(2 * n, 2 * n);
  G.topLeftCorner(n, n) = Xi / (1.0 + mu);
  G.topRightCorner(n, n) = Theta;
  G.bottomLeftCorner(n, n) = Theta.transpose();
  G.bottomRightCorner(n, n) = gamma * Xi;
  return G;
}

struct SolveOptions {
  SdpOptions sdp;
  /// After the main solve, keep Xi fixed and re-center Theta at the smallest
  /// achievable contraction factor.  Tightens the closed-loop error without
  /// touching the certified gamma.
  bool refine_theta = true;
  double equality_tol = 1e-7;
};

namespace detail_cert {

/// Kernel of [E; rows fixing the Xi variables], as (particular, basis) with
/// the particular solution taken from a known feasible z.
inline Mat xi_fixed_kernel(const ConstraintSystem& cs) {
  const int nvars = cs.num_variables();
  Mat Efix = Mat::Zero(cs.E.rows() + cs.num_xi(), nvars);
  Efix.topRows(cs.E.rows()) = cs.E;
  for (int s = 0; s < cs.num_xi(); ++s) Efix(cs.E.rows() + s, s) = 1.0;
  Eigen::JacobiSVD<Mat> svd(Efix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = (sv.size() ? sv[0] : 0.0) *
                     std::max(Efix.rows(), Efix.cols()) *
                     std::numeric_limits<double>::epsilon();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  return svd.matrixV().rightCols(nvars - rank);
}

/// Minimize s subject to [[Xi/(1+mu), Theta(w)], [*, s*Xi]] >= 0 over the
/// residual freedom in (Theta, Y1, Y2) with Xi pinned.  Returns the refined z.
inline Vec refine_theta(const ConstraintSystem& cs, const Vec& z0, double mu,
                        double gamma, const SdpOptions& sdp_opts) {
  const Mat Xi = cs.extract_xi(z0);
  const Mat N2 = xi_fixed_kernel(cs);
  const Eigen::Index d2 = N2.cols();
  const int n = cs.n;

  LmiBlock block;
  block.F0 = Mat::Zero(2 * n, 2 * n);
  block.F0.topLeftCorner(n, n) = Xi / (1.0 + mu);
  const Mat Th0 = cs.extract_theta(z0);
  block.F0.topRightCorner(n, n) = Th0;
  block.F0.bottomLeftCorner(n, n) = Th0.transpose();
  for (Eigen::Index i = 0; i < d2; ++i) {
    const Mat Thi = cs.extract_theta(N2.col(i));
    Mat F = Mat::Zero(2 * n, 2 * n);
    F.topRightCorner(n, n) = Thi;
    F.bottomLeftCorner(n, n) = Thi.transpose();
    block.Fi.push_back(F);
  }
  {  // trailing variable: the contraction factor s
    Mat F = Mat::Zero(2 * n, 2 * n);
    F.bottomRightCorner(n, n) = Xi;
    block.Fi.push_back(F);
  }

  Vec c = Vec::Zero(d2 + 1);
  c[d2] = 1.0;
  try {
    const SdpResult r = sdp_solve({block}, c, sdp_opts);
    const double s = r.v[d2];
    if (!r.feasible || !(s < gamma)) return z0;
    const Vec z = z0 + N2 * r.v.head(d2);
    // accept only if the certified-gamma LMI still holds
    const Mat G = contraction_block(Xi, cs.extract_theta(z), gamma, mu);
    Eigen::SelfAdjointEigenSolver<Mat> es(G, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) return z0;
    return z;
  } catch (const infeasible_error&) {
    return z0;
  }
}

}  // namespace detail_cert

/// Solve the feasibility program at fixed (gamma, mu).  The positive scale
/// freedom is pinned by Xi >= I; the objective minimizes lambda_max(Xi),
/// which minimizes cond(P) under that normalization.
inline AsfCertificate solve_asf(const ConstraintSystem& cs, double gamma, double mu,
                                const SolveOptions& opts = {}) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw error("solve_asf: gamma must be in (0,1)");
  if (!(mu > 0.0)) throw error("solve_asf: mu must be > 0");
  const Mat& N = cs.kernel;
  const Eigen::Index d = N.cols();
  const int n = cs.n;

  // precompute per-direction slices
  std::vector<Mat> Xi_i(static_cast<size_t>(d)), Th_i(static_cast<size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    Xi_i[static_cast<size_t>(i)] = cs.extract_xi(N.col(i));
    Th_i[static_cast<size_t>(i)] = cs.extract_theta(N.col(i));
  }

  // variables v = (w_0..w_{d-1}, t)
  std::vector<LmiBlock> blocks(3);
  blocks[0].F0 = -Mat::Identity(n, n);  // Xi - I >= 0
  blocks[1].F0 = Mat::Zero(n, n);       // t I - Xi >= 0
  blocks[2].F0 = Mat::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < d; ++i) {
    blocks[0].Fi.push_back(Xi_i[static_cast<size_t>(i)]);
    blocks[1].Fi.push_back(-Xi_i[static_cast<size_t>(i)]);
    Mat G = Mat::Zero(2 * n, 2 * n);
    G.topLeftCorner(n, n) = Xi_i[static_cast<size_t>(i)] / (1.0 + mu);
    G.topRightCorner(n, n) = Th_i[static_cast<size_t>(i)];
    G.bottomLeftCorner(n, n) = Th_i[static_cast<size_t>(i)].transpose();
    G.bottomRightCorner(n, n) = gamma * Xi_i[static_cast<size_t>(i)];
    blocks[2].Fi.push_back(G);
  }
  blocks[0].Fi.push_back(Mat::Zero(n, n));
  blocks[1].Fi.push_back(Mat::Identity(n, n));
  blocks[2].Fi.push_back(Mat::Zero(2 * n, 2 * n));

  Vec c = Vec::Zero(d + 1);
  c[d] = 1.0;

  SdpResult res;
  try {
    res = sdp_solve(blocks, c, opts.sdp);
  } catch (const infeasible_error& e) {
    throw infeasible_error(
        "solve_asf: program infeasible at gamma=" + format_double(gamma) +
            ", mu=" + format_double(mu) +
            " (best margin " + format_double(e.best_margin) +
            "); consider increasing gamma, mu, the horizon, or the basis degree",
        e.best_margin);
  }
  if (!res.feasible)
    throw infeasible_error("solve_asf: solver did not reach a feasible point", 0.0);

  Vec z = cs.kernel * res.v.head(d);
  if (opts.refine_theta) z = detail_cert::refine_theta(cs, z, mu, gamma, opts.sdp);

  AsfCertificate cert;
  cert.n = n;
  cert.T = cs.T;
  cert.gamma = gamma;
  cert.mu = mu;
  cert.Xi = cs.extract_xi(z);
  cert.P = cert.Xi.inverse();
  cert.Theta = cs.extract_theta(z);
  cert.Y1 = cs.extract_y(0, z);
  cert.Y2 = cs.extract_y(1, z);
  cert.dict = cs.dict;
  cert.residuals = cs.residuals(z);
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(
        contraction_block(cert.Xi, cert.Theta, gamma, mu), Eigen::EigenvaluesOnly);
    cert.lmi_margin = es.eigenvalues().minCoeff();
  }
  if (cert.max_residual() > opts.equality_tol)
    throw infeasible_error("solve_asf: equality residuals above tolerance (" +
                               format_double(cert.max_residual()) + ")",
                           cert.lmi_margin);
  return cert;
}

/// Smallest gamma (to tol) at which the program stays feasible, by bisection
/// on phase-1 feasibility.  The LMI is linear in (Xi, Theta) only at fixed
/// gamma, hence the outer search.
inline double find_min_gamma(const ConstraintSystem& cs, double mu, double tol = 1e-3,
                             double lo = 0.0, double hi = 0.999,
                             const SolveOptions& opts = {}) {
  const auto feasible = [&](double g) {
    try {
      (void)solve_asf(cs, g, mu, opts);
      return true;
    } catch (const infeasible_error&) {
      return false;
    }
  };
  if (!feasible(hi)) throw infeasible_error("find_min_gamma: infeasible at gamma=hi", 0.0);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

struct VerificationReport {
  std::map<std::string, double> sampled_violation;  // conditions 12a..12d at random states
  std::map<std::string, double> exact_violation;    // coefficient-level comparison
  double lmi_margin_block = 0.0;
  double lmi_margin_schur = 0.0;
  bool schur_agrees = false;
  bool pass = false;
  double max_violation() const {
    double v = 0.0;
    for (const auto& [k, x] : sampled_violation) v = std::max(v, x);
    for (const auto& [k, x] : exact_violation) v = std::max(v, x);
    return v;
  }
};

/// Independent re-check of the certificate: coefficient-exact comparison,
/// sampled evaluation of the four equalities, and the contraction LMI by two
/// algebraic routes (block eigenvalues and Schur complement).
inline VerificationReport verify_certificate(const AsfCertificate& cert,
                                             const MonomialDictionary& dict,
                                             const PolynomialMatrix& upsilon,
                                             const ConstraintSystem& cs, double gamma,
                                             double mu, int sample_count = 10000,
                                             uint64_t seed = 20240901) {
  VerificationReport rep;
  const auto coeff_err = [](const Mat& a, const Mat& b) {
    return (a - b).cwiseAbs().maxCoeff();
  };
  // exact: per basis element k, M*Y1_k == Ups_k*Xi and O+*Y1_k == [k==0]*Theta
  for (int k = 0; k < cs.K(); ++k) {
    Mat ups_k = Mat::Zero(cs.M, cs.n);
    for (size_t ku = 0; ku < upsilon.basis.size(); ++ku)
      if (upsilon.basis[ku] == cs.basis[static_cast<size_t>(k)]) ups_k = upsilon.coeffs[ku];
    const Mat target = (k == 0) ? cert.Theta : Mat::Zero(cs.n, cs.n);
    rep.exact_violation["12a"] = std::max(rep.exact_violation["12a"],
        coeff_err(cs.Mmat1 * cert.Y1.coeffs[static_cast<size_t>(k)], ups_k * cert.Xi));
    rep.exact_violation["12b"] = std::max(rep.exact_violation["12b"],
        coeff_err(cs.Mmat2 * cert.Y2.coeffs[static_cast<size_t>(k)], ups_k * cert.Xi));
    rep.exact_violation["12c"] = std::max(rep.exact_violation["12c"],
        coeff_err(cs.Oplus1 * cert.Y1.coeffs[static_cast<size_t>(k)], target));
    rep.exact_violation["12d"] = std::max(rep.exact_violation["12d"],
        coeff_err(cs.Oplus2 * cert.Y2.coeffs[static_cast<size_t>(k)], target));
  }
  // sampled: evaluate both sides at random states
  std::mt19937_64 rng(seed);
  const Box sample_box(Vec::Constant(dict.n, -2.0), Vec::Constant(dict.n, 2.0));
  for (int s = 0; s < sample_count; ++s) {
    const Vec x = sample_box.sample(rng);
    const Mat Ux = upsilon.eval(x);
    const Mat Y1x = cert.Y1.eval(x);
    const Mat Y2x = cert.Y2.eval(x);
    rep.sampled_violation["12a"] = std::max(rep.sampled_violation["12a"],
                                            coeff_err(cs.Mmat1 * Y1x, Ux * cert.Xi));
    rep.sampled_violation["12b"] = std::max(rep.sampled_violation["12b"],
                                            coeff_err(cs.Mmat2 * Y2x, Ux * cert.Xi));
    rep.sampled_violation["12c"] =
        std::max(rep.sampled_violation["12c"], coeff_err(cs.Oplus1 * Y1x, cert.Theta));
    rep.sampled_violation["12d"] =
        std::max(rep.sampled_violation["12d"], coeff_err(cs.Oplus2 * Y2x, cert.Theta));
  }
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(contraction_block(cert.Xi, cert.Theta, gamma, mu),
                                          Eigen::EigenvaluesOnly);
    rep.lmi_margin_block = es.eigenvalues().minCoeff();
  }
  {
    const Mat schur =
        gamma * cert.Xi - (1.0 + mu) * cert.Theta.transpose() * cert.Xi.inverse() * cert.Theta;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (schur + schur.transpose()),
                                          Eigen::EigenvaluesOnly);
    rep.lmi_margin_schur = es.eigenvalues().minCoeff();
  }
  // the two routes must agree on the PSD verdict
  rep.schur_agrees = (rep.lmi_margin_block >= -1e-8) == (rep.lmi_margin_schur >= -1e-8);
  rep.pass = rep.max_violation() <= 1e-6 && rep.lmi_margin_block >= -1e-8 && rep.schur_agrees;
  return rep;
}

inline double eval_asf(const AsfCertificate& cert, const Vec& x, const Vec& xhat) {
  if (x.size() != cert.P.rows() || xhat.size() != cert.P.rows())
    throw dimension_error("eval_asf: dimension mismatch");
  const Vec e = x - xhat;
  return e.dot(cert.P * e);
}

/// alpha = lambda_min(P);  psi = (1 + 1/mu) * lambda_max(P) * delta^2.
inline std::pair<double, double> compute_alpha_psi(const AsfCertificate& cert, double mu,
                                                   double delta) {
  if (!(delta > 0.0)) throw error("compute_alpha_psi: delta must be > 0");
  Eigen::SelfAdjointEigenSolver<Mat> es(cert.P, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) throw error("compute_alpha_psi: P is not positive definite");
  return {lmin, (1.0 + 1.0 / mu) * lmax * delta * delta};
}

/// Remark 3.6 variant: psi = (1 + 1/mu) * lambda_max(P) * (beta1^2*beta2^2 + delta^2),
/// with beta1 the input discretization bound and beta2 a bound on ||B||.
inline double compute_bisim_psi(const AsfCertificate& cert, double mu, double delta,
                                double beta1, double beta2) {
  if (beta1 < 0.0 || beta2 < 0.0 || delta < 0.0)
    throw error("compute_bisim_psi: negative inputs rejected");
  Eigen::SelfAdjointEigenSolver<Mat> es(cert.P, Eigen::EigenvaluesOnly);
  return (1.0 + 1.0 / mu) * es.eigenvalues().maxCoeff() *
         (beta1 * beta1 * beta2 * beta2 + delta * delta);
}

struct EpsilonReport {
  double alpha = 0.0;
  double psi = 0.0;
  double rho = 0.0;
  double nu = 0.0;
  double eta1 = 0.0, eta2 = 0.0, eta3 = 0.0;
  double rho_bar = 0.0;
  double psi_bar = 0.0;
  double epsilon = 0.0;
};

inline EpsilonReport compute_epsilon_general(double alpha, double gamma, double rho,
                                             double psi, double nu, double eta1,
                                             double eta2, double eta3) {
  if (!(alpha > 0.0)) throw error("compute_epsilon_general: alpha must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw error("compute_epsilon_general: gamma in (0,1)");
  if (rho < 0.0 || psi < 0.0 || nu < 0.0)
    throw error("compute_epsilon_general: rho, psi, nu must be nonnegative");
  if (!(eta1 > 0.0 && eta1 < 1.0) || !(eta2 > 0.0 && eta2 < 1.0))
    throw error("compute_epsilon_general: eta1, eta2 must be in (0,1)");
  if (!(eta3 > 1.0 && eta3 < 2.0)) throw error("compute_epsilon_general: eta3 must be in (1,2)");
  EpsilonReport r;
  r.alpha = alpha;
  r.psi = psi;
  r.rho = rho;
  r.nu = nu;
  r.eta1 = eta1;
  r.eta2 = eta2;
  r.eta3 = eta3;
  r.rho_bar = (1.0 + eta2) * eta3 * rho / ((1.0 - gamma) * eta1);
  r.psi_bar = (1.0 + eta2) * eta3 * psi / ((1.0 - gamma) * (eta3 - 1.0) * eta1 * eta2);
  r.epsilon = std::sqrt(std::max(r.rho_bar * nu, r.psi_bar) / alpha);
  return r;
}

/// rho == 0 special case: psi_bar = psi / ((1-gamma)*eta1), eps = sqrt(psi_bar/alpha).
inline EpsilonReport compute_epsilon_rho0(double alpha, double gamma, double psi,
                                          double eta1) {
  if (!(alpha > 0.0)) throw error("compute_epsilon_rho0: alpha must be > 0");
  if (!(gamma > 0.0 && gamma < 1.0)) throw error("compute_epsilon_rho0: gamma in (0,1)");
  if (psi < 0.0) throw error("compute_epsilon_rho0: psi must be nonnegative");
  if (!(eta1 > 0.0 && eta1 < 1.0)) throw error("compute_epsilon_rho0: eta1 must be in (0,1)");
  EpsilonReport r;
  r.alpha = alpha;
  r.psi = psi;
  r.eta1 = eta1;
  r.psi_bar = psi / ((1.0 - gamma) * eta1);
  r.epsilon = std::sqrt(r.psi_bar / alpha);
  return r;
}

namespace detail {

inline nlohmann::json poly_matrix_to_json(const PolynomialMatrix& pm) {
  nlohmann::json basis = nlohmann::json::array();
  for (const auto& b : pm.basis) basis.push_back(b.exponents);
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : pm.coeffs) coeffs.push_back(matrix_to_json(c));
  return nlohmann::json{{"rows", pm.rows}, {"cols", pm.cols}, {"nvars", pm.nvars},
                        {"basis", basis},  {"coeffs", coeffs}};
}

inline PolynomialMatrix poly_matrix_from_json(const nlohmann::json& j) {
  PolynomialMatrix pm;
  pm.rows = j.at("rows").get<int>();
  pm.cols = j.at("cols").get<int>();
  pm.nvars = j.at("nvars").get<int>();
  for (const auto& e : j.at("basis")) pm.basis.push_back(Monomial{e.get<std::vector<int>>()});
  for (const auto& c : j.at("coeffs")) pm.coeffs.push_back(matrix_from_json(c));
  return pm;
}

}  // namespace detail

inline nlohmann::json certificate_to_json(const AsfCertificate& cert) {
  return nlohmann::json{
      {"n", cert.n},
      {"T", cert.T},
      {"gamma", cert.gamma},
      {"mu", cert.mu},
      {"Xi", detail::matrix_to_json(cert.Xi)},
      {"P", detail::matrix_to_json(cert.P)},
      {"Theta", detail::matrix_to_json(cert.Theta)},
      {"Y1", detail::poly_matrix_to_json(cert.Y1)},
      {"Y2", detail::poly_matrix_to_json(cert.Y2)},
      {"residuals", cert.residuals},
      {"lmi_margin", cert.lmi_margin},
      {"dict", detail::dict_to_json(cert.dict)},
  };
}

inline AsfCertificate certificate_from_json(const nlohmann::json& j) {
  AsfCertificate cert;
  cert.n = j.at("n").get<int>();
  cert.T = j.at("T").get<int>();
  cert.gamma = j.at("gamma").get<double>();
  cert.mu = j.at("mu").get<double>();
  cert.Xi = detail::matrix_from_json(j.at("Xi"));
  cert.P = detail::matrix_from_json(j.at("P"));
  cert.Theta = detail::matrix_from_json(j.at("Theta"));
  cert.Y1 = detail::poly_matrix_from_json(j.at("Y1"));
  cert.Y2 = detail::poly_matrix_from_json(j.at("Y2"));
  cert.residuals = j.at("residuals").get<std::map<std::string, double>>();
  cert.lmi_margin = j.at("lmi_margin").get<double>();
  cert.dict = detail::dict_from_json(cert.n, j.at("dict"));
  return cert;
}

inline void save_certificate(const AsfCertificate& cert, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_certificate: cannot open " + path);
  out << certificate_to_json(cert).dump(2) << "\n";
}

inline AsfCertificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_certificate: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return certificate_from_json(j);
}

}  // namespace symdd
