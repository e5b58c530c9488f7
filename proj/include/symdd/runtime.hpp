#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symdd/abstraction.hpp"
#include "symdd/certify.hpp"
#include "symdd/core.hpp"
#include "symdd/data.hpp"
#include "symdd/synthesis.hpp"

namespace symdd {

/// Hybrid interface map u = I*Y1(x)*P*x - Ihat*Y2(xhat)*P*xhat + uhat.
/// Holds the certificate blocks together with the input rows of the two
/// collected trajectories.
struct InterfaceMap {
  Mat I1;  // m x T, inputs of the first trajectory
  Mat I2;  // m x T, inputs of the second trajectory
  PolynomialMatrix Y1, Y2;
  Mat P;

  Vec operator()(const Vec& x, const Vec& xhat, const Vec& uhat) const {
    if (x.size() != P.rows() || xhat.size() != P.rows())
      throw dimension_error("InterfaceMap: state dimension mismatch");
    if (uhat.size() != I1.rows())
      throw dimension_error("InterfaceMap: input dimension mismatch");
    return I1 * (Y1.eval(x) * (P * x)) - I2 * (Y2.eval(xhat) * (P * xhat)) + uhat;
  }
};

inline InterfaceMap make_interface(const AsfCertificate& cert, const TrajectoryBatch& d1,
                                   const TrajectoryBatch& d2) {
  if (d1.T != cert.T || d2.T != cert.T)
    throw dimension_error("make_interface: trajectory horizon does not match certificate");
  if (cert.residuals.empty() || cert.max_residual() > 1e-6)
    throw error("make_interface: certificate is not verified (missing or large residuals)");
  return InterfaceMap{d1.I, d2.I, cert.Y1, cert.Y2, cert.P};
}

inline Vec interface_input(const AsfCertificate& cert, const TrajectoryBatch& d1,
                           const TrajectoryBatch& d2, const Vec& x, const Vec& xhat,
                           const Vec& uhat) {
  return make_interface(cert, d1, d2)(x, xhat, uhat);
}

struct TraceStep {
  int k = 0;
  Vec x;
  Vec xhat;
  Vec uhat;  // empty on the terminal entry
  Vec u;     // empty on the terminal entry
  double error = 0.0;  // ||x - xhat||
  double S = 0.0;      // ASF value
};

struct SimulationTrace {
  std::vector<TraceStep> steps;
  double epsilon = 0.0;
  double psi_bar = 0.0;
  bool stayed_safe = true;
  bool reached_target = false;
  bool hit_avoid = false;
  bool eps_violated = false;
  bool input_out_of_U = false;
  double max_error = 0.0;
};

enum class AbstractUpdate { table, requantize };

struct SimulateOptions {
  int max_steps = 100;
  AbstractUpdate abstract_update = AbstractUpdate::table;
  bool clamp_input = false;  // by default out-of-U inputs are logged, not clamped
  std::optional<Box> safe_box;
  std::optional<Box> target_box;
  std::optional<Box> avoid_box;
  double epsilon = 0.0;  // closeness bound used for monitoring
  double psi_bar = 0.0;  // relation level, logged alongside
};

/// Couple the unknown plant with the abstract controller through the
/// interface map.  The abstract state follows the stored transition table;
/// requantization of the plant state is available behind the option flag.
inline SimulationTrace simulate_closed_loop(const PlantOracle& plant,
                                            const SymbolicModel& model,
                                            const SymbolicController& ctrl,
                                            const InterfaceMap& interface, const Vec& x0,
                                            const SimulateOptions& opts) {
  QuantizeResult q0 = quantize(model.state_grid, x0);
  if (q0.out_of_box || !ctrl.in_domain(q0.index)) {
    // suggest the nearest in-domain grid point
    double best = std::numeric_limits<double>::infinity();
    uint64_t best_idx = 0;
    for (uint64_t s = 0; s < ctrl.choice.size(); ++s) {
      if (!ctrl.in_domain(s)) continue;
      const double d = (model.state_grid.representative(s) - x0).norm();
      if (d < best) {
        best = d;
        best_idx = s;
      }
    }
    std::string hint = std::isfinite(best)
                           ? " (nearest in-domain grid point at distance " + format_double(best) +
                                 ", index " + std::to_string(best_idx) + ")"
                           : " (controller domain is empty)";
    throw error("simulate_closed_loop: initial state outside controller domain" + hint);
  }

  SimulationTrace trace;
  trace.epsilon = opts.epsilon;
  trace.psi_bar = opts.psi_bar;
  Vec x = x0;
  uint64_t shat = q0.index;
  const auto record = [&](int k, const Vec& uhat, const Vec& u) {
    TraceStep st;
    st.k = k;
    st.x = x;
    st.xhat = model.state_grid.representative(shat);
    st.uhat = uhat;
    st.u = u;
    st.error = (st.x - st.xhat).norm();
    const Vec e = st.x - st.xhat;
    st.S = e.dot(interface.P * e);
    trace.max_error = std::max(trace.max_error, st.error);
    if (opts.epsilon > 0.0 && st.error > opts.epsilon) trace.eps_violated = true;
    if (opts.safe_box && !opts.safe_box->contains(st.x)) trace.stayed_safe = false;
    if (opts.target_box && opts.target_box->contains(st.x)) trace.reached_target = true;
    if (opts.avoid_box && opts.avoid_box->contains(st.x)) trace.hit_avoid = true;
    trace.steps.push_back(std::move(st));
  };

  for (int k = 0; k < opts.max_steps; ++k) {
    if (ctrl.spec_kind == SpecKind::reach_avoid && !ctrl.rank.empty() && ctrl.rank[shat] == 0)
      break;  // abstract target reached
    const uint32_t ui = ctrl.choice[shat];
    if (ui == OUT_OF_DOMAIN) break;
    const Vec uhat = model.input_grid.representative(ui);
    const Vec xhat = model.state_grid.representative(shat);
    Vec u = interface(x, xhat, uhat);
    if (!plant.input_box().contains(u)) {
      trace.input_out_of_U = true;
      if (opts.clamp_input) u = plant.input_box().clamp(u);
    }
    record(k, uhat, u);
    x = plant.step(x, u);
    if (opts.abstract_update == AbstractUpdate::table) {
      const uint32_t next = model.successor(shat, ui);
      if (next == OUT_OF_DOMAIN) break;
      shat = next;
    } else {
      const QuantizeResult q = quantize(model.state_grid, x);
      if (q.out_of_box) break;
      shat = q.index;
    }
  }
  record(static_cast<int>(trace.steps.size()), Vec(), Vec());  // terminal entry
  return trace;
}

/// CSV with header k,x1..xn,xh1..xhn,uh1..uhm,u1..um,err,S.  The terminal
/// row carries empty input cells.
inline void export_trace(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("export_trace: cannot open " + path);
  int n = 0, m = 0;
  for (const auto& st : trace.steps) {
    n = std::max<int>(n, static_cast<int>(st.x.size()));
    m = std::max<int>(m, static_cast<int>(st.uhat.size()));
  }
  out << "k";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",xh" << i;
  for (int i = 1; i <= m; ++i) out << ",uh" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",err,S\n";
  for (const auto& st : trace.steps) {
    out << st.k;
    for (int i = 0; i < n; ++i) out << "," << format_double(st.x[i]);
    for (int i = 0; i < n; ++i) out << "," << format_double(st.xhat[i]);
    for (int i = 0; i < m; ++i)
      out << "," << (i < st.uhat.size() ? format_double(st.uhat[i]) : "");
    for (int i = 0; i < m; ++i) out << "," << (i < st.u.size() ? format_double(st.u[i]) : "");
    out << "," << format_double(st.error) << "," << format_double(st.S) << "\n";
  }
  if (!out) throw io_error("export_trace: write failed for " + path);
}

inline nlohmann::json verdicts_to_json(const SimulationTrace& trace) {
  return nlohmann::json{
      {"stayed_safe", trace.stayed_safe},
      {"reached_target", trace.reached_target},
      {"hit_avoid", trace.hit_avoid},
      {"eps_violated", trace.eps_violated},
      {"input_out_of_U", trace.input_out_of_U},
      {"max_error", trace.max_error},
      {"epsilon", trace.epsilon},
      {"steps", trace.steps.empty() ? 0 : static_cast<int>(trace.steps.size()) - 1},
  };
}

}  // namespace symdd
