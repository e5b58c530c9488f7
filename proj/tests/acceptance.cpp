// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "symdd/abstraction.hpp"
#include "symdd/certify.hpp"
#include "symdd/data.hpp"
#include "symdd/plant.hpp"
#include "symdd/poly.hpp"
#include "symdd/runtime.hpp"
#include "symdd/synthesis.hpp"

using namespace symdd;
using clock_type = std::chrono::steady_clock;

namespace {

struct Shared {
  PlantOracle plant{make_case_study_plant()};
  MonomialDictionary dict = build_dictionary(2, 2);
  PolynomialMatrix upsilon = build_upsilon(dict);
  TrajectoryBatch b1, b2;
  ConstraintSystem cs;
  AsfCertificate cert;
  bool cert_ready = false;
};

Shared g;

int failures = 0;

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("criterion %2d [%s]: %s (%.2f s)%s%s\n", id, name.c_str(),
              pass ? "PASS" : "FAIL", seconds, detail.empty() ? "" : " - ",
              detail.c_str());
  if (!pass) ++failures;
}

void run(int id, const std::string& name, double budget_s,
         const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool pass = false;
  const auto t0 = clock_type::now();
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(clock_type::now() - t0).count();
  if (pass && secs > budget_s) {
    pass = false;
    detail += " exceeded time budget of " + format_double(budget_s) + " s";
  }
  report(id, name, pass, secs, detail);
}

bool build_certificate(std::string& detail) {
  std::mt19937_64 rng1(2024), rng2(2025);
  const auto policy = uniform_excitation(g.plant.input_box());
  DataMatrices dm1, dm2;
  std::tie(g.b1, dm1) = collect_with_retry(g.plant, g.dict, policy, 9, 25, rng1);
  std::tie(g.b2, dm2) = collect_with_retry(g.plant, g.dict, policy, 9, 25, rng2);
  g.cs = assemble_constraints(g.dict, g.upsilon, dm1, g.b1, dm2, g.b2,
                              poly_basis(2, g.dict.max_degree() - 1));
  g.cert = solve_asf(g.cs, 0.99, 0.01);
  g.cert_ready = true;

  if (g.cert.max_residual() > 1e-7) {
    detail = "max residual " + format_double(g.cert.max_residual());
    return false;
  }
  if (g.cert.lmi_margin < -1e-8) {
    detail = "lmi margin " + format_double(g.cert.lmi_margin);
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat> xi(g.cert.Xi, Eigen::EigenvaluesOnly);
  if (xi.eigenvalues().minCoeff() < 1.0 - 1e-6) {
    detail = "lambda_min(Xi) = " + format_double(xi.eigenvalues().minCoeff());
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat> p(g.cert.P, Eigen::EigenvaluesOnly);
  const double cond = p.eigenvalues().maxCoeff() / p.eigenvalues().minCoeff();
  detail = "cond(P) = " + format_double(cond);
  return cond <= 2.0;
}

}  // namespace

int main() {
  // 1. rank condition over 100 seeds
  run(1, "rank condition", 1.0, [](std::string& detail) {
    int passes = 0;
    const auto policy = uniform_excitation(g.plant.input_box());
    for (uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      const Vec x0 = g.plant.state_box().sample(rng);
      try {
        const auto batch = collect_trajectory(g.plant, x0, policy, 9, rng);
        const auto dm = build_data_matrix(g.dict, batch);
        if (check_rank(dm, g.dict.size(), batch.T).pass && dm.rank == 5) ++passes;
      } catch (const collection_error&) {
      }
    }
    detail = std::to_string(passes) + "/100 seeds at rank 5";
    return passes >= 95;
  });

  // 2. certificate feasibility at gamma 0.99, mu 0.01
  run(2, "certificate feasibility", 30.0, build_certificate);

  // 3. epsilon from the published constants
  run(3, "epsilon reproduction", 1.0, [](std::string& detail) {
    const auto r = compute_epsilon_rho0(4.2197, 0.99, 0.0014, 0.99);
    detail = "psi_bar " + format_double(r.psi_bar) + ", eps " + format_double(r.epsilon);
    return std::abs(r.psi_bar - 0.1414) <= 1e-4 && std::abs(r.epsilon - 0.1831) <= 1e-4;
  });

  // 4. data-based representation identity on random triples
  run(4, "data-based identity", 5.0, [](std::string& detail) {
    if (!g.cert_ready) {
      detail = "certificate unavailable";
      return false;
    }
    const auto& truth = g.plant.true_parameters_for_testing();
    const auto iface = make_interface(g.cert, g.b1, g.b2);
    std::mt19937_64 rng(404);
    const Box xbox(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
    double worst = 0.0;
    for (int s = 0; s < 10000; ++s) {
      const Vec x = xbox.sample(rng);
      const Vec xh = xbox.sample(rng);
      const Vec uh = g.plant.input_box().sample(rng);
      const Vec u = iface(x, xh, uh);
      const Vec lhs = truth.A * eval_dictionary(g.dict, x) + truth.B * u -
                      (truth.A * eval_dictionary(g.dict, xh) + truth.B * uh);
      const Vec rhs = g.b1.Oplus * (g.cert.Y1.eval(x) * (g.cert.P * x)) -
                      g.b2.Oplus * (g.cert.Y2.eval(xh) * (g.cert.P * xh));
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    detail = "worst deviation " + format_double(worst);
    return worst <= 1e-8;
  });

  // 5. ASF decrease under the interface and quantizer
  run(5, "asf decrease", 10.0, [](std::string& detail) {
    if (!g.cert_ready) {
      detail = "certificate unavailable";
      return false;
    }
    const Grid sg = build_grid(g.plant.state_box(), 0.02);
    const auto [alpha, psi] = compute_alpha_psi(g.cert, g.cert.mu, sg.delta_cert);
    (void)alpha;
    const auto iface = make_interface(g.cert, g.b1, g.b2);
    std::mt19937_64 rng(505);
    double worst = -1e300;
    int checked = 0;
    for (int s = 0; s < 10000; ++s) {
      const Vec x = g.plant.state_box().sample(rng);
      const Vec xh = quantize(sg, g.plant.state_box().sample(rng)).representative;
      const Vec uh = g.plant.input_box().sample(rng);
      const Vec u = iface(x, xh, uh);
      const Vec xp = g.plant.step(x, u);
      const auto q = quantize(sg, g.plant.step(xh, uh));
      if (q.out_of_box) continue;
      ++checked;
      const double slack = eval_asf(g.cert, xp, q.representative) -
                           g.cert.gamma * eval_asf(g.cert, x, xh) - psi;
      worst = std::max(worst, slack);
    }
    detail = "worst slack " + format_double(worst) + " over " +
             std::to_string(checked) + " samples";
    return checked > 5000 && worst <= 1e-8;
  });

  // 6. safety closed loop on the 0.02 / 0.1 grids
  run(6, "safety closed loop", 60.0, [](std::string& detail) {
    if (!g.cert_ready) {
      detail = "certificate unavailable";
      return false;
    }
    const Grid sg = build_grid(g.plant.state_box(), 0.02);
    const Grid ug = build_grid(g.plant.input_box(), 0.1);
    const auto model = build_symbolic_model(
        [](const Vec& x, const Vec& u) { return g.plant.step(x, u); }, sg, ug);
    const auto preds =
        spec_predicates(sg, &g.plant.state_box(), nullptr, nullptr, MarginMode::nominal);
    const auto ctrl = synth_safety(model, preds.safe);
    if (ctrl.domain_size() == 0) {
      detail = "empty controller domain";
      return false;
    }
    const auto [alpha, psi] = compute_alpha_psi(g.cert, g.cert.mu, sg.delta_cert);
    const auto eps = compute_epsilon_rho0(alpha, g.cert.gamma, psi, 0.99);
    const auto iface = make_interface(g.cert, g.b1, g.b2);

    std::vector<uint64_t> domain;
    for (uint64_t s = 0; s < sg.num_points(); ++s)
      if (ctrl.in_domain(s)) domain.push_back(s);
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<size_t> pick(0, domain.size() - 1);
    int safe_runs = 0, eps_ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x0 = sg.representative(domain[pick(rng)]);
      SimulateOptions opts;
      opts.max_steps = 100;
      opts.safe_box = g.plant.state_box();
      opts.epsilon = eps.epsilon;
      opts.psi_bar = eps.psi_bar;
      const auto trace = simulate_closed_loop(g.plant, model, ctrl, iface, x0, opts);
      if (trace.stayed_safe) ++safe_runs;
      if (!trace.eps_violated) ++eps_ok;
    }
    detail = std::to_string(safe_runs) + "/20 safe, " + std::to_string(eps_ok) +
             "/20 within eps = " + format_double(eps.epsilon) + ", domain " +
             std::to_string(domain.size());
    return safe_runs == 20 && eps_ok == 20;
  });

  // 7. reach-while-avoid closed loop
  run(7, "reach-avoid closed loop", 120.0, [](std::string& detail) {
    if (!g.cert_ready) {
      detail = "certificate unavailable";
      return false;
    }
    const PlantOracle plant(make_case_study_plant(CaseStudyKind::reach_avoid));
    const Grid sg = build_grid(plant.state_box(), 0.02);
    const Grid ug = build_grid(plant.input_box(), 0.1);
    const auto model = build_symbolic_model(
        [&plant](const Vec& x, const Vec& u) { return plant.step(x, u); }, sg, ug);
    const Box target(Vec{{0.7, 0.7}}, Vec{{1.0, 1.0}});
    const Box avoid(Vec{{-0.5, -1.0}}, Vec{{0.5, 0.5}});
    const Box initial(Vec{{-1.0, -1.0}}, Vec{{-0.6, -0.5}});
    const auto preds =
        spec_predicates(sg, nullptr, &target, &avoid, MarginMode::nominal);
    const auto ctrl = synth_reach_avoid(model, preds.target, preds.avoid);

    std::vector<uint64_t> starts;
    for (uint64_t s = 0; s < sg.num_points(); ++s)
      if (ctrl.in_domain(s) && initial.contains(sg.representative(s))) starts.push_back(s);
    if (starts.empty()) {
      detail = "no in-domain initial grid point";
      return false;
    }
    const auto iface = make_interface(g.cert, g.b1, g.b2);
    int reached = 0, clean = 0;
    for (uint64_t s : starts) {
      SimulateOptions opts;
      opts.max_steps = 400;
      opts.target_box = target;
      opts.avoid_box = avoid;
      const auto trace =
          simulate_closed_loop(plant, model, ctrl, iface, sg.representative(s), opts);
      if (trace.reached_target) ++reached;
      if (!trace.hit_avoid) ++clean;
    }
    detail = std::to_string(reached) + "/" + std::to_string(starts.size()) +
             " reached, " + std::to_string(clean) + "/" + std::to_string(starts.size()) +
             " avoided the obstacle";
    return reached == static_cast<int>(starts.size()) &&
           clean == static_cast<int>(starts.size());
  });

  // 8. synthesis equals brute-force enumeration
  run(8, "synthesis oracle equivalence", 10.0, [](std::string& detail) {
    std::mt19937_64 rng(808);
    for (int trial = 0; trial < 100; ++trial) {
      std::uniform_int_distribution<int> dns(2, 64), dnu(1, 4);
      const int ns = dns(rng), nu = dnu(rng);
      std::uniform_int_distribution<uint32_t> dtr(0, static_cast<uint32_t>(ns));
      SymbolicModel m;
      m.state_grid = build_grid(Box(Vec{{0.0}}, Vec{{1.0}}), 1.0 / ns);
      m.input_grid = build_grid(Box(Vec{{0.0}}, Vec{{1.0}}), 1.0 / nu);
      m.trans.resize(static_cast<size_t>(ns) * nu);
      for (auto& t : m.trans) {
        const uint32_t v = dtr(rng);
        t = (v == static_cast<uint32_t>(ns)) ? OUT_OF_DOMAIN : v;
      }
      std::bernoulli_distribution flip(0.5);
      std::vector<bool> safe_v(static_cast<size_t>(ns)), tgt_v(static_cast<size_t>(ns)),
          avd_v(static_cast<size_t>(ns));
      for (int s = 0; s < ns; ++s) {
        safe_v[static_cast<size_t>(s)] = flip(rng);
        tgt_v[static_cast<size_t>(s)] = flip(rng);
        avd_v[static_cast<size_t>(s)] = flip(rng) && flip(rng);
      }
      const StatePredicate safe = [&](uint64_t s) { return safe_v[s]; };
      const StatePredicate tgt = [&](uint64_t s) { return tgt_v[s]; };
      const StatePredicate avd = [&](uint64_t s) { return avd_v[s]; };

      // brute-force safety fixed point
      std::vector<bool> owin(static_cast<size_t>(ns));
      for (int s = 0; s < ns; ++s) owin[static_cast<size_t>(s)] = safe_v[static_cast<size_t>(s)];
      for (bool changed = true; changed;) {
        changed = false;
        for (int s = 0; s < ns; ++s) {
          if (!owin[static_cast<size_t>(s)]) continue;
          bool ok = false;
          for (int u = 0; u < nu; ++u) {
            const uint32_t t = m.successor(static_cast<uint64_t>(s), static_cast<uint64_t>(u));
            if (t != OUT_OF_DOMAIN && owin[t]) ok = true;
          }
          if (!ok) {
            owin[static_cast<size_t>(s)] = false;
            changed = true;
          }
        }
      }
      const auto csafe = synth_safety(m, safe);
      for (int s = 0; s < ns; ++s)
        if (csafe.in_domain(static_cast<uint64_t>(s)) != owin[static_cast<size_t>(s)]) {
          detail = "safety mismatch at trial " + std::to_string(trial);
          return false;
        }

      // brute-force reach-avoid
      std::vector<bool> rwin(static_cast<size_t>(ns));
      for (int s = 0; s < ns; ++s)
        rwin[static_cast<size_t>(s)] = tgt_v[static_cast<size_t>(s)] && !avd_v[static_cast<size_t>(s)];
      for (bool changed = true; changed;) {
        changed = false;
        for (int s = 0; s < ns; ++s) {
          if (rwin[static_cast<size_t>(s)] || avd_v[static_cast<size_t>(s)]) continue;
          for (int u = 0; u < nu; ++u) {
            const uint32_t t = m.successor(static_cast<uint64_t>(s), static_cast<uint64_t>(u));
            if (t != OUT_OF_DOMAIN && rwin[t]) {
              rwin[static_cast<size_t>(s)] = true;
              changed = true;
              break;
            }
          }
        }
      }
      const auto cra = synth_reach_avoid(m, tgt, avd);
      for (int s = 0; s < ns; ++s)
        if (cra.in_domain(static_cast<uint64_t>(s)) != rwin[static_cast<size_t>(s)]) {
          detail = "reach-avoid mismatch at trial " + std::to_string(trial);
          return false;
        }
    }
    detail = "100/100 models matched";
    return true;
  });

  // 9. scale invariance over ten certificates
  std::vector<AsfCertificate> nine_certs;
  std::vector<std::pair<Mat, Mat>> nine_inputs;  // I rows of both trajectories
  if (g.cert_ready) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng1(9000 + seed), rng2(9100 + seed);
      const auto policy = uniform_excitation(g.plant.input_box());
      auto [t1, d1] = collect_with_retry(g.plant, g.dict, policy, 9, 25, rng1);
      auto [t2, d2] = collect_with_retry(g.plant, g.dict, policy, 9, 25, rng2);
      const auto cs = assemble_constraints(g.dict, g.upsilon, d1, t1, d2, t2,
                                           poly_basis(2, g.dict.max_degree() - 1));
      nine_certs.push_back(solve_asf(cs, 0.99, 0.01));
      nine_inputs.emplace_back(t1.I, t2.I);
    }
  }
  run(9, "scale invariance", 1.0, [&](std::string& detail) {
    if (nine_certs.size() != 10) {
      detail = "certificate generation failed";
      return false;
    }
    std::mt19937_64 rng(909);
    double worst_u = 0.0, worst_eps = 0.0;
    for (size_t i = 0; i < nine_certs.size(); ++i) {
      const auto& cert = nine_certs[i];
      const auto& [I1, I2] = nine_inputs[i];
      for (double c : {0.1, 3.0, 42.0}) {
        AsfCertificate scaled = cert;
        scaled.Xi *= c;
        scaled.Theta *= c;
        scaled.P = scaled.Xi.inverse();
        for (auto& mm : scaled.Y1.coeffs) mm *= c;
        for (auto& mm : scaled.Y2.coeffs) mm *= c;
        for (int s = 0; s < 20; ++s) {
          const Vec x = g.plant.state_box().sample(rng);
          const Vec xh = g.plant.state_box().sample(rng);
          const Vec uh = g.plant.input_box().sample(rng);
          const Vec u0 = I1 * (cert.Y1.eval(x) * (cert.P * x)) -
                         I2 * (cert.Y2.eval(xh) * (cert.P * xh)) + uh;
          const Vec u1 = I1 * (scaled.Y1.eval(x) * (scaled.P * x)) -
                         I2 * (scaled.Y2.eval(xh) * (scaled.P * xh)) + uh;
          worst_u = std::max(worst_u, (u0 - u1).cwiseAbs().maxCoeff());
        }
        const auto [a0, p0] = compute_alpha_psi(cert, cert.mu, 0.01);
        const auto [a1, p1] = compute_alpha_psi(scaled, cert.mu, 0.01);
        worst_eps = std::max(worst_eps,
                             std::abs(compute_epsilon_rho0(a0, 0.99, p0, 0.99).epsilon -
                                      compute_epsilon_rho0(a1, 0.99, p1, 0.99).epsilon));
      }
    }
    detail = "max input deviation " + format_double(worst_u) + ", max eps deviation " +
             format_double(worst_eps);
    return worst_u <= 1e-10 && worst_eps <= 1e-10;
  });

  // 10. quantizer bound
  run(10, "quantizer bound", 1.0, [](std::string& detail) {
    const Box box(Vec{{-0.5, -1.0}}, Vec{{0.5, 1.0}});
    const Grid grid = build_grid(box, Vec{{0.02, 0.07}});
    std::mt19937_64 rng(1010);
    double worst = 0.0;
    for (int s = 0; s < 100000; ++s) {
      const Vec x = box.sample(rng);
      const auto q = quantize(grid, x);
      if (q.out_of_box) {
        detail = "in-box point flagged out of box";
        return false;
      }
      worst = std::max(worst, (q.representative - x).norm());
    }
    detail = "max quantization error " + format_double(worst) + " vs delta " +
             format_double(grid.delta_cert);
    return worst <= grid.delta_cert;
  });

  std::printf("%s\n", failures == 0 ? "all criteria passed" : "some criteria failed");
  return failures == 0 ? 0 : 1;
}
