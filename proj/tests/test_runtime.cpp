#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "symdd/runtime.hpp"
#include "symdd/plant.hpp"

using namespace symdd;

namespace {

struct RtFixture {
  PlantOracle plant{make_case_study_plant()};
  MonomialDictionary dict = build_dictionary(2, 2);
  TrajectoryBatch b1, b2;
  AsfCertificate cert;
  SymbolicModel model;
  SymbolicController ctrl;

  RtFixture() {
    std::mt19937_64 rng1(501), rng2(502);
    const auto policy = uniform_excitation(plant.input_box());
    DataMatrices dm1, dm2;
    std::tie(b1, dm1) = collect_with_retry(plant, dict, policy, 9, 25, rng1);
    std::tie(b2, dm2) = collect_with_retry(plant, dict, policy, 9, 25, rng2);
    const auto upsilon = build_upsilon(dict);
    const auto cs = assemble_constraints(dict, upsilon, dm1, b1, dm2, b2,
                                         poly_basis(2, dict.max_degree() - 1));
    cert = solve_asf(cs, 0.99, 0.01);

    const Grid sg = build_grid(plant.state_box(), 0.02);
    const Grid ug = build_grid(plant.input_box(), 0.1);
    model = build_symbolic_model(
        [this](const Vec& x, const Vec& u) { return plant.step(x, u); }, sg, ug);
    ctrl = synth_safety(model, [this](uint64_t s) {
      return plant.state_box().contains(model.state_grid.representative(s));
    });
  }
};

const RtFixture& fx() {
  static RtFixture f;
  return f;
}

}  // namespace

TEST_CASE("interface reduces to uhat when the states agree") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  std::mt19937_64 rng(31);
  for (int s = 0; s < 200; ++s) {
    const Vec x = f.plant.state_box().sample(rng);
    const Vec uh = f.plant.input_box().sample(rng);
    const Vec u = iface(x, x, uh);
    CHECK((u - uh).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK((iface(Vec::Zero(2), Vec::Zero(2), Vec{{1.25}}) - Vec{{1.25}}).norm() <= 1e-12);
}

TEST_CASE("data-based representation matches the model difference") {
  const auto& f = fx();
  const auto& truth = f.plant.true_parameters_for_testing();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  std::mt19937_64 rng(33);
  const Box xbox(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const Vec x = xbox.sample(rng);
    const Vec xh = xbox.sample(rng);
    const Vec uh = f.plant.input_box().sample(rng);
    const Vec u = iface(x, xh, uh);
    const Vec lhs = truth.A * eval_dictionary(f.dict, x) + truth.B * u -
                    (truth.A * eval_dictionary(f.dict, xh) + truth.B * uh);
    const Vec rhs = f.b1.Oplus * (f.cert.Y1.eval(x) * (f.cert.P * x)) -
                    f.b2.Oplus * (f.cert.Y2.eval(xh) * (f.cert.P * xh));
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("asf decreases up to the quantization offset") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  const Grid& sg = f.model.state_grid;
  const double delta = sg.delta_cert;
  const auto [alpha, psi] = compute_alpha_psi(f.cert, f.cert.mu, delta);
  (void)alpha;
  std::mt19937_64 rng(37);
  int checked = 0;
  for (int s = 0; s < 10000; ++s) {
    const Vec x = f.plant.state_box().sample(rng);
    const Vec xh = quantize(sg, f.plant.state_box().sample(rng)).representative;
    const Vec uh = f.plant.input_box().sample(rng);
    const Vec u = iface(x, xh, uh);
    const Vec xp = f.plant.step(x, u);
    const Vec xhp_cont = f.plant.step(xh, uh);
    const auto q = quantize(sg, xhp_cont);
    if (q.out_of_box) continue;  // abstraction has no successor here
    ++checked;
    const double s_now = eval_asf(f.cert, x, xh);
    const double s_next = eval_asf(f.cert, xp, q.representative);
    CHECK(s_next <= f.cert.gamma * s_now + psi + 1e-8);
  }
  CHECK(checked > 5000);
}

TEST_CASE("simulation records an extra terminal row") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  SimulateOptions opts;
  opts.max_steps = 3;
  opts.safe_box = f.plant.state_box();
  const Vec x0 = f.model.state_grid.representative(
      quantize(f.model.state_grid, Vec{{0.1, 0.1}}).index);
  const auto trace = simulate_closed_loop(f.plant, f.model, f.ctrl, iface, x0, opts);
  REQUIRE(trace.steps.size() == 4);
  CHECK(trace.steps.front().k == 0);
  CHECK(trace.steps.back().k == 3);
  CHECK(trace.steps.back().u.size() == 0);
  CHECK(trace.steps[2].u.size() == 1);
  for (size_t i = 0; i < trace.steps.size(); ++i)
    CHECK(trace.steps[i].k == static_cast<int>(i));
}

TEST_CASE("zero-step simulation still reports the initial state") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  SimulateOptions opts;
  opts.max_steps = 0;
  const Vec x0 = f.model.state_grid.representative(
      quantize(f.model.state_grid, Vec{{0.0, 0.0}}).index);
  const auto trace = simulate_closed_loop(f.plant, f.model, f.ctrl, iface, x0, opts);
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].k == 0);
}

TEST_CASE("out-of-domain start is rejected with a hint") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  try {
    simulate_closed_loop(f.plant, f.model, f.ctrl, iface, Vec{{5.0, 5.0}}, {});
    FAIL("expected error");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("nearest in-domain") != std::string::npos);
  }
}

TEST_CASE("unverified certificate is rejected by the interface") {
  const auto& f = fx();
  AsfCertificate blank = f.cert;
  blank.residuals.clear();
  CHECK_THROWS_AS(make_interface(blank, f.b1, f.b2), error);
  AsfCertificate noisy = f.cert;
  noisy.residuals["12a"] = 1.0;
  CHECK_THROWS_AS(make_interface(noisy, f.b1, f.b2), error);
}

TEST_CASE("trace CSV layout") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  SimulateOptions opts;
  opts.max_steps = 5;
  opts.safe_box = f.plant.state_box();
  opts.epsilon = 1.0;
  const Vec x0 = f.model.state_grid.representative(
      quantize(f.model.state_grid, Vec{{-0.1, 0.2}}).index);
  const auto trace = simulate_closed_loop(f.plant, f.model, f.ctrl, iface, x0, opts);
  const std::string path = "trace_layout_test.csv";
  export_trace(trace, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "k,x1,x2,xh1,xh2,uh1,u1,err,S");
  int rows = 0;
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  in.close();
  std::remove(path.c_str());
  CHECK(rows == static_cast<int>(trace.steps.size()));
  // terminal row has empty input cells
  std::stringstream ss(last);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 9);
  CHECK(cells[5].empty());
  CHECK(cells[6].empty());

  const auto j = verdicts_to_json(trace);
  CHECK(j.at("steps").get<int>() == 5);
  CHECK(j.at("stayed_safe").is_boolean());
  CHECK(j.at("max_error").get<double>() >= 0.0);
}

TEST_CASE("epsilon monitoring flags large separations") {
  const auto& f = fx();
  const auto iface = make_interface(f.cert, f.b1, f.b2);
  SimulateOptions opts;
  opts.max_steps = 2;
  opts.epsilon = 1e-12;  // impossible bound: any nonzero error trips it
  const Vec x0 = f.model.state_grid.representative(
      quantize(f.model.state_grid, Vec{{0.2, -0.2}}).index) ;
  const Vec x0_off = x0 + Vec::Constant(2, 1e-3);
  const auto trace = simulate_closed_loop(f.plant, f.model, f.ctrl, iface, x0_off, opts);
  CHECK(trace.eps_violated);
  CHECK(trace.max_error > 0.0);
}
