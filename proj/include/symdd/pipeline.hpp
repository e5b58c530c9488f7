#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdd/abstraction.hpp"
#include "symdd/certify.hpp"
#include "symdd/core.hpp"
#include "symdd/data.hpp"
#include "symdd/plant.hpp"
#include "symdd/poly.hpp"
#include "symdd/runtime.hpp"
#include "symdd/synthesis.hpp"

namespace symdd {

enum class DeltaSemantics { half_diagonal, diameter };

struct PipelineConfig {
  // plant: builtin name or file path
  std::string plant = "case_study_safety";

  // dictionary: degree bound or explicit monomials
  int dmax = 2;
  std::optional<std::vector<std::vector<int>>> monomials;

  int horizon = 9;
  uint64_t seed = 1;
  int max_attempts = 25;

  double gamma = 0.99;
  double mu = 0.01;
  double eta1 = 0.99;
  double eta2 = 0.9;  // consulted only when rho > 0
  double eta3 = 1.5;

  double state_spacing = 0.002;
  double input_spacing = 0.1;
  DeltaSemantics delta_semantics = DeltaSemantics::half_diagonal;

  std::string spec_kind = "safety";  // safety | reach_avoid
  std::optional<Box> safe_box;       // defaults to the plant state box
  std::optional<Box> target_box;
  std::optional<Box> avoid_box;
  std::optional<Box> initial_box;
  std::string mode = "nominal";  // nominal | robust

  int max_steps = 100;
  std::optional<std::vector<double>> x0;
  std::string out_dir = "out";

  MonomialDictionary dictionary() const {
    if (monomials) {
      MonomialDictionary d;
      d.n = static_cast<int>((*monomials)[0].size());
      for (const auto& e : *monomials) d.monos.push_back(Monomial{e});
      d.validate();
      return d;
    }
    return MonomialDictionary{};  // resolved against the plant dimension later
  }
};

namespace detail_cfg {

inline void from_json_into(const nlohmann::json& j, PipelineConfig& c) {
  if (j.contains("plant")) c.plant = j.at("plant").get<std::string>();
  if (j.contains("dict")) {
    const auto& d = j.at("dict");
    if (d.contains("dmax")) c.dmax = d.at("dmax").get<int>();
    if (d.contains("monomials"))
      c.monomials = d.at("monomials").get<std::vector<std::vector<int>>>();
  }
  if (j.contains("horizon")) c.horizon = j.at("horizon").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("max_attempts")) c.max_attempts = j.at("max_attempts").get<int>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
  if (j.contains("mu")) c.mu = j.at("mu").get<double>();
  if (j.contains("eta1")) c.eta1 = j.at("eta1").get<double>();
  if (j.contains("eta2")) c.eta2 = j.at("eta2").get<double>();
  if (j.contains("eta3")) c.eta3 = j.at("eta3").get<double>();
  if (j.contains("state_spacing")) c.state_spacing = j.at("state_spacing").get<double>();
  if (j.contains("input_spacing")) c.input_spacing = j.at("input_spacing").get<double>();
  if (j.contains("delta_semantics")) {
    const auto s = j.at("delta_semantics").get<std::string>();
    if (s == "half_diagonal") c.delta_semantics = DeltaSemantics::half_diagonal;
    else if (s == "diameter") c.delta_semantics = DeltaSemantics::diameter;
    else throw error("config: delta_semantics must be half_diagonal or diameter");
  }
  if (j.contains("spec")) {
    const auto& s = j.at("spec");
    if (s.contains("kind")) c.spec_kind = s.at("kind").get<std::string>();
    if (s.contains("safe_box")) c.safe_box = detail::box_from_json(s.at("safe_box"));
    if (s.contains("target_box")) c.target_box = detail::box_from_json(s.at("target_box"));
    if (s.contains("avoid_box")) c.avoid_box = detail::box_from_json(s.at("avoid_box"));
    if (s.contains("initial_box")) c.initial_box = detail::box_from_json(s.at("initial_box"));
  }
  if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
  if (j.contains("max_steps")) c.max_steps = j.at("max_steps").get<int>();
  if (j.contains("x0")) c.x0 = j.at("x0").get<std::vector<double>>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
}

}  // namespace detail_cfg

/// Every top-level config key can be overridden with SYMDD_<KEY>; the value
/// is parsed as JSON, falling back to a plain string.
inline void apply_env_overrides(PipelineConfig& c) {
  static const char* keys[] = {"plant",         "horizon",       "seed",
                               "max_attempts",  "gamma",         "mu",
                               "eta1",          "eta2",          "eta3",
                               "state_spacing", "input_spacing", "delta_semantics",
                               "mode",          "max_steps",     "out_dir"};
  nlohmann::json patch = nlohmann::json::object();
  for (const char* key : keys) {
    std::string env = "SYMDD_";
    for (const char* p = key; *p; ++p) env += static_cast<char>(std::toupper(*p));
    if (const char* v = std::getenv(env.c_str())) {
      const auto parsed = nlohmann::json::parse(v, nullptr, false);
      patch[key] = parsed.is_discarded() ? nlohmann::json(std::string(v)) : parsed;
    }
  }
  detail_cfg::from_json_into(patch, c);
}

inline void validate_config(const PipelineConfig& c, int dict_size) {
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw error("config: gamma must be in (0,1)");
  if (!(c.mu > 0.0)) throw error("config: mu must be > 0");
  if (!(c.eta1 > 0.0 && c.eta1 < 1.0)) throw error("config: eta1 must be in (0,1)");
  if (c.horizon < dict_size + 1)
    throw error("config: horizon must be >= M+1 = " + std::to_string(dict_size + 1));
  if (!(c.state_spacing > 0.0) || !(c.input_spacing > 0.0))
    throw error("config: grid spacings must be positive");
  if (c.spec_kind != "safety" && c.spec_kind != "reach_avoid")
    throw error("config: spec kind must be safety or reach_avoid");
  if (c.mode != "nominal" && c.mode != "robust")
    throw error("config: mode must be nominal or robust");
}

inline PipelineConfig load_config(const std::string& path, bool env_overrides = true) {
  std::ifstream in(path);
  if (!in) throw io_error("load_config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  PipelineConfig c;
  detail_cfg::from_json_into(j, c);
  if (env_overrides) apply_env_overrides(c);
  return c;
}

inline PlantSpec resolve_plant(const PipelineConfig& c) {
  if (c.plant == "case_study_safety") return make_case_study_plant(CaseStudyKind::safety);
  if (c.plant == "case_study_reach_avoid")
    return make_case_study_plant(CaseStudyKind::reach_avoid);
  return load_plant(c.plant);
}

inline MonomialDictionary resolve_dictionary(const PipelineConfig& c, int n) {
  if (c.monomials) return c.dictionary();
  return build_dictionary(n, c.dmax);
}

inline double certified_delta(const Grid& state_grid, DeltaSemantics sem) {
  return sem == DeltaSemantics::half_diagonal ? state_grid.delta_cert
                                              : 2.0 * state_grid.delta_cert;
}

// ---------------------------------------------------------------------------
// stage commands; each consumes and produces files under cfg.out_dir

namespace fs_detail {
inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}
inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
}
}  // namespace fs_detail

struct StagePaths {
  std::string traj1, traj2, rank_report, certificate, epsilon, model_bin, model_json,
      controller_bin, controller_json, trace, verdicts;
  explicit StagePaths(const std::string& dir)
      : traj1(fs_detail::join(dir, "traj1.csv")),
        traj2(fs_detail::join(dir, "traj2.csv")),
        rank_report(fs_detail::join(dir, "rank_report.json")),
        certificate(fs_detail::join(dir, "certificate.json")),
        epsilon(fs_detail::join(dir, "epsilon.json")),
        model_bin(fs_detail::join(dir, "model.bin")),
        model_json(fs_detail::join(dir, "model.json")),
        controller_bin(fs_detail::join(dir, "controller.bin")),
        controller_json(fs_detail::join(dir, "controller.json")),
        trace(fs_detail::join(dir, "trace.csv")),
        verdicts(fs_detail::join(dir, "verdicts.json")) {}
};

inline void cmd_collect(const PipelineConfig& cfg) {
  const PlantSpec spec = resolve_plant(cfg);
  const PlantOracle plant(spec);
  const MonomialDictionary dict = resolve_dictionary(cfg, plant.state_dim());
  validate_config(cfg, dict.size());
  fs_detail::ensure_dir(cfg.out_dir);
  const StagePaths paths(cfg.out_dir);

  std::mt19937_64 rng1(cfg.seed);
  std::mt19937_64 rng2(cfg.seed + 1);
  const auto policy = uniform_excitation(plant.input_box());
  auto [b1, dm1] =
      collect_with_retry(plant, dict, policy, cfg.horizon, cfg.max_attempts, rng1);
  auto [b2, dm2] =
      collect_with_retry(plant, dict, policy, cfg.horizon, cfg.max_attempts, rng2);
  save_trajectory_csv(b1, paths.traj1);
  save_trajectory_csv(b2, paths.traj2);

  const auto report = [](const RankReport& r) {
    return nlohmann::json{{"pass", r.pass},
                          {"rank", r.rank},
                          {"required_rank", r.required_rank},
                          {"T", r.T},
                          {"min_T", r.min_T},
                          {"singular_values", r.singular_values},
                          {"smallest_singular_value", r.smallest_singular_value},
                          {"threshold", r.threshold}};
  };
  std::ofstream out(paths.rank_report);
  out << nlohmann::json{{"trajectory1", report(check_rank(dm1, dict.size(), cfg.horizon))},
                        {"trajectory2", report(check_rank(dm2, dict.size(), cfg.horizon))}}
             .dump(2)
      << "\n";
}

inline AsfCertificate cmd_certify(const PipelineConfig& cfg) {
  const PlantSpec spec = resolve_plant(cfg);
  const MonomialDictionary dict = resolve_dictionary(cfg, spec.n());
  validate_config(cfg, dict.size());
  const StagePaths paths(cfg.out_dir);

  const TrajectoryBatch b1 = load_trajectory_csv(paths.traj1);
  const TrajectoryBatch b2 = load_trajectory_csv(paths.traj2);
  const DataMatrices dm1 = build_data_matrix(dict, b1);
  const DataMatrices dm2 = build_data_matrix(dict, b2);
  const PolynomialMatrix upsilon = build_upsilon(dict);
  const auto basis = poly_basis(dict.n, dict.max_degree() - 1);
  const ConstraintSystem cs = assemble_constraints(dict, upsilon, dm1, b1, dm2, b2, basis);
  AsfCertificate cert = solve_asf(cs, cfg.gamma, cfg.mu);
  save_certificate(cert, paths.certificate);

  // closeness bound at the configured state grid
  const Grid state_grid = build_grid(spec.state_box, cfg.state_spacing);
  const Grid input_grid = build_grid(spec.input_box, cfg.input_spacing);
  const double delta = certified_delta(state_grid, cfg.delta_semantics);
  const auto [alpha, psi] = compute_alpha_psi(cert, cfg.mu, delta);
  EpsilonReport rep = compute_epsilon_rho0(alpha, cfg.gamma, psi, cfg.eta1);
  double nu = 0.0;
  for (uint64_t u = 0; u < input_grid.num_points(); ++u)
    nu = std::max(nu, input_grid.representative(u).norm());
  rep.nu = nu;

  std::ofstream out(paths.epsilon);
  out << nlohmann::json{{"alpha", rep.alpha},
                        {"psi", rep.psi},
                        {"psi_bar", rep.psi_bar},
                        {"rho", rep.rho},
                        {"rho_bar", rep.rho_bar},
                        {"nu", rep.nu},
                        {"eta1", rep.eta1},
                        {"epsilon", rep.epsilon},
                        {"gamma", cfg.gamma},
                        {"mu", cfg.mu},
                        {"delta", delta},
                        {"delta_semantics",
                         cfg.delta_semantics == DeltaSemantics::half_diagonal
                             ? "half_diagonal"
                             : "diameter"},
                        {"delta_diameter_psi",
                         (1.0 + 1.0 / cfg.mu) *
                             Eigen::SelfAdjointEigenSolver<Mat>(cert.P, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .maxCoeff() *
                             4.0 * state_grid.delta_cert * state_grid.delta_cert}}
             .dump(2)
      << "\n";
  return cert;
}

inline SymbolicModel cmd_abstract(const PipelineConfig& cfg) {
  const PlantSpec spec = resolve_plant(cfg);
  const PlantOracle plant(spec);
  validate_config(cfg, resolve_dictionary(cfg, spec.n()).size());
  fs_detail::ensure_dir(cfg.out_dir);
  const StagePaths paths(cfg.out_dir);
  const Grid state_grid = build_grid(spec.state_box, cfg.state_spacing);
  const Grid input_grid = build_grid(spec.input_box, cfg.input_spacing);
  SymbolicModel model = build_symbolic_model(
      [&plant](const Vec& x, const Vec& u) { return plant.step(x, u); }, state_grid,
      input_grid);
  save_symbolic_model(model, paths.model_bin, paths.model_json);
  return model;
}

inline SymbolicController cmd_synth(const PipelineConfig& cfg) {
  const StagePaths paths(cfg.out_dir);
  const SymbolicModel model = load_symbolic_model(paths.model_bin);
  const PlantSpec spec = resolve_plant(cfg);

  double epsilon = 0.0;
  if (cfg.mode == "robust") {
    std::ifstream in(paths.epsilon);
    if (!in) throw io_error("cmd_synth: robust mode requires " + paths.epsilon);
    nlohmann::json j;
    in >> j;
    epsilon = j.at("epsilon").get<double>();
  }
  const MarginMode mode = cfg.mode == "robust" ? MarginMode::robust : MarginMode::nominal;

  SymbolicController ctrl;
  nlohmann::json boxes = nlohmann::json::object();
  if (cfg.spec_kind == "safety") {
    const Box safe = cfg.safe_box ? *cfg.safe_box : spec.state_box;
    const auto preds = spec_predicates(model.state_grid, &safe, nullptr, nullptr, mode, epsilon);
    ctrl = synth_safety(model, preds.safe);
    boxes["safe_box"] = detail::box_to_json(safe);
  } else {
    if (!cfg.target_box) throw error("cmd_synth: reach_avoid spec requires a target box");
    const Box* avoid = cfg.avoid_box ? &*cfg.avoid_box : nullptr;
    const auto preds =
        spec_predicates(model.state_grid, nullptr, &*cfg.target_box, avoid, mode, epsilon);
    ctrl = synth_reach_avoid(model, preds.target, preds.avoid);
    boxes["target_box"] = detail::box_to_json(*cfg.target_box);
    if (avoid) boxes["avoid_box"] = detail::box_to_json(*avoid);
  }
  save_controller(ctrl, paths.controller_bin, paths.controller_json,
                  nlohmann::json{{"boxes", boxes}, {"mode", cfg.mode}, {"epsilon", epsilon}});
  return ctrl;
}

inline SimulationTrace cmd_simulate(const PipelineConfig& cfg) {
  const PlantSpec spec = resolve_plant(cfg);
  const PlantOracle plant(spec);
  const StagePaths paths(cfg.out_dir);
  const SymbolicModel model = load_symbolic_model(paths.model_bin);
  const SymbolicController ctrl = load_controller(paths.controller_bin);
  const AsfCertificate cert = load_certificate(paths.certificate);
  const TrajectoryBatch b1 = load_trajectory_csv(paths.traj1);
  const TrajectoryBatch b2 = load_trajectory_csv(paths.traj2);
  const InterfaceMap interface = make_interface(cert, b1, b2);

  nlohmann::json eps_json;
  {
    std::ifstream in(paths.epsilon);
    if (!in) throw io_error("cmd_simulate: missing " + paths.epsilon);
    in >> eps_json;
  }

  SimulateOptions opts;
  opts.max_steps = cfg.max_steps;
  opts.epsilon = eps_json.at("epsilon").get<double>();
  opts.psi_bar = eps_json.at("psi_bar").get<double>();
  if (cfg.spec_kind == "safety") {
    opts.safe_box = cfg.safe_box ? *cfg.safe_box : spec.state_box;
  } else {
    opts.target_box = cfg.target_box;
    opts.avoid_box = cfg.avoid_box;
  }

  Vec x0;
  if (cfg.x0) {
    x0 = Eigen::Map<const Vec>(cfg.x0->data(), static_cast<Eigen::Index>(cfg.x0->size()));
  } else {
    // default start: first in-domain grid point inside the initial box
    // (reach-avoid) or the in-domain point closest to the box center (safety)
    const Box pick_box = cfg.initial_box ? *cfg.initial_box
                                         : (cfg.safe_box ? *cfg.safe_box : spec.state_box);
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    const Vec center = 0.5 * (pick_box.lo + pick_box.hi);
    for (uint64_t s = 0; s < ctrl.choice.size(); ++s) {
      if (!ctrl.in_domain(s)) continue;
      const Vec rep = model.state_grid.representative(s);
      if (!pick_box.contains(rep)) continue;
      const double d = (rep - center).norm();
      if (cfg.spec_kind == "reach_avoid") {
        x0 = rep;
        found = true;
        break;
      }
      if (d < best) {
        best = d;
        x0 = rep;
        found = true;
      }
    }
    if (!found) throw error("cmd_simulate: no in-domain start in the initial box");
  }

  SimulationTrace trace = simulate_closed_loop(plant, model, ctrl, interface, x0, opts);
  export_trace(trace, paths.trace);
  std::ofstream out(paths.verdicts);
  out << verdicts_to_json(trace).dump(2) << "\n";
  return trace;
}

/// Full pipeline with the §-style case-study defaults baked in.
inline PipelineConfig case_study_config(const std::string& kind, const std::string& out_dir) {
  PipelineConfig cfg;
  cfg.out_dir = out_dir;
  cfg.seed = 7;
  if (kind == "safety") {
    cfg.plant = "case_study_safety";
    cfg.spec_kind = "safety";
    cfg.state_spacing = 0.002;
    cfg.input_spacing = 0.1;
  } else if (kind == "reach_avoid") {
    cfg.plant = "case_study_reach_avoid";
    cfg.spec_kind = "reach_avoid";
    cfg.state_spacing = 0.02;
    cfg.input_spacing = 0.1;
    cfg.target_box = Box(Vec{{0.7, 0.7}}, Vec{{1.0, 1.0}});
    cfg.avoid_box = Box(Vec{{-0.5, -1.0}}, Vec{{0.5, 0.5}});
    cfg.initial_box = Box(Vec{{-1.0, -1.0}}, Vec{{-0.6, -0.5}});
    cfg.max_steps = 400;
  } else {
    throw error("case_study_config: kind must be safety or reach_avoid");
  }
  return cfg;
}

inline SimulationTrace cmd_casestudy(const std::string& kind, const std::string& out_dir) {
  PipelineConfig cfg = case_study_config(kind, out_dir);
  apply_env_overrides(cfg);
  cmd_collect(cfg);
  cmd_certify(cfg);
  cmd_abstract(cfg);
  cmd_synth(cfg);
  return cmd_simulate(cfg);
}

}  // namespace symdd
