#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "symdd/pipeline.hpp"

namespace {

symdd::PipelineConfig make_config(const std::string& config_path, const std::string& out_dir,
                                  long long seed) {
  symdd::PipelineConfig cfg;
  if (!config_path.empty()) {
    cfg = symdd::load_config(config_path);
  } else {
    symdd::apply_env_overrides(cfg);
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven controller synthesis for unknown polynomial systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  std::string kind = "safety";

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline configuration (JSON)");
    sub->add_option("--out", out_dir, "output directory for stage artifacts");
    sub->add_option("--seed", seed, "override the random seed");
  };

  auto* collect = app.add_subcommand("collect", "collect two excited trajectories");
  auto* certify = app.add_subcommand("certify", "solve and verify the simulation function");
  auto* abstract_ = app.add_subcommand("abstract", "build the symbolic model");
  auto* synth = app.add_subcommand("synth", "synthesize the symbolic controller");
  auto* simulate = app.add_subcommand("simulate", "run the refined closed loop");
  auto* casestudy = app.add_subcommand("casestudy", "full pipeline with built-in defaults");
  for (auto* sub : {collect, certify, abstract_, synth, simulate, casestudy}) add_common(sub);
  casestudy->add_option("--kind", kind, "safety or reach_avoid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (casestudy->parsed()) {
      symdd::PipelineConfig cfg = symdd::case_study_config(kind, out_dir.empty() ? "out" : out_dir);
      if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
      symdd::apply_env_overrides(cfg);
      symdd::cmd_collect(cfg);
      symdd::cmd_certify(cfg);
      symdd::cmd_abstract(cfg);
      symdd::cmd_synth(cfg);
      const symdd::SimulationTrace trace = symdd::cmd_simulate(cfg);
      std::cout << symdd::verdicts_to_json(trace).dump(2) << "\n";
      return 0;
    }
    const symdd::PipelineConfig cfg = make_config(config_path, out_dir, seed);
    if (collect->parsed()) {
      symdd::cmd_collect(cfg);
    } else if (certify->parsed()) {
      const symdd::AsfCertificate cert = symdd::cmd_certify(cfg);
      std::cout << "lmi_margin " << symdd::format_double(cert.lmi_margin) << ", max residual "
                << symdd::format_double(cert.max_residual()) << "\n";
    } else if (abstract_->parsed()) {
      const symdd::SymbolicModel model = symdd::cmd_abstract(cfg);
      std::cout << model.state_grid.num_points() << " states, "
                << model.input_grid.num_points() << " inputs\n";
    } else if (synth->parsed()) {
      const symdd::SymbolicController ctrl = symdd::cmd_synth(cfg);
      std::cout << "winning set size " << ctrl.domain_size() << " after " << ctrl.iterations
                << " iterations\n";
    } else if (simulate->parsed()) {
      const symdd::SimulationTrace trace = symdd::cmd_simulate(cfg);
      std::cout << symdd::verdicts_to_json(trace).dump(2) << "\n";
    }
    return 0;
  } catch (const symdd::infeasible_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const symdd::excitation_error& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
