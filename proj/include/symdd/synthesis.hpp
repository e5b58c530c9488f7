#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdd/abstraction.hpp"
#include "symdd/core.hpp"

namespace symdd {

enum class SpecKind { safety, reach_avoid };

inline std::string to_string(SpecKind k) {
  return k == SpecKind::safety ? "safety" : "reach_avoid";
}

/// Deterministic state-feedback table on the symbolic model.  choice[s] is
/// the selected input index, or OUT_OF_DOMAIN outside the winning set.
struct SymbolicController {
  SpecKind spec_kind = SpecKind::safety;
  std::vector<uint32_t> choice;
  std::vector<uint32_t> rank;  // reach-avoid: value-iteration rank per state
  int iterations = 0;
  std::vector<uint64_t> set_sizes;  // winning-set size after each sweep

  bool in_domain(uint64_t s) const { return choice[s] != OUT_OF_DOMAIN; }
  uint64_t domain_size() const {
    uint64_t c = 0;
    for (uint32_t v : choice) c += (v != OUT_OF_DOMAIN);
    return c;
  }
};

using StatePredicate = std::function<bool(uint64_t)>;

/// Maximal controlled-invariant subset of the safe set:
/// W_{k+1} = { s in W_k : exists u with trans(s,u) in W_k }, from W_0 = safe.
/// Ties among admissible inputs break to the lowest input index.
inline SymbolicController synth_safety(const SymbolicModel& model,
                                       const StatePredicate& safe) {
  const uint64_t ns = model.state_grid.num_points();
  const uint64_t nu = model.input_grid.num_points();
  SymbolicController ctrl;
  ctrl.spec_kind = SpecKind::safety;
  std::vector<uint8_t> win(ns);
  for (uint64_t s = 0; s < ns; ++s) win[s] = safe(s) ? 1 : 0;
  ctrl.choice.assign(ns, OUT_OF_DOMAIN);

  bool changed = true;
  while (changed) {
    changed = false;
    ++ctrl.iterations;
    for (uint64_t s = 0; s < ns; ++s) {
      if (!win[s]) continue;
      uint32_t pick = OUT_OF_DOMAIN;
      const uint32_t* row = model.trans.data() + s * nu;
      for (uint64_t u = 0; u < nu; ++u) {
        const uint32_t succ = row[u];
        if (succ != OUT_OF_DOMAIN && win[succ]) {
          pick = static_cast<uint32_t>(u);
          break;
        }
      }
      ctrl.choice[s] = pick;
      if (pick == OUT_OF_DOMAIN) {
        win[s] = 0;
        changed = true;
      }
    }
    uint64_t size = 0;
    for (uint64_t s = 0; s < ns; ++s) size += win[s];
    ctrl.set_sizes.push_back(size);
  }
  return ctrl;
}

/// Backward-reachability value iteration:
///   V_0 = target \ avoid,  V_{k+1} = V_k + { s not in avoid : exists u with
/// trans(s,u) in V_k }.  choice is fixed the first sweep a state enters and
/// always decreases the recorded rank; avoid wins ties with target.
inline SymbolicController synth_reach_avoid(const SymbolicModel& model,
                                            const StatePredicate& target,
                                            const StatePredicate& avoid) {
  const uint64_t ns = model.state_grid.num_points();
  const uint64_t nu = model.input_grid.num_points();
  SymbolicController ctrl;
  ctrl.spec_kind = SpecKind::reach_avoid;
  ctrl.choice.assign(ns, OUT_OF_DOMAIN);
  ctrl.rank.assign(ns, OUT_OF_DOMAIN);
  std::vector<uint8_t> blocked(ns);
  for (uint64_t s = 0; s < ns; ++s) blocked[s] = avoid(s) ? 1 : 0;
  uint64_t size = 0;
  for (uint64_t s = 0; s < ns; ++s)
    if (!blocked[s] && target(s)) {
      ctrl.rank[s] = 0;
      ctrl.choice[s] = OUT_OF_DOMAIN;  // no move needed inside the target
      ++size;
    }
  ctrl.set_sizes.push_back(size);

  bool changed = true;
  uint32_t level = 0;
  while (changed) {
    changed = false;
    ++level;
    ++ctrl.iterations;
    for (uint64_t s = 0; s < ns; ++s) {
      if (blocked[s] || ctrl.rank[s] != OUT_OF_DOMAIN) continue;
      const uint32_t* row = model.trans.data() + s * nu;
      for (uint64_t u = 0; u < nu; ++u) {
        const uint32_t succ = row[u];
        if (succ != OUT_OF_DOMAIN && ctrl.rank[succ] < level) {
          ctrl.rank[s] = level;
          ctrl.choice[s] = static_cast<uint32_t>(u);
          ++size;
          changed = true;
          break;
        }
      }
    }
    ctrl.set_sizes.push_back(size);
  }
  // Target states are in the domain; simulation stops there, but give them a
  // deterministic move anyway: prefer staying in the target, else any
  // winning successor, else input 0.
  for (uint64_t s = 0; s < ns; ++s) {
    if (ctrl.rank[s] != 0) continue;
    const uint32_t* row = model.trans.data() + s * nu;
    uint32_t pick = 0;
    bool found = false;
    for (uint64_t u = 0; u < nu && !found; ++u)
      if (row[u] != OUT_OF_DOMAIN && ctrl.rank[row[u]] == 0) {
        pick = static_cast<uint32_t>(u);
        found = true;
      }
    for (uint64_t u = 0; u < nu && !found; ++u)
      if (row[u] != OUT_OF_DOMAIN && ctrl.rank[row[u]] != OUT_OF_DOMAIN) {
        pick = static_cast<uint32_t>(u);
        found = true;
      }
    ctrl.choice[s] = pick;
  }
  return ctrl;
}

/// Box-membership predicates over grid representatives.  nominal: the
/// representative must lie in the box; robust: safe/target boxes are deflated
/// by eps on every face and avoid boxes inflated by eps.
struct SpecPredicates {
  StatePredicate safe;
  StatePredicate target;
  StatePredicate avoid;
};

enum class MarginMode { nominal, robust };

inline StatePredicate box_predicate(const Grid& grid, const Box& box) {
  return [grid, box](uint64_t s) { return box.contains(grid.representative(s)); };
}

inline SpecPredicates spec_predicates(const Grid& grid, const Box* safe_box,
                                      const Box* target_box, const Box* avoid_box,
                                      MarginMode mode, double epsilon = 0.0) {
  if (mode == MarginMode::robust && epsilon < 0.0)
    throw error("spec_predicates: epsilon must be >= 0 in robust mode");
  const double shrink = (mode == MarginMode::robust) ? -epsilon : 0.0;
  const double grow = (mode == MarginMode::robust) ? epsilon : 0.0;
  SpecPredicates p;
  p.safe = p.target = [](uint64_t) { return false; };
  p.avoid = [](uint64_t) { return false; };
  if (safe_box) p.safe = box_predicate(grid, safe_box->inflated(shrink));
  if (target_box) p.target = box_predicate(grid, target_box->inflated(shrink));
  if (avoid_box) p.avoid = box_predicate(grid, avoid_box->inflated(grow));
  return p;
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {
constexpr uint32_t kCtrlMagic = 0x31435953;  // "SYC1"
constexpr uint32_t kCtrlVersion = 1;
}  // namespace detail

inline void save_controller(const SymbolicController& ctrl, const std::string& path,
                            const std::string& sidecar_path = "",
                            const nlohmann::json& sidecar_extra = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("save_controller: cannot open " + path);
  detail::write_pod<uint32_t>(out, detail::kCtrlMagic);
  detail::write_pod<uint32_t>(out, detail::kCtrlVersion);
  detail::write_pod<uint32_t>(out, ctrl.spec_kind == SpecKind::safety ? 0u : 1u);
  detail::write_pod<uint64_t>(out, static_cast<uint64_t>(ctrl.choice.size()));
  out.write(reinterpret_cast<const char*>(ctrl.choice.data()),
            static_cast<std::streamsize>(ctrl.choice.size() * sizeof(uint32_t)));
  detail::write_pod<uint64_t>(out, static_cast<uint64_t>(ctrl.rank.size()));
  out.write(reinterpret_cast<const char*>(ctrl.rank.data()),
            static_cast<std::streamsize>(ctrl.rank.size() * sizeof(uint32_t)));
  if (!out) throw io_error("save_controller: write failed for " + path);
  if (!sidecar_path.empty()) {
    nlohmann::json j = sidecar_extra;
    j["spec_kind"] = to_string(ctrl.spec_kind);
    j["iterations"] = ctrl.iterations;
    j["domain_size"] = ctrl.domain_size();
    j["set_sizes"] = ctrl.set_sizes;
    std::ofstream side(sidecar_path);
    if (!side) throw io_error("save_controller: cannot open " + sidecar_path);
    side << j.dump(2) << "\n";
  }
}

inline SymbolicController load_controller(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_controller: cannot open " + path);
  if (detail::read_pod<uint32_t>(in) != detail::kCtrlMagic)
    throw io_error("load_controller: bad magic in " + path);
  if (detail::read_pod<uint32_t>(in) != detail::kCtrlVersion)
    throw io_error("load_controller: unsupported version in " + path);
  SymbolicController ctrl;
  ctrl.spec_kind = detail::read_pod<uint32_t>(in) == 0 ? SpecKind::safety : SpecKind::reach_avoid;
  ctrl.choice.resize(detail::read_pod<uint64_t>(in));
  in.read(reinterpret_cast<char*>(ctrl.choice.data()),
          static_cast<std::streamsize>(ctrl.choice.size() * sizeof(uint32_t)));
  ctrl.rank.resize(detail::read_pod<uint64_t>(in));
  in.read(reinterpret_cast<char*>(ctrl.rank.data()),
          static_cast<std::streamsize>(ctrl.rank.size() * sizeof(uint32_t)));
  if (!in) throw io_error("load_controller: truncated file " + path);
  return ctrl;
}

}  // namespace symdd
