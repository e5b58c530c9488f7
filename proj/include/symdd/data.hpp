#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "symdd/core.hpp"
#include "symdd/plant.hpp"
#include "symdd/poly.hpp"

namespace symdd {

/// Aligned input-state samples (O, I, O+) over a horizon T:
/// column t of Oplus is the plant successor of (O col t, I col t).
struct TrajectoryBatch {
  Mat O;      // n x T
  Mat I;      // m x T
  Mat Oplus;  // n x T
  int T = 0;
};

/// Lifted data matrix with its numerical-rank diagnostics.
struct DataMatrices {
  Mat Mmat;  // M x T
  int rank = 0;
  std::vector<double> singular_values;  // descending
  double rank_threshold = 0.0;
};

struct RankReport {
  bool pass = false;
  int rank = 0;
  int required_rank = 0;
  int T = 0;
  int min_T = 0;
  std::vector<double> singular_values;
  double smallest_singular_value = 0.0;
  double threshold = 0.0;
};

class excitation_error : public error {
 public:
  excitation_error(const std::string& what, int best_rank)
      : error(what), best_rank(best_rank) {}
  int best_rank;
};

class collection_error : public error {
 public:
  collection_error(const std::string& what, int step_index)
      : error(what), step_index(step_index) {}
  int step_index;
};

/// Produces the input applied at step k.  The default policy draws inputs
/// uniformly from the plant input box.
using ExcitationPolicy = std::function<Vec(int k, std::mt19937_64& rng)>;

inline ExcitationPolicy uniform_excitation(const Box& input_box) {
  return [input_box](int, std::mt19937_64& rng) { return input_box.sample(rng); };
}

struct CollectOptions {
  /// States leaving this box abort collection (poor excitation scale).
  /// Defaults to the state box inflated by 20x its largest half-width.
  std::optional<Box> guard_box;
};

inline Box default_guard_box(const Box& state_box) {
  const double r = 20.0 * (state_box.hi - state_box.lo).cwiseAbs().maxCoeff() / 2.0;
  return state_box.inflated(r);
}

inline TrajectoryBatch collect_trajectory(const PlantOracle& plant, const Vec& x0,
                                          const ExcitationPolicy& policy, int T,
                                          std::mt19937_64& rng,
                                          const CollectOptions& opts = {}) {
  if (T < 1) throw error("collect_trajectory: T must be >= 1");
  const Box guard = opts.guard_box ? *opts.guard_box : default_guard_box(plant.state_box());
  TrajectoryBatch batch;
  batch.T = T;
  batch.O.resize(plant.state_dim(), T);
  batch.I.resize(plant.input_dim(), T);
  batch.Oplus.resize(plant.state_dim(), T);
  Vec x = x0;
  for (int t = 0; t < T; ++t) {
    if (!guard.contains(x))
      throw collection_error("collect_trajectory: state left the guard box at step " +
                                 std::to_string(t),
                             t);
    const Vec u = policy(t, rng);
    batch.O.col(t) = x;
    batch.I.col(t) = u;
    x = plant.step(x, u);
    batch.Oplus.col(t) = x;
  }
  return batch;
}

inline DataMatrices build_data_matrix(const MonomialDictionary& dict,
                                      const TrajectoryBatch& batch) {
  if (dict.n != static_cast<int>(batch.O.rows()))
    throw dimension_error("build_data_matrix: dictionary dimension mismatch");
  DataMatrices dm;
  dm.Mmat.resize(dict.size(), batch.T);
  for (int t = 0; t < batch.T; ++t)
    dm.Mmat.col(t) = eval_dictionary(dict, batch.O.col(t));
  Eigen::JacobiSVD<Mat> svd(dm.Mmat);
  const auto& sv = svd.singularValues();
  dm.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double sigma1 = sv.size() > 0 ? sv[0] : 0.0;
  dm.rank_threshold =
      sigma1 * batch.T * std::numeric_limits<double>::epsilon() * 1e3;
  dm.rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > dm.rank_threshold) ++dm.rank;
  return dm;
}

/// Full row rank M and horizon T >= M + 1; failure is a value, not an error.
inline RankReport check_rank(const DataMatrices& dm, int M, int T) {
  RankReport r;
  r.rank = dm.rank;
  r.required_rank = M;
  r.T = T;
  r.min_T = M + 1;
  r.singular_values = dm.singular_values;
  r.smallest_singular_value =
      dm.singular_values.empty() ? 0.0 : dm.singular_values.back();
  r.threshold = dm.rank_threshold;
  r.pass = (T >= M + 1) && (dm.rank == M);
  return r;
}

/// Repeats collection with fresh random initial states until the lifted data
/// matrix passes the rank check.
inline std::pair<TrajectoryBatch, DataMatrices> collect_with_retry(
    const PlantOracle& plant, const MonomialDictionary& dict,
    const ExcitationPolicy& policy, int T, int max_attempts, std::mt19937_64& rng,
    const CollectOptions& opts = {}) {
  if (max_attempts < 1) throw error("collect_with_retry: max_attempts must be >= 1");
  int best_rank = -1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Vec x0 = plant.state_box().sample(rng);
    try {
      TrajectoryBatch batch = collect_trajectory(plant, x0, policy, T, rng, opts);
      DataMatrices dm = build_data_matrix(dict, batch);
      if (check_rank(dm, dict.size(), T).pass) return {std::move(batch), std::move(dm)};
      best_rank = std::max(best_rank, dm.rank);
    } catch (const collection_error&) {
      // guard violation: retry with a fresh start
    }
  }
  throw excitation_error(
      "collect_with_retry: rank condition not met after " +
          std::to_string(max_attempts) + " attempts (best rank " +
          std::to_string(std::max(best_rank, 0)) + ", need " +
          std::to_string(dict.size()) + ")",
      std::max(best_rank, 0));
}

/// CSV with header t,x1..xn,u1..um,xp1..xpn; one row per sample.
inline void save_trajectory_csv(const TrajectoryBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_trajectory_csv: cannot open " + path);
  const int n = static_cast<int>(batch.O.rows());
  const int m = static_cast<int>(batch.I.rows());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  for (int i = 1; i <= n; ++i) out << ",xp" << i;
  out << "\n";
  for (int t = 0; t < batch.T; ++t) {
    out << t;
    for (int i = 0; i < n; ++i) out << "," << format_double(batch.O(i, t));
    for (int i = 0; i < m; ++i) out << "," << format_double(batch.I(i, t));
    for (int i = 0; i < n; ++i) out << "," << format_double(batch.Oplus(i, t));
    out << "\n";
  }
}

inline TrajectoryBatch load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_trajectory_csv: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw io_error("load_trajectory_csv: empty file " + path);
  int n = 0, m = 0;
  {
    size_t pos = 0;
    std::vector<std::string> cols;
    std::string h = header + ",";
    while ((pos = h.find(',')) != std::string::npos) {
      cols.push_back(h.substr(0, pos));
      h.erase(0, pos + 1);
    }
    for (const auto& c : cols) {
      if (c.rfind("xp", 0) == 0) continue;
      if (c.rfind('x', 0) == 0) ++n;
      if (c.rfind('u', 0) == 0) ++m;
    }
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != 1 + 2 * n + m)
      throw io_error("load_trajectory_csv: malformed row in " + path);
    rows.push_back(std::move(row));
  }
  TrajectoryBatch batch;
  batch.T = static_cast<int>(rows.size());
  batch.O.resize(n, batch.T);
  batch.I.resize(m, batch.T);
  batch.Oplus.resize(n, batch.T);
  for (int t = 0; t < batch.T; ++t) {
    for (int i = 0; i < n; ++i) batch.O(i, t) = rows[static_cast<size_t>(t)][static_cast<size_t>(1 + i)];
    for (int i = 0; i < m; ++i) batch.I(i, t) = rows[static_cast<size_t>(t)][static_cast<size_t>(1 + n + i)];
    for (int i = 0; i < n; ++i) batch.Oplus(i, t) = rows[static_cast<size_t>(t)][static_cast<size_t>(1 + n + m + i)];
  }
  return batch;
}

}  // namespace symdd
