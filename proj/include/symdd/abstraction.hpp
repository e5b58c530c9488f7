#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symdd/core.hpp"
#include "symdd/plant.hpp"

namespace symdd {

constexpr uint32_t OUT_OF_DOMAIN = 0xFFFFFFFFu;

/// Uniform cell-centered grid over a box.  The box is split into
/// ceil(extent/spacing) equal cells per axis, so actual cell sides never
/// exceed the requested spacing and the certified quantization bound
/// delta_cert = (1/2) * sqrt(sum cell_j^2) covers the whole box.
struct Grid {
  Box box;
  Vec spacing;        // requested spacing
  Vec cell;           // actual cell side per axis
  std::vector<int> points_per_dim;
  double delta_cert = 0.0;

  int dim() const { return box.dim(); }

  uint64_t num_points() const {
    uint64_t n = 1;
    for (int c : points_per_dim) n *= static_cast<uint64_t>(c);
    return n;
  }

  /// Input-grid reading of delta_cert (Remark-3.6 beta1).
  double beta1() const { return delta_cert; }

  Vec representative(uint64_t index) const {
    Vec x(dim());
    for (int j = dim() - 1; j >= 0; --j) {
      const uint64_t c = static_cast<uint64_t>(points_per_dim[static_cast<size_t>(j)]);
      const uint64_t i = index % c;
      index /= c;
      x[j] = box.lo[j] + (static_cast<double>(i) + 0.5) * cell[j];
    }
    return x;
  }
};

inline Grid build_grid(const Box& box, const Vec& spacing) {
  if (spacing.size() != box.lo.size())
    throw dimension_error("build_grid: spacing dimension mismatch");
  Grid g;
  g.box = box;
  g.spacing = spacing;
  g.cell.resize(box.dim());
  g.points_per_dim.resize(static_cast<size_t>(box.dim()));
  double sq = 0.0;
  for (int j = 0; j < box.dim(); ++j) {
    if (!(spacing[j] > 0.0)) throw error("build_grid: spacing must be positive");
    const double extent = box.hi[j] - box.lo[j];
    const int c = std::max(1, static_cast<int>(std::ceil(extent / spacing[j] - 1e-12)));
    g.points_per_dim[static_cast<size_t>(j)] = c;
    g.cell[j] = extent / c;
    sq += g.cell[j] * g.cell[j];
  }
  g.delta_cert = 0.5 * std::sqrt(sq);
  return g;
}

inline Grid build_grid(const Box& box, double spacing) {
  return build_grid(box, Vec::Constant(box.dim(), spacing));
}

struct QuantizeResult {
  uint64_t index = 0;
  Vec representative;
  bool out_of_box = false;
};

/// Nearest cell center, clamped to the box.  ||Pi(x) - x|| <= delta_cert for
/// in-box points; out-of-box points are flagged.
inline QuantizeResult quantize(const Grid& grid, const Vec& x) {
  if (x.size() != grid.box.lo.size())
    throw dimension_error("quantize: dimension mismatch");
  QuantizeResult q;
  q.out_of_box = !grid.box.contains(x);
  uint64_t index = 0;
  for (int j = 0; j < grid.dim(); ++j) {
    const int c = grid.points_per_dim[static_cast<size_t>(j)];
    int i = static_cast<int>(std::floor((x[j] - grid.box.lo[j]) / grid.cell[j]));
    i = std::min(std::max(i, 0), c - 1);
    index = index * static_cast<uint64_t>(c) + static_cast<uint64_t>(i);
  }
  q.index = index;
  q.representative = grid.representative(index);
  return q;
}

/// Finite deterministic transition system over the two grids.  trans holds
/// one successor state index per (state, input) pair, state-major.
struct SymbolicModel {
  Grid state_grid;
  Grid input_grid;
  std::vector<uint32_t> trans;

  uint32_t successor(uint64_t state, uint64_t input) const {
    return trans[state * input_grid.num_points() + input];
  }
};

using StepFn = std::function<Vec(const Vec&, const Vec&)>;

/// One black-box query per (state, input) pair; successors leaving the state
/// box become OUT_OF_DOMAIN rather than being clamped.
inline SymbolicModel build_symbolic_model(const StepFn& step, const Grid& state_grid,
                                          const Grid& input_grid) {
  SymbolicModel model;
  model.state_grid = state_grid;
  model.input_grid = input_grid;
  const uint64_t ns = state_grid.num_points();
  const uint64_t nu = input_grid.num_points();
  if (ns * nu > (uint64_t{1} << 32))
    throw error("build_symbolic_model: table too large for 32-bit indexing");
  model.trans.resize(ns * nu);
  std::vector<Vec> inputs(nu);
  for (uint64_t ui = 0; ui < nu; ++ui) inputs[ui] = input_grid.representative(ui);
  for (uint64_t si = 0; si < ns; ++si) {
    const Vec xhat = state_grid.representative(si);
    for (uint64_t ui = 0; ui < nu; ++ui) {
      const Vec succ = step(xhat, inputs[ui]);
      const QuantizeResult q = quantize(state_grid, succ);
      model.trans[si * nu + ui] = q.out_of_box ? OUT_OF_DOMAIN : static_cast<uint32_t>(q.index);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// serialization: binary table + JSON sidecar with the grid metadata

namespace detail {

constexpr uint32_t kModelMagic = 0x314D5953;  // "SYM1"
constexpr uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw io_error("model file truncated");
  return v;
}

inline void write_grid(std::ofstream& out, const Grid& g) {
  write_pod<uint32_t>(out, static_cast<uint32_t>(g.dim()));
  for (int j = 0; j < g.dim(); ++j) {
    write_pod<double>(out, g.box.lo[j]);
    write_pod<double>(out, g.box.hi[j]);
    write_pod<double>(out, g.spacing[j]);
    write_pod<uint32_t>(out, static_cast<uint32_t>(g.points_per_dim[static_cast<size_t>(j)]));
  }
}

inline Grid read_grid(std::ifstream& in) {
  const uint32_t d = read_pod<uint32_t>(in);
  Vec lo(d), hi(d), spacing(d);
  for (uint32_t j = 0; j < d; ++j) {
    lo[j] = read_pod<double>(in);
    hi[j] = read_pod<double>(in);
    spacing[j] = read_pod<double>(in);
    (void)read_pod<uint32_t>(in);  // counts are re-derived from the spacing
  }
  return build_grid(Box(lo, hi), spacing);
}

inline nlohmann::json grid_to_json(const Grid& g) {
  return nlohmann::json{
      {"box", box_to_json(g.box)},
      {"spacing", vec_to_json(g.spacing)},
      {"cell", vec_to_json(g.cell)},
      {"points_per_dim", g.points_per_dim},
      {"delta_cert", g.delta_cert},
  };
}

}  // namespace detail

inline void save_symbolic_model(const SymbolicModel& model, const std::string& path,
                                const std::string& sidecar_path = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("save_symbolic_model: cannot open " + path);
  detail::write_pod<uint32_t>(out, detail::kModelMagic);
  detail::write_pod<uint32_t>(out, detail::kModelVersion);
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(model.state_grid.dim()));
  detail::write_pod<uint32_t>(out, static_cast<uint32_t>(model.input_grid.dim()));
  detail::write_grid(out, model.state_grid);
  detail::write_grid(out, model.input_grid);
  detail::write_pod<uint64_t>(out, static_cast<uint64_t>(model.trans.size()));
  out.write(reinterpret_cast<const char*>(model.trans.data()),
            static_cast<std::streamsize>(model.trans.size() * sizeof(uint32_t)));
  if (!out) throw io_error("save_symbolic_model: write failed for " + path);
  if (!sidecar_path.empty()) {
    std::ofstream side(sidecar_path);
    if (!side) throw io_error("save_symbolic_model: cannot open " + sidecar_path);
    side << nlohmann::json{{"state_grid", detail::grid_to_json(model.state_grid)},
                           {"input_grid", detail::grid_to_json(model.input_grid)}}
                .dump(2)
         << "\n";
  }
}

inline SymbolicModel load_symbolic_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_symbolic_model: cannot open " + path);
  if (detail::read_pod<uint32_t>(in) != detail::kModelMagic)
    throw io_error("load_symbolic_model: bad magic in " + path);
  if (detail::read_pod<uint32_t>(in) != detail::kModelVersion)
    throw io_error("load_symbolic_model: unsupported version in " + path);
  (void)detail::read_pod<uint32_t>(in);
  (void)detail::read_pod<uint32_t>(in);
  SymbolicModel model;
  model.state_grid = detail::read_grid(in);
  model.input_grid = detail::read_grid(in);
  const uint64_t count = detail::read_pod<uint64_t>(in);
  model.trans.resize(count);
  in.read(reinterpret_cast<char*>(model.trans.data()),
          static_cast<std::streamsize>(count * sizeof(uint32_t)));
  if (!in) throw io_error("load_symbolic_model: table truncated in " + path);
  return model;
}

}  // namespace symdd
