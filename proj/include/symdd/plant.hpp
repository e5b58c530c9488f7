#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <utility>

#include <json.hpp>

#include "symdd/core.hpp"
#include "symdd/poly.hpp"

namespace symdd {

/// Ground-truth description of a dt system x+ = A*M(x) + B*u on a state box
/// X with input box U.  The pipeline never sees this type directly; it only
/// receives a PlantOracle.
struct PlantSpec {
  Mat A;  // n x M
  Mat B;  // n x m
  MonomialDictionary dict;
  Box state_box;
  Box input_box;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int M() const { return dict.size(); }

  void validate() const {
    dict.validate();
    if (dict.n != n()) throw dimension_error("PlantSpec: dict state dimension mismatch");
    if (A.cols() != dict.size()) throw dimension_error("PlantSpec: A has wrong column count");
    if (B.rows() != A.rows()) throw dimension_error("PlantSpec: B has wrong row count");
    if (state_box.dim() != n()) throw dimension_error("PlantSpec: state box dimension mismatch");
    if (input_box.dim() != m()) throw dimension_error("PlantSpec: input box dimension mismatch");
  }
};

/// One exact simulation step.  No quantization, no noise.
inline Vec step(const PlantSpec& plant, const Vec& x, const Vec& u) {
  if (static_cast<int>(x.size()) != plant.n())
    throw dimension_error("step: state dimension mismatch");
  if (static_cast<int>(u.size()) != plant.m())
    throw dimension_error("step: input dimension mismatch");
  if (!x.allFinite() || !u.allFinite()) throw error("step: non-finite input");
  return plant.A * eval_dictionary(plant.dict, x) + plant.B * u;
}

/// The black-box interface handed to the pipeline: a step function plus the
/// state/input boxes.  True parameters are reachable only through the
/// explicitly named test-only accessor.
class PlantOracle {
 public:
  explicit PlantOracle(PlantSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  Vec step(const Vec& x, const Vec& u) const { return symdd::step(spec_, x, u); }
  const Box& state_box() const { return spec_.state_box; }
  const Box& input_box() const { return spec_.input_box; }
  int state_dim() const { return spec_.n(); }
  int input_dim() const { return spec_.m(); }

  /// Ground-truth access for oracle tests only; production code must not call this.
  const PlantSpec& true_parameters_for_testing() const { return spec_; }

 private:
  PlantSpec spec_;
};

enum class CaseStudyKind { safety, reach_avoid };

/// Double integrator with a quadratic drift term, sampled at tau = 0.2:
///   x1+ = x1 + tau*x2,  x2+ = x2 + tau*(x1^2 + u).
inline PlantSpec make_case_study_plant(CaseStudyKind kind = CaseStudyKind::safety) {
  const double tau = 0.2;
  PlantSpec p;
  p.dict.n = 2;
  p.dict.monos = {Monomial{{1, 0}}, Monomial{{0, 1}}, Monomial{{2, 0}}};
  p.A = Mat{{1.0, tau, 0.0}, {0.0, 1.0, tau}};
  p.B = Mat{{0.0}, {tau}};
  const double xb = (kind == CaseStudyKind::safety) ? 0.5 : 1.0;
  p.state_box = Box(Vec::Constant(2, -xb), Vec::Constant(2, xb));
  p.input_box = Box(Vec::Constant(1, -2.5), Vec::Constant(1, 2.5));
  p.validate();
  return p;
}

namespace detail {
inline nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Mat matrix_from_json(const nlohmann::json& j) {
  const auto r = j.size();
  if (r == 0) return Mat(0, 0);
  const auto c = j.at(0).size();
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (size_t i = 0; i < r; ++i)
    for (size_t jj = 0; jj < c; ++jj) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) = j.at(i).at(jj).get<double>();
  return m;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const nlohmann::json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  return v;
}

inline nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json{{"lo", vec_to_json(b.lo)}, {"hi", vec_to_json(b.hi)}};
}

inline Box box_from_json(const nlohmann::json& j) {
  return Box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
}

inline nlohmann::json dict_to_json(const MonomialDictionary& d) {
  nlohmann::json monos = nlohmann::json::array();
  for (const auto& m : d.monos) monos.push_back(m.exponents);
  return monos;
}

inline MonomialDictionary dict_from_json(int n, const nlohmann::json& j) {
  MonomialDictionary d;
  d.n = n;
  for (const auto& e : j) d.monos.push_back(Monomial{e.get<std::vector<int>>()});
  d.validate();
  return d;
}
}  // namespace detail

inline nlohmann::json plant_to_json(const PlantSpec& p) {
  return nlohmann::json{
      {"n", p.n()},
      {"m", p.m()},
      {"monomials", detail::dict_to_json(p.dict)},
      {"A", detail::matrix_to_json(p.A)},
      {"B", detail::matrix_to_json(p.B)},
      {"state_box", detail::box_to_json(p.state_box)},
      {"input_box", detail::box_to_json(p.input_box)},
  };
}

inline PlantSpec plant_from_json(const nlohmann::json& j) {
  PlantSpec p;
  const int n = j.at("n").get<int>();
  p.dict = detail::dict_from_json(n, j.at("monomials"));
  p.A = detail::matrix_from_json(j.at("A"));
  p.B = detail::matrix_from_json(j.at("B"));
  p.state_box = detail::box_from_json(j.at("state_box"));
  p.input_box = detail::box_from_json(j.at("input_box"));
  p.validate();
  return p;
}

inline PlantSpec load_plant(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_plant: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return plant_from_json(j);
}

inline void save_plant(const PlantSpec& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_plant: cannot open " + path);
  out << plant_to_json(p).dump(2) << "\n";
}

}  // namespace symdd
