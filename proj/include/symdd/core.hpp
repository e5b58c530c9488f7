#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace symdd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

class dimension_error : public error {
 public:
  explicit dimension_error(const std::string& what) : error(what) {}
};

class io_error : public error {
 public:
  explicit io_error(const std::string& what) : error(what) {}
};

/// Axis-aligned box [lo_1,hi_1] x ... x [lo_d,hi_d].
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw dimension_error("Box: lo/hi size mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw error("Box: empty interval on axis " + std::to_string(i));
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (x.size() != lo.size()) throw dimension_error("Box::contains: dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  Vec clamp(const Vec& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }

  Vec sample(std::mt19937_64& rng) const {
    Vec x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      std::uniform_real_distribution<double> d(lo[i], hi[i]);
      x[i] = d(rng);
    }
    return x;
  }

  /// Box grown (eps > 0) or shrunk (eps < 0) by eps on every face.
  Box inflated(double eps) const {
    Vec l = lo.array() - eps;
    Vec h = hi.array() + eps;
    for (Eigen::Index i = 0; i < l.size(); ++i)
      if (l[i] > h[i]) throw error("Box::inflated: deflation produced an empty box");
    return Box(l, h);
  }
};

/// Shortest decimal rendering that round-trips a double exactly.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace symdd
