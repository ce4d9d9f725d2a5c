#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ihoc {

/// Upper bound on state and control dimensions. Vectors are dynamically sized
/// up to this capacity but live on the stack, which keeps the per-node
/// Hamiltonian evaluations allocation-free.
inline constexpr int kMaxDim = 16;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A trajectory left the finite reals during integration.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t node, double time)
      : Error("non-finite value at node " + std::to_string(node) + " (t = " +
              std::to_string(time) + ")"),
        node_(node),
        time_(time) {}

  std::size_t node() const { return node_; }
  double time() const { return time_; }

 private:
  std::size_t node_;
  double time_;
};

/// Query outside the time range of a grid-backed object.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Both multipliers vanish, so the pair cannot be put on the unit sphere.
class DegenerateMultiplierError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or unknown builtin problem name.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline Vector MakeVector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

/// Strict lexicographic order on equally sized vectors.
inline bool LexLess(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (b[i] < a[i]) return false;
  }
  return false;
}

}  // namespace ihoc
