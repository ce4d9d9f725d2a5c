#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ihoc/types.h"

namespace ihoc {

/// Uniform grid t0 + k*h, k = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid(double t0, double t1, std::size_t n_steps);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t node_count() const { return n_steps_ + 1; }
  double step() const { return h_; }

  /// Node times are computed as t0 + k*h except the last, which is t1 exactly.
  double node(std::size_t k) const;

  /// Index of the left-closed cell [t_k, t_{k+1}) containing t; t1 maps to
  /// the last cell. Throws RangeError outside [t0, t1] (1e-12 slack).
  std::size_t cell_of(double t) const;

  /// Nearest node index to t (clamped).
  std::size_t nearest_node(double t) const;

  bool operator==(const TimeGrid& other) const = default;

 private:
  double t0_;
  double t1_;
  std::size_t n_steps_;
  double h_;
};

/// Sampled arc: one vector per grid node.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, std::vector<Vector> values);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Vector>& values() const { return values_; }
  const Vector& operator[](std::size_t k) const { return values_[k]; }
  const Vector& front() const { return values_.front(); }
  const Vector& back() const { return values_.back(); }
  Eigen::Index dim() const { return values_.front().size(); }

  /// Linear interpolation between bracketing nodes; exact at nodes.
  Vector Sample(double t) const;

  /// Largest Euclidean norm over all nodes.
  double SupNorm() const;

 private:
  TimeGrid grid_;
  std::vector<Vector> values_;
};

/// Piecewise-constant control: values[k] applies on [t_k, t_{k+1}).
class ControlSignal {
 public:
  ControlSignal(TimeGrid grid, std::vector<Vector> values);

  /// Constant control on the whole grid.
  static ControlSignal Constant(TimeGrid grid, const Vector& value);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Vector>& values() const { return values_; }
  const Vector& operator[](std::size_t cell) const { return values_[cell]; }
  const Vector& At(double t) const { return values_[grid_.cell_of(t)]; }

 private:
  TimeGrid grid_;
  std::vector<Vector> values_;
};

/// Right-hand side y' = F(t, y).
using Field = std::function<Vector(double t, const Vector& y)>;

/// Right-hand side that also receives the index of the cell being stepped.
/// Piecewise-constant controls need this: the RK4 stage at t_{k+1} still
/// belongs to cell k.
using CellField = std::function<Vector(std::size_t cell, double t, const Vector& y)>;

/// Classical RK4 on the grid; values[0] = x_init. Throws BlowUpError at the
/// first node holding a non-finite component.
Trajectory IntegrateForward(const CellField& field, const Vector& x_init,
                            const TimeGrid& grid);
Trajectory IntegrateForward(const Field& field, const Vector& x_init,
                            const TimeGrid& grid);

/// RK4 in reversed time from the terminal value; values.back() = y_terminal.
Trajectory IntegrateBackward(const CellField& field, const Vector& y_terminal,
                             const TimeGrid& grid);
Trajectory IntegrateBackward(const Field& field, const Vector& y_terminal,
                             const TimeGrid& grid);

bool AllFinite(const Vector& v);

}  // namespace ihoc
