#pragma once

#include <vector>

#include "ihoc/pmp_finite.h"

namespace ihoc {

struct Atom {
  Vector u;
  double w = 0;
};

/// Piecewise-constant probability mixture over the control set: cell k holds
/// between 1 and state_dim + 2 atoms with non-negative weights summing to 1.
class RelaxedControl {
 public:
  /// Throws ConfigError on a bad weight, atom count or off-set atom.
  RelaxedControl(TimeGrid grid, std::vector<std::vector<Atom>> cells,
                 const ControlSet& control_set, int state_dim);

  /// One unit-weight atom per cell.
  static RelaxedControl FromSignal(const ControlSignal& signal,
                                   const ControlSet& control_set, int state_dim);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<std::vector<Atom>>& cells() const { return cells_; }
  const std::vector<Atom>& operator[](std::size_t cell) const { return cells_[cell]; }

  /// Each cell split into `factor` equal cells carrying the same atoms.
  RelaxedControl Refine(int factor) const;

 private:
  TimeGrid grid_;
  std::vector<std::vector<Atom>> cells_;
};

/// Groups `cells_per_coarse` consecutive cells of an ordinary control into one
/// cell whose atoms are the distinct values with their time fractions, in
/// order of first appearance.
RelaxedControl Relax(const ControlSignal& fine, int cells_per_coarse,
                     const ControlSet& control_set, int state_dim);

/// (t, x) -> sum_i w_i f(t, x, u_i) over the atoms of the cell holding t.
/// Times past the grid use the last cell, times before it the first.
Field RelaxedField(const ControlProblem& problem, const RelaxedControl& ctrl);

/// State arc of the relaxed system on the control's grid.
Trajectory RelaxedTrajectory(const ControlProblem& problem, const RelaxedControl& ctrl);

/// Relaxed payoff over [0, T]: per-cell trapezoid of sum_i w_i g(t, x, u_i),
/// linear within the cell holding T.
double RelaxedCost(const ControlProblem& problem, const RelaxedControl& ctrl, double T);

/// Ordinary control realizing the mixture by time slicing: each cell is split
/// into N slices and every slice into sub-intervals for the atoms in stored
/// order. Sub-interval lengths are quantized to a common resolution of at
/// most 64 per slice, so the output grid has N * resolution cells per cell.
ControlSignal Chattering(const RelaxedControl& ctrl, int slices_per_cell);

/// sup over cell nodes of [max_p H(p) - sum_i w_i H(u_i)].
double RelaxedMaximalityGap(const ControlProblem& problem, const Trajectory& x,
                            const RelaxedControl& ctrl, double lambda,
                            const Trajectory& psi);

/// Costate of the relaxed system: psi' = -sum_i w_i grad_x H(u_i), from
/// psi_terminal, with x interpolated linearly at RK4 half steps.
Trajectory RelaxedAdjoint(const ControlProblem& problem, const Trajectory& x,
                          const RelaxedControl& ctrl, double lambda,
                          const Vector& psi_terminal);

struct RelaxedSolve {
  RelaxedControl control;
  Trajectory x;
  Trajectory psi;  // sphere-normalized together with lambda
  double lambda = 1;
  double horizon = 0;
  double payoff = 0;
  double max_gap = 0;  // relaxed maximality gap in normalized multipliers
  bool converged = false;
  int iterations = 0;
};

/// Free-endpoint relaxed problem by pairwise conditional gradient on the
/// per-cell weights over the control lattice: each cell shifts up to `step`
/// weight from its worst active atom to the pointwise Hamiltonian maximizer.
/// A step is kept only if the relaxed payoff rises; otherwise it is halved.
/// Stops when the relaxed gap reaches tol_gap. Cells with more than
/// state_dim + 2 atoms keep the heaviest ones, renormalized.
RelaxedSolve SolveRelaxed(const ControlProblem& problem, double horizon,
                          const SolveOptions& opts = {});

}  // namespace ihoc
