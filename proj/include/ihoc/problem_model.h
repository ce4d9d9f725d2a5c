#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ihoc/odeint.h"
#include "ihoc/types.h"

namespace ihoc {

/// Compact control set: an explicit finite list or a box discretized by a
/// uniform lattice. All argmax searches run over Points().
class ControlSet {
 public:
  /// Empty placeholder; invalid until assigned.
  ControlSet() = default;

  static ControlSet Finite(std::vector<Vector> points);
  static ControlSet Box(const Vector& lower, const Vector& upper, int grid_per_axis);

  bool is_box() const { return is_box_; }
  Eigen::Index dim() const { return dim_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  int grid_per_axis() const { return grid_per_axis_; }

  /// Finite sets in stored order; boxes as the full tensor lattice in
  /// lexicographic order with endpoints included.
  const std::vector<Vector>& Points() const { return points_; }

  /// Membership up to 1e-12 (box bounds or a listed point).
  bool Contains(const Vector& u) const;

  /// Lattice spacing per axis (0 for a single-point axis or a finite set).
  Vector Spacing() const;

  /// Largest distance between two lattice points.
  double Diameter() const;

  /// Human-readable reasons the set is not a valid compact set.
  std::vector<std::string> InvariantViolations() const;

  /// Same box with a different lattice resolution. Finite sets are returned
  /// unchanged.
  ControlSet WithGrid(int grid_per_axis) const;

 private:
  bool is_box_ = false;
  Eigen::Index dim_ = 0;
  Vector lower_;
  Vector upper_;
  int grid_per_axis_ = 0;
  std::vector<Vector> points_;
};

using DynamicsFn = std::function<Vector(double t, const Vector& x, const Vector& u)>;
using JacobianFn = std::function<Matrix(double t, const Vector& x, const Vector& u)>;
using PayoffFn = std::function<double(double t, const Vector& x, const Vector& u)>;

/// Maximize the integral of payoff along xdot = dynamics(t, x, u), x(0) = x0,
/// u in control_set. Derivatives in x must be supplied; the callables must be
/// pure and re-entrant.
struct ControlProblem {
  int state_dim = 1;
  int control_dim = 1;
  Vector x0;
  DynamicsFn dynamics;
  JacobianFn dynamics_jac_x;
  PayoffFn payoff;
  DynamicsFn payoff_grad_x;
  ControlSet control_set;
  std::string label;
};

/// One failed finite check from ValidateProblem.
struct Diagnostic {
  std::string check;     // "jacobian", "payoff_gradient", "evaluation", "control_set"
  std::string location;  // where the check failed
  double magnitude = 0;  // relative error, or 0 for non-numeric failures
};

/// Finite surrogates for the standing regularity assumptions: Jacobian and
/// payoff gradient against central differences at 20 seeded random points,
/// f/g finiteness on a coarse (t, x, u) lattice, and control-set validity.
/// Returns one diagnostic per failed check; empty means all passed.
std::vector<Diagnostic> ValidateProblem(const ControlProblem& problem,
                                        unsigned seed = 0);

struct TailBoundReport {
  std::vector<double> sample_times;
  std::vector<double> tail_integrals;
  std::optional<double> fitted_decay_rate;
  bool satisfied = false;
};

/// Integrates the state under `control` up to t_max and reports trapezoid
/// estimates of the tail integral of |g| over [T, t_max] at each sample time.
/// satisfied iff the estimates never increase and the last one is at most
/// max(1e-6 * first, 1e-9). Throws BlowUpError on a non-finite state.
TailBoundReport EstimateTailBound(const ControlProblem& problem,
                                  const ControlSignal& control, double t_max,
                                  const std::vector<double>& sample_times);

struct ConvexityReport {
  bool pass = true;
  // Violating combination when pass is false.
  Vector u1;
  Vector u2;
  double theta = 0;
};

/// Sampling falsifier for convexity of {(z, f(t,x,u)) : z <= g(t,x,u), u in P}.
/// Control pairs come from an evenly spread subsample of at most n_samples
/// lattice points and mixing weights from {i / n_samples : 0 < i < n_samples}.
/// A combination passes when some lattice u has ||f(u) - fbar|| <= tol and
/// g(u) >= gbar - tol. Corroborates or refutes; never proves.
ConvexityReport CheckVectogramConvexity(const ControlProblem& problem, double t,
                                        const Vector& x, int n_samples, double tol);

inline const std::vector<Vector>& ControlSetPoints(const ControlSet& set) {
  return set.Points();
}

/// State arc under a piecewise-constant control, on the control's grid.
Trajectory SimulateState(const ControlProblem& problem, const ControlSignal& control);

/// Truncated payoff: per-cell trapezoid rule with the cell's control at both
/// end nodes.
double TruncatedPayoff(const ControlProblem& problem, const Trajectory& x,
                       const ControlSignal& control);

}  // namespace ihoc
