#pragma once

#include <optional>
#include <vector>

#include "ihoc/hamiltonian.h"
#include "ihoc/odeint.h"
#include "ihoc/problem_model.h"

namespace ihoc {

/// Sup-norm defects of a candidate extremal.
struct ExtremalResiduals {
  double state_defect = 0;       // forward re-integration of x from x(0)
  double adjoint_defect = 0;     // backward re-integration of psi from psi(T)
  double max_gap = 0;            // sup over cell nodes of sup_p H(p) - H(u)
  double terminal_psi_norm = 0;  // ||psi(T)||
};

struct SolveOptions {
  int max_iters = 500;
  double damping = 0.5;
  // Absolute gap tolerance; unset means 1e-6 * |J| (floored at 1e-12).
  std::optional<double> tol_gap;
  int grid_steps_per_unit_time = 100;
  // Initial control. Cells past its grid continue its last value; without it
  // everything starts at the lexicographically smallest lattice point.
  std::optional<ControlSignal> warm_start;
  // Starting costate for fixed-endpoint shooting (defaults to zero).
  std::optional<Vector> psi0_guess;
};

/// Candidate (x, u, lambda, psi) on one grid. Solvers return it on the sphere
/// ||psi(0)||^2 + lambda^2 = 1.
struct Extremal {
  Trajectory x;
  ControlSignal u;
  Trajectory psi;
  double lambda = 1;
  double horizon = 0;
  ExtremalResiduals residual;
  double payoff = 0;  // truncated payoff over [0, horizon]
  bool converged = false;
  int iterations = 0;
  // Truncated payoff after each accepted damped sweep step, starting point
  // first. Single-node finishing moves are not recorded.
  std::vector<double> payoff_history;
};

/// Grid on [0, T] with round(T * steps_per_unit) steps (at least one).
TimeGrid HorizonGrid(double horizon, int steps_per_unit);

/// Adjoint arc psi' = -grad_x H(x, t, u, lambda, psi) integrated backward from
/// psi_terminal. x is linearly interpolated at RK4 half steps.
Trajectory IntegrateAdjoint(const ControlProblem& problem, const Trajectory& x,
                            const ControlSignal& u, double lambda,
                            const Vector& psi_terminal);

/// Forward run of the coupled state/costate system starting at a grid node,
/// with the control on each cell fixed to argmax H at the cell's left node.
struct CoupledArc {
  Trajectory x;
  Trajectory psi;
  ControlSignal u;
};
CoupledArc ShootCoupled(const ControlProblem& problem, const TimeGrid& grid,
                        std::size_t start_node, const Vector& x_start,
                        const Vector& psi_start, double lambda);

/// Free right endpoint, psi(T) = 0: damped forward-backward sweep with
/// lambda = 1, renormalized onto the sphere at the end. Non-convergence is
/// reported through Extremal::converged, not an exception. Throws
/// BlowUpError if the initial control already drives the state non-finite.
Extremal SolveFreeEndpoint(const ControlProblem& problem, double horizon,
                           const SolveOptions& opts = {});

/// Pinned right endpoint x(T) = x_target: single shooting on psi(0) with a
/// damped forward-difference Newton iteration (at most 50 outer steps).
Extremal SolveFixedEndpoint(const ControlProblem& problem, double horizon,
                            const Vector& x_target, const SolveOptions& opts = {});

/// Scales lambda and the whole psi arc by 1/sqrt(lambda^2 + ||psi(0)||^2).
/// Throws DegenerateMultiplierError when both vanish.
Extremal Normalize(Extremal extremal);

ExtremalResiduals Residuals(const ControlProblem& problem, const Extremal& extremal);

}  // namespace ihoc
