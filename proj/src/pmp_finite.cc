#include "ihoc/pmp_finite.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ihoc {

namespace {

constexpr double kPayoffSlack = 1e-12;
constexpr std::size_t kMaxCycleNodes = 10;
constexpr std::size_t kMaxCycleCombos = 1024;

using Assignment = std::vector<std::size_t>;

Trajectory SimulateFrom(const ControlProblem& problem, const Vector& x_init,
                        const ControlSignal& control) {
  const auto& values = control.values();
  return IntegrateForward(
      CellField([&](std::size_t cell, double t, const Vector& x) {
        return problem.dynamics(t, x, values[cell]);
      }),
      x_init, control.grid());
}

double SupDistance(const Trajectory& a, const Trajectory& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) d = std::max(d, (a[k] - b[k]).norm());
  return d;
}

std::size_t LexSmallestIndex(const std::vector<Vector>& points) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (LexLess(points[i], points[best])) best = i;
  }
  return best;
}

std::size_t NearestIndex(const std::vector<Vector>& points, const Vector& target,
                         const Vector& prefer) {
  std::size_t best = 0;
  double best_d = (points[0] - target).squaredNorm();
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = (points[i] - target).squaredNorm();
    const double tie = 1e-12 * std::max(1.0, best_d);
    if (d < best_d - tie) {
      best = i;
      best_d = d;
    } else if (std::abs(d - best_d) <= tie) {
      const double pi = (points[i] - prefer).squaredNorm();
      const double pb = (points[best] - prefer).squaredNorm();
      if (pi < pb || (pi == pb && LexLess(points[i], points[best]))) best = i;
    }
  }
  return best;
}

std::uint64_t HashAssignment(const Assignment& a) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t v : a) {
    h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull;
    h *= 1099511628211ull;
  }
  return h;
}

/// One sweep iterate: state, costate, payoff, and the pointwise maximization.
struct SweepState {
  Assignment control;
  Trajectory x;
  Trajectory psi;
  double payoff;
  Assignment argmax;
  std::vector<double> gap;
  double max_gap;
};

ControlSignal SignalOf(const std::vector<Vector>& points, const TimeGrid& grid,
                       const Assignment& a) {
  std::vector<Vector> values;
  values.reserve(a.size());
  for (std::size_t i : a) values.push_back(points[i]);
  return ControlSignal(grid, std::move(values));
}

SweepState Evaluate(const ControlProblem& problem, const TimeGrid& grid,
                    const Assignment& control) {
  const auto& points = problem.control_set.Points();
  const ControlSignal u = SignalOf(points, grid, control);
  Trajectory x = SimulateFrom(problem, problem.x0, u);
  Trajectory psi = IntegrateAdjoint(problem, x, u, 1.0,
                                    Vector::Zero(problem.state_dim));
  const double payoff = TruncatedPayoff(problem, x, u);
  Assignment argmax(grid.n_steps());
  std::vector<double> gap(grid.n_steps());
  double max_gap = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    const ArgmaxResult best = ArgmaxHamiltonian(problem, x[k], t, 1.0, psi[k]);
    argmax[k] = best.index;
    if (best.index == control[k]) {
      gap[k] = 0.0;
    } else {
      gap[k] = std::max(0.0, best.value - EvalHamiltonian(problem, x[k], t, u[k], 1.0, psi[k]));
    }
    max_gap = std::max(max_gap, gap[k]);
  }
  return SweepState{control, std::move(x), std::move(psi), payoff,
                    std::move(argmax), std::move(gap), max_gap};
}

double GapTolerance(const SolveOptions& opts, double payoff) {
  if (opts.tol_gap) return *opts.tol_gap;
  return std::max(1e-6 * std::abs(payoff), 1e-12);
}

Assignment InitialAssignment(const ControlProblem& problem, const TimeGrid& grid,
                             const SolveOptions& opts) {
  const auto& points = problem.control_set.Points();
  const std::size_t fallback = LexSmallestIndex(points);
  Assignment a(grid.n_steps(), fallback);
  if (!opts.warm_start) return a;
  const ControlSignal& warm = *opts.warm_start;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double mid = 0.5 * (grid.node(k) + grid.node(k + 1));
    if (mid < warm.grid().t0()) continue;
    const Vector& value = mid > warm.grid().t1() ? warm.values().back() : warm.At(mid);
    a[k] = NearestIndex(points, value, value);
  }
  return a;
}

Extremal ToExtremal(const ControlProblem& problem, const TimeGrid& grid,
                    const SweepState& state, double horizon, bool converged,
                    int iterations) {
  Extremal e{state.x,
             SignalOf(problem.control_set.Points(), grid, state.control),
             state.psi,
             1.0,
             horizon,
             {},
             state.payoff,
             converged,
             iterations,
             {}};
  e = Normalize(std::move(e));
  e.residual = Residuals(problem, e);
  return e;
}

}  // namespace

TimeGrid HorizonGrid(double horizon, int steps_per_unit) {
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
  if (steps_per_unit < 1) throw std::invalid_argument("grid_steps_per_unit_time must be >= 1");
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::round(horizon * steps_per_unit)));
  return TimeGrid(0.0, horizon, n);
}

Trajectory IntegrateAdjoint(const ControlProblem& problem, const Trajectory& x,
                            const ControlSignal& u, double lambda,
                            const Vector& psi_terminal) {
  const TimeGrid& grid = x.grid();
  const auto& xs = x.values();
  const auto& us = u.values();
  return IntegrateBackward(
      CellField([&](std::size_t cell, double t, const Vector& psi) {
        const double w = std::clamp((t - grid.node(cell)) / grid.step(), 0.0, 1.0);
        const Vector x_t = (1.0 - w) * xs[cell] + w * xs[cell + 1];
        return Vector(-GradXHamiltonian(problem, x_t, t, us[cell], lambda, psi));
      }),
      psi_terminal, grid);
}

CoupledArc ShootCoupled(const ControlProblem& problem, const TimeGrid& grid,
                        std::size_t start_node, const Vector& x_start,
                        const Vector& psi_start, double lambda) {
  if (start_node >= grid.n_steps()) {
    throw RangeError("coupled run needs at least one cell after the start node");
  }
  const TimeGrid sub(grid.node(start_node), grid.t1(), grid.n_steps() - start_node);
  const Eigen::Index m = problem.state_dim;
  std::vector<Vector> xs{x_start}, psis{psi_start}, us;
  xs.reserve(sub.node_count());
  psis.reserve(sub.node_count());
  us.reserve(sub.n_steps());
  for (std::size_t k = 0; k < sub.n_steps(); ++k) {
    const double t = sub.node(k);
    const Vector u = ArgmaxHamiltonian(problem, xs[k], t, lambda, psis[k]).u;
    const auto rhs = [&](double s, const Vector& z) {
      const Vector xz = z.head(m);
      const Vector pz = z.tail(m);
      Vector dz(2 * m);
      dz.head(m) = problem.dynamics(s, xz, u);
      dz.tail(m) = -GradXHamiltonian(problem, xz, s, u, lambda, pz);
      return dz;
    };
    Vector z(2 * m);
    z << xs[k], psis[k];
    const double h = sub.step();
    const Vector k1 = rhs(t, z);
    const Vector k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1);
    const Vector k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2);
    const Vector k4 = rhs(t + h, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite()) throw BlowUpError(start_node + k + 1, sub.node(k + 1));
    xs.push_back(z.head(m));
    psis.push_back(z.tail(m));
    us.push_back(u);
  }
  return CoupledArc{Trajectory(sub, std::move(xs)), Trajectory(sub, std::move(psis)),
                    ControlSignal(sub, std::move(us))};
}

Extremal SolveFreeEndpoint(const ControlProblem& problem, double horizon,
                           const SolveOptions& opts) {
  if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(opts.damping > 0 && opts.damping <= 1)) {
    throw std::invalid_argument("damping must lie in (0, 1]");
  }
  const TimeGrid grid = HorizonGrid(horizon, opts.grid_steps_per_unit_time);
  const auto& points = problem.control_set.Points();

  SweepState state = Evaluate(problem, grid, InitialAssignment(problem, grid, opts));
  SweepState best = state;
  std::vector<double> history{state.payoff};
  const auto better = [](const SweepState& a, const SweepState& b) {
    return a.max_gap < b.max_gap || (a.max_gap == b.max_gap && a.payoff > b.payoff);
  };

  double theta = opts.damping;
  bool converged = state.max_gap <= GapTolerance(opts, state.payoff);
  int iterations = 0;

  // Finishing-pass bookkeeping: visited assignments and the flips between them.
  struct Flip {
    std::size_t node, from, to;
  };
  std::vector<Flip> flips;
  std::unordered_map<std::uint64_t, std::size_t> visited;

  while (!converged && iterations < opts.max_iters) {
    Assignment trial = state.control;
    bool changed = false;
    for (std::size_t k = 0; k < trial.size(); ++k) {
      if (state.argmax[k] == trial[k]) continue;
      const Vector& current = points[trial[k]];
      const Vector& proposal = points[state.argmax[k]];
      const Vector blend = (1.0 - theta) * current + theta * proposal;
      const std::size_t next = NearestIndex(points, blend, proposal);
      if (next != trial[k]) {
        trial[k] = next;
        changed = true;
      }
    }

    if (changed) {
      ++iterations;
      try {
        SweepState candidate = Evaluate(problem, grid, trial);
        if (candidate.payoff >= state.payoff - kPayoffSlack * (1.0 + std::abs(state.payoff))) {
          state = std::move(candidate);
          history.push_back(state.payoff);
        } else {
          theta *= 0.5;
        }
      } catch (const BlowUpError&) {
        theta *= 0.5;
      }
    } else {
      // Greedy finishing: move the single worst node to its argmax.
      const std::uint64_t key = HashAssignment(state.control);
      const auto seen = visited.find(key);
      if (seen != visited.end()) {
        // Cycle: search the nodes and values involved for an exact fixed point.
        std::map<std::size_t, std::set<std::size_t>> options;
        for (std::size_t i = seen->second; i < flips.size(); ++i) {
          options[flips[i].node].insert(flips[i].from);
          options[flips[i].node].insert(flips[i].to);
        }
        std::size_t combos = 1;
        for (const auto& [node, vals] : options) combos *= vals.size();
        if (options.size() > kMaxCycleNodes || combos > kMaxCycleCombos) break;
        std::vector<std::pair<std::size_t, std::vector<std::size_t>>> axes;
        for (const auto& [node, vals] : options) axes.emplace_back(node, std::vector(vals.begin(), vals.end()));
        bool resolved = false;
        for (std::size_t c = 0; c < combos && iterations < opts.max_iters; ++c) {
          Assignment candidate = state.control;
          std::size_t code = c;
          for (const auto& [node, vals] : axes) {
            candidate[node] = vals[code % vals.size()];
            code /= vals.size();
          }
          ++iterations;
          try {
            SweepState s = Evaluate(problem, grid, candidate);
            if (better(s, best)) best = s;
            if (s.max_gap <= GapTolerance(opts, s.payoff)) {
              state = std::move(s);
              resolved = true;
              break;
            }
          } catch (const BlowUpError&) {
          }
        }
        if (!resolved) break;
      } else {
        visited.emplace(key, flips.size());
        const auto worst = static_cast<std::size_t>(
            std::max_element(state.gap.begin(), state.gap.end()) - state.gap.begin());
        trial[worst] = state.argmax[worst];
        flips.push_back({worst, state.control[worst], trial[worst]});
        ++iterations;
        try {
          state = Evaluate(problem, grid, trial);
        } catch (const BlowUpError&) {
          break;
        }
      }
    }
    if (better(state, best)) best = state;
    converged = state.max_gap <= GapTolerance(opts, state.payoff);
  }

  Extremal out = converged ? ToExtremal(problem, grid, state, horizon, true, iterations)
                           : ToExtremal(problem, grid, best, horizon, false, iterations);
  out.payoff_history = std::move(history);
  return out;
}

Extremal SolveFixedEndpoint(const ControlProblem& problem, double horizon,
                            const Vector& x_target, const SolveOptions& opts) {
  if (x_target.size() != problem.state_dim || !x_target.allFinite()) {
    throw std::invalid_argument("x_target must be a finite state vector");
  }
  constexpr int kMaxOuter = 50;
  constexpr int kStagnationWindow = 5;
  const TimeGrid grid = HorizonGrid(horizon, opts.grid_steps_per_unit_time);
  const Eigen::Index m = problem.state_dim;
  const double tol = 1e-9 * std::max(1.0, x_target.norm());

  const auto shoot = [&](const Vector& psi0) {
    return ShootCoupled(problem, grid, 0, problem.x0, psi0, 1.0);
  };
  const auto residual_of = [&](const CoupledArc& arc) {
    return Vector(arc.x.back() - x_target);
  };

  Vector psi0 = opts.psi0_guess ? *opts.psi0_guess : Vector::Zero(m);
  CoupledArc arc = shoot(psi0);
  Vector r = residual_of(arc);
  std::vector<double> history{r.norm()};
  int iterations = 0;

  while (r.norm() > tol && iterations < kMaxOuter) {
    ++iterations;
    Matrix jac(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      double step = 1e-6 * std::max(1.0, std::abs(psi0[j]));
      Vector column = Vector::Zero(m);
      while (step <= 0.1) {
        Vector probe = psi0;
        probe[j] += step;
        try {
          column = (residual_of(shoot(probe)) - r) / step;
        } catch (const BlowUpError&) {
          column.setZero();
        }
        if (column.norm() > 0) break;
        step *= 10;
      }
      jac.col(j) = column;
    }
    const Vector delta = jac.completeOrthogonalDecomposition().solve(-r);

    bool accepted = false;
    for (double alpha = 1.0; alpha >= 1.0 / 1024; alpha *= 0.5) {
      const Vector candidate = psi0 + alpha * delta;
      try {
        CoupledArc trial = shoot(candidate);
        const Vector rt = residual_of(trial);
        if (rt.norm() < r.norm()) {
          psi0 = candidate;
          arc = std::move(trial);
          r = rt;
          accepted = true;
          break;
        }
      } catch (const BlowUpError&) {
      }
    }
    history.push_back(r.norm());
    if (!accepted) break;
    if (history.size() > kStagnationWindow &&
        history[history.size() - 1 - kStagnationWindow] - history.back() < 1e-12) {
      break;
    }
  }

  Extremal e{arc.x, arc.u, arc.psi, 1.0, horizon, {},
             TruncatedPayoff(problem, arc.x, arc.u), r.norm() <= tol, iterations, {}};
  e = Normalize(std::move(e));
  e.residual = Residuals(problem, e);
  return e;
}

Extremal Normalize(Extremal extremal) {
  const double norm_sq =
      extremal.lambda * extremal.lambda + extremal.psi.front().squaredNorm();
  if (!(norm_sq > 0)) throw DegenerateMultiplierError("lambda = 0 and psi(0) = 0");
  const double scale = 1.0 / std::sqrt(norm_sq);
  std::vector<Vector> psi = extremal.psi.values();
  for (auto& v : psi) v *= scale;
  extremal.psi = Trajectory(extremal.psi.grid(), std::move(psi));
  extremal.lambda *= scale;
  extremal.residual.adjoint_defect *= scale;
  extremal.residual.max_gap *= scale;
  extremal.residual.terminal_psi_norm *= scale;
  return extremal;
}

ExtremalResiduals Residuals(const ControlProblem& problem, const Extremal& extremal) {
  ExtremalResiduals r;
  const TimeGrid& grid = extremal.x.grid();
  try {
    r.state_defect = SupDistance(SimulateFrom(problem, extremal.x.front(), extremal.u), extremal.x);
  } catch (const BlowUpError&) {
    r.state_defect = std::numeric_limits<double>::infinity();
  }
  try {
    r.adjoint_defect = SupDistance(
        IntegrateAdjoint(problem, extremal.x, extremal.u, extremal.lambda, extremal.psi.back()),
        extremal.psi);
  } catch (const BlowUpError&) {
    r.adjoint_defect = std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    const ArgmaxResult best =
        ArgmaxHamiltonian(problem, extremal.x[k], t, extremal.lambda, extremal.psi[k]);
    const double current = EvalHamiltonian(problem, extremal.x[k], t, extremal.u[k],
                                           extremal.lambda, extremal.psi[k]);
    r.max_gap = std::max(r.max_gap, best.value - current);
  }
  r.terminal_psi_norm = extremal.psi.back().norm();
  return r;
}

}  // namespace ihoc
