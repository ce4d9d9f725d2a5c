#include "ihoc/relaxed.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ihoc/hamiltonian.h"

namespace ihoc {

RelaxedControl::RelaxedControl(TimeGrid grid, std::vector<std::vector<Atom>> cells,
                               const ControlSet& control_set, int state_dim)
    : grid_(grid), cells_(std::move(cells)) {
  if (cells_.size() != grid_.n_steps()) {
    throw ConfigError("relaxed control needs one atom list per cell");
  }
  const std::size_t cap = static_cast<std::size_t>(state_dim) + 2;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    const auto& atoms = cells_[k];
    if (atoms.empty() || atoms.size() > cap) {
      throw ConfigError("cell " + std::to_string(k) + " has " +
                        std::to_string(atoms.size()) + " atoms; allowed 1.." +
                        std::to_string(cap));
    }
    double sum = 0;
    for (const auto& a : atoms) {
      if (!(a.w >= 0)) throw ConfigError("negative atom weight in cell " + std::to_string(k));
      if (!control_set.Contains(a.u)) {
        throw ConfigError("atom outside the control set in cell " + std::to_string(k));
      }
      sum += a.w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError("weights of cell " + std::to_string(k) + " do not sum to 1");
    }
  }
}

RelaxedControl RelaxedControl::FromSignal(const ControlSignal& signal,
                                          const ControlSet& control_set, int state_dim) {
  std::vector<std::vector<Atom>> cells;
  cells.reserve(signal.values().size());
  for (const auto& u : signal.values()) cells.push_back({Atom{u, 1.0}});
  return RelaxedControl(signal.grid(), std::move(cells), control_set, state_dim);
}

RelaxedControl RelaxedControl::Refine(int factor) const {
  if (factor < 1) throw std::invalid_argument("refinement factor must be >= 1");
  RelaxedControl out = *this;
  out.grid_ = TimeGrid(grid_.t0(), grid_.t1(), grid_.n_steps() * factor);
  out.cells_.clear();
  out.cells_.reserve(cells_.size() * factor);
  for (const auto& atoms : cells_) {
    for (int i = 0; i < factor; ++i) out.cells_.push_back(atoms);
  }
  return out;
}

RelaxedControl Relax(const ControlSignal& fine, int cells_per_coarse,
                     const ControlSet& control_set, int state_dim) {
  const std::size_t n = fine.grid().n_steps();
  if (cells_per_coarse < 1 || n % cells_per_coarse != 0) {
    throw ConfigError("cells_per_coarse must divide the number of cells");
  }
  const std::size_t block = cells_per_coarse;
  std::vector<std::vector<Atom>> cells;
  for (std::size_t start = 0; start < n; start += block) {
    std::vector<Atom> atoms;
    std::vector<std::size_t> counts;
    for (std::size_t k = start; k < start + block; ++k) {
      std::size_t i = 0;
      while (i < atoms.size() && atoms[i].u != fine[k]) ++i;
      if (i == atoms.size()) {
        atoms.push_back({fine[k], 0.0});
        counts.push_back(0);
      }
      ++counts[i];
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      atoms[i].w = static_cast<double>(counts[i]) / static_cast<double>(block);
    }
    cells.push_back(std::move(atoms));
  }
  return RelaxedControl(TimeGrid(fine.grid().t0(), fine.grid().t1(), n / block),
                        std::move(cells), control_set, state_dim);
}

namespace {

Vector MixedDynamics(const ControlProblem& problem, const std::vector<Atom>& atoms,
                     double t, const Vector& x) {
  Vector v = Vector::Zero(problem.state_dim);
  for (const auto& a : atoms) {
    if (a.w != 0) v += a.w * problem.dynamics(t, x, a.u);
  }
  return v;
}

double MixedPayoff(const ControlProblem& problem, const std::vector<Atom>& atoms,
                   double t, const Vector& x) {
  double g = 0;
  for (const auto& a : atoms) {
    if (a.w != 0) g += a.w * problem.payoff(t, x, a.u);
  }
  return g;
}

}  // namespace

Field RelaxedField(const ControlProblem& problem, const RelaxedControl& ctrl) {
  return [problem, ctrl](double t, const Vector& x) {
    const TimeGrid& g = ctrl.grid();
    const std::size_t cell = g.cell_of(std::clamp(t, g.t0(), g.t1()));
    return MixedDynamics(problem, ctrl[cell], t, x);
  };
}

Trajectory RelaxedTrajectory(const ControlProblem& problem, const RelaxedControl& ctrl) {
  const CellField field = [&](std::size_t cell, double t, const Vector& x) {
    return MixedDynamics(problem, ctrl[cell], t, x);
  };
  return IntegrateForward(field, problem.x0, ctrl.grid());
}

double RelaxedCost(const ControlProblem& problem, const RelaxedControl& ctrl, double T) {
  const TimeGrid& grid = ctrl.grid();
  const std::size_t last = grid.cell_of(T);
  if (T <= grid.t0()) return 0.0;
  const Trajectory x = RelaxedTrajectory(problem, ctrl);
  double total = 0;
  for (std::size_t k = 0; k <= last; ++k) {
    const double a = grid.node(k);
    const double b = grid.node(k + 1);
    const double ga = MixedPayoff(problem, ctrl[k], a, x[k]);
    const double gb = MixedPayoff(problem, ctrl[k], b, x[k + 1]);
    const double cell = 0.5 * (b - a) * (ga + gb);
    if (k < last) {
      total += cell;
    } else {
      total += cell * (T - a) / (b - a);
    }
  }
  return total;
}

ControlSignal Chattering(const RelaxedControl& ctrl, int slices_per_cell) {
  if (slices_per_cell < 1) throw std::invalid_argument("slices_per_cell must be >= 1");
  constexpr int kMaxResolution = 64;
  int resolution = kMaxResolution;
  for (int m = 1; m <= kMaxResolution; ++m) {
    bool exact = true;
    for (const auto& atoms : ctrl.cells()) {
      for (const auto& a : atoms) {
        if (std::abs(a.w * m - std::round(a.w * m)) > 1e-9) exact = false;
      }
    }
    if (exact) {
      resolution = m;
      break;
    }
  }

  std::vector<Vector> values;
  values.reserve(ctrl.cells().size() * slices_per_cell * resolution);
  for (const auto& atoms : ctrl.cells()) {
    std::vector<Vector> slice;
    double cumulative = 0;
    long filled = 0;
    for (const auto& a : atoms) {
      cumulative += a.w;
      const long end = std::min<long>(resolution, std::lround(cumulative * resolution));
      for (; filled < end; ++filled) slice.push_back(a.u);
    }
    while (static_cast<long>(slice.size()) < resolution) slice.push_back(atoms.back().u);
    for (int s = 0; s < slices_per_cell; ++s) values.insert(values.end(), slice.begin(), slice.end());
  }
  const TimeGrid& g = ctrl.grid();
  const TimeGrid fine(g.t0(), g.t1(), values.size());
  return ControlSignal(fine, std::move(values));
}

double RelaxedMaximalityGap(const ControlProblem& problem, const Trajectory& x,
                            const RelaxedControl& ctrl, double lambda,
                            const Trajectory& psi) {
  const TimeGrid& grid = ctrl.grid();
  double gap = 0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    const ArgmaxResult best = ArgmaxHamiltonian(problem, x[k], t, lambda, psi[k]);
    double mixed = 0;
    for (const auto& a : ctrl[k]) {
      mixed += a.w * EvalHamiltonian(problem, x[k], t, a.u, lambda, psi[k]);
    }
    gap = std::max(gap, best.value - mixed);
  }
  return gap;
}

Trajectory RelaxedAdjoint(const ControlProblem& problem, const Trajectory& x,
                          const RelaxedControl& ctrl, double lambda,
                          const Vector& psi_terminal) {
  const TimeGrid& grid = ctrl.grid();
  const auto& xs = x.values();
  return IntegrateBackward(
      CellField([&](std::size_t cell, double t, const Vector& psi) {
        const double w = std::clamp((t - grid.node(cell)) / grid.step(), 0.0, 1.0);
        const Vector x_t = (1.0 - w) * xs[cell] + w * xs[cell + 1];
        Vector v = Vector::Zero(problem.state_dim);
        for (const auto& a : ctrl[cell]) {
          if (a.w != 0) v -= a.w * GradXHamiltonian(problem, x_t, t, a.u, lambda, psi);
        }
        return v;
      }),
      psi_terminal, grid);
}

namespace {

using Weights = std::vector<std::vector<double>>;

// Dense per-cell weights as atoms; optionally capped at `cap` heaviest atoms.
std::vector<std::vector<Atom>> AtomsOf(const std::vector<Vector>& points,
                                       const Weights& weights, std::size_t cap) {
  std::vector<std::vector<Atom>> cells;
  cells.reserve(weights.size());
  for (const auto& w : weights) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] > 0) order.push_back(i);
    }
    if (order.size() > cap) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
      order.resize(cap);
      std::sort(order.begin(), order.end());
    }
    double sum = 0;
    for (std::size_t i : order) sum += w[i];
    std::vector<Atom> atoms;
    for (std::size_t i : order) atoms.push_back({points[i], w[i] / sum});
    cells.push_back(std::move(atoms));
  }
  return cells;
}

struct RelaxedIterate {
  Trajectory x;
  Trajectory psi;
  double payoff;
  std::vector<std::size_t> argmax;
  std::vector<std::size_t> worst;  // active atom with the smallest H
  double max_gap;
};

RelaxedIterate EvaluateRelaxed(const ControlProblem& problem, const RelaxedControl& ctrl,
                               const Weights& weights, double horizon) {
  Trajectory x = RelaxedTrajectory(problem, ctrl);
  Trajectory psi = RelaxedAdjoint(problem, x, ctrl, 1.0, Vector::Zero(problem.state_dim));
  const double payoff = RelaxedCost(problem, ctrl, horizon);
  const TimeGrid& grid = ctrl.grid();
  const auto& points = problem.control_set.Points();
  std::vector<std::size_t> argmax(grid.n_steps());
  std::vector<std::size_t> worst(grid.n_steps());
  double max_gap = 0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    const ArgmaxResult best = ArgmaxHamiltonian(problem, x[k], t, 1.0, psi[k]);
    argmax[k] = best.index;
    double mixed = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < weights[k].size(); ++i) {
      if (weights[k][i] <= 0) continue;
      const double h = EvalHamiltonian(problem, x[k], t, points[i], 1.0, psi[k]);
      mixed += weights[k][i] * h;
      if (h < lowest) {
        lowest = h;
        worst[k] = i;
      }
    }
    max_gap = std::max(max_gap, best.value - mixed);
  }
  return RelaxedIterate{std::move(x), std::move(psi), payoff, std::move(argmax),
                        std::move(worst), max_gap};
}

}  // namespace

RelaxedSolve SolveRelaxed(const ControlProblem& problem, double horizon,
                          const SolveOptions& opts) {
  if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const TimeGrid grid = HorizonGrid(horizon, opts.grid_steps_per_unit_time);
  const auto& points = problem.control_set.Points();
  const std::size_t n_cells = grid.n_steps();
  const std::size_t n_points = points.size();
  const std::size_t unbounded = n_points;

  std::size_t start = 0;
  for (std::size_t i = 1; i < n_points; ++i) {
    if (LexLess(points[i], points[start])) start = i;
  }
  Weights weights(n_cells, std::vector<double>(n_points, 0.0));
  for (std::size_t k = 0; k < n_cells; ++k) {
    std::size_t index = start;
    if (opts.warm_start) {
      const double mid = 0.5 * (grid.node(k) + grid.node(k + 1));
      const ControlSignal& warm = *opts.warm_start;
      if (mid >= warm.grid().t0()) {
        const Vector& value = mid > warm.grid().t1() ? warm.values().back() : warm.At(mid);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_points; ++i) {
          const double d = (points[i] - value).squaredNorm();
          if (d < best) {
            best = d;
            index = i;
          }
        }
      }
    }
    weights[k][index] = 1.0;
  }

  const auto control_of = [&](const Weights& w, std::size_t cap) {
    return RelaxedControl(grid, AtomsOf(points, w, cap), problem.control_set,
                          problem.state_dim);
  };
  const auto tolerance = [&](double payoff) {
    return opts.tol_gap ? *opts.tol_gap : std::max(1e-6 * std::abs(payoff), 1e-12);
  };

  RelaxedIterate state = EvaluateRelaxed(problem, control_of(weights, unbounded), weights, horizon);
  double step = 1.0;
  int iterations = 0;
  while (state.max_gap > tolerance(state.payoff) && iterations < opts.max_iters) {
    bool accepted = false;
    for (; step >= 1e-12; step *= 0.5) {
      ++iterations;
      Weights trial = weights;
      for (std::size_t k = 0; k < n_cells; ++k) {
        const std::size_t to = state.argmax[k];
        const std::size_t from = state.worst[k];
        if (to == from) continue;
        const double moved = std::min(step, trial[k][from]);
        trial[k][from] -= moved;
        trial[k][to] += moved;
      }
      try {
        RelaxedIterate next = EvaluateRelaxed(problem, control_of(trial, unbounded), trial, horizon);
        if (next.payoff > state.payoff) {
          weights = std::move(trial);
          state = std::move(next);
          accepted = true;
          break;
        }
      } catch (const BlowUpError&) {
      }
      if (iterations >= opts.max_iters) break;
    }
    if (!accepted) break;
    step = std::min(1.0, 2.0 * step);
  }

  RelaxedControl control = control_of(weights, problem.state_dim + 2);
  Trajectory x = RelaxedTrajectory(problem, control);
  Trajectory psi = RelaxedAdjoint(problem, x, control, 1.0, Vector::Zero(problem.state_dim));
  const double scale = 1.0 / std::sqrt(1.0 + psi.front().squaredNorm());
  std::vector<Vector> psi_values = psi.values();
  for (auto& v : psi_values) v *= scale;
  Trajectory psi_n(grid, std::move(psi_values));
  const double gap = RelaxedMaximalityGap(problem, x, control, scale, psi_n);
  const double payoff = RelaxedCost(problem, control, horizon);
  const bool converged = gap <= scale * tolerance(payoff);
  return RelaxedSolve{std::move(control), std::move(x), std::move(psi_n), scale,
                      horizon, payoff, gap, converged, iterations};
}

}  // namespace ihoc
