#include "ihoc/hamiltonian.h"

#include <cmath>
#include <limits>
#include <vector>

namespace ihoc {

namespace {

constexpr double kTieRelTol = 1e-12;

template <typename Objective>
ArgmaxResult ArgmaxOver(const std::vector<Vector>& points, Objective&& objective) {
  std::vector<double> values;
  values.reserve(points.size());
  double scale = 0.0;
  for (const auto& p : points) {
    values.push_back(objective(p));
    scale = std::max(scale, std::abs(values.back()));
  }
  double best = -std::numeric_limits<double>::infinity();
  for (double v : values) best = std::max(best, v);
  const double tie = kTieRelTol * scale;

  ArgmaxResult result;
  bool found = false;
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (best - values[i] <= tie) {
      if (!found || LexLess(points[i], points[result.index])) {
        result.index = i;
        found = true;
      }
    } else {
      runner_up = std::max(runner_up, values[i]);
    }
  }
  result.u = points[result.index];
  result.value = values[result.index];
  result.gap_certificate = std::isfinite(runner_up)
                               ? best - runner_up
                               : std::numeric_limits<double>::infinity();
  return result;
}

}  // namespace

double EvalHamiltonian(const ControlProblem& problem, const Vector& x, double t,
                       const Vector& u, double lambda, const Vector& psi) {
  double h = psi.dot(problem.dynamics(t, x, u));
  if (lambda != 0.0) h += lambda * problem.payoff(t, x, u);
  return h;
}

Vector GradXHamiltonian(const ControlProblem& problem, const Vector& x, double t,
                        const Vector& u, double lambda, const Vector& psi) {
  Vector grad = problem.dynamics_jac_x(t, x, u).transpose() * psi;
  if (lambda != 0.0) grad += lambda * problem.payoff_grad_x(t, x, u);
  return grad;
}

ArgmaxResult ArgmaxHamiltonian(const ControlProblem& problem, const Vector& x,
                               double t, double lambda, const Vector& psi) {
  return ArgmaxOver(problem.control_set.Points(), [&](const Vector& p) {
    return EvalHamiltonian(problem, x, t, p, lambda, psi);
  });
}

ArgmaxResult ArgmaxHamiltonianPenalized(const ControlProblem& problem,
                                        const Vector& x, double t, double lambda,
                                        const Vector& psi, const Vector& u_ref,
                                        int n) {
  if (n < 1) throw std::invalid_argument("penalty index n must be >= 1");
  const double weight = std::exp(-t) / n;
  return ArgmaxOver(problem.control_set.Points(), [&](const Vector& p) {
    return EvalHamiltonian(problem, x, t, p, lambda, psi) - weight * (p - u_ref).norm();
  });
}

}  // namespace ihoc
