#pragma once

#include <cstddef>

#include "ihoc/problem_model.h"

namespace ihoc {

/// Multiplier pair bookkeeping. After sphere normalization
/// psi0_norm_sq + lambda^2 = 1.
struct Multiplier {
  double lambda = 1.0;
  double psi0_norm_sq = 0.0;
};

/// H = psi . f(t, x, u) + lambda * g(t, x, u).
double EvalHamiltonian(const ControlProblem& problem, const Vector& x, double t,
                       const Vector& u, double lambda, const Vector& psi);

/// (df/dx)^T psi + lambda * dg/dx, from the problem's own derivatives.
Vector GradXHamiltonian(const ControlProblem& problem, const Vector& x, double t,
                        const Vector& u, double lambda, const Vector& psi);

struct ArgmaxResult {
  Vector u;
  double value = 0;
  // Max minus the second distinct value, +inf when every value ties.
  double gap_certificate = 0;
  // Position of u in the control set's point list.
  std::size_t index = 0;
};

/// Exhaustive search over the control lattice. Values within 1e-12 of the
/// maximum (relative to the largest |H| on the lattice) tie, and ties go to
/// the lexicographically smallest point.
ArgmaxResult ArgmaxHamiltonian(const ControlProblem& problem, const Vector& x,
                               double t, double lambda, const Vector& psi);

/// Same search for H(p) - (1/n) e^{-t} ||p - u_ref||.
ArgmaxResult ArgmaxHamiltonianPenalized(const ControlProblem& problem,
                                        const Vector& x, double t, double lambda,
                                        const Vector& psi, const Vector& u_ref,
                                        int n);

}  // namespace ihoc
