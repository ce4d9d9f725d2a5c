#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ihoc/problem_model.h"

namespace ihoc {

/// Names accepted by BuiltinProblem.
const std::vector<std::string>& BuiltinProblemNames();

/// Benchmark instances:
///   lqr1d    xdot = u, g = -e^{-t}(x^2 + u^2), x0 = 1, P = Box[-10, 10] (101 points)
///   ramsey   savings rate s: xdot = s x^0.5 - 0.05 x,
///            g = 2 e^{-0.05 t} sqrt((1 - s) x^0.5), x0 = 0.5, P = Box[0, 1] (101 points)
///   absvalue xdot = u, g = -e^{-t} sqrt(x^2 + 1e-12), x0 = 1, P = {-1, 1}
/// Throws ConfigError listing the valid names otherwise.
ControlProblem BuiltinProblem(const std::string& name);

ControlProblem Lqr1d(double rho = 1.0, double x0 = 1.0, int grid_per_axis = 101);

struct RamseyParams {
  double productivity = 1.0;  // A
  double alpha = 0.5;
  double depreciation = 0.05;
  double discount = 0.05;
  double x0 = 0.5;
  int grid_per_axis = 101;
};
/// Growth model with the savings rate s in [0, 1] as control:
/// xdot = s A x^alpha - delta x, g = e^{-rho t} 2 sqrt((1 - s) A x^alpha).
/// Capital stays positive for every admissible control.
ControlProblem Ramsey(const RamseyParams& params = {});

/// Capital level where the marginal product equals discount + depreciation.
double RamseySteadyState(const RamseyParams& params = {});

ControlProblem AbsValue();

/// xdot = A x + B u + c, g = -e^{-rho t}(x'Qx + u'Ru). Q = R = 0 gives g == 0.
struct LinearQuadraticSpec {
  Matrix a;
  Matrix b;
  Vector c;
  Matrix q;
  Matrix r;
  double rho = 1.0;
  Vector x0;
  ControlSet control_set;
  std::string label = "linear_quadratic";
};
ControlProblem LinearQuadratic(const LinearQuadraticSpec& spec);

/// Closed-form discounted scalar LQR (xdot = u, g = -e^{-rho t}(x^2 + u^2)).
struct LqrOracle {
  double k = 0;       // positive root of k^2 + rho k - 1 = 0
  double j_star = 0;  // -k x0^2
  double lambda = 1;  // sphere-normalized multiplier for x0
  std::function<double(double)> psi;        // -2 k lambda x0 e^{-(k + rho) t}
  std::function<double(double)> u_feedback;  // -k x
};
LqrOracle OracleLqr(double rho, double x0);

}  // namespace ihoc
