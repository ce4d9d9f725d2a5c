#include "ihoc/benchmarks.h"

#include <cmath>

namespace ihoc {

namespace {

constexpr double kAbsSmoothing = 1e-12;

Vector Scalar(double v) {
  Vector out(1);
  out[0] = v;
  return out;
}

Matrix Scalar11(double v) {
  Matrix out(1, 1);
  out(0, 0) = v;
  return out;
}

}  // namespace

const std::vector<std::string>& BuiltinProblemNames() {
  static const std::vector<std::string> names{"lqr1d", "ramsey", "absvalue"};
  return names;
}

ControlProblem BuiltinProblem(const std::string& name) {
  if (name == "lqr1d") return Lqr1d();
  if (name == "ramsey") return Ramsey();
  if (name == "absvalue") return AbsValue();
  std::string valid;
  for (const auto& n : BuiltinProblemNames()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown problem '" + name + "' (valid: " + valid + ")");
}

ControlProblem Lqr1d(double rho, double x0, int grid_per_axis) {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Scalar(x0);
  p.dynamics = [](double, const Vector&, const Vector& u) { return Scalar(u[0]); };
  p.dynamics_jac_x = [](double, const Vector&, const Vector&) { return Scalar11(0.0); };
  p.payoff = [rho](double t, const Vector& x, const Vector& u) {
    return -std::exp(-rho * t) * (x[0] * x[0] + u[0] * u[0]);
  };
  p.payoff_grad_x = [rho](double t, const Vector& x, const Vector&) {
    return Scalar(-2.0 * std::exp(-rho * t) * x[0]);
  };
  p.control_set = ControlSet::Box(Scalar(-10.0), Scalar(10.0), grid_per_axis);
  p.label = "lqr1d";
  return p;
}

ControlProblem Ramsey(const RamseyParams& params) {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Scalar(params.x0);
  const auto output = [params](double x) {
    return params.productivity * std::pow(x, params.alpha);
  };
  const auto marginal = [params](double x) {
    return params.alpha * params.productivity * std::pow(x, params.alpha - 1.0);
  };
  p.dynamics = [params, output](double, const Vector& x, const Vector& u) {
    return Scalar(u[0] * output(x[0]) - params.depreciation * x[0]);
  };
  p.dynamics_jac_x = [params, marginal](double, const Vector& x, const Vector& u) {
    return Scalar11(u[0] * marginal(x[0]) - params.depreciation);
  };
  p.payoff = [params, output](double t, const Vector& x, const Vector& u) {
    return std::exp(-params.discount * t) * 2.0 * std::sqrt((1.0 - u[0]) * output(x[0]));
  };
  // d/dx 2 sqrt(c) = c' / sqrt(c) with c = (1 - s) A x^alpha; zero when nothing is consumed.
  p.payoff_grad_x = [params, output, marginal](double t, const Vector& x, const Vector& u) {
    const double c = (1.0 - u[0]) * output(x[0]);
    if (!(c > 0)) return Scalar(0.0);
    return Scalar(std::exp(-params.discount * t) * (1.0 - u[0]) * marginal(x[0]) / std::sqrt(c));
  };
  p.control_set = ControlSet::Box(Scalar(0.0), Scalar(1.0), params.grid_per_axis);
  p.label = "ramsey";
  return p;
}

double RamseySteadyState(const RamseyParams& params) {
  return std::pow(params.alpha * params.productivity /
                      (params.discount + params.depreciation),
                  1.0 / (1.0 - params.alpha));
}

ControlProblem AbsValue() {
  ControlProblem p;
  p.state_dim = 1;
  p.control_dim = 1;
  p.x0 = Scalar(1.0);
  p.dynamics = [](double, const Vector&, const Vector& u) { return Scalar(u[0]); };
  p.dynamics_jac_x = [](double, const Vector&, const Vector&) { return Scalar11(0.0); };
  p.payoff = [](double t, const Vector& x, const Vector&) {
    return -std::exp(-t) * std::sqrt(x[0] * x[0] + kAbsSmoothing);
  };
  p.payoff_grad_x = [](double t, const Vector& x, const Vector&) {
    return Scalar(-std::exp(-t) * x[0] / std::sqrt(x[0] * x[0] + kAbsSmoothing));
  };
  p.control_set = ControlSet::Finite({Scalar(-1.0), Scalar(1.0)});
  p.label = "absvalue";
  return p;
}

ControlProblem LinearQuadratic(const LinearQuadraticSpec& spec) {
  const Eigen::Index m = spec.x0.size();
  const Eigen::Index p = spec.control_set.dim();
  if (spec.a.rows() != m || spec.a.cols() != m || spec.b.rows() != m ||
      spec.b.cols() != p || spec.c.size() != m || spec.q.rows() != m ||
      spec.q.cols() != m || spec.r.rows() != p || spec.r.cols() != p) {
    throw ConfigError("linear_quadratic matrices do not match x0 / control dimensions");
  }
  ControlProblem out;
  out.state_dim = static_cast<int>(m);
  out.control_dim = static_cast<int>(p);
  out.x0 = spec.x0;
  out.dynamics = [spec](double, const Vector& x, const Vector& u) {
    return Vector(spec.a * x + spec.b * u + spec.c);
  };
  out.dynamics_jac_x = [spec](double, const Vector&, const Vector&) { return spec.a; };
  out.payoff = [spec](double t, const Vector& x, const Vector& u) {
    return -std::exp(-spec.rho * t) * (x.dot(spec.q * x) + u.dot(spec.r * u));
  };
  out.payoff_grad_x = [spec](double t, const Vector& x, const Vector&) {
    return Vector(-std::exp(-spec.rho * t) * (spec.q + spec.q.transpose()) * x);
  };
  out.control_set = spec.control_set;
  out.label = spec.label;
  return out;
}

LqrOracle OracleLqr(double rho, double x0) {
  if (!(rho > 0)) throw std::invalid_argument("rho must be positive");
  LqrOracle o;
  o.k = 0.5 * (-rho + std::sqrt(rho * rho + 4.0));
  o.j_star = -o.k * x0 * x0;
  o.lambda = 1.0 / std::sqrt(1.0 + 4.0 * o.k * o.k * x0 * x0);
  const double k = o.k, lambda = o.lambda;
  o.psi = [k, lambda, rho, x0](double t) {
    return -2.0 * k * lambda * x0 * std::exp(-(k + rho) * t);
  };
  o.u_feedback = [k](double x) { return -k * x; };
  return o;
}

}  // namespace ihoc
