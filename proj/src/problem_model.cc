#include "ihoc/problem_model.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ihoc {

namespace {

constexpr double kMemberTol = 1e-12;
constexpr double kJacobianRelTol = 1e-5;
constexpr int kJacobianPoints = 20;

std::string Describe(double t, const Vector& x, const Vector& u) {
  std::ostringstream out;
  out.precision(6);
  out << "t=" << t << " x=(" << x.transpose() << ") u=(" << u.transpose() << ")";
  return out.str();
}

double MaxAbs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

ControlSet ControlSet::Finite(std::vector<Vector> points) {
  if (points.empty()) throw std::invalid_argument("finite control set is empty");
  ControlSet set;
  set.dim_ = points.front().size();
  for (const auto& p : points) {
    if (p.size() != set.dim_) {
      throw std::invalid_argument("finite control set points differ in dimension");
    }
  }
  set.points_ = std::move(points);
  return set;
}

ControlSet ControlSet::Box(const Vector& lower, const Vector& upper, int grid_per_axis) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("box bounds must be non-empty and equally sized");
  }
  if (grid_per_axis < 1) throw std::invalid_argument("grid_per_axis must be >= 1");
  ControlSet set;
  set.is_box_ = true;
  set.dim_ = lower.size();
  set.lower_ = lower;
  set.upper_ = upper;
  set.grid_per_axis_ = grid_per_axis;

  const auto p = static_cast<std::size_t>(set.dim_);
  std::vector<int> digits(p, 0);
  const auto axis_value = [&](std::size_t axis, int k) {
    if (grid_per_axis == 1) return lower[axis];
    if (k == grid_per_axis - 1) return upper[axis];
    return lower[axis] + (upper[axis] - lower[axis]) * k / (grid_per_axis - 1);
  };
  // Odometer over the lattice, last axis fastest, which is lexicographic order
  // when lower <= upper.
  while (true) {
    Vector point(set.dim_);
    for (std::size_t a = 0; a < p; ++a) point[a] = axis_value(a, digits[a]);
    set.points_.push_back(point);
    std::size_t a = p;
    while (a > 0) {
      --a;
      if (++digits[a] < grid_per_axis) break;
      digits[a] = 0;
      if (a == 0) return set;
    }
    if (p == 0) return set;
  }
}

bool ControlSet::Contains(const Vector& u) const {
  if (u.size() != dim_) return false;
  if (is_box_) {
    for (Eigen::Index i = 0; i < dim_; ++i) {
      if (u[i] < lower_[i] - kMemberTol || u[i] > upper_[i] + kMemberTol) return false;
    }
    return true;
  }
  return std::any_of(points_.begin(), points_.end(), [&](const Vector& p) {
    return (p - u).cwiseAbs().maxCoeff() <= kMemberTol;
  });
}

Vector ControlSet::Spacing() const {
  Vector s = Vector::Zero(dim_);
  if (is_box_ && grid_per_axis_ > 1) s = (upper_ - lower_) / (grid_per_axis_ - 1);
  return s;
}

double ControlSet::Diameter() const {
  if (is_box_) return (upper_ - lower_).norm();
  double d = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      d = std::max(d, (points_[i] - points_[j]).norm());
    }
  }
  return d;
}

std::vector<std::string> ControlSet::InvariantViolations() const {
  std::vector<std::string> out;
  if (points_.empty()) out.emplace_back("control set has no points");
  if (is_box_) {
    for (Eigen::Index i = 0; i < dim_; ++i) {
      if (!(lower_[i] <= upper_[i])) {
        std::ostringstream msg;
        msg << "box axis " << i << ": lower " << lower_[i] << " > upper " << upper_[i];
        out.push_back(msg.str());
      }
    }
  }
  for (const auto& p : points_) {
    if (!p.allFinite()) {
      out.emplace_back("control set contains a non-finite point");
      break;
    }
  }
  return out;
}

ControlSet ControlSet::WithGrid(int grid_per_axis) const {
  if (!is_box_) return *this;
  return Box(lower_, upper_, grid_per_axis);
}

std::vector<Diagnostic> ValidateProblem(const ControlProblem& problem, unsigned seed) {
  std::vector<Diagnostic> out;
  for (const auto& reason : problem.control_set.InvariantViolations()) {
    out.push_back({"control_set", reason, 0.0});
  }
  const auto& points = problem.control_set.Points();
  if (points.empty() || problem.x0.size() != problem.state_dim) {
    if (problem.x0.size() != problem.state_dim) {
      out.push_back({"evaluation", "x0 length does not match state_dim", 0.0});
    }
    return out;
  }

  const Eigen::Index m = problem.state_dim;
  const double radius = 0.25 * std::max(1.0, problem.x0.cwiseAbs().maxCoeff());

  // Coarse lattice: f and g finite everywhere on it.
  {
    std::optional<Diagnostic> failure;
    const std::size_t stride = std::max<std::size_t>(1, points.size() / 4);
    for (double t : {0.0, 1.0, 10.0}) {
      for (double shift : {-radius, 0.0, radius}) {
        const Vector x = problem.x0 + Vector::Constant(m, shift);
        for (std::size_t i = 0; i < points.size() && !failure; i += stride) {
          const Vector f = problem.dynamics(t, x, points[i]);
          const double g = problem.payoff(t, x, points[i]);
          if (f.size() != m || !f.allFinite() || !std::isfinite(g)) {
            failure = Diagnostic{"evaluation", Describe(t, x, points[i]), 0.0};
          }
        }
      }
    }
    if (failure) out.push_back(*failure);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> time(0.0, 10.0);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  Diagnostic worst_jac{"jacobian", "", 0.0};
  Diagnostic worst_grad{"payoff_gradient", "", 0.0};
  std::optional<Diagnostic> bad_shape;
  for (int n = 0; n < kJacobianPoints; ++n) {
    const double t = time(rng);
    Vector x(m);
    for (Eigen::Index i = 0; i < m; ++i) x[i] = problem.x0[i] + radius * unit(rng);
    const Vector& u = points[pick(rng)];

    const Matrix jac = problem.dynamics_jac_x(t, x, u);
    const Vector grad = problem.payoff_grad_x(t, x, u);
    if (jac.rows() != m || jac.cols() != m || grad.size() != m) {
      if (!bad_shape) bad_shape = Diagnostic{"evaluation", "derivative shape mismatch at " + Describe(t, x, u), 0.0};
      continue;
    }
    Matrix fd_jac(m, m);
    Vector fd_grad(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
      Vector xp = x, xm = x;
      xp[j] += step;
      xm[j] -= step;
      fd_jac.col(j) = (problem.dynamics(t, xp, u) - problem.dynamics(t, xm, u)) / (2 * step);
      fd_grad[j] = (problem.payoff(t, xp, u) - problem.payoff(t, xm, u)) / (2 * step);
    }
    const double jac_err = MaxAbs(jac - fd_jac) / std::max(1.0, MaxAbs(fd_jac));
    const double grad_err =
        (grad - fd_grad).cwiseAbs().maxCoeff() / std::max(1.0, fd_grad.cwiseAbs().maxCoeff());
    if (!(jac_err <= kJacobianRelTol) && !(jac_err <= worst_jac.magnitude)) {
      worst_jac.magnitude = std::isfinite(jac_err) ? jac_err : HUGE_VAL;
      worst_jac.location = Describe(t, x, u);
    }
    if (!(grad_err <= kJacobianRelTol) && !(grad_err <= worst_grad.magnitude)) {
      worst_grad.magnitude = std::isfinite(grad_err) ? grad_err : HUGE_VAL;
      worst_grad.location = Describe(t, x, u);
    }
  }
  if (bad_shape) out.push_back(*bad_shape);
  if (!worst_jac.location.empty()) out.push_back(worst_jac);
  if (!worst_grad.location.empty()) out.push_back(worst_grad);
  return out;
}

Trajectory SimulateState(const ControlProblem& problem, const ControlSignal& control) {
  const auto& values = control.values();
  return IntegrateForward(
      CellField([&](std::size_t cell, double t, const Vector& x) {
        return problem.dynamics(t, x, values[cell]);
      }),
      problem.x0, control.grid());
}

double TruncatedPayoff(const ControlProblem& problem, const Trajectory& x,
                       const ControlSignal& control) {
  const TimeGrid& grid = control.grid();
  double total = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const Vector& u = control[k];
    total += 0.5 * grid.step() *
             (problem.payoff(grid.node(k), x[k], u) + problem.payoff(grid.node(k + 1), x[k + 1], u));
  }
  return total;
}

TailBoundReport EstimateTailBound(const ControlProblem& problem,
                                  const ControlSignal& control, double t_max,
                                  const std::vector<double>& sample_times) {
  const TimeGrid& grid = control.grid();
  if (t_max > grid.t1() + 1e-12 || t_max <= grid.t0()) {
    throw RangeError("t_max outside the control grid");
  }
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] >= t_max || sample_times[i] < grid.t0() ||
        (i > 0 && !(sample_times[i] > sample_times[i - 1]))) {
      throw std::invalid_argument("sample_times must increase and stay below t_max");
    }
  }
  const Trajectory x = SimulateState(problem, control);

  // cumulative[k] = integral of |g| over [t0, t_k].
  std::vector<double> cumulative(grid.node_count(), 0.0);
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const Vector& u = control[k];
    cumulative[k + 1] =
        cumulative[k] + 0.5 * grid.step() *
                            (std::abs(problem.payoff(grid.node(k), x[k], u)) +
                             std::abs(problem.payoff(grid.node(k + 1), x[k + 1], u)));
  }
  const auto cumulative_at = [&](double t) {
    const std::size_t k = grid.cell_of(t);
    const double w = std::clamp((t - grid.node(k)) / grid.step(), 0.0, 1.0);
    return (1.0 - w) * cumulative[k] + w * cumulative[k + 1];
  };

  TailBoundReport report;
  report.sample_times = sample_times;
  const double total = cumulative_at(t_max);
  for (double t : sample_times) {
    report.tail_integrals.push_back(std::max(0.0, total - cumulative_at(t)));
  }

  bool monotone = true;
  for (std::size_t i = 1; i < report.tail_integrals.size(); ++i) {
    if (report.tail_integrals[i] > report.tail_integrals[i - 1]) monotone = false;
  }
  if (report.tail_integrals.empty()) {
    report.satisfied = true;
  } else {
    const double limit = std::max(1e-6 * report.tail_integrals.front(), 1e-9);
    report.satisfied = monotone && report.tail_integrals.back() <= limit;
  }

  // Least-squares slope of log(tail) against T over the positive entries.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (report.tail_integrals[i] <= 0.0) continue;
    const double ly = std::log(report.tail_integrals[i]);
    sx += sample_times[i];
    sy += ly;
    sxx += sample_times[i] * sample_times[i];
    sxy += sample_times[i] * ly;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  if (count >= 2 && denom > 0) report.fitted_decay_rate = -(count * sxy - sx * sy) / denom;
  return report;
}

ConvexityReport CheckVectogramConvexity(const ControlProblem& problem, double t,
                                        const Vector& x, int n_samples, double tol) {
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  const auto& points = problem.control_set.Points();

  std::vector<Vector> f_all;
  std::vector<double> g_all;
  f_all.reserve(points.size());
  g_all.reserve(points.size());
  for (const auto& u : points) {
    f_all.push_back(problem.dynamics(t, x, u));
    g_all.push_back(problem.payoff(t, x, u));
  }

  std::vector<std::size_t> sample;
  const std::size_t count = std::min<std::size_t>(points.size(), n_samples);
  for (std::size_t i = 0; i < count; ++i) {
    sample.push_back(count == 1 ? 0 : i * (points.size() - 1) / (count - 1));
  }

  ConvexityReport report;
  for (std::size_t a = 0; a < sample.size(); ++a) {
    for (std::size_t b = a + 1; b < sample.size(); ++b) {
      const std::size_t i = sample[a], j = sample[b];
      for (int k = 1; k < n_samples; ++k) {
        const double theta = static_cast<double>(k) / n_samples;
        const Vector f_bar = theta * f_all[i] + (1 - theta) * f_all[j];
        const double g_bar = theta * g_all[i] + (1 - theta) * g_all[j];
        bool witnessed = false;
        for (std::size_t c = 0; c < points.size() && !witnessed; ++c) {
          witnessed = (f_all[c] - f_bar).norm() <= tol && g_all[c] >= g_bar - tol;
        }
        if (!witnessed) {
          report.pass = false;
          report.u1 = points[i];
          report.u2 = points[j];
          report.theta = theta;
          return report;
        }
      }
    }
  }
  return report;
}

}  // namespace ihoc
