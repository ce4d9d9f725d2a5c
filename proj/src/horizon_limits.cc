#include "ihoc/horizon_limits.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ihoc {

HorizonSchedule::HorizonSchedule(std::vector<double> horizons)
    : horizons_(std::move(horizons)) {
  if (horizons_.size() < 2) throw ConfigError("horizon schedule needs at least two horizons");
  for (std::size_t i = 0; i < horizons_.size(); ++i) {
    if (!(horizons_[i] > 0) || !std::isfinite(horizons_[i]) ||
        (i > 0 && !(horizons_[i] > horizons_[i - 1]))) {
      throw ConfigError("horizon schedule must be positive and strictly increasing");
    }
  }
}

HorizonSchedule HorizonSchedule::Geometric(double first, int count) {
  std::vector<double> h;
  for (int n = 0; n < count; ++n) h.push_back(first * std::ldexp(1.0, n));
  return HorizonSchedule(std::move(h));
}

namespace {

void FillDiagnostics(TruncationReport& report, const HorizonSchedule& schedule,
                     double cauchy_tol) {
  const std::size_t n = report.per_horizon.size();
  const TimeGrid& window = report.per_horizon.front().extremal.psi.grid();
  report.cauchy_table.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Trajectory& a = report.per_horizon[i].extremal.psi;
      const Trajectory& b = report.per_horizon[j].extremal.psi;
      double d = 0.0;
      for (std::size_t k = 0; k < window.node_count(); ++k) {
        const double t = window.node(k);
        d = std::max(d, (a.Sample(t) - b.Sample(t)).norm());
      }
      report.cauchy_table[i][j] = report.cauchy_table[j][i] = d;
    }
  }

  report.payoff_sequence.clear();
  for (const auto& h : report.per_horizon) report.payoff_sequence.push_back(h.extremal.payoff);

  const Extremal& last = report.per_horizon.back().extremal;
  report.sample_times.clear();
  for (double tau : schedule.horizons()) {
    if (tau < last.horizon) report.sample_times.push_back(tau);
  }
  const TransversalityReport tr = TransversalityDiagnostics(last, report.sample_times);
  report.tail_psi_norms = tr.psi_norms;
  report.product_residuals = tr.product_residuals;

  report.limit.reset();
  if (n == schedule.size() && n >= 2) {
    const auto& row = report.cauchy_table[n - 1];
    bool monotone = true;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      if (row[j] > row[j - 1]) monotone = false;
    }
    if (monotone && row[n - 2] <= cauchy_tol) report.limit = last;
  }
}

}  // namespace

TruncationReport RunTruncationSweep(const ControlProblem& problem,
                                    const HorizonSchedule& schedule,
                                    const SweepOptions& opts) {
  TruncationReport report;
  SolveOptions solve = opts.solve;
  for (double tau : schedule.horizons()) {
    try {
      Extremal e = SolveFreeEndpoint(problem, tau, solve);
      if (!opts.independent) solve.warm_start = e.u;
      report.per_horizon.push_back({tau, std::move(e)});
    } catch (const BlowUpError& err) {
      if (!report.per_horizon.empty()) FillDiagnostics(report, schedule, opts.cauchy_tol);
      throw SweepAbortedError("horizon " + std::to_string(tau) + ": " + err.what(),
                              std::move(report));
    }
  }
  FillDiagnostics(report, schedule, opts.cauchy_tol);
  return report;
}

TransversalityReport TransversalityDiagnostics(const Extremal& extremal,
                                               const std::vector<double>& sample_times) {
  TransversalityReport out;
  for (double t : sample_times) {
    const Vector psi = extremal.psi.Sample(t);
    const Vector x = extremal.x.Sample(t);
    out.psi_norms.push_back(psi.norm());
    out.product_residuals.push_back(std::abs(psi.dot(x)));
  }
  return out;
}

StabilityProbeReport ProbeAdjointStability(const ControlProblem& problem,
                                           const Extremal& extremal, double t,
                                           double delta, int n_directions,
                                           unsigned seed) {
  if (!(delta >= 0)) throw std::invalid_argument("delta must be non-negative");
  if (n_directions < 1) throw std::invalid_argument("n_directions must be >= 1");
  const TimeGrid& grid = extremal.x.grid();
  grid.cell_of(t);  // range check
  const std::size_t node = std::min(grid.nearest_node(t), grid.n_steps() - 1);
  const Eigen::Index m = problem.state_dim;

  StabilityProbeReport report;
  report.probe_time = grid.node(node);
  report.delta = delta;
  report.horizon = extremal.horizon;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n_directions; ++i) {
    Vector d = Vector::Zero(m);
    if (i < m) {
      d[i] = 1.0;
    } else {
      do {
        for (Eigen::Index j = 0; j < m; ++j) d[j] = normal(rng);
      } while (d.norm() == 0.0);
      d /= d.norm();
    }
    report.directions.push_back(d);
  }

  const Vector& x_t = extremal.x[node];
  const Vector& psi_t = extremal.psi[node];
  const CoupledArc base = ShootCoupled(problem, grid, node, x_t, psi_t, extremal.lambda);
  for (const auto& d : report.directions) {
    double deviation = 0.0;
    try {
      const CoupledArc run =
          ShootCoupled(problem, grid, node, x_t, psi_t + delta * d, extremal.lambda);
      for (std::size_t k = 0; k < run.psi.values().size(); ++k) {
        deviation = std::max(deviation, (run.psi[k] - base.psi[k]).norm());
      }
    } catch (const BlowUpError&) {
      deviation = std::numeric_limits<double>::infinity();
    }
    report.deviations.push_back(deviation);
    report.modulus = std::max(report.modulus, deviation);
  }
  return report;
}

ControlProblem PenalizedProblem(const ControlProblem& problem,
                                const ControlSignal& u_ref, int n) {
  if (n < 1) throw std::invalid_argument("penalty index n must be >= 1");
  ControlProblem out = problem;
  const TimeGrid grid = u_ref.grid();
  const auto ref_at = [u_ref, grid](double t) -> const Vector& {
    return u_ref.At(std::clamp(t, grid.t0(), grid.t1()));
  };
  out.payoff = [base = problem.payoff, ref_at, n](double t, const Vector& x, const Vector& u) {
    return base(t, x, u) - std::exp(-t) / n * (u - ref_at(t)).norm();
  };
  out.label = problem.label + "_penalized_n" + std::to_string(n);
  return out;
}

std::vector<TruncationReport> RunPenalizedSweep(const ControlProblem& problem,
                                                const ControlSignal& u_ref,
                                                const std::vector<int>& n_list,
                                                const HorizonSchedule& schedule,
                                                const SweepOptions& opts) {
  if (u_ref.grid().t1() < schedule.back() - 1e-12) {
    throw std::invalid_argument("u_ref must cover the largest horizon");
  }
  std::vector<TruncationReport> reports;
  for (int n : n_list) {
    reports.push_back(RunTruncationSweep(PenalizedProblem(problem, u_ref, n), schedule, opts));
  }
  return reports;
}

const Extremal& ExtractLimit(const TruncationReport& report) {
  if (!report.limit) throw NoCertifiedLimitError("truncation sweep did not certify a limit");
  return *report.limit;
}

double ControlDistance(const ControlSignal& a, const ControlSignal& b) {
  const TimeGrid& grid = a.grid();
  double d = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double mid = 0.5 * (grid.node(k) + grid.node(k + 1));
    const double clamped = std::clamp(mid, b.grid().t0(), b.grid().t1());
    d = std::max(d, (a[k] - b.At(clamped)).norm());
  }
  return d;
}

}  // namespace ihoc
