#pragma once

#include <optional>
#include <vector>

#include "ihoc/pmp_finite.h"

namespace ihoc {

/// Strictly increasing positive horizons tau_1 < ... < tau_N, N >= 2.
class HorizonSchedule {
 public:
  explicit HorizonSchedule(std::vector<double> horizons);

  /// tau_n = first * 2^(n-1), n = 1..count.
  static HorizonSchedule Geometric(double first, int count);

  const std::vector<double>& horizons() const { return horizons_; }
  double front() const { return horizons_.front(); }
  double back() const { return horizons_.back(); }
  std::size_t size() const { return horizons_.size(); }

 private:
  std::vector<double> horizons_;
};

struct SweepOptions {
  SolveOptions solve;
  double cauchy_tol = 1e-2;
  // Solve each horizon from the cold start instead of chaining controls.
  bool independent = false;
};

struct HorizonSolve {
  double horizon;
  Extremal extremal;
};

struct TruncationReport {
  std::vector<HorizonSolve> per_horizon;
  // cauchy_table[i][j] = sup over [0, tau_1] of ||psi^i - psi^j||.
  std::vector<std::vector<double>> cauchy_table;
  std::optional<Extremal> limit;
  // Horizons strictly inside the last one and the diagnostics there, taken
  // from the largest-horizon extremal (certified or not).
  std::vector<double> sample_times;
  std::vector<double> tail_psi_norms;
  std::vector<double> product_residuals;
  std::vector<double> payoff_sequence;

  const Extremal& last() const { return per_horizon.back().extremal; }
};

/// A horizon solve blew up; carries everything computed before it.
class SweepAbortedError : public Error {
 public:
  SweepAbortedError(const std::string& what, TruncationReport partial)
      : Error(what), partial_(std::move(partial)) {}
  const TruncationReport& partial() const { return partial_; }

 private:
  TruncationReport partial_;
};

/// Free-endpoint truncations on every horizon, then Cauchy certification on
/// [0, tau_1]: the last extremal becomes the limit when the last table row is
/// non-increasing and its final entry is at most cauchy_tol.
TruncationReport RunTruncationSweep(const ControlProblem& problem,
                                    const HorizonSchedule& schedule,
                                    const SweepOptions& opts = {});

struct TransversalityReport {
  std::vector<double> psi_norms;
  std::vector<double> product_residuals;
};

/// ||psi(t_i)|| and |psi(t_i) . x(t_i)|; RangeError outside the horizon.
TransversalityReport TransversalityDiagnostics(const Extremal& extremal,
                                               const std::vector<double>& sample_times);

struct StabilityProbeReport {
  double probe_time = 0;
  double delta = 0;
  double horizon = 0;
  std::vector<Vector> directions;
  std::vector<double> deviations;
  double modulus = 0;
};

/// Empirical stability modulus of the costate: perturb psi(t) by delta * d
/// for n_directions unit directions (axes first, then seeded random), rerun
/// the coupled system to the horizon and record the sup deviation of psi from
/// the unperturbed rerun. Blow-ups record +inf for that direction. This
/// measures sensitivity; it does not certify any stability condition.
StabilityProbeReport ProbeAdjointStability(const ControlProblem& problem,
                                           const Extremal& extremal, double t,
                                           double delta, int n_directions,
                                           unsigned seed = 0);

/// Problem with payoff g - (1/n) e^{-t} ||u - u_ref(t)||.
ControlProblem PenalizedProblem(const ControlProblem& problem,
                                const ControlSignal& u_ref, int n);

/// One truncation sweep per n on the penalized problem.
std::vector<TruncationReport> RunPenalizedSweep(const ControlProblem& problem,
                                                const ControlSignal& u_ref,
                                                const std::vector<int>& n_list,
                                                const HorizonSchedule& schedule,
                                                const SweepOptions& opts = {});

/// The certified limit; throws NoCertifiedLimitError when absent.
class NoCertifiedLimitError : public Error {
 public:
  using Error::Error;
};
const Extremal& ExtractLimit(const TruncationReport& report);

/// Sup-norm distance between two controls over the first grid's cells,
/// sampling the second at cell midpoints.
double ControlDistance(const ControlSignal& a, const ControlSignal& b);

}  // namespace ihoc
