#include "ihoc/horizon_limits.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ihoc/benchmarks.h"
#include "test_problems.h"

namespace ihoc {
namespace {

using testing::Interval;
using testing::V1;

// Open-loop discounted LQR optimum u*(t) = -k x0 e^{-kt} at cell midpoints.
ControlSignal OracleControl(const TimeGrid& grid, double x0) {
  const double k = testing::RiccatiRootByBisection(1.0);
  std::vector<Vector> values;
  for (std::size_t c = 0; c < grid.n_steps(); ++c) {
    const double mid = 0.5 * (grid.node(c) + grid.node(c + 1));
    values.push_back(V1(-k * x0 * std::exp(-k * mid)));
  }
  return ControlSignal(grid, values);
}

ControlSignal Restrict(const ControlSignal& u, const TimeGrid& grid) {
  return ControlSignal(grid, std::vector<Vector>(u.values().begin(),
                                                 u.values().begin() + grid.n_steps()));
}

class LqrSweep : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    report_ = new TruncationReport(RunTruncationSweep(Lqr1d(), HorizonSchedule({5, 10, 20, 40})));
  }
  static void TearDownTestSuite() {
    delete report_;
    report_ = nullptr;
  }
  static TruncationReport* report_;
};
TruncationReport* LqrSweep::report_ = nullptr;

TEST_F(LqrSweep, CertifiesLimitWithDecayingTail) {
  ASSERT_TRUE(report_->limit.has_value());
  const auto& tail = report_->tail_psi_norms;
  ASSERT_EQ(tail.size(), 3u);
  for (std::size_t i = 1; i < tail.size(); ++i) EXPECT_LT(tail[i], tail[i - 1]);
  EXPECT_LE(tail.back(), 1e-2);
  EXPECT_EQ(report_->sample_times, (std::vector<double>{5, 10, 20}));
}

TEST_F(LqrSweep, CauchyTableShape) {
  const auto& c = report_->cauchy_table;
  ASSERT_EQ(c.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i][i], 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(c[i][j], c[j][i]);
      EXPECT_GE(c[i][j], 0.0);
    }
  }
  for (std::size_t j = 1; j + 1 < 4; ++j) EXPECT_LE(c[3][j], c[3][j - 1]);
}

TEST_F(LqrSweep, EveryTruncationHasZeroTerminalCostate) {
  for (const auto& h : report_->per_horizon) {
    EXPECT_EQ(h.extremal.residual.terminal_psi_norm, 0.0) << h.horizon;
    EXPECT_EQ(h.extremal.psi.back().norm(), 0.0);
    EXPECT_NEAR(h.extremal.psi.front().squaredNorm() + h.extremal.lambda * h.extremal.lambda,
                1.0, 1e-9);
  }
}

TEST_F(LqrSweep, ProductResidualBoundedByPsiTimesState) {
  const Extremal& lim = *report_->limit;
  const double x_max = lim.x.SupNorm();
  ASSERT_EQ(report_->product_residuals.size(), report_->tail_psi_norms.size());
  for (std::size_t i = 0; i < report_->product_residuals.size(); ++i) {
    EXPECT_LE(report_->product_residuals[i], report_->tail_psi_norms[i] * x_max);
  }
}

TEST_F(LqrSweep, TruncatedPayoffMonotonicity) {
  const ControlProblem p = Lqr1d();
  const auto& ph = report_->per_horizon;
  for (std::size_t n = 0; n + 1 < ph.size(); ++n) {
    const TimeGrid grid = ph[n].extremal.u.grid();
    const ControlSignal next = Restrict(ph[n + 1].extremal.u, grid);
    const double j_next = TruncatedPayoff(p, SimulateState(p, next), next);
    EXPECT_GE(report_->payoff_sequence[n], j_next - 1e-6) << "tau=" << ph[n].horizon;
  }
}

TEST_F(LqrSweep, ExtractLimitReturnsLargestHorizon) {
  const Extremal& lim = ExtractLimit(*report_);
  EXPECT_EQ(lim.horizon, 40.0);
  EXPECT_EQ(lim.payoff, report_->last().payoff);
}

TEST_F(LqrSweep, ProbeAtTwoIsFinite) {
  const StabilityProbeReport r = ProbeAdjointStability(Lqr1d(), *report_->limit, 2.0, 1e-3, 1);
  ASSERT_EQ(r.deviations.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.modulus));
  EXPECT_EQ(r.modulus, r.deviations[0]);
  EXPECT_GE(r.modulus, 1e-3 * (1 - 1e-9));
  // Regression baseline from the first build.
  EXPECT_NEAR(r.modulus, 0.102456, 1e-5);
}

TEST_F(LqrSweep, ProbeWithZeroDeltaIsExact) {
  const StabilityProbeReport r = ProbeAdjointStability(Lqr1d(), *report_->limit, 3.0, 0.0, 3);
  ASSERT_EQ(r.deviations.size(), 3u);
  for (double d : r.deviations) EXPECT_EQ(d, 0.0);
}

TEST(RunTruncationSweep, ZeroPayoffCertifiesImmediately) {
  const TruncationReport r =
      RunTruncationSweep(testing::Drift(0.5, Interval(-1, 1, 3)), HorizonSchedule({1, 2, 4}));
  ASSERT_TRUE(r.limit.has_value());
  for (const auto& row : r.cauchy_table) {
    for (double v : row) EXPECT_EQ(v, 0.0);
  }
  for (const auto& h : r.per_horizon) {
    for (const auto& v : h.extremal.psi.values()) EXPECT_EQ(v[0], 0.0);
  }
  for (const auto& v : ExtractLimit(r).psi.values()) EXPECT_EQ(v[0], 0.0);
}

TEST(RunTruncationSweep, ZeroToleranceLeavesLimitAbsent) {
  SweepOptions opts;
  opts.cauchy_tol = 0.0;
  const TruncationReport r = RunTruncationSweep(Lqr1d(), HorizonSchedule({5, 10}), opts);
  EXPECT_FALSE(r.limit.has_value());
  EXPECT_THROW(ExtractLimit(r), NoCertifiedLimitError);
  EXPECT_EQ(r.tail_psi_norms.size(), 1u);
}

TEST(RunTruncationSweep, BlowUpCarriesPartialReport) {
  // xdot = x^2 from 1 leaves the reals at t = 1 whatever the control.
  const ControlProblem p = testing::Scalar([](double, double x, double) { return x * x; },
                                           [](double, double x, double) { return 2 * x; },
                                           [](double, double x, double) { return -x; },
                                           [](double, double, double) { return -1.0; }, 1.0,
                                           Interval(0, 0, 1), "riccati_blowup");
  try {
    RunTruncationSweep(p, HorizonSchedule({0.5, 2.0}));
    FAIL() << "expected SweepAbortedError";
  } catch (const SweepAbortedError& e) {
    ASSERT_EQ(e.partial().per_horizon.size(), 1u);
    EXPECT_EQ(e.partial().per_horizon[0].horizon, 0.5);
  }
}

TEST(HorizonSchedule, Validation) {
  EXPECT_THROW(HorizonSchedule({5}), ConfigError);
  EXPECT_THROW(HorizonSchedule({5, 5}), ConfigError);
  EXPECT_THROW(HorizonSchedule({10, 5}), ConfigError);
  EXPECT_THROW(HorizonSchedule({0, 5}), ConfigError);
  EXPECT_EQ(HorizonSchedule::Geometric(5, 4).horizons(), (std::vector<double>{5, 10, 20, 40}));
}

TEST(TransversalityDiagnostics, ZeroCostate) {
  const Extremal e = SolveFreeEndpoint(testing::Drift(0.0, Interval(-1, 1, 3)), 4.0);
  const TransversalityReport r = TransversalityDiagnostics(e, {1, 2, 3});
  for (double v : r.psi_norms) EXPECT_EQ(v, 0.0);
  for (double v : r.product_residuals) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(TransversalityDiagnostics(e, {5.0}), RangeError);
}

TEST(TransversalityDiagnostics, LqrMatchesClosedFormAdjoint) {
  const double k = testing::RiccatiRootByBisection(1.0);
  const double lambda = 1.0 / std::sqrt(1.0 + 4.0 * k * k);
  const Extremal e = SolveFreeEndpoint(Lqr1d(1.0, 1.0, 1001), 20.0);
  ASSERT_TRUE(e.converged);
  const TransversalityReport r = TransversalityDiagnostics(e, {5, 10, 15});
  const double oracle = 2 * k * lambda * std::exp(-(k + 1) * 5.0);
  EXPECT_NEAR(r.psi_norms[0], oracle, 0.1 * oracle);
  EXPECT_LT(r.psi_norms[1], r.psi_norms[0]);
  EXPECT_LT(r.psi_norms[2], r.psi_norms[1]);
  const double x_max = e.x.SupNorm();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(r.product_residuals[i], r.psi_norms[i] * x_max);
}

TEST(ProbeAdjointStability, StateFreeZeroPayoffShiftsByDelta) {
  const ControlProblem p = testing::Drift(0.0, Interval(-1, 1, 3));
  const Extremal e = SolveFreeEndpoint(p, 3.0);
  const StabilityProbeReport r = ProbeAdjointStability(p, e, 1.0, 0.25, 4, 17);
  ASSERT_EQ(r.deviations.size(), 4u);
  for (double d : r.deviations) EXPECT_NEAR(d, 0.25, 1e-15);
  EXPECT_NEAR(r.modulus, 0.25, 1e-15);
  for (const auto& d : r.directions) EXPECT_NEAR(d.norm(), 1.0, 1e-12);
}

TEST(ProbeAdjointStability, IdenticalSeedsGiveIdenticalDirections) {
  const ControlProblem p = LinearQuadratic({Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                            Vector::Zero(2), Matrix::Zero(2, 2),
                                            Matrix::Zero(2, 2), 1.0, MakeVector({0, 0}),
                                            ControlSet::Box(MakeVector({-1, -1}),
                                                            MakeVector({1, 1}), 3),
                                            "planar"});
  const Extremal e = SolveFreeEndpoint(p, 2.0);
  const auto a = ProbeAdjointStability(p, e, 1.0, 1e-3, 5, 42);
  const auto b = ProbeAdjointStability(p, e, 1.0, 1e-3, 5, 42);
  ASSERT_EQ(a.directions.size(), 5u);
  EXPECT_EQ(a.directions[0], MakeVector({1, 0}));
  EXPECT_EQ(a.directions[1], MakeVector({0, 1}));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.directions[i], b.directions[i]);
}

TEST(PenalizedProblem, PlainArgmaxEqualsPenalizedArgmax) {
  const ControlProblem p = Lqr1d();
  const ControlSignal u_ref = ControlSignal::Constant(TimeGrid(0, 10, 100), V1(1.4));
  const ControlProblem pen = PenalizedProblem(p, u_ref, 7);
  for (double t : {0.0, 0.35, 2.0, 9.99}) {
    for (double psi : {-1.5, -0.2, 0.0, 0.9}) {
      const Vector x = V1(0.3 + t);
      EXPECT_EQ(ArgmaxHamiltonian(pen, x, t, 1.0, V1(psi)).u,
                ArgmaxHamiltonianPenalized(p, x, t, 1.0, V1(psi), V1(1.4), 7).u);
    }
  }
}

TEST(RunPenalizedSweep, ReferenceAtOptimumLeavesControlUnchanged) {
  const ControlProblem p = Lqr1d();
  const HorizonSchedule schedule({5, 10, 20});
  const TruncationReport plain = RunTruncationSweep(p, schedule);
  const ControlSignal& u_ref = plain.last().u;
  const auto reports = RunPenalizedSweep(p, u_ref, {1, 10}, schedule);
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_LE(ControlDistance(r.last().u, u_ref), p.control_set.Spacing()[0] + 1e-12);
  }
}

TEST(RunPenalizedSweep, WrongReferenceFadesWithN) {
  const ControlProblem p = Lqr1d();
  const HorizonSchedule schedule({5, 10, 20});
  const ControlSignal zero = ControlSignal::Constant(HorizonGrid(20, 100), V1(0.0));
  const auto reports = RunPenalizedSweep(p, zero, {1, 1000}, schedule);
  const ControlSignal oracle = OracleControl(reports[0].last().u.grid(), 1.0);
  const double d1 = ControlDistance(reports[0].last().u, oracle);
  const double d1000 = ControlDistance(reports[1].last().u, oracle);
  EXPECT_LT(d1000, d1) << "n=1: " << d1 << " n=1000: " << d1000;
}

TEST(RunPenalizedSweep, ZeroPayoffFollowsReference) {
  const ControlProblem p = testing::Drift(0.0, Interval(-1, 1, 11));
  const ControlSignal ref = ControlSignal::Constant(HorizonGrid(4, 100), V1(0.4));
  const auto reports = RunPenalizedSweep(p, ref, {1, 5, 50}, HorizonSchedule({2, 4}));
  for (const auto& r : reports) {
    for (const auto& h : r.per_horizon) {
      for (const auto& v : h.extremal.u.values()) EXPECT_NEAR(v[0], 0.4, 1e-12);
    }
  }
}

TEST(RunPenalizedSweep, ReferenceMustCoverSchedule) {
  const ControlSignal ref = ControlSignal::Constant(HorizonGrid(4, 100), V1(0.0));
  EXPECT_THROW(RunPenalizedSweep(Lqr1d(), ref, {1}, HorizonSchedule({2, 8})),
               std::invalid_argument);
}

TEST(ControlDistance, SupOverCells) {
  const ControlSignal a(TimeGrid(0, 1, 2), {V1(0.0), V1(1.0)});
  const ControlSignal b(TimeGrid(0, 2, 4), {V1(0.5), V1(0.0), V1(-3.0), V1(7.0)});
  EXPECT_EQ(ControlDistance(a, b), 1.0);
  EXPECT_EQ(ControlDistance(a, a), 0.0);
}

}  // namespace
}  // namespace ihoc
