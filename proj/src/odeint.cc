#include "ihoc/odeint.h"

#include <cmath>
#include <utility>

namespace ihoc {

namespace {

constexpr double kTimeSlack = 1e-12;

void RequireFinite(const Vector& v, std::size_t node, double t) {
  if (!AllFinite(v)) throw BlowUpError(node, t);
}

Vector Rk4Step(const CellField& field, std::size_t cell, double t, double h,
               const Vector& y) {
  const Vector k1 = field(cell, t, y);
  const Vector k2 = field(cell, t + 0.5 * h, y + 0.5 * h * k1);
  const Vector k3 = field(cell, t + 0.5 * h, y + 0.5 * h * k2);
  const Vector k4 = field(cell, t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

CellField Lift(const Field& field) {
  return [&field](std::size_t, double t, const Vector& y) { return field(t, y); };
}

}  // namespace

bool AllFinite(const Vector& v) { return v.allFinite(); }

TimeGrid::TimeGrid(double t0, double t1, std::size_t n_steps)
    : t0_(t0), t1_(t1), n_steps_(n_steps), h_(0.0) {
  if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
    throw std::invalid_argument("TimeGrid requires finite t1 > t0");
  }
  if (n_steps == 0) throw std::invalid_argument("TimeGrid requires n_steps >= 1");
  h_ = (t1 - t0) / static_cast<double>(n_steps);
}

double TimeGrid::node(std::size_t k) const {
  if (k >= n_steps_) return k == n_steps_ ? t1_ : t0_ + static_cast<double>(k) * h_;
  return t0_ + static_cast<double>(k) * h_;
}

std::size_t TimeGrid::cell_of(double t) const {
  if (t < t0_ - kTimeSlack || t > t1_ + kTimeSlack) {
    throw RangeError("time " + std::to_string(t) + " outside [" +
                     std::to_string(t0_) + ", " + std::to_string(t1_) + "]");
  }
  if (t <= t0_) return 0;
  auto k = static_cast<std::size_t>(std::floor((t - t0_) / h_));
  // Guard against floor landing one cell off near node times.
  if (k < n_steps_ && t < node(k)) --k;
  if (k + 1 < n_steps_ && t >= node(k + 1)) ++k;
  return k >= n_steps_ ? n_steps_ - 1 : k;
}

std::size_t TimeGrid::nearest_node(double t) const {
  const double r = std::round((t - t0_) / h_);
  if (r <= 0.0) return 0;
  const auto k = static_cast<std::size_t>(r);
  return k > n_steps_ ? n_steps_ : k;
}

Trajectory::Trajectory(TimeGrid grid, std::vector<Vector> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) {
    throw std::invalid_argument("Trajectory needs one value per grid node");
  }
  for (const auto& v : values_) {
    if (!AllFinite(v)) throw std::invalid_argument("Trajectory values must be finite");
  }
}

Vector Trajectory::Sample(double t) const {
  const std::size_t k = grid_.cell_of(t);
  const double left = grid_.node(k);
  const double right = grid_.node(k + 1);
  if (t <= left) return values_[k];
  if (t >= right) return values_[k + 1];
  const double w = (t - left) / (right - left);
  return (1.0 - w) * values_[k] + w * values_[k + 1];
}

double Trajectory::SupNorm() const {
  double sup = 0.0;
  for (const auto& v : values_) sup = std::max(sup, v.norm());
  return sup;
}

ControlSignal::ControlSignal(TimeGrid grid, std::vector<Vector> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.n_steps()) {
    throw std::invalid_argument("ControlSignal needs one value per grid cell");
  }
}

ControlSignal ControlSignal::Constant(TimeGrid grid, const Vector& value) {
  return ControlSignal(grid, std::vector<Vector>(grid.n_steps(), value));
}

Trajectory IntegrateForward(const CellField& field, const Vector& x_init,
                            const TimeGrid& grid) {
  RequireFinite(x_init, 0, grid.t0());
  std::vector<Vector> values;
  values.reserve(grid.node_count());
  values.push_back(x_init);
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    Vector next = Rk4Step(field, k, grid.node(k), h, values.back());
    RequireFinite(next, k + 1, grid.node(k + 1));
    values.push_back(std::move(next));
  }
  return Trajectory(grid, std::move(values));
}

Trajectory IntegrateForward(const Field& field, const Vector& x_init,
                            const TimeGrid& grid) {
  return IntegrateForward(Lift(field), x_init, grid);
}

Trajectory IntegrateBackward(const CellField& field, const Vector& y_terminal,
                             const TimeGrid& grid) {
  const std::size_t n = grid.n_steps();
  RequireFinite(y_terminal, n, grid.t1());
  std::vector<Vector> values(grid.node_count());
  values[n] = y_terminal;
  const double h = grid.step();
  for (std::size_t k = n; k > 0; --k) {
    Vector prev = Rk4Step(field, k - 1, grid.node(k), -h, values[k]);
    RequireFinite(prev, k - 1, grid.node(k - 1));
    values[k - 1] = std::move(prev);
  }
  return Trajectory(grid, std::move(values));
}

Trajectory IntegrateBackward(const Field& field, const Vector& y_terminal,
                             const TimeGrid& grid) {
  return IntegrateBackward(Lift(field), y_terminal, grid);
}

}  // namespace ihoc
