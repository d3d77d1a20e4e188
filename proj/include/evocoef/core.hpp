#pragma once

// Grids, time coefficients, spatial fields and traces shared by the solvers
// and the recovery step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evocoef/error.hpp"

namespace evocoef {

/// Uniform grid t_k = k * dt on [0, t_end], k = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid(double t_end, int n_steps) : t_end_(t_end), n_steps_(n_steps) {
    if (!(n_steps > 0)) throw InvalidInput("n_steps must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be positive and finite");
    dt_ = t_end / n_steps;
  }

  double t_end() const noexcept { return t_end_; }
  int n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_steps_) + 1; }

  double node(std::size_t k) const noexcept {
    return k == static_cast<std::size_t>(n_steps_) ? t_end_ : static_cast<double>(k) * dt_;
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = node(k);
    return out;
  }

  bool operator==(const TimeGrid& o) const noexcept {
    return t_end_ == o.t_end_ && n_steps_ == o.n_steps_;
  }

 private:
  double t_end_;
  int n_steps_;
  double dt_;
};

/// Periodic box [-L, L)^n sampled with N points per dimension (N even).
/// Flat indices are row-major with the last dimension fastest.
class SpaceGrid {
 public:
  SpaceGrid(int dim, double half_width, int points_per_dim)
      : dim_(dim), half_width_(half_width), n_(points_per_dim) {
    if (dim < 1 || dim > 3) throw InvalidInput("dimension must be 1, 2 or 3");
    if (!(half_width > 0.0) || !std::isfinite(half_width))
      throw InvalidInput("half_width must be positive");
    if (points_per_dim < 2 || points_per_dim % 2 != 0)
      throw InvalidInput("points_per_dim must be a positive even integer");
    total_ = 1;
    for (int d = 0; d < dim; ++d) total_ *= static_cast<std::size_t>(n_);
  }

  int dim() const noexcept { return dim_; }
  double half_width() const noexcept { return half_width_; }
  int points_per_dim() const noexcept { return n_; }
  std::size_t size() const noexcept { return total_; }
  double spacing() const noexcept { return 2.0 * half_width_ / n_; }
  double cell_volume() const noexcept { return std::pow(spacing(), dim_); }

  double coordinate(int j) const noexcept { return -half_width_ + j * spacing(); }

  /// Signed integer wavenumber of FFT bin j: 0..N/2-1, then -N/2..-1.
  int wavenumber(int j) const noexcept { return j < n_ / 2 ? j : j - n_; }
  double frequency(int j) const noexcept { return wavenumber(j) * (M_PI / half_width_); }
  double max_frequency() const noexcept { return (n_ / 2) * (M_PI / half_width_) * std::sqrt(double(dim_)); }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(dim_);
    for (int d = dim_ - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(flat % n_);
      flat /= n_;
    }
    return idx;
  }

  std::size_t flat_index(std::span<const int> idx) const noexcept {
    std::size_t flat = 0;
    for (int d = 0; d < dim_; ++d) flat = flat * n_ + static_cast<std::size_t>(idx[d]);
    return flat;
  }

  std::vector<double> point(std::size_t flat) const {
    auto idx = multi_index(flat);
    std::vector<double> x(dim_);
    for (int d = 0; d < dim_; ++d) x[d] = coordinate(idx[d]);
    return x;
  }

  /// |xi|^2 of the frequency attached to a flat spectral index.
  double frequency_norm2(std::size_t flat) const {
    double s = 0.0;
    for (int d = dim_ - 1; d >= 0; --d) {
      double f = frequency(static_cast<int>(flat % n_));
      s += f * f;
      flat /= n_;
    }
    return s;
  }

  bool operator==(const SpaceGrid& o) const noexcept {
    return dim_ == o.dim_ && half_width_ == o.half_width_ && n_ == o.n_;
  }

 private:
  int dim_;
  double half_width_;
  int n_;
  std::size_t total_ = 1;
};

/// Observation point q; always a grid node at least one cell away from the
/// box boundary.
class ObservationPoint {
 public:
  static ObservationPoint on(const SpaceGrid& grid, std::span<const double> q) {
    if (static_cast<int>(q.size()) != grid.dim())
      throw InvalidInput("observation point has wrong dimension");
    const double h = grid.spacing();
    const double L = grid.half_width();
    std::vector<int> idx(grid.dim());
    for (int d = 0; d < grid.dim(); ++d) {
      double s = (q[d] + L) / h;
      double r = std::round(s);
      if (std::abs(s - r) > 1e-9) throw InvalidInput("observation point is not a grid node");
      if (q[d] + L < h * (1.0 - 1e-12) || L - q[d] < h * (1.0 - 1e-12))
        throw InvalidInput("observation point lies within one cell of the box boundary");
      idx[d] = static_cast<int>(r);
    }
    return ObservationPoint(std::vector<double>(q.begin(), q.end()), idx, grid.flat_index(idx));
  }

  const std::vector<double>& position() const noexcept { return q_; }
  const std::vector<int>& node_index() const noexcept { return idx_; }
  std::size_t flat_index() const noexcept { return flat_; }

 private:
  ObservationPoint(std::vector<double> q, std::vector<int> idx, std::size_t flat)
      : q_(std::move(q)), idx_(std::move(idx)), flat_(flat) {}
  std::vector<double> q_;
  std::vector<int> idx_;
  std::size_t flat_;
};

/// Analytic coefficient families with exact antiderivatives.
///   constant     a
///   affine       a + b t
///   sinusoidal   a + b sin(rate t + phase)
///   exponential  a + b exp(-rate t)
struct ClosedForm {
  enum class Family { constant, affine, sinusoidal, exponential };

  Family family = Family::constant;
  double a = 0.0;
  double b = 0.0;
  double rate = 0.0;
  double phase = 0.0;

  static ClosedForm constant(double c) { return {Family::constant, c, 0.0, 0.0, 0.0}; }
  static ClosedForm affine(double a, double b) { return {Family::affine, a, b, 0.0, 0.0}; }
  static ClosedForm sinusoidal(double a, double b, double omega, double phase = 0.0) {
    return {Family::sinusoidal, a, b, omega, phase};
  }
  static ClosedForm exponential(double a, double b, double c) {
    return {Family::exponential, a, b, c, 0.0};
  }

  double value(double t) const noexcept {
    switch (family) {
      case Family::constant: return a;
      case Family::affine: return a + b * t;
      case Family::sinusoidal: return a + b * std::sin(rate * t + phase);
      case Family::exponential: return a + b * std::exp(-rate * t);
    }
    return a;
  }

  /// Integral over [0, t].
  double integral(double t) const noexcept {
    switch (family) {
      case Family::constant: return a * t;
      case Family::affine: return a * t + 0.5 * b * t * t;
      case Family::sinusoidal:
        if (rate == 0.0) return (a + b * std::sin(phase)) * t;
        return a * t + (b / rate) * (std::cos(phase) - std::cos(rate * t + phase));
      case Family::exponential:
        if (rate == 0.0) return (a + b) * t;
        return a * t - (b / rate) * std::expm1(-rate * t);
    }
    return a * t;
  }

  bool operator==(const ClosedForm&) const = default;
};

enum class CoefficientKind { alpha, phi, psi, lambda };

inline const char* to_string(CoefficientKind k) {
  switch (k) {
    case CoefficientKind::alpha: return "alpha";
    case CoefficientKind::phi: return "phi";
    case CoefficientKind::psi: return "psi";
    case CoefficientKind::lambda: return "lambda";
  }
  return "?";
}

/// A time coefficient sampled on a TimeGrid, optionally backed by a closed form.
class CoefficientFn {
 public:
  static CoefficientFn from_closed_form(const ClosedForm& cf, const TimeGrid& grid, CoefficientKind kind) {
    std::vector<double> s(grid.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = cf.value(grid.node(k));
    return CoefficientFn(std::move(s), grid, cf, kind);
  }

  static CoefficientFn from_samples(std::vector<double> samples, const TimeGrid& grid, CoefficientKind kind) {
    if (samples.size() != grid.size()) throw InvalidInput("coefficient sample count does not match the time grid");
    return CoefficientFn(std::move(samples), grid, std::nullopt, kind);
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t k) const noexcept { return samples_[k]; }
  const std::optional<ClosedForm>& closed_form() const noexcept { return closed_; }
  CoefficientKind kind() const noexcept { return kind_; }

  double min() const { return *std::min_element(samples_.begin(), samples_.end()); }
  double max() const { return *std::max_element(samples_.begin(), samples_.end()); }

  /// Value at an arbitrary time: exact for closed forms, otherwise cubic
  /// Lagrange interpolation through the four nearest nodes.
  double at(double t) const {
    if (closed_) return closed_->value(t);
    const int n = grid_.n_steps();
    const double dt = grid_.dt();
    if (n < 3) {
      int k = std::clamp(static_cast<int>(std::floor(t / dt)), 0, n - 1);
      double s = t / dt - k;
      return (1.0 - s) * samples_[k] + s * samples_[k + 1];
    }
    int k = static_cast<int>(std::floor(t / dt));
    int lo = std::clamp(k - 1, 0, n - 3);
    double s = t / dt - lo;  // local coordinate, nodes at 0,1,2,3
    double f0 = samples_[lo], f1 = samples_[lo + 1], f2 = samples_[lo + 2], f3 = samples_[lo + 3];
    double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    return f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3;
  }

 private:
  CoefficientFn(std::vector<double> s, const TimeGrid& g, std::optional<ClosedForm> cf, CoefficientKind kind)
      : samples_(std::move(s)), grid_(g), closed_(std::move(cf)), kind_(kind) {
    for (double v : samples_)
      if (!std::isfinite(v)) throw InvalidInput("coefficient samples must be finite");
  }

  std::vector<double> samples_;
  TimeGrid grid_;
  std::optional<ClosedForm> closed_;
  CoefficientKind kind_;
};

/// Running integral of coeff at every node of its grid, starting from exactly 0.
///
/// Closed forms are integrated exactly. Sampled coefficients use cumulative
/// composite Simpson; odd prefixes end with one Simpson 3/8 block, and the
/// first node uses the four-point cubic rule, so every node is O(dt^4).
/// For alpha coefficients a non-positive running integral at t > 0 is
/// rejected.
inline CoefficientFn antiderivative(const CoefficientFn& coeff) {
  const TimeGrid& grid = coeff.grid();
  const std::size_t n = static_cast<std::size_t>(grid.n_steps());
  std::vector<double> out(n + 1, 0.0);
  if (const auto& cf = coeff.closed_form()) {
    for (std::size_t k = 1; k <= n; ++k) out[k] = cf->integral(grid.node(k));
  } else {
    const double dt = grid.dt();
    auto f = coeff.samples();
    for (std::size_t k = 1; k <= n; ++k) {
      if (k % 2 == 0) {
        out[k] = out[k - 2] + dt / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
      } else if (k >= 3) {
        out[k] = out[k - 3] + 3.0 * dt / 8.0 * (f[k - 3] + 3.0 * f[k - 2] + 3.0 * f[k - 1] + f[k]);
      } else if (n >= 3) {
        out[k] = dt / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
      } else {
        out[k] = 0.5 * dt * (f[0] + f[1]);
      }
    }
  }
  if (coeff.kind() == CoefficientKind::alpha) {
    for (std::size_t k = 1; k <= n; ++k)
      if (!(out[k] > 0.0))
        throw InvalidInput("running integral of alpha must be positive for t > 0 (fails at node " +
                           std::to_string(k) + ")");
  }
  return CoefficientFn::from_samples(std::move(out), grid, coeff.kind());
}

/// Real values over the nodes of a SpaceGrid.
class Field {
 public:
  explicit Field(const SpaceGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

  Field(const SpaceGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidInput("field size does not match its grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("field values must be finite");
  }

  template <class Fn>
  static Field sample(const SpaceGrid& grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.point(i));
    return Field(grid, std::move(v));
  }

  const SpaceGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double mean() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  /// Trapezoid (= rectangle, periodic) integral over the box.
  double integral() const noexcept { return mean() * std::pow(2.0 * grid_.half_width(), grid_.dim()); }

 private:
  SpaceGrid grid_;
  std::vector<double> values_;
};

inline Field linear_combination(double a, const Field& f, double b, const Field& g) {
  if (!(f.grid() == g.grid())) throw InvalidInput("fields live on different grids");
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * f[i] + b * g[i];
  return Field(f.grid(), std::move(v));
}

enum class TraceLabel { h1, h2, derived };

/// Time series of a solution at the observation point.
class Trace {
 public:
  Trace(const TimeGrid& grid, std::vector<double> values, TraceLabel label = TraceLabel::derived)
      : grid_(grid), values_(std::move(values)), label_(label) {
    if (values_.size() != grid_.size()) throw InvalidInput("trace length must equal n_steps + 1");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("trace values must be finite");
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  std::size_t size() const noexcept { return values_.size(); }
  TraceLabel label() const noexcept { return label_; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  Trace scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return Trace(grid_, std::move(v), label_);
  }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  TraceLabel label_;
};

/// Smooth compactly supported bump amplitude * exp(-r^2 / (radius^2 - r^2)).
///
/// The closed ball plus `margin` on every side must fit inside the box;
/// a negative margin means "use the radius".
inline Field bump_datum(const SpaceGrid& grid, std::span<const double> center, double radius, double amplitude,
                        double margin = -1.0) {
  if (static_cast<int>(center.size()) != grid.dim()) throw InvalidInput("bump center has wrong dimension");
  if (!(radius > 0.0)) throw InvalidInput("bump radius must be positive");
  const double gap = margin < 0.0 ? radius : std::max(margin, radius);
  const double L = grid.half_width();
  for (int d = 0; d < grid.dim(); ++d) {
    if (center[d] - radius - gap < -L || center[d] + radius + gap > L)
      throw InvalidInput("bump support plus margin touches the box boundary");
  }
  const double r2max = radius * radius;
  return Field::sample(grid, [&](const std::vector<double>& x) {
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) r2 += (x[d] - center[d]) * (x[d] - center[d]);
    if (r2 >= r2max) return 0.0;
    return amplitude * std::exp(-r2 / (r2max - r2));
  });
}

}  // namespace evocoef
