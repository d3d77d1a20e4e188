#pragma once

// Polyharmonic heat kernel through its radial Bessel-integral form, and the
// Poisson-integral (convolution) solution path built on it.
//
//   E(t, x) = (2 pi)^(-n/2) a1^(-n/(2m)) rho^(-nu)
//             * int_0^inf exp(-r^(2m)) r^(n/2) J_nu(r rho) dr,
//   nu = (n - 2)/2,  rho = |x| a1^(-1/(2m)),  a1 = int_0^t alpha.
//
// The rho^(-nu) factor is the radial Hankel-transform normalization; without
// it the n = 1, 3 kernels are wrong (singular at x = 0 for n = 1).

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "evocoef/core.hpp"
#include "evocoef/parallel.hpp"

namespace evocoef {

namespace detail {

// J_0 by its power series, summed in extended precision.
inline double bessel_j0_series(double z) {
  long double q = -0.25L * static_cast<long double>(z) * z;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-22L * (1.0L + std::fabs(sum))) break;
  }
  return static_cast<double>(sum);
}

// Hankel asymptotic expansion in amplitude/phase form,
// J_0(z) = sqrt(2/(pi z)) (P cos chi - Q sin chi), chi = z - pi/4.
// Terms are added until they stop decreasing (optimal truncation).
inline double bessel_j0_asymptotic(double z) {
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    double f = 2.0 * k - 1.0;
    term *= -(f * f) / (8.0 * k * z);
    if (std::abs(term) >= last) break;
    last = std::abs(term);
    // a_k / z^k enters P (even k) or Q (odd k) with alternating signs.
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
    }
    if (last < 1e-18) break;
  }
  double chi = z - 0.25 * M_PI;
  return std::sqrt(2.0 / (M_PI * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel function of the first kind for the orders -1/2, 0 and 1/2 needed by
/// dimensions 1..3. Other orders are rejected.
inline double bessel_j(double order, double z) {
  if (!(z >= 0.0)) throw InvalidInput("bessel_j requires z >= 0");
  if (order == 0.0) {
    return z <= 12.0 ? detail::bessel_j0_series(z) : detail::bessel_j0_asymptotic(z);
  }
  if (order == 0.5) {
    if (z == 0.0) return 0.0;
    return std::sqrt(2.0 / (M_PI * z)) * std::sin(z);
  }
  if (order == -0.5) {
    if (!(z > 0.0)) throw InvalidInput("J_{-1/2} is singular at z = 0");
    return std::sqrt(2.0 / (M_PI * z)) * std::cos(z);
  }
  throw InvalidInput("unsupported Bessel order (only -1/2, 0, 1/2; dimension must be 1, 2 or 3)");
}

struct KernelQuery {
  double t = 0.0;
  std::vector<double> x;  ///< displacement x - y
  double alpha1 = 0.0;    ///< int_0^t alpha
  int m = 1;
  int n = 1;
};

/// Composite Gauss-Legendre settings for the radial integral.
struct QuadratureSpec {
  double radius = 0.0;             ///< truncation point R
  int panels_per_half_period = 8;  ///< panels per pi/max(rho, 1)
  double tol = 1e-14;

  /// R = (ln(1/tol))^(1/(2m)) + 2.
  static QuadratureSpec for_order(int m, double tol = 1e-14) {
    QuadratureSpec s;
    s.tol = tol;
    s.radius = std::pow(std::log(1.0 / tol), 1.0 / (2.0 * m)) + 2.0;
    return s;
  }

  /// Upper estimate of the dropped tail int_R^inf e^{-r^2m} r^(n-1) dr.
  double tail_estimate(int m, int n) const {
    double R = radius;
    double c = std::max(1.0, std::sqrt(2.0 / M_PI));
    return c * std::exp(-std::pow(R, 2.0 * m)) * std::pow(R, n - 1) / (2.0 * m * std::pow(R, 2.0 * m - 1.0));
  }
};

namespace detail {

inline const std::array<std::pair<double, double>, 10>& gauss_legendre_10() {
  // Nodes on [-1, 1] and weights.
  static const std::array<std::pair<double, double>, 10> gl = {{
      {-0.9739065285171717, 0.0666713443086881},
      {-0.8650633666889845, 0.1494513491505806},
      {-0.6794095682990244, 0.2190863625159820},
      {-0.4333953941292472, 0.2692667193099963},
      {-0.1488743389816312, 0.2955242247147529},
      {0.1488743389816312, 0.2955242247147529},
      {0.4333953941292472, 0.2692667193099963},
      {0.6794095682990244, 0.2190863625159820},
      {0.8650633666889845, 0.1494513491505806},
      {0.9739065285171717, 0.0666713443086881},
  }};
  return gl;
}

// rho^(-nu) J_nu(r rho), with its rho -> 0 limit (r/2)^nu / Gamma(nu + 1).
inline double scaled_bessel(double nu, double r, double rho) {
  if (rho == 0.0) return std::pow(0.5 * r, nu) / std::tgamma(nu + 1.0);
  return std::pow(rho, -nu) * bessel_j(nu, r * rho);
}

// int_0^R exp(-r^2m) r^(n/2) rho^(-nu) J_nu(r rho) dr.
inline double radial_integral(int m, int n, double rho, const QuadratureSpec& spec) {
  const double nu = 0.5 * (n - 2);
  const double half_period = M_PI / std::max(rho, 1.0);
  const double width = half_period / spec.panels_per_half_period;
  const int panels = static_cast<int>(std::ceil(spec.radius / width));
  const double h = spec.radius / panels;
  const auto& gl = gauss_legendre_10();
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double a = p * h;
    double mid = a + 0.5 * h;
    double part = 0.0;
    for (const auto& [node, w] : gl) {
      double r = mid + 0.5 * h * node;
      double r2m = std::pow(r, 2 * m);
      part += w * std::exp(-r2m) * std::pow(r, 0.5 * n) * scaled_bessel(nu, r, rho);
    }
    sum += 0.5 * h * part;
  }
  return sum;
}

}  // namespace detail

/// Fundamental solution of u_t + alpha(t)(-Laplacian)^m u = 0 at (t, x).
/// Depends on x only through |x|, so it is even by construction.
inline double eval_kernel(const KernelQuery& query, const QuadratureSpec& spec) {
  if (query.n < 1 || query.n > 3) throw InvalidInput("kernel dimension must be 1, 2 or 3");
  if (static_cast<int>(query.x.size()) != query.n) throw InvalidInput("kernel displacement has wrong dimension");
  if (query.m < 1) throw InvalidInput("polyharmonic order must be positive");
  if (!(query.t > 0.0)) throw InvalidInput("kernel is undefined at t <= 0");
  if (!(query.alpha1 > 0.0)) throw InvalidInput("kernel requires alpha1 > 0");
  if (spec.panels_per_half_period < 8) throw InvalidInput("quadrature needs at least 8 panels per half-period");
  double tail = spec.tail_estimate(query.m, query.n);
  if (tail > spec.tol)
    throw ToleranceError("kernel quadrature tail estimate " + std::to_string(tail) + " exceeds tolerance " +
                         std::to_string(spec.tol) + " (truncation radius too small)");
  double r2 = 0.0;
  for (double v : query.x) r2 += v * v;
  const double scale = std::pow(query.alpha1, -1.0 / (2.0 * query.m));
  const double rho = std::sqrt(r2) * scale;
  const double integral = detail::radial_integral(query.m, query.n, rho, spec);
  return std::pow(2.0 * M_PI, -0.5 * query.n) * std::pow(scale, query.n) * integral;
}

/// Kernel value at x = 0 in closed form.
inline double kernel_at_origin(int m, int n, double alpha1) {
  double sphere = 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
  return std::pow(2.0 * M_PI, -n) * sphere * std::tgamma(n / (2.0 * m)) / (2.0 * m) *
         std::pow(alpha1, -n / (2.0 * m));
}

/// Trace of the Poisson-integral solution u(t, q) = int E(t, q - y) u0(y) dy,
/// using grid (trapezoid) weights over the support of u0. The t = 0 entry is
/// u0(q). Support must keep `margin` (default L/4) away from the box boundary.
inline Trace poisson_solve(const Field& u0, const ObservationPoint& q, const CoefficientFn& alpha, int m,
                           const TimeGrid& tg, double margin = -1.0,
                           const QuadratureSpec* spec_override = nullptr) {
  if (!(alpha.grid() == tg)) throw InvalidInput("alpha is sampled on a different time grid");
  const SpaceGrid& g = u0.grid();
  const double L = g.half_width();
  const double gap = margin < 0.0 ? 0.25 * L : margin;
  const QuadratureSpec spec = spec_override ? *spec_override : QuadratureSpec::for_order(m);
  CoefficientFn a1 = antiderivative(alpha);
  ObservationPoint qq = ObservationPoint::on(g, q.position());

  // Group support cells by squared index distance to q; the kernel is radial.
  std::map<long, double> weight_by_key;
  const auto& qi = qq.node_index();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u0[i] == 0.0) continue;
    auto idx = g.multi_index(i);
    long key = 0;
    for (int d = 0; d < g.dim(); ++d) {
      double x = g.coordinate(idx[d]);
      if (std::abs(x) > L - gap) throw InvalidInput("datum support violates the box margin");
      long di = idx[d] - qi[d];
      key += di * di;
    }
    weight_by_key[key] += u0[i];
  }
  std::vector<long> keys;
  std::vector<double> weights;
  for (const auto& [k, w] : weight_by_key) {
    keys.push_back(k);
    weights.push_back(w);
  }

  const double h = g.spacing();
  const double cell = g.cell_volume();
  std::vector<double> out(tg.size(), 0.0);
  out[0] = u0[qq.flat_index()];
  std::vector<double> ev(keys.size());
  for (std::size_t k = 1; k < tg.size(); ++k) {
    parallel::for_each_index(keys.size(), [&](std::size_t j) {
      KernelQuery kq;
      kq.t = tg.node(k);
      kq.alpha1 = a1[k];
      kq.m = m;
      kq.n = g.dim();
      kq.x.assign(g.dim(), 0.0);
      kq.x[0] = h * std::sqrt(static_cast<double>(keys[j]));
      ev[j] = eval_kernel(kq, spec);
    });
    double s = 0.0;
    for (std::size_t j = 0; j < keys.size(); ++j) s += ev[j] * weights[j];
    out[k] = cell * s;
  }
  return Trace(tg, std::move(out));
}

}  // namespace evocoef
