#pragma once

// Forward Cauchy solvers on the periodic box, one scalar problem per Fourier
// mode:
//   first order   u_t = coef(t) p(xi) u        -> exp(p(xi) * int_0^t coef)
//   second order  u_tt = coef(t) p(xi) u       -> classical RK4 on (u, u_t)
// Heat is the first-order case with p = -|xi|^(2m); the wave equation is the
// second-order case with p = -|xi|^2.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "evocoef/core.hpp"
#include "evocoef/fourier.hpp"
#include "evocoef/parallel.hpp"

namespace evocoef {

/// Fourier symbol p(xi) of a constant-coefficient spatial operator L_x.
class MultiplierSymbol {
 public:
  enum class Stability { dissipative, oscillatory };

  using Rule = std::function<double(std::span<const double> xi)>;

  MultiplierSymbol(std::string id, Rule rule, Stability stability)
      : id_(std::move(id)), rule_(std::move(rule)), stability_(stability) {}

  /// -|xi|^(2m), the symbol of -(-Laplacian)^m.
  static MultiplierSymbol neg_polyharmonic(int m) {
    if (m < 1) throw InvalidInput("polyharmonic order must be positive");
    return MultiplierSymbol(
        "neg_polyharmonic_" + std::to_string(m),
        [m](std::span<const double> xi) {
          double k2 = norm2(xi);
          double p = 1.0;
          for (int j = 0; j < m; ++j) p *= k2;
          return -p;
        },
        Stability::dissipative);
  }

  /// Laplacian, -|xi|^2; used as the oscillatory symbol of the wave operator.
  static MultiplierSymbol laplacian() {
    return MultiplierSymbol("laplacian", [](std::span<const double> xi) { return -norm2(xi); },
                            Stability::oscillatory);
  }

  /// Laplacian minus bilaplacian, -|xi|^2 - |xi|^4.
  static MultiplierSymbol laplacian_minus_bilaplacian() {
    return MultiplierSymbol(
        "laplacian_minus_bilaplacian",
        [](std::span<const double> xi) {
          double k2 = norm2(xi);
          return -k2 - k2 * k2;
        },
        Stability::dissipative);
  }

  static MultiplierSymbol zero() {
    return MultiplierSymbol("zero", [](std::span<const double>) { return 0.0; }, Stability::dissipative);
  }

  /// Lookup by id as used in configuration files.
  static MultiplierSymbol by_id(const std::string& id) {
    if (id == "laplacian") return laplacian();
    if (id == "laplacian_minus_bilaplacian") return laplacian_minus_bilaplacian();
    if (id == "zero") return zero();
    const std::string prefix = "neg_polyharmonic_";
    if (id.rfind(prefix, 0) == 0) {
      try {
        return neg_polyharmonic(std::stoi(id.substr(prefix.size())));
      } catch (const std::logic_error&) {
      }
    }
    throw InvalidInput("unknown multiplier symbol '" + id + "'");
  }

  double operator()(std::span<const double> xi) const { return rule_(xi); }

  /// p evaluated at the frequency of a flat spectral index.
  double at_mode(const SpaceGrid& g, std::size_t flat) const {
    double xi[3] = {0.0, 0.0, 0.0};
    for (int d = g.dim() - 1; d >= 0; --d) {
      xi[d] = g.frequency(static_cast<int>(flat % g.points_per_dim()));
      flat /= g.points_per_dim();
    }
    return rule_(std::span<const double>(xi, g.dim()));
  }

  const std::string& id() const noexcept { return id_; }
  Stability stability() const noexcept { return stability_; }

 private:
  static double norm2(std::span<const double> xi) {
    double s = 0.0;
    for (double x : xi) s += x * x;
    return s;
  }

  std::string id_;
  Rule rule_;
  Stability stability_;
};

/// L_x[f] for a multiplier symbol.
inline Field apply_symbol(const Field& f, const MultiplierSymbol& sym) {
  const SpaceGrid& g = f.grid();
  return fourier::apply_multiplier(f, [&](std::size_t i) { return sym.at_mode(g, i); });
}

enum class EquationKind { heat, wave, general_first, general_second };

struct EquationTag {
  EquationKind kind = EquationKind::heat;
  int m = 0;
  std::string symbol;
};

/// Options shared by the second-order (RK4) solvers.
struct SecondOrderOptions {
  double c_min = 1e-6;               ///< lower bound required of the coefficient
  double stability_threshold = 0.5;  ///< bound on dt * sqrt(max|p| * max coef)

  bool operator==(const SecondOrderOptions&) const = default;
};

/// Forward solution stored spectrally. Modes sharing a symbol value share a
/// time propagator:
///   u_hat(t_k, xi) = a_c[k] * pos_hat(xi) + b_c[k] * vel_hat(xi)
/// with c the class of xi. First-order problems have no velocity part.
class SpacetimeSolution {
 public:
  const SpaceGrid& space_grid() const noexcept { return initial_.grid(); }
  const TimeGrid& time_grid() const noexcept { return time_; }
  const EquationTag& equation() const noexcept { return tag_; }
  bool second_order() const noexcept { return !vel_.empty(); }
  std::size_t class_count() const noexcept { return n_classes_; }

  /// Unnormalized Fourier coefficient of slice k at a flat spectral index.
  std::complex<double> mode(std::size_t k, std::size_t flat) const {
    std::size_t c = class_of_[flat];
    std::complex<double> v = a_[c * stride() + k] * pos_[flat];
    if (second_order()) v += b_[c * stride() + k] * vel_[flat];
    return v;
  }

  /// Time derivative of mode(k, flat); second-order problems only.
  std::complex<double> mode_velocity(std::size_t k, std::size_t flat) const {
    if (!second_order()) throw InvalidInput("mode velocity is only stored for second-order problems");
    std::size_t c = class_of_[flat];
    return ad_[c * stride() + k] * pos_[flat] + bd_[c * stride() + k] * vel_[flat];
  }

  /// Slice k; slice 0 is the stored initial position.
  Field slice(std::size_t k) const {
    check_step(k);
    if (k == 0) return initial_;
    fourier::Spectrum s(pos_.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = mode(k, i);
    return fourier::inverse_real(space_grid(), std::move(s));
  }

  /// Solution value at node `flat` for every time node.
  std::vector<double> time_series(std::size_t flat) const {
    const SpaceGrid& g = space_grid();
    const int n = g.points_per_dim();
    auto idx = g.multi_index(flat);
    // Per-class phase sums: P_c = sum_{xi in c} pos_hat(xi) e^{i xi.x} / N^dim.
    std::vector<std::complex<double>> pc(n_classes_), vc(n_classes_);
    std::vector<std::complex<double>> table(static_cast<std::size_t>(n) * g.dim());
    for (int d = 0; d < g.dim(); ++d)
      for (int j = 0; j < n; ++j) {
        double ang = 2.0 * M_PI * double((static_cast<long>(idx[d]) * j) % n) / n;
        table[d * n + j] = {std::cos(ang), std::sin(ang)};
      }
    const double scale = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < pos_.size(); ++i) {
      std::size_t rem = i;
      std::complex<double> ph = 1.0;
      for (int d = g.dim() - 1; d >= 0; --d) {
        ph *= table[d * n + static_cast<int>(rem % n)];
        rem /= n;
      }
      pc[class_of_[i]] += pos_[i] * ph * scale;
      if (second_order()) vc[class_of_[i]] += vel_[i] * ph * scale;
    }
    std::vector<double> out(time_.size());
    out[0] = initial_[flat];
    for (std::size_t k = 1; k < out.size(); ++k) {
      std::complex<double> s = 0.0;
      for (std::size_t c = 0; c < n_classes_; ++c) {
        s += a_[c * stride() + k] * pc[c];
        if (second_order()) s += b_[c * stride() + k] * vc[c];
      }
      out[k] = s.real();
    }
    return out;
  }

 private:
  friend class SolutionBuilder;

  SpacetimeSolution(Field initial, TimeGrid time, EquationTag tag)
      : initial_(std::move(initial)), time_(time), tag_(std::move(tag)) {}

  std::size_t stride() const noexcept { return time_.size(); }
  void check_step(std::size_t k) const {
    if (k >= time_.size()) throw InvalidInput("time index out of range");
  }

  Field initial_;
  TimeGrid time_;
  EquationTag tag_;
  fourier::Spectrum pos_, vel_;
  std::vector<std::uint32_t> class_of_;
  std::size_t n_classes_ = 0;
  std::vector<double> a_, b_, ad_, bd_;
};

/// Assembles SpacetimeSolution internals; not part of the public surface.
class SolutionBuilder {
 public:
  struct Classes {
    std::vector<std::uint32_t> class_of;
    std::vector<double> symbol_value;
  };

  static Classes classify(const SpaceGrid& g, const MultiplierSymbol& sym) {
    Classes out;
    out.class_of.resize(g.size());
    std::unordered_map<double, std::uint32_t> seen;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double p = sym.at_mode(g, i);
      if (!std::isfinite(p)) throw InvalidInput("symbol " + sym.id() + " is not finite on the grid");
      auto [it, inserted] = seen.try_emplace(p, static_cast<std::uint32_t>(out.symbol_value.size()));
      if (inserted) out.symbol_value.push_back(p);
      out.class_of[i] = it->second;
    }
    return out;
  }

  static SpacetimeSolution first_order(const Field& u0, const CoefficientFn& integral, const MultiplierSymbol& sym,
                                       EquationTag tag) {
    const TimeGrid& tg = integral.grid();
    SpacetimeSolution sol(u0, tg, std::move(tag));
    Classes cls = classify(u0.grid(), sym);
    const std::size_t nc = cls.symbol_value.size();
    const std::size_t nt = tg.size();
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t k = 0; k < nt; ++k)
        if (cls.symbol_value[c] * integral[k] > 50.0)
          throw InvalidInput("p(xi) * int_0^t coef exceeds 50: configuration is not dissipative");
    sol.a_.assign(nc * nt, 0.0);
    parallel::for_each_index(nc, [&](std::size_t c) {
      double p = cls.symbol_value[c];
      for (std::size_t k = 0; k < nt; ++k) sol.a_[c * nt + k] = std::exp(p * integral[k]);
    });
    sol.pos_ = fourier::forward(u0);
    sol.class_of_ = std::move(cls.class_of);
    sol.n_classes_ = nc;
    return sol;
  }

  static SpacetimeSolution second_order(const Field& u0, const Field& u1, const CoefficientFn& coef,
                                        const MultiplierSymbol& sym, const TimeGrid& tg,
                                        const SecondOrderOptions& opt, EquationTag tag) {
    if (!(u0.grid() == u1.grid())) throw InvalidInput("initial data live on different grids");
    if (!(coef.grid() == tg)) throw InvalidInput("coefficient is sampled on a different time grid");
    const std::size_t nt = tg.size();
    const double dt = tg.dt();
    std::vector<double> c_node(nt), c_mid(nt - 1);
    for (std::size_t k = 0; k < nt; ++k) c_node[k] = coef.at(tg.node(k));
    for (std::size_t k = 0; k + 1 < nt; ++k) c_mid[k] = coef.at(tg.node(k) + 0.5 * dt);
    double cmax = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      if (!(coef[k] >= opt.c_min))
        throw InvalidInput("coefficient drops below C_min = " + std::to_string(opt.c_min) + " at node " +
                           std::to_string(k));
      cmax = std::max(cmax, c_node[k]);
    }
    for (double v : c_mid) cmax = std::max(cmax, v);

    Classes cls = classify(u0.grid(), sym);
    double pmax = 0.0;
    for (double p : cls.symbol_value) {
      if (p > 0.0) throw InvalidInput("second-order solver needs p(xi) <= 0 on the grid (symbol " + sym.id() + ")");
      pmax = std::max(pmax, -p);
    }
    double courant = dt * std::sqrt(pmax * cmax);
    if (courant > opt.stability_threshold)
      throw InvalidInput("time step too large: dt*sqrt(max|p|*max coef) = " + std::to_string(courant) +
                         " exceeds " + std::to_string(opt.stability_threshold));

    SpacetimeSolution sol(u0, tg, std::move(tag));
    const std::size_t nc = cls.symbol_value.size();
    sol.a_.assign(nc * nt, 0.0);
    sol.b_.assign(nc * nt, 0.0);
    sol.ad_.assign(nc * nt, 0.0);
    sol.bd_.assign(nc * nt, 0.0);
    parallel::for_each_index(nc, [&](std::size_t c) {
      const double p = cls.symbol_value[c];
      // Two fundamental solutions, (y, v)(0) = (1, 0) and (0, 1).
      double y[2] = {1.0, 0.0};
      double v[2] = {0.0, 1.0};
      double* A = &sol.a_[c * nt];
      double* B = &sol.b_[c * nt];
      double* Ad = &sol.ad_[c * nt];
      double* Bd = &sol.bd_[c * nt];
      A[0] = 1.0;
      Ad[0] = 0.0;
      B[0] = 0.0;
      Bd[0] = 1.0;
      for (std::size_t k = 0; k + 1 < nt; ++k) {
        const double r0 = c_node[k] * p;
        const double rm = c_mid[k] * p;
        const double r1 = c_node[k + 1] * p;
        for (int j = 0; j < 2; ++j) {
          double k1y = v[j], k1v = r0 * y[j];
          double k2y = v[j] + 0.5 * dt * k1v, k2v = rm * (y[j] + 0.5 * dt * k1y);
          double k3y = v[j] + 0.5 * dt * k2v, k3v = rm * (y[j] + 0.5 * dt * k2y);
          double k4y = v[j] + dt * k3v, k4v = r1 * (y[j] + dt * k3y);
          y[j] += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
          v[j] += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        A[k + 1] = y[0];
        Ad[k + 1] = v[0];
        B[k + 1] = y[1];
        Bd[k + 1] = v[1];
      }
    });
    sol.pos_ = fourier::forward(u0);
    sol.vel_ = fourier::forward(u1);
    sol.class_of_ = std::move(cls.class_of);
    sol.n_classes_ = nc;
    return sol;
  }
};

/// Polyharmonic heat equation u_t + alpha(t) (-Laplacian)^m u = 0.
/// Exact in time: u_hat(t) = exp(-|xi|^(2m) alpha_1(t)) u0_hat.
inline SpacetimeSolution solve_heat(const Field& u0, const CoefficientFn& alpha, int m, const TimeGrid& tg) {
  if (!(alpha.grid() == tg)) throw InvalidInput("alpha is sampled on a different time grid");
  CoefficientFn alpha1 = antiderivative(alpha);
  return SolutionBuilder::first_order(u0, alpha1, MultiplierSymbol::neg_polyharmonic(m),
                                      {EquationKind::heat, m, "neg_polyharmonic_" + std::to_string(m)});
}

/// u_t = psi(t) L_x[u] for a constant-coefficient symbol.
inline SpacetimeSolution solve_general_first(const Field& u0, const CoefficientFn& psi, const MultiplierSymbol& sym,
                                             const TimeGrid& tg) {
  if (!(psi.grid() == tg)) throw InvalidInput("psi is sampled on a different time grid");
  CoefficientFn psi1 = antiderivative(psi);
  return SolutionBuilder::first_order(u0, psi1, sym, {EquationKind::general_first, 0, sym.id()});
}

/// Variant taking the running integral directly (lets callers reuse alpha_1
/// samples across solvers).
inline SpacetimeSolution solve_general_first_integrated(const Field& u0, const CoefficientFn& psi_integral,
                                                        const MultiplierSymbol& sym) {
  return SolutionBuilder::first_order(u0, psi_integral, sym, {EquationKind::general_first, 0, sym.id()});
}

/// Strictly hyperbolic u_tt = phi(t) Laplacian u, RK4 per mode.
inline SpacetimeSolution solve_wave(const Field& u0, const Field& u1, const CoefficientFn& phi, const TimeGrid& tg,
                                    const SecondOrderOptions& opt = {}) {
  return SolutionBuilder::second_order(u0, u1, phi, MultiplierSymbol::laplacian(), tg, opt,
                                       {EquationKind::wave, 0, "laplacian"});
}

/// u_tt = lambda(t) L_x[u] with u(0) = 0, u_t(0) = u1.
inline SpacetimeSolution solve_general_second(const Field& u1, const CoefficientFn& lam, const MultiplierSymbol& sym,
                                              const TimeGrid& tg, const SecondOrderOptions& opt = {}) {
  return SolutionBuilder::second_order(Field(u1.grid()), u1, lam, sym, tg, opt,
                                       {EquationKind::general_second, 0, sym.id()});
}

/// Time series of the solution at q.
inline Trace trace_at(const SpacetimeSolution& sol, const ObservationPoint& q, TraceLabel label = TraceLabel::derived) {
  const SpaceGrid& g = sol.space_grid();
  if (static_cast<int>(q.node_index().size()) != g.dim()) throw InvalidInput("observation point has wrong dimension");
  // Re-validate against this grid: q must be one of its nodes.
  ObservationPoint checked = ObservationPoint::on(g, q.position());
  return Trace(sol.time_grid(), sol.time_series(checked.flat_index()), label);
}

}  // namespace evocoef
