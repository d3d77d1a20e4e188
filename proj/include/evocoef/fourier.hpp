#pragma once

// Thin RAII layer over FFTW for complex n-dimensional transforms on a SpaceGrid,
// plus the polyharmonic multiplier (-Laplacian)^m.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "evocoef/core.hpp"

namespace evocoef::fourier {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

// The FFTW planner is not re-entrant; execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline void transform(const SpaceGrid& grid, Spectrum& in, Spectrum& out, int sign) {
  int dims[3] = {grid.points_per_dim(), grid.points_per_dim(), grid.points_per_dim()};
  PlanPtr plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft(grid.dim(), dims, reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE));
  }
  if (!plan) throw std::runtime_error("FFTW plan creation failed");
  fftw_execute(plan.get());
}

}  // namespace detail

/// Unnormalized forward transform: F[k] = sum_j f[j] exp(-2 pi i j.k / N).
inline Spectrum forward(const Field& f) {
  Spectrum in(f.size()), out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) in[i] = f[i];
  detail::transform(f.grid(), in, out, FFTW_FORWARD);
  return out;
}

/// Inverse transform scaled by 1/N^n; the imaginary part is dropped.
inline Field inverse_real(const SpaceGrid& grid, Spectrum spec) {
  Spectrum out(spec.size());
  detail::transform(grid, spec, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(grid.size());
  std::vector<double> v(out.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = out[i].real() * scale;
  return Field(grid, std::move(v));
}

/// Multiplies every Fourier coefficient by mult(flat spectral index).
template <class Mult>
Field apply_multiplier(const Field& f, Mult&& mult) {
  Spectrum s = forward(f);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= mult(i);
  return inverse_real(f.grid(), std::move(s));
}

}  // namespace evocoef::fourier

namespace evocoef {

/// (-Laplacian)^m f as the Fourier multiplier |xi|^(2m). The caller applies
/// any sign convention.
inline Field apply_polyharmonic(const Field& f, int m) {
  if (m < 1) throw InvalidInput("polyharmonic order must be positive");
  const SpaceGrid& g = f.grid();
  return fourier::apply_multiplier(f, [&](std::size_t i) {
    double k2 = g.frequency_norm2(i);
    double p = 1.0;
    for (int j = 0; j < m; ++j) p *= k2;
    return p;
  });
}

}  // namespace evocoef
