#pragma once

// Fourier side of radial fields. For radial u on R^3 the Fourier transform is
// a sine transform of phi = r u, so every radial multiplier m(|xi|) acts on
// the sine coefficients of phi directly:
//
//   phi(r_k) = sum_m c_m sin(rho_m r_k),  rho_m = m pi / r_max,  m = 1..n.

#include <functional>
#include <span>
#include <vector>

#include "radwave/radial_core.hpp"

namespace radwave {

struct SpectralField {
  RadialGrid grid;
  std::vector<double> coeff;

  /// rho_m for storage index i (m = i + 1).
  double frequency(std::size_t i) const noexcept;
};

SpectralField dst(const RadialField& f);
RadialField idst(const SpectralField& s);

/// A radial Fourier multiplier rho -> m(rho), rho > 0.
using Multiplier = std::function<double(double)>;

SpectralField apply(const Multiplier& m, SpectralField s);
RadialField apply(const Multiplier& m, const RadialField& f);

/// Homogeneous Sobolev norm ||u||_{H^s dot}, -1 <= s <= 2. For s < 0 the value
/// depends on r_max through the lowest frequency pi / r_max.
double sobolev_norm(const RadialField& f, double s);

/// s_c = 3/2 - 2/(p - 1).
double critical_exponent(double p);

/// Scaling symmetry u -> lambda^{2/(p-1)} u(lambda x),
/// u_t -> lambda^{2/(p-1)+1} u_t(lambda x), time t -> t / lambda.
/// The result lives on the input grid; samples come from four-point cubic
/// interpolation of phi at lambda r_k, so compactly supported data stay
/// compactly supported.
WaveState rescale(const WaveState& state, double lambda, double p);

enum class LpKind { Leq, Band, Geq };

/// Sharp Littlewood-Paley cutoffs at rho = 2^j: Leq keeps rho <= 2^j, Geq
/// keeps rho > 2^j, Band keeps 2^{j-1} < rho <= 2^j.
RadialField lp_project(const RadialField& f, int j, LpKind kind);

/// Bump kernel psi(x) = c (1 - 4|x|^2)^3 on |x| <= 1/2 with unit mass.
double kernel_value(double r);
/// Three-dimensional Fourier transform of psi at |xi| = k.
double kernel_hat(double k);
/// G(t) = int_0^t tau psi(tau) dtau, the primitive used by the radial
/// convolution kernel r (g * f)(r) = 2 pi int phi(s) [G(r+s) - G(|r-s|)] ds.
double kernel_primitive(double t);

/// psi_{2^j} * f with psi_lambda(x) = lambda^3 psi(lambda x); j may be negative.
RadialField smooth_lowpass(const RadialField& f, int j);
/// P~_0 f = psi * f, P~_j f = psi_{2^j} * f - psi_{2^{j-1}} * f for j >= 1.
RadialField smooth_project(const RadialField& f, int j);

/// phi_r at r_k for k = 0..n+1 (endpoints included), from the sine series.
std::vector<double> radial_derivative(const RadialField& f);

/// Four-point Lagrange interpolation of phi on its odd extension through r = 0
/// (zero beyond r_max).
std::vector<double> interpolate_cubic(const RadialField& f, std::span<const double> radii);

/// Evaluates the sine series of f at arbitrary radii (zero outside [0, r_max]).
std::vector<double> evaluate_series(const RadialField& f, std::span<const double> radii);

}  // namespace radwave
