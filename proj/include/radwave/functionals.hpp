#pragma once

// Scalar functionals of radial states. Conventions:
//   * volume integrals over R^3 carry the 4 pi r^2 weight,
//     int g dx = 4 pi h sum_k r_k^2 g(r_k);
//   * integrals written on the radial line (Morawetz potential and
//     its derivative) carry no 4 pi, e.g. int |u|^{p+1} r dr = h sum_k r_k |u_k|^{p+1};
//   * the gradient term uses the sine series, int |grad u|^2 dx = 4 pi int phi_r^2 dr;
//   * time integrals are trapezoid sums over the recorded samples.

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "radwave/radial_core.hpp"
#include "radwave/truncation_flow.hpp"
#include "radwave/wave_solver.hpp"

namespace radwave {

struct EnergyParts {
  double kinetic = 0.0;
  double gradient = 0.0;
  double potential = 0.0;
  double total() const noexcept { return kinetic + gradient + potential; }
};

/// E = 1/2 |u_t|^2 + 1/2 |grad u|^2 + 1/(p+1) |u|^{p+1}_{p+1}.
EnergyParts energy_parts(const WaveState& state, double p, bool nonlinear = true);
double energy(const WaveState& state, double p, bool nonlinear = true);

/// M = int u_t u_r r^2 dr + int u_t u r dr = int phi_t phi_r dr.
double morawetz_potential(const WaveState& state);

/// int |u|^{p+1} r dr.
double morawetz_density(const WaveState& state, double p);

/// dM/dt = -(1/2) u(t,0)^2 - (p-1)/(p+1) int |u|^{p+1} r dr; this returns the
/// negated right-hand side.
double virial_rate(const WaveState& state, double p, bool nonlinear = true);

/// Cumulative trapezoid integral of samples y(t).
std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y);

/// residual(T) = M(T) - M(0) + int_0^T rate dt from recorded series.
std::vector<double> virial_residual(std::span<const double> t, std::span<const double> m,
                                    std::span<const double> rate);
/// Same, from a trajectory. Throws InvalidArgument if the recording spacing
/// exceeds the grid spacing h.
std::vector<double> virial_residual(const Trajectory& traj, double p);

/// E(v) + c M(v) - int |v|^{p-1} v w dx; c >= 0.
double modified_energy(const SplitState& ss, double p, double c);

/// Cumulative int_0^T int |u|^{p+1} / |x| dx dt.
std::vector<double> morawetz_budget(const Trajectory& traj, double p);

/// Space-time region for the scattering norm; exterior keeps r >= t - offset.
struct Region {
  double offset = std::numeric_limits<double>::infinity();
  static Region all() { return {}; }
  static Region exterior_cone(double a) { return {a}; }
};

/// int |u|^{2(p-1)} dx restricted to the region at the state's time.
double spacetime_density(const WaveState& state, double p, Region region);
/// Cumulative int_0^T int_region |u|^{2(p-1)} dx dt.
std::vector<double> spacetime_norm(const Trajectory& traj, double p, Region region);

/// int |P v|^{p+1} / |x| dx, the weighted quantity in the projection bound.
double weighted_lp_integral(const RadialField& f, double p);

// ---------------------------------------------------------------- hyperbolic

/// Energy of u~ on the s-grid with the s^2 weight, without 4 pi.
double hyperbolic_energy(const HyperbolicState& hs, double p);
/// int psi_tau psi_s ds, equal to int u~_s u~_tau s^2 ds + int u~_tau u~ s ds.
double hyperbolic_morawetz_potential(const HyperbolicState& hs);
/// e^{-(p-3) tau} int (s/sinh s)^{p-1} coth(s) |u~|^{p+1} s^2 ds.
double hyperbolic_morawetz_density(const HyperbolicState& hs, double p);
/// (1/2) u~(tau,0)^2 + (p-1)/(p+1) * hyperbolic_morawetz_density.
double hyperbolic_virial_rate(const HyperbolicState& hs, double p);

// ---------------------------------------------------------------- series

/// Per-record diagnostics of a flat run. In split runs E, M and script_E refer
/// to v; u0_sq, the space-time accumulators and the virial residual refer to
/// u = v + w. Columns after `virial_residual` are kept in memory only.
struct DiagnosticsSeries {
  std::vector<double> times, E, M, script_E, u_origin_sq, morawetz_cum, st_norm_cum,
      exterior_st_norm_cum, w_hsc, virial_residual;
  std::vector<double> energy_u;  // E(u), equal to E in full runs

  std::size_t size() const noexcept { return times.size(); }
};

struct HyperbolicSeries {
  std::vector<double> taus, E_hyp, M_hyp, hyp_morawetz_cum, hyp_virial_residual;
  std::vector<double> rate;  // hyperbolic_virial_rate per record, in memory only
  double grid_h = 0.0;       // s-grid spacing of the recorded run

  std::size_t size() const noexcept { return taus.size(); }
};

/// Incrementally builds a DiagnosticsSeries from observed states.
class DiagnosticsRecorder {
 public:
  struct Options {
    double p = 4.0;
    bool nonlinear = true;
    double c_morawetz = 0.01;
    double exterior_offset = 0.5;
  };
  explicit DiagnosticsRecorder(Options opt) : opt_(opt) {}

  void record(const WaveState& u);
  void record(const SplitState& ss);
  const DiagnosticsSeries& series() const noexcept { return series_; }

 private:
  void push(double t, const WaveState& u, double e_v, double m_v, double script_e, double w_hsc);

  Options opt_;
  DiagnosticsSeries series_;
  std::vector<double> m_u_, rate_u_, mor_density_, st_density_, ext_density_;
  double cum_rate_ = 0.0;
};

class HyperbolicRecorder {
 public:
  explicit HyperbolicRecorder(double p) : p_(p) {}
  void record(const HyperbolicState& hs);
  const HyperbolicSeries& series() const noexcept { return series_; }

 private:
  double p_;
  HyperbolicSeries series_;
  std::vector<double> density_;
  double cum_rate_ = 0.0;
};

/// residual(tau) = M(tau) - M(tau_0) + int rate dtau, from a recorded series.
/// Throws InvalidArgument if the tau spacing exceeds the s-grid spacing.
std::vector<double> hyperbolic_virial_residual(const HyperbolicSeries& hs);

void write_csv(std::ostream& os, const DiagnosticsSeries& s);
void write_csv(std::ostream& os, const HyperbolicSeries& s);
DiagnosticsSeries read_diagnostics_csv(std::istream& is);
HyperbolicSeries read_hyperbolic_csv(std::istream& is);

}  // namespace radwave
