#pragma once

// Leapfrog (velocity Stormer-Verlet) integration of the radial defocusing
// wave equation u_tt - Delta u + |u|^{p-1} u = 0, written for phi = r u as
//
//   phi_tt = phi_rr - r |phi/r|^{p-1} (phi/r),
//
// with phi_rr diagonalized exactly by the sine transform. The same stepper
// drives the hyperbolic-coordinate equation for psi = s u~,
//
//   psi_tt = psi_ss - e^{-(p-3) tau} (s / sinh s)^{p-1} s |psi/s|^{p-1} (psi/s).

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "radwave/radial_core.hpp"

namespace radwave {

struct SolverConfig {
  double p = 4.0;
  double dt = 0.0;
  double t_end = 0.0;
  double cfl = 0.5;
  std::size_t record_every = 1;
  /// false switches the nonlinearity off (free wave).
  bool nonlinear = true;
  /// false keeps only the initial and final states in the trajectory.
  bool keep_states = true;
};

/// Throws InvalidArgument on a bad p, dt, cfl or CFL violation on `grid`.
/// p = 3 is accepted as the endpoint case of the hyperbolic monotonicity law.
void validate(const SolverConfig& cfg, const RadialGrid& grid);

/// Relative amplitude below which data count as outside their support when
/// checking that the light cone stays inside [0, r_max).
inline constexpr double kLightConeTolerance = 1e-10;

/// Support radius of (u, u_t) at kLightConeTolerance.
double data_support(const WaveState& s);

/// Number of steps used to reach t_end and the (possibly shortened) step that
/// lands exactly on it.
struct StepPlan {
  std::size_t steps;
  double dt;
};
StepPlan plan_steps(double t_end, double dt);

/// Nonlinear force r |u|^{p-1} u at every grid point, optionally multiplied by
/// a pointwise weight.
std::vector<double> nonlinear_force(std::span<const double> phi, const RadialGrid& grid, double p,
                                    std::span<const double> weight = {});

/// phi_rr from the sine series.
std::vector<double> spectral_laplacian(const RadialField& f);

WaveState step_full(const WaveState& state, const SolverConfig& cfg);

/// Recorded states of one run. The support radius of the initial data (when
/// known) lets consumers treat points outside the forward light cone as zero.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(SolverConfig cfg, std::optional<double> support_radius)
      : cfg_(cfg), support_(support_radius) {}

  void append(WaveState s) { states_.push_back(std::move(s)); }

  const std::vector<WaveState>& states() const noexcept { return states_; }
  const WaveState& front() const { return states_.front(); }
  const WaveState& back() const { return states_.back(); }
  std::size_t size() const noexcept { return states_.size(); }
  std::vector<double> times() const;
  const SolverConfig& config() const noexcept { return cfg_; }
  std::optional<double> support_radius() const noexcept { return support_; }
  double start_time() const { return states_.front().time; }

 private:
  SolverConfig cfg_{};
  std::optional<double> support_;
  std::vector<WaveState> states_;
};

using Observer = std::function<void(const WaveState&)>;

/// Advances to state.time + cfg.t_end. Observers see the initial state, every
/// record_every-th state and the final state, in that order.
Trajectory evolve(const WaveState& state, const SolverConfig& cfg,
                  std::span<const Observer> observers = {});

/// Writes one `r,phi,phit` CSV per observed state plus `index.json` holding the
/// recorded times and the solver configuration.
class CheckpointWriter {
 public:
  CheckpointWriter(std::filesystem::path dir, SolverConfig cfg);
  void operator()(const WaveState& s);
  void finish() const;

 private:
  std::filesystem::path dir_;
  SolverConfig cfg_;
  std::vector<double> times_;
};

/// d'Alembert solution with u_t(0) = 0: phi(t, r) = [Psi(r + t) + Psi(r - t)] / 2
/// with Psi(x) = x u0(|x|).
RadialField free_wave_exact(const Profile& u0, double t, const RadialGrid& grid);

// ---------------------------------------------------------------- hyperbolic

/// Fields on an s-grid, stored as psi = s u~ and psi_tau = s u~_tau.
struct HyperbolicState {
  double tau = 0.0;
  RadialField u_tilde;
  RadialField ut_tilde;

  const RadialGrid& grid() const noexcept { return u_tilde.grid(); }
};

/// log(s / sinh s), with a series branch near 0 and an asymptotic branch for
/// large s.
double log_s_over_sinh(double s);
/// (s / sinh s)^{p-1} at every point of the s-grid.
std::vector<double> hyperbolic_spatial_weight(const RadialGrid& s_grid, double p);

/// One leapfrog step in tau; the factor e^{-(p-3) tau} is frozen at the half step.
HyperbolicState step_hyperbolic(const HyperbolicState& hs, const SolverConfig& cfg);

using HyperbolicObserver = std::function<void(const HyperbolicState&)>;

/// Advances hs by cfg.t_end in tau, calling observers like evolve does.
/// Returns the final state.
HyperbolicState evolve_hyperbolic(const HyperbolicState& hs, const SolverConfig& cfg,
                                  std::span<const HyperbolicObserver> observers = {});

/// u~(tau, s) = (e^tau sinh s / s) u(e^tau cosh s, e^tau sinh s), sampled by
/// bilinear interpolation in the recorded (t, r) data. Points beyond the
/// forward light cone of the recorded support are zero.
HyperbolicState hyperbolic_transform(const Trajectory& traj, double tau, const RadialGrid& s_grid);

}  // namespace radwave
