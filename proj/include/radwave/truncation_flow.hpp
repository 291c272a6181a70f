#pragma once

// Fourier-truncation decomposition u = v + w. The data are rescaled by the
// scaling symmetry until the part above frequency 1 is epsilon-small in the
// critical norm; w carries that part and v the rest. The pair evolves as
//
//   w_tt - Delta w + |w|^{p-1} w = 0,
//   v_tt - Delta v + |v + w|^{p-1}(v + w) - |w|^{p-1} w = 0.

#include <functional>
#include <span>
#include <string>

#include "radwave/radial_core.hpp"
#include "radwave/wave_solver.hpp"

namespace radwave {

struct SplitNorms {
  double w0_hsc = 0.0;    // ||w_0||_{H^{s_c}}
  double w1_hscm1 = 0.0;  // ||w_1||_{H^{s_c - 1}}
  double v0_h1 = 0.0;     // ||v_0||_{H^1}
  double v1_l2 = 0.0;     // ||v_1||_{L^2}
};

struct SplitState {
  double time = 0.0;
  WaveState v;
  WaveState w;
  double lambda = 1.0;
  double epsilon = 0.0;
  /// Cut level j of P_{<=j}; after rescaling the cut sits at 2^0 = 1.
  int n_cut = 0;

  WaveState assembled() const;
};

/// Smallest rescaling lambda = 2^m, m <= 0, that makes
/// ||P_{>1} u_0||_{H^{s_c}} + ||P_{>1} u_1||_{H^{s_c-1}} < epsilon.
SplitState split_initial(const WaveState& state, double p, double epsilon);

/// Measured norms of a split (the certificate).
SplitNorms measure(const SplitState& ss, double p);

/// JSON text {lambda, epsilon, norms: {w0_hsc, w1_hscm1, v0_h1, v1_l2}}.
std::string certificate_json(const SplitState& ss, double p);

SplitState step_coupled(const SplitState& ss, const SolverConfig& cfg);

using SplitObserver = std::function<void(const SplitState&)>;

/// Advances the coupled pair by cfg.t_end; observers follow the evolve contract.
SplitState evolve_split(const SplitState& ss, const SolverConfig& cfg,
                        std::span<const SplitObserver> observers = {});

/// |v+w|^{p-1}(v+w) - |v|^{p-1}v - |w|^{p-1}w at a point.
double cross_term(double v, double w, double p);

struct CrossTerms {
  RadialField leading;      // p |v|^{p-1} w, stored as r * (.)
  double remainder = 0.0;   // int |cross - leading| dx
};

CrossTerms taylor_cross_terms(const RadialField& v, const RadialField& w, double p);

}  // namespace radwave
