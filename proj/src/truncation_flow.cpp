#include "radwave/truncation_flow.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "radwave/errors.hpp"
#include "radwave/spectral.hpp"

namespace radwave {
namespace {

double high_part_size(const WaveState& s, double sc) {
  const RadialField w0 = lp_project(s.u, 0, LpKind::Geq);
  const RadialField w1 = lp_project(s.ut, 0, LpKind::Geq);
  return sobolev_norm(w0, sc) + sobolev_norm(w1, sc - 1.0);
}

SplitState split_at(const WaveState& rescaled, double lambda, double epsilon) {
  RadialField v0 = lp_project(rescaled.u, 0, LpKind::Leq);
  RadialField v1 = lp_project(rescaled.ut, 0, LpKind::Leq);
  // w is the physical-space complement, so v + w reproduces the data to one rounding.
  RadialField w0 = rescaled.u - v0;
  RadialField w1 = rescaled.ut - v1;
  const double t = rescaled.time;
  return SplitState{t,
                    WaveState(t, std::move(v0), std::move(v1)),
                    WaveState(t, std::move(w0), std::move(w1)),
                    lambda,
                    epsilon,
                    0};
}

// Verlet on the pair with the coupled forces of the truncation system.
class CoupledEngine {
 public:
  CoupledEngine(RadialGrid grid, double p, bool nonlinear) : grid_(grid), p_(p), nonlinear_(nonlinear) {}

  void prime(const RadialField& v, const RadialField& w) { refresh(v, w); }

  void step(SplitState& ss, double dt) {
    const std::size_t n = grid_.n();
    const double half = 0.5 * dt;
    for (std::size_t i = 0; i < n; ++i) {
      ss.w.ut[i] += half * aw_[i];
      ss.v.ut[i] += half * av_[i];
      ss.w.u[i] += dt * ss.w.ut[i];
      ss.v.u[i] += dt * ss.v.ut[i];
    }
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) finite = finite && std::isfinite(ss.v.u[i]) && std::isfinite(ss.w.u[i]);
    if (!finite) throw BlowUpDetected("step_coupled: non-finite update");
    try {
      refresh(ss.v.u, ss.w.u);
    } catch (const NumericError& e) {
      throw BlowUpDetected(std::string("step_coupled: ") + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
      ss.w.ut[i] += half * aw_[i];
      ss.v.ut[i] += half * av_[i];
      finite = finite && std::isfinite(ss.v.u[i]) && std::isfinite(ss.w.u[i]) &&
               std::isfinite(ss.v.ut[i]) && std::isfinite(ss.w.ut[i]);
    }
    if (!finite) throw BlowUpDetected("step_coupled: non-finite update");
  }

 private:
  void refresh(const RadialField& v, const RadialField& w) {
    av_ = spectral_laplacian(v);
    aw_ = spectral_laplacian(w);
    if (!nonlinear_) return;
    const RadialField u = v + w;
    const std::vector<double> fu = nonlinear_force(u.phi(), grid_, p_);
    const std::vector<double> fw = nonlinear_force(w.phi(), grid_, p_);
    for (std::size_t i = 0; i < grid_.n(); ++i) {
      aw_[i] -= fw[i];
      av_[i] -= fu[i] - fw[i];
    }
  }

  RadialGrid grid_;
  double p_;
  bool nonlinear_;
  std::vector<double> av_, aw_;
};

}  // namespace

WaveState SplitState::assembled() const { return WaveState(time, v.u + w.u, v.ut + w.ut); }

SplitState split_initial(const WaveState& state, double p, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("split_initial: epsilon must be positive");
  const double sc = critical_exponent(p);

  // size(m) is the high-frequency norm after rescaling by 2^m; it decreases
  // as m decreases. Returns nullopt when the grid cannot hold the rescaling.
  const auto size_at = [&](int m) -> std::optional<double> {
    try {
      return high_part_size(rescale(state, std::ldexp(1.0, m), p), sc);
    } catch (const ResolutionError&) {
      return std::nullopt;
    }
  };

  const auto s0 = size_at(0);
  if (!s0) throw ResolutionError("split_initial: data not resolvable at lambda = 1");
  int good = 0;
  if (*s0 >= epsilon) {
    // Exponential search downward for an admissible m, then bisection.
    int bad = 0;
    int step = 1;
    for (;;) {
      const int m = bad - step;
      const auto sm = size_at(m);
      if (!sm) {
        // Bisect towards the last resolvable level before giving up.
        if (step == 1) throw ResolutionError("split_initial: no admissible lambda within resolution budget");
        step /= 2;
        continue;
      }
      if (*sm < epsilon) {
        good = m;
        break;
      }
      bad = m;
      step *= 2;
    }
    while (bad - good > 1) {
      const int mid = bad - (bad - good) / 2;
      const auto smid = size_at(mid);
      if (smid && *smid < epsilon) {
        good = mid;
      } else {
        bad = mid;
      }
    }
  }
  const double lambda = std::ldexp(1.0, good);
  SplitState ss = split_at(rescale(state, lambda, p), lambda, epsilon);
  const SplitNorms norms = measure(ss, p);
  if (!(norms.w0_hsc + norms.w1_hscm1 < epsilon)) {
    throw ResolutionError("split_initial: constructed split fails the smallness check");
  }
  return ss;
}

SplitNorms measure(const SplitState& ss, double p) {
  const double sc = critical_exponent(p);
  return SplitNorms{sobolev_norm(ss.w.u, sc), sobolev_norm(ss.w.ut, sc - 1.0),
                    sobolev_norm(ss.v.u, 1.0), sobolev_norm(ss.v.ut, 0.0)};
}

std::string certificate_json(const SplitState& ss, double p) {
  const SplitNorms n = measure(ss, p);
  nlohmann::json j{{"lambda", ss.lambda},
                   {"epsilon", ss.epsilon},
                   {"norms",
                    {{"w0_hsc", n.w0_hsc}, {"w1_hscm1", n.w1_hscm1}, {"v0_h1", n.v0_h1}, {"v1_l2", n.v1_l2}}}};
  return j.dump(2);
}

SplitState step_coupled(const SplitState& ss, const SolverConfig& cfg) {
  validate(cfg, ss.v.grid());
  CoupledEngine engine(ss.v.grid(), cfg.p, cfg.nonlinear);
  SplitState next = ss;
  engine.prime(next.v.u, next.w.u);
  engine.step(next, cfg.dt);
  next.time += cfg.dt;
  next.v.time = next.w.time = next.time;
  return next;
}

SplitState evolve_split(const SplitState& ss, const SolverConfig& cfg,
                        std::span<const SplitObserver> observers) {
  const RadialGrid& grid = ss.v.grid();
  validate(cfg, grid);
  const WaveState u = ss.assembled();
  const double support = data_support(u);
  if (support > 0.0 && support + cfg.t_end >= grid.r_max()) {
    throw InvalidArgument("evolve_split: light cone of the data reaches r_max before t_end");
  }
  const auto notify = [&](const SplitState& s) {
    for (const auto& obs : observers) obs(s);
  };
  notify(ss);
  const StepPlan plan = plan_steps(cfg.t_end, cfg.dt);
  SplitState cur = ss;
  if (plan.steps == 0) return cur;

  CoupledEngine engine(grid, cfg.p, cfg.nonlinear);
  engine.prime(cur.v.u, cur.w.u);
  const double t0 = ss.time;
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    engine.step(cur, plan.dt);
    cur.time = t0 + static_cast<double>(k) * plan.dt;
    cur.v.time = cur.w.time = cur.time;
    if (k % cfg.record_every == 0 || k == plan.steps) notify(cur);
  }
  return cur;
}

double cross_term(double v, double w, double p) {
  const auto f = [p](double x) { return std::pow(std::abs(x), p - 1.0) * x; };
  return f(v + w) - f(v) - f(w);
}

CrossTerms taylor_cross_terms(const RadialField& v, const RadialField& w, double p) {
  if (!(v.grid() == w.grid())) throw InvalidArgument("taylor_cross_terms: grid mismatch");
  const RadialGrid& grid = v.grid();
  RadialField leading(grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double r = grid.r(i);
    const double vu = v.u(i), wu = w.u(i);
    const double lead = p * std::pow(std::abs(vu), p - 1.0) * wu;
    leading[i] = r * lead;
    acc += r * r * std::abs(cross_term(vu, wu, p) - lead);
  }
  return CrossTerms{std::move(leading), 4.0 * std::numbers::pi * grid.h() * acc};
}

}  // namespace radwave
