#include "radwave/wave_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "radwave/errors.hpp"
#include "radwave/spectral.hpp"

namespace radwave {
namespace {

// Velocity Verlet with the Laplacian and nonlinear force cached separately so
// that a time-dependent coefficient can multiply the force at each step.
class VerletEngine {
 public:
  VerletEngine(RadialGrid grid, double p, bool nonlinear, std::vector<double> weight)
      : grid_(grid), p_(p), nonlinear_(nonlinear), weight_(std::move(weight)) {}

  void prime(const RadialField& phi) { refresh(phi); }

  // Advances (phi, phit) by dt with the force scaled by coef in both kicks.
  void step(RadialField& phi, RadialField& phit, double dt, double coef) {
    const std::size_t n = grid_.n();
    const double half = 0.5 * dt;
    for (std::size_t i = 0; i < n; ++i) {
      phit[i] += half * (lap_[i] - coef * force_[i]);
      phi[i] += dt * phit[i];
    }
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) finite = finite && std::isfinite(phi[i]);
    if (!finite) throw BlowUpDetected("leapfrog: non-finite update");
    try {
      refresh(phi);
    } catch (const NumericError& e) {
      throw BlowUpDetected(std::string("leapfrog: ") + e.what());
    }
    for (std::size_t i = 0; i < n; ++i) {
      phit[i] += half * (lap_[i] - coef * force_[i]);
      finite = finite && std::isfinite(phi[i]) && std::isfinite(phit[i]);
    }
    if (!finite) throw BlowUpDetected("leapfrog: non-finite update");
  }

 private:
  void refresh(const RadialField& phi) {
    lap_ = spectral_laplacian(phi);
    if (nonlinear_) {
      force_ = nonlinear_force(phi.phi(), grid_, p_, weight_);
    } else {
      force_.assign(grid_.n(), 0.0);
    }
  }

  RadialGrid grid_;
  double p_;
  bool nonlinear_;
  std::vector<double> weight_;
  std::vector<double> lap_;
  std::vector<double> force_;
};

nlohmann::json config_json(const SolverConfig& cfg) {
  return {{"p", cfg.p},
          {"dt", cfg.dt},
          {"t_end", cfg.t_end},
          {"cfl", cfg.cfl},
          {"record_every", cfg.record_every},
          {"nonlinear", cfg.nonlinear}};
}

}  // namespace

double data_support(const WaveState& s) {
  return std::max(support_radius(s.u, kLightConeTolerance), support_radius(s.ut, kLightConeTolerance));
}

void validate(const SolverConfig& cfg, const RadialGrid& grid) {
  if (!(cfg.p >= 3.0 && cfg.p <= 5.0)) throw InvalidArgument("solver: p must lie in [3, 5]");
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 2.0 / std::numbers::pi)) {
    throw InvalidArgument("solver: cfl must lie in (0, 2/pi] for spectral leapfrog stability");
  }
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidArgument("solver: dt must be positive");
  if (cfg.dt > cfg.cfl * grid.h() * (1.0 + 1e-12)) {
    throw InvalidArgument("solver: CFL violated, dt > cfl * h");
  }
  if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
    throw InvalidArgument("solver: t_end must be non-negative");
  }
  if (cfg.record_every == 0) throw InvalidArgument("solver: record_every must be positive");
}

StepPlan plan_steps(double t_end, double dt) {
  if (t_end <= 0.0) return {0, dt};
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  return {steps, t_end / static_cast<double>(steps)};
}

std::vector<double> nonlinear_force(std::span<const double> phi, const RadialGrid& grid, double p,
                                    std::span<const double> weight) {
  std::vector<double> f(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double r = grid.r(i);
    const double u = phi[i] / r;
    double v = r * std::pow(std::abs(u), p - 1.0) * u;
    if (!weight.empty()) v *= weight[i];
    f[i] = v;
  }
  return f;
}

std::vector<double> spectral_laplacian(const RadialField& f) {
  SpectralField s = dst(f);
  for (std::size_t i = 0; i < s.coeff.size(); ++i) {
    const double rho = s.frequency(i);
    s.coeff[i] *= -rho * rho;
  }
  RadialField out = idst(s);
  return {out.phi().begin(), out.phi().end()};
}

WaveState step_full(const WaveState& state, const SolverConfig& cfg) {
  validate(cfg, state.grid());
  VerletEngine engine(state.grid(), cfg.p, cfg.nonlinear, {});
  WaveState next = state;
  engine.prime(next.u);
  engine.step(next.u, next.ut, cfg.dt, 1.0);
  next.time += cfg.dt;
  return next;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states_.size());
  for (const auto& s : states_) t.push_back(s.time);
  return t;
}

Trajectory evolve(const WaveState& state, const SolverConfig& cfg,
                  std::span<const Observer> observers) {
  const RadialGrid& grid = state.grid();
  validate(cfg, grid);
  const double support = data_support(state);
  if (support > 0.0 && support + cfg.t_end >= grid.r_max()) {
    throw InvalidArgument("evolve: light cone of the data reaches r_max before t_end");
  }

  Trajectory traj(cfg, support);
  const auto notify = [&](const WaveState& s) {
    for (const auto& obs : observers) obs(s);
  };
  traj.append(state);
  notify(state);

  const StepPlan plan = plan_steps(cfg.t_end, cfg.dt);
  if (plan.steps == 0) return traj;

  VerletEngine engine(grid, cfg.p, cfg.nonlinear, {});
  WaveState cur = state;
  const double t0 = state.time;
  engine.prime(cur.u);
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    engine.step(cur.u, cur.ut, plan.dt, 1.0);
    cur.time = t0 + static_cast<double>(k) * plan.dt;
    if (k % cfg.record_every == 0 || k == plan.steps) {
      notify(cur);
      if (cfg.keep_states || k == plan.steps) traj.append(cur);
    }
  }
  return traj;
}

CheckpointWriter::CheckpointWriter(std::filesystem::path dir, SolverConfig cfg)
    : dir_(std::move(dir)), cfg_(cfg) {
  std::filesystem::create_directories(dir_);
}

void CheckpointWriter::operator()(const WaveState& s) {
  std::ostringstream name;
  name << "ckpt_" << std::setw(6) << std::setfill('0') << times_.size() << ".csv";
  std::ofstream os(dir_ / name.str());
  os << "r,phi,phit\n" << std::setprecision(17);
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    os << s.grid().r(i) << ',' << s.u[i] << ',' << s.ut[i] << '\n';
  }
  times_.push_back(s.time);
}

void CheckpointWriter::finish() const {
  nlohmann::json index{{"times", times_}, {"config", config_json(cfg_)}};
  std::ofstream os(dir_ / "index.json");
  os << std::setprecision(17) << index.dump(2) << '\n';
}

RadialField free_wave_exact(const Profile& u0, double t, const RadialGrid& grid) {
  const auto psi = [&](double x) { return x * u0(std::abs(x)); };
  std::vector<double> phi(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double r = grid.r(i);
    phi[i] = 0.5 * (psi(r + t) + psi(r - t));
  }
  return RadialField(grid, std::move(phi));
}

// ---------------------------------------------------------------- hyperbolic

double log_s_over_sinh(double s) {
  if (s < 1e-4) {
    const double s2 = s * s;
    return -s2 / 6.0 + s2 * s2 / 180.0;
  }
  if (s < 20.0) return std::log(s / std::sinh(s));
  return std::log(s) - s + std::numbers::ln2 - std::log1p(-std::exp(-2.0 * s));
}

std::vector<double> hyperbolic_spatial_weight(const RadialGrid& s_grid, double p) {
  std::vector<double> w(s_grid.n());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp((p - 1.0) * log_s_over_sinh(s_grid.r(i)));
  }
  return w;
}

HyperbolicState step_hyperbolic(const HyperbolicState& hs, const SolverConfig& cfg) {
  validate(cfg, hs.grid());
  VerletEngine engine(hs.grid(), cfg.p, cfg.nonlinear, hyperbolic_spatial_weight(hs.grid(), cfg.p));
  HyperbolicState next = hs;
  engine.prime(next.u_tilde);
  const double coef = std::exp(-(cfg.p - 3.0) * (hs.tau + 0.5 * cfg.dt));
  engine.step(next.u_tilde, next.ut_tilde, cfg.dt, coef);
  next.tau += cfg.dt;
  return next;
}

HyperbolicState evolve_hyperbolic(const HyperbolicState& hs, const SolverConfig& cfg,
                                  std::span<const HyperbolicObserver> observers) {
  validate(cfg, hs.grid());
  const auto notify = [&](const HyperbolicState& s) {
    for (const auto& obs : observers) obs(s);
  };
  notify(hs);
  const StepPlan plan = plan_steps(cfg.t_end, cfg.dt);
  HyperbolicState cur = hs;
  if (plan.steps == 0) return cur;

  VerletEngine engine(hs.grid(), cfg.p, cfg.nonlinear, hyperbolic_spatial_weight(hs.grid(), cfg.p));
  engine.prime(cur.u_tilde);
  const double tau0 = hs.tau;
  for (std::size_t k = 1; k <= plan.steps; ++k) {
    const double tau_prev = tau0 + static_cast<double>(k - 1) * plan.dt;
    const double coef = std::exp(-(cfg.p - 3.0) * (tau_prev + 0.5 * plan.dt));
    engine.step(cur.u_tilde, cur.ut_tilde, plan.dt, coef);
    cur.tau = tau0 + static_cast<double>(k) * plan.dt;
    if (k % cfg.record_every == 0 || k == plan.steps) notify(cur);
  }
  return cur;
}

namespace {

// Samples of one recorded state extended by the Dirichlet end values.
struct Snapshot {
  std::vector<double> phi, phit, phir;
};

Snapshot extend(const WaveState& s) {
  const std::size_t n = s.u.size();
  Snapshot snap;
  snap.phi.assign(n + 2, 0.0);
  snap.phit.assign(n + 2, 0.0);
  std::copy(s.u.phi().begin(), s.u.phi().end(), snap.phi.begin() + 1);
  std::copy(s.ut.phi().begin(), s.ut.phi().end(), snap.phit.begin() + 1);
  snap.phir = radial_derivative(s.u);
  return snap;
}

double lerp_radial(const std::vector<double>& v, double x) {
  const std::size_t last = v.size() - 1;
  auto k = static_cast<std::size_t>(std::floor(x));
  if (k >= last) return v[last];
  const double f = x - static_cast<double>(k);
  return (1.0 - f) * v[k] + f * v[k + 1];
}

}  // namespace

HyperbolicState hyperbolic_transform(const Trajectory& traj, double tau, const RadialGrid& s_grid) {
  if (traj.size() == 0) throw InvalidArgument("hyperbolic_transform: empty trajectory");
  const std::vector<double> times = traj.times();
  const RadialGrid& grid = traj.front().grid();
  const double t0 = traj.start_time();
  const auto support = traj.support_radius();
  const double scale = std::exp(tau);

  std::vector<std::optional<Snapshot>> cache(traj.size());
  const auto snapshot = [&](std::size_t i) -> const Snapshot& {
    if (!cache[i]) cache[i] = extend(traj.states()[i]);
    return *cache[i];
  };

  std::vector<double> psi(s_grid.n(), 0.0), psit(s_grid.n(), 0.0);
  for (std::size_t k = 0; k < s_grid.n(); ++k) {
    const double s = s_grid.r(k);
    const double t = scale * std::cosh(s);
    const double r = scale * std::sinh(s);
    if (support && r - (t - t0) >= *support) continue;
    if (r > grid.r_max() || t < times.front() - 1e-12 || t > times.back() + 1e-12) {
      std::ostringstream msg;
      msg << "hyperbolic_transform: point (t=" << t << ", r=" << r
          << ") lies outside the recorded region";
      throw OutOfDomain(msg.str());
    }
    std::size_t i = 0;
    double theta = 0.0;
    if (times.size() > 1) {
      const auto it = std::upper_bound(times.begin(), times.end(), t);
      i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - times.begin() - 1, 0,
                                                              static_cast<std::ptrdiff_t>(times.size()) - 2));
      theta = std::clamp((t - times[i]) / (times[i + 1] - times[i]), 0.0, 1.0);
    }
    const double x = r / grid.h();
    const auto eval = [&](std::size_t idx) {
      const Snapshot& sn = snapshot(idx);
      return std::array<double, 3>{lerp_radial(sn.phi, x), lerp_radial(sn.phit, x),
                                   lerp_radial(sn.phir, x)};
    };
    std::array<double, 3> v = eval(i);
    if (times.size() > 1 && theta > 0.0) {
      const std::array<double, 3> w = eval(i + 1);
      for (int c = 0; c < 3; ++c) v[c] = (1.0 - theta) * v[c] + theta * w[c];
    }
    psi[k] = v[0];
    psit[k] = t * v[1] + r * v[2];
  }
  return HyperbolicState{tau, RadialField(s_grid, std::move(psi)), RadialField(s_grid, std::move(psit))};
}

}  // namespace radwave
