#include "radwave/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "radwave/errors.hpp"
#include "radwave/spectral.hpp"

namespace radwave {
namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

double gradient_line_integral(const RadialField& f) {
  // int_0^L phi_r^2 dr = (L/2) sum rho_m^2 c_m^2 for the sine series.
  const SpectralField s = dst(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.coeff.size(); ++i) {
    const double k = s.frequency(i) * s.coeff[i];
    acc += k * k;
  }
  return 0.5 * f.grid().r_max() * acc;
}

double phi_t_phi_r(const RadialField& phi, const RadialField& phit) {
  const std::vector<double> dr = radial_derivative(phi);
  double acc = 0.0;
  for (std::size_t i = 0; i < phit.size(); ++i) acc += phit[i] * dr[i + 1];
  // The integrand is odd about r = 0, so the plain sum misses the
  // Euler-Maclaurin end term h^2/12 f'(0) = h^2/12 u(0) u_t(0).
  const double h = phi.grid().h();
  return h * acc + h * h / 12.0 * dr[0] * eval_u_at_origin(phit);
}

double origin_value_sq(const RadialField& f) {
  const double u0 = eval_u_at_origin(f);
  return u0 * u0;
}

void check_dense(std::span<const double> t, double h, const char* who) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] - t[i - 1] > h * (1.0 + 1e-9)) {
      throw InvalidArgument(std::string(who) + ": recording spacing exceeds the grid spacing h");
    }
  }
}

}  // namespace

EnergyParts energy_parts(const WaveState& state, double p, bool nonlinear) {
  const RadialGrid& g = state.grid();
  EnergyParts e;
  double kin = 0.0;
  for (double v : state.ut.phi()) kin += v * v;
  e.kinetic = 0.5 * kFourPi * g.h() * kin;
  e.gradient = 0.5 * kFourPi * gradient_line_integral(state.u);
  if (nonlinear) {
    double pot = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double r = g.r(i);
      pot += r * r * std::pow(std::abs(state.u.u(i)), p + 1.0);
    }
    e.potential = kFourPi * g.h() * pot / (p + 1.0);
  }
  return e;
}

double energy(const WaveState& state, double p, bool nonlinear) {
  return energy_parts(state, p, nonlinear).total();
}

double morawetz_potential(const WaveState& state) { return phi_t_phi_r(state.u, state.ut); }

double morawetz_density(const WaveState& state, double p) {
  const RadialGrid& g = state.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) acc += g.r(i) * std::pow(std::abs(state.u.u(i)), p + 1.0);
  return g.h() * acc;
}

double virial_rate(const WaveState& state, double p, bool nonlinear) {
  double rate = 0.5 * origin_value_sq(state.u);
  if (nonlinear) rate += (p - 1.0) / (p + 1.0) * morawetz_density(state, p);
  return rate;
}

std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
  }
  return out;
}

std::vector<double> virial_residual(std::span<const double> t, std::span<const double> m,
                                    std::span<const double> rate) {
  if (t.size() != m.size() || t.size() != rate.size()) {
    throw InvalidArgument("virial_residual: series lengths differ");
  }
  std::vector<double> out = cumulative_trapezoid(t, rate);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += m[i] - m[0];
  return out;
}

std::vector<double> virial_residual(const Trajectory& traj, double p) {
  const std::vector<double> t = traj.times();
  check_dense(t, traj.front().grid().h(), "virial_residual");
  std::vector<double> m, rate;
  for (const auto& s : traj.states()) {
    m.push_back(morawetz_potential(s));
    rate.push_back(virial_rate(s, p, traj.config().nonlinear));
  }
  return virial_residual(t, m, rate);
}

double modified_energy(const SplitState& ss, double p, double c) {
  if (!(c >= 0.0)) throw InvalidArgument("modified_energy: c must be non-negative");
  const RadialGrid& g = ss.v.grid();
  double cross = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double r = g.r(i);
    const double v = ss.v.u.u(i);
    cross += r * r * std::pow(std::abs(v), p - 1.0) * v * ss.w.u.u(i);
  }
  cross *= kFourPi * g.h();
  return energy(ss.v, p) + c * morawetz_potential(ss.v) - cross;
}

std::vector<double> morawetz_budget(const Trajectory& traj, double p) {
  std::vector<double> d;
  for (const auto& s : traj.states()) d.push_back(kFourPi * morawetz_density(s, p));
  return cumulative_trapezoid(traj.times(), d);
}

double spacetime_density(const WaveState& state, double p, Region region) {
  const RadialGrid& g = state.grid();
  const double r_min = state.time - region.offset;
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double r = g.r(i);
    if (r < r_min) continue;
    acc += r * r * std::pow(std::abs(state.u.u(i)), 2.0 * (p - 1.0));
  }
  return kFourPi * g.h() * acc;
}

std::vector<double> spacetime_norm(const Trajectory& traj, double p, Region region) {
  std::vector<double> d;
  for (const auto& s : traj.states()) d.push_back(spacetime_density(s, p, region));
  return cumulative_trapezoid(traj.times(), d);
}

double weighted_lp_integral(const RadialField& f, double p) {
  const RadialGrid& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) acc += g.r(i) * std::pow(std::abs(f.u(i)), p + 1.0);
  return kFourPi * g.h() * acc;
}

// ---------------------------------------------------------------- hyperbolic

double hyperbolic_energy(const HyperbolicState& hs, double p) {
  const RadialGrid& g = hs.grid();
  double kin = 0.0;
  for (double v : hs.ut_tilde.phi()) kin += v * v;
  const std::vector<double> w = hyperbolic_spatial_weight(g, p);
  double pot = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double s = g.r(i);
    pot += w[i] * s * s * std::pow(std::abs(hs.u_tilde.u(i)), p + 1.0);
  }
  pot *= std::exp(-(p - 3.0) * hs.tau) * g.h() / (p + 1.0);
  return 0.5 * gradient_line_integral(hs.u_tilde) + 0.5 * g.h() * kin + pot;
}

double hyperbolic_morawetz_potential(const HyperbolicState& hs) {
  return phi_t_phi_r(hs.u_tilde, hs.ut_tilde);
}

double hyperbolic_morawetz_density(const HyperbolicState& hs, double p) {
  const RadialGrid& g = hs.grid();
  const std::vector<double> w = hyperbolic_spatial_weight(g, p);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double s = g.r(i);
    acc += w[i] * (s * s / std::tanh(s)) * std::pow(std::abs(hs.u_tilde.u(i)), p + 1.0);
  }
  return std::exp(-(p - 3.0) * hs.tau) * g.h() * acc;
}

double hyperbolic_virial_rate(const HyperbolicState& hs, double p) {
  return 0.5 * origin_value_sq(hs.u_tilde) + (p - 1.0) / (p + 1.0) * hyperbolic_morawetz_density(hs, p);
}

// ---------------------------------------------------------------- recorders

void DiagnosticsRecorder::record(const WaveState& u) {
  const double e = energy(u, opt_.p, opt_.nonlinear);
  const double m = morawetz_potential(u);
  push(u.time, u, e, m, e + opt_.c_morawetz * m, 0.0);
}

void DiagnosticsRecorder::record(const SplitState& ss) {
  const double sc = critical_exponent(opt_.p);
  const double e_v = energy(ss.v, opt_.p, opt_.nonlinear);
  const double m_v = morawetz_potential(ss.v);
  const double script_e = modified_energy(ss, opt_.p, opt_.c_morawetz);
  const double w_hsc = sobolev_norm(ss.w.u, sc) + sobolev_norm(ss.w.ut, sc - 1.0);
  push(ss.time, ss.assembled(), e_v, m_v, script_e, w_hsc);
}

void DiagnosticsRecorder::push(double t, const WaveState& u, double e_v, double m_v,
                               double script_e, double w_hsc) {
  auto& s = series_;
  s.times.push_back(t);
  s.E.push_back(e_v);
  s.M.push_back(m_v);
  s.script_E.push_back(script_e);
  s.u_origin_sq.push_back(origin_value_sq(u.u));
  s.w_hsc.push_back(w_hsc);
  s.energy_u.push_back(energy(u, opt_.p, opt_.nonlinear));

  m_u_.push_back(morawetz_potential(u));
  rate_u_.push_back(virial_rate(u, opt_.p, opt_.nonlinear));
  mor_density_.push_back(kFourPi * morawetz_density(u, opt_.p));
  st_density_.push_back(spacetime_density(u, opt_.p, Region::all()));
  ext_density_.push_back(spacetime_density(u, opt_.p, Region::exterior_cone(opt_.exterior_offset)));

  const std::size_t i = s.times.size() - 1;
  if (i == 0) {
    s.morawetz_cum.push_back(0.0);
    s.st_norm_cum.push_back(0.0);
    s.exterior_st_norm_cum.push_back(0.0);
    s.virial_residual.push_back(0.0);
    cum_rate_ = 0.0;
    return;
  }
  const double dt = s.times[i] - s.times[i - 1];
  const auto trap = [&](const std::vector<double>& d) { return 0.5 * (d[i] + d[i - 1]) * dt; };
  s.morawetz_cum.push_back(s.morawetz_cum.back() + trap(mor_density_));
  s.st_norm_cum.push_back(s.st_norm_cum.back() + trap(st_density_));
  s.exterior_st_norm_cum.push_back(s.exterior_st_norm_cum.back() + trap(ext_density_));
  cum_rate_ += trap(rate_u_);
  s.virial_residual.push_back(m_u_[i] - m_u_[0] + cum_rate_);
}

void HyperbolicRecorder::record(const HyperbolicState& hs) {
  auto& s = series_;
  s.grid_h = hs.grid().h();
  s.taus.push_back(hs.tau);
  s.E_hyp.push_back(hyperbolic_energy(hs, p_));
  s.M_hyp.push_back(hyperbolic_morawetz_potential(hs));
  s.rate.push_back(hyperbolic_virial_rate(hs, p_));
  density_.push_back(hyperbolic_morawetz_density(hs, p_));
  const std::size_t i = s.taus.size() - 1;
  if (i == 0) {
    s.hyp_morawetz_cum.push_back(0.0);
    s.hyp_virial_residual.push_back(0.0);
    cum_rate_ = 0.0;
    return;
  }
  const double dt = s.taus[i] - s.taus[i - 1];
  s.hyp_morawetz_cum.push_back(s.hyp_morawetz_cum.back() + 0.5 * (density_[i] + density_[i - 1]) * dt);
  cum_rate_ += 0.5 * (s.rate[i] + s.rate[i - 1]) * dt;
  s.hyp_virial_residual.push_back(s.M_hyp[i] - s.M_hyp[0] + cum_rate_);
}

std::vector<double> hyperbolic_virial_residual(const HyperbolicSeries& hs) {
  check_dense(hs.taus, hs.grid_h, "hyperbolic_virial_residual");
  return virial_residual(hs.taus, hs.M_hyp, hs.rate);
}

// ---------------------------------------------------------------- csv

namespace {

void write_columns(std::ostream& os, const std::string& header,
                   std::initializer_list<const std::vector<double>*> cols) {
  os << header << '\n' << std::setprecision(17);
  const std::size_t rows = (*cols.begin())->size();
  for (std::size_t r = 0; r < rows; ++r) {
    bool first = true;
    for (const auto* c : cols) {
      if (!first) os << ',';
      os << (*c)[r];
      first = false;
    }
    os << '\n';
  }
}

void read_columns(std::istream& is, const std::string& header,
                  std::initializer_list<std::vector<double>*> cols) {
  std::string line;
  if (!std::getline(is, line) || line != header) {
    throw InvalidArgument("read csv: expected header `" + header + "`");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    for (auto* c : cols) {
      if (!std::getline(row, cell, ',')) throw InvalidArgument("read csv: short row");
      c->push_back(parse_number(cell));
    }
  }
}

const std::string kDiagHeader =
    "t,E,M,scriptE,u0sq,morawetz_cum,st_norm_cum,ext_st_norm_cum,w_hsc,virial_residual";
const std::string kHypHeader = "tau,E_hyp,M_hyp,hyp_morawetz_cum,hyp_virial_residual";

}  // namespace

void write_csv(std::ostream& os, const DiagnosticsSeries& s) {
  write_columns(os, kDiagHeader,
                {&s.times, &s.E, &s.M, &s.script_E, &s.u_origin_sq, &s.morawetz_cum, &s.st_norm_cum,
                 &s.exterior_st_norm_cum, &s.w_hsc, &s.virial_residual});
}

void write_csv(std::ostream& os, const HyperbolicSeries& s) {
  write_columns(os, kHypHeader, {&s.taus, &s.E_hyp, &s.M_hyp, &s.hyp_morawetz_cum, &s.hyp_virial_residual});
}

DiagnosticsSeries read_diagnostics_csv(std::istream& is) {
  DiagnosticsSeries s;
  read_columns(is, kDiagHeader,
               {&s.times, &s.E, &s.M, &s.script_E, &s.u_origin_sq, &s.morawetz_cum, &s.st_norm_cum,
                &s.exterior_st_norm_cum, &s.w_hsc, &s.virial_residual});
  return s;
}

HyperbolicSeries read_hyperbolic_csv(std::istream& is) {
  HyperbolicSeries s;
  read_columns(is, kHypHeader, {&s.taus, &s.E_hyp, &s.M_hyp, &s.hyp_morawetz_cum, &s.hyp_virial_residual});
  return s;
}

}  // namespace radwave
