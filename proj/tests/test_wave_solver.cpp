#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "oracles.hpp"
#include "radwave/errors.hpp"
#include "radwave/functionals.hpp"
#include "radwave/wave_solver.hpp"

using namespace radwave;
namespace fs = std::filesystem;

namespace {

SolverConfig config(double p, double dt, double t_end, bool nonlinear = true) {
  SolverConfig c;
  c.p = p;
  c.dt = dt;
  c.t_end = t_end;
  c.nonlinear = nonlinear;
  return c;
}

double max_abs(const RadialField& f) {
  double m = 0.0;
  for (double v : f.phi()) m = std::max(m, std::abs(v));
  return m;
}

/// Max relative energy deviation along a run, sampled every step.
double energy_drift(const WaveState& init, const SolverConfig& cfg) {
  const double e0 = energy(init, cfg.p);
  double worst = 0.0;
  const Observer obs = [&](const WaveState& s) { worst = std::max(worst, std::abs(energy(s, cfg.p) - e0) / e0); };
  auto c = cfg;
  c.keep_states = false;
  evolve(init, c, std::span<const Observer>(&obs, 1));
  return worst;
}

}  // namespace

TEST_CASE("configuration checks") {
  const auto g = make_grid(10.0, 255);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  CHECK_THROWS_AS(step_full(st, config(4.0, 1.01 * g.h(), 1.0)), InvalidArgument);
  CHECK_THROWS_AS(step_full(st, config(4.0, 0.51 * g.h(), 1.0)), InvalidArgument);  // default cfl 0.5
  CHECK_THROWS_AS(step_full(st, config(2.0, 0.5 * g.h(), 1.0)), InvalidArgument);
  CHECK_THROWS_AS(step_full(st, config(5.5, 0.5 * g.h(), 1.0)), InvalidArgument);
  CHECK_THROWS_AS(step_full(st, config(4.0, 0.0, 1.0)), InvalidArgument);
  auto c = config(4.0, 0.5 * g.h(), 1.0);
  c.cfl = 0.7;  // above 2/pi
  CHECK_THROWS_AS(step_full(st, c), InvalidArgument);
  c.cfl = 0.6;
  c.dt = 0.6 * g.h();
  CHECK_NOTHROW(step_full(st, c));
  c = config(4.0, 0.5 * g.h(), 1.0);
  c.record_every = 0;
  CHECK_THROWS_AS(evolve(st, c), InvalidArgument);
  CHECK_THROWS_AS(evolve(st, config(4.0, 0.5 * g.h(), -1.0)), InvalidArgument);
  CHECK_NOTHROW(step_full(st, config(3.0, 0.5 * g.h(), 1.0)));  // hyperbolic endpoint
}

TEST_CASE("step plan lands on t_end") {
  const auto p = plan_steps(1.0, 0.3);
  CHECK(p.steps == 4);
  CHECK(p.dt == doctest::Approx(0.25));
  CHECK(plan_steps(0.0, 0.1).steps == 0);
  CHECK(plan_steps(1.0, 0.25).steps == 4);
}

TEST_CASE("zero state is a fixed point") {
  const auto g = make_grid(10.0, 255);
  const WaveState z(0.0, RadialField(g), RadialField(g));
  const auto next = step_full(z, config(4.0, 0.5 * g.h(), 1.0));
  CHECK(max_abs(next.u) == 0.0);
  CHECK(max_abs(next.ut) == 0.0);
  CHECK(next.time == doctest::Approx(0.5 * g.h()));
}

TEST_CASE("one step keeps the energy") {
  const auto g = make_grid(20.0, 4096);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  const auto next = step_full(st, config(4.0, 0.5 * g.h(), 1.0));
  CHECK(energy(next, 4.0) == doctest::Approx(energy(st, 4.0)).epsilon(1e-8));
}

TEST_CASE("t_end = 0 returns only the initial state") {
  const auto g = make_grid(10.0, 255);
  const auto st = WaveState::at_rest(0.25, sample(Profile::gaussian(1.0), g));
  int seen = 0;
  const Observer obs = [&](const WaveState&) { ++seen; };
  const auto traj = evolve(st, config(4.0, 0.5 * g.h(), 0.0), std::span<const Observer>(&obs, 1));
  CHECK(traj.size() == 1);
  CHECK(seen == 1);
  CHECK(traj.back().time == 0.25);
}

TEST_CASE("observers see initial, every k-th and final states") {
  const auto g = make_grid(10.0, 255);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  auto c = config(4.0, 0.1 * g.h(), 10 * 0.1 * g.h());
  c.record_every = 3;
  std::vector<double> times;
  const Observer obs = [&](const WaveState& s) { times.push_back(s.time); };
  const auto traj = evolve(st, c, std::span<const Observer>(&obs, 1));
  REQUIRE(times.size() == 5);  // steps 0, 3, 6, 9, 10
  CHECK(times[1] == doctest::Approx(3 * c.dt));
  CHECK(times[4] == doctest::Approx(c.t_end));
  CHECK(traj.size() == 5);
  c.keep_states = false;
  CHECK(evolve(st, c).size() == 2);
}

TEST_CASE("light cone must stay inside the domain") {
  const auto g = make_grid(5.0, 255);
  const auto st = WaveState::at_rest(0.0, sample(Profile::bump(1.0, 2.0), g));
  CHECK_THROWS_AS(evolve(st, config(4.0, 0.5 * g.h(), 3.5)), InvalidArgument);
  CHECK_NOTHROW(evolve(st, config(4.0, 0.5 * g.h(), 2.5)));
}

TEST_CASE("free wave formula") {
  const auto g = make_grid(10.0, 9);  // r = 1, 2, ...
  const auto prof = Profile::gaussian(1.0);
  const auto at3 = free_wave_exact(prof, 3.0, g);
  CHECK(at3[0] == doctest::Approx((4 * std::exp(-16.0) + (-2) * std::exp(-4.0)) / 2).epsilon(1e-15));
  const auto at0 = free_wave_exact(prof, 0.0, g);
  const auto s = sample(prof, g);
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(at0[i] == s[i]);
}

TEST_CASE("exact free solution has constant energy") {
  const auto g = make_grid(30.0, 4096);
  const auto prof = Profile::gaussian(1.0);
  auto dpsi = [](double x) { return (1 - 2 * x * x) * std::exp(-x * x); };
  double e0 = 0.0;
  for (double t : {0.0, 2.0, 4.0, 7.5}) {
    std::vector<double> phit(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) phit[i] = 0.5 * (dpsi(g.r(i) + t) - dpsi(g.r(i) - t));
    const WaveState st(t, free_wave_exact(prof, t, g), RadialField(g, phit));
    const double e = energy(st, 4.0, false);
    if (t == 0.0) {
      e0 = e;
      CHECK(e == doctest::Approx(0.5 * oracle::gaussian_grad_sq()).epsilon(1e-10));
    }
    CHECK(e == doctest::Approx(e0).epsilon(1e-10));
  }
}

TEST_CASE("free evolution matches d'Alembert at second order") {
  const auto prof = Profile::gaussian(1.0);
  std::vector<double> errs;
  for (std::size_t n : {1024u, 2048u, 4096u}) {
    const auto g = make_grid(20.0, n);
    auto c = config(4.0, 0.5 * g.h(), 5.0, false);
    c.keep_states = false;
    const auto traj = evolve(WaveState::at_rest(0.0, sample(prof, g)), c);
    errs.push_back(l2_norm(traj.back().u - free_wave_exact(prof, 5.0, g)));
  }
  CHECK(errs[2] < 1e-4);
  CHECK(errs[0] / errs[1] >= 3.5);
  CHECK(errs[1] / errs[2] >= 3.5);
}

TEST_CASE("nonlinear flow converges at second order against a fine grid") {
  // n + 1 a power of two, so coarse nodes are fine nodes.
  const double p = 4.0, t_end = 2.0;
  const auto prof = Profile::gaussian(1.0);
  std::vector<RadialField> sols;
  for (std::size_t n : {511u, 1023u, 2047u, 8191u}) {
    const auto g = make_grid(10.0, n);
    auto c = config(p, 0.5 * g.h(), t_end);
    c.keep_states = false;
    sols.push_back(evolve(WaveState::at_rest(0.0, 2.0 * sample(prof, g)), c).back().u);
  }
  const auto& ref = sols.back();
  std::vector<double> errs;
  for (std::size_t l = 0; l < 3; ++l) {
    const std::size_t stride = (ref.size() + 1) / (sols[l].size() + 1);
    double e = 0.0;
    for (std::size_t i = 0; i < sols[l].size(); ++i) {
      e = std::max(e, std::abs(sols[l][i] - ref[(i + 1) * stride - 1]));
    }
    errs.push_back(e);
  }
  CHECK(errs[0] / errs[1] >= 3.5);
  CHECK(errs[1] / errs[2] >= 3.5);
}

TEST_CASE("finite propagation speed") {
  const double R0 = 2.0, t = 3.0;
  auto outside = [&](std::size_t n, double f) {
    const auto g = make_grid(10.0, n);
    const auto st = WaveState::at_rest(0.0, sample(Profile::bump(1.0, R0), g));
    auto c = config(4.0, f * g.h(), t);
    c.keep_states = false;
    const auto fin = evolve(st, c).back();
    double m = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (g.r(i) > R0 + t + 3 * g.h()) m = std::max(m, std::abs(fin.u.u(i)));
    }
    return m;
  };
  // resolved: the leak ahead of the cone is at round-off
  CHECK(outside(2047, 0.125) <= 1e-12);
  // leapfrog's fast high modes leak, and refinement removes the leak
  const double coarse = outside(1023, 0.5), fine = outside(2047, 0.5);
  CHECK(coarse > fine);
  CHECK(fine <= 1e-8);
}

TEST_CASE("time reversal") {
  const auto g = make_grid(15.0, 2048);
  const auto st = WaveState::at_rest(0.0, 2.0 * sample(Profile::gaussian(1.0), g));
  auto c = config(4.0, 0.5 * g.h(), 4.0);
  c.keep_states = false;
  auto mid = evolve(st, c).back();
  mid.ut *= -1.0;
  const auto back = evolve(mid, c).back();
  CHECK(l2_norm(back.u - st.u) / l2_norm(st.u) <= 1e-6);
  CHECK(l2_norm(back.ut + st.ut) <= 1e-6 * l2_norm(st.u));
}

TEST_CASE("evolution is bitwise deterministic") {
  const auto g = make_grid(10.0, 1000);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(2.0), g));
  auto c = config(4.5, 0.5 * g.h(), 1.0);
  c.keep_states = false;
  const auto a = evolve(st, c).back(), b = evolve(st, c).back();
  for (std::size_t i = 0; i < g.n(); ++i) {
    CHECK(a.u[i] == b.u[i]);
    CHECK(a.ut[i] == b.ut[i]);
  }
}

TEST_CASE("energy oscillation is the second-order shadow of leapfrog") {
  const auto g = make_grid(20.0, 1024);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  const double d2 = energy_drift(st, config(4.0, 0.5 * g.h(), 3.0));
  const double d4 = energy_drift(st, config(4.0, 0.25 * g.h(), 3.0));
  CHECK(d2 / d4 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("energy drift at n = 4096, t_end = 10 with dt = h/8") {
  const auto g = make_grid(20.0, 4096);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  CHECK(energy_drift(st, config(4.0, 0.125 * g.h(), 10.0)) <= 1e-6);
}

// The literal dt = h/2 setting. Leapfrog's shadow-energy oscillation there is
// about 7e-6, so this is expected to fail; it is kept visible, not tuned.
TEST_CASE("energy drift at n = 4096, t_end = 10 with dt = h/2" * doctest::may_fail()) {
  const auto g = make_grid(20.0, 4096);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  const double d = energy_drift(st, config(4.0, 0.5 * g.h(), 10.0));
  MESSAGE("relative drift at dt = h/2: " << d);
  CHECK(d <= 1e-6);
}

TEST_CASE("overflow is reported as blow-up") {
  const auto g = make_grid(10.0, 255);
  const auto st = WaveState::at_rest(0.0, 1e100 * sample(Profile::gaussian(1.0), g));
  CHECK_THROWS_AS(step_full(st, config(5.0, 0.5 * g.h(), 1.0)), BlowUpDetected);
}

TEST_CASE("checkpoints stream to disk") {
  const fs::path dir = fs::temp_directory_path() / "radwave_ckpt_test";
  fs::remove_all(dir);
  const auto g = make_grid(10.0, 64);
  const auto st = WaveState::at_rest(0.0, sample(Profile::gaussian(1.0), g));
  auto c = config(4.0, 0.5 * g.h(), 20 * 0.5 * g.h());
  c.record_every = 10;
  CheckpointWriter writer(dir, c);
  const Observer obs = [&](const WaveState& s) { writer(s); };
  evolve(st, c, std::span<const Observer>(&obs, 1));
  writer.finish();
  CHECK(fs::exists(dir / "ckpt_000000.csv"));
  CHECK(fs::exists(dir / "ckpt_000002.csv"));
  CHECK_FALSE(fs::exists(dir / "ckpt_000003.csv"));
  std::ifstream is(dir / "index.json");
  const auto idx = nlohmann::json::parse(is);
  CHECK(idx.at("times").size() == 3);
  CHECK(idx.at("config").at("p").get<double>() == 4.0);
  std::ifstream ck(dir / "ckpt_000001.csv");
  std::string header;
  std::getline(ck, header);
  CHECK(header == "r,phi,phit");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- hyperbolic

TEST_CASE("log(s / sinh s) across its branches") {
  for (double s : {1e-3, 0.1, 1.0, 5.0, 19.0}) {
    CHECK(log_s_over_sinh(s) == doctest::Approx(std::log(s / std::sinh(s))).epsilon(1e-13));
  }
  CHECK(log_s_over_sinh(0.0) == 0.0);
  CHECK(log_s_over_sinh(1e-5) == doctest::Approx(-1e-10 / 6).epsilon(1e-6));
  // continuity at the branch points
  CHECK(log_s_over_sinh(1e-4 * (1 - 1e-12)) == doctest::Approx(log_s_over_sinh(1e-4 * (1 + 1e-12))).epsilon(1e-9));
  CHECK(log_s_over_sinh(std::nextafter(20.0, 0.0)) == doctest::Approx(log_s_over_sinh(20.0)).epsilon(1e-14));
  CHECK(log_s_over_sinh(800.0) == doctest::Approx(std::log(800.0) - 800.0 + std::log(2.0)).epsilon(1e-14));
  const auto w = hyperbolic_spatial_weight(make_grid(900.0, 99), 5.0);
  for (double v : w) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
  }
  CHECK(w.back() == 0.0);  // underflows quietly
}

TEST_CASE("hyperbolic step: zero state and the p = 3 clock") {
  const auto sg = make_grid(5.0, 511);
  const HyperbolicState z{0.0, RadialField(sg), RadialField(sg)};
  const auto n = step_hyperbolic(z, config(4.0, 0.25 * sg.h(), 1.0));
  CHECK(max_abs(n.u_tilde) == 0.0);

  const auto bump = sample(Profile::bump(3.0, 1.0), sg);
  // at p = 3 the factor e^{-(p-3) tau} is identically 1: tau does not matter
  const HyperbolicState a{0.0, bump, RadialField(sg)}, b{5.0, bump, RadialField(sg)};
  const auto na = step_hyperbolic(a, config(3.0, 0.25 * sg.h(), 1.0));
  const auto nb = step_hyperbolic(b, config(3.0, 0.25 * sg.h(), 1.0));
  for (std::size_t i = 0; i < sg.n(); ++i) CHECK(na.ut_tilde[i] == nb.ut_tilde[i]);
  // at p = 4 it does
  const auto ma = step_hyperbolic(a, config(4.0, 0.25 * sg.h(), 1.0));
  const auto mb = step_hyperbolic(b, config(4.0, 0.25 * sg.h(), 1.0));
  double diff = 0.0;
  for (std::size_t i = 0; i < sg.n(); ++i) diff = std::max(diff, std::abs(ma.ut_tilde[i] - mb.ut_tilde[i]));
  CHECK(diff > 1e-6);
}

TEST_CASE("hyperbolic transform of a frozen constant field") {
  const auto g = make_grid(5.0, 500);
  const double c = 0.7;
  std::vector<double> phi(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) phi[i] = c * g.r(i);
  Trajectory traj(config(4.0, 0.01, 3.0), std::nullopt);
  for (double t : {0.0, 1.0, 2.0, 3.0}) traj.append(WaveState(t, RadialField(g, phi), RadialField(g)));
  const auto sg = make_grid(1.0, 99);
  const auto hs = hyperbolic_transform(traj, 0.0, sg);
  for (std::size_t k = 0; k < sg.n(); ++k) {
    const double s = sg.r(k);
    CHECK(hs.u_tilde.u(k) == doctest::Approx(c * std::sinh(s) / s).epsilon(1e-12));
  }
}

namespace {

// d'Alembert data posed at t0 with Psi(x) = x u0(|x|)
struct FreeWave {
  double a, t0;
  double psi(double x) const { return x * std::exp(-a * x * x); }
  double dpsi(double x) const { return (1 - 2 * a * x * x) * std::exp(-a * x * x); }
  double phi(double t, double r) const { return 0.5 * (psi(r + t - t0) + psi(r - t + t0)); }
  double phit(double t, double r) const { return 0.5 * (dpsi(r + t - t0) - dpsi(r - t + t0)); }
  double phir(double t, double r) const { return 0.5 * (dpsi(r + t - t0) + dpsi(r - t + t0)); }
};

}  // namespace

TEST_CASE("hyperbolic transform against direct evaluation on the hyperboloid") {
  const FreeWave fw{64.0, 1.0};
  const auto g = make_grid(3.0, 2047);
  const auto st = WaveState::at_rest(fw.t0, sample(Profile::gaussian(fw.a), g));
  auto c = config(4.0, 0.5 * g.h(), 0.6, false);
  const auto traj = evolve(st, c);
  const auto sg = make_grid(3.0, 1023);
  const auto hs = hyperbolic_transform(traj, 0.0, sg);
  double err = 0.0, errt = 0.0;
  for (std::size_t k = 0; k < sg.n(); ++k) {
    const double s = sg.r(k), t = std::cosh(s), r = std::sinh(s);
    if (t > fw.t0 + 0.6) break;
    err = std::max(err, std::abs(hs.u_tilde[k] - fw.phi(t, r)));
    errt = std::max(errt, std::abs(hs.ut_tilde[k] - (t * fw.phit(t, r) + r * fw.phir(t, r))));
  }
  CHECK(err < 5e-3);
  CHECK(errt < 5e-3);

  // s -> 0: u~(tau, 0) = e^tau u(e^tau, 0), and u(t, 0) = Psi'(t - t0)
  const double tau = 0.3;
  const auto hs2 = hyperbolic_transform(traj, tau, make_grid(0.05, 99));
  CHECK(eval_u_at_origin(hs2.u_tilde) ==
        doctest::Approx(std::exp(tau) * fw.dpsi(std::exp(tau) - fw.t0)).epsilon(5e-3));
}

TEST_CASE("hyperbolic transform outside the recorded region") {
  const auto g = make_grid(3.0, 511);
  const auto st = WaveState::at_rest(1.0, sample(Profile::bump(1.0, 0.5), g));
  const auto traj = evolve(st, config(4.0, 0.5 * g.h(), 0.3));
  CHECK_THROWS_AS(hyperbolic_transform(traj, 1.0, make_grid(2.0, 255)), OutOfDomain);
  CHECK_THROWS_AS(hyperbolic_transform(Trajectory{}, 0.0, make_grid(2.0, 255)), InvalidArgument);
}
