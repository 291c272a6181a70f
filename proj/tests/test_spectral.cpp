#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "radwave/errors.hpp"
#include "radwave/experiment.hpp"
#include "radwave/spectral.hpp"

using namespace radwave;

namespace {

double max_abs_diff(const RadialField& a, const RadialField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const RadialField& a) {
  double m = 0.0;
  for (double v : a.phi()) m = std::max(m, std::abs(v));
  return m;
}

RadialField random_field(const RadialGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> phi(g.n());
  for (auto& x : phi) x = d(rng);
  return RadialField(g, phi);
}

}  // namespace

TEST_CASE("sine transform of a single mode") {
  const auto g = make_grid(5.0, 127);
  std::vector<double> phi(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) phi[i] = std::sin(M_PI * g.r(i) / g.r_max());
  const auto s = dst(RadialField(g, phi));
  CHECK(s.coeff[0] == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t m = 1; m < g.n(); ++m) CHECK(std::abs(s.coeff[m]) < 1e-14);
  CHECK(s.frequency(0) == doctest::Approx(M_PI / 5.0));
  CHECK(s.frequency(9) == doctest::Approx(10 * M_PI / 5.0));
}

TEST_CASE("sine transform of zero and round trips") {
  for (std::size_t n : {8u, 100u, 1023u, 4096u}) {
    const auto g = make_grid(20.0, n);
    for (double c : dst(RadialField(g)).coeff) CHECK(c == 0.0);
    const auto f = random_field(g, n);
    const auto back = idst(dst(f));
    CHECK(max_abs_diff(back, f) <= 1e-12 * max_abs(f));
  }
}

TEST_CASE("Sobolev norms of gaussian(1) against closed forms and quadrature") {
  const auto g = make_grid(12.0, 2047);
  const auto f = sample(Profile::gaussian(1.0), g);
  const double l2q = oracle::integrate([](double r) { return 4 * M_PI * r * r * std::exp(-2 * r * r); }, 0, 12);
  const double h1q = oracle::integrate(
      [](double r) { return 4 * M_PI * r * r * 4 * r * r * std::exp(-2 * r * r); }, 0, 12);
  CHECK(l2q == doctest::Approx(oracle::gaussian_l2_sq()).epsilon(1e-10));
  CHECK(h1q == doctest::Approx(oracle::gaussian_grad_sq()).epsilon(1e-10));
  CHECK(std::pow(sobolev_norm(f, 0.0), 2) == doctest::Approx(1.96870).epsilon(1e-5));
  CHECK(std::pow(sobolev_norm(f, 0.0), 2) == doctest::Approx(l2q).epsilon(1e-10));
  CHECK(std::pow(sobolev_norm(f, 1.0), 2) == doctest::Approx(5.90609).epsilon(1e-5));
  CHECK(std::pow(sobolev_norm(f, 1.0), 2) == doctest::Approx(h1q).epsilon(1e-10));
}

TEST_CASE("Parseval: s = 0 matches the trapezoid L2 norm") {
  const auto g = make_grid(20.0, 4096);
  std::vector<RadialField> fields;
  for (const auto& e : standard_corpus(false)) fields.push_back(e.amplitude * e.profile.sample(g, 7));
  fields.push_back(random_field(g, 11));
  for (const auto& f : fields) {
    const double a = sobolev_norm(f, 0.0), b = l2_norm(f);
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
    CHECK(std::abs(a * a - b * b) <= 1e-8 * std::max(1.0, b * b));
  }
}

TEST_CASE("Sobolev order range") {
  const auto g = make_grid(1.0, 16);
  RadialField f(g);
  CHECK_THROWS_AS(sobolev_norm(f, -1.01), InvalidArgument);
  CHECK_THROWS_AS(sobolev_norm(f, 2.5), InvalidArgument);
  CHECK_NOTHROW(sobolev_norm(f, -1.0));
  CHECK_NOTHROW(sobolev_norm(f, 2.0));
  CHECK(sobolev_norm(f, 0.5) == 0.0);
}

TEST_CASE("critical exponent") {
  CHECK(critical_exponent(4.0) == doctest::Approx(5.0 / 6.0));
  CHECK(critical_exponent(5.0) == doctest::Approx(1.0));
  CHECK(critical_exponent(3.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(critical_exponent(1.0), InvalidArgument);
  CHECK_THROWS_AS(critical_exponent(0.5), InvalidArgument);
  CHECK_THROWS_AS(critical_exponent(5.5), InvalidArgument);
}

TEST_CASE("rescale: identity, amplitude and time") {
  const auto g = make_grid(20.0, 2047);
  const auto st = WaveState(1.5, sample(Profile::gaussian(1.0), g), sample(Profile::gaussian(2.0), g));
  const auto same = rescale(st, 1.0, 4.0);
  CHECK(max_abs_diff(same.u, st.u) == 0.0);
  CHECK(max_abs_diff(same.ut, st.ut) == 0.0);
  CHECK(same.time == 1.5);

  // lambda = 2 maps r_i onto the grid node 2 r_i, so interpolation is exact
  const auto sc = rescale(st, 2.0, 4.0);
  CHECK(sc.time == doctest::Approx(0.75));
  for (std::size_t i = 0; 2 * i + 1 < g.n(); i += 13) {
    CHECK(sc.u.u(i) == doctest::Approx(std::pow(2.0, 2.0 / 3.0) * st.u.u(2 * i + 1)).epsilon(1e-13));
    CHECK(sc.ut.u(i) == doctest::Approx(std::pow(2.0, 5.0 / 3.0) * st.ut.u(2 * i + 1)).epsilon(1e-13));
  }
}

TEST_CASE("rescale keeps the critical norm") {
  const auto g = make_grid(20.0, 4096);
  for (const Profile& prof : {Profile::gaussian(1.0), Profile::bump(1.0, 2.0)}) {
    const auto st = WaveState::at_rest(0.0, sample(prof, g));
    for (double p : {3.5, 4.0, 4.5}) {
      const double sc = critical_exponent(p);
      const double before = sobolev_norm(st.u, sc);
      for (double lambda : {0.5, 2.0}) {
        const double after = sobolev_norm(rescale(st, lambda, p).u, sc);
        CHECK(std::abs(after - before) / before <= 1e-3);
        if (p == 4.0 && prof.kind() == Profile::Kind::Gaussian) CHECK(std::abs(after - before) / before <= 1e-4);
      }
    }
  }
}

TEST_CASE("rescale reports unresolvable targets") {
  const auto g = make_grid(10.0, 255);
  const auto st = WaveState::at_rest(0.0, sample(Profile::bump(1.0, 1.0), g));
  CHECK_THROWS_AS(rescale(st, 1000.0, 4.0), ResolutionError);
  CHECK_THROWS_AS(rescale(st, 0.05, 4.0), ResolutionError);
  CHECK_THROWS_AS(rescale(st, 0.0, 4.0), InvalidArgument);
  CHECK_THROWS_AS(rescale(st, -1.0, 4.0), InvalidArgument);
}

TEST_CASE("sharp projections: identity, partition, idempotence, bands") {
  const auto g = make_grid(20.0, 1024);
  const auto f = sample(Profile::bump(3.0, 1.0), g);
  const double scale = max_abs(f);

  const int above = static_cast<int>(std::ceil(std::log2(g.nyquist()))) + 1;
  CHECK(max_abs_diff(lp_project(f, above, LpKind::Leq), f) <= 1e-13 * scale);
  CHECK(max_abs(lp_project(f, above, LpKind::Geq)) <= 1e-13 * scale);

  for (int j = -3; j <= 8; ++j) {
    const auto lo = lp_project(f, j, LpKind::Leq);
    const auto hi = lp_project(f, j, LpKind::Geq);
    CHECK(max_abs_diff(lo + hi, f) <= 4e-16 * scale);
    CHECK(max_abs_diff(lp_project(lo, j, LpKind::Leq), lo) <= 1e-13 * scale);
    CHECK(max_abs(lp_project(hi, j, LpKind::Leq)) <= 1e-13 * scale);
    const auto band = lp_project(f, j, LpKind::Band);
    CHECK(max_abs_diff(band, lo - lp_project(f, j - 1, LpKind::Leq)) <= 1e-13 * scale);
  }
}

TEST_CASE("sharp projections commute with multipliers") {
  const auto g = make_grid(20.0, 1024);
  const auto f = sample(Profile::gaussian(4.0), g);
  const Multiplier m = [](double rho) { return std::pow(rho, 0.7) / (1.0 + rho); };
  for (int j : {-2, 0, 3}) {
    const auto a = radwave::apply(m, lp_project(f, j, LpKind::Leq));
    const auto b = lp_project(radwave::apply(m, f), j, LpKind::Leq);
    CHECK(max_abs_diff(a, b) <= 1e-13 * max_abs(a) + 1e-300);
  }
}

TEST_CASE("kernel: mass, transform and primitive against quadrature") {
  const double mass = oracle::integrate([](double r) { return 4 * M_PI * r * r * kernel_value(r); }, 0, 0.5);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kernel_hat(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kernel_value(0.6) == 0.0);
  for (double r = 0.0; r < 0.49; r += 0.01) CHECK(kernel_value(r) >= kernel_value(r + 0.01));

  for (double k : {0.1, 1.0, 5.0, 7.99, 8.0, 8.01, 15.0, 40.0, 200.0}) {
    const double q = oracle::integrate(
        [k](double r) { return 4 * M_PI * r * kernel_value(r) * std::sin(k * r) / k; }, 0, 0.5, 1e-14);
    CHECK(kernel_hat(k) == doctest::Approx(q).epsilon(1e-9).scale(1e-6));
  }
  for (double t : {0.0, 0.1, 0.25, 0.4999, 0.5, 0.8}) {
    const double q = oracle::integrate([](double s) { return s * kernel_value(s); }, 0, std::min(t, 0.5) + 1e-300);
    CHECK(kernel_primitive(t) == doctest::Approx(q).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("smoothed low pass equals the physical-space radial convolution") {
  // r (psi_l * u)(r) = 2 pi l int phi(s) [G(l(r+s)) - G(l|r-s|)] ds, integrated
  // on the analytic profile.
  const auto g = make_grid(20.0, 4096);
  const Profile prof = Profile::gaussian(1.0);
  const auto f = sample(prof, g);
  for (int j : {-1, 0, 1, 3}) {
    const double l = std::ldexp(1.0, j);
    const auto out = smooth_lowpass(f, j);
    for (std::size_t i : {0u, 50u, 200u, 400u, 800u}) {
      const double r = g.r(i);
      const double lo = std::max(0.0, r - 0.5 / l), hi = r + 0.5 / l;
      const double q = 2 * M_PI * l * oracle::integrate(
                                          [&](double s) {
                                            return s * prof(s) *
                                                   (kernel_primitive(l * (r + s)) - kernel_primitive(l * std::abs(r - s)));
                                          },
                                          lo, hi, 1e-14, 256);
      CHECK(out[i] == doctest::Approx(q).epsilon(1e-9).scale(1e-12));
    }
  }
}

TEST_CASE("smoothed projections: zero, preconditions, telescoping") {
  const auto g = make_grid(20.0, 4096);
  CHECK(max_abs(smooth_project(RadialField(g), 0)) == 0.0);
  CHECK(max_abs(smooth_project(RadialField(g), 5)) == 0.0);
  CHECK_THROWS_AS(smooth_project(RadialField(g), -1), InvalidArgument);

  const int J = static_cast<int>(std::ceil(std::log2(4.0 * g.nyquist())));
  for (const auto& e : standard_corpus(false)) {
    const auto f = e.amplitude * e.profile.sample(g, 7);
    RadialField sum(g);
    double prev = l2_norm(f);
    for (int j = 0; j <= J; ++j) {
      sum += smooth_project(f, j);
      const double res = l2_norm(f - sum);
      CHECK(res <= prev * (1.0 + 1e-12) + 1e-14);  // partial sums approach f
      prev = res;
    }
    CHECK(prev <= 1e-6 * l2_norm(f));
  }
}

TEST_CASE("smoothed low pass reproduces a constant on its plateau") {
  // u = 1 on r < 4, smooth C-infinity descent to 0 on [4, 6]
  const auto g = make_grid(20.0, 4096);
  auto step = [](double x) { return x <= 0 ? 0.0 : std::exp(-1.0 / x); };
  std::vector<double> u(g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double x = (6.0 - g.r(i)) / 2.0;
    u[i] = step(x) / (step(x) + step(1.0 - x));
  }
  const auto f = RadialField::from_u(g, u);
  const auto out = smooth_lowpass(f, 0);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double r = g.r(i);
    if (r > 0.6 && r < 3.4) CHECK(std::abs(out.u(i) - 1.0) <= 1e-10);
  }
}

TEST_CASE("projection bound uniform in j on the corpus") {
  const auto g = make_grid(20.0, 2048);
  for (const auto& e : standard_corpus(false)) {
    const auto f = e.amplitude * e.profile.sample(g, 7);
    for (double p : {3.5, 4.0, 4.5}) CHECK(lemma32_ratio_max(f, p) <= 10.0);
  }
}

TEST_CASE("series evaluation, interpolation and derivative") {
  const auto g = make_grid(12.0, 2047);
  const auto f = sample(Profile::gaussian(1.0), g);
  std::vector<double> nodes, off;
  for (std::size_t i = 0; i < g.n(); i += 97) nodes.push_back(g.r(i));
  const auto at_nodes = evaluate_series(f, nodes);
  const auto cubic = interpolate_cubic(f, nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    CHECK(oracle::near(at_nodes[k], f[k * 97], 1e-13));
    CHECK(cubic[k] == f[k * 97]);
  }
  for (double r : {0.013, 0.5003, 1.7771, 3.2}) off.push_back(r);
  const auto s = evaluate_series(f, off), c = interpolate_cubic(f, off);
  for (std::size_t k = 0; k < off.size(); ++k) {
    const double exact = off[k] * std::exp(-off[k] * off[k]);
    CHECK(oracle::near(s[k], exact, 1e-13));
    CHECK(oracle::near(c[k], exact, 1e-8));
  }
  const auto d = radial_derivative(f);
  REQUIRE(d.size() == g.n() + 2);
  CHECK(d.front() == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t k = 1; k <= g.n(); k += 101) {
    const double r = g.r(k - 1);
    CHECK(oracle::near(d[k], (1 - 2 * r * r) * std::exp(-r * r), 1e-11));
  }
}
