#include "radwave/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "radwave/errors.hpp"

namespace radwave {
namespace {

constexpr double kPi = std::numbers::pi;
// c = 315 / (8 pi) normalizes (1 - 4 r^2)^3 on the ball of radius 1/2.
constexpr double kKernelNorm = 315.0 / (8.0 * kPi);

// FFTW's planner is not thread-safe; execution on fresh arrays is. Plans are
// built once per (kind, size) under the lock and reused with
// fftw_execute_r2r. FFTW_ESTIMATE keeps the chosen algorithm identical
// across runs.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(fftw_r2r_kind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(static_cast<int>(kind), n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    double* out = fftw_alloc_real(n);
    fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(n), in, out, kind,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, std::size_t>, fftw_plan> plans_;
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

// Unnormalized DST-I: y_k = 2 sum_j x_j sin(pi (j+1)(k+1) / (n+1)).
void rodft00(std::span<const double> in, std::span<double> out) {
  fftw_plan plan = plans().get(FFTW_RODFT00, in.size());
  fftw_execute_r2r(plan, const_cast<double*>(in.data()), out.data());
}

void redft00(std::span<const double> in, std::span<double> out) {
  fftw_plan plan = plans().get(FFTW_REDFT00, in.size());
  fftw_execute_r2r(plan, const_cast<double*>(in.data()), out.data());
}

// sum_{m=1}^{n} c_m sin(m theta) by Clenshaw's recurrence.
double sine_series(std::span<const double> c, double theta) {
  const double two_cos = 2.0 * std::cos(theta);
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t m = c.size(); m-- > 0;) {
    const double b0 = c[m] + two_cos * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return b1 * std::sin(theta);
}

}  // namespace

std::vector<double> interpolate_cubic(const RadialField& f, std::span<const double> radii) {
  const RadialGrid& g = f.grid();
  const auto n = static_cast<std::ptrdiff_t>(g.n());
  // phi at grid index k (r = k h), extended oddly through r = 0 and by zero
  // beyond r_max.
  const auto at = [&](std::ptrdiff_t k) -> double {
    if (k == 0 || k >= n + 1 || k <= -(n + 1)) return 0.0;
    if (k < 0) return -f[static_cast<std::size_t>(-k - 1)];
    return f[static_cast<std::size_t>(k - 1)];
  };
  std::vector<double> out(radii.size(), 0.0);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = radii[i] / g.h();
    if (x <= 0.0 || x >= static_cast<double>(n + 1)) continue;
    const auto k = static_cast<std::ptrdiff_t>(std::floor(x));
    const double t = x - static_cast<double>(k);
    // Four-point Lagrange weights on nodes k-1, k, k+1, k+2.
    const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    out[i] = w0 * at(k - 1) + w1 * at(k) + w2 * at(k + 1) + w3 * at(k + 2);
  }
  return out;
}

double SpectralField::frequency(std::size_t i) const noexcept {
  return static_cast<double>(i + 1) * kPi / grid.r_max();
}

SpectralField dst(const RadialField& f) {
  const std::size_t n = f.size();
  SpectralField s{f.grid(), std::vector<double>(n)};
  rodft00(f.phi(), s.coeff);
  const double scale = 1.0 / static_cast<double>(n + 1);
  for (double& c : s.coeff) c *= scale;
  return s;
}

RadialField idst(const SpectralField& s) {
  std::vector<double> phi(s.coeff.size());
  rodft00(s.coeff, phi);
  for (double& v : phi) v *= 0.5;
  return RadialField(s.grid, std::move(phi));
}

SpectralField apply(const Multiplier& m, SpectralField s) {
  for (std::size_t i = 0; i < s.coeff.size(); ++i) s.coeff[i] *= m(s.frequency(i));
  return s;
}

RadialField apply(const Multiplier& m, const RadialField& f) { return idst(apply(m, dst(f))); }

double sobolev_norm(const RadialField& f, double s) {
  if (!(s >= -1.0 && s <= 2.0)) throw InvalidArgument("sobolev_norm: s must lie in [-1, 2]");
  const SpectralField sp = dst(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < sp.coeff.size(); ++i) {
    const double c = sp.coeff[i];
    if (c == 0.0) continue;
    acc += std::pow(sp.frequency(i), 2.0 * s) * c * c;
  }
  // Parseval weight: 4 pi * (r_max / 2) matches 4 pi * trapezoid(phi^2).
  return std::sqrt(2.0 * kPi * f.grid().r_max() * acc);
}

double critical_exponent(double p) {
  if (!(p > 1.0 && p <= 5.0)) throw InvalidArgument("critical_exponent: p must lie in (1, 5]");
  return 1.5 - 2.0 / (p - 1.0);
}

WaveState rescale(const WaveState& state, double lambda, double p) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("rescale: lambda must be positive");
  }
  if (!(p > 1.0)) throw InvalidArgument("rescale: p must exceed 1");
  if (lambda == 1.0) return state;

  const RadialGrid& grid = state.grid();
  const double support = std::max(support_radius(state.u, 1e-12), support_radius(state.ut, 1e-12));
  if (support > 0.0) {
    const double scaled = support / lambda;
    if (scaled < 4.0 * grid.h()) {
      throw ResolutionError("rescale: rescaled support falls below 4 grid points");
    }
    if (scaled >= grid.r_max()) {
      throw ResolutionError("rescale: rescaled support exceeds the domain");
    }
  }

  const double alpha = 2.0 / (p - 1.0);
  std::vector<double> radii(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) radii[i] = lambda * grid.r(i);

  std::vector<double> phi = interpolate_cubic(state.u, radii);
  std::vector<double> phit = interpolate_cubic(state.ut, radii);
  const double amp_u = std::pow(lambda, alpha - 1.0);
  const double amp_ut = std::pow(lambda, alpha);
  for (double& v : phi) v *= amp_u;
  for (double& v : phit) v *= amp_ut;
  return WaveState(state.time / lambda, RadialField(grid, std::move(phi)),
                   RadialField(grid, std::move(phit)));
}

RadialField lp_project(const RadialField& f, int j, LpKind kind) {
  const double cut = std::ldexp(1.0, j);
  const auto leq = [&](const RadialField& g) {
    return apply([cut](double rho) { return rho <= cut ? 1.0 : 0.0; }, g);
  };
  switch (kind) {
    case LpKind::Leq:
      return leq(f);
    case LpKind::Geq:
      // Complement in physical space so that Leq + Geq reproduces f to one rounding.
      return f - leq(f);
    case LpKind::Band: {
      const double lo = 0.5 * cut;
      return apply([lo, cut](double rho) { return (rho > lo && rho <= cut) ? 1.0 : 0.0; }, f);
    }
  }
  return f;
}

double kernel_value(double r) {
  if (r > 0.5) return 0.0;
  const double q = 1.0 - 4.0 * r * r;
  return kKernelNorm * q * q * q;
}

double kernel_hat(double k) {
  k = std::abs(k);
  if (k <= 8.0) {
    // Taylor series in k: sum_n (-1)^n k^{2n} / (2n+1)! * int |x|^{2n} psi dx.
    // The moments are 4 pi c 2^{-(2n+3)} * 3 / ((n+3/2)(n+5/2)(n+7/2)(n+9/2)).
    const double q = 0.25 * k * k;  // (k/2)^2
    double power = 1.0;             // (k/2)^{2n} / (2n+1)!
    double sum = 0.0;
    for (int n = 0; n < 80; ++n) {
      const double dn = n;
      const double moment = 4.0 * kPi * kKernelNorm * 0.125 * 3.0 /
                            ((dn + 1.5) * (dn + 2.5) * (dn + 3.5) * (dn + 4.5));
      const double term = power * moment;
      sum += (n % 2 == 0) ? term : -term;
      if (term < 1e-18 * std::abs(sum)) break;
      power *= q / ((2.0 * dn + 2.0) * (2.0 * dn + 3.0));
    }
    return sum;
  }
  const double s = std::sin(0.5 * k), c = std::cos(0.5 * k);
  const double k2 = k * k;
  const double num = k2 * k2 * s + 20.0 * k2 * k * c - 180.0 * k2 * s - 840.0 * k * c + 1680.0 * s;
  return 30240.0 * num / (k2 * k2 * k2 * k2 * k);
}

double kernel_primitive(double t) {
  t = std::min(std::abs(t), 0.5);
  const double t2 = t * t;
  return (315.0 / kPi) * t2 * (1.0 / 16.0 + t2 * (-3.0 / 8.0 + t2 * (1.0 - t2)));
}

RadialField smooth_lowpass(const RadialField& f, int j) {
  const double scale = std::ldexp(1.0, -j);
  return apply([scale](double rho) { return kernel_hat(rho * scale); }, f);
}

RadialField smooth_project(const RadialField& f, int j) {
  if (j < 0) throw InvalidArgument("smooth_project: j must be non-negative");
  if (j == 0) return smooth_lowpass(f, 0);
  const double fine = std::ldexp(1.0, -j);
  const double coarse = 2.0 * fine;
  return apply([=](double rho) { return kernel_hat(rho * fine) - kernel_hat(rho * coarse); }, f);
}

std::vector<double> radial_derivative(const RadialField& f) {
  const SpectralField s = dst(f);
  const std::size_t n = s.coeff.size();
  std::vector<double> x(n + 2, 0.0), y(n + 2);
  for (std::size_t i = 0; i < n; ++i) x[i + 1] = s.coeff[i] * s.frequency(i);
  redft00(x, y);
  for (double& v : y) v *= 0.5;
  return y;
}

std::vector<double> evaluate_series(const RadialField& f, std::span<const double> radii) {
  const SpectralField s = dst(f);
  const double L = f.grid().r_max();
  std::vector<double> out(radii.size(), 0.0);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = radii[i];
    if (x <= 0.0 || x >= L) continue;
    out[i] = sine_series(s.coeff, kPi * x / L);
  }
  return out;
}

}  // namespace radwave
