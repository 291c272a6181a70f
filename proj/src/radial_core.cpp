#include "radwave/radial_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "radwave/errors.hpp"

namespace radwave {

RadialGrid::RadialGrid(double r_max, std::size_t n) : r_max_(r_max), n_(n), h_(0.0) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InvalidArgument("make_grid: r_max must be positive and finite");
  }
  if (n < 8) throw InvalidArgument("make_grid: n must be at least 8");
  h_ = r_max / static_cast<double>(n + 1);
}

double RadialGrid::nyquist() const noexcept {
  return static_cast<double>(n_) * std::numbers::pi / r_max_;
}

RadialGrid make_grid(double r_max, std::size_t n) { return RadialGrid(r_max, n); }

RadialField::RadialField(RadialGrid grid) : grid_(grid), phi_(grid.n(), 0.0) {}

RadialField::RadialField(RadialGrid grid, std::vector<double> phi)
    : grid_(grid), phi_(std::move(phi)) {
  if (phi_.size() != grid_.n()) {
    throw InvalidArgument("RadialField: sample count does not match grid");
  }
  for (double v : phi_) {
    if (!std::isfinite(v)) throw NumericError("RadialField: non-finite sample");
  }
}

RadialField RadialField::from_u(RadialGrid grid, std::span<const double> u) {
  if (u.size() != grid.n()) throw InvalidArgument("from_u: sample count does not match grid");
  std::vector<double> phi(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) phi[i] = grid.r(i) * u[i];
  return RadialField(grid, std::move(phi));
}

std::vector<double> RadialField::u_values() const {
  std::vector<double> out(phi_.size());
  for (std::size_t i = 0; i < phi_.size(); ++i) out[i] = u(i);
  return out;
}

RadialField& RadialField::operator+=(const RadialField& o) {
  if (!(grid_ == o.grid_)) throw InvalidArgument("RadialField: grid mismatch");
  for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] += o.phi_[i];
  return *this;
}

RadialField& RadialField::operator-=(const RadialField& o) {
  if (!(grid_ == o.grid_)) throw InvalidArgument("RadialField: grid mismatch");
  for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] -= o.phi_[i];
  return *this;
}

RadialField& RadialField::operator*=(double s) {
  for (double& v : phi_) v *= s;
  return *this;
}

RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
RadialField operator*(double s, RadialField a) { return a *= s; }

WaveState::WaveState(double t, RadialField u_, RadialField ut_)
    : time(t), u(std::move(u_)), ut(std::move(ut_)) {
  if (!(u.grid() == ut.grid())) throw InvalidArgument("WaveState: u and ut grids differ");
  if (!std::isfinite(time)) throw InvalidArgument("WaveState: time must be finite");
}

WaveState WaveState::at_rest(double t, RadialField u_) {
  RadialField zero(u_.grid());
  return WaveState(t, std::move(u_), std::move(zero));
}

Profile Profile::gaussian(double a) {
  if (!(a > 0.0)) throw InvalidArgument("gaussian: a must be positive");
  return Profile(Kind::Gaussian, a, 0.0);
}

Profile Profile::bump(double a, double b) {
  if (!std::isfinite(a)) throw InvalidArgument("bump: amplitude must be finite");
  if (!(b > 0.0)) throw InvalidArgument("bump: radius must be positive");
  return Profile(Kind::Bump, a, b);
}

Profile Profile::polydecay(double a, double m) {
  if (!std::isfinite(a)) throw InvalidArgument("polydecay: amplitude must be finite");
  if (!(m > 1.5)) throw InvalidArgument("polydecay: m must exceed 3/2 for u in L^2");
  return Profile(Kind::Polydecay, a, m);
}

double Profile::operator()(double r) const {
  switch (kind_) {
    case Kind::Gaussian:
      return std::exp(-a_ * r * r);
    case Kind::Bump: {
      const double x = r / b_;
      if (x >= 1.0) return 0.0;
      return a_ * std::exp(1.0 - 1.0 / (1.0 - x * x));
    }
    case Kind::Polydecay:
      return a_ * std::pow(1.0 + r * r, -0.5 * b_);
  }
  return 0.0;
}

double Profile::support_radius(double tol) const {
  switch (kind_) {
    case Kind::Gaussian:
      return std::sqrt(-std::log(tol) / a_);
    case Kind::Bump:
      return b_;
    case Kind::Polydecay:
      // (1 + r^2)^{-m/2} = tol
      return std::sqrt(std::pow(tol, -2.0 / b_) - 1.0);
  }
  return 0.0;
}

std::string Profile::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  switch (kind_) {
    case Kind::Gaussian: os << "gaussian(" << a_ << ")"; break;
    case Kind::Bump: os << "bump(" << a_ << "," << b_ << ")"; break;
    case Kind::Polydecay: os << "polydecay(" << a_ << "," << b_ << ")"; break;
  }
  return os.str();
}

RadialField sample(const Profile& profile, const RadialGrid& grid) {
  std::vector<double> phi(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double r = grid.r(i);
    const double v = r * profile(r);
    if (!std::isfinite(v)) throw NumericError("sample: profile produced a non-finite value");
    phi[i] = v;
  }
  return RadialField(grid, std::move(phi));
}

double eval_u_at_origin(const RadialField& f) {
  const auto& g = f.grid();
  const double v = 2.0 * f[0] / g.r(0) - f[1] / g.r(1);
  if (!std::isfinite(v)) throw NumericError("eval_u_at_origin: non-finite value");
  return v;
}

double support_radius(const RadialField& f, double tol) {
  double peak = 0.0;
  for (double v : f.phi()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  for (std::size_t i = f.size(); i-- > 0;) {
    if (std::abs(f[i]) > tol * peak) return f.grid().r(i);
  }
  return 0.0;
}

double trapezoid(std::span<const double> values, double h) {
  double s = 0.0;
  for (double v : values) s += v;
  return h * s;
}

double l2_norm(const RadialField& f) {
  double s = 0.0;
  for (double v : f.phi()) s += v * v;
  return std::sqrt(4.0 * std::numbers::pi * f.grid().h() * s);
}

void write_csv(std::ostream& os, const RadialField& f) {
  os << "r,phi\n" << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i) os << f.grid().r(i) << ',' << f[i] << '\n';
}

double parse_number(const std::string& cell) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  while (end && (*end == ' ' || *end == '\r')) ++end;
  if (end == begin || *end != '\0') throw InvalidArgument("csv: `" + cell + "` is not a number");
  return x;
}

RadialField read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "r,phi") {
    throw InvalidArgument("read_csv: expected header `r,phi`");
  }
  std::vector<double> r, phi;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("read_csv: malformed row");
    r.push_back(parse_number(line.substr(0, comma)));
    phi.push_back(parse_number(line.substr(comma + 1)));
  }
  if (r.size() < 8) throw InvalidArgument("read_csv: too few rows");
  const double h = r.front();
  RadialGrid grid(h * static_cast<double>(r.size() + 1), r.size());
  return RadialField(grid, std::move(phi));
}

}  // namespace radwave
