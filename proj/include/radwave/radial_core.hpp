#pragma once

// Radial grids and fields. A radial function u(r) on R^3 is stored through
// its profile phi(r) = r * u(r) on the interior points r_k = k h, k = 1..n,
// with phi(0) = phi(r_max) = 0 implied. The radial Laplacian becomes phi_rr.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace radwave {

class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n);

  double r_max() const noexcept { return r_max_; }
  std::size_t n() const noexcept { return n_; }
  double h() const noexcept { return h_; }
  /// r_k for k = 1..n; index 0 of the storage arrays is k = 1.
  double r(std::size_t idx) const noexcept { return h_ * static_cast<double>(idx + 1); }
  /// Largest resolved radial frequency n*pi/r_max.
  double nyquist() const noexcept;

  friend bool operator==(const RadialGrid& a, const RadialGrid& b) noexcept {
    return a.r_max_ == b.r_max_ && a.n_ == b.n_;
  }

 private:
  double r_max_;
  std::size_t n_;
  double h_;
};

RadialGrid make_grid(double r_max, std::size_t n);

class RadialField {
 public:
  explicit RadialField(RadialGrid grid);
  RadialField(RadialGrid grid, std::vector<double> phi);

  static RadialField from_u(RadialGrid grid, std::span<const double> u);

  const RadialGrid& grid() const noexcept { return grid_; }
  std::span<const double> phi() const noexcept { return phi_; }
  std::span<double> phi() noexcept { return phi_; }
  double operator[](std::size_t i) const noexcept { return phi_[i]; }
  double& operator[](std::size_t i) noexcept { return phi_[i]; }
  std::size_t size() const noexcept { return phi_.size(); }

  /// u(r_k) = phi_k / r_k.
  double u(std::size_t i) const noexcept { return phi_[i] / grid_.r(i); }
  std::vector<double> u_values() const;

  RadialField& operator+=(const RadialField& o);
  RadialField& operator-=(const RadialField& o);
  RadialField& operator*=(double s);

 private:
  RadialGrid grid_;
  std::vector<double> phi_;
};

RadialField operator+(RadialField a, const RadialField& b);
RadialField operator-(RadialField a, const RadialField& b);
RadialField operator*(double s, RadialField a);

struct WaveState {
  double time = 0.0;
  RadialField u;
  RadialField ut;

  WaveState(double t, RadialField u_, RadialField ut_);
  static WaveState at_rest(double t, RadialField u_);
  const RadialGrid& grid() const noexcept { return u.grid(); }
};

/// Analytic radial test data.
///   gaussian(a):     u = e^{-a r^2}
///   bump(a, b):      u = a exp(1 - 1/(1 - (r/b)^2)) for r < b, zero beyond
///   polydecay(a, m): u = a (1 + r^2)^{-m/2}, m > 3/2
class Profile {
 public:
  enum class Kind { Gaussian, Bump, Polydecay };

  static Profile gaussian(double a);
  static Profile bump(double a, double b);
  static Profile polydecay(double a, double m);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double operator()(double r) const;
  /// Radius outside of which |u| stays below tol * |u(0)|; exact for bumps.
  double support_radius(double tol = 1e-14) const;
  std::string describe() const;

 private:
  Profile(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

RadialField sample(const Profile& profile, const RadialGrid& grid);

/// u(0) by quadratic extrapolation of phi/r: 2 phi_1/r_1 - phi_2/r_2.
double eval_u_at_origin(const RadialField& f);

/// Largest r_k at which |phi| exceeds tol * max|phi|, or 0 for the zero field.
double support_radius(const RadialField& f, double tol = 1e-14);

/// Trapezoid rule on [0, r_max] for an integrand given at interior points;
/// the end values are taken as zero.
double trapezoid(std::span<const double> values, double h);

/// ||u||_{L^2(R^3)} from 4 pi * trapezoid(phi^2).
double l2_norm(const RadialField& f);

/// Parses one CSV cell. Unlike std::stod this accepts subnormal values; throws
/// InvalidArgument when the cell is not a number.
double parse_number(const std::string& cell);

/// CSV with header `r,phi`, one row per grid point, 17 significant digits.
void write_csv(std::ostream& os, const RadialField& f);
RadialField read_csv(std::istream& is);

}  // namespace radwave
