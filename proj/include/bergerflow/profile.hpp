#pragma once

// The radial profile: the complete state of a cohomogeneity-one metric on R^4
// sampled on a uniform cell-centered grid, together with the structural
// invariants every profile must satisfy to be geometrically meaningful.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "numerics.hpp"

namespace bergerflow {

inline constexpr double kPositivityFloor = 1e-12;  // hard floor for b and c
inline constexpr double kBergerSlack = 1e-9;       // tolerance in c <= b
inline constexpr int kMinCells = 16;

struct GridSpec {
  int n = 2048;
  double x_max = 40.0;
};

inline std::vector<double> make_grid(const GridSpec& spec) {
  if (spec.n < kMinCells) throw Error("grid: need at least 16 cells");
  if (!(spec.x_max > 0.0)) throw Error("grid: x_max must be positive");
  std::vector<double> x(static_cast<std::size_t>(spec.n));
  const double dx = spec.x_max / spec.n;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i + 0.5) * dx;
  return x;
}

/// Metric state at one instant: ds^2 = xi^2 dx^2 + b^2 (first two fiber
/// directions) + c^2 (collapsing fiber direction), sampled at cell centers.
struct RadialProfile {
  double t = 0.0;
  double dx = 0.0;
  std::vector<double> x, xi, b, c;

  std::size_t n() const { return x.size(); }
};

class ProfileError : public Error {
 public:
  ProfileError(std::string check, std::ptrdiff_t index, const std::string& what)
      : Error(what), check_(std::move(check)), index_(index) {}

  const std::string& check() const { return check_; }
  std::ptrdiff_t index() const { return index_; }

 private:
  std::string check_;
  std::ptrdiff_t index_;
};

namespace detail {

[[noreturn]] inline void fail_check(const std::string& check, std::ptrdiff_t i,
                                    const std::string& msg) {
  throw ProfileError(check, i, "profile check '" + check + "' failed at cell " +
                                   std::to_string(i) + ": " + msg);
}

/// Field-level validation shared by full profile validation and the
/// per-step acceptance test in the flow engine (where allocation-free
/// span access matters).
inline void validate_fields(std::span<const double> xi, std::span<const double> b,
                            std::span<const double> c) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(xi.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!std::isfinite(xi[i])) fail_check("finite_xi", i, "xi is not finite");
    if (!std::isfinite(b[i])) fail_check("finite_b", i, "b is not finite");
    if (!std::isfinite(c[i])) fail_check("finite_c", i, "c is not finite");
    if (!(xi[i] > 0.0)) fail_check("xi_positive", i, "xi must be positive");
    if (!(b[i] >= kPositivityFloor)) fail_check("b_floor", i, "b below positivity floor");
    if (!(c[i] >= kPositivityFloor)) fail_check("c_floor", i, "c below positivity floor");
    if (!(c[i] <= b[i] * (1.0 + kBergerSlack)))
      fail_check("berger_ordering", i, "fiber ordering c <= b violated");
  }
  // Reflection-symmetry sanity at the axis: b and c extend oddly (linear
  // extrapolation through x = 0 must change sign), xi extends evenly (the
  // first two samples of a smooth even field differ only at O(dx^2)).
  if (n >= 2) {
    if (!(2.0 * b[0] - b[1] < 0.0))
      fail_check("odd_extension_b", 0, "b is not consistent with an odd extension");
    if (!(2.0 * c[0] - c[1] < 0.0))
      fail_check("odd_extension_c", 0, "c is not consistent with an odd extension");
    if (!(std::abs(xi[1] - xi[0]) <= 0.125 * (xi[0] + xi[1])))
      fail_check("even_extension_xi", 0, "xi is not consistent with an even extension");
  }
}

}  // namespace detail

/// Full structural validation.  Throws ProfileError naming the violated check
/// and the first offending cell.
inline void validate_profile(const RadialProfile& p) {
  const std::size_t n = p.n();
  if (n < static_cast<std::size_t>(kMinCells))
    detail::fail_check("grid_size", 0, "need at least 16 cells");
  if (p.xi.size() != n || p.b.size() != n || p.c.size() != n)
    detail::fail_check("field_sizes", 0, "field arrays must match the grid");
  if (!(p.dx > 0.0)) detail::fail_check("grid_spacing", 0, "dx must be positive");
  if (!std::isfinite(p.t) || p.t < 0.0)
    detail::fail_check("time", 0, "t must be finite and nonnegative");
  const double xtol = 1e-9 * p.dx * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(p.x[i] - (i + 0.5) * p.dx) > xtol)
      detail::fail_check("cell_centered_grid", static_cast<std::ptrdiff_t>(i),
                         "x must equal (i + 1/2) dx");
  }
  detail::validate_fields(p.xi, p.b, p.c);
}

}  // namespace bergerflow
