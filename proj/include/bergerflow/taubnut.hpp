#pragma once

// Closed form of the rotationally symmetric hyperkahler metric on R^4 that
// acts as the attracting fixed point of the flow (one metric per mass
// parameter m > 0).  In its natural radial coordinate the profile functions
// are algebraic; this header also provides the exact arclength map and its
// inverse so the metric can be sampled in the arclength gauge used by the
// simulation grid.

#include <cmath>

#include "numerics.hpp"

namespace bergerflow::taubnut {

inline void require_mass(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw Error("taubnut: mass must be positive");
}

/// w(x) = 1 + 2/(m x); all profile functions are built from it.
inline double w(double m, double x) { return 1.0 + 2.0 / (m * x); }

inline double xi(double m, double x) { return 0.25 * std::sqrt(w(m, x)); }
inline double b(double m, double x) { return 0.5 * x * std::sqrt(w(m, x)); }
inline double c(double m, double x) { return 1.0 / (m * std::sqrt(w(m, x))); }

/// Fiber ratio u = c/b = 2/(m x + 2).
inline double u(double m, double x) { return 2.0 / (m * x + 2.0); }

// First s-derivatives in closed form.  These are the statements that the two
// first-order flat-connection residuals vanish identically on this metric:
// b_s = 2 - u and c_s = u^2 (cross-checked against finite differences in the
// test suite).
inline double b_s(double m, double x) { return 2.0 - u(m, x); }
inline double c_s(double m, double x) { return u(m, x) * u(m, x); }

/// Exact arclength s(x) = int_0^x xi; with a = 2/m,
/// s = (1/4) [ sqrt(x (x + a)) + a log((sqrt(x) + sqrt(x + a)) / sqrt(a)) ].
inline double arclength(double m, double x) {
  require_mass(m);
  if (x == 0.0) return 0.0;
  if (!(x > 0.0)) throw Error("taubnut: radial coordinate must be nonnegative");
  const double a = 2.0 / m;
  return 0.25 * (std::sqrt(x * (x + a)) +
                 a * std::log((std::sqrt(x) + std::sqrt(x + a)) / std::sqrt(a)));
}

/// Inverse of the arclength map (bracketed Newton iteration; the integrand
/// xi is strictly positive so s(x) is strictly increasing).
inline double x_from_arclength(double m, double s) {
  require_mass(m);
  if (s == 0.0) return 0.0;
  if (!(s > 0.0)) throw Error("taubnut: arclength must be nonnegative");
  const double a = 2.0 / m;
  // Asymptotics: x ~ 2 m s^2 near the origin, x ~ 4 s far out.
  double hi = 4.0 * s + a + 1.0;
  double lo = 0.25 * std::min(2.0 * m * s * s, 4.0 * s);
  while (arclength(m, lo) > s) lo *= 0.25;
  while (arclength(m, hi) < s) hi *= 2.0;
  const double tol = 1e-15 * std::max(1.0, s);
  return solve_monotone([&](double x) { return arclength(m, x) - s; },
                        [&](double x) { return xi(m, x); }, lo, hi, tol);
}

inline double b_of_s(double m, double s) { return b(m, x_from_arclength(m, s)); }
inline double c_of_s(double m, double s) { return c(m, x_from_arclength(m, s)); }

}  // namespace bergerflow::taubnut
