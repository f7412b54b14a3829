#pragma once

// Pointwise geometry of a radial profile: arclength derivatives, the full
// curvature tensor in the orthonormal invariant frame, Ricci components,
// the two first-order flat-connection residuals, and resampling onto
// prescribed arclength values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "profile.hpp"

namespace bergerflow {

/// Differencing scheme used by all diagnostic (non-evolution) derivative
/// evaluations: fourth order in the interior, second order at the two
/// outermost cells.
inline constexpr Stencil kDiagnosticStencil = Stencil::fourth;

struct DerivedFields {
  std::vector<double> s;     // arclength of each cell center
  std::vector<double> u;     // fiber ratio c/b
  std::vector<double> b_s, c_s, b_ss, c_ss;
  std::vector<double> H;     // mean curvature of the orbits, 2 b_s/b + c_s/c
};

/// Arclength derivatives of the profile.  d/ds = xi^{-1} d/dx; second
/// derivatives are formed by two first-derivative passes so that each pass
/// can use the correct reflection parity (b, c odd; b_s, c_s even).
inline DerivedFields derived_fields(const RadialProfile& p,
                                    Stencil scheme = kDiagnosticStencil) {
  const std::size_t n = p.n();
  if (p.xi.size() != n || p.b.size() != n || p.c.size() != n)
    detail::fail_check("field_sizes", 0, "field arrays must match the grid");
  detail::validate_fields(p.xi, p.b, p.c);

  DerivedFields df;
  df.s = arclength_from_xi(p.xi, p.dx);
  df.u.resize(n);
  df.b_s.resize(n);
  df.c_s.resize(n);
  df.b_ss.resize(n);
  df.c_ss.resize(n);
  df.H.resize(n);

  std::vector<double> tmp(n);
  dx_cell(p.b, p.dx, Parity::odd, scheme, tmp);
  for (std::size_t i = 0; i < n; ++i) df.b_s[i] = tmp[i] / p.xi[i];
  dx_cell(p.c, p.dx, Parity::odd, scheme, tmp);
  for (std::size_t i = 0; i < n; ++i) df.c_s[i] = tmp[i] / p.xi[i];
  dx_cell(df.b_s, p.dx, Parity::even, scheme, tmp);
  for (std::size_t i = 0; i < n; ++i) df.b_ss[i] = tmp[i] / p.xi[i];
  dx_cell(df.c_s, p.dx, Parity::even, scheme, tmp);
  for (std::size_t i = 0; i < n; ++i) df.c_ss[i] = tmp[i] / p.xi[i];
  for (std::size_t i = 0; i < n; ++i) {
    df.u[i] = p.c[i] / p.b[i];
    df.H[i] = 2.0 * df.b_s[i] / p.b[i] + df.c_s[i] / p.c[i];
  }
  return df;
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------
//
// Orthonormal frame: e0 radial, e1/e2 the two equal fiber directions, e3 the
// collapsing fiber direction.  By invariance the curvature operator has five
// independent entries; k02 = k01 and k23 = k13 always.

struct CurvaturePoint {
  double k01, k03, k12, k13, rm0123, R, mag;
};

inline CurvaturePoint curvature_point(double b, double c, double b_s, double c_s,
                                      double b_ss, double c_ss) {
  if (!(b >= kPositivityFloor) || !(c >= kPositivityFloor))
    throw Error("curvature: b and c must stay above the positivity floor");
  const double u = c / b;
  const double b2 = b * b;
  CurvaturePoint q;
  q.k01 = -b_ss / b;
  q.k03 = -c_ss / c;
  q.k12 = (4.0 - 3.0 * u * u - b_s * b_s) / b2;
  q.k13 = (u * u - b_s * c_s / u) / b2;
  q.rm0123 = (c_s - b_s * u) / b2;
  q.R = 2.0 * (2.0 * q.k01 + q.k03 + q.k12 + 2.0 * q.k13);
  q.mag = std::max({std::abs(q.k01), std::abs(q.k03), std::abs(q.k12),
                    std::abs(q.k13), std::abs(q.rm0123)});
  return q;
}

struct CurvatureField {
  std::vector<double> k01, k03, k12, k13, rm0123, R, mag;

  double k02(std::size_t i) const { return k01[i]; }
  double k23(std::size_t i) const { return k13[i]; }
  double sup_mag() const { return mag.empty() ? 0.0 : *std::max_element(mag.begin(), mag.end()); }
};

inline CurvatureField curvature_field(const RadialProfile& p, const DerivedFields& df) {
  const std::size_t n = p.n();
  CurvatureField cf;
  cf.k01.resize(n);
  cf.k03.resize(n);
  cf.k12.resize(n);
  cf.k13.resize(n);
  cf.rm0123.resize(n);
  cf.R.resize(n);
  cf.mag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CurvaturePoint q =
        curvature_point(p.b[i], p.c[i], df.b_s[i], df.c_s[i], df.b_ss[i], df.c_ss[i]);
    cf.k01[i] = q.k01;
    cf.k03[i] = q.k03;
    cf.k12[i] = q.k12;
    cf.k13[i] = q.k13;
    cf.rm0123[i] = q.rm0123;
    cf.R[i] = q.R;
    cf.mag[i] = q.mag;
  }
  return cf;
}

inline CurvatureField curvature_field(const RadialProfile& p) {
  return curvature_field(p, derived_fields(p));
}

/// Diagonal Ricci components in the same orthonormal frame.
struct RicciField {
  std::vector<double> ric_ss, ric_11, ric_33;

  double ric_22(std::size_t i) const { return ric_11[i]; }
};

inline RicciField ricci_in_frame(const CurvatureField& cf) {
  const std::size_t n = cf.k01.size();
  RicciField r;
  r.ric_ss.resize(n);
  r.ric_11.resize(n);
  r.ric_33.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.ric_ss[i] = 2.0 * cf.k01[i] + cf.k03[i];
    r.ric_11[i] = cf.k01[i] + cf.k12[i] + cf.k13[i];
    r.ric_33[i] = cf.k03[i] + 2.0 * cf.k13[i];
  }
  return r;
}

/// First-order residuals whose simultaneous vanishing characterizes the
/// hyperkahler fixed points: j1 = c_s - u^2 and j2 = b_s + u - 2.
struct FlatConnectionResiduals {
  std::vector<double> j1, j2;
};

inline FlatConnectionResiduals hyperkahler_residuals(const DerivedFields& df) {
  const std::size_t n = df.u.size();
  FlatConnectionResiduals r;
  r.j1.resize(n);
  r.j2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.j1[i] = df.c_s[i] - df.u[i] * df.u[i];
    r.j2[i] = df.b_s[i] + df.u[i] - 2.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Arclength resampling
// ---------------------------------------------------------------------------

struct ResampledProfile {
  std::vector<double> s, b, c;
};

/// Interpolate b and c at prescribed arclength values with a monotone cubic
/// through the cell samples plus the exact axis point (s, b, c) = (0, 0, 0).
/// Targets must lie inside [0, s_max]; out-of-range queries are rejected with
/// the available range in the message.
inline ResampledProfile resample_to_arclength(const RadialProfile& p,
                                              const DerivedFields& df,
                                              std::vector<double> targets) {
  const std::size_t n = p.n();
  const double s_max = df.s[n - 1];
  for (double s : targets) {
    if (!std::isfinite(s) || s < 0.0 || s > s_max)
      throw Error("resample: target arclength " + std::to_string(s) +
                  " outside available range [0, " + std::to_string(s_max) + "]");
  }
  std::vector<double> knots(n + 1, 0.0), bk(n + 1, 0.0), ck(n + 1, 0.0);
  std::copy(df.s.begin(), df.s.end(), knots.begin() + 1);
  std::copy(p.b.begin(), p.b.end(), bk.begin() + 1);
  std::copy(p.c.begin(), p.c.end(), ck.begin() + 1);
  const MonotoneCubic fb(knots, bk);
  const MonotoneCubic fc(std::move(knots), std::move(ck));
  ResampledProfile out;
  out.s = std::move(targets);
  out.b.resize(out.s.size());
  out.c.resize(out.s.size());
  for (std::size_t i = 0; i < out.s.size(); ++i) {
    out.b[i] = fb(out.s[i]);
    out.c[i] = fc(out.s[i]);
  }
  return out;
}

inline ResampledProfile resample_to_arclength(const RadialProfile& p,
                                              std::vector<double> targets) {
  return resample_to_arclength(p, derived_fields(p), std::move(targets));
}

}  // namespace bergerflow
