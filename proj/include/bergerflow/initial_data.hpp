#pragma once

// Constructors for the admissible families of initial data, plus the
// classifier that decides from a bare profile which family structure it
// exhibits (asymptotically flat with positive or zero mass, polynomially
// collapsing with exponent k, or inadmissible).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "numerics.hpp"
#include "profile.hpp"
#include "taubnut.hpp"

namespace bergerflow {

// Classification thresholds (shared by the classifier and its tests).
inline constexpr double kAfMinDecayExponent = 2.2;   // fitted |Rm| ~ s^-p gate
inline constexpr double kUnboundedCsThreshold = 0.5; // outer c_s above this => c unbounded
inline constexpr double kPlateauOscMax = 0.2;        // relative oscillation gate for k fit
inline constexpr double kCurvatureFloor = 1e-12;     // |Rm| below this is numerical zero
inline constexpr double kOriginSlackFactor = 10.0;   // origin slope tolerance, times dx^2

namespace detail {

/// Linear extrapolation of a cell-centered field to the axis x = 0.
inline double axis_value(const std::vector<double>& f) {
  return 1.5 * f[0] - 0.5 * f[1];
}

/// Constructors must produce profiles whose fiber derivatives approach 1 at
/// the axis (smooth closing of the orbits).  Checked with the second-order
/// extrapolation margin 10 dx^2.
inline void check_origin_smoothness(const RadialProfile& p) {
  const DerivedFields df = derived_fields(p, Stencil::second);
  const double slack = kOriginSlackFactor * p.dx * p.dx;
  const double eb = std::abs(axis_value(df.b_s) - 1.0);
  const double ec = std::abs(axis_value(df.c_s) - 1.0);
  if (eb > slack)
    throw ProfileError("origin_smoothness", 0,
                       "b_s does not extrapolate to 1 at the axis (deficit " +
                           std::to_string(eb) + ", allowed " + std::to_string(slack) + ")");
  if (ec > slack)
    throw ProfileError("origin_smoothness", 0,
                       "c_s does not extrapolate to 1 at the axis (deficit " +
                           std::to_string(ec) + ", allowed " + std::to_string(slack) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// The hyperkahler fixed-point metric of mass m, sampled in the arclength
/// gauge (xi = 1): the grid coordinate x is geodesic distance from the
/// axis.  The mass range is limited by the origin-smoothness margin, which
/// bounds the dimensionless curvature-at-axis combination m^2 dx^2 / dx^2.
inline RadialProfile taubnut_profile(double m, const GridSpec& grid = {}) {
  taubnut::require_mass(m);
  RadialProfile p;
  p.x = make_grid(grid);
  p.dx = grid.x_max / grid.n;
  p.xi.assign(p.x.size(), 1.0);
  p.b.resize(p.x.size());
  p.c.resize(p.x.size());
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double xr = taubnut::x_from_arclength(m, p.x[i]);
    p.b[i] = taubnut::b(m, xr);
    p.c[i] = taubnut::c(m, xr);
  }
  validate_profile(p);
  detail::check_origin_smoothness(p);
  return p;
}

/// Flat R^4 written with round fibers: b = c = x, xi = 1.
inline RadialProfile flat_profile(const GridSpec& grid = {}) {
  RadialProfile p;
  p.x = make_grid(grid);
  p.dx = grid.x_max / grid.n;
  p.xi.assign(p.x.size(), 1.0);
  p.b = p.x;
  p.c = p.x;
  validate_profile(p);
  detail::check_origin_smoothness(p);
  return p;
}

/// Nonnegatively curved initial data: b = x and c(x) = int_0^x dy/(1 + y^4),
/// evaluated by per-cell Simpson quadrature (error O(dx^5) per cell).  The
/// fiber length c approaches pi/(2 sqrt 2), so the profile carries positive
/// mass about 0.9003.
inline RadialProfile sec_nonneg_profile(const GridSpec& grid = {}) {
  RadialProfile p;
  p.x = make_grid(grid);
  p.dx = grid.x_max / grid.n;
  p.xi.assign(p.x.size(), 1.0);
  p.b = p.x;
  p.c.resize(p.x.size());
  auto f = [](double y) { return 1.0 / (1.0 + y * y * y * y); };
  double acc = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    acc += simpson(f, prev, p.x[i], 2);
    prev = p.x[i];
    p.c[i] = acc;
  }
  validate_profile(p);
  detail::check_origin_smoothness(p);
  return p;
}

/// Polynomially collapsing family: c = tanh(m x)/m saturates at 1/m while
/// b = x (1 + x^2)^{-k/(2(k+1))} grows like x^{1/(k+1)}, so the collapse
/// ratio u decays like b^{-k} with a plateau in b_s u^{-k}.  Requires
/// c <= b throughout, which near the axis means m^2/3 >= k/(2(k+1)).
inline RadialProfile gk_profile(double k, double m, const GridSpec& grid = {}) {
  if (!(k >= 0.0 && k < 1.0) || !std::isfinite(k))
    throw Error("gk_profile: exponent k must lie in [0, 1)");
  taubnut::require_mass(m);
  RadialProfile p;
  p.x = make_grid(grid);
  p.dx = grid.x_max / grid.n;
  p.xi.assign(p.x.size(), 1.0);
  p.b.resize(p.x.size());
  p.c.resize(p.x.size());
  const double alpha = k / (2.0 * (k + 1.0));
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double x = p.x[i];
    p.b[i] = x * std::pow(1.0 + x * x, -alpha);
    p.c[i] = std::tanh(m * x) / m;
  }
  validate_profile(p);
  detail::check_origin_smoothness(p);

  const DerivedFields df = derived_fields(p);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (!(df.b_s[i] > 0.0))
      throw ProfileError("monotone_b", static_cast<std::ptrdiff_t>(i),
                         "gk_profile: b must be strictly increasing");
    // c saturates to its ceiling within double precision, so the tail
    // derivative degenerates to exact zeros; only genuine decreases fail.
    if (!(df.c_s[i] > -1e-12))
      throw ProfileError("monotone_c", static_cast<std::ptrdiff_t>(i),
                         "gk_profile: c must be nondecreasing");
  }
  // Plateau sanity: b_s u^{-k} must level off across the outer half.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<double> vals;
  for (std::size_t i = p.x.size() / 2; i < p.x.size(); ++i) {
    const double v = df.b_s[i] * std::pow(df.u[i], -k);
    vals.push_back(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
  const double med = vals[vals.size() / 2];
  if (!((hi - lo) / med < kPlateauOscMax))
    throw ProfileError("bs_uk_plateau", static_cast<std::ptrdiff_t>(p.x.size() / 2),
                       "gk_profile: b_s u^-k oscillates more than 20% over the outer half");
  return p;
}

enum class AfMode { zero_mass, positive_mass };

/// Asymptotically flat data.  zero_mass: the round family b = c =
/// x (1 + delta x^2 exp(-x^2)); positive_mass: the fixed-point metric of mass
/// m with fibers rescaled by 1 + delta x^2 exp(-x^2) (delta = 0 reproduces
/// taubnut_profile exactly).  The bump profile vanishes to second order at
/// the axis so the smooth-closing conditions survive, and delta <= 0.2 keeps
/// both fibers strictly increasing.
inline RadialProfile af_profile(AfMode mode, double m, double delta,
                                const GridSpec& grid = {}) {
  if (!(delta >= 0.0 && delta <= 0.2) || !std::isfinite(delta))
    throw Error("af_profile: delta must lie in [0, 0.2]");
  RadialProfile p = (mode == AfMode::zero_mass) ? flat_profile(grid)
                                                : taubnut_profile(m, grid);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double x = p.x[i];
    const double bump = 1.0 + delta * x * x * std::exp(-x * x);
    p.b[i] *= bump;
    p.c[i] *= bump;
  }
  validate_profile(p);
  detail::check_origin_smoothness(p);
  const DerivedFields df = derived_fields(p);
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (!(df.b_s[i] > -1e-12) || !(df.c_s[i] > -1e-12))
      throw ProfileError("monotone_fibers", static_cast<std::ptrdiff_t>(i),
                         "af_profile: fibers must stay nondecreasing");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct ClassReport {
  enum class Verdict { af_positive_mass, af_zero_mass, gk, inadmissible };

  Verdict verdict = Verdict::inadmissible;
  std::string detail;

  double monotone_margin = 0.0;  // min over the grid of min(b_s, c_s)
  double berger_margin = 0.0;    // min over the grid of b - c
  double origin_margin = 0.0;    // max axis deficit of b_s, c_s from 1
  double decay_exponent = 0.0;   // fitted p in |Rm| ~ s^-p (999 = below floor)
  double outer_cs_mean = 0.0;    // mean c_s over the outer 5% of cells
  std::optional<double> mass_estimate;  // empty when c is unbounded
  double k_estimate = 0.0;
  double k_oscillation = 0.0;    // plateau quality at k_estimate
};

inline const char* to_string(ClassReport::Verdict v) {
  switch (v) {
    case ClassReport::Verdict::af_positive_mass: return "af_positive_mass";
    case ClassReport::Verdict::af_zero_mass: return "af_zero_mass";
    case ClassReport::Verdict::gk: return "gk";
    default: return "inadmissible";
  }
}

/// Decide which admissible family a profile belongs to.  Never throws for
/// structurally broken input; such profiles come back inadmissible with the
/// failed check in `detail`.
inline ClassReport validate_class(const RadialProfile& p) {
  ClassReport rep;
  try {
    validate_profile(p);
    const DerivedFields df = derived_fields(p);
    const CurvatureField cf = curvature_field(p, df);
    const std::size_t n = p.n();

    rep.monotone_margin = std::numeric_limits<double>::infinity();
    rep.berger_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      rep.monotone_margin = std::min({rep.monotone_margin, df.b_s[i], df.c_s[i]});
      rep.berger_margin = std::min(rep.berger_margin, p.b[i] - p.c[i]);
    }
    rep.origin_margin = std::max(std::abs(detail::axis_value(df.b_s) - 1.0),
                                 std::abs(detail::axis_value(df.c_s) - 1.0));

    const std::size_t tail = std::max<std::size_t>(2, n / 20);
    double cbar = 0.0, csbar = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) {
      cbar += p.c[i];
      csbar += df.c_s[i];
    }
    cbar /= tail;
    csbar /= tail;
    rep.outer_cs_mean = csbar;
    if (csbar <= kUnboundedCsThreshold) rep.mass_estimate = 1.0 / cbar;

    if (!(rep.monotone_margin > -1e-9)) {
      rep.detail = "fiber lengths are not monotone";
      return rep;
    }
    if (rep.origin_margin > kOriginSlackFactor * p.dx * p.dx) {
      rep.detail = "orbits do not close smoothly at the axis";
      return rep;
    }

    // Curvature decay fit over the outer half, skipping cells at the
    // numerical-zero floor.  More than half the window at the floor means
    // the profile is flat to machine precision out there.
    std::vector<double> ls, lm;
    std::size_t floored = 0;
    for (std::size_t i = n / 2; i < n; ++i) {
      if (cf.mag[i] <= kCurvatureFloor) {
        ++floored;
        continue;
      }
      ls.push_back(std::log(df.s[i]));
      lm.push_back(std::log(cf.mag[i]));
    }
    const std::size_t window = n - n / 2;
    if (floored * 2 > window || ls.size() < 8) {
      rep.decay_exponent = 999.0;  // flat beyond resolvable curvature
    } else {
      rep.decay_exponent = -linear_fit(ls, lm).slope;
    }

    if (rep.decay_exponent >= kAfMinDecayExponent) {
      if (rep.mass_estimate) {
        rep.verdict = ClassReport::Verdict::af_positive_mass;
        rep.detail = "curvature decays fast enough and the collapsing fiber saturates";
      } else {
        rep.verdict = ClassReport::Verdict::af_zero_mass;
        rep.detail = "curvature decays fast enough and the collapsing fiber grows";
      }
      return rep;
    }

    // Not asymptotically flat: scan for a collapse exponent with a genuine
    // plateau in b_s u^{-k} across the outer half.
    double best_k = 0.0, best_osc = std::numeric_limits<double>::infinity();
    std::vector<double> vals(window);
    for (int step = 0; step <= 19; ++step) {
      const double k = 0.05 * step;
      vals.clear();
      for (std::size_t i = n / 2; i < n; ++i)
        vals.push_back(df.b_s[i] * std::pow(df.u[i], -k));
      auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      std::vector<double> med_scratch = vals;
      std::nth_element(med_scratch.begin(), med_scratch.begin() + med_scratch.size() / 2,
                       med_scratch.end());
      const double med = med_scratch[med_scratch.size() / 2];
      const double osc = (*mx - *mn) / std::max(std::abs(med), 1e-300);
      if (osc < best_osc) {
        best_osc = osc;
        best_k = k;
      }
    }
    rep.k_estimate = best_k;
    rep.k_oscillation = best_osc;
    if (best_osc < kPlateauOscMax) {
      rep.verdict = ClassReport::Verdict::gk;
      rep.detail = "collapse exponent plateau found";
    } else {
      rep.detail = "no admissible asymptotic structure found";
    }
    return rep;
  } catch (const ProfileError& e) {
    rep.detail = e.what();
    return rep;
  } catch (const Error& e) {
    rep.detail = e.what();
    return rep;
  }
}

// ---------------------------------------------------------------------------
// Family dispatch (shared by the run drivers)
// ---------------------------------------------------------------------------

enum class Family { taubnut, flat, sec_nonneg, gk, af_zero_mass, af_positive_mass };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::taubnut: return "taubnut";
    case Family::flat: return "flat";
    case Family::sec_nonneg: return "sec_nonneg";
    case Family::gk: return "gk";
    case Family::af_zero_mass: return "af_zero_mass";
    default: return "af_positive_mass";
  }
}

struct InitialDataSpec {
  Family family = Family::taubnut;
  double m = 1.0;
  double k = 0.5;
  double delta = 0.0;
  GridSpec grid;
};

inline RadialProfile make_profile(const InitialDataSpec& spec) {
  switch (spec.family) {
    case Family::taubnut: return taubnut_profile(spec.m, spec.grid);
    case Family::flat: return flat_profile(spec.grid);
    case Family::sec_nonneg: return sec_nonneg_profile(spec.grid);
    case Family::gk: return gk_profile(spec.k, spec.m, spec.grid);
    case Family::af_zero_mass: return af_profile(AfMode::zero_mass, spec.m, spec.delta, spec.grid);
    default: return af_profile(AfMode::positive_mass, spec.m, spec.delta, spec.grid);
  }
}

}  // namespace bergerflow
