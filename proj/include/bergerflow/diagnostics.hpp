#pragma once

// Scalar diagnostics evaluated on profiles and on time series: monotonicity
// and collapse monitors, the mass estimate, deviation from the closed-form
// fixed point, residual norms, and the blow-up-rate classification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "initial_data.hpp"
#include "profile.hpp"
#include "taubnut.hpp"

namespace bergerflow {

// ---------------------------------------------------------------------------
// Pointwise monitors
// ---------------------------------------------------------------------------

struct MonitorConfig {
  double lambda = 0.5;   // weight exponent in the chi monitor
  double k_hat = 1.2;    // collapse exponent used by the c_s u^{-k} monitor
  double min_u0 = 0.0;   // initial min of u, baseline for the decay margin
};

/// Margins of the quantities that the flow is expected to keep signed or
/// monotone.  All scans exclude the innermost region s < dx, where the
/// odd/even closure of the stencils dominates roundoff.
struct InvariantReport {
  double max_u = 0.0, min_u = 0.0;
  double min_bs = 0.0, min_cs = 0.0;
  double u_le_one_margin = 0.0;          // 1 - max u
  double u_floor_margin = 0.0;           // min u - min_u0
  double sup_one_minus_u_over_c = 0.0;
  double sup_bs2_minus4_over_c = 0.0;    // sup (b_s^2 - 4)/c, expected <= 0 region marker
  double sup_c2_mag = 0.0;               // sup c^2 |Rm|
  double sup_cs_ukhat = 0.0;             // sup c_s u^{-k_hat}
  double min_chi = 0.0;                  // min b^lambda (b_s/u - log b)
  double min_bs_over_u = 0.0;
};

inline InvariantReport monitor_invariants(const RadialProfile& p, const DerivedFields& df,
                                          const CurvatureField& cf,
                                          const MonitorConfig& cfg) {
  InvariantReport r;
  r.max_u = -std::numeric_limits<double>::infinity();
  r.min_u = std::numeric_limits<double>::infinity();
  r.min_bs = std::numeric_limits<double>::infinity();
  r.min_cs = std::numeric_limits<double>::infinity();
  r.sup_one_minus_u_over_c = -std::numeric_limits<double>::infinity();
  r.sup_bs2_minus4_over_c = -std::numeric_limits<double>::infinity();
  r.sup_c2_mag = -std::numeric_limits<double>::infinity();
  r.sup_cs_ukhat = -std::numeric_limits<double>::infinity();
  r.min_chi = std::numeric_limits<double>::infinity();
  r.min_bs_over_u = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (df.s[i] < p.dx) continue;
    r.max_u = std::max(r.max_u, df.u[i]);
    r.min_u = std::min(r.min_u, df.u[i]);
    r.min_bs = std::min(r.min_bs, df.b_s[i]);
    r.min_cs = std::min(r.min_cs, df.c_s[i]);
    r.sup_one_minus_u_over_c = std::max(r.sup_one_minus_u_over_c, (1.0 - df.u[i]) / p.c[i]);
    r.sup_bs2_minus4_over_c =
        std::max(r.sup_bs2_minus4_over_c, (df.b_s[i] * df.b_s[i] - 4.0) / p.c[i]);
    r.sup_c2_mag = std::max(r.sup_c2_mag, p.c[i] * p.c[i] * cf.mag[i]);
    r.sup_cs_ukhat = std::max(r.sup_cs_ukhat, df.c_s[i] * std::pow(df.u[i], -cfg.k_hat));
    r.min_chi = std::min(r.min_chi, std::pow(p.b[i], cfg.lambda) *
                                        (df.b_s[i] / df.u[i] - std::log(p.b[i])));
    r.min_bs_over_u = std::min(r.min_bs_over_u, df.b_s[i] / df.u[i]);
  }
  r.u_le_one_margin = 1.0 - r.max_u;
  r.u_floor_margin = r.min_u - cfg.min_u0;
  return r;
}

// ---------------------------------------------------------------------------
// Mass and fixed-point deviation
// ---------------------------------------------------------------------------

/// Reciprocal of the mean collapsing-fiber length over the outer 5% of
/// cells.  Empty when the fiber is still growing out there (mean c_s above
/// 0.5), i.e. when no finite saturation value is visible on this grid.
inline std::optional<double> estimate_mass(const RadialProfile& p, const DerivedFields& df) {
  const std::size_t n = p.n();
  const std::size_t tail = std::max<std::size_t>(2, n / 20);
  double cbar = 0.0, csbar = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) {
    cbar += p.c[i];
    csbar += df.c_s[i];
  }
  cbar /= tail;
  csbar /= tail;
  if (csbar > kUnboundedCsThreshold) return std::nullopt;
  return 1.0 / cbar;
}

/// Sup over a shared uniform arclength grid on [0, S] of
/// |b - b_ref| + |c - c_ref| against the closed-form fixed point of mass m.
inline double taubnut_deviation(const RadialProfile& p, const DerivedFields& df,
                                double m, double S, std::size_t samples = 512) {
  taubnut::require_mass(m);
  const double s_max = df.s[p.n() - 1];
  if (!(S > 0.0) || S > s_max)
    throw Error("taubnut_deviation: window [0, " + std::to_string(S) +
                "] exceeds available arclength range [0, " + std::to_string(s_max) + "]");
  std::vector<double> targets(samples);
  for (std::size_t j = 0; j < samples; ++j)
    targets[j] = S * static_cast<double>(j) / static_cast<double>(samples - 1);
  const ResampledProfile rp = resample_to_arclength(p, df, std::move(targets));
  double dev = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const double xr = taubnut::x_from_arclength(m, rp.s[j]);
    dev = std::max(dev, std::abs(rp.b[j] - taubnut::b(m, xr)) +
                            std::abs(rp.c[j] - taubnut::c(m, xr)));
  }
  return dev;
}

inline double taubnut_deviation(const RadialProfile& p, double m, double S) {
  return taubnut_deviation(p, derived_fields(p), m, S);
}

// ---------------------------------------------------------------------------
// Residual norms
// ---------------------------------------------------------------------------

struct ResidualNorms {
  double sup_j1 = 0.0;  // sup |c_s - u^2|
  double sup_j2 = 0.0;  // sup |b_s + u - 2|
  double inf_j2 = 0.0;  // signed inf of b_s + u - 2
};

/// Norms of the flat-connection residuals over the window s <= S (excluding
/// the innermost cell band s < dx, as for the monitors).
inline ResidualNorms j_residual_norms(const RadialProfile& p, const DerivedFields& df,
                                      double S) {
  ResidualNorms r;
  r.inf_j2 = std::numeric_limits<double>::infinity();
  const FlatConnectionResiduals res = hyperkahler_residuals(df);
  bool seen = false;
  for (std::size_t i = 0; i < p.n(); ++i) {
    if (df.s[i] < p.dx || df.s[i] > S) continue;
    seen = true;
    r.sup_j1 = std::max(r.sup_j1, std::abs(res.j1[i]));
    r.sup_j2 = std::max(r.sup_j2, std::abs(res.j2[i]));
    r.inf_j2 = std::min(r.inf_j2, res.j2[i]);
  }
  if (!seen) r.inf_j2 = 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Blow-up-rate classification
// ---------------------------------------------------------------------------

// A time series of scalar diagnostics, one row per recorded time.
struct SeriesRow {
  double t = 0.0;
  double sup_mag = 0.0;        // global sup |Rm|
  double t_sup_mag = 0.0;      // t * sup |Rm|
  std::optional<double> mass;  // empty = unbounded collapsing fiber
  double sup_j1 = 0.0, sup_j2 = 0.0, inf_j2 = 0.0;
  double min_bs = 0.0, min_cs = 0.0;
  double max_u = 0.0, min_u = 0.0;
  std::optional<double> tnut_dev;  // empty when mass is unbounded
};

enum class SingularityType { type_iii, type_iib, indeterminate };

inline const char* to_string(SingularityType t) {
  switch (t) {
    case SingularityType::type_iii: return "Type-III";
    case SingularityType::type_iib: return "Type-II(b)";
    default: return "indeterminate";
  }
}

struct TypeReport {
  SingularityType type = SingularityType::indeterminate;
  double exponent = 0.0;  // fitted slope of log(t sup|Rm|) against log t
  std::string detail;
};

// Fit bands: slope below 0.2 means t|Rm| stays bounded (Type-III); slope
// above 0.5 means t|Rm| genuinely grows (Type-II(b)); in between the run is
// too ambiguous to call.
inline constexpr double kTypeIiiMaxExponent = 0.2;
inline constexpr double kTypeIibMinExponent = 0.5;
inline constexpr double kTypeMinHorizon = 10.0;
inline constexpr double kTypeCurvatureFloor = 1e-10;

/// Classify the long-time behavior from the recorded series: least-squares
/// slope of log(t sup|Rm|) vs log t over the final decade of the run.
inline TypeReport classify_singularity_type(const std::vector<SeriesRow>& series) {
  TypeReport rep;
  if (series.size() < 4) {
    rep.detail = "too few series rows to classify";
    return rep;
  }
  const double t_last = series.back().t;
  if (t_last < kTypeMinHorizon) {
    rep.detail = "time horizon below " + std::to_string(kTypeMinHorizon) +
                 "; run longer before classifying";
    return rep;
  }
  double peak = 0.0;
  for (const SeriesRow& row : series) peak = std::max(peak, row.sup_mag);
  if (peak < kTypeCurvatureFloor) {
    rep.type = SingularityType::type_iii;
    rep.exponent = 0.0;
    rep.detail = "curvature at the numerical floor throughout; trivially bounded";
    return rep;
  }
  std::vector<double> lt, lv;
  for (const SeriesRow& row : series) {
    if (row.t < t_last / 10.0 || row.t <= 0.0) continue;
    if (row.t_sup_mag <= 0.0) continue;
    lt.push_back(std::log(row.t));
    lv.push_back(std::log(row.t_sup_mag));
  }
  if (lt.size() < 4) {
    rep.detail = "too few rows in the final decade to fit";
    return rep;
  }
  rep.exponent = linear_fit(lt, lv).slope;
  if (rep.exponent < kTypeIiiMaxExponent) {
    rep.type = SingularityType::type_iii;
    rep.detail = "t sup|Rm| stays bounded";
  } else if (rep.exponent > kTypeIibMinExponent) {
    rep.type = SingularityType::type_iib;
    rep.detail = "t sup|Rm| grows without bound";
  } else {
    rep.detail = "fitted exponent in the ambiguous band";
  }
  return rep;
}

}  // namespace bergerflow
