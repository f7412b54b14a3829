#pragma once

// Brute-force curvature check in the Euler chart on R^4.
//
// Everything in geometry.hpp rests on the closed-form curvature of the
// cohomogeneity-one ansatz.  This module recomputes those numbers the
// expensive, convention-free way: interpolate the radial profile with cubic
// splines, assemble the 4x4 coordinate metric from the inverted invariant
// frame, push it through the textbook Christoffel -> Riemann pipeline with
// nested central finite differences, and project back onto the orthonormal
// frame.  No formula from geometry.hpp enters, so agreement is a genuine
// cross-check rather than an identity.
//
// Finite differences (one Richardson pass, step-halving self-check) are used
// instead of automatic differentiation on purpose: the oracle must not share
// a code path with anything it validates.  The two differencing levels sit
// on top of each other, so the pipeline runs in extended precision: in plain
// doubles the rounding of the inner level, divided by the outer step, leaves
// a noise floor of ~1e-8 absolute on curvature components, which drowns the
// far field where curvature itself is ~1e-4.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <bergerflow/geometry.hpp>
#include <bergerflow/numerics.hpp>
#include <bergerflow/profile.hpp>

namespace bergerflow::oracle {

// Chart guards.
inline constexpr double kMinSin2Phi = 0.1;    // Euler chart degeneracy
inline constexpr double kFrameCondMax = 1e6;  // frame inversion rejection
// Differencing: step relative to the coordinate scale, plus the allowed
// disagreement between the h and h/2 estimates (relative, floored at 1).
inline constexpr double kFdStep = 1e-4;
inline constexpr double kFdAgreement = 1e-4;
// Comparisons against the closed forms use |a-b| <= tol*max(|a|,|b|) + floor
// so that identically-vanishing components (flat space) do not divide by 0.
inline constexpr double kCompareFloor = 1e-8;

class OracleError : public Error {
 public:
  using Error::Error;
};

// Euler coordinates (x, phi, psi, theta).  The frame inversion needs
// sin(2 phi) bounded away from zero, which is the chart degeneracy.
struct ChartPoint {
  double x = 1.0;
  double phi = 0.6;
  double psi = 0.5;
  double theta = 0.5;
};

inline void validate_chart_point(const ChartPoint& p) {
  if (!(p.x > 0.0)) throw OracleError("chart point: x must be positive");
  if (!(p.phi > 0.0 && p.phi < 0.5 * std::numbers::pi))
    throw OracleError("chart point: phi must lie in (0, pi/2)");
  if (!(p.psi >= 0.0 && p.psi < std::numbers::pi))
    throw OracleError("chart point: psi must lie in [0, pi)");
  if (!(p.theta >= 0.0 && p.theta < 2.0 * std::numbers::pi))
    throw OracleError("chart point: theta must lie in [0, 2 pi)");
  if (!(std::abs(std::sin(2.0 * p.phi)) >= kMinSin2Phi))
    throw OracleError("chart point: too close to a chart degeneracy");
}

// Left-invariant frame {X1, X2, X3} in the (d_phi, d_psi, d_theta) basis;
// column i holds X_{i+1}.  X3 generates the Hopf circle.  The fields close
// under [X1, X2] = 2 X3 and cyclic, which pins the normalization the
// curvature formulas assume.
template <class T>
MatT<T, 3> frame_matrix(T phi, T theta) {
  const T s2t = std::sin(2 * theta), c2t = std::cos(2 * theta);
  const T s2p = std::sin(2 * phi);
  const T ct2p = std::cos(2 * phi) / s2p;
  return {{{s2t, c2t, T(0)},
           {-c2t / s2p, s2t / s2p, T(0)},
           {ct2p * c2t, -ct2p * s2t, T(1)}}};
}

// The seven frame curvature components: six sectional curvatures of frame
// 2-planes plus the single independent mixed component.
struct FrameCurvature {
  double k01, k02, k03, k12, k13, k23, rm0123;
};

// First-Bianchi triple R_{0123}, R_{0231}, R_{0312}; their sum vanishes for
// any Levi-Civita curvature tensor, differencing errors aside.
struct BianchiProbe {
  double rm0123, rm0231, rm0312;
  double residual() const { return rm0123 + rm0231 + rm0312; }
};

class ChartMetric {
  using Real = long double;

 public:
  explicit ChartMetric(const RadialProfile& p)
      : xi_(p.x, p.xi), b_(p.x, p.b), c_(p.x, p.c) {}

  // Assemble g = xi^2 dx^2 + b^2 (s1^2 + s2^2) + c^2 s3^2 componentwise from
  // the coframe, i.e. the rows of the inverted frame matrix.
  Mat<4> at(const ChartPoint& q) const {
    validate_chart_point(q);
    require_radial_room(q.x, 0.0);
    const MatT<Real, 4> g = metric({q.x, q.phi, q.psi, q.theta});
    Mat<4> out{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out[a][b] = static_cast<double>(g[a][b]);
    return out;
  }

  FrameCurvature riemann(const ChartPoint& q) const {
    const Projector rm(*this, q);
    FrameCurvature out{};
    out.k01 = rm(0, 1, 0, 1);
    out.k02 = rm(0, 2, 0, 2);
    out.k03 = rm(0, 3, 0, 3);
    out.k12 = rm(1, 2, 1, 2);
    out.k13 = rm(1, 3, 1, 3);
    out.k23 = rm(2, 3, 2, 3);
    // Mixed component in the convention R_{0123} = g(R(e0, e1) e2, e3),
    // the one under which Taub-NUT comes out with rm0123 = c_s - b_s u < 0.
    out.rm0123 = rm(3, 2, 0, 1);
    return out;
  }

  BianchiProbe bianchi(const ChartPoint& q) const {
    const Projector rm(*this, q);
    return {rm(3, 2, 0, 1), rm(1, 3, 0, 2), rm(2, 1, 0, 3)};
  }

  double x_front() const { return xi_.x_front(); }
  double x_back() const { return xi_.x_back(); }

 private:
  // Lowered curvature tensor at a point together with the orthonormal frame
  // {xi^-1 d_x, X1/b, X2/b, X3/c}; operator() projects one component, with
  // slots ordered so that rm(a, b, c, d) = g(e_a, R(e_c, e_d) e_b).  The
  // sectional curvature of the (i, j) frame plane is rm(i, j, i, j).
  struct Projector {
    Projector(const ChartMetric& m, const ChartPoint& q) {
      validate_chart_point(q);
      // The outer Gamma stencil shifts each coordinate by up to its step,
      // and the metric stencil inside shifts it again: stay 2.5 steps in.
      m.require_radial_room(q.x, 2.5 * kFdStep * std::max(1.0, q.x));

      const std::array<Real, 4> u{q.x, q.phi, q.psi, q.theta};
      const auto gamma0 = m.christoffel(u);
      std::array<std::array<MatT<Real, 4>, 4>, 4> dgamma{};  // [d][a][b][c]
      for (int d = 0; d < 4; ++d) {
        const auto flat = m.differentiate(
            [&m](const std::array<Real, 4>& v) {
              return flatten(m.christoffel(v));
            },
            u, d);
        int k = 0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) dgamma[d][a][b][c] = flat[k++];
      }

      // R^a_{bcd} from R(d_c, d_d) d_b = R^a_{bcd} d_a, lowered with g.
      const MatT<Real, 4> g = m.metric(u);
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) {
            std::array<Real, 4> up{};
            for (int a = 0; a < 4; ++a) {
              Real v = dgamma[c][a][d][b] - dgamma[d][a][c][b];
              for (int e2 = 0; e2 < 4; ++e2)
                v += gamma0[a][c][e2] * gamma0[e2][d][b] -
                     gamma0[a][d][e2] * gamma0[e2][c][b];
              up[a] = v;
            }
            for (int a = 0; a < 4; ++a) {
              Real lo = 0;
              for (int e2 = 0; e2 < 4; ++e2) lo += g[a][e2] * up[e2];
              low[a][b][c][d] = lo;
            }
          }

      const MatT<Real, 3> f =
          frame_matrix<Real>(q.phi, q.theta);
      const Real ib = 1 / m.b_(static_cast<Real>(q.x));
      const Real ic = 1 / m.c_(static_cast<Real>(q.x));
      e[0][0] = 1 / m.xi_(static_cast<Real>(q.x));
      for (int r = 0; r < 3; ++r) {
        e[1][r + 1] = f[r][0] * ib;
        e[2][r + 1] = f[r][1] * ib;
        e[3][r + 1] = f[r][2] * ic;
      }
    }

    double operator()(int a, int b, int c, int d) const {
      Real v = 0;
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s)
              v += low[p][q][r][s] * e[a][p] * e[b][q] * e[c][r] * e[d][s];
      return static_cast<double>(v);
    }

    Real low[4][4][4][4] = {};
    std::array<std::array<Real, 4>, 4> e{};
  };

  void require_radial_room(double x, double margin) const {
    if (!(x - margin >= xi_.x_front() && x + margin <= xi_.x_back()))
      throw OracleError("chart point: x leaves the profile domain");
  }

  MatT<Real, 4> metric(const std::array<Real, 4>& u) const {
    const MatT<Real, 3> f = frame_matrix<Real>(u[1], u[3]);
    if (cond1(f) > kFrameCondMax)
      throw OracleError("frame matrix ill-conditioned: chart degeneracy");
    const MatT<Real, 3> sigma = invert(f);  // row i = coframe sigma_{i+1}
    const Real xi = xi_(u[0]), b = b_(u[0]), c = c_(u[0]);
    const std::array<Real, 3> w{b * b, b * b, c * c};
    MatT<Real, 4> g{};
    g[0][0] = xi * xi;
    for (int a = 0; a < 3; ++a)
      for (int b2 = 0; b2 < 3; ++b2) {
        Real v = 0;
        for (int i = 0; i < 3; ++i) v += w[i] * sigma[i][a] * sigma[i][b2];
        g[a + 1][b2 + 1] = v;
      }
    return g;
  }

  static std::vector<Real> flatten(const std::array<MatT<Real, 4>, 4>& t) {
    std::vector<Real> out;
    out.reserve(64);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) out.push_back(t[a][b][c]);
    return out;
  }

  // Central difference in coordinate `dir` with one Richardson pass.  The
  // halved-step estimate must agree with the extrapolated one, otherwise the
  // step size is wrong for this point and the result cannot be trusted.
  template <class F>
  std::vector<Real> differentiate(F&& f, std::array<Real, 4> u,
                                  int dir) const {
    const Real h = kFdStep * std::max<Real>(1, std::abs(u[dir]));
    const auto slope = [&](Real step) {
      auto up = u, dn = u;
      up[dir] += step;
      dn[dir] -= step;
      auto hi = f(up);
      const auto lo = f(dn);
      for (std::size_t i = 0; i < hi.size(); ++i)
        hi[i] = (hi[i] - lo[i]) / (2 * step);
      return hi;
    };
    const auto d1 = slope(h);
    auto d2 = slope(h / 2);
    for (std::size_t i = 0; i < d2.size(); ++i) {
      const Real rich = (4 * d2[i] - d1[i]) / 3;
      if (std::abs(d2[i] - d1[i]) / 3 >
          kFdAgreement * std::max<Real>(1, std::abs(rich)))
        throw OracleError("finite-difference step failed its self-check");
      d2[i] = rich;
    }
    return d2;
  }

  // Gamma^a_{bc} at arbitrary chart coordinates.
  std::array<MatT<Real, 4>, 4> christoffel(
      const std::array<Real, 4>& u) const {
    const MatT<Real, 4> g = metric(u);
    const MatT<Real, 4> gi = invert(g);
    std::array<MatT<Real, 4>, 4> dg{};  // dg[d][a][b] = d_d g_ab
    for (int d = 0; d < 4; ++d) {
      const auto flat = differentiate(
          [this](const std::array<Real, 4>& v) {
            const MatT<Real, 4> mm = metric(v);
            std::vector<Real> out;
            out.reserve(16);
            for (int a = 0; a < 4; ++a)
              for (int b = 0; b < 4; ++b) out.push_back(mm[a][b]);
            return out;
          },
          u, d);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) dg[d][a][b] = flat[4 * a + b];
    }
    std::array<MatT<Real, 4>, 4> gam{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) {
          Real v = 0;
          for (int d = 0; d < 4; ++d)
            v += gi[a][d] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
          gam[a][b][c] = v / 2;
        }
    return gam;
  }

  BasicCubicSpline<Real> xi_, b_, c_;
};

// Seeded chart points for reproducible comparisons: x uniform in a window
// well inside the grid, phi redrawn until clear of the chart degeneracy.
inline std::vector<ChartPoint> seeded_points(std::size_t count, double x_lo,
                                             double x_hi, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(x_lo, x_hi);
  std::uniform_real_distribution<double> uphi(0.0, 0.5 * std::numbers::pi);
  std::uniform_real_distribution<double> upsi(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> utheta(0.0, 2.0 * std::numbers::pi);
  std::vector<ChartPoint> out;
  out.reserve(count);
  while (out.size() < count) {
    ChartPoint p{ux(rng), uphi(rng), upsi(rng), utheta(rng)};
    if (std::abs(std::sin(2.0 * p.phi)) < kMinSin2Phi + 0.02) continue;
    out.push_back(p);
  }
  return out;
}

struct CompareRow {
  std::size_t cell = 0;             // grid cell the point was snapped to
  ChartPoint point;                 // x replaced by the cell centre
  std::array<double, 7> formula{};  // closed-form values
  std::array<double, 7> chart{};    // oracle values
  double max_rel = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  double tol = 0.0;
  double max_rel = 0.0;
  bool pass = false;
};

inline const char* component_name(std::size_t i) {
  constexpr const char* names[7] = {"k01", "k02", "k03",    "k12",
                                    "k13", "k23", "rm0123"};
  return names[i];
}

// Compare the closed-form curvature of a profile against the chart oracle at
// the given points (each snapped to the nearest grid cell so both sides
// evaluate the same radius).  A component passes when
// |formula - chart| <= tol * max(|formula|, |chart|) + kCompareFloor.
inline CompareReport compare_oracle(const RadialProfile& p,
                                    std::span<const ChartPoint> points,
                                    double tol) {
  if (points.size() < 3)
    throw OracleError("compare_oracle: need at least 3 points");
  const ChartMetric chart(p);
  const DerivedFields df = derived_fields(p);
  const CurvatureField cf = curvature_field(p, df);

  CompareReport report;
  report.tol = tol;
  report.pass = true;
  for (const ChartPoint& raw : points) {
    CompareRow row;
    const double pos = raw.x / p.dx - 0.5;
    const auto cell = static_cast<std::size_t>(
        std::clamp(std::llround(pos), 1ll, static_cast<long long>(p.n() - 2)));
    row.cell = cell;
    row.point = raw;
    row.point.x = p.x[cell];
    row.formula = {cf.k01[cell], cf.k02(cell),  cf.k03[cell], cf.k12[cell],
                   cf.k13[cell], cf.k23(cell), cf.rm0123[cell]};
    const FrameCurvature k = chart.riemann(row.point);
    row.chart = {k.k01, k.k02, k.k03, k.k12, k.k13, k.k23, k.rm0123};
    for (std::size_t i = 0; i < 7; ++i) {
      const double a = row.formula[i], b = row.chart[i];
      const double scale = std::max(std::abs(a), std::abs(b));
      const double rel = std::abs(a - b) / (scale + kCompareFloor / tol);
      row.max_rel = std::max(row.max_rel, rel);
      if (std::abs(a - b) > tol * scale + kCompareFloor) report.pass = false;
    }
    report.max_rel = std::max(report.max_rel, row.max_rel);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace bergerflow::oracle
