#pragma once

// Low-level numerical kernels shared across the library: parity-aware finite
// differences on the cell-centered radial grid, monotone cubic and spline
// interpolation, quadrature, least squares, and small dense linear algebra.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bergerflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ===========================================================================
// Cell-centered finite differences
// ===========================================================================
//
// Grid: x_i = (i + 1/2) dx, i = 0..n-1.  The symmetry axis x = 0 sits half a
// cell below the first sample, so reflection maps cell i to ghost index
// -1 - i.  Fields carry a parity under that reflection: odd fields (b, c)
// flip sign, even fields (xi, and first s-derivatives of odd fields) do not.

enum class Parity : int { odd = -1, even = 1 };

// Interior differencing schemes.  All variants close the outer edge with the
// second-order one-sided stencil so no artificial boundary data is invented.
enum class Stencil {
  second,     // 3-point central everywhere interior
  second_o4,  // 3-point central interior, 5-point at the three axis cells
  fourth      // 5-point central interior, 3-point at the penultimate cell
};

inline double ghosted(std::span<const double> f, std::ptrdiff_t j, Parity p) {
  if (j >= 0) return f[static_cast<std::size_t>(j)];
  const double v = f[static_cast<std::size_t>(-1 - j)];
  return p == Parity::odd ? -v : v;
}

namespace detail_fd {

template <class Ghost>
void dx_cell_impl(std::span<const double> f, double dx, Stencil scheme,
                  std::span<double> out, Ghost&& g) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(f.size());
  if (n < 8) throw Error("dx_cell: need at least 8 cells");
  if (out.size() != f.size()) throw Error("dx_cell: output size mismatch");
  const double inv2 = 1.0 / (2.0 * dx);
  const double inv12 = 1.0 / (12.0 * dx);
  auto central2 = [&](std::ptrdiff_t i) { return (g(i + 1) - g(i - 1)) * inv2; };
  auto central4 = [&](std::ptrdiff_t i) {
    return (-g(i + 2) + 8.0 * g(i + 1) - 8.0 * g(i - 1) + g(i - 2)) * inv12;
  };

  std::ptrdiff_t i = 0;
  switch (scheme) {
    case Stencil::second:
      for (; i < n - 1; ++i) out[i] = central2(i);
      break;
    case Stencil::second_o4:
      for (; i < 3; ++i) out[i] = central4(i);
      for (; i < n - 1; ++i) out[i] = central2(i);
      break;
    case Stencil::fourth:
      for (; i < n - 2; ++i) out[i] = central4(i);
      out[n - 2] = central2(n - 2);
      break;
  }
  // one-sided second order at the outer edge
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
}

}  // namespace detail_fd

/// d/dx of a sampled field with reflection (parity) ghost cells.  `out` must
/// have the same size as `f` and must not alias it.
inline void dx_cell(std::span<const double> f, double dx, Parity parity,
                    Stencil scheme, std::span<double> out) {
  detail_fd::dx_cell_impl(f, dx, scheme, out,
                          [&](std::ptrdiff_t j) { return ghosted(f, j, parity); });
}

/// Arclength s_i = int_0^{x_i} xi dx by the cumulative midpoint rule: whole
/// cells contribute dx*xi(center), the half cell against the axis contributes
/// (dx/2)*xi_0 (third-order there because xi extends evenly).
inline std::vector<double> arclength_from_xi(std::span<const double> xi, double dx) {
  std::vector<double> s(xi.size());
  if (xi.empty()) return s;
  s[0] = 0.5 * dx * xi[0];
  for (std::size_t i = 1; i < xi.size(); ++i)
    s[i] = s[i - 1] + 0.5 * dx * (xi[i - 1] + xi[i]);
  return s;
}

// ===========================================================================
// Interpolation
// ===========================================================================

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slope
/// limiting).  Preserves monotonicity of the data; C^1 globally.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw Error("MonotoneCubic: need >= 2 knots");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw Error("MonotoneCubic: knots must increase");
    d_.resize(n);
    if (n == 2) {
      d_[0] = d_[1] = (y_[1] - y_[0]) / (x_[1] - x_[0]);
      return;
    }
    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      del[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (del[i - 1] * del[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
      }
    }
    d_[0] = edge_slope(h[0], h[1], del[0], del[1]);
    d_[n - 1] = edge_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  }

  double operator()(double x) const {
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
  }

  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }

 private:
  static double edge_slope(double h0, double h1, double del0, double del1) {
    double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= 0.0)
      d = 0.0;
    else if (del0 * del1 < 0.0 && std::abs(d) > 3.0 * std::abs(del0))
      d = 3.0 * del0;
    return d;
  }

  std::size_t interval(double x) const {
    if (!(x >= x_.front() && x <= x_.back()))
      throw Error("MonotoneCubic: query outside knot range");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i > 0) --i;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    return i;
  }

  std::vector<double> x_, y_, d_;
};

/// Not-a-knot cubic spline on a uniform grid; C^2 globally.  Used where the
/// interpolant is differentiated (e.g. by the finite-difference curvature
/// oracle), so global C^2 matters more than monotonicity.  The scalar type
/// is a parameter because the curvature oracle evaluates in extended
/// precision to keep its nested differencing above the rounding floor.
template <class T = double>
class BasicCubicSpline {
 public:
  BasicCubicSpline(const std::vector<double>& xs, const std::vector<double>& ys)
      : x_(xs.begin(), xs.end()), y_(ys.begin(), ys.end()) {
    const std::size_t n = x_.size();
    if (n < 5 || y_.size() != n) throw Error("CubicSpline: need >= 5 knots");
    h_ = x_[1] - x_[0];
    for (std::size_t i = 1; i < n; ++i) {
      const T step = x_[i] - x_[i - 1];
      if (!(step > 0.0) || std::abs(step - h_) > 1e-9 * h_)
        throw Error("CubicSpline: knots must be uniform");
    }
    // Moments M_i = S''(x_i).  Interior rows M_{i-1} + 4 M_i + M_{i+1} = r_i
    // with r_i = 6 (y_{i-1} - 2 y_i + y_{i+1}) / h^2.  The not-a-knot end
    // conditions collapse to M_1 = r_1/6 and M_{n-2} = r_{n-2}/6, leaving a
    // strictly diagonally dominant tridiagonal system for the rest.
    m_.assign(n, T(0));
    auto r = [&](std::size_t i) {
      return T(6) * (y_[i - 1] - T(2) * y_[i] + y_[i + 1]) / (h_ * h_);
    };
    m_[1] = r(1) / T(6);
    m_[n - 2] = r(n - 2) / T(6);
    if (n > 5) {
      const std::size_t lo = 2, hi = n - 3;  // unknowns M_lo..M_hi
      const std::size_t cnt = hi - lo + 1;
      std::vector<T> diag(cnt, T(4)), rhs(cnt);
      for (std::size_t j = 0; j < cnt; ++j) rhs[j] = r(lo + j);
      rhs[0] -= m_[1];
      rhs[cnt - 1] -= m_[n - 2];
      for (std::size_t j = 1; j < cnt; ++j) {  // Thomas elimination
        const T w = T(1) / diag[j - 1];
        diag[j] -= w;
        rhs[j] -= w * rhs[j - 1];
      }
      m_[lo + cnt - 1] = rhs[cnt - 1] / diag[cnt - 1];
      for (std::size_t j = cnt - 1; j-- > 0;)
        m_[lo + j] = (rhs[j] - m_[lo + j + 1]) / diag[j];
    }
    m_[0] = T(2) * m_[1] - m_[2];
    m_[n - 1] = T(2) * m_[n - 2] - m_[n - 3];
  }

  T operator()(T x) const {
    const std::size_t i = interval(x);
    const T a = x_[i + 1] - x, b = x - x_[i];
    return (m_[i] * a * a * a + m_[i + 1] * b * b * b) / (T(6) * h_) +
           (y_[i] / h_ - m_[i] * h_ / T(6)) * a +
           (y_[i + 1] / h_ - m_[i + 1] * h_ / T(6)) * b;
  }

  double x_front() const { return static_cast<double>(x_.front()); }
  double x_back() const { return static_cast<double>(x_.back()); }

 private:
  std::size_t interval(T x) const {
    if (!(x >= x_.front() && x <= x_.back()))
      throw Error("CubicSpline: query outside knot range");
    const T pos = (x - x_.front()) / h_;
    auto i = static_cast<std::ptrdiff_t>(pos);
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x_.size()) - 2);
    return static_cast<std::size_t>(i);
  }

  std::vector<T> x_, y_, m_;
  T h_ = T(0);
};

using CubicSpline = BasicCubicSpline<>;

// ===========================================================================
// Quadrature, fitting, root finding
// ===========================================================================

template <class F>
double simpson_panel(F&& f, double a, double b) {
  const double m = 0.5 * (a + b);
  return (b - a) * (f(a) + 4.0 * f(m) + f(b)) / 6.0;
}

template <class F>
double simpson(F&& f, double a, double b, int panels) {
  double sum = 0.0;
  const double w = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    sum += simpson_panel(f, a + i * w, a + (i + 1) * w);
  return sum;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) throw Error("linear_fit: need >= 2 samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw Error("linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

/// Solve f(x) = 0 for strictly increasing f on [lo, hi] by Newton iteration
/// with a bisection fallback that keeps the iterate bracketed.
template <class F, class DF>
double solve_monotone(F&& f, DF&& df, double lo, double hi, double tol) {
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) throw Error("solve_monotone: root not bracketed");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= tol) return x;
    (fx < 0.0 ? lo : hi) = x;
    const double d = df(x);
    double step = d > 0.0 ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
    x = (std::isfinite(step) && step > lo && step < hi) ? step : 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
      return x;
  }
  return x;
}

// ===========================================================================
// Small dense linear algebra (used by the chart-based curvature oracle)
// ===========================================================================

template <class T, std::size_t N>
using MatT = std::array<std::array<T, N>, N>;

template <std::size_t N>
using Mat = MatT<double, N>;

template <class T, std::size_t N>
MatT<T, N> invert(MatT<T, N> a) {
  MatT<T, N> inv{};
  for (std::size_t i = 0; i < N; ++i) inv[i][i] = T(1);
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == T(0)) throw Error("invert: singular matrix");
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    const T w = T(1) / a[col][col];
    for (std::size_t j = 0; j < N; ++j) {
      a[col][j] *= w;
      inv[col][j] *= w;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) continue;
      const T m = a[r][col];
      if (m == T(0)) continue;
      for (std::size_t j = 0; j < N; ++j) {
        a[r][j] -= m * a[col][j];
        inv[r][j] -= m * inv[col][j];
      }
    }
  }
  return inv;
}

template <class T, std::size_t N>
T det(MatT<T, N> a) {
  T d = T(1);
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == T(0)) return T(0);
    if (pivot != col) {
      std::swap(a[col], a[pivot]);
      d = -d;
    }
    d *= a[col][col];
    for (std::size_t r = col + 1; r < N; ++r) {
      const T m = a[r][col] / a[col][col];
      if (m == T(0)) continue;
      for (std::size_t j = col; j < N; ++j) a[r][j] -= m * a[col][j];
    }
  }
  return d;
}

template <class T, std::size_t N>
T norm1(const MatT<T, N>& a) {
  T best = T(0);
  for (std::size_t j = 0; j < N; ++j) {
    T col = T(0);
    for (std::size_t i = 0; i < N; ++i) col += std::abs(a[i][j]);
    best = std::max(best, col);
  }
  return best;
}

template <class T, std::size_t N>
T cond1(const MatT<T, N>& a) {
  return norm1(a) * norm1(invert(a));
}

}  // namespace bergerflow
