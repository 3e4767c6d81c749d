#pragma once

// Small numerical toolbox shared by the solver modules: adaptive
// Gauss-Kronrod quadrature (7/15 pair), simultaneous polynomial root
// finding (Aberth-Ehrlich with Newton polish), and least-squares line
// fits used by the scaling analyses.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace spinchain::numerics {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7/15 adaptive quadrature.
// ---------------------------------------------------------------------------

namespace detail {

// QUADPACK dqk15 abscissae/weights on [-1, 1].
inline constexpr double gk_x[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double gk_wk[8] = {
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double gk_wg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

struct GkEstimate {
  double kronrod;
  double err;
};

template <typename F>
GkEstimate gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = gk_wk[7] * fc;
  double resg = gk_wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double fa = f(c - h * gk_x[i]);
    const double fb = f(c + h * gk_x[i]);
    resk += gk_wk[i] * (fa + fb);
    if (i % 2 == 1) resg += gk_wg[i / 2] * (fa + fb);
  }
  return {resk * h, std::abs((resk - resg) * h)};
}

template <typename F>
double gk15_adaptive(const F& f, double a, double b, double tol, int depth) {
  const GkEstimate e = gk15(f, a, b);
  if (e.err <= tol || depth >= 30) return e.kronrod;
  const double c = 0.5 * (a + b);
  return gk15_adaptive(f, a, c, 0.5 * tol, depth + 1) +
         gk15_adaptive(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12) {
  if (!(b > a)) return 0.0;
  return detail::gk15_adaptive(f, a, b, abs_tol, 0);
}

// Integrates f over [a, b] after slicing the interval into segments no
// longer than seg_len.  Oscillatory integrands (period known to the
// caller) stay resolvable inside each segment, where plain adaptive
// bisection would otherwise see spurious cancellation.
template <typename F>
double integrate_segmented(const F& f, double a, double b, double seg_len,
                           double abs_tol = 1e-12) {
  if (!(b > a)) return 0.0;
  seg_len = std::max(seg_len, 1e-8);
  const int nseg = std::max(1, static_cast<int>(std::ceil((b - a) / seg_len)));
  const double h = (b - a) / nseg;
  const double tol_per = abs_tol / nseg;
  double sum = 0.0;
  for (int i = 0; i < nseg; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == nseg) ? b : lo + h;
    sum += detail::gk15_adaptive(f, lo, hi, tol_per, 0);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Polynomial roots: Aberth-Ehrlich simultaneous iteration.
// ---------------------------------------------------------------------------

// Evaluates p and p' at z by Horner.  coeffs[k] multiplies z^k.
inline void horner(const std::vector<cplx>& coeffs, cplx z, cplx& p,
                   cplx& dp) {
  p = coeffs.back();
  dp = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 2; k >= 0; --k) {
    dp = dp * z + p;
    p = p * z + coeffs[k];
  }
}

// |p(z)| measured against the coefficient magnitude sum at |z|; a root is
// accepted when this ratio is tiny (backward-stable criterion).
inline double poly_relative_residual(const std::vector<cplx>& coeffs, cplx z) {
  cplx p, dp;
  horner(coeffs, z, p, dp);
  double scale = 0.0;
  double zp = 1.0;
  const double az = std::abs(z);
  for (const cplx& c : coeffs) {
    scale += std::abs(c) * zp;
    zp *= az;
  }
  return std::abs(p) / std::max(scale, 1e-300);
}

inline std::vector<cplx> aberth_roots(const std::vector<cplx>& coeffs,
                                      double rel_tol = 1e-13,
                                      int max_iter = 500) {
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg < 1 || std::abs(coeffs.back()) == 0.0)
    throw std::invalid_argument("aberth_roots: degenerate polynomial");

  auto run = [&](double radius) {
    std::vector<cplx> z(deg);
    for (int k = 0; k < deg; ++k) {
      const double ang = 2.0 * M_PI * k / deg + 0.41;
      z[k] = radius * cplx(std::cos(ang), std::sin(ang));
    }
    for (int iter = 0; iter < max_iter; ++iter) {
      double moved = 0.0;
      for (int i = 0; i < deg; ++i) {
        cplx p, dp;
        horner(coeffs, z[i], p, dp);
        if (std::abs(p) == 0.0) continue;
        const cplx ratio = (std::abs(dp) > 0.0) ? p / dp : cplx(1e-3, 1e-3);
        cplx rep = 0.0;
        for (int j = 0; j < deg; ++j)
          if (j != i) rep += 1.0 / (z[i] - z[j]);
        const cplx w = ratio / (1.0 - ratio * rep);
        z[i] -= w;
        moved = std::max(moved, std::abs(w) / std::max(1.0, std::abs(z[i])));
      }
      if (moved < 1e-15) break;
    }
    // Newton polish sharpens each root individually.
    for (int i = 0; i < deg; ++i) {
      for (int it = 0; it < 4; ++it) {
        cplx p, dp;
        horner(coeffs, z[i], p, dp);
        if (std::abs(dp) == 0.0) break;
        z[i] -= p / dp;
      }
    }
    return z;
  };

  double worst = 0.0;
  std::vector<cplx> roots = run(1.06);
  for (const cplx& r : roots)
    worst = std::max(worst, poly_relative_residual(coeffs, r));
  if (worst > rel_tol) {
    // Retry from a wide ring (Cauchy-bound flavored) for stubborn inputs.
    double big = 0.0;
    for (const cplx& c : coeffs) big = std::max(big, std::abs(c));
    roots = run(1.0 + big / std::abs(coeffs.back()));
    worst = 0.0;
    for (const cplx& r : roots)
      worst = std::max(worst, poly_relative_residual(coeffs, r));
    if (worst > rel_tol)
      throw std::runtime_error("aberth_roots: no convergence, residual " +
                               std::to_string(worst));
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Least-squares line fits.
// ---------------------------------------------------------------------------

struct LineFit {
  double intercept;
  double slope;
  double r2;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw std::invalid_argument("fit_line: need >= 2 matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300)
    throw std::invalid_argument("fit_line: degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (size_t i = 0; i < n; ++i) {
    const double fit = intercept + slope * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  return {intercept, slope, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

// One-parameter fit y = c*x.  With no intercept in the model the baseline
// variation is measured about zero, the usual convention for regression
// through the origin (an r2 against the mean can go negative here even for
// decent fits, since the model is not nested in the constant one).
inline LineFit fit_through_origin(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 1 || y.size() != n)
    throw std::invalid_argument("fit_through_origin: bad input");
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  if (sxx < 1e-300)
    throw std::invalid_argument("fit_through_origin: zero abscissae");
  const double c = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < n; ++i) {
    ss_res += (y[i] - c * x[i]) * (y[i] - c * x[i]);
    ss_tot += y[i] * y[i];
  }
  return {0.0, c, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

}  // namespace spinchain::numerics
