#pragma once

// Thermodynamic-limit closed forms for the imaginary part of the extremal
// eigenvalue.  The boundary mode alone contributes
//   E_b = (g - g/(delta^2 + g^2)) / 2.
// The scale-free magnon continuum adds, in the gapless regime |delta| < 1
// with gamma = arccos(-delta), g_c = sin(gamma), and boundary rapidity
// lambda_0 = ln((g - g_c)/(g + g_c)) / gamma (g > g_c),
//
//   sum Im = (sin(gamma)/gamma) * Int_0^inf sin(w lambda_0) tanh(w)
//            * sinh((pi/gamma - 2) w)/sinh((pi/gamma) w) dw,
//
// which also covers the ground state for -1 < delta < 0.  In the gapped
// regime delta < -1 with phi = arccosh(-delta) and
// lambda_0 = -(2/phi) arctan(sinh(phi)/g) the integral becomes a series
//
//   sum Im = sinh(phi) * sum_{m>=1} sin(m phi lambda_0) tanh(m phi) e^{-2 m phi},
//
// and for |delta| > 1 the steady state is the boundary string with
// Im(E_s) = g/2 exactly.  The oscillatory integrand is handled by slicing
// the w axis into at most half-period (pi/|lambda_0|) segments before
// adaptive Gauss-Kronrod refinement; the integration window Omega is sized
// so the integrand envelope is far below the tolerance at the cut.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "numerics.hpp"

namespace spinchain::thermo {

enum class Regime { gapless, gapped, string };

struct ThermoParams {
  double delta = 0.0;
  double g = 0.0;
  Regime regime = Regime::gapless;
  double gamma_or_phi = 0.0;
  double lambda0 = 0.0;

  static ThermoParams make(double delta, double g) {
    ThermoParams p;
    p.delta = delta;
    p.g = g;
    if (std::abs(delta) < 1.0) {
      p.regime = Regime::gapless;
      p.gamma_or_phi = std::acos(-delta);
      const double gc = std::sin(p.gamma_or_phi);
      p.lambda0 = (g > gc)
                      ? std::log((g - gc) / (g + gc)) / p.gamma_or_phi
                      : std::numeric_limits<double>::quiet_NaN();
    } else if (delta < -1.0) {
      p.regime = Regime::gapped;
      p.gamma_or_phi = std::acosh(-delta);
      p.lambda0 = -(2.0 / p.gamma_or_phi) *
                  std::atan2(std::sinh(p.gamma_or_phi), g);
    } else if (delta > 1.0) {
      p.regime = Regime::string;
      p.gamma_or_phi = std::acosh(delta);
      p.lambda0 = std::numeric_limits<double>::quiet_NaN();
    } else {
      throw std::domain_error("ThermoParams: |delta| = 1 is outside both parametrizations");
    }
    return p;
  }
};

struct ThermoResult {
  double e_boundary = 0.0;
  double e_scalefree = 0.0;
  double im_total = 0.0;
};

inline double boundary_mode_energy(double delta, double g) {
  const double r2 = delta * delta + g * g;
  if (r2 == 0.0)
    throw std::domain_error("boundary_mode_energy: undefined at delta = g = 0");
  return 0.5 * (g - g / r2);
}

inline double kernel_theta(double n, double x, const ThermoParams& p) {
  if (p.regime == Regime::string)
    throw std::domain_error("kernel_theta: no kernel in the string regime");
  if (x == 0.0) return 0.0;
  if (p.regime == Regime::gapless) {
    const double gamma = p.gamma_or_phi;
    const double cot = std::cos(0.5 * n * gamma) / std::sin(0.5 * n * gamma);
    return 2.0 * std::atan(cot * std::tanh(0.5 * gamma * x));
  }
  const double phi = p.gamma_or_phi;
  const double coth = std::cosh(0.5 * n * phi) / std::sinh(0.5 * n * phi);
  return 2.0 * std::atan(coth * std::tan(0.5 * phi * x));
}

// K_n = d(theta_n)/dx in closed form.
inline double kernel_K(double n, double x, const ThermoParams& p) {
  if (p.regime == Regime::string)
    throw std::domain_error("kernel_K: no kernel in the string regime");
  if (p.regime == Regime::gapless) {
    const double gamma = p.gamma_or_phi;
    const double den = std::cosh(gamma * x) - std::cos(n * gamma);
    if (std::abs(den) < 1e-12)
      throw std::domain_error("kernel_K: evaluation at a kernel pole");
    return gamma * std::sin(n * gamma) / den;
  }
  const double phi = p.gamma_or_phi;
  const double den = std::cosh(n * phi) - std::cos(phi * x);
  if (std::abs(den) < 1e-12)
    throw std::domain_error("kernel_K: evaluation at a kernel pole");
  return phi * std::sinh(n * phi) / den;
}

namespace detail {

// sinh(a w)/sinh(b w) for b > 0, evaluated without overflow.  Even in w.
inline double sinh_ratio(double a, double b, double w) {
  if (w == 0.0) return a / b;
  if (a == 0.0) return 0.0;
  const double aw = std::abs(w);
  const double aa = std::abs(a);
  return std::copysign(1.0, a) * std::exp((aa - b) * aw) *
         (1.0 - std::exp(-2.0 * aa * aw)) / (1.0 - std::exp(-2.0 * b * aw));
}

}  // namespace detail

// Fourier kernel: gapless takes omega real, gapped takes the integer mode m.
inline double kernel_K_tilde(double n, double omega_or_m,
                             const ThermoParams& p) {
  if (p.regime == Regime::gapless) {
    const double b = M_PI / p.gamma_or_phi;
    return detail::sinh_ratio(b - n, b, omega_or_m);
  }
  if (p.regime == Regime::gapped)
    return std::exp(-n * std::abs(omega_or_m) * p.gamma_or_phi);
  throw std::domain_error("kernel_K_tilde: no kernel in the string regime");
}

// Ground-sea rapidity distribution at zero magnetization.
inline double root_density(double lambda) {
  return 0.5 / std::cosh(0.5 * M_PI * lambda);
}

// Debug hook: the folded integrand of the gapless scale-free sum, without
// the sin(gamma)/gamma prefactor.
inline double scalefree_integrand(double delta, double g, double omega) {
  const ThermoParams p = ThermoParams::make(delta, g);
  if (p.regime != Regime::gapless || !std::isfinite(p.lambda0))
    throw std::domain_error("scalefree_integrand: gapless regime with g > g_c required");
  const double b = M_PI / p.gamma_or_phi;
  return std::sin(omega * p.lambda0) * std::tanh(omega) *
         detail::sinh_ratio(b - 2.0, b, omega);
}

inline ThermoResult im_energy_gapless(double delta, double g,
                                      double quad_tol = 1e-10) {
  if (std::abs(delta) >= 1.0)
    throw std::domain_error("im_energy_gapless: requires |delta| < 1");
  const ThermoParams p = ThermoParams::make(delta, g);
  if (!std::isfinite(p.lambda0))
    throw std::domain_error("im_energy_gapless: lambda0 undefined for g <= g_c");
  const double gamma = p.gamma_or_phi;
  const double omega_max =
      std::max(20.0, 40.0 / std::min(1.0, M_PI / gamma - 1.0));
  const double seg = std::min(M_PI / std::max(std::abs(p.lambda0), 1e-12), 5.0);
  const double integral = numerics::integrate_segmented(
      [&](double w) { return scalefree_integrand(delta, g, w); }, 0.0,
      omega_max, seg, quad_tol);
  ThermoResult r;
  r.e_boundary = boundary_mode_energy(delta, g);
  r.e_scalefree = std::sin(gamma) / gamma * integral;
  r.im_total = r.e_boundary + r.e_scalefree;
  return r;
}

inline ThermoResult im_energy_gapped(double delta, double g) {
  if (!(delta < -1.0))
    throw std::domain_error("im_energy_gapped: requires delta < -1");
  if (g < 0.0) throw std::domain_error("im_energy_gapped: requires g >= 0");
  const ThermoParams p = ThermoParams::make(delta, g);
  const double phi = p.gamma_or_phi;
  const double sh = std::sinh(phi);
  double sum = 0.0;
  for (int m = 1; m < 20000; ++m) {
    const double envelope = sh * std::exp(-2.0 * m * phi);
    if (envelope < 1e-16) break;
    sum += sh * std::sin(m * phi * p.lambda0) * std::tanh(m * phi) *
           std::exp(-2.0 * m * phi);
  }
  ThermoResult r;
  r.e_boundary = boundary_mode_energy(delta, g);
  r.e_scalefree = sum;
  r.im_total = r.e_boundary + r.e_scalefree;
  return r;
}

inline double string_im_energy(double delta, double g) {
  if (std::abs(delta) <= 1.0)
    throw std::domain_error("string_im_energy: requires |delta| > 1");
  return 0.5 * g;
}

}  // namespace spinchain::thermo
