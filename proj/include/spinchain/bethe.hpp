#pragma once

// Discrete Bethe-equation solver for the dissipative boundary chain.
//
// Working variables are the magnon momenta beta_j = e^{i k_j}.  Each root
// obeys
//
//   beta^{2N} (beta - dp)(beta - dm) / [(1 - dp beta)(1 - dm beta)]
//     = prod_{l != j} S(beta_j, beta_l),
//
//   S(b, c) = [(1 - 2 delta b + b c)((b + c) - 2 delta b c)]
//           / [(1 - 2 delta c + b c)((b + c) - 2 delta)],
//
// with dp = delta + ig, dm = delta - ig.  Residuals are evaluated in the
// denominator-cleared form A - B normalized by max(|A|, |B|), which is
// finite at the kinematic poles and invariant under any inversion
// beta -> 1/beta.  The boundary root approaches dm to within ~ |dm|^{-2N},
// which drops below machine epsilon already for moderate N; the solver
// therefore works with its offset eps = beta - dm as the unknown, so that
// the (beta - dm) factor of the cleared form is eps exactly and the row
// keeps full relative precision however small the offset becomes.  At
// delta = 0 the system decouples into the polynomial
// beta^{2N+2} + g^2 beta^{2N} - g^2 beta^2 - 1 = 0, whose roots seed an
// adiabatic continuation: small steps in delta, then in g, re-solving by a
// damped Newton iteration at each step while steering clear of the
// critical manifolds delta^2 + g^2 = 1 and |delta| = 1.
//
// The eigenstate built from a root set has energy
//   E = -(N-1) delta / 4 + sum_j (delta - (beta_j + 1/beta_j)/2)
// and, for verification-scale M, an explicit wavefunction given by a sum
// over permutations and chiralities eta_j = +-1 with one-particle factor
// eta (1 - dm z) z^{-(N+1)} and pair factor
// (1 - 2 delta z_l + z_l/z_k)(1 - 2 delta z_k + z_k z_l)/z_l, z = beta^eta.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "numerics.hpp"

namespace spinchain::bethe {

using cplx = std::complex<double>;
using model::ModelParams;

enum class StateTarget { steady, ground };

struct BetheState {
  std::vector<cplx> roots;
  std::vector<int> quantum_numbers;  // 0 marks the boundary mode, j >= 1 the
                                     // j-th unit-circle root counted from the
                                     // band bottom
  double residual = 0.0;
  cplx energy = 0.0;
  ModelParams params;
  std::vector<std::array<double, 2>> path;  // (delta, g) waypoints traversed
};

struct ContinuationPath {
  double g_initial = 1.5;
  double step_delta = 0.01;
  double step_g = 0.01;
  double margin = 0.05;
  double min_step = 1e-4;
};

inline cplx bethe_energy(const ModelParams& params,
                         const std::vector<cplx>& roots) {
  if (params.delta_prime != 0.0)
    throw std::invalid_argument("bethe_energy: integrable line requires delta_prime = 0");
  cplx e = -0.25 * (params.n_sites - 1) * params.delta;
  for (const cplx& b : roots) {
    if (std::abs(b) < 1e-12)
      throw std::invalid_argument("bethe_energy: root at zero");
    e += params.delta - 0.5 * (b + 1.0 / b);
  }
  return e;
}

// Roots of beta^{2N+2} + g^2 beta^{2N} - g^2 beta^2 - 1 at the free-fermion
// point.  The polynomial factors through beta^{2N} (beta^2 + g^2) =
// g^2 beta^2 + 1, so instead of a companion-matrix solve (which loses the
// clustered boundary pair beyond moderate N) each root comes from a well
// conditioned scalar equation: on the unit circle beta = e^{i theta} the
// equation reduces to (N-1) theta + arg(e^{2 i theta} + g^2) = j pi with
// j = 1..N-2, and the off-circle boundary pair is beta^2 = -(g^2 + eps)
// with eps (g^2 + eps)^N = g^4 - 1 + g^2 eps, an offset that shrinks like
// g^{-2N} and underflows harmlessly to the double nearest the true root.
inline std::vector<cplx> free_fermion_roots(int n_sites, double g) {
  if (g <= 1.0)
    throw std::invalid_argument("free_fermion_roots: need g > 1 for the boundary mode");
  if (n_sites < 2 || n_sites % 2 != 0)
    throw std::invalid_argument("free_fermion_roots: n_sites must be even and >= 2");
  const double g2 = g * g;
  std::vector<cplx> roots;
  roots.reserve(2 * n_sites + 2);
  roots.emplace_back(1.0, 0.0);
  roots.emplace_back(-1.0, 0.0);

  const auto phase = [&](double th) {
    return (n_sites - 1) * th +
           std::atan2(std::sin(2.0 * th), std::cos(2.0 * th) + g2);
  };
  for (int j = 1; j <= n_sites - 2; ++j) {
    double lo = 0.0, hi = M_PI;
    const double target = j * M_PI;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phase(mid) < target ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    if (std::abs(phase(theta) - target) > 1e-9 * n_sites)
      throw std::runtime_error("free_fermion_roots: band phase solve failed");
    roots.push_back(std::polar(1.0, theta));
    roots.push_back(std::polar(1.0, -theta));
  }

  double eps = (g2 * g2 - 1.0) * std::exp(-n_sites * std::log(g2));
  for (int it = 0; it < 100; ++it) {
    const double next =
        (g2 * g2 - 1.0 + g2 * eps) * std::exp(-n_sites * std::log(g2 + eps));
    if (!(std::abs(next - eps) > 1e-16 * eps)) {
      eps = next;
      break;
    }
    eps = next;
  }
  const double r = std::sqrt(g2 + eps);
  roots.emplace_back(0.0, r);
  roots.emplace_back(0.0, -r);
  roots.emplace_back(0.0, 1.0 / r);
  roots.emplace_back(0.0, -1.0 / r);
  return roots;
}

// Canonical inversion-pair representative: |beta| >= 1, and on the unit
// circle the Im(beta) > 0 member.
inline std::vector<cplx> canonicalize_roots(std::vector<cplx> roots) {
  for (cplx& b : roots) {
    const double ab = std::abs(b);
    if (ab < 1e-12)
      throw std::invalid_argument("canonicalize_roots: root at zero");
    if (ab < 1.0 - 1e-12)
      b = 1.0 / b;
    else if (std::abs(ab - 1.0) <= 1e-12 && b.imag() < 0.0)
      b = 1.0 / b;
  }
  return roots;
}

inline BetheState select_state_roots(const ModelParams& seed_params,
                                     const std::vector<cplx>& all_roots,
                                     int n_magnons,
                                     StateTarget target = StateTarget::steady) {
  if (n_magnons < 0 || n_magnons > seed_params.n_sites / 2)
    throw std::invalid_argument("select_state_roots: need 0 <= M <= N/2");

  BetheState state;
  state.params = seed_params;
  state.params.delta = 0.0;
  if (n_magnons == 0) {
    state.energy = bethe_energy(state.params, {});
    state.path.push_back({0.0, seed_params.g});
    return state;
  }

  // Deduplicate inversion pairs and drop the spurious roots at +-1.
  std::vector<cplx> unit, off;
  for (const cplx& r : all_roots) {
    if (std::abs(r - 1.0) < 1e-8 || std::abs(r + 1.0) < 1e-8) continue;
    const double ar = std::abs(r);
    if (std::abs(ar - 1.0) <= 1e-6) {
      if (r.imag() > 0.0) unit.push_back(r);
    } else if (ar > 1.0) {
      off.push_back(r);
    }
  }
  if (off.empty())
    throw std::runtime_error("select_state_roots: no boundary candidate found");

  const cplx dm = state.params.delta_minus();
  cplx boundary = off.front();
  for (const cplx& r : off)
    if (std::abs(r - dm) < std::abs(boundary - dm)) boundary = r;

  // Single-magnon energy delta - (beta + 1/beta)/2 = -cos(k) at delta = 0;
  // fill from the band bottom outward.  The steady and ground seeds
  // coincide at the free-fermion point; the continuation direction in
  // delta is what distinguishes the two targets.
  (void)target;
  std::sort(unit.begin(), unit.end(), [](const cplx& a, const cplx& b) {
    return -0.5 * (a + 1.0 / a).real() < -0.5 * (b + 1.0 / b).real();
  });
  if (static_cast<int>(unit.size()) < n_magnons - 1)
    throw std::runtime_error("select_state_roots: fewer than M candidates after dedup");

  state.roots.push_back(boundary);
  state.quantum_numbers.push_back(0);
  for (int j = 0; j < n_magnons - 1; ++j) {
    state.roots.push_back(unit[j]);
    state.quantum_numbers.push_back(j + 1);
  }
  state.energy = bethe_energy(state.params, state.roots);
  state.path.push_back({0.0, seed_params.g});
  return state;
}

namespace detail {

// Denominator-cleared residual pieces A_j = LHS_num * RHS_den and
// B_j = RHS_num * LHS_den for root j.
inline void residual_parts(const ModelParams& p, const std::vector<cplx>& b,
                           std::size_t j, cplx& a_part, cplx& b_part) {
  const cplx dp = p.delta_plus();
  const cplx dm = p.delta_minus();
  const double delta = p.delta;
  const cplx bj = b[j];
  const cplx lhs_num =
      std::pow(bj, 2 * p.n_sites) * (bj - dp) * (bj - dm);
  const cplx lhs_den = (1.0 - dp * bj) * (1.0 - dm * bj);
  cplx rhs_num = 1.0, rhs_den = 1.0;
  for (std::size_t l = 0; l < b.size(); ++l) {
    if (l == j) continue;
    const cplx bl = b[l];
    rhs_num *= (1.0 - 2.0 * delta * bj + bj * bl) *
               ((bj + bl) - 2.0 * delta * bj * bl);
    rhs_den *= (1.0 - 2.0 * delta * bl + bj * bl) * ((bj + bl) - 2.0 * delta);
  }
  a_part = lhs_num * rhs_den;
  b_part = rhs_num * lhs_den;
}

// Residual rows for a working vector that carries the boundary root (the
// one whose quantum number is 0, slot bi) as its offset eps = beta - dm
// rather than as beta itself.  For that row A = eps * C with
// C = beta^{2N} (beta - dp) * rhs_den, so the normalized residual is
// rewritten as (eps - B/C) / max(|eps|, |B/C|): identical in value to the
// plain form, but exact in eps even once |eps| falls below machine epsilon
// relative to |beta|.  Slots other than bi hold roots and use the plain
// cleared form.  bi < 0 means no slot is tracked.
inline void tracked_rows(const ModelParams& p, const std::vector<cplx>& x,
                         std::ptrdiff_t bi, std::vector<cplx>& g,
                         std::vector<double>& scale) {
  const std::size_t m = x.size();
  g.resize(m);
  scale.resize(m);
  const cplx dp = p.delta_plus();
  const cplx dm = p.delta_minus();
  const double delta = p.delta;
  std::vector<cplx> b = x;
  if (bi >= 0) b[bi] = dm + x[bi];
  for (std::size_t j = 0; j < m; ++j) {
    if (static_cast<std::ptrdiff_t>(j) == bi) {
      const cplx bj = b[j];
      cplx c = std::pow(bj, 2 * p.n_sites) * (bj - dp);
      cplx num = (1.0 - dp * bj) * (1.0 - dm * bj);
      for (std::size_t l = 0; l < m; ++l) {
        if (l == j) continue;
        const cplx bl = b[l];
        c *= (1.0 - 2.0 * delta * bl + bj * bl) * ((bj + bl) - 2.0 * delta);
        num *= (1.0 - 2.0 * delta * bj + bj * bl) *
               ((bj + bl) - 2.0 * delta * bj * bl);
      }
      const cplx r = num / c;
      g[j] = x[j] - r;
      scale[j] = std::max({std::abs(x[j]), std::abs(r), 1e-300});
    } else {
      cplx a, bb;
      residual_parts(p, b, j, a, bb);
      g[j] = a - bb;
      scale[j] = std::max({std::abs(a), std::abs(bb), 1e-300});
    }
  }
}

inline void check_roots(const std::vector<cplx>& roots) {
  for (std::size_t j = 0; j < roots.size(); ++j) {
    if (std::abs(roots[j]) < 1e-12)
      throw std::invalid_argument("bethe_residual: root at zero");
    for (std::size_t l = j + 1; l < roots.size(); ++l)
      if (std::abs(roots[j] - roots[l]) < 1e-12 ||
          std::abs(roots[j] - 1.0 / roots[l]) < 1e-12)
        throw std::invalid_argument("bethe_residual: degenerate root pair");
  }
}

}  // namespace detail

inline std::vector<cplx> bethe_residual(const ModelParams& params,
                                        const std::vector<cplx>& roots) {
  detail::check_roots(roots);
  std::vector<cplx> f(roots.size());
  for (std::size_t j = 0; j < roots.size(); ++j) {
    cplx a, b;
    detail::residual_parts(params, roots, j, a, b);
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale < 1e-300)
      throw std::runtime_error("bethe_residual: degenerate input (0/0 clearing)");
    f[j] = (a - b) / scale;
  }
  return f;
}

inline double max_abs_residual(const ModelParams& params,
                               const std::vector<cplx>& roots) {
  double worst = 0.0;
  for (const cplx& f : bethe_residual(params, roots))
    worst = std::max(worst, std::abs(f));
  return worst;
}

inline BetheState newton_refine(const ModelParams& params,
                                const BetheState& seed, double tol,
                                double basin_tol = 1e-2) {
  const std::size_t m = seed.roots.size();
  BetheState out = seed;
  out.params = params;
  if (m == 0) {
    out.residual = 0.0;
    out.energy = bethe_energy(params, out.roots);
    return out;
  }

  // Slot of the boundary root, if the seed marks one; that slot of the
  // working vector holds eps = beta - dm instead of beta.
  std::ptrdiff_t bi = -1;
  for (std::size_t j = 0; j < seed.quantum_numbers.size() && bi < 0; ++j)
    if (seed.quantum_numbers[j] == 0) bi = static_cast<std::ptrdiff_t>(j);
  const cplx dm = params.delta_minus();

  auto raw = [&](const std::vector<cplx>& x, std::vector<cplx>& g,
                 std::vector<double>& scale) {
    detail::tracked_rows(params, x, bi, g, scale);
  };
  auto normalized_max = [&](const std::vector<cplx>& x) {
    std::vector<cplx> g;
    std::vector<double> s;
    raw(x, g, s);
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      worst = std::max(worst, std::abs(g[j]) / s[j]);
    return worst;
  };

  // The boundary row reads g = eps - r(x) and r depends on eps only through
  // terms of order eps itself, so given the other roots its zero is a single
  // assignment away.  Snapping the slot before judging a candidate matters
  // once the true offset falls below the rounding noise of the incoming
  // seed: the row's relative residual is then pinned near 1 for every
  // damped step and no partial step can register as an improvement.  The
  // snap is kept only when it lowers that row's residual, which protects
  // weakly pinched states where the assignment is not contractive.
  auto snapped = [&](std::vector<cplx> xx) {
    if (bi < 0) return xx;
    std::vector<cplx> gg;
    std::vector<double> ss;
    raw(xx, gg, ss);
    const double before = std::abs(gg[bi]) / ss[bi];
    std::vector<cplx> xs = xx;
    xs[bi] -= gg[bi];
    raw(xs, gg, ss);
    return std::abs(gg[bi]) / ss[bi] < before ? xs : xx;
  };

  std::vector<cplx> x = seed.roots;
  if (bi >= 0) x[bi] -= dm;
  x = snapped(x);
  double resid = normalized_max(x);
  if (resid > basin_tol)
    throw std::invalid_argument("newton_refine: seed residual " +
                                std::to_string(resid) + " outside basin " +
                                std::to_string(basin_tol));

  for (int iter = 0; iter < 60 && resid > tol; ++iter) {
    std::vector<cplx> g0;
    std::vector<double> s0;
    raw(x, g0, s0);

    Eigen::MatrixXcd jac(m, m);
    Eigen::VectorXcd rhs(m);
    for (std::size_t j = 0; j < m; ++j) rhs(j) = -g0[j] / s0[j];
    for (std::size_t l = 0; l < m; ++l) {
      const cplx rl = static_cast<std::ptrdiff_t>(l) == bi ? dm + x[l] : x[l];
      const double h = 1e-6 * std::max(1.0, std::abs(rl));
      std::vector<cplx> xp = x, xm = x;
      xp[l] += h;
      xm[l] -= h;
      std::vector<cplx> gp, gm;
      std::vector<double> sp, sm;
      raw(xp, gp, sp);
      raw(xm, gm, sm);
      for (std::size_t j = 0; j < m; ++j)
        jac(j, l) = (gp[j] - gm[j]) / (2.0 * h * s0[j]);
    }

    // The boundary-offset column grows like 1/|eps|, which swamps the
    // pivoted-QR rank threshold once the offset nears machine scale.
    // Equilibrating columns restores a meaningful rank test and returns
    // the step in each unknown's own scale.
    Eigen::VectorXd colscale(m);
    for (std::size_t l = 0; l < m; ++l) {
      colscale(l) = jac.col(l).norm();
      if (!(colscale(l) > 1e-300)) colscale(l) = 1.0;
      jac.col(l) /= colscale(l);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(jac);
    if (qr.rank() < static_cast<Eigen::Index>(m))
      throw std::runtime_error("newton_refine: Jacobian singular");
    Eigen::VectorXcd delta = qr.solve(rhs);
    for (std::size_t l = 0; l < m; ++l) delta(l) /= colscale(l);

    bool accepted = false;
    double t = 1.0;
    for (int halve = 0; halve <= 30; ++halve, t *= 0.5) {
      std::vector<cplx> xt = x;
      bool valid = true;
      for (std::size_t l = 0; l < m; ++l) {
        xt[l] += t * delta(l);
        const cplx rl =
            static_cast<std::ptrdiff_t>(l) == bi ? dm + xt[l] : xt[l];
        if (!std::isfinite(rl.real()) || !std::isfinite(rl.imag()) ||
            std::abs(rl) < 1e-10)
          valid = false;
      }
      if (!valid) continue;
      double rt;
      try {
        xt = snapped(std::move(xt));
        rt = normalized_max(xt);
      } catch (const std::exception&) {
        continue;  // collision mid-step; shorten
      }
      if (rt < resid) {
        x = std::move(xt);
        resid = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled; return best iterate with its residual
  }

  out.roots = x;
  if (bi >= 0) out.roots[bi] = dm + x[bi];
  out.residual = resid;
  out.energy = bethe_energy(params, out.roots);
  return out;
}

inline BetheState adiabatic_solve(const ModelParams& target, int n_magnons,
                                  const ContinuationPath& path,
                                  StateTarget which,
                                  double tol = 1e-10) {
  if (target.delta_prime != 0.0)
    throw std::invalid_argument("adiabatic_solve: integrable line requires delta_prime = 0");
  if (path.g_initial <= 1.0)
    throw std::invalid_argument("adiabatic_solve: g_initial must exceed 1");
  const double r = std::hypot(target.delta, target.g);
  if (std::abs(target.delta) > 1.0 - path.margin)
    throw std::invalid_argument("adiabatic_solve: target too close to |delta| = 1");
  if (r < 1.0 + path.margin)
    throw std::invalid_argument(
        "adiabatic_solve: target inside or near the PT circle (g <= g_c region unreachable)");

  ModelParams p = target;
  p.delta = 0.0;
  p.g = path.g_initial;
  BetheState state = select_state_roots(
      p, free_fermion_roots(target.n_sites, path.g_initial), n_magnons, which);

  // Walk one parameter toward its target with halving-on-failure retries.
  auto walk = [&](double ModelParams::*field, double goal, double step) {
    double h = step;
    while (std::abs(p.*field - goal) > 1e-14) {
      const double remain = goal - p.*field;
      const double inc = std::copysign(std::min(h, std::abs(remain)), remain);
      ModelParams trial = p;
      trial.*field += inc;
      BetheState refined;
      bool ok = true;
      try {
        refined = newton_refine(trial, state, tol, 1e6);
        ok = refined.residual <= tol;
      } catch (const std::exception&) {
        ok = false;
      }
      if (ok) {
        p = trial;
        refined.path.push_back({p.delta, p.g});
        state = std::move(refined);
        h = std::min(step, 2.0 * h);
      } else {
        h *= 0.5;
        if (h < path.min_step)
          throw std::runtime_error(
              "adiabatic_solve: continuation stalled at delta = " +
              std::to_string(p.delta) + ", g = " + std::to_string(p.g));
      }
    }
  };

  walk(&ModelParams::delta, target.delta, path.step_delta);
  walk(&ModelParams::g, target.g, path.step_g);

  // One more refine at the target re-derives the boundary offset from the
  // stored coordinate and reports the residual of the tracked system; it
  // also covers targets that coincide with the seed point.  The inversion
  // flips of canonicalization leave every row modulus unchanged, so the
  // residual stays valid for the returned roots.
  if (!state.roots.empty()) state = newton_refine(target, state, tol, 1e6);
  state.roots = canonicalize_roots(state.roots);
  state.params = target;
  state.energy = bethe_energy(target, state.roots);
  return state;
}

inline model::StateVector bethe_wavefunction(const ModelParams& params,
                                             const BetheState& state,
                                             const model::SectorBasis& basis) {
  const int m = static_cast<int>(state.roots.size());
  if (m > 3)
    throw std::invalid_argument("bethe_wavefunction: supported for M <= 3 only");
  if (basis.n_magnons != m || basis.n_sites != params.n_sites)
    throw std::invalid_argument("bethe_wavefunction: basis does not match state");
  if (params.delta_prime != 0.0)
    throw std::invalid_argument("bethe_wavefunction: integrable line requires delta_prime = 0");

  const cplx dm = params.delta_minus();
  const double delta = params.delta;
  const int n = params.n_sites;

  struct Term {
    std::vector<cplx> z;
    cplx amp;
  };
  std::vector<Term> terms;

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    int inversions = 0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (perm[a] > perm[b]) ++inversions;
    const double psign = (inversions % 2 == 0) ? 1.0 : -1.0;

    for (int mask = 0; mask < (1 << m); ++mask) {
      Term t;
      t.z.resize(m);
      cplx amp = psign;
      for (int j = 0; j < m; ++j) {
        const double eta = (mask >> j) & 1 ? -1.0 : 1.0;
        const cplx beta = state.roots[perm[j]];
        t.z[j] = (eta > 0) ? beta : 1.0 / beta;
        amp *= eta * (1.0 - dm * t.z[j]) * std::pow(t.z[j], -(n + 1));
      }
      for (int k = 0; k < m; ++k)
        for (int l = k + 1; l < m; ++l)
          amp *= (1.0 - 2.0 * delta * t.z[l] + t.z[l] / t.z[k]) *
                 (1.0 - 2.0 * delta * t.z[k] + t.z[k] * t.z[l]) / t.z[l];
      t.amp = amp;
      terms.push_back(std::move(t));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  model::StateVector psi(basis);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const std::uint64_t c = basis.configs[i];
    std::array<int, 3> sites{};
    int found = 0;
    for (int s = 0; s < n; ++s)
      if ((c >> s) & 1) sites[found++] = s + 1;
    cplx acc = 0.0;
    for (const Term& t : terms) {
      cplx prod = t.amp;
      for (int j = 0; j < m; ++j) prod *= std::pow(t.z[j], sites[j]);
      acc += prod;
    }
    psi.amplitudes[i] = acc;
  }
  if (psi.norm() < 1e-300)
    throw std::runtime_error("bethe_wavefunction: amplitude identically zero");
  return psi;
}

// Boundary-string ladder beta_{j+1} = 2 delta - 1/beta_j seeded at
// beta_1 = delta - ig.  Scattering among the string constituents is
// neglected, as in the underlying approximation.
inline std::vector<cplx> boundary_string_roots(double delta, double g, int m) {
  if (m < 1) throw std::invalid_argument("boundary_string_roots: need M >= 1");
  std::vector<cplx> roots;
  roots.reserve(m);
  cplx b(delta, -g);
  roots.push_back(b);
  for (int j = 1; j < m; ++j) {
    if (std::abs(b) < 1e-12)
      throw std::runtime_error("boundary_string_roots: recursion hit zero");
    b = 2.0 * delta - 1.0 / b;
    roots.push_back(b);
  }
  return roots;
}

// Im(E) of the length-M boundary string; the recursion telescopes to
// -(Im(beta_1) + Im(1/beta_M))/2.
inline double string_state_im_energy(double delta, double g, int m) {
  const std::vector<cplx> roots = boundary_string_roots(delta, g, m);
  return -0.5 * (roots.front() + 1.0 / roots.back()).imag();
}

inline std::array<double, 2> string_fixed_points(double delta) {
  if (std::abs(delta) < 1.0)
    throw std::invalid_argument("string_fixed_points: need |delta| >= 1");
  const double s = std::sqrt(delta * delta - 1.0);
  return {delta + s, delta - s};
}

}  // namespace spinchain::bethe
