#pragma once

// Post-selection dynamics: normalized RK4 integration of
// d psi / dt = -i H psi with renormalization after every step.  The decay
// of the norm carries the non-Hermitian part; renormalizing reproduces the
// conditional (no-jump) evolution, and at long times the trajectory locks
// onto the eigenstate with the largest Im(E).  The instantaneous estimate
// g (<Sz_N> - <Sz_1>)/2 equals Im<H> along the trajectory.

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "spectral.hpp"

namespace spinchain::dynamics {

using cplx = std::complex<double>;
using model::ModelParams;
using model::SectorBasis;
using model::StateVector;

struct Observables {
  bool boundary_polarization = true;
  bool full_profile = true;
  bool im_estimate = true;
};

struct EvolutionConfig {
  double dt = 0.0;  // <= 0 selects the default 0.02/g
  double t_max = 0.0;
  int record_every = 1;
  Observables observables{};
};

struct TimeSeries {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> values;
  StateVector final_state;
};

inline StateVector domain_wall_state(const SectorBasis& basis) {
  if (2 * basis.n_magnons != basis.n_sites)
    throw std::invalid_argument("domain_wall_state: requires M = N/2");
  const int n = basis.n_sites;
  const std::uint64_t mask = ((std::uint64_t(1) << (n / 2)) - 1) << (n / 2);
  StateVector psi(basis);
  psi.amplitudes[basis.index_of(mask)] = 1.0;
  return psi;
}

inline StateVector hermitian_ground_state(double delta, int n_sites,
                                          const SectorBasis& basis,
                                          double tol) {
  if (2 * basis.n_magnons != basis.n_sites || basis.n_sites != n_sites)
    throw std::invalid_argument("hermitian_ground_state: requires M = N/2 basis");
  ModelParams params;
  params.n_sites = n_sites;
  params.delta = delta;
  params.g = 0.0;
  spectral::EigenTarget target;
  target.kind = spectral::EigenKind::min_real;
  target.tolerance = tol;
  spectral::SpectrumRecord rec =
      spectral::targeted_eigenpair(params, basis, target);
  StateVector psi = std::move(*rec.eigenvector);
  psi.normalize();
  return psi;
}

inline std::vector<double> polarization_profile(const StateVector& psi) {
  if (!psi.basis)
    throw std::invalid_argument("polarization_profile: state has no basis");
  std::vector<double> prof(psi.basis->n_sites);
  for (int s = 1; s <= psi.basis->n_sites; ++s)
    prof[s - 1] = model::local_sz_expectation(psi, s);
  return prof;
}

inline TimeSeries evolve(const ModelParams& params, const StateVector& psi0,
                         const EvolutionConfig& cfg) {
  if (!psi0.basis)
    throw std::invalid_argument("evolve: initial state has no basis");
  const SectorBasis& basis = *psi0.basis;
  double dt = cfg.dt;
  if (dt <= 0.0) {
    if (params.g <= 0.0)
      throw std::invalid_argument("evolve: dt must be given when g = 0");
    dt = 0.02 / params.g;
  }
  if (cfg.t_max < dt)
    throw std::invalid_argument("evolve: t_max must be at least dt");
  if (cfg.record_every < 1)
    throw std::invalid_argument("evolve: record_every must be positive");

  const spectral::detail::MatFree H{&params, &basis};
  const int n = basis.n_sites;
  spectral::detail::Vec psi =
      Eigen::Map<const spectral::detail::Vec>(psi0.amplitudes.data(),
                                              psi0.amplitudes.size());
  psi.normalize();

  TimeSeries ts;
  auto record = [&](double t) {
    StateVector sv;
    sv.basis = &basis;
    sv.amplitudes.assign(psi.data(), psi.data() + psi.size());
    ts.times.push_back(t);
    const double sz1 = model::local_sz_expectation(sv, 1);
    const double szn = model::local_sz_expectation(sv, n);
    if (cfg.observables.full_profile) {
      for (int s = 1; s <= n; ++s)
        ts.values["sz_" + std::to_string(s)].push_back(
            model::local_sz_expectation(sv, s));
    } else if (cfg.observables.boundary_polarization) {
      ts.values["sz_1"].push_back(sz1);
      ts.values["sz_" + std::to_string(n)].push_back(szn);
    }
    if (cfg.observables.im_estimate)
      ts.values["im_estimate"].push_back(0.5 * params.g * (szn - sz1));
  };

  const long n_steps = static_cast<long>(std::ceil(cfg.t_max / dt - 1e-9));
  record(0.0);
  for (long s = 1; s <= n_steps; ++s) {
    psi = spectral::detail::rk4_step(H, psi, cplx(0.0, -1.0), cplx(0.0, 0.0),
                                     dt);
    const double nrm = psi.norm();
    if (!std::isfinite(nrm) || nrm < 1e-300)
      throw std::runtime_error("evolve: norm collapsed at t = " +
                               std::to_string(s * dt));
    if (nrm > 10.0)
      throw std::runtime_error("evolve: dt instability detected (norm jump " +
                               std::to_string(nrm) + " in one step)");
    psi /= nrm;
    if (s % cfg.record_every == 0 || s == n_steps) record(s * dt);
  }

  ts.final_state.basis = &basis;
  ts.final_state.amplitudes.assign(psi.data(), psi.data() + psi.size());
  return ts;
}

}  // namespace spinchain::dynamics
