#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "spinchain/bethe.hpp"
#include "spinchain/model.hpp"
#include "spinchain/spectral.hpp"

namespace bt = spinchain::bethe;
namespace md = spinchain::model;
namespace sp = spinchain::spectral;
using cplx = std::complex<double>;

namespace {

md::ModelParams make_params(int n, double delta, double g) {
  md::ModelParams p;
  p.n_sites = n;
  p.delta = delta;
  p.g = g;
  return p;
}

std::vector<cplx> dense_eigenvalues(const md::ModelParams& p, int m) {
  const auto basis = md::build_sector_basis(p.n_sites, m);
  const auto h = md::assemble_dense(p, basis);
  std::vector<cplx> eigs;
  for (const auto& r : sp::full_spectrum(h, false)) eigs.push_back(r.eigenvalue);
  return eigs;
}

double wavefunction_residual(const md::ModelParams& p,
                             const md::SectorBasis& basis,
                             const md::StateVector& psi, cplx energy) {
  const auto hpsi = md::apply_hamiltonian(p, basis, psi);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    num += std::norm(hpsi.amplitudes[i] - energy * psi.amplitudes[i]);
    den += std::norm(psi.amplitudes[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("free-fermion roots factor through the reduced cubic") {
  // At N=2, g=2 the polynomial is b^6 + 4 b^4 - 4 b^2 - 1, i.e. with
  // u = b^2: (u - 1)(u^2 + 5u + 1) = 0.
  const auto roots = bt::free_fermion_roots(2, 2.0);
  REQUIRE(roots.size() == 6);
  const double s21 = std::sqrt(21.0);
  const double u1 = 0.5 * (-5.0 + s21);
  const double u2 = 0.5 * (-5.0 - s21);
  int near_unit = 0;
  for (const cplx& r : roots) {
    const cplx u = r * r;
    const double d = std::min({std::abs(u - 1.0), std::abs(u - u1),
                               std::abs(u - u2)});
    CHECK(d < 1e-12);
    if (std::abs(u - 1.0) < 1e-8) ++near_unit;
  }
  CHECK(near_unit == 2);
}

TEST_CASE("free-fermion roots validate their domain") {
  CHECK_THROWS_AS(bt::free_fermion_roots(2, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(bt::free_fermion_roots(3, 1.5), std::invalid_argument);
}

TEST_CASE("canonicalization picks the outer inversion partner") {
  const cplx inside(0.2, 0.1);
  auto out = bt::canonicalize_roots({inside});
  CHECK(std::abs(out[0] - 1.0 / inside) < 1e-15);

  const cplx lower = std::polar(1.0, -0.3);
  out = bt::canonicalize_roots({lower});
  CHECK(out[0].imag() > 0.0);
  CHECK(std::abs(out[0] - std::polar(1.0, 0.3)) < 1e-15);

  CHECK_THROWS_AS(bt::canonicalize_roots({cplx(0.0, 0.0)}),
                  std::invalid_argument);
}

TEST_CASE("seed selection pins the boundary mode") {
  const auto all = bt::free_fermion_roots(2, 2.0);
  const auto state = bt::select_state_roots(make_params(2, 0.0, 2.0), all, 1);
  REQUIRE(state.roots.size() == 1);
  const double mag = std::sqrt(0.5 * (5.0 + std::sqrt(21.0)));
  CHECK(std::abs(state.roots[0] - cplx(0.0, -mag)) < 1e-10);
  CHECK(state.quantum_numbers == std::vector<int>{0});
}

TEST_CASE("seed selection reports a candidate shortage") {
  const auto all = bt::free_fermion_roots(2, 2.0);
  CHECK_THROWS(bt::select_state_roots(make_params(2, 0.0, 2.0), all, 2));
}

TEST_CASE("any subset of free-fermion roots solves the coupled equations") {
  // The two-magnon scattering factors cancel at delta = 0, so the full
  // residual must vanish on polynomial roots.
  const auto params = make_params(6, 0.0, 1.5);
  const auto state =
      bt::select_state_roots(params, bt::free_fermion_roots(6, 1.5), 3);
  REQUIRE(state.roots.size() == 3);
  CHECK(bt::max_abs_residual(params, state.roots) < 1e-10);
}

TEST_CASE("reference energy with no magnons") {
  const auto p = make_params(8, 0.6, 1.0);
  CHECK(std::abs(bt::bethe_energy(p, {}) - cplx(-7.0 * 0.6 / 4.0, 0.0)) <
        1e-15);
  CHECK_THROWS_AS(bt::bethe_energy(p, {cplx(0.0, 0.0)}),
                  std::invalid_argument);
  auto broken = p;
  broken.delta_prime = 0.3;
  CHECK_THROWS_AS(bt::bethe_energy(broken, {cplx(1.0, 1.0)}),
                  std::invalid_argument);
}

TEST_CASE("residual moduli are invariant under root inversion") {
  // Not a solution: the invariance is algebraic, so it must hold at
  // generic well-conditioned points too.
  const auto p = make_params(6, 0.8, 0.9);
  const std::vector<cplx> roots = {cplx(0.3, 0.4), cplx(1.2, -0.7),
                                   cplx(-0.5, 1.1)};
  const auto f0 = bt::bethe_residual(p, roots);
  for (std::size_t k = 0; k < roots.size(); ++k) {
    auto flipped = roots;
    flipped[k] = 1.0 / flipped[k];
    const auto f1 = bt::bethe_residual(p, flipped);
    for (std::size_t j = 0; j < roots.size(); ++j)
      CHECK(std::abs(f1[j]) ==
            Catch::Approx(std::abs(f0[j])).epsilon(1e-10).margin(1e-12));
  }
}

TEST_CASE("residual rejects degenerate root sets") {
  const auto p = make_params(4, 0.5, 0.8);
  CHECK_THROWS_AS(
      bt::bethe_residual(p, {cplx(1.2, 0.3), cplx(1.2, 0.3)}),
      std::invalid_argument);
  // An exact inversion pair collapses the pairwise factors.
  const cplx b(1.3, 0.4);
  CHECK_THROWS_AS(bt::bethe_residual(p, {b, 1.0 / b}), std::invalid_argument);
}

TEST_CASE("newton polishing recovers a perturbed solution") {
  const auto params = make_params(6, 0.0, 1.5);
  auto state =
      bt::select_state_roots(params, bt::free_fermion_roots(6, 1.5), 3);
  auto seed = state;
  for (auto& r : seed.roots) r += cplx(1e-5, -5e-6);
  const auto refined = bt::newton_refine(params, seed, 1e-12);
  CHECK(refined.residual < 1e-12);
  for (std::size_t j = 0; j < state.roots.size(); ++j)
    CHECK(std::abs(refined.roots[j] - state.roots[j]) < 1e-8);
}

TEST_CASE("newton rejects seeds outside the requested basin") {
  const auto params = make_params(6, 0.3, 1.2);
  bt::BetheState seed;
  seed.roots = {cplx(5.0, 5.0), cplx(-3.0, 2.0), cplx(0.5, -2.0)};
  CHECK_THROWS_AS(bt::newton_refine(params, seed, 1e-12, 1e-12),
                  std::invalid_argument);
}

TEST_CASE("adiabatic continuation reaches the steady state") {
  const auto target = make_params(6, 0.8, 0.8);
  const auto state =
      bt::adiabatic_solve(target, 3, bt::ContinuationPath{}, bt::StateTarget::steady);
  CHECK(state.residual <= 1e-10);
  REQUIRE(!state.path.empty());
  CHECK(state.path.back()[0] == Catch::Approx(0.8).margin(1e-12));
  CHECK(state.path.back()[1] == Catch::Approx(0.8).margin(1e-12));

  const auto eigs = dense_eigenvalues(target, 3);
  const auto top = *std::max_element(
      eigs.begin(), eigs.end(),
      [](cplx a, cplx b) { return a.imag() < b.imag(); });
  CHECK(std::abs(state.energy - top) < 1e-8);
}

TEST_CASE("adiabatic continuation reaches the ground state") {
  // g large enough that the lowest level is already a split conjugate
  // pair at this size; the route must land on its amplified branch.
  const auto target = make_params(6, -0.8, 1.2);
  const auto state =
      bt::adiabatic_solve(target, 3, bt::ContinuationPath{}, bt::StateTarget::ground);
  CHECK(state.residual <= 1e-10);

  const auto eigs = dense_eigenvalues(target, 3);
  cplx bottom = eigs.front();
  for (const cplx& e : eigs)
    if (e.real() < bottom.real() - 1e-9 ||
        (std::abs(e.real() - bottom.real()) < 1e-9 && e.imag() > bottom.imag()))
      bottom = e;
  CHECK(bottom.imag() > 0.1);
  CHECK(std::abs(state.energy - bottom) < 1e-8);
}

TEST_CASE("continuation survives the boundary-root pinch") {
  // Along the delta leg the boundary root closes in on delta - ig like
  // |delta - ig|^{-2N}; both cases below pass through offsets far smaller
  // than the coordinate's representable resolution and used to stall.
  const auto four = bt::adiabatic_solve(make_params(8, 0.8, 0.8), 4,
                                        bt::ContinuationPath{},
                                        bt::StateTarget::steady);
  CHECK(four.residual <= 1e-10);
  const auto eigs8 = dense_eigenvalues(make_params(8, 0.8, 0.8), 4);
  double nearest8 = 1e300;
  for (const cplx& e : eigs8) nearest8 = std::min(nearest8, std::abs(e - four.energy));
  CHECK(nearest8 < 1e-8);

  const auto two = bt::adiabatic_solve(make_params(16, 0.8, 0.8), 2,
                                       bt::ContinuationPath{},
                                       bt::StateTarget::steady);
  CHECK(two.residual <= 1e-10);
  const auto eigs16 = dense_eigenvalues(make_params(16, 0.8, 0.8), 2);
  double nearest16 = 1e300;
  for (const cplx& e : eigs16) nearest16 = std::min(nearest16, std::abs(e - two.energy));
  CHECK(nearest16 < 1e-8);

  // Half filling at N = 60 pushes the offset to ~1e-21, below the rounding
  // noise of any walk increment; this size only converges if the refiner
  // keeps the boundary slot's row and column in their own scale.
  const auto deep = bt::adiabatic_solve(make_params(60, -0.8, 0.8), 30,
                                        bt::ContinuationPath{},
                                        bt::StateTarget::ground);
  CHECK(deep.residual <= 1e-10);
  CHECK(deep.energy.imag() == Catch::Approx(0.0331685).margin(2e-4));
}

TEST_CASE("adiabatic solver validates its target") {
  bt::ContinuationPath path;
  CHECK_THROWS_AS(
      bt::adiabatic_solve(make_params(6, 0.98, 0.8), 3, path,
                          bt::StateTarget::steady),
      std::invalid_argument);
  CHECK_THROWS_AS(
      bt::adiabatic_solve(make_params(6, 0.3, 0.9), 3, path,
                          bt::StateTarget::steady),
      std::invalid_argument);
  auto broken = make_params(6, 0.8, 0.8);
  broken.delta_prime = 0.1;
  CHECK_THROWS_AS(bt::adiabatic_solve(broken, 3, path, bt::StateTarget::steady),
                  std::invalid_argument);
  path.g_initial = 0.9;
  CHECK_THROWS_AS(
      bt::adiabatic_solve(make_params(6, 0.8, 0.8), 3, path,
                          bt::StateTarget::steady),
      std::invalid_argument);
}

TEST_CASE("single-magnon wavefunction is an eigenvector") {
  const auto target = make_params(6, 0.8, 0.8);
  const auto state = bt::adiabatic_solve(target, 1, bt::ContinuationPath{},
                                         bt::StateTarget::steady);
  const auto basis = md::build_sector_basis(6, 1);
  const auto psi = bt::bethe_wavefunction(target, state, basis);
  CHECK(wavefunction_residual(target, basis, psi, state.energy) < 1e-8);
}

TEST_CASE("two-magnon wavefunction is an eigenvector") {
  const auto target = make_params(8, 0.8, 0.8);
  const auto state = bt::adiabatic_solve(target, 2, bt::ContinuationPath{},
                                         bt::StateTarget::steady);
  const auto basis = md::build_sector_basis(8, 2);
  const auto psi = bt::bethe_wavefunction(target, state, basis);
  CHECK(wavefunction_residual(target, basis, psi, state.energy) < 1e-8);
}

TEST_CASE("free single magnon wavefunction at the seed point") {
  const auto params = make_params(4, 0.0, 1.5);
  const auto state =
      bt::select_state_roots(params, bt::free_fermion_roots(4, 1.5), 1);
  const auto basis = md::build_sector_basis(4, 1);
  const auto psi = bt::bethe_wavefunction(params, state, basis);
  CHECK(wavefunction_residual(params, basis, psi, state.energy) < 1e-10);
}

TEST_CASE("wavefunction guards its supported domain") {
  const auto params = make_params(8, 0.8, 0.8);
  bt::BetheState state;
  state.roots = {cplx(1, 1), cplx(2, 1), cplx(3, 1), cplx(4, 1)};
  const auto basis = md::build_sector_basis(8, 4);
  CHECK_THROWS_AS(bt::bethe_wavefunction(params, state, basis),
                  std::invalid_argument);
}

TEST_CASE("boundary string at the isotropic point has a closed form") {
  const double g = 0.8;
  const auto roots = bt::boundary_string_roots(1.0, g, 3);
  for (int n = 1; n <= 3; ++n) {
    const cplx expected = 1.0 + 1.0 / (cplx(n - 1.0, 0.0) + cplx(0.0, 1.0 / g));
    CHECK(std::abs(roots[n - 1] - expected) < 1e-12);
  }
}

TEST_CASE("string energy telescopes and saturates at g/2") {
  const double delta = 1.25, g = 0.7;
  for (int m = 2; m <= 5; ++m) {
    const auto roots = bt::boundary_string_roots(delta, g, m);
    const auto p = make_params(30, delta, g);
    CHECK(bt::bethe_energy(p, roots).imag() ==
          Catch::Approx(bt::string_state_im_energy(delta, g, m)).margin(1e-12));
  }
  CHECK(bt::string_state_im_energy(delta, g, 25) ==
        Catch::Approx(0.5 * g).margin(1e-10));
}

TEST_CASE("string recursion fixed points") {
  const auto fp = bt::string_fixed_points(1.25);
  CHECK(fp[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(fp[1] == Catch::Approx(0.5).margin(1e-12));
  CHECK_THROWS_AS(bt::string_fixed_points(0.5), std::invalid_argument);
}
