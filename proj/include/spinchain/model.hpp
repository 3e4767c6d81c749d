#pragma once

// Open XXZ chain of spin-1/2 sites with an imaginary boundary field:
//
//   H = -sum_{j=1}^{N-1} (Sx_j Sx_{j+1} + Sy_j Sy_{j+1} + delta Sz_j Sz_{j+1})
//       - delta_prime sum_{j=1}^{N-2} Sz_j Sz_{j+2}
//       + (i g / 2) (Sz_N - Sz_1),        S^a = sigma^a / 2.
//
// Total Sz is conserved, so everything works inside a fixed-magnon sector.
// Configurations are little-endian bitmasks (site 1 = bit 0, set bit = up
// spin) kept in ascending order; the exchange term moves amplitude between
// configurations that differ by one adjacent up-down swap.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spinchain::model {

using cplx = std::complex<double>;

struct ModelParams {
  int n_sites = 2;
  double delta = 0.0;
  double g = 0.0;
  double delta_prime = 0.0;

  cplx delta_plus() const { return {delta, g}; }
  cplx delta_minus() const { return {delta, -g}; }
  // Critical dissipation of the PT transition; real only for |delta| <= 1.
  double g_critical() const { return std::sqrt(1.0 - delta * delta); }
};

struct SectorBasis {
  int n_sites = 0;
  int n_magnons = 0;
  std::vector<std::uint64_t> configs;

  std::size_t dim() const { return configs.size(); }

  // Gosper order is colex order of the occupied-position sets, so the index
  // is the combinatorial rank sum_i C(p_i, i+1) over set-bit positions p_i.
  std::size_t index_of(std::uint64_t config) const {
    std::uint64_t rank = 0, rest = config;
    for (int k = 1; rest != 0; ++k) {
      const int p = std::countr_zero(rest);
      rest &= rest - 1;
      rank += detail_binomial(p, k);
    }
    if (rank >= configs.size() || configs[rank] != config)
      throw std::invalid_argument("SectorBasis: configuration not in sector");
    return static_cast<std::size_t>(rank);
  }

 private:
  static std::uint64_t detail_binomial(int n, int k) {
    static const auto table = [] {
      std::array<std::array<std::uint64_t, 32>, 63> c{};
      for (int i = 0; i < 63; ++i) {
        c[i][0] = 1;
        for (int j = 1; j < 32 && j <= i; ++j)
          c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
      }
      return c;
    }();
    return (k > n || k >= 32) ? 0 : table[n][k];
  }
};

struct StateVector {
  const SectorBasis* basis = nullptr;
  std::vector<cplx> amplitudes;

  StateVector() = default;
  explicit StateVector(const SectorBasis& b)
      : basis(&b), amplitudes(b.dim(), cplx(0.0, 0.0)) {}

  double norm() const {
    double s = 0.0;
    for (const cplx& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
  }

  void normalize() {
    const double n = norm();
    if (n < 1e-300)
      throw std::runtime_error("StateVector: cannot normalize zero vector");
    for (cplx& a : amplitudes) a /= n;
  }
};

// <a|b> with the physics convention (conjugate-linear in the first slot).
inline cplx inner(const StateVector& a, const StateVector& b) {
  if (a.amplitudes.size() != b.amplitudes.size())
    throw std::invalid_argument("inner: dimension mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
    s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
  return s;
}

inline SectorBasis build_sector_basis(int n_sites, int n_magnons) {
  if (n_sites <= 0 || n_sites % 2 != 0)
    throw std::invalid_argument("build_sector_basis: n_sites must be even and positive");
  if (n_magnons < 0 || n_magnons > n_sites)
    throw std::invalid_argument("build_sector_basis: n_magnons out of range");
  if (n_sites > 62)
    throw std::invalid_argument("build_sector_basis: n_sites > 62 unsupported");

  SectorBasis basis;
  basis.n_sites = n_sites;
  basis.n_magnons = n_magnons;
  if (n_magnons == 0) {
    basis.configs.push_back(0);
    return basis;
  }
  // Gosper's hack walks the n_magnons-subsets in increasing mask order.
  const std::uint64_t top = std::uint64_t(1) << n_sites;
  std::uint64_t c = (std::uint64_t(1) << n_magnons) - 1;
  while (c < top) {
    basis.configs.push_back(c);
    const std::uint64_t u = c & (~c + 1);
    const std::uint64_t v = c + u;
    c = v + (((v ^ c) / u) >> 2);
  }
  return basis;
}

namespace detail {

inline cplx diagonal_energy(const ModelParams& p, std::uint64_t c) {
  const int n = p.n_sites;
  double zz = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const bool b1 = (c >> j) & 1, b2 = (c >> (j + 1)) & 1;
    zz += (b1 == b2) ? -0.25 * p.delta : 0.25 * p.delta;
  }
  if (p.delta_prime != 0.0) {
    for (int j = 0; j + 2 < n; ++j) {
      const bool b1 = (c >> j) & 1, b2 = (c >> (j + 2)) & 1;
      zz += (b1 == b2) ? -0.25 * p.delta_prime : 0.25 * p.delta_prime;
    }
  }
  const double sz1 = ((c >> 0) & 1) ? 0.5 : -0.5;
  const double szN = ((c >> (n - 1)) & 1) ? 0.5 : -0.5;
  return cplx(zz, 0.5 * p.g * (szN - sz1));
}

}  // namespace detail

inline StateVector apply_hamiltonian(const ModelParams& params,
                                     const SectorBasis& basis,
                                     const StateVector& psi) {
  if (params.n_sites != basis.n_sites)
    throw std::invalid_argument("apply_hamiltonian: params/basis mismatch");
  if (psi.amplitudes.size() != basis.dim() ||
      (psi.basis && psi.basis != &basis &&
       (psi.basis->n_sites != basis.n_sites ||
        psi.basis->n_magnons != basis.n_magnons)))
    throw std::invalid_argument("apply_hamiltonian: psi does not belong to basis");

  StateVector out(basis);
  const int n = params.n_sites;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const cplx amp = psi.amplitudes[i];
    if (amp == cplx(0.0, 0.0)) continue;
    const std::uint64_t c = basis.configs[i];
    out.amplitudes[i] += detail::diagonal_energy(params, c) * amp;
    for (int j = 0; j + 1 < n; ++j) {
      const std::uint64_t pair = (c >> j) & 3;
      if (pair == 1 || pair == 2) {
        const std::uint64_t flipped = c ^ (std::uint64_t(3) << j);
        out.amplitudes[basis.index_of(flipped)] += -0.5 * amp;
      }
    }
  }
  return out;
}

inline Eigen::MatrixXcd assemble_dense(const ModelParams& params,
                                       const SectorBasis& basis,
                                       std::size_t cap = 2048) {
  if (basis.dim() > cap)
    throw std::invalid_argument("assemble_dense: sector dimension " +
                                std::to_string(basis.dim()) +
                                " exceeds cap " + std::to_string(cap));
  const std::size_t d = basis.dim();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  const int n = params.n_sites;
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint64_t c = basis.configs[i];
    h(i, i) = detail::diagonal_energy(params, c);
    for (int j = 0; j + 1 < n; ++j) {
      const std::uint64_t pair = (c >> j) & 3;
      if (pair == 1 || pair == 2) {
        const std::uint64_t flipped = c ^ (std::uint64_t(3) << j);
        h(basis.index_of(flipped), i) += -0.5;
      }
    }
  }
  return h;
}

inline double local_sz_expectation(const StateVector& psi, int site) {
  if (!psi.basis)
    throw std::invalid_argument("local_sz_expectation: state has no basis");
  const SectorBasis& basis = *psi.basis;
  if (site < 1 || site > basis.n_sites)
    throw std::invalid_argument("local_sz_expectation: site out of range");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const double w = std::norm(psi.amplitudes[i]);
    const double sz = ((basis.configs[i] >> (site - 1)) & 1) ? 0.5 : -0.5;
    num += w * sz;
    den += w;
  }
  if (den < 1e-300)
    throw std::runtime_error("local_sz_expectation: zero-norm vector");
  return num / den;
}

// Combined spin flip and spatial reflection; commutes with the Hamiltonian
// and maps the half-filled sector to itself.
inline StateVector px_transform(const SectorBasis& basis,
                                const StateVector& psi) {
  if (2 * basis.n_magnons != basis.n_sites)
    throw std::invalid_argument("px_transform: requires the half-filled sector");
  const int n = basis.n_sites;
  const std::uint64_t full = (std::uint64_t(1) << n) - 1;
  StateVector out(basis);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const std::uint64_t c = basis.configs[i];
    std::uint64_t rev = 0;
    for (int j = 0; j < n; ++j)
      if ((c >> j) & 1) rev |= std::uint64_t(1) << (n - 1 - j);
    out.amplitudes[basis.index_of(rev ^ full)] = psi.amplitudes[i];
  }
  return out;
}

inline double participation_entropy(const StateVector& psi) {
  double s2 = 0.0, s4 = 0.0;
  for (const cplx& a : psi.amplitudes) {
    const double w = std::norm(a);
    s2 += w;
    s4 += w * w;
  }
  if (s2 < 1e-300)
    throw std::invalid_argument("participation_entropy: zero vector");
  return -std::log(s4 / (s2 * s2));
}

}  // namespace spinchain::model
