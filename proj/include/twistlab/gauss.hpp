#pragma once

// Quadratic Gauss-type sums: the normalized sum G_k(n) in closed form from
// its prime-power table, the raw character sum tau_k(n), brute-force oracles
// for both, and a numerical residual check of the twisted Poisson summation
// identity that underlies every character-sum average in the project.
//
// G_k(n) is real for all odd n; its prime-power values live in Z + Z*sqrt(p),
// so exact arithmetic carries each value as c*sqrt(D) with integer c and
// squarefree D. Floating point enters only when comparing against the
// brute-force sums of roots of unity.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "twistlab/arith.hpp"

namespace twistlab {

inline std::complex<double> e2pi(double t) {
  t -= std::floor(t);
  double arg = 2.0 * std::numbers::pi * t;
  return {std::cos(arg), std::sin(arg)};
}

// c * sqrt(D) with D squarefree. Products stay in this form as long as the
// radicals come from distinct primes, which the closed form guarantees within
// a single factorization (at most one sqrt(p) per prime power).
struct ExactRadical {
  i64 c = 0;
  u64 D = 1;

  ExactRadical times(const ExactRadical& o) const {
    if (c == 0 || o.c == 0) return {0, 1};
    if (std::gcd(D, o.D) != 1) throw std::logic_error("radical collision in exact product");
    __int128 prod = static_cast<__int128>(c) * o.c;
    if (prod > INT64_MAX || prod < INT64_MIN)
      throw std::overflow_error("exact Gauss value overflows 64 bits");
    return {static_cast<i64>(prod), D * o.D};
  }

  std::complex<double> to_complex() const {
    return {static_cast<double>(c) * std::sqrt(static_cast<double>(D)), 0.0};
  }

  bool operator==(const ExactRadical&) const = default;
};

namespace detail {

inline void require_odd(u64 n) {
  if (n == 0) throw std::invalid_argument("n must be positive");
  if (n % 2 == 0) throw std::invalid_argument("n must be odd");
}

// G_k(p^beta) from the five-case table, with alpha = v_p(k) (k=0 acts as
// alpha = infinity, so only the "beta <= alpha" rows apply).
inline ExactRadical gauss_prime_power(i64 k, u64 p, u32 beta, u64 p_beta) {
  auto phi = [&]() -> i64 { return static_cast<i64>(p_beta - p_beta / p); };
  if (k == 0) return beta % 2 == 0 ? ExactRadical{phi(), 1} : ExactRadical{0, 1};
  u64 kk = static_cast<u64>(k < 0 ? -k : k);
  u32 alpha = 0;
  u64 p_alpha = 1;
  while (kk % p == 0) {
    kk /= p;
    ++alpha;
    p_alpha *= p;
    if (alpha > beta) break;  // beyond beta the cases no longer look at alpha
  }
  if (beta <= alpha) return beta % 2 == 0 ? ExactRadical{phi(), 1} : ExactRadical{0, 1};
  if (beta == alpha + 1) {
    if (beta % 2 == 0) return {-static_cast<i64>(p_alpha), 1};
    i64 k_reduced = k / static_cast<i64>(p_alpha);
    int legendre = kronecker(k_reduced, static_cast<i64>(p));
    return {legendre * static_cast<i64>(p_alpha), p};
  }
  return {0, 1};  // beta >= alpha + 2
}

}  // namespace detail

inline ExactRadical gauss_G_exact(i64 k, u64 n) {
  detail::require_odd(n);
  ExactRadical result{1, 1};
  u64 rem = n;
  for (u64 p = 3; p * p <= rem; p += 2) {
    if (rem % p != 0) continue;
    u32 beta = 0;
    u64 p_beta = 1;
    while (rem % p == 0) {
      rem /= p;
      ++beta;
      p_beta *= p;
    }
    result = result.times(detail::gauss_prime_power(k, p, beta, p_beta));
    if (result.c == 0) return {0, 1};
  }
  if (rem > 1) {
    result = result.times(detail::gauss_prime_power(k, rem, 1, rem));
    if (result.c == 0) return {0, 1};
  }
  return result;
}

inline std::complex<double> gauss_G_closed(i64 k, u64 n) {
  return gauss_G_exact(k, n).to_complex();
}

// (-1|n) for odd n
inline int chi_minus_one(u64 n) { return n % 4 == 1 ? +1 : -1; }

// G_k(n) = bracket * tau_k(n); the two brackets below are mutually inverse.
inline std::complex<double> gauss_bracket(u64 n) {
  if (chi_minus_one(n) == 1) return {1.0, 0.0};                // (1-i)/2 + (1+i)/2
  return {0.0, -1.0};                                          // (1-i)/2 - (1+i)/2 = -i
}

inline std::complex<double> tau_bracket(u64 n) {
  if (chi_minus_one(n) == 1) return {1.0, 0.0};                // (1+i)/2 + (1-i)/2
  return {0.0, 1.0};                                           // (1+i)/2 - (1-i)/2 = i
}

inline std::complex<double> tau(i64 k, u64 n) {
  detail::require_odd(n);
  return tau_bracket(n) * gauss_G_closed(k, n);
}

// Literal sums over a mod n; the oracles for everything above.
inline std::complex<double> tau_bruteforce(i64 k, u64 n) {
  detail::require_odd(n);
  std::complex<double> sum = 0.0;
  for (u64 a = 0; a < n; ++a) {
    int chi = kronecker(static_cast<i64>(a), static_cast<i64>(n));
    if (chi == 0) continue;
    i64 ak = static_cast<i64>((static_cast<__int128>(a) * k) % static_cast<i64>(n));
    if (ak < 0) ak += static_cast<i64>(n);
    sum += static_cast<double>(chi) * e2pi(static_cast<double>(ak) / static_cast<double>(n));
  }
  return sum;
}

inline std::complex<double> gauss_G_bruteforce(i64 k, u64 n) {
  return gauss_bracket(n) * tau_bruteforce(k, n);
}

// Shared per-n precomputation for scanning many k against one n: the
// character values and the n-th roots of unity. Cuts the full verification
// grid from hours of kronecker calls to seconds of table lookups.
struct GaussBruteTable {
  u64 n;
  std::vector<int> chi;                    // chi[a] = (a|n)
  std::vector<std::complex<double>> root;  // root[j] = e(j/n)

  explicit GaussBruteTable(u64 n_) : n(n_) {
    detail::require_odd(n);
    chi.resize(n);
    root.resize(n);
    for (u64 a = 0; a < n; ++a) {
      chi[a] = kronecker(static_cast<i64>(a), static_cast<i64>(n));
      root[a] = e2pi(static_cast<double>(a) / static_cast<double>(n));
    }
  }

  std::complex<double> tau_at(i64 k) const {
    u64 kr = static_cast<u64>(((k % static_cast<i64>(n)) + static_cast<i64>(n)) %
                              static_cast<i64>(n));
    std::complex<double> sum = 0.0;
    u64 j = 0;
    for (u64 a = 0; a < n; ++a) {
      if (chi[a] != 0) sum += static_cast<double>(chi[a]) * root[j];
      j += kr;
      if (j >= n) j -= n;
    }
    return sum;
  }

  std::complex<double> G_at(i64 k) const { return gauss_bracket(n) * tau_at(k); }
};

// F(x) = exp(-pi ((x - center)/width)^2), with the exact Fourier transform
// Fhat(lambda) = width * exp(-pi width^2 lambda^2) * e(-lambda * center).
struct GaussianWindow {
  double center = 0.0;
  double width = 1.0;

  double operator()(double x) const {
    double u = (x - center) / width;
    return std::exp(-std::numbers::pi * u * u);
  }

  std::complex<double> transform(double lambda) const {
    double decay = std::exp(-std::numbers::pi * width * width * lambda * lambda);
    return width * decay * e2pi(-lambda * center);
  }
};

// | LHS - RHS_K | for the twisted Poisson identity
//   sum_{d = r mod q} (d|n) F(d)
//     = (q|n)/(qn) * sum_k Fhat(k/(nq)) e(k r nbar / q) tau_k(n),
// truncating the right side at |k| <= K. nbar is the inverse of n mod q.
inline double poisson_identity_residual(const GaussianWindow& F, i64 r, u64 q, u64 n, u32 K) {
  detail::require_odd(n);
  if (q == 0) throw std::invalid_argument("q must be positive");
  if (std::gcd(n, q) != 1) throw std::invalid_argument("n and q must be coprime");

  // Left side: the Gaussian is below 1e-86 beyond 8 widths; go to 14.
  CompensatedSum lhs;
  double lo = F.center - 14.0 * F.width;
  double hi = F.center + 14.0 * F.width;
  i64 d = static_cast<i64>(std::ceil(lo));
  i64 shift = ((r - d) % static_cast<i64>(q) + static_cast<i64>(q)) % static_cast<i64>(q);
  d += shift;
  for (; static_cast<double>(d) <= hi; d += static_cast<i64>(q))
    lhs.add(kronecker(d, static_cast<i64>(n)) * F(static_cast<double>(d)));

  // Right side truncated at |k| <= K.
  u64 nbar = inv_mod(n % q, q);
  std::complex<double> rhs = 0.0;
  for (i64 k = -static_cast<i64>(K); k <= static_cast<i64>(K); ++k) {
    std::complex<double> t = tau(k, n);
    if (t == std::complex<double>(0.0, 0.0)) continue;
    double lambda = static_cast<double>(k) / (static_cast<double>(n) * static_cast<double>(q));
    i64 phase_num = static_cast<i64>(
        ((static_cast<__int128>(k) * r % static_cast<i64>(q)) * static_cast<i64>(nbar)) %
        static_cast<i64>(q));
    if (phase_num < 0) phase_num += static_cast<i64>(q);
    rhs += F.transform(lambda) * e2pi(static_cast<double>(phase_num) / static_cast<double>(q)) * t;
  }
  rhs *= static_cast<double>(kronecker(static_cast<i64>(q), static_cast<i64>(n))) /
         (static_cast<double>(q) * static_cast<double>(n));

  return std::abs(std::complex<double>(lhs.value(), 0.0) - rhs);
}

}  // namespace twistlab
