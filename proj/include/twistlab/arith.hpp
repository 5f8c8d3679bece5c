#pragma once

// Integer and modular arithmetic primitives shared by every module:
// sieves, Kronecker symbol, exact integer square roots, compensated
// floating-point accumulation, and the standard normal tail.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace twistlab {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i32 = std::int32_t;
using u32 = std::uint32_t;

// Exact floor(sqrt(n)). sqrt(double) is only a seed; the result is fixed up
// so that r*r <= n < (r+1)*(r+1) holds exactly for all u64 inputs.
inline u64 isqrt(u64 n) {
  if (n == 0) return 0;
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r > n / r) --r;
  while ((r + 1) <= n / (r + 1)) ++r;
  return r;
}

inline bool is_square(u64 n, u64* root = nullptr) {
  u64 r = isqrt(n);
  if (root) *root = r;
  return r * r == n;
}

inline u64 mulmod(u64 a, u64 b, u64 m) {
  return static_cast<u64>((static_cast<unsigned __int128>(a) * b) % m);
}

inline u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 r = 1;
  base %= m;
  while (exp) {
    if (exp & 1) r = mulmod(r, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return r;
}

// Inverse of a modulo m (extended Euclid); requires gcd(a, m) = 1.
inline u64 inv_mod(u64 a, u64 m) {
  if (m == 1) return 0;
  i64 t = 0, new_t = 1;
  i64 r = static_cast<i64>(m), new_r = static_cast<i64>(a % m);
  while (new_r != 0) {
    i64 q = r / new_r;
    t -= q * new_t;
    std::swap(t, new_t);
    r -= q * new_r;
    std::swap(r, new_r);
  }
  if (r != 1) throw std::invalid_argument("inv_mod: arguments are not coprime");
  return static_cast<u64>(t < 0 ? t + static_cast<i64>(m) : t);
}

// Kronecker symbol (a|n), defined for all integers. Follows the classical
// binary algorithm: peel powers of two off n using (a|2) = (2|a), flip by
// quadratic reciprocity between odd parts, and handle the sign of n through
// (a|-1) = sign(a).
inline int kronecker(i64 a, i64 n) {
  static const int two_table[8] = {0, 1, 0, -1, 0, -1, 0, 1};  // (2|a) by a mod 8
  if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
  if ((a & 1) == 0 && (n & 1) == 0) return 0;
  int v = 0;
  while ((n & 1) == 0) {
    n >>= 1;
    ++v;
  }
  int k = 1;
  if (v & 1) k = two_table[static_cast<int>(((a % 8) + 8) & 7)];
  if (n < 0) {
    n = -n;
    if (a < 0) k = -k;
  }
  // n is odd and positive from here on; standard Jacobi loop.
  while (true) {
    if (n == 1) return k;
    a %= n;
    if (a < 0) a += n;
    if (a == 0) return 0;
    v = 0;
    while ((a & 1) == 0) {
      a >>= 1;
      ++v;
    }
    if (v & 1) {
      int nm8 = static_cast<int>(n & 7);
      if (nm8 == 3 || nm8 == 5) k = -k;
    }
    if ((a & 3) == 3 && (n & 3) == 3) k = -k;
    i64 t = a;
    a = n;
    n = t;
  }
}

// Primes up to and including n, via an odd-only sieve of Eratosthenes.
inline std::vector<u32> primes_up_to(u32 n) {
  std::vector<u32> primes;
  if (n < 2) return primes;
  primes.push_back(2);
  if (n < 3) return primes;
  u32 half = (n - 1) / 2;  // odd k -> index (k-1)/2, k >= 3
  std::vector<bool> composite(half + 1, false);
  for (u32 i = 1; i <= half; ++i) {
    u64 p = 2 * static_cast<u64>(i) + 1;
    if (composite[i]) continue;
    primes.push_back(static_cast<u32>(p));
    for (u64 j = p * p; j <= n; j += 2 * p) composite[(j - 1) / 2] = true;
  }
  return primes;
}

// Linear sieve: least prime factor for every 2 <= i <= n, plus the prime list.
// lpf[0] = lpf[1] = 0.
inline void least_factor_sieve(u32 n, std::vector<u32>& lpf, std::vector<u32>& primes) {
  lpf.assign(static_cast<size_t>(n) + 1, 0);
  primes.clear();
  for (u32 i = 2; i <= n; ++i) {
    if (lpf[i] == 0) {
      lpf[i] = i;
      primes.push_back(i);
    }
    for (u32 p : primes) {
      u64 ip = static_cast<u64>(i) * p;
      if (p > lpf[i] || ip > n) break;
      lpf[ip] = p;
    }
  }
}

// Squarefree flags for the interval [lo, hi]: out[k] corresponds to lo + k.
// Marks multiples of p^2 for every prime p <= sqrt(hi).
inline void squarefree_interval(u64 lo, u64 hi, std::vector<bool>& out) {
  if (hi < lo) {
    out.clear();
    return;
  }
  out.assign(static_cast<size_t>(hi - lo + 1), true);
  if (lo == 0 && hi >= 0) out[0] = false;  // 0 is not squarefree
  auto ps = primes_up_to(static_cast<u32>(isqrt(hi)));
  for (u32 p : ps) {
    u64 p2 = static_cast<u64>(p) * p;
    u64 first = ((lo + p2 - 1) / p2) * p2;
    for (u64 m = first; m <= hi; m += p2) out[static_cast<size_t>(m - lo)] = false;
  }
}

// Neumaier's variant of Kahan summation: keeps a running compensation that
// also survives the case |term| > |sum|. Needed for the alternating series
// in the truncated exponentials, where plain addition loses everything.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// P(Z > x) for standard normal Z.
inline double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Factor n into (prime, exponent) pairs using a precomputed least-prime-factor
// table (n must be within the table).
inline std::vector<std::pair<u32, u32>> factor_with_lpf(u32 n, const std::vector<u32>& lpf) {
  std::vector<std::pair<u32, u32>> f;
  while (n > 1) {
    u32 p = lpf[n];
    u32 e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    f.emplace_back(p, e);
  }
  return f;
}

}  // namespace twistlab
