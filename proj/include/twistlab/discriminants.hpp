#pragma once

// Twist classes (kappa, a mod N0) with even functional equation, enumeration
// of the squarefree discriminants inside one class, and quadratic-character
// evaluation chi_d(n) = kronecker(d, n) in bulk.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistlab/arith.hpp"
#include "twistlab/curve.hpp"

namespace twistlab {

// epsilon_E(d) = epsilon_E * chi_d(-N); requires d odd, squarefree, 1 mod 4.
inline int twist_root_number(const CurveModel& E, i64 d) {
  if (d == 0) throw std::invalid_argument("d must be nonzero");
  u64 ad = static_cast<u64>(d < 0 ? -d : d);
  if (std::gcd(ad, 2 * E.conductor) != 1)
    throw std::invalid_argument("d must be coprime to 2N");
  if (((d % 4) + 4) % 4 != 1) throw std::invalid_argument("d must be 1 mod 4");
  int sign_part = d > 0 ? 1 : -1;  // chi_d(-1)
  return E.root_number * sign_part * kronecker(d, static_cast<i64>(E.conductor));
}

struct TwistClass {
  int kappa = +1;   // sign of d
  u64 a = 1;        // residue mod N0
  u64 N0 = 8;       // lcm(8, N), copied from the curve
  u64 N = 1;        // conductor, for chi_d(-N) bookkeeping

  TwistClass() = default;

  TwistClass(const CurveModel& E, int kappa_, u64 a_) : kappa(kappa_), a(a_) {
    N0 = E.modulus();
    N = E.conductor;
    if (kappa != 1 && kappa != -1) throw std::invalid_argument("kappa must be +1 or -1");
    a %= N0;
    if (a % 8 != 1 && a % 8 != 5)
      throw std::invalid_argument("class residue must be 1 or 5 mod 8");
    if (std::gcd(a, N0) != 1) throw std::invalid_argument("class residue must be coprime to N0");
    // Root-number check. chi_d at p | N0 depends on the class alone: d == a
    // (mod p) for every such p, and chi_d(-1) = kappa.
    int eps = E.root_number * kappa;
    u64 n = E.conductor;
    int v2 = 0;
    while (n % 2 == 0) {
      n /= 2;
      ++v2;
    }
    if (v2 & 1) eps *= chi2();
    for (u64 p = 3; p * p <= n; p += 2) {
      int vp = 0;
      while (n % p == 0) {
        n /= p;
        ++vp;
      }
      if (vp & 1) eps *= kronecker(static_cast<i64>(a % p), static_cast<i64>(p));
    }
    if (n > 1) eps *= kronecker(static_cast<i64>(a % n), static_cast<i64>(n));
    if (eps != +1)
      throw std::invalid_argument("class has odd functional equation: kappa=" +
                                  std::to_string(kappa) + " a=" + std::to_string(a));
  }

  // chi_d(2) for any d in the class: +1 when d = 1 mod 8, -1 when d = 5 mod 8
  int chi2() const { return a % 8 == 1 ? +1 : -1; }

  // A representative discriminant would be any squarefree kappa-signed
  // integer = a mod N0; chi_d(p) for p | N0 is class-determined.
  int chi_at_bad(u64 p) const {
    if (p == 2) return chi2();
    return kronecker(static_cast<i64>(a % p), static_cast<i64>(p));
  }
};

// All (kappa, a) with even functional equation for this curve.
inline std::vector<TwistClass> admissible_classes(const CurveModel& E) {
  std::vector<TwistClass> out;
  u64 N0 = E.modulus();
  for (int kappa : {+1, -1}) {
    for (u64 a = 1; a < N0; ++a) {
      if (a % 8 != 1 && a % 8 != 5) continue;
      if (std::gcd(a, N0) != 1) continue;
      try {
        out.emplace_back(E, kappa, a);
      } catch (const std::invalid_argument&) {
        // odd-sign class, skip
      }
    }
  }
  return out;
}

// Squarefree d with kappa*d in (0, X], d = a mod N0, optionally |d| prime.
// Sieved in fixed-size blocks so the memory footprint is independent of X.
class DiscriminantStream {
 public:
  static constexpr u64 kBlock = u64(1) << 20;

  DiscriminantStream(const TwistClass& cls, u64 X, bool prime_only = false)
      : cls_(cls), X_(X), prime_only_(prime_only) {
    base_primes_ = primes_up_to(static_cast<u32>(isqrt(X_) + 1));
  }

  u64 block_count() const { return X_ == 0 ? 0 : (X_ + kBlock - 1) / kBlock; }

  // Visit every d in block b (covering |d| in [b*kBlock+1, (b+1)*kBlock]) in
  // increasing |d|. Blocks are independent, so callers may fan them out.
  template <class Fn>
  void for_each_in_block(u64 b, Fn&& fn) const {
    u64 lo = b * kBlock + 1;
    u64 hi = std::min(X_, (b + 1) * kBlock);
    if (lo > hi) return;
    size_t len = static_cast<size_t>(hi - lo + 1);
    std::vector<bool> good(len, true);
    for (u32 p : base_primes_) {
      u64 p2 = static_cast<u64>(p) * p;
      if (p2 > hi) break;
      for (u64 m = ((lo + p2 - 1) / p2) * p2; m <= hi; m += p2) good[m - lo] = false;
    }
    if (prime_only_) {
      for (u32 p : base_primes_) {
        if (static_cast<u64>(p) * p > hi) break;
        u64 first = std::max<u64>(((lo + p - 1) / p) * p, static_cast<u64>(p) * 2);
        for (u64 m = first; m <= hi; m += p) good[m - lo] = false;
      }
      if (lo <= 1 && 1 <= hi) good[1 - lo] = false;  // 1 is not prime
    }
    // |d| = a mod N0 for kappa=+1, |d| = -a mod N0 for kappa=-1
    u64 want = cls_.kappa > 0 ? cls_.a % cls_.N0 : (cls_.N0 - cls_.a % cls_.N0) % cls_.N0;
    u64 m = lo + ((want + cls_.N0 - lo % cls_.N0) % cls_.N0);
    for (; m <= hi; m += cls_.N0)
      if (good[m - lo]) fn(static_cast<i64>(m) * cls_.kappa);
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (u64 b = 0; b < block_count(); ++b) for_each_in_block(b, fn);
  }

  std::vector<i64> collect() const {
    std::vector<i64> out;
    for_each([&](i64 d) { out.push_back(d); });
    return out;
  }

  const TwistClass& twist_class() const { return cls_; }
  u64 bound() const { return X_; }

 private:
  TwistClass cls_;
  u64 X_;
  bool prime_only_;
  std::vector<u32> base_primes_;
};

inline DiscriminantStream enumerate_class(const TwistClass& cls, u64 X, bool prime_only = false) {
  return DiscriminantStream(cls, X, prime_only);
}

// chi_d(n) for all n <= n_max, multiplicative fill driven by the least-prime-
// factor table (which must cover n_max). chi is completely multiplicative, so
// chi[n] = chi[lpf] * chi[n/lpf] regardless of multiplicity.
inline std::vector<signed char> chi_table(i64 d, u64 n_max, const std::vector<u32>& lpf) {
  if (lpf.size() <= n_max) throw std::invalid_argument("lpf table too small for chi fill");
  std::vector<signed char> chi(n_max + 1, 0);
  if (n_max >= 1) chi[1] = 1;
  for (u64 n = 2; n <= n_max; ++n) {
    u64 p = lpf[n];
    chi[n] = (p == n) ? static_cast<signed char>(kronecker(d, static_cast<i64>(n)))
                      : static_cast<signed char>(chi[p] * chi[n / p]);
  }
  return chi;
}

// One full period of chi_d: entry j = chi_d(j) for 0 <= j < |d|. For d = 1
// (mod 4) fundamental, chi_d is periodic mod |d|, so L-sums over millions of
// terms can index this array instead of paying a Kronecker evaluation per
// prime beyond |d|.
inline std::vector<signed char> chi_period(i64 d, const std::vector<u32>& lpf) {
  u64 ad = static_cast<u64>(d < 0 ? -d : d);
  if (ad == 1) return {1};
  // chi_table over n <= |d|-1 is exactly the period by residue: entry 0 is
  // n = 0 mod |d| where the character vanishes, and chi_table leaves it 0.
  return chi_table(d, ad - 1, lpf);
}

}  // namespace twistlab
