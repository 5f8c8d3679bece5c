#pragma once

// Truncated exponentials, prime-window partitions, the short Dirichlet sums
// over those windows, and the pointwise key inequality
//   y^k <= C k y prod_j E_{l_j}((k-1)x_j) + C(1-k) prod_j E_{l_j}(k x_j)
//        + sum_{r<R} (C k y prod_{j<=r} E_{l_j}((k-1)x_j)
//                     + C(1-k) prod_{j<=r} E_{l_j}(k x_j)) (e^2 x_{r+1}/l_{r+1})^{l_{r+1}}
// with C = exp(sum_j e^{-l_j}/16), valid for y >= 0, 0 <= k <= 1, and
// positive even l_j. The correction sum is what keeps the bound
// unconditional when some |x_j| exceeds l_j/e^2.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistlab/arith.hpp"
#include "twistlab/curve.hpp"

namespace twistlab {

// E_ell(x) = sum_{j=0}^{ell} x^j / j!, by term recursion with compensated
// summation: comparisons against e^x need ~1e-12 through heavy cancellation.
inline double truncated_exp(int ell, double x) {
  if (ell < 0) throw std::invalid_argument("ell must be nonnegative");
  CompensatedSum sum;
  double term = 1.0;
  sum.add(term);
  for (int j = 1; j <= ell; ++j) {
    term *= x / static_cast<double>(j);
    sum.add(term);
  }
  return sum.value();
}

// Ordered prime windows P_1..P_R with even lengths l_1..l_R. Window j holds
// the primes in (cuts[j-1], cuts[j]] that do not divide N0 (cuts[-1] = 1).
struct PrimePartition {
  double X = 0.0;
  double c = 1.0;
  int threshold = 2;
  std::vector<int> lengths;
  std::vector<double> cuts;

  size_t R() const { return lengths.size(); }
  double lower(size_t j) const { return j == 0 ? 1.0 : cuts[j - 1]; }
  double upper(size_t j) const { return cuts[j]; }
};

// The recursion l_1 = 2 ceil(c log log X), l_{j+1} = 2 ceil(c log l_j), kept
// while strictly decreasing and above the threshold; if that yields nothing
// (small X or a large threshold), fall back to R=1 with just l_1. Cut j is
// X^{1/l_j^2}, so deeper windows hold larger primes.
inline PrimePartition build_partition(double X, double c = 1.0, int threshold = 2) {
  if (!(X >= 16.0)) throw std::invalid_argument("X must be at least 16");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  PrimePartition part;
  part.X = X;
  part.c = c;
  part.threshold = threshold;
  int ell = 2 * static_cast<int>(std::ceil(c * std::log(std::log(X))));
  int first = ell;
  while (ell > threshold) {
    part.lengths.push_back(ell);
    int next = 2 * static_cast<int>(std::ceil(c * std::log(static_cast<double>(ell))));
    if (next >= ell) break;
    ell = next;
  }
  if (part.lengths.empty()) part.lengths.push_back(first);
  for (int l : part.lengths)
    part.cuts.push_back(std::pow(X, 1.0 / (static_cast<double>(l) * static_cast<double>(l))));
  return part;
}

// Partition with caller-chosen lengths and prime cuts (toy configurations,
// or windows wider than the canonical construction).
inline PrimePartition make_partition(double X, std::vector<int> lengths,
                                     std::vector<double> cuts) {
  if (lengths.size() != cuts.size())
    throw std::invalid_argument("lengths and cuts must have equal size");
  if (lengths.empty()) throw std::invalid_argument("partition must have at least one window");
  for (int l : lengths)
    if (l <= 0 || l % 2) throw std::invalid_argument("lengths must be positive even integers");
  for (size_t j = 1; j < cuts.size(); ++j)
    if (!(cuts[j] > cuts[j - 1])) throw std::invalid_argument("cuts must be increasing");
  PrimePartition part;
  part.X = X;
  part.lengths = std::move(lengths);
  part.cuts = std::move(cuts);
  return part;
}

// Materialize window j: primes in (lower, upper] coprime to N0.
inline std::vector<u32> primes_in_window(const PrimePartition& part, size_t j, u64 N0) {
  if (j >= part.R()) throw std::invalid_argument("window index out of range");
  if (part.upper(j) > 1e9) throw std::invalid_argument("prime window too large");
  std::vector<u32> out;
  auto all = primes_up_to(static_cast<u32>(part.upper(j)));
  for (u32 p : all)
    if (static_cast<double>(p) > part.lower(j) && N0 % p != 0) out.push_back(p);
  return out;
}

// P(d) over an explicit prime window: sum_p (a(p)/sqrt(p)) chi_d(p), with
// a(p)/sqrt(p) read off the table as A(p)/p.
inline double dirichlet_P(const CoefficientTable& T, const std::vector<u32>& window, i64 d) {
  CompensatedSum sum;
  for (u32 p : window) {
    if (p > T.n_max)
      throw std::invalid_argument("coefficient table too small for prime window");
    int chi = kronecker(d, static_cast<i64>(p));
    if (chi) sum.add(static_cast<double>(chi) * T.a_over_n[p]);
  }
  return sum.value();
}

namespace detail {

inline void require_mollifier_params(int ell, double k) {
  if (ell <= 0 || ell % 2)
    throw std::invalid_argument("ell must be a positive even integer");
  if (k < 0.0 || k > 1.0) throw std::invalid_argument("k must lie in [0, 1]");
}

}  // namespace detail

// A_j(d) = E_{l_j}((k-1) P_j(d)) and B_j(d) = E_{l_j}(k P_j(d)); positive by
// the even-degree positivity of E_ell.
inline double A_weight(int ell, double P, double k) {
  detail::require_mollifier_params(ell, k);
  return truncated_exp(ell, (k - 1.0) * P);
}

inline double B_weight(int ell, double P, double k) {
  detail::require_mollifier_params(ell, k);
  return truncated_exp(ell, k * P);
}

// RHS - y^k of the key inequality; the contract is gap >= -1e-10 for every
// admissible input.
inline double key_inequality_gap(double y, const std::vector<double>& xs,
                                 const std::vector<int>& ells, double k) {
  if (y < 0.0) throw std::invalid_argument("y must be nonnegative");
  if (k < 0.0 || k > 1.0) throw std::invalid_argument("k must lie in [0, 1]");
  if (xs.size() != ells.size())
    throw std::invalid_argument("xs and ells must have equal length");
  for (int l : ells)
    if (l <= 0 || l % 2)
      throw std::invalid_argument("ell must be a positive even integer");
  const size_t R = xs.size();

  double csum = 0.0;
  for (int l : ells) csum += std::exp(-static_cast<double>(l)) / 16.0;
  const double C = std::exp(csum);

  // prefix products prod_{j<=r} E_{l_j}((k-1)x_j) and E_{l_j}(k x_j), r=0..R
  std::vector<double> prefA(R + 1, 1.0), prefB(R + 1, 1.0);
  for (size_t j = 0; j < R; ++j) {
    prefA[j + 1] = prefA[j] * truncated_exp(ells[j], (k - 1.0) * xs[j]);
    prefB[j + 1] = prefB[j] * truncated_exp(ells[j], k * xs[j]);
  }

  double rhs = C * k * y * prefA[R] + C * (1.0 - k) * prefB[R];
  for (size_t r = 0; r < R; ++r) {
    // even exponent: the correction factor is nonnegative whatever sign x has
    double correction =
        std::pow(std::abs(std::exp(2.0) * xs[r] / static_cast<double>(ells[r])),
                 static_cast<double>(ells[r]));
    rhs += (C * k * y * prefA[r] + C * (1.0 - k) * prefB[r]) * correction;
  }
  return rhs - std::pow(y, k);
}

// Completely multiplicative extension of a(p), the w(p^alpha) = alpha!
// weight, Omega, and the window-support indicators used by the formal
// Dirichlet-polynomial expansions.
class MultiplicativeWeight {
 public:
  MultiplicativeWeight(const CoefficientTable& T, const PrimePartition& part, u64 N0)
      : T_(&T), part_(&part), N0_(N0) {}

  bool in_window(u64 p, size_t j) const {
    if (j >= part_->R()) throw std::invalid_argument("window index out of range");
    return static_cast<double>(p) > part_->lower(j) &&
           static_cast<double>(p) <= part_->upper(j) && N0_ % p != 0;
  }

  // atilde(n) = prod a(p)^e over the factorization of n
  double atilde(u64 n) const {
    double value = 1.0;
    for (auto [p, e] : factors(n)) {
      double ap = T_->a_over_n[p] * std::sqrt(static_cast<double>(p));
      for (u32 i = 0; i < e; ++i) value *= ap;
    }
    return value;
  }

  // w(n) = prod alpha_i!
  double w(u64 n) const {
    double value = 1.0;
    for (auto [p, e] : factors(n))
      for (u32 i = 2; i <= e; ++i) value *= static_cast<double>(i);
    return value;
  }

  int Omega(u64 n) const {
    int count = 0;
    for (auto [p, e] : factors(n)) count += static_cast<int>(e);
    return count;
  }

  // b_j(n): at most l_j prime factors with multiplicity, all inside P_j
  bool b_flag(u64 n, size_t j) const {
    int omega = 0;
    for (auto [p, e] : factors(n)) {
      if (!in_window(p, j)) return false;
      omega += static_cast<int>(e);
    }
    return omega <= part_->lengths[j];
  }

  // p_j(n): exactly l_j prime factors with multiplicity, all inside P_j
  bool p_flag(u64 n, size_t j) const {
    int omega = 0;
    for (auto [p, e] : factors(n)) {
      if (!in_window(p, j)) return false;
      omega += static_cast<int>(e);
    }
    return omega == part_->lengths[j];
  }

 private:
  std::vector<std::pair<u32, u32>> factors(u64 n) const {
    if (n == 0 || n > T_->n_max)
      throw std::invalid_argument("n outside the coefficient table range");
    return factor_with_lpf(static_cast<u32>(n), T_->lpf);
  }

  const CoefficientTable* T_;
  const PrimePartition* part_;
  u64 N0_;
};

}  // namespace twistlab
