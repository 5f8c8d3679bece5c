#pragma once

// Central values L(1/2, E_d) by the approximate functional equation.
//
// The even-sign functional equation turns the central value into one
// absolutely convergent exponential sum
//   L(1/2, E_d) = 2 sum_{n>=1} (a(n)/sqrt(n)) chi_d(n) exp(-2 pi n / (sqrt(N)|d|)),
// which is the classical smoothed form: grouping each n uniquely as s*m with s
// built from primes dividing N0 and (m, N0) = 1 recovers the kernel form
// 2 sum_{(m,N0)=1} (a(m)/sqrt(m)) chi_d(m) W(m/|d|) with
// W(xi) = sum_{N0-smooth s} (a(s)/sqrt(s)) chi_d(s) exp(-2 pi xi s / sqrt(N)).
// Both views are implemented: the flat sum as the production path, the
// W-kernel and a contour-integral quadrature as cross-checking oracles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "twistlab/arith.hpp"
#include "twistlab/curve.hpp"
#include "twistlab/cutoff.hpp"
#include "twistlab/discriminants.hpp"
#include "twistlab/parallel.hpp"

namespace twistlab {

// Lanczos approximation (g = 7, 9 terms), ~1e-13 relative accuracy; the
// contour oracle only needs 1e-6.
inline std::complex<double> lanczos_gamma(std::complex<double> z) {
  static const double coef[9] = {0.99999999999980993,  676.5203681218851,
                                 -1259.1392167224028,  771.32342877765313,
                                 -176.61502916214059,  12.507343278686905,
                                 -0.13857109526572012, 9.9843695780195716e-6,
                                 1.5056327351493116e-7};
  const double pi = std::numbers::pi;
  if (z.real() < 0.5) return pi / (std::sin(pi * z) * lanczos_gamma(1.0 - z));
  z -= 1.0;
  std::complex<double> x = coef[0];
  for (int i = 1; i < 9; ++i) x += coef[i] / (z + static_cast<double>(i));
  std::complex<double> t = z + 7.5;
  return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

// Trace at a prime dividing N0, from the override map (the only primes L_a
// and W ever touch).
namespace detail {

inline i64 trace_at_bad(const CurveModel& E, u64 p) {
  auto it = E.bad_prime_traces.find(p);
  if (it == E.bad_prime_traces.end())
    throw std::invalid_argument("missing bad-prime trace for p=" + std::to_string(p));
  return it->second;
}

inline std::vector<u64> primes_of(u64 n) {
  std::vector<u64> ps;
  for (u64 p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      ps.push_back(p);
      while (n % p == 0) n /= p;
    }
  if (n > 1) ps.push_back(n);
  return ps;
}

}  // namespace detail

// L_a(s): the Euler product over p | N0, with chi_d(p) read off the class.
// Converges for Re(s) > 0; the factor at p | N is linear in p^{-s}, the
// factor at p | N0, p coprime to N is the full quadratic one.
inline std::complex<double> L_a(const CurveModel& E, const TwistClass& cls,
                                std::complex<double> s) {
  if (s.real() <= 0.0) throw std::invalid_argument("outside convergence region");
  std::complex<double> value = 1.0;
  for (u64 p : detail::primes_of(E.modulus())) {
    double ap = static_cast<double>(detail::trace_at_bad(E, p)) / std::sqrt(static_cast<double>(p));
    double chi = static_cast<double>(cls.chi_at_bad(p));
    std::complex<double> ps = std::pow(static_cast<double>(p), -s);
    std::complex<double> factor;
    if (E.conductor % p == 0)
      factor = 1.0 - ap * chi * ps;
    else
      factor = 1.0 - ap * chi * ps + ps * ps;
    value /= factor;
  }
  return value;
}

// One term of the N0-smooth series: weight = a(n) chi(n) / sqrt(n) = A(n) chi(n) / n,
// with the divisor-bound majorant d(n)/sqrt(n) carried for tail control.
struct SmoothTerm {
  u64 n;
  double weight;
  double majorant;
};

// W(xi) for one twist class: the N0-smooth exponential series with early exit
// once the divisor-majorant tail bound drops below eps.
class CutoffKernel {
 public:
  CutoffKernel(const CurveModel& E, const TwistClass& cls, double eps = 1e-8,
               double xi_min = 1e-8)
      : E_(&E), cls_(cls), eps_(eps), xi_min_(xi_min) {
    if (eps <= 0.0 || xi_min <= 0.0) throw std::invalid_argument("eps and xi_min must be positive");
    sqrtN_ = std::sqrt(static_cast<double>(E.conductor));
    // Enumerate smooth numbers up to the bound that makes the tail at xi_min
    // negligible: beyond B the majorant times exp(-2 pi xi_min B / sqrt N)
    // is below eps with a wide margin.
    double bound = sqrtN_ / (2.0 * std::numbers::pi * xi_min) *
                   (std::log(1.0 / eps) + 30.0);
    build_terms(static_cast<u64>(bound) + 1);
  }

  double La_half() const { return L_a(*E_, cls_, std::complex<double>(0.5, 0.0)).real(); }

  // The smooth exponential series. Terms ascend, the remaining tail is
  // bounded by suffix-majorant * leading exponential, and the loop exits as
  // soon as that bound clears eps.
  double W(double xi) const {
    if (xi <= 0.0) throw std::invalid_argument("xi must be positive");
    double rate = 2.0 * std::numbers::pi * xi / sqrtN_;
    CompensatedSum sum;
    for (size_t i = 0; i < terms_.size(); ++i) {
      double damp = std::exp(-rate * static_cast<double>(terms_[i].n));
      // suffix_[i] majorizes everything from term i on, the unlisted tail
      // beyond the enumeration bound included, and every such n is >= n_i.
      if (suffix_[i] * damp < eps_) return sum.value();
      sum.add(terms_[i].weight * damp);
    }
    if (beyond_mass_ * std::exp(-rate * static_cast<double>(bound_)) < eps_) return sum.value();
    // Tail bound not met: only possible for xi below xi_min.
    throw std::invalid_argument("xi below the configured minimum for this kernel");
  }

  // Contour-integral form of W, evaluated by straight quadrature on the
  // vertical line Re(s) = c: (1/2 pi) int L_a(1/2 + c + it) Gamma(c + it)
  // (sqrt N / (2 pi xi))^{c+it} dt. Gamma decay cuts the integrand below
  // 1e-40 by |t| = 60.
  double W_contour(double xi, double c = 1.0, double t_max = 60.0, double h = 0.005) const {
    if (xi <= 0.0) throw std::invalid_argument("xi must be positive");
    double base = sqrtN_ / (2.0 * std::numbers::pi * xi);
    auto integrand = [&](double t) -> std::complex<double> {
      std::complex<double> s(c, t);
      return L_a(*E_, cls_, s + 0.5) * lanczos_gamma(s) *
             std::pow(std::complex<double>(base, 0.0), s);
    };
    // composite Simpson over [-t_max, t_max]
    int panels = static_cast<int>(2.0 * t_max / h);
    std::complex<double> acc = 0.0;
    double a = -t_max;
    for (int i = 0; i < panels; ++i) {
      double x0 = a + i * h;
      acc += h / 6.0 * (integrand(x0) + 4.0 * integrand(x0 + h / 2) + integrand(x0 + h));
    }
    return acc.real() / (2.0 * std::numbers::pi);
  }

  // sup over xi in [1, 60] of |W(xi)| exp(+2 pi xi / sqrt N): finite iff W
  // obeys the advertised decay envelope.
  double decay_envelope() const {
    double worst = 0.0;
    for (double xi = 1.0; xi <= 60.0; xi += 0.25)
      worst = std::max(worst, std::abs(W(xi)) * std::exp(2.0 * std::numbers::pi * xi / sqrtN_));
    return worst;
  }

  const std::vector<SmoothTerm>& terms() const { return terms_; }

 private:
  void build_terms(u64 bound) {
    std::vector<u64> ps = detail::primes_of(E_->modulus());
    terms_.push_back({1, 1.0, 1.0});
    // extend by one prime at a time: every smooth number is n * p^e
    for (u64 p : ps) {
      bool bad = (E_->conductor % p == 0);
      i64 Ap = detail::trace_at_bad(*E_, p);
      int chi_p = cls_.chi_at_bad(p);
      size_t base_count = terms_.size();
      // Frobenius values along the p-power ladder
      std::vector<i64> ladder = {1, Ap};
      std::vector<u64> power = {1, p};
      while (power.back() <= bound / p) {
        u64 next_p = power.back() * p;
        i64 next_A = bad ? ladder.back() * Ap
                         : Ap * ladder.back() - static_cast<i64>(p) * ladder[ladder.size() - 2];
        power.push_back(next_p);
        ladder.push_back(next_A);
      }
      for (size_t i = 0; i < base_count; ++i) {
        u64 n = terms_[i].n;
        int chi_acc = 1;
        for (size_t e = 1; e < power.size() && power[e] <= bound / n; ++e) {
          chi_acc *= chi_p;
          u64 m = n * power[e];
          double weight = terms_[i].weight * static_cast<double>(ladder[e]) * chi_acc /
                          static_cast<double>(power[e]);
          double maj = divisor_majorant(m);
          terms_.push_back({m, weight, maj});
        }
      }
    }
    std::sort(terms_.begin(), terms_.end(),
              [](const SmoothTerm& a, const SmoothTerm& b) { return a.n < b.n; });
    // Majorant mass of smooth numbers beyond the enumeration bound: the full
    // series sum_{smooth n} d(n)/sqrt(n) factors as prod_p (1 - p^{-1/2})^{-2},
    // so the unlisted part is that total minus the listed part.
    double full = 1.0;
    for (u64 p : ps) {
      double r = 1.0 / std::sqrt(static_cast<double>(p));
      full *= 1.0 / ((1.0 - r) * (1.0 - r));
    }
    CompensatedSum listed;
    for (const auto& t : terms_) listed.add(t.majorant);
    beyond_mass_ = std::max(0.0, full - listed.value());
    bound_ = bound;
    suffix_.assign(terms_.size() + 1, beyond_mass_);
    for (size_t i = terms_.size(); i-- > 0;)
      suffix_[i] = suffix_[i + 1] + terms_[i].majorant;
    suffix_.pop_back();
  }

  static double divisor_majorant(u64 n) {
    u64 m = n, count = 1;
    for (u64 p = 2; p * p <= m; ++p) {
      if (m % p) continue;
      u64 e = 0;
      while (m % p == 0) {
        m /= p;
        ++e;
      }
      count *= e + 1;
    }
    if (m > 1) count *= 2;
    return static_cast<double>(count) / std::sqrt(static_cast<double>(n));
  }

  const CurveModel* E_;
  TwistClass cls_;
  double eps_;
  double xi_min_;
  double sqrtN_;
  u64 bound_ = 0;
  double beyond_mass_ = 0.0;
  std::vector<SmoothTerm> terms_;
  std::vector<double> suffix_;
};

struct LValueOptions {
  double c_trunc = 5.5;   // n_max(d) = ceil(c_trunc * |d| * sqrt(N))
  double eps = 1e-8;      // truncation tail target
  std::string cache_dir;  // empty: resolve via TWISTLAB_CACHE_DIR
  unsigned workers = 0;
  bool use_cache = true;
};

// Central values for one twist class against one coefficient table.
class LValueEngine {
 public:
  LValueEngine(const CurveModel& E, const CoefficientTable& T, const TwistClass& cls,
               LValueOptions opt = {})
      : E_(&E), T_(&T), cls_(cls), opt_(opt) {
    sqrtN_ = std::sqrt(static_cast<double>(E.conductor));
  }

  u64 truncation_length(i64 d) const {
    u64 ad = static_cast<u64>(d < 0 ? -d : d);
    return static_cast<u64>(std::ceil(opt_.c_trunc * static_cast<double>(ad) * sqrtN_));
  }

  // I(Z) = sum a(n) chi_d(n) n^{-1/2} exp(-2 pi n / (sqrt N |d| Z)); the
  // central value is 2*I(1), and I(Z) + I(1/Z) must be Z-independent when
  // the functional-equation sign really is +1.
  double partial_sum(i64 d, double Z) const {
    check_membership(d);
    u64 ad = static_cast<u64>(d < 0 ? -d : d);
    double tau = sqrtN_ * static_cast<double>(ad) / (2.0 * std::numbers::pi) * Z;
    u64 M = truncation_length(d);
    if (Z > 1.0) M = static_cast<u64>(std::ceil(static_cast<double>(M) * Z));
    if (M > T_->n_max)
      throw std::invalid_argument("coefficient table too small: need n_max=" + std::to_string(M));
    // tail: |a(n)|/sqrt(n) <= d(n)/sqrt(n) < 2, geometric sum beyond M
    double tail_bound = 2.0 * 2.0 * tau * std::exp(-static_cast<double>(M) / tau);
    if (tail_bound > opt_.eps)
      throw std::invalid_argument("truncation constant too small for |d|=" + std::to_string(ad));

    auto chi = chi_period(d, T_->lpf);
    const u64 period = chi.size();
    const double* aon = T_->a_over_n.data();
    const double ratio = std::exp(-1.0 / tau);
    CompensatedSum total;
    double block = 0.0;
    double w = ratio;
    u64 j = 1 % period;
    for (u64 n = 1; n <= M; ++n) {
      block += static_cast<double>(chi[j]) * aon[n] * w;
      w *= ratio;
      if ((n & 4095) == 0) {
        total.add(block);
        block = 0.0;
        w = std::exp(-static_cast<double>(n + 1) / tau);  // kill accumulated drift
      }
      if (++j == period) j = 0;
    }
    total.add(block);
    return total.value();
  }

  double central_value(i64 d) const {
    double L = 2.0 * partial_sum(d, 1.0);
    if (L < -1e-6)
      throw std::runtime_error("nonnegativity violated at d=" + std::to_string(d) +
                               ": L=" + std::to_string(L));
    return L;
  }

  // |[I(Z) + I(1/Z)] - 2 I(1)|: near zero only when the configured root
  // number matches the curve's true functional equation.
  double sign_defect(i64 d, double Z = 1.25) const {
    double direct = 2.0 * partial_sum(d, 1.0);
    double split = partial_sum(d, Z) + partial_sum(d, 1.0 / Z);
    return std::abs(split - direct);
  }

  bool sign_diagnostic(i64 d, double Z = 1.25, double tol = 1e-6) const {
    return sign_defect(d, Z) <= tol * std::max(1.0, std::abs(2.0 * partial_sum(d, 1.0)));
  }

  const TwistClass& twist_class() const { return cls_; }
  const CurveModel& curve() const { return *E_; }
  const CoefficientTable& table() const { return *T_; }
  const LValueOptions& options() const { return opt_; }

 private:
  void check_membership(i64 d) const {
    if (d == 0) throw std::invalid_argument("d must be nonzero");
    if ((d > 0) != (cls_.kappa > 0))
      throw std::invalid_argument("d has the wrong sign for this class");
    u64 ad = static_cast<u64>(d < 0 ? -d : d);
    u64 want = cls_.kappa > 0 ? cls_.a % cls_.N0 : (cls_.N0 - cls_.a % cls_.N0) % cls_.N0;
    if (ad % cls_.N0 != want) throw std::invalid_argument("d is not in the configured class");
    if (twist_root_number(*E_, d) != +1)
      throw std::invalid_argument(
          "odd functional equation: central value trivially 0, outside family");
  }

  const CurveModel* E_;
  const CoefficientTable* T_;
  TwistClass cls_;
  LValueOptions opt_;
  double sqrtN_;
};

struct BatchEntry {
  i64 d;
  double L;
  double weight;
};

namespace detail {

// On-disk memo of central values: "TWLV" | curve hash | c_trunc | eps |
// count | (d, L) records, all little-endian 8-byte fields.
struct LValueCache {
  static std::string path(const std::string& dir, u64 hash, double c_trunc) {
    u64 tbits;
    std::memcpy(&tbits, &c_trunc, 8);
    char name[64];
    std::snprintf(name, sizeof(name), "lvalues_%016llx_%016llx.bin",
                  static_cast<unsigned long long>(hash), static_cast<unsigned long long>(tbits));
    return dir + "/" + name;
  }

  static std::unordered_map<i64, double> load(const std::string& file, u64 hash, double c_trunc,
                                              double eps) {
    std::unordered_map<i64, double> map;
    std::ifstream in(file, std::ios::binary);
    if (!in) return map;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TWLV", 4) != 0) return map;
    u64 h, tb, eb, count;
    if (!get_u64(in, h) || h != hash) return map;
    if (!get_u64(in, tb) || !get_u64(in, eb) || !get_u64(in, count)) return map;
    double t, e;
    std::memcpy(&t, &tb, 8);
    std::memcpy(&e, &eb, 8);
    if (t != c_trunc || e != eps) return map;
    for (u64 i = 0; i < count; ++i) {
      u64 dv, lv;
      if (!get_u64(in, dv) || !get_u64(in, lv)) break;
      double L;
      std::memcpy(&L, &lv, 8);
      map.emplace(static_cast<i64>(dv), L);
    }
    return map;
  }

  static void store(const std::string& dir, const std::string& file, u64 hash, double c_trunc,
                    double eps, const std::unordered_map<i64, double>& map) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::string tmp = file + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write L-value cache: " + tmp);
      out.write("TWLV", 4);
      put_u64(out, hash);
      u64 tb, eb;
      std::memcpy(&tb, &c_trunc, 8);
      std::memcpy(&eb, &eps, 8);
      put_u64(out, tb);
      put_u64(out, eb);
      put_u64(out, map.size());
      for (const auto& [d, L] : map) {
        put_u64(out, static_cast<u64>(d));
        u64 lv;
        std::memcpy(&lv, &L, 8);
        put_u64(out, lv);
      }
    }
    std::filesystem::rename(tmp, file);
  }
};

}  // namespace detail

// All (d, L(1/2,E_d), Phi(kappa d/X)) with kappa d in [X/2, 5X/2], ordered by
// |d|. Values are memoized on disk per (curve, truncation) so repeated runs
// and overlapping windows do not recompute.
inline std::vector<BatchEntry> batch_central_values(const LValueEngine& engine, u64 X,
                                                    const SmoothCutoff& phi) {
  if (X < 10) throw std::invalid_argument("X must be at least 10");
  const auto& opt = engine.options();
  std::string dir = resolve_cache_dir(opt.cache_dir);
  std::string file =
      detail::LValueCache::path(dir, engine.curve().hash(), opt.c_trunc);
  std::unordered_map<i64, double> memo;
  if (opt.use_cache)
    memo = detail::LValueCache::load(file, engine.curve().hash(), opt.c_trunc, opt.eps);

  std::vector<i64> ds;
  DiscriminantStream stream(engine.twist_class(), (5 * X) / 2);
  u64 lo = (X + 1) / 2;
  stream.for_each([&](i64 d) {
    u64 ad = static_cast<u64>(d < 0 ? -d : d);
    if (ad >= lo) ds.push_back(d);
  });

  std::vector<BatchEntry> out(ds.size());
  std::vector<char> fresh(ds.size(), 0);
  unsigned workers = opt.workers ? opt.workers : default_workers();
  parallel_for_dynamic(ds.size(), workers, [&](size_t i, unsigned) {
    i64 d = ds[i];
    double L;
    auto it = memo.find(d);
    if (it != memo.end()) {
      L = it->second;
    } else {
      L = engine.central_value(d);
      fresh[i] = 1;
    }
    double x = static_cast<double>(engine.twist_class().kappa) * static_cast<double>(d) /
               static_cast<double>(X);
    out[i] = {d, L, phi(x)};
  });

  if (opt.use_cache) {
    bool any = false;
    for (size_t i = 0; i < ds.size(); ++i)
      if (fresh[i]) {
        memo[out[i].d] = out[i].L;
        any = true;
      }
    if (any)
      detail::LValueCache::store(dir, file, engine.curve().hash(), opt.c_trunc, opt.eps, memo);
  }
  return out;
}

}  // namespace twistlab
