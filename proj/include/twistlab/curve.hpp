#pragma once

// The fixed elliptic curve y^2 = f(x) and everything derived from it alone:
// Frobenius traces by point counting (disk-cached), the multiplicative
// coefficient table A(n), the symmetric-square L-value at 1, Tamagawa-style
// root counts c(p) = 1 + #{f(x)=0 mod p}, and the splitting-field class of f
// with its predicted log-L mean and variance.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistlab/arith.hpp"
#include "twistlab/parallel.hpp"

namespace twistlab {

struct SplittingClass {
  int degree = 0;       // [K:Q] for the splitting field K of f
  double mu = 0.0;      // predicted mean of log L(1/2, E_d) / loglog|d|
  double sigma_sq = 0.0;// predicted variance / loglog|d|
};

struct CurveModel {
  // y^2 = f(x), f(x) = x^3 + a2 x^2 + a1 x + a0
  i64 a2 = 0;
  i64 a1 = 0;
  i64 a0 = 0;
  u64 conductor = 0;              // N
  int root_number = +1;           // global functional-equation sign
  std::map<u64, i64> bad_prime_traces;  // A(p) at p | N, plus the p=2 value
                                        // (the short model is singular mod 2,
                                        // so A(2) cannot be point-counted)

  u64 modulus() const { return std::lcm<u64>(8, conductor); }  // N0

  __int128 cubic_discriminant() const {
    __int128 b = a2, c = a1, d = a0;
    return 18 * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * c * c * c - 27 * d * d;
  }

  void validate() const {
    if (conductor == 0) throw std::invalid_argument("conductor must be positive");
    if (root_number != 1 && root_number != -1)
      throw std::invalid_argument("root number must be +1 or -1");
    if (cubic_discriminant() == 0) throw std::invalid_argument("singular cubic");
    for (const auto& [p, t] : bad_prime_traces) {
      if (p < 2) throw std::invalid_argument("bad_prime_traces key is not a prime: " + std::to_string(p));
      if (conductor % p == 0) {
        if (t < -1 || t > 1)
          throw std::invalid_argument("trace at p | N must be in {-1,0,1}, p=" + std::to_string(p));
      } else {
        // good-prime override (only p=2 is ever needed): Hasse bound
        double bound = 2.0 * std::sqrt(static_cast<double>(p));
        if (static_cast<double>(t < 0 ? -t : t) > bound)
          throw std::invalid_argument("trace violates Hasse bound at p=" + std::to_string(p));
      }
    }
  }

  u64 hash() const {
    // FNV-1a over the little-endian bytes of (a2, a1, a0, N)
    unsigned char buf[32];
    auto put = [&](int off, u64 v) {
      for (int i = 0; i < 8; ++i) buf[off + i] = static_cast<unsigned char>(v >> (8 * i));
    };
    put(0, static_cast<u64>(a2));
    put(8, static_cast<u64>(a1));
    put(16, static_cast<u64>(a0));
    put(24, conductor);
    u64 h = 1469598103934665603ULL;
    for (unsigned char b : buf) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

// A(p) = p + 1 - #E(F_p) for odd good p, by the character-sum form
// A(p) = -sum_x chi_p(f(x)). The scan evaluates f incrementally over F_p with
// finite differences (three adds per x) against a quadratic-residue bitmap.
inline i64 trace_of_frobenius(const CurveModel& E, u64 p,
                              std::vector<unsigned char>* scratch = nullptr) {
  if (p == 2 || (E.conductor % p == 0))
    throw std::invalid_argument("bad prime: supply override in bad_prime_traces");
  auto norm = [&](i64 v) -> u64 {
    i64 m = v % static_cast<i64>(p);
    return static_cast<u64>(m < 0 ? m + static_cast<i64>(p) : m);
  };
  std::vector<unsigned char> local;
  std::vector<unsigned char>& sq = scratch ? *scratch : local;
  sq.assign(p, 0);
  u64 s = 0;
  for (u64 t = 0; t <= (p - 1) / 2; ++t) {
    sq[s] = 1;
    s += 2 * t + 1;  // (t+1)^2 - t^2
    if (s >= p) s -= p;
  }
  u64 f = norm(E.a0);
  u64 df = norm(1 + E.a2 + E.a1);       // f(1) - f(0)
  u64 ddf = norm(6 + 2 * E.a2);         // second difference at 0
  u64 d3 = 6 % p;                       // third difference, constant
  i64 sum = 0;
  for (u64 x = 0; x < p; ++x) {
    if (f != 0) sum += sq[f] ? 1 : -1;
    f += df;
    if (f >= p) f -= p;
    df += ddf;
    if (df >= p) df -= p;
    ddf += d3;
    if (ddf >= p) ddf -= p;
  }
  return -sum;
}

struct CoefficientTable {
  u64 n_max = 0;
  std::vector<i64> A;          // A[0] unused, A[1] = 1
  std::vector<double> a_over_n;// A(n)/n = a(n)/sqrt(n); the weight used by L-sums
  std::vector<u32> primes;     // all primes <= n_max
  std::vector<u32> lpf;        // least prime factor, shared by factoring callers

  double a(u64 n) const { return static_cast<double>(A[n]) / std::sqrt(static_cast<double>(n)); }
};

struct BuildOptions {
  std::string cache_dir;  // empty: $TWISTLAB_CACHE_DIR, else ".twistlab-cache"
  unsigned workers = 0;   // 0: hardware_concurrency
  bool use_cache = true;
};

inline std::string resolve_cache_dir(const std::string& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv("TWISTLAB_CACHE_DIR")) {
    if (*env) return env;
  }
  return ".twistlab-cache";
}

namespace detail {

inline void put_u64(std::ofstream& out, u64 v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline bool get_u64(std::ifstream& in, u64& v) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
  return true;
}

struct TraceCache {
  // File layout: "TWL1" | u64 curve hash | u64 p_max | i64 A(p) per prime
  // ascending, all little-endian.
  static std::string path(const std::string& dir, u64 hash) {
    char name[32];
    std::snprintf(name, sizeof(name), "traces_%016llx.bin",
                  static_cast<unsigned long long>(hash));
    return dir + "/" + name;
  }

  static bool load(const std::string& file, u64 hash, u64& p_max, std::vector<i64>& traces) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TWL1", 4) != 0) return false;
    u64 h = 0;
    if (!get_u64(in, h) || h != hash) return false;
    if (!get_u64(in, p_max)) return false;
    traces.clear();
    u64 v = 0;
    while (get_u64(in, v)) traces.push_back(static_cast<i64>(v));
    return true;
  }

  static void store(const std::string& dir, const std::string& file, u64 hash, u64 p_max,
                    const std::vector<i64>& traces) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::string tmp = file + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write trace cache: " + tmp);
      out.write("TWL1", 4);
      put_u64(out, hash);
      put_u64(out, p_max);
      for (i64 t : traces) put_u64(out, static_cast<u64>(t));
      if (!out) throw std::runtime_error("short write to trace cache: " + tmp);
    }
    std::filesystem::rename(tmp, file);
  }
};

}  // namespace detail

// Frobenius traces for every prime <= p_max, in prime order. Overrides from
// bad_prime_traces are applied at p=2 and p | N; everything else is point
// counted. Results are cached on disk and the cache is extended in place when
// a larger p_max is requested later.
inline std::vector<i64> prime_traces(const CurveModel& E, const std::vector<u32>& primes,
                                     const BuildOptions& opt = {}) {
  u64 p_max = primes.empty() ? 0 : primes.back();
  auto override_at = [&](u64 p, i64& out) {
    auto it = E.bad_prime_traces.find(p);
    if (it == E.bad_prime_traces.end()) return false;
    out = it->second;
    return true;
  };
  auto required_override = [&](u64 p) { return p == 2 || (E.conductor % p == 0); };

  std::string dir = resolve_cache_dir(opt.cache_dir);
  std::string file = detail::TraceCache::path(dir, E.hash());

  std::vector<i64> traces;
  u64 cached_pmax = 0;
  bool have_cache = false;
  if (opt.use_cache) {
    std::vector<i64> cached;
    u64 loaded_pmax = 0;
    if (detail::TraceCache::load(file, E.hash(), loaded_pmax, cached)) {
      // Distrust entries that disagree with the current override map: the
      // header hash does not cover bad_prime_traces.
      bool ok = true;
      size_t idx = 0;
      for (u32 p : primes) {
        if (p > loaded_pmax || idx >= cached.size()) break;
        i64 want = 0;
        if (required_override(p)) {
          if (!override_at(p, want)) break;  // missing override reported later
          if (cached[idx] != want) {
            ok = false;
            break;
          }
        }
        ++idx;
      }
      if (ok) {
        traces = std::move(cached);
        have_cache = true;
        cached_pmax = loaded_pmax;
      }
    }
  }

  size_t n_have = 0;
  if (have_cache) {
    while (n_have < primes.size() && primes[n_have] <= cached_pmax && n_have < traces.size())
      ++n_have;
    traces.resize(n_have);
  }
  traces.resize(primes.size());

  size_t n_new = primes.size() - n_have;
  if (n_new > 0) {
    unsigned workers = opt.workers ? opt.workers : default_workers();
    std::vector<std::vector<unsigned char>> scratch(workers);
    parallel_for_dynamic(n_new, workers, [&](size_t k, unsigned w) {
      u64 p = primes[n_have + k];
      i64 t = 0;
      if (required_override(p)) {
        if (!override_at(p, t))
          throw std::invalid_argument("missing bad-prime trace for p=" + std::to_string(p));
      } else {
        t = trace_of_frobenius(E, p, &scratch[w]);
      }
      traces[n_have + k] = t;
    });
    if (opt.use_cache && p_max > cached_pmax)
      detail::TraceCache::store(dir, file, E.hash(), p_max, traces);
  }
  return traces;
}

inline CoefficientTable build_coefficient_table(const CurveModel& E, u64 n_max,
                                                const BuildOptions& opt = {}) {
  if (n_max < 1) throw std::invalid_argument("n_max must be positive");
  E.validate();
  // Fail before any heavy work if a required override is absent.
  {
    auto need = [&](u64 p) {
      if (p <= n_max && !E.bad_prime_traces.count(p))
        throw std::invalid_argument("missing bad-prime trace for p=" + std::to_string(p));
    };
    need(2);
    u64 n = E.conductor;
    for (u64 p = 2; p * p <= n; ++p)
      if (n % p == 0) {
        need(p);
        while (n % p == 0) n /= p;
      }
    if (n > 1) need(n);
  }

  CoefficientTable T;
  T.n_max = n_max;
  least_factor_sieve(static_cast<u32>(n_max), T.lpf, T.primes);
  std::vector<i64> traces = prime_traces(E, T.primes, opt);

  T.A.assign(n_max + 1, 0);
  if (n_max >= 1) T.A[1] = 1;
  // Prime entries first, then the multiplicative/Hecke fill in one pass.
  for (size_t i = 0; i < T.primes.size(); ++i) T.A[T.primes[i]] = traces[i];
  for (u64 n = 4; n <= n_max; ++n) {
    u64 p = T.lpf[n];
    if (p == n) continue;  // prime, already set
    u64 m = n / p;
    if (m % p != 0) {
      T.A[n] = T.A[p] * T.A[m];  // gcd(p, m) = 1
      continue;
    }
    // p^2 | n: split off the full p-power part
    u64 t = n;
    while (t % p == 0) t /= p;
    if (t == 1) {
      // n = p^e, e >= 2
      if (E.conductor % p == 0)
        T.A[n] = T.A[p] * T.A[n / p];
      else
        T.A[n] = T.A[p] * T.A[n / p] - static_cast<i64>(p) * T.A[n / (p * p)];
    } else {
      T.A[n] = T.A[n / t] * T.A[t];
    }
  }

  // Hasse sanity over the point-counted range; catches cache corruption.
  for (size_t i = 0; i < T.primes.size(); ++i) {
    u64 p = T.primes[i];
    if (p == 2 || E.conductor % p == 0) continue;
    double b = 2.0 * std::sqrt(static_cast<double>(p));
    if (std::abs(static_cast<double>(traces[i])) > b)
      throw std::runtime_error("Hasse bound violated at p=" + std::to_string(p) +
                               " (corrupt trace cache?)");
  }

  T.a_over_n.assign(n_max + 1, 0.0);
  for (u64 n = 1; n <= n_max; ++n)
    T.a_over_n[n] = static_cast<double>(T.A[n]) / static_cast<double>(n);
  return T;
}

// Truncated Euler product for L(1, sym^2 E). Good p: the degree-3 local factor
// [(1 - (a(p)^2 - 2)x + x^2)(1 - x)]^{-1} at x = 1/p, which is
// [(1-alpha^2 x)(1-x)(1-beta^2 x)]^{-1} for a(p) = alpha + beta, alpha beta = 1.
// Bad p: degree-1 factor (1 - a(p)^2/p)^{-1}; reports must flag the convention.
inline double symmetric_square_L(const CurveModel& E, const CoefficientTable& T,
                                 u64 prime_cutoff) {
  if (prime_cutoff < 2) throw std::invalid_argument("cutoff too small");
  if (prime_cutoff > T.n_max)
    throw std::invalid_argument("coefficient table too small for cutoff");
  double value = 1.0;
  for (u32 p : T.primes) {
    if (p > prime_cutoff) break;
    double dp = static_cast<double>(p);
    double ap2 = static_cast<double>(T.A[p]) * static_cast<double>(T.A[p]) / dp;  // a(p)^2
    double local;
    if (E.conductor % p == 0) {
      local = 1.0 - ap2 / dp;
    } else {
      double x = 1.0 / dp;
      local = (1.0 - (ap2 - 2.0) * x + x * x) * (1.0 - x);
    }
    value /= local;
  }
  return value;
}

inline SplittingClass splitting_constants(int degree) {
  const double l2 = std::log(2.0);
  switch (degree) {
    case 1: return {1, -0.5 - 2.0 * l2, 1.0 + 4.0 * l2 * l2};
    case 2: return {2, -0.5 - 1.5 * l2, 1.0 + 2.5 * l2 * l2};
    case 3: return {3, -0.5 - (2.0 / 3.0) * l2, 1.0 + (4.0 / 3.0) * l2 * l2};
    case 6: return {6, -0.5 - (5.0 / 6.0) * l2, 1.0 + (7.0 / 6.0) * l2 * l2};
    default: throw std::invalid_argument("splitting degree must be 1, 2, 3, or 6");
  }
}

// Degree of the splitting field of f over Q, decided exactly: integer-root
// search (monic, so rational roots are integers dividing a0), quadratic
// discriminant test after deflation, and for irreducible f the classical
// square-discriminant criterion separating the cyclic and symmetric cases.
inline SplittingClass classify_splitting_field(const CurveModel& E) {
  __int128 disc = E.cubic_discriminant();
  if (disc == 0) throw std::invalid_argument("singular cubic");

  auto eval = [&](i64 x) -> __int128 {
    __int128 v = x;
    return v * v * v + static_cast<__int128>(E.a2) * v * v + static_cast<__int128>(E.a1) * v +
           E.a0;
  };
  i64 root = 0;
  bool have_root = false;
  if (E.a0 == 0) {
    root = 0;
    have_root = true;
  } else {
    u64 abs0 = static_cast<u64>(E.a0 < 0 ? -E.a0 : E.a0);
    for (u64 t = 1; t * t <= abs0 && !have_root; ++t) {
      if (abs0 % t != 0) continue;
      for (u64 dvec : {t, abs0 / t}) {
        for (i64 sign : {1, -1}) {
          i64 cand = sign * static_cast<i64>(dvec);
          if (eval(cand) == 0) {
            root = cand;
            have_root = true;
            break;
          }
        }
        if (have_root) break;
      }
    }
  }

  int degree;
  if (have_root) {
    // f = (x - root)(x^2 + b x + c)
    i64 b = E.a2 + root;
    i64 c = E.a1 + root * b;
    __int128 d2 = static_cast<__int128>(b) * b - 4 * static_cast<__int128>(c);
    bool split = false;
    if (d2 >= 0) {
      u64 r = isqrt(static_cast<u64>(d2));
      split = static_cast<__int128>(r) * r == d2;
    }
    degree = split ? 1 : 2;
  } else {
    bool square = false;
    if (disc > 0) {
      u64 r = isqrt(static_cast<u64>(disc));
      square = static_cast<__int128>(r) * r == disc;
    }
    degree = square ? 3 : 6;
  }
  return splitting_constants(degree);
}

namespace detail {

// Arithmetic in F_p[x] mod the cubic f, for polynomials of degree <= 2.
struct CubicModP {
  u64 p;
  u64 c2, c1, c0;  // f = x^3 + c2 x^2 + c1 x + c0 over F_p

  u64 red(i64 v) const {
    i64 m = v % static_cast<i64>(p);
    return static_cast<u64>(m < 0 ? m + static_cast<i64>(p) : m);
  }

  // x^3 == -(c2 x^2 + c1 x + c0), applied repeatedly to clear degrees 4 and 3
  std::array<u64, 3> mul(const std::array<u64, 3>& a, const std::array<u64, 3>& b) const {
    u64 t[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t[i + j] = (t[i + j] + mulmod(a[i], b[j], p)) % p;
    for (int d = 4; d >= 3; --d) {
      u64 lead = t[d];
      if (!lead) continue;
      t[d] = 0;
      t[d - 1] = (t[d - 1] + p - mulmod(lead, c2, p) % p) % p;
      t[d - 2] = (t[d - 2] + p - mulmod(lead, c1, p) % p) % p;
      t[d - 3] = (t[d - 3] + p - mulmod(lead, c0, p) % p) % p;
    }
    return {t[0], t[1], t[2]};
  }

  std::array<u64, 3> pow_x(u64 e) const {
    std::array<u64, 3> result = {1, 0, 0};
    std::array<u64, 3> base = {0, 1, 0};  // x
    while (e) {
      if (e & 1) result = mul(result, base);
      base = mul(base, base);
      e >>= 1;
    }
    return result;
  }
};

// gcd degree of (x^p - x, f) over F_p = number of distinct roots of f in F_p.
inline int cubic_root_count(u64 p, u64 c2, u64 c1, u64 c0) {
  CubicModP F{p, c2, c1, c0};
  std::array<u64, 3> xp = F.pow_x(p);
  // g = x^p - x mod f, degree <= 2
  std::vector<u64> g = {xp[0], (xp[1] + p - 1) % p, xp[2]};
  std::vector<u64> f = {c0, c1, c2, 1};
  auto trim = [&](std::vector<u64>& v) {
    while (!v.empty() && v.back() == 0) v.pop_back();
  };
  trim(g);
  trim(f);
  // Euclid over F_p[x]
  std::vector<u64> A = f, B = g;
  while (!B.empty()) {
    // A mod B
    u64 inv_lead = powmod(B.back(), p - 2, p);
    while (A.size() >= B.size()) {
      u64 coef = mulmod(A.back(), inv_lead, p);
      size_t shift = A.size() - B.size();
      for (size_t i = 0; i < B.size(); ++i)
        A[shift + i] = (A[shift + i] + p - mulmod(coef, B[i], p)) % p;
      trim(A);
      if (A.empty()) break;
    }
    std::swap(A, B);
  }
  return A.empty() ? 0 : static_cast<int>(A.size()) - 1;  // deg of the gcd
}

}  // namespace detail

// c(p) = 1 + #{x mod p : f(x) = 0}, in {1, 2, 4}. A squarefree cubic cannot
// have exactly two roots in F_p (the third root would be forced into F_p by
// the trace), so the root count is 0, 1, or 3.
inline int tamagawa_root_count(const CurveModel& E, u64 p) {
  if (p == 2 || p % 2 == 0) throw std::invalid_argument("excluded prime");
  __int128 nd = E.cubic_discriminant();
  if (nd < 0) nd = -nd;
  if (E.conductor % p == 0 || static_cast<u64>(nd % static_cast<__int128>(p)) == 0)
    throw std::invalid_argument("excluded prime");
  auto red = [&](i64 v) -> u64 {
    i64 m = v % static_cast<i64>(p);
    return static_cast<u64>(m < 0 ? m + static_cast<i64>(p) : m);
  };
  int roots = detail::cubic_root_count(p, red(E.a2), red(E.a1), red(E.a0));
  if (roots == 2) throw std::logic_error("two-root cubic at a good prime");
  return 1 + roots;
}

}  // namespace twistlab
