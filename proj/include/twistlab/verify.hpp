#pragma once
// Self-check suites behind `twistlab verify` and the acceptance runner.
// Each suite returns a VerifyResult: how many checks ran, the worst margin
// seen, and the first few violations spelled out. A suite never throws on a
// failed check, only on unusable arguments.

#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "twistlab/curve.hpp"
#include "twistlab/discriminants.hpp"
#include "twistlab/gauss.hpp"
#include "twistlab/lvalue.hpp"
#include "twistlab/moments.hpp"
#include "twistlab/mollifier.hpp"
#include "twistlab/report.hpp"

namespace twistlab {

namespace detail {

inline std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return std::string(buf);
}

}  // namespace detail

struct VerifyResult {
  static constexpr size_t kMaxListed = 10;

  std::string name;
  u64 checks = 0;
  u64 failures = 0;
  std::vector<std::string> violations;  // first kMaxListed only
  double worst = 0.0;                   // extreme of the tracked margin
  std::string worst_kind;               // what `worst` measures
  double runtime_s = 0.0;

  bool pass() const { return failures == 0; }

  void fail(std::string msg) {
    if (violations.size() < kMaxListed) violations.push_back(std::move(msg));
    ++failures;
  }
};

inline void print_result(const VerifyResult& R, std::FILE* out = stdout) {
  std::fprintf(out, "suite: %s\n", R.name.c_str());
  std::fprintf(out, "checks: %llu\n", static_cast<unsigned long long>(R.checks));
  std::fprintf(out, "%s: %s\n", R.worst_kind.c_str(), format_sig(R.worst).c_str());
  for (const auto& v : R.violations) std::fprintf(out, "violation: %s\n", v.c_str());
  if (R.failures > VerifyResult::kMaxListed)
    std::fprintf(out, "... and %llu more\n",
                 static_cast<unsigned long long>(R.failures - VerifyResult::kMaxListed));
  std::fprintf(out, "%s\n", R.pass() ? "PASS" : "FAIL");
  std::fprintf(out, "runtime_s: %s\n", format_sig(R.runtime_s).c_str());
}

// Closed-form Gauss sums against the brute-force DFT on every odd n <= n_max,
// |k| <= k_max, then exact multiplicativity over coprime odd pairs.
inline VerifyResult verify_gauss(u64 n_max = 3000, i64 k_max = 60, u64 mult_max = 200) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "gauss";
  R.worst_kind = "max |closed - brute|";
  for (u64 n = 1; n <= n_max; n += 2) {
    GaussBruteTable table(n);
    for (i64 k = -k_max; k <= k_max; ++k) {
      double diff = std::abs(gauss_G_closed(k, n) - table.G_at(k));
      ++R.checks;
      if (diff > R.worst) R.worst = diff;
      if (!(diff <= 1e-10))
        R.fail(detail::strf("G_%lld(%llu) closed vs brute: diff %s",
                            static_cast<long long>(k), static_cast<unsigned long long>(n),
                            format_sig(diff).c_str()));
    }
  }
  for (u64 m = 1; m <= mult_max; m += 2) {
    for (u64 n = m + 2; n <= mult_max; n += 2) {
      if (std::gcd(m, n) != 1) continue;
      for (i64 k = -20; k <= 20; ++k) {
        ExactRadical lhs = gauss_G_exact(k, m * n);
        ExactRadical rhs = gauss_G_exact(k, m).times(gauss_G_exact(k, n));
        ++R.checks;
        if (!(lhs == rhs))
          R.fail(detail::strf("G_%lld(%llu * %llu) != product of factors",
                              static_cast<long long>(k), static_cast<unsigned long long>(m),
                              static_cast<unsigned long long>(n)));
      }
    }
  }
  R.runtime_s = clock.seconds();
  return R;
}

// Poisson summation for a Gaussian window over an arithmetic progression.
// The dual-side truncation K covers |k| <= K; its partial sums oscillate
// while the first nonzero Gauss sums enter, so strict decrease is asserted
// along K = 16, 32, 64 and only above the double roundoff floor.
inline VerifyResult verify_poisson(u32 trials = 100, u64 seed = 1) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "poisson";
  R.worst_kind = "max residual at K=64";
  constexpr double kFloor = 1e-13;
  std::mt19937_64 rng(seed);
  u32 done = 0;
  while (done < trials) {
    u64 q = 1 + rng() % 20;
    u64 n = 1 + 2 * (rng() % 50);
    if (std::gcd(n, q) != 1) continue;
    i64 r = static_cast<i64>(rng() % q);
    GaussianWindow F{static_cast<double>(rng() % 100),
                     static_cast<double>(n * q) / 16.0};
    double r16 = poisson_identity_residual(F, r, q, n, 16);
    double r32 = poisson_identity_residual(F, r, q, n, 32);
    double r64 = poisson_identity_residual(F, r, q, n, 64);
    auto id = [&] {
      return detail::strf("q=%llu n=%llu r=%lld center=%s",
                          static_cast<unsigned long long>(q),
                          static_cast<unsigned long long>(n), static_cast<long long>(r),
                          format_sig(F.center).c_str());
    };
    ++R.checks;
    if (r64 > R.worst) R.worst = r64;
    if (!(r64 < 1e-9))
      R.fail(detail::strf("%s: residual %s at K=64", id().c_str(), format_sig(r64).c_str()));
    ++R.checks;
    if (r16 > kFloor ? !(r32 < r16) : !(r32 <= kFloor))
      R.fail(detail::strf("%s: residual did not drop, K=16 %s -> K=32 %s", id().c_str(),
                          format_sig(r16).c_str(), format_sig(r32).c_str()));
    ++R.checks;
    if (r32 > kFloor ? !(r64 < r32) : !(r64 <= kFloor))
      R.fail(detail::strf("%s: residual did not drop, K=32 %s -> K=64 %s", id().c_str(),
                          format_sig(r32).c_str(), format_sig(r64).c_str()));
    ++done;
  }
  R.runtime_s = clock.seconds();
  return R;
}

// Truncated-exponential facts: positivity, convexity, domination of e^x on
// the negative axis, and the two-sided pinch up to x = ell / e^2. Slack is
// measured relative to the local scale so roundoff on e^40-sized values does
// not drown a 1e-10 margin.
inline VerifyResult verify_lemma1(u32 trials = 10000, u64 seed = 1) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "lemma1";
  R.worst_kind = "min normalized slack";
  R.worst = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-40.0, 40.0);
  const double h = 0.25;  // convexity probe spacing
  auto note = [&](double slack, int ell, double x, const char* what) {
    if (slack < R.worst) R.worst = slack;
    ++R.checks;
    if (!(slack >= -1e-10))
      R.fail(detail::strf("ell=%d x=%s: %s slack %s", ell, format_sig(x).c_str(), what,
                          format_sig(slack).c_str()));
  };
  for (u32 t = 0; t < trials; ++t) {
    double x = U(rng);
    for (int ell = 2; ell <= 40; ell += 2) {
      double E = truncated_exp(ell, x);
      double Em = truncated_exp(ell, x - h);
      double Ep = truncated_exp(ell, x + h);
      double scale = std::max({1.0, std::abs(Em), std::abs(Ep)});
      note(E / scale, ell, x, "positivity");
      note((Em - 2.0 * E + Ep) / scale, ell, x, "convexity");
      if (x <= 0.0) note((E - std::exp(x)) / scale, ell, x, "E >= e^x");
      if (x <= static_cast<double>(ell) / std::exp(2.0))
        note(((1.0 + std::exp(-ell) / 16.0) * E - std::exp(x)) / scale, ell, x,
             "pinch e^x <= (1+e^-ell/16) E");
    }
  }
  R.runtime_s = clock.seconds();
  return R;
}

// Randomized mollifier key inequality over the documented parameter box.
inline VerifyResult verify_key_inequality(u32 trials = 10000, u64 seed = 1) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "key-inequality";
  R.worst_kind = "min gap";
  R.worst = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (u32 t = 0; t < trials; ++t) {
    double y = 1000.0 * U(rng);
    size_t parts = 1 + rng() % 4;
    std::vector<double> xs(parts);
    std::vector<int> ells(parts);
    for (size_t j = 0; j < parts; ++j) {
      xs[j] = -20.0 + 40.0 * U(rng);
      ells[j] = 2 * static_cast<int>(1 + rng() % 6);  // even in [2, 12]
    }
    double k = U(rng);
    double gap = key_inequality_gap(y, xs, ells, k);
    ++R.checks;
    if (gap < R.worst) R.worst = gap;
    if (!(gap >= -1e-10))
      R.fail(detail::strf("y=%s k=%s parts=%zu: gap %s", format_sig(y).c_str(),
                          format_sig(k).c_str(), parts, format_sig(gap).c_str()));
  }
  R.runtime_s = clock.seconds();
  return R;
}

// Central-value truncation self-consistency: doubling the truncation constant
// must leave L(1/2) unchanged to 1e-8, and no value may dip below -1e-6.
// Samples are evenly spaced through the class members up to d_max.
inline VerifyResult verify_afe(const CurveModel& E, const CoefficientTable& T,
                               const TwistClass& cls, u32 samples = 100,
                               u64 d_max = 10000, LValueOptions opt = {}) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "afe";
  R.worst_kind = "max |L - L_doubled|";
  auto ds = enumerate_class(cls, d_max).collect();
  if (ds.empty()) throw std::invalid_argument("no class members up to d_max");
  if (samples == 0) throw std::invalid_argument("samples must be positive");
  if (samples > ds.size()) samples = static_cast<u32>(ds.size());
  LValueOptions wide_opt = opt;
  wide_opt.c_trunc = 2.0 * opt.c_trunc;
  wide_opt.use_cache = false;  // cold recompute, cheap at this scale
  LValueEngine base(E, T, cls, opt);
  LValueEngine wide(E, T, cls, wide_opt);
  i64 d_big = ds.back();
  for (i64 d : ds)
    if (detail::abs_i64(d) > detail::abs_i64(d_big)) d_big = d;
  if (wide.truncation_length(d_big) > T.n_max)
    throw std::invalid_argument("coefficient table too small for the doubled truncation");
  for (u32 i = 0; i < samples; ++i) {
    size_t idx = samples == 1 ? 0 : (static_cast<size_t>(i) * (ds.size() - 1)) / (samples - 1);
    i64 d = ds[idx];
    double L1 = base.central_value(d);
    double L2 = wide.central_value(d);
    double diff = std::abs(L1 - L2);
    ++R.checks;
    if (diff > R.worst) R.worst = diff;
    if (!(diff < 1e-8))
      R.fail(detail::strf("d=%lld: truncation doubling moved L by %s",
                          static_cast<long long>(d), format_sig(diff).c_str()));
    ++R.checks;
    if (!(std::min(L1, L2) >= -1e-6))
      R.fail(detail::strf("d=%lld: negative central value %s", static_cast<long long>(d),
                          format_sig(std::min(L1, L2)).c_str()));
  }
  R.runtime_s = clock.seconds();
  return R;
}

// Weighted character-sum averages: square n against the density main term,
// non-square n against the square-root cancellation envelope. v must stay
// coprime to n and the class modulus, so the square side runs the three
// coherent pairs from {1,9} x {1,3}.
inline VerifyResult verify_charsum(const MomentLab& lab, double X = 1e6) {
  detail::Stopwatch clock;
  VerifyResult R;
  R.name = "charsum";
  R.worst_kind = "max rel err on square n";
  const std::pair<u64, u64> square_side[] = {{1, 1}, {1, 3}, {9, 1}};
  for (auto [n, v] : square_side) {
    MomentReport rep = lab.charsum_average(n, v, X);
    ++R.checks;
    if (rep.rel_err > R.worst) R.worst = rep.rel_err;
    if (!(rep.rel_err < 0.05))
      R.fail(detail::strf("n=%llu v=%llu: rel err %s", static_cast<unsigned long long>(n),
                          static_cast<unsigned long long>(v),
                          format_sig(rep.rel_err).c_str()));
  }
  for (u64 n : {u64(3), u64(5)}) {
    MomentReport rep = lab.charsum_average(n, 1, X);
    double bound = std::pow(X, 0.55) * std::sqrt(static_cast<double>(n));
    ++R.checks;
    if (!(std::abs(rep.empirical) <= bound))
      R.fail(detail::strf("n=%llu: |sum| %s exceeds X^0.55 sqrt(n) = %s",
                          static_cast<unsigned long long>(n),
                          format_sig(std::abs(rep.empirical)).c_str(),
                          format_sig(bound).c_str()));
  }
  R.runtime_s = clock.seconds();
  return R;
}

}  // namespace twistlab
