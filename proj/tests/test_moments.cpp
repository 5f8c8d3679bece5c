#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "twistlab/moments.hpp"

using namespace twistlab;

namespace {

CurveModel congruent_curve() {
  CurveModel E;
  E.a2 = 0;
  E.a1 = -1;
  E.a0 = 0;
  E.conductor = 32;
  E.root_number = +1;
  E.bad_prime_traces = {{2, 0}};
  return E;
}

CurveModel eleven_curve() {
  CurveModel E;
  E.a2 = -4;
  E.a1 = 0;
  E.a0 = 16;
  E.conductor = 11;
  E.root_number = +1;
  E.bad_prime_traces = {{2, -2}, {11, 1}};
  return E;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() /
           ("twistlab-mo-" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

// Shared fixtures: one table, one lab, one cache directory for the whole
// binary, so the central-value memo is reused across test cases.
const CoefficientTable& table() {
  static CurveModel E = congruent_curve();
  static CoefficientTable T = build_coefficient_table(E, 200000);
  return T;
}

MomentLab& lab() {
  static CurveModel E = congruent_curve();
  static TwistClass cls(E, +1, 17);
  static TempDir tmp;
  static MomentOptions opt = [] {
    MomentOptions o;
    o.lvalue.cache_dir = tmp.path.string();
    return o;
  }();
  static MomentLab L(E, table(), cls, opt);
  return L;
}

MomentLab& lab11() {
  static CurveModel E = eleven_curve();
  static CoefficientTable T = build_coefficient_table(E, 20000);
  static TwistClass cls(E, +1, 1);
  static MomentOptions opt = [] {
    MomentOptions o;
    o.euler_cutoff = 20000;
    return o;
  }();
  static MomentLab L(E, T, cls, opt);
  return L;
}

// Local Euler factor of G(1+2s) at a good prime, via the Hecke-ladder
// Dirichlet series D_p(x) = sum_j a(p^j)^2 x^j with the closed form
// D_p = (1+x)/((1-x)(1-(a(p)^2-2)x+x^2)); eliminating the quadratic gives
//   G_p = (1-1/p)(1+x)((1-x) + 1/(p D_p)),
// so summing the ladder numerically is an oracle independent of the
// polynomial arrangement used by the implementation.
double local_factor_series(double a1, double p, double s, int J = 160) {
  double x = std::pow(p, -(1.0 + 2.0 * s));
  double D = 1.0, aprev = 1.0, acur = a1, xe = 1.0;
  for (int j = 1; j <= J; ++j) {
    xe *= x;
    D += acur * acur * xe;
    double anext = a1 * acur - aprev;
    aprev = acur;
    acur = anext;
  }
  return (1.0 - 1.0 / p) * (1.0 + x) * ((1.0 - x) + 1.0 / (p * D));
}

double local_factor_of(MomentLab& L, u64 p, double s) {
  GEulerOptions at;
  at.prime_cutoff = p;
  at.s = s;
  GEulerOptions below = at;
  below.prime_cutoff = p - 1;
  return L.G_euler_detailed(1, 1, at).value / L.G_euler_detailed(1, 1, below).value;
}

}  // namespace

TEST_CASE("gaussian moments are double factorials") {
  CHECK(gaussian_moment(0) == 1.0);
  CHECK(gaussian_moment(2) == 1.0);
  CHECK(gaussian_moment(4) == 3.0);
  CHECK(gaussian_moment(6) == 15.0);
  CHECK(gaussian_moment(8) == 105.0);
  for (int k : {1, 3, 5, 7}) CHECK(gaussian_moment(k) == 0.0);
  CHECK_THROWS_AS(gaussian_moment(-2), std::invalid_argument);
  CHECK(relative_error(3.0, 2.0) == 0.5);
  CHECK(std::isnan(relative_error(5.0, 0.0)));
}

TEST_CASE("distinct-prime symmetric sums match brute-force subsets") {
  std::mt19937_64 rng(7);
  std::vector<double> x(40);
  for (double& v : x) v = static_cast<double>(rng() % 1000000) / 1e6;

  double e1 = 0.0, p2 = 0.0, p3 = 0.0;
  for (double v : x) {
    e1 += v;
    p2 += v * v;
    p3 += v * v * v;
  }
  double pairs = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j) pairs += x[i] * x[j];
  double triples = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j)
      for (size_t l = j + 1; l < x.size(); ++l) triples += x[i] * x[j] * x[l];

  CHECK(detail::distinct_subset_symmetric_sum(x, 1) == Catch::Approx(e1).epsilon(1e-13));
  CHECK(detail::distinct_subset_symmetric_sum(x, 2) == Catch::Approx(pairs).epsilon(1e-13));
  CHECK(detail::distinct_subset_symmetric_sum(x, 3) == Catch::Approx(triples).epsilon(1e-13));
  // Newton's identities give a second, structurally different oracle.
  double e2 = (e1 * e1 - p2) / 2.0;
  CHECK(detail::distinct_subset_symmetric_sum(x, 2) == Catch::Approx(e2).epsilon(1e-13));
  CHECK(detail::distinct_subset_symmetric_sum(x, 3) ==
        Catch::Approx((e2 * e1 - e1 * p2 + p3) / 3.0).epsilon(1e-12));
  CHECK(detail::distinct_subset_symmetric_sum(x, 0) == 1.0);
  CHECK(detail::distinct_subset_symmetric_sum(x, 41) == 0.0);
  CHECK_THROWS_AS(detail::distinct_subset_symmetric_sum(x, -1), std::invalid_argument);
}

TEST_CASE("prime character table agrees with the Kronecker symbol") {
  const auto& T = table();
  detail::PrimeCharTable P(T, 32, 2e4);
  REQUIRE(P.primes.size() == 2261);  // pi(2e4) = 2262, minus p = 2
  CHECK(P.primes[0] == 3);
  CHECK(P.primes[1] == 5);
  CHECK(P.primes[2] == 7);
  CHECK(P.weight[1] == -0.4);  // A(5)/5

  // The cutoff crosses the residue-table limit, so both the byte-table and
  // the generic fallback paths are exercised.
  std::mt19937_64 rng(12345);
  for (int t = 0; t < 50; ++t) {
    i64 d = static_cast<i64>(rng() % 2000000) * 2 + 1;
    if (t % 2) d = -d;
    for (size_t i = 0; i < P.primes.size(); ++i)
      CHECK(P.chi(i, d) == static_cast<double>(kronecker(d, static_cast<i64>(P.primes[i]))));
    double manual = P.eval(d) - P.weight[1] * static_cast<double>(kronecker(d, 5));
    CHECK(std::abs(P.eval(d, 5) - manual) < 1e-12);
  }

  CHECK_THROWS_AS(detail::PrimeCharTable(T, 32, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(detail::PrimeCharTable(T, 32, 2e6), std::invalid_argument);
  CHECK_THROWS_AS(detail::PrimeCharTable(T, 32, 3e5), std::invalid_argument);
}

TEST_CASE("character-sum averages match the squarefree-density main term") {
  MomentLab& L = lab();
  // Square n: the average converges to the density main term.
  for (auto [n, v] : std::vector<std::pair<u64, u64>>{{1, 1}, {9, 1}, {1, 3}, {25, 1}}) {
    auto r = L.charsum_average(n, v, 2e4);
    CHECK(r.rel_err < 0.02);
    CHECK(r.oracle > 0.0);
  }
  // Smaller subfamily, larger fluctuation allowance.
  CHECK(L.charsum_average(9, 5, 2e4).rel_err < 0.06);
  // Non-square n: square-root cancellation, zero main term.
  for (u64 n : {3ull, 5ull, 7ull, 21ull}) {
    auto r = L.charsum_average(n, 1, 2e4);
    CHECK(r.oracle == 0.0);
    CHECK(std::isnan(r.rel_err));
    CHECK(std::abs(r.empirical) < 20.0);
  }
  CHECK_THROWS_AS(L.charsum_average(2, 1, 2e4), std::invalid_argument);
  CHECK_THROWS_AS(L.charsum_average(1, 225, 2e4), std::invalid_argument);
  CHECK_THROWS_AS(L.charsum_average(1, 6, 2e4), std::invalid_argument);
  // v sqrt(n) = 87 just misses the averaging regime bound X^0.45 = 86.2
  CHECK_THROWS_AS(L.charsum_average(9, 29, 2e4), std::invalid_argument);
  CHECK_THROWS_AS(L.charsum_average(0, 1, 2e4), std::invalid_argument);
  CHECK_THROWS_AS(L.charsum_average(1, 1, 5.0), std::invalid_argument);
}

TEST_CASE("compensation Euler product: closed forms and series identity") {
  MomentLab& L = lab();
  GEulerOptions cut3;
  cut3.prime_cutoff = 3;
  // With the cutoff at 3 only p = 2 (trivial local factor: bad reduction,
  // trace 0) and p = 3 contribute. a(3) = 0, so the generic factor is
  // (2/3)(2/3)(1 + (1/3)(1 + 2/3 + 1/9) + 1/3) = 208/243; at p | u1 it is
  // (2/3)^2; at p | uv with p coprime to u1, (2/3)(1 - 1/9).
  CHECK(L.G_euler_detailed(1, 1, cut3).value == Catch::Approx(208.0 / 243.0).epsilon(1e-14));
  CHECK(L.G_euler_detailed(3, 1, cut3).value == Catch::Approx(4.0 / 9.0).epsilon(1e-14));
  CHECK(L.G_euler_detailed(9, 1, cut3).value == Catch::Approx(16.0 / 27.0).epsilon(1e-14));
  CHECK(L.G_euler_detailed(1, 3, cut3).value == Catch::Approx(16.0 / 27.0).epsilon(1e-14));

  // Local factors at p | N0 through cutoff ratios: for the congruent-number
  // curve p = 2 is bad with trace 0, factor 1; for 11a p = 2 is good with
  // a(2)^2 = 2, factor (1 - 1/2)(1 - 0 + 1/4) = 5/8, and p = 11 is bad with
  // a(11)^2 = 1/11, factor 1 - 1/121.
  GEulerOptions cut2;
  cut2.prime_cutoff = 2;
  CHECK(L.G_euler_detailed(1, 1, cut2).value == 1.0);
  CHECK(lab11().G_euler_detailed(1, 1, cut2).value == Catch::Approx(0.625).epsilon(1e-14));
  CHECK(local_factor_of(lab11(), 11, 0.0) == Catch::Approx(120.0 / 121.0).epsilon(1e-13));

  // Generic local factors against the Hecke-ladder series oracle.
  auto T11 = build_coefficient_table(eleven_curve(), 100);
  for (double s : {0.0, 0.5})
    for (u64 p : {3ull, 5ull, 7ull, 13ull}) {
      CHECK(std::abs(local_factor_of(L, p, s) -
                     local_factor_series(table().a(p), static_cast<double>(p), s)) < 1e-12);
      CHECK(std::abs(local_factor_of(lab11(), p, s) -
                     local_factor_series(T11.a(p), static_cast<double>(p), s)) < 1e-12);
    }

  // Truncation stability: the two-cutoff difference sits inside the sum of
  // the reported tail bounds.
  GEulerOptions half;
  half.prime_cutoff = 50000;
  auto g_full = L.G_euler_detailed(1, 1, {});
  auto g_half = L.G_euler_detailed(1, 1, half);
  CHECK(g_full.tail_bound == 6.0 / 100000.0);
  CHECK(std::abs(g_full.value - g_half.value) < g_full.tail_bound + g_half.tail_bound);
  CHECK(std::abs(g_full.value - g_half.value) < 3e-4);

  // Factorization: G(1;u,1) G(1;1,v) / G(1;1,1) = G(1;u,v) for coprime u, v.
  std::vector<std::pair<u64, u64>> pairs = {
      {3, 1},  {9, 1},  {1, 3},  {5, 3},  {3, 5},  {7, 3},  {9, 5},
      {25, 3}, {27, 7}, {11, 3}, {15, 7}, {21, 5}, {33, 5}, {35, 3},
      {45, 7}, {49, 3}, {63, 5}, {77, 3}, {81, 5}, {121, 3}};
  double base = L.G_euler(1, 1);
  for (auto [u, v] : pairs)
    CHECK(std::abs(L.G_euler(u, 1) * L.G_euler(1, v) / base - L.G_euler(u, v)) < 1e-8);

  GEulerOptions wide;
  wide.prime_cutoff = 300000;  // beyond the table
  CHECK_THROWS_AS(L.G_euler_detailed(1, 1, wide), std::invalid_argument);
  GEulerOptions neg;
  neg.s = -0.25;
  CHECK_THROWS_AS(L.G_euler_detailed(1, 1, neg), std::invalid_argument);
  CHECK_THROWS_AS(L.G_euler_detailed(15, 1, cut3), std::invalid_argument);
  CHECK_THROWS_AS(L.G_euler(2, 1), std::invalid_argument);
  CHECK_THROWS_AS(L.G_euler(3, 3), std::invalid_argument);
  CHECK_THROWS_AS(L.G_euler(1, 9), std::invalid_argument);

  MomentOptions bad;
  bad.euler_cutoff = 300000;
  CurveModel E = congruent_curve();
  TwistClass cls(E, +1, 17);
  CHECK_THROWS_AS(MomentLab(E, table(), cls, bad), std::invalid_argument);
}

TEST_CASE("first moment matches its Euler-product main term") {
  MomentLab& L = lab();
  auto r = L.first_moment(1, 1, 2000);
  CHECK(r.oracle > 0.0);
  CHECK(r.rel_err < 0.25);

  // Oracle scalings: v divides the count, u enters through a(u1) and G.
  auto a = L.first_moment(1, 1, 500);
  auto b = L.first_moment(1, 3, 500);
  auto c = L.first_moment(9, 1, 500);
  CHECK(std::abs(b.oracle / a.oracle - L.G_euler(1, 3) / (3.0 * L.G_euler(1, 1))) < 1e-12);
  CHECK(std::abs(c.oracle / a.oracle - L.G_euler(9, 1) / L.G_euler(1, 1)) < 1e-12);
  // a(3) = 0 for the congruent-number curve, so the u = 3 main term vanishes.
  auto z = L.first_moment(3, 1, 500);
  CHECK(z.oracle == 0.0);
  CHECK(std::isnan(z.rel_err));

  CHECK_THROWS_AS(L.first_moment(524287, 1, 500), std::invalid_argument);  // u1 beyond the table
  CHECK_THROWS_AS(L.first_moment(1, 1, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(L.first_moment(2, 1, 500), std::invalid_argument);
  CHECK_THROWS_AS(L.first_moment(3, 3, 500), std::invalid_argument);
}

TEST_CASE("prime polynomial moments match the pair-diagonal oracle") {
  MomentLab& L = lab();

  // Small-scale brute force: at z = 10 the polynomial has three terms
  // (p = 3, 5, 7) and the empirical sum can be replayed directly.
  {
    CurveModel E = congruent_curve();
    TwistClass cls(E, +1, 17);
    MomentOptions o;
    o.z_P = 10.0;
    MomentLab small(E, table(), cls, o);
    SmoothCutoff phi;
    auto ds = enumerate_class(cls, 500).collect();
    for (int k = 0; k <= 4; ++k) {
      double emp = 0.0;
      for (i64 d : ds) {
        double w = phi(static_cast<double>(detail::abs_i64(d)) / 200.0);
        if (w <= 0.0) continue;
        double val = 0.0;
        for (u64 p : {3ull, 5ull, 7ull})
          val += (static_cast<double>(table().A[p]) / static_cast<double>(p)) *
                 static_cast<double>(kronecker(d, static_cast<i64>(p)));
        double pw = 1.0;
        for (int j = 0; j < k; ++j) pw *= val;
        emp += w * pw;
      }
      auto r = small.prime_sum_moments(k, 200);
      CHECK(std::abs(r.empirical - emp) < 1e-12);
    }
    // a(3) = a(7) = 0 leaves a single active prime, so the two-distinct-prime
    // elementary symmetric sum in the k = 4 oracle vanishes.
    CHECK(small.prime_sum_moments(4, 200).oracle == 0.0);
    CHECK(std::isnan(small.prime_sum_moments(1, 200).rel_err));
  }

  // k = 0 reproduces the weighted class count exactly.
  auto r0 = L.prime_sum_moments(0, 2e4);
  CHECK(r0.empirical == Catch::Approx(r0.oracle).epsilon(1e-12));
  CHECK(r0.rel_err < 1e-12);

  // Desk-scale ratios against the diagonal oracle: these are fixed
  // deterministic sums, bounded here with generous sampling margins.
  auto r2 = L.prime_sum_moments(2, 2e4);
  CHECK(r2.empirical / r2.oracle > 0.80);
  CHECK(r2.empirical / r2.oracle < 1.10);
  auto r4 = L.prime_sum_moments(4, 2e4);
  CHECK(r4.empirical / r4.oracle > 0.70);
  CHECK(r4.empirical / r4.oracle < 1.30);
  CHECK(r4.label.find("omitted diagonal") != std::string::npos);
  // Odd moments: zero oracle, small normalized empirical value.
  double llX = std::log(std::log(2e4));
  for (int k : {1, 3}) {
    auto r = L.prime_sum_moments(k, 2e4);
    CHECK(r.oracle == 0.0);
    CHECK(std::abs(r.empirical) / (2e4 * std::pow(llX, 0.5 * k)) < 0.02);
  }
  // Subfamily v | d: same oracle structure with the v-primes removed.
  auto rv = L.prime_sum_moments(2, 2e4, 5);
  CHECK(rv.empirical / rv.oracle > 0.6);
  CHECK(rv.empirical / rv.oracle < 1.5);

  CHECK_THROWS_AS(L.prime_sum_moments(-1, 2e4), std::invalid_argument);
  CHECK_THROWS_AS(L.prime_sum_moments(2, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(L.prime_sum_moments(2, 2e4, 4), std::invalid_argument);
  CHECK_THROWS_AS(L.prime_sum_moments(2, 2e4, 2), std::invalid_argument);
  CHECK_THROWS_AS(L.prime_sum_moments(2, 200, 101), std::invalid_argument);
}

TEST_CASE("compensator terms and contexts") {
  CurveModel E = congruent_curve();
  CurveModel E11 = eleven_curve();

  // x^3 - x has three roots mod every odd prime, so c(p) = 4 throughout.
  CHECK(tamagawa_term(E, 3, 51) == Catch::Approx(0.75 * std::log(4.0)).epsilon(1e-14));
  CHECK(tamagawa_term(E, 3, 17) == Catch::Approx(-0.25 * std::log(4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(tamagawa_term(E, 2, 17), std::invalid_argument);
  CHECK_THROWS_AS(tamagawa_term(E, 4, 17), std::invalid_argument);
  CHECK_THROWS_AS(tamagawa_term(E11, 11, 7), std::invalid_argument);

  TamagawaContext ctx(E, {3.0, 20.0});
  REQUIRE(ctx.prime_count() == 7);  // 3 5 7 11 13 17 19
  double closed = std::log(4.0) * (1.0 / 4 + 1.0 / 6 + 1.0 / 8 + 1.0 / 12 +
                                   1.0 / 14 + 1.0 / 18 + 1.0 / 20);
  CHECK(ctx.centering() == Catch::Approx(closed).epsilon(1e-12));
  for (i64 d : {17ll, 51ll, 85ll, 1905ll}) {
    double terms = 0.0;
    for (u32 p : ctx.primes()) terms += tamagawa_term(E, p, d);
    CHECK(std::abs(ctx.statistic(d) - terms) < 1e-12);
  }
  CHECK(ctx.statistic(17) > 0.0);  // 17 lies inside the window

  // The literal asymptotic window is empty at desk scale and first opens far
  // beyond it.
  auto w6 = asymptotic_compensator_window(1e6);
  CHECK(w6.hi < w6.lo);
  TamagawaContext empty(E, w6);
  CHECK(empty.prime_count() == 0);
  CHECK(empty.statistic(17) == 0.0);
  CHECK(empty.centering() == 0.0);

  auto w50 = asymptotic_compensator_window(1e50);
  TamagawaContext far(E, w50);
  REQUIRE(far.prime_count() == 8);  // primes in [115.1, 165.9]
  CHECK(far.statistic(17) < 0.0);
  CHECK(far.statistic(17) == Catch::Approx(-far.centering()).epsilon(1e-12));
  // 1905 = 3 * 5 * 127 has exactly one prime factor in the window.
  CHECK(far.statistic(1905) - far.statistic(17) == Catch::Approx(std::log(4.0)).epsilon(1e-12));

  // 11a: the cubic is rootless mod 3 and mod 5, so c = 1 and the compensator
  // is identically zero on a window holding only those primes.
  TamagawaContext silent(E11, {3.0, 6.0});
  CHECK(silent.prime_count() == 2);
  CHECK(silent.centering() == 0.0);
  CHECK(silent.statistic(35) == 0.0);

  CHECK_THROWS_AS(TamagawaContext(E, {3.0, 2e9}), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_compensator_window(10.0), std::invalid_argument);

  // Class-membership guard on the literal statistic.
  MomentLab& L = lab();
  CHECK(L.tamagawa_statistic(17, 1e6) == 0.0);
  CHECK_THROWS_AS(L.tamagawa_statistic(-17, 1e6), std::invalid_argument);
  CHECK_THROWS_AS(L.tamagawa_statistic(19, 1e6), std::invalid_argument);
  CHECK_THROWS_AS(L.tamagawa_statistic(0, 1e6), std::invalid_argument);
}

TEST_CASE("compensated moments are approximately Gaussian at desk scale") {
  MomentLab& L = lab();
  auto r0 = L.compensated_prime_moments(0, 3e4);
  CHECK(std::abs(r0.empirical - 1.0) < 1e-12);
  CHECK(r0.label.find("z=") != std::string::npos);
  CHECK(r0.label.find("window primes") != std::string::npos);

  // Deterministic sums; bounds sit several sampling sigmas out from the
  // measured values (0.002, 0.591, -0.013, 0.791).
  CHECK(std::abs(L.compensated_prime_moments(1, 3e4).empirical) < 0.08);
  auto r2 = L.compensated_prime_moments(2, 3e4);
  CHECK(r2.empirical > 0.45);
  CHECK(r2.empirical < 0.75);
  CHECK(r2.oracle == 1.0);
  CHECK(std::abs(L.compensated_prime_moments(3, 3e4).empirical) < 0.2);
  auto r4 = L.compensated_prime_moments(4, 3e4);
  CHECK(r4.empirical > 0.5);
  CHECK(r4.empirical < 1.1);
  CHECK(r4.oracle == 3.0);

  // The centered compensator alone has near-zero weighted mean.
  TamagawaContext C = L.compensator_context(3e4);
  CurveModel E = congruent_curve();
  TwistClass cls(E, +1, 17);
  double num = 0.0, den = 0.0;
  for (i64 d : enumerate_class(cls, 75000).collect()) {
    double w = L.cutoff()(static_cast<double>(detail::abs_i64(d)) / 3e4);
    if (w <= 0.0) continue;
    num += w * C.statistic(d);
    den += w;
  }
  CHECK(std::abs(num / den) < 0.15);

  CHECK_THROWS_AS(L.compensated_prime_moments(7, 3e4), std::invalid_argument);
  CHECK_THROWS_AS(L.compensated_prime_moments(2, 10.0), std::invalid_argument);
}

TEST_CASE("log-L distribution reports Gaussian-comparable tails") {
  MomentLab& L = lab();
  auto plain = L.logL_distribution(2000, false);
  CHECK(plain.label == "logL plain");
  REQUIRE(plain.V == std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
  REQUIRE(plain.tail_freq.size() == 5);
  CHECK(plain.sample_size == 49);
  CHECK(plain.vanishing == 12);
  CHECK(plain.gauss_tail[2] == 0.5);
  for (size_t i = 0; i + 1 < plain.tail_freq.size(); ++i)
    CHECK(plain.tail_freq[i] >= plain.tail_freq[i + 1]);
  for (double t : plain.tail_freq) {
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
  }
  CHECK(plain.tail_freq[2] > 0.2);
  CHECK(plain.tail_freq[2] < 0.85);

  // Independent recount of the vanishing central values.
  u64 zeros = 0;
  CurveModel E = congruent_curve();
  TwistClass cls(E, +1, 17);
  for (i64 d : enumerate_class(cls, 2000).collect()) {
    if (detail::abs_i64(d) < 3) continue;
    if (L.engine().central_value(d) < 1e-6) ++zeros;
  }
  CHECK(zeros == plain.vanishing);

  auto adj = L.logL_distribution(2000, true);
  CHECK(adj.label == "logL adjusted");
  CHECK(adj.sample_size == plain.sample_size);
  CHECK(adj.vanishing == plain.vanishing);
  for (size_t i = 0; i + 1 < adj.tail_freq.size(); ++i)
    CHECK(adj.tail_freq[i] >= adj.tail_freq[i + 1]);
  CHECK(adj.tail_freq[2] > 0.45);
  CHECK(adj.tail_freq[2] < 0.85);

  auto po = L.logL_distribution(4000, false, true);
  CHECK(po.label == "logL plain prime-only");
  CHECK(po.sample_size == 32);
  CHECK(po.vanishing == 3);
  for (size_t i = 0; i + 1 < po.tail_freq.size(); ++i)
    CHECK(po.tail_freq[i] >= po.tail_freq[i + 1]);

  CHECK_THROWS_AS(L.logL_distribution(10.0, false), std::invalid_argument);
}

TEST_CASE("power-moment ratios are stable across the X grid") {
  MomentLab& L = lab();
  CurveModel E = congruent_curve();
  TwistClass cls(E, +1, 17);
  std::vector<double> grid = {2000, 4000, 6400};

  // k = 0 counts the class exactly.
  auto zero = L.power_moment_ratio(0.0, grid);
  for (size_t i = 0; i < grid.size(); ++i) {
    double count = static_cast<double>(enumerate_class(cls, static_cast<u64>(grid[i])).collect().size());
    CHECK(zero[i] == count / grid[i]);
  }

  // Grid order must not matter.
  auto fwd = L.power_moment_ratio(0.5, grid);
  auto rev = L.power_moment_ratio(0.5, {6400, 4000, 2000});
  CHECK(fwd[0] == rev[2]);
  CHECK(fwd[1] == rev[1]);
  CHECK(fwd[2] == rev[0]);

  for (double k : {0.5, 1.0}) {
    auto out = L.power_moment_ratio(k, grid);
    double mn = *std::min_element(out.begin(), out.end());
    double mx = *std::max_element(out.begin(), out.end());
    CHECK(mn > 0.0);
    CHECK(mx / mn < 2.0);
  }

  CHECK_THROWS_AS(L.power_moment_ratio(1.5, grid), std::invalid_argument);
  CHECK_THROWS_AS(L.power_moment_ratio(-0.1, grid), std::invalid_argument);
  CHECK_THROWS_AS(L.power_moment_ratio(0.5, {}), std::invalid_argument);
  CHECK_THROWS_AS(L.power_moment_ratio(0.5, {10.0}), std::invalid_argument);
}
