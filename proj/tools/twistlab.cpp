// twistlab: quadratic twist central L-value experiments from the command line.
//
// Subcommands: coeffs, enumerate, lvalues, moments, dist,
//              verify {gauss|poisson|key-inequality|lemma1|afe|charsum}.
//
// A key=value config file (--config) mirrors every flag; command-line flags
// win. Reports are JSON on stdout (full-precision doubles, lossless round
// trip); CSV and console diagnostics print 12 significant digits. Identical
// config and seed give byte-identical output except for runtime_s.
//
// Exit codes: 0 ok, 1 a verify suite found violations (first 10 listed),
// 2 configuration errors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "twistlab/curve.hpp"
#include "twistlab/discriminants.hpp"
#include "twistlab/lvalue.hpp"
#include "twistlab/moments.hpp"
#include "twistlab/report.hpp"
#include "twistlab/verify.hpp"

namespace {

using namespace twistlab;

struct Cfg {
  std::vector<i64> curve = {0, -1, 0, 32, 1};  // a2 a1 a0 N eps
  std::vector<std::string> bad;                // p=A trace overrides
  std::vector<i64> cls;                        // kappa a; empty: first admissible
  std::string cache_dir;
  unsigned workers = 0;
  double c_trunc = 5.5;
  bool no_cache = false;
};

CurveModel make_curve(const Cfg& cfg) {
  if (cfg.curve.size() != 5)
    throw std::invalid_argument("--curve expects a2,a1,a0,N,eps");
  CurveModel E;
  E.a2 = cfg.curve[0];
  E.a1 = cfg.curve[1];
  E.a0 = cfg.curve[2];
  if (cfg.curve[3] <= 0) throw std::invalid_argument("conductor must be positive");
  E.conductor = static_cast<u64>(cfg.curve[3]);
  E.root_number = static_cast<int>(cfg.curve[4]);
  if (cfg.bad.empty()) {
    E.bad_prime_traces[2] = 0;  // additive reduction at 2, the common case here
  } else {
    for (const std::string& s : cfg.bad) {
      size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--bad-trace expects p=A, got: " + s);
      try {
        u64 p = std::stoull(s.substr(0, eq));
        i64 A = std::stoll(s.substr(eq + 1));
        E.bad_prime_traces[p] = A;
      } catch (const std::exception&) {
        throw std::invalid_argument("--bad-trace expects p=A, got: " + s);
      }
    }
  }
  E.validate();
  return E;
}

TwistClass make_class(const CurveModel& E, const Cfg& cfg) {
  if (!cfg.cls.empty()) {
    if (cfg.cls.size() != 2 || cfg.cls[1] <= 0)
      throw std::invalid_argument("--class expects kappa and a positive residue");
    return TwistClass(E, static_cast<int>(cfg.cls[0]), static_cast<u64>(cfg.cls[1]));
  }
  auto all = admissible_classes(E);
  if (all.empty()) throw std::invalid_argument("curve has no admissible twist class");
  return all.front();
}

CoefficientTable make_table(const CurveModel& E, const Cfg& cfg, u64 n_max) {
  BuildOptions opt{cfg.cache_dir, cfg.workers, !cfg.no_cache};
  return build_coefficient_table(E, std::max<u64>(n_max, 64), opt);
}

LValueOptions lvalue_options(const Cfg& cfg) {
  LValueOptions opt;
  opt.c_trunc = cfg.c_trunc;
  opt.cache_dir = cfg.cache_dir;
  opt.workers = cfg.workers;
  opt.use_cache = !cfg.no_cache;
  return opt;
}

// coefficients needed to evaluate L(1/2, E_d) for |d| <= dmax
u64 trunc_need(double c_trunc, double dmax, u64 N) {
  return static_cast<u64>(std::ceil(c_trunc * dmax * std::sqrt(static_cast<double>(N)))) + 2;
}

void write_or_print(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadratic twist central L-value experiments"};
  app.set_config("--config", "", "key=value experiment file");
  app.require_subcommand(1);

  Cfg cfg;
  app.add_option("--curve", cfg.curve,
                 "curve y^2 = x^3 + a2 x^2 + a1 x + a0 as: a2 a1 a0 N eps")
      ->expected(5);
  app.add_option("--bad-trace", cfg.bad, "bad-prime trace p=A (repeatable; default 2=0)");
  app.add_option("--class", cfg.cls, "twist class: kappa a (default first admissible)")
      ->expected(2);
  app.add_option("--cache-dir", cfg.cache_dir,
                 "cache directory (default TWISTLAB_CACHE_DIR or .twistlab-cache)");
  app.add_option("--workers", cfg.workers, "worker threads, 0 = hardware");
  app.add_option("--trunc", cfg.c_trunc, "series truncation constant");
  app.add_flag("--no-cache", cfg.no_cache, "skip disk caches");

  auto* sc_coeffs = app.add_subcommand("coeffs", "build or extend the coefficient table");
  sc_coeffs->fallthrough();
  u64 co_pmax = 100000;
  sc_coeffs->add_option("--pmax", co_pmax, "coefficients and primes up to this bound");

  auto* sc_enum = app.add_subcommand("enumerate", "list squarefree twists in a class");
  sc_enum->fallthrough();
  double en_X = 0.0;
  bool en_prime_only = false;
  bool en_list_classes = false;
  sc_enum->add_option("--X", en_X, "enumerate kappa d in (0, X]");
  sc_enum->add_flag("--prime-only", en_prime_only, "restrict to prime |d|");
  sc_enum->add_flag("--list-classes", en_list_classes, "print admissible classes instead");

  auto* sc_lv = app.add_subcommand("lvalues", "central values over a weighted class window");
  sc_lv->fallthrough();
  double lv_X = 0.0;
  std::string lv_out;
  sc_lv->add_option("--X", lv_X, "window scale: d runs over [X/2, 5X/2]")->required();
  sc_lv->add_option("--out", lv_out, "CSV path (default stdout)");

  auto* sc_mo = app.add_subcommand("moments", "family moment experiments");
  sc_mo->fallthrough();
  std::vector<double> mo_k = {1.0};
  double mo_X = 0.0;
  u64 mo_u = 1, mo_v = 1, mo_n = 1, mo_euler = 100000, mo_pmax = 0;
  double mo_zp = 0.0, mo_clo = 3.0, mo_chi = 0.0;
  std::vector<double> mo_grid;
  std::string mo_stat = "first", mo_out;
  sc_mo->add_option("--k", mo_k, "moment order(s)");
  sc_mo->add_option("--X", mo_X, "family scale")->required();
  sc_mo->add_option("--u", mo_u, "twisting integer for the first moment");
  sc_mo->add_option("--v", mo_v, "divisibility condition v | d");
  sc_mo->add_option("--n", mo_n, "character argument for --stat charsum");
  sc_mo->add_option("--stat", mo_stat, "first | charsum | prime | compensated | ratio")
      ->check(CLI::IsMember({"first", "charsum", "prime", "compensated", "ratio"}));
  sc_mo->add_option("--grid", mo_grid, "X grid for --stat ratio (default: just X)");
  sc_mo->add_option("--zp", mo_zp, "prime cutoff for P(d), 0 = X^(2/3)");
  sc_mo->add_option("--comp-lo", mo_clo, "compensator window lower end");
  sc_mo->add_option("--comp-hi", mo_chi, "compensator window upper end, 0 = X^(3/4)");
  sc_mo->add_option("--euler-cutoff", mo_euler, "Euler product truncation");
  sc_mo->add_option("--pmax", mo_pmax, "coefficient table floor (0 = auto)");
  sc_mo->add_option("--out", mo_out, "also write the JSON report here");

  auto* sc_di = app.add_subcommand("dist", "log-L distribution against the Gaussian tail");
  sc_di->fallthrough();
  double di_X = 0.0;
  bool di_adjust = false, di_prime_only = false;
  std::string di_out;
  sc_di->add_option("--X", di_X, "family scale")->required();
  sc_di->add_flag("--adjust", di_adjust, "recenter by the Tamagawa compensator");
  sc_di->add_flag("--prime-only", di_prime_only, "restrict to prime |d|");
  sc_di->add_option("--out", di_out, "also write the threshold grid as CSV here");

  auto* sc_ve = app.add_subcommand("verify", "self-check suites");
  sc_ve->fallthrough();
  sc_ve->require_subcommand(1);
  auto* ve_ga = sc_ve->add_subcommand("gauss", "closed-form Gauss sums vs brute force");
  ve_ga->fallthrough();
  u64 ga_nmax = 3000, ga_mult = 200;
  i64 ga_kmax = 60;
  ve_ga->add_option("--nmax", ga_nmax, "odd moduli up to this bound");
  ve_ga->add_option("--kmax", ga_kmax, "shifts |k| up to this bound");
  ve_ga->add_option("--mult-max", ga_mult, "coprime pair bound for multiplicativity");
  auto* ve_po = sc_ve->add_subcommand("poisson", "Poisson identity residual decay");
  ve_po->fallthrough();
  u32 po_trials = 100;
  u64 po_seed = 1;
  ve_po->add_option("--trials", po_trials, "random configurations");
  ve_po->add_option("--seed", po_seed, "RNG seed");
  auto* ve_ki = sc_ve->add_subcommand("key-inequality", "mollifier key inequality grid");
  ve_ki->fallthrough();
  u32 ki_trials = 10000;
  u64 ki_seed = 1;
  ve_ki->add_option("--trials", ki_trials, "random instances");
  ve_ki->add_option("--seed", ki_seed, "RNG seed");
  auto* ve_le = sc_ve->add_subcommand("lemma1", "truncated exponential inequality suite");
  ve_le->fallthrough();
  u32 le_trials = 10000;
  u64 le_seed = 1;
  ve_le->add_option("--trials", le_trials, "random evaluation points");
  ve_le->add_option("--seed", le_seed, "RNG seed");
  auto* ve_af = sc_ve->add_subcommand("afe", "central-value truncation self-consistency");
  ve_af->fallthrough();
  u32 af_samples = 100;
  u64 af_dmax = 10000;
  ve_af->add_option("--samples", af_samples, "discriminants to sample");
  ve_af->add_option("--dmax", af_dmax, "sample |d| up to this bound");
  auto* ve_ch = sc_ve->add_subcommand("charsum", "character-sum averages vs main term");
  ve_ch->fallthrough();
  double ch_X = 1e6;
  ve_ch->add_option("--X", ch_X, "family scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CurveModel E = make_curve(cfg);

    if (app.got_subcommand(sc_coeffs)) {
      auto T = make_table(E, cfg, co_pmax);
      SplittingClass sp = classify_splitting_field(E);
      nlohmann::json j{{"n_max", T.n_max},
                       {"primes", T.primes.size()},
                       {"conductor", E.conductor},
                       {"splitting_degree", sp.degree},
                       {"mu", sp.mu},
                       {"sigma_sq", sp.sigma_sq}};
      std::printf("%s\n", j.dump(2).c_str());
      return 0;
    }

    if (app.got_subcommand(sc_enum)) {
      if (en_list_classes) {
        for (const TwistClass& c : admissible_classes(E))
          std::printf("kappa=%+d a=%llu\n", c.kappa, static_cast<unsigned long long>(c.a));
        return 0;
      }
      if (!(en_X >= 1.0)) throw std::invalid_argument("enumerate needs --X >= 1");
      TwistClass cls = make_class(E, cfg);
      enumerate_class(cls, static_cast<u64>(en_X), en_prime_only).for_each([](i64 d) {
        std::printf("%lld\n", static_cast<long long>(d));
      });
      return 0;
    }

    if (app.got_subcommand(sc_lv)) {
      u64 X = static_cast<u64>(std::llround(lv_X));
      TwistClass cls = make_class(E, cfg);
      auto T = make_table(E, cfg, trunc_need(cfg.c_trunc, 2.5 * static_cast<double>(X),
                                             E.conductor));
      LValueEngine engine(E, T, cls, lvalue_options(cfg));
      auto entries = batch_central_values(engine, X, SmoothCutoff{});
      write_or_print(lvalues_csv(engine, entries), lv_out);
      return 0;
    }

    if (app.got_subcommand(sc_mo)) {
      MomentOptions mopt;
      mopt.z_P = mo_zp;
      mopt.comp_lo = mo_clo;
      mopt.comp_hi = mo_chi;
      mopt.euler_cutoff = mo_euler;
      mopt.workers = static_cast<int>(cfg.workers);
      mopt.lvalue = lvalue_options(cfg);

      double Xmax = mo_X;
      std::vector<double> grid = mo_grid.empty() ? std::vector<double>{mo_X} : mo_grid;
      if (mo_stat == "ratio")
        Xmax = *std::max_element(grid.begin(), grid.end());
      u64 need = 64;
      if (mo_stat == "first")
        need = std::max({mo_euler, trunc_need(cfg.c_trunc, 2.5 * mo_X, E.conductor), mo_u});
      else if (mo_stat == "ratio")
        need = trunc_need(cfg.c_trunc, Xmax, E.conductor);
      else if (mo_stat == "prime")
        need = static_cast<u64>(std::ceil(mo_zp > 0 ? mo_zp : std::pow(mo_X, 2.0 / 3.0)));
      else if (mo_stat == "compensated")
        need = static_cast<u64>(std::ceil(std::max(
            std::pow(mo_X, 2.0 / 3.0), mo_chi > 0 ? mo_chi : std::pow(mo_X, 0.75))));
      need = std::max(need, mo_pmax);
      // Euler oracles only back the first moment; elsewhere clamp the cutoff
      // to the table so small experiments skip the big prime build.
      if (mo_stat != "first") mopt.euler_cutoff = std::min<u64>(mopt.euler_cutoff, std::max<u64>(need, 64));

      auto T = make_table(E, cfg, need);
      TwistClass cls = make_class(E, cfg);
      MomentLab lab(E, T, cls, mopt);

      nlohmann::json out = nlohmann::json::array();
      if (mo_stat == "charsum") {
        out.push_back(to_json(lab.charsum_average(mo_n, mo_v, mo_X)));
      } else if (mo_stat == "ratio") {
        for (double k : mo_k) {
          auto ratios = lab.power_moment_ratio(k, grid);
          nlohmann::json j{{"label", "power_moment_ratio k=" + format_sig(k)},
                           {"k", k},
                           {"X_grid", grid},
                           {"ratio", ratios}};
          double lo = *std::min_element(ratios.begin(), ratios.end());
          double hi = *std::max_element(ratios.begin(), ratios.end());
          j["max_over_min"] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::quiet_NaN();
          out.push_back(j);
        }
      } else {
        for (double k : mo_k) {
          if (mo_stat == "first") {
            if (k != 1.0)
              throw std::invalid_argument("the first-moment statistic is k=1 only");
            out.push_back(to_json(lab.first_moment(mo_u, mo_v, mo_X)));
          } else {
            int ki = static_cast<int>(std::llround(k));
            if (static_cast<double>(ki) != k)
              throw std::invalid_argument("prime-sum moments need integer k");
            if (mo_stat == "prime")
              out.push_back(to_json(lab.prime_sum_moments(ki, mo_X, mo_v)));
            else
              out.push_back(to_json(lab.compensated_prime_moments(ki, mo_X)));
          }
        }
      }
      std::string text = (out.size() == 1 ? out[0] : out).dump(2) + "\n";
      std::fputs(text.c_str(), stdout);
      if (!mo_out.empty()) write_or_print(text, mo_out);
      return 0;
    }

    if (app.got_subcommand(sc_di)) {
      MomentOptions mopt;
      mopt.workers = static_cast<int>(cfg.workers);
      mopt.lvalue = lvalue_options(cfg);
      u64 need = trunc_need(cfg.c_trunc, di_X, E.conductor);
      mopt.euler_cutoff = std::min<u64>(mopt.euler_cutoff, std::max<u64>(need, 64));
      auto T = make_table(E, cfg, need);
      TwistClass cls = make_class(E, cfg);
      MomentLab lab(E, T, cls, mopt);
      DistributionReport rep = lab.logL_distribution(di_X, di_adjust, di_prime_only);
      std::string text = to_json(rep).dump(2) + "\n";
      std::fputs(text.c_str(), stdout);
      if (!di_out.empty()) write_or_print(distribution_csv(rep), di_out);
      return 0;
    }

    // verify suites
    VerifyResult R;
    if (sc_ve->got_subcommand(ve_ga)) {
      R = verify_gauss(ga_nmax, ga_kmax, ga_mult);
    } else if (sc_ve->got_subcommand(ve_po)) {
      R = verify_poisson(po_trials, po_seed);
    } else if (sc_ve->got_subcommand(ve_ki)) {
      R = verify_key_inequality(ki_trials, ki_seed);
    } else if (sc_ve->got_subcommand(ve_le)) {
      R = verify_lemma1(le_trials, le_seed);
    } else if (sc_ve->got_subcommand(ve_af)) {
      TwistClass cls = make_class(E, cfg);
      auto T = make_table(E, cfg, trunc_need(2.0 * cfg.c_trunc,
                                             static_cast<double>(af_dmax), E.conductor));
      R = verify_afe(E, T, cls, af_samples, af_dmax, lvalue_options(cfg));
    } else {
      TwistClass cls = make_class(E, cfg);
      MomentOptions mopt;
      mopt.euler_cutoff = 64;  // charsum never touches the Euler oracles
      mopt.workers = static_cast<int>(cfg.workers);
      mopt.lvalue = lvalue_options(cfg);
      auto T = make_table(E, cfg, 64);
      MomentLab lab(E, T, cls, mopt);
      R = verify_charsum(lab, ch_X);
    }
    print_result(R);
    return R.pass() ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
