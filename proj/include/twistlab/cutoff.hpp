#pragma once

// The smooth weight Phi: a C-infinity bump supported on [1/2, 5/2], equal to 1
// on [1, 2], built from the exp(-1/t) smoothstep. Every family sum is weighted
// by Phi(kappa*d/X), and main-term formulas go through the transform
// Phicheck(s) = integral of Phi(x) x^s dx, which is entire in s.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace twistlab {

struct SmoothCutoff {
  double shape = 1.0;  // alpha in g(t) = exp(-alpha/t); steepness of the seams

  // smoothstep: 0 for t <= 0, 1 for t >= 1, with all derivatives vanishing at
  // both ends; S(t) + S(1-t) = 1 by construction
  double step(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double g0 = std::exp(-shape / t);
    double g1 = std::exp(-shape / (1.0 - t));
    return g0 / (g0 + g1);
  }

  double operator()(double x) const {
    if (x <= 0.5 || x >= 2.5) return 0.0;
    if (x < 1.0) return step(2.0 * (x - 0.5));
    if (x <= 2.0) return 1.0;
    return step(2.0 * (2.5 - x));
  }

  // Phicheck(s) = plateau part (exact antiderivative) + the two seam
  // integrals by adaptive Simpson to ~1e-12 per seam.
  std::complex<double> mellin(std::complex<double> s) const {
    std::complex<double> plateau;
    if (std::abs(s + 1.0) < 1e-12) {
      plateau = std::log(2.0);
    } else {
      plateau = (std::pow(2.0, s + 1.0) - 1.0) / (s + 1.0);
    }
    auto f = [&](double x) -> std::complex<double> {
      return (*this)(x)*std::pow(std::complex<double>(x, 0.0), s);
    };
    return adaptive_simpson(f, 0.5, 1.0, 1e-12) + plateau +
           adaptive_simpson(f, 2.0, 2.5, 1e-12);
  }

  double mellin_real(double s) const { return mellin(std::complex<double>(s, 0.0)).real(); }

 private:
  template <class F>
  static std::complex<double> simpson(F&& f, double a, double b, std::complex<double> fa,
                                      std::complex<double> fm, std::complex<double> fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }

  template <class F>
  static std::complex<double> adapt(F&& f, double a, double b, std::complex<double> fa,
                                    std::complex<double> fm, std::complex<double> fb,
                                    std::complex<double> whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    std::complex<double> flm = f(0.5 * (a + m));
    std::complex<double> frm = f(0.5 * (m + b));
    std::complex<double> left = simpson(f, a, m, fa, flm, fm);
    std::complex<double> right = simpson(f, m, b, fm, frm, fb);
    std::complex<double> delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
  }

  template <class F>
  static std::complex<double> adaptive_simpson(F&& f, double a, double b, double tol) {
    std::complex<double> fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    std::complex<double> whole = simpson(f, a, b, fa, fm, fb);
    return adapt(f, a, b, fa, fm, fb, whole, tol, 40);
  }
};

}  // namespace twistlab
