#pragma once
// Adaptive Gauss-Kronrod (G7,K15) integration and a bisection root finder.
// Used for prior normalization checks, tail masses, and quantiles.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace agmrf {

namespace detail {
// QUADPACK G7/K15 nodes and weights on [-1,1] (abscissae by absolute value).
inline constexpr double kGkX[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGkWK[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGkWG[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline void gk15(const std::function<double(double)>& f, double a, double b, double& value,
                 double& err) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double resk = kGkWK[7] * fc;
  double resg = kGkWG[3] * fc;
  for (int j = 0; j < 7; ++j) {
    double x = h * kGkX[j];
    double fsum = f(c - x) + f(c + x);
    resk += kGkWK[j] * fsum;
    if (j % 2 == 1) resg += kGkWG[j / 2] * fsum;
  }
  value = resk * h;
  err = std::abs((resk - resg) * h);
}

inline double integrate_rec(const std::function<double(double)>& f, double a, double b,
                            double tol, int depth) {
  double v, e;
  gk15(f, a, b, v, e);
  if (e <= tol || depth >= 48) return v;
  double m = 0.5 * (a + b);
  return integrate_rec(f, a, m, 0.5 * tol, depth + 1) +
         integrate_rec(f, m, b, 0.5 * tol, depth + 1);
}
}  // namespace detail

// Adaptive integration of f over [a, b] with absolute tolerance per panel.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-8) {
  if (!(b >= a)) throw std::invalid_argument("integrate: bad interval");
  if (a == b) return 0.0;
  return detail::integrate_rec(f, a, b, abs_tol, 0);
}

// Root of g on [lo, hi] assuming g(lo) and g(hi) bracket zero; bisection,
// deterministic, ~1e-12 interval tolerance.
inline double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo), ghi = g(hi);
  if (glo == 0) return lo;
  if (ghi == 0) return hi;
  if ((glo > 0) == (ghi > 0)) throw std::runtime_error("bisect: root not bracketed");
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = g(mid);
    if (gm == 0) return mid;
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace agmrf
