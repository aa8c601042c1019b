#pragma once
// Penalized-complexity priors for the model's hyperparameters, in the
// analytical forms the Gaussian structure allows:
//  - precisions (tau_b, tau_nu, psi ratios): type-2 Gumbel with
//    p(tau) = lambda/2 tau^(-3/2) exp(-lambda tau^(-1/2)), from the statement
//    P(1/sqrt(tau) > u) = alpha;
//  - mixing proportion phi: exponential on the KL distance from the
//    no-structure base, with d(phi) built from the inverted nonzero
//    eigenvalues gamma_tilde of the scaled structure matrix (zero eigenvalues
//    enter with gamma_tilde = 0, i.e. an n-term sum);
//  - precision ratio theta in (0,1]: exponential on the KL distance from the
//    non-adaptive base theta = 1, with d(theta) built from the generalized
//    eigenvalues eps of the deleted pencil (R1*+R2*)^-1 R2*.
// Distances are evaluated termwise as x - log1p(x) style expressions, which
// are nonnegative per term, so endpoint cancellation never occurs.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "agmrf/quadrature.hpp"
#include "agmrf/structure.hpp"

namespace agmrf {

// ---------------------------------------------------------------- precisions

struct PcPrecisionPrior {
  double lambda = 0.0;
  double u = 1.0, alpha = 0.01;  // the defining statement P(1/sqrt(tau) > u) = alpha
};

inline PcPrecisionPrior pc_precision_calibrate(double u, double alpha) {
  if (!(u > 0) || !(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("precision prior needs u > 0 and alpha in (0,1)");
  return {-std::log(alpha) / u, u, alpha};
}

inline double pc_precision_logpdf(const PcPrecisionPrior& p, double tau) {
  if (!(tau > 0)) return -std::numeric_limits<double>::infinity();
  return std::log(0.5 * p.lambda) - 1.5 * std::log(tau) - p.lambda / std::sqrt(tau);
}

inline double pc_precision_pdf(const PcPrecisionPrior& p, double tau) {
  return std::exp(pc_precision_logpdf(p, tau));
}

// P(T <= t): the standard deviation 1/sqrt(T) is Exp(lambda).
inline double pc_precision_cdf(const PcPrecisionPrior& p, double tau) {
  if (!(tau > 0)) return 0.0;
  return std::exp(-p.lambda / std::sqrt(tau));
}

inline double pc_precision_quantile(const PcPrecisionPrior& p, double prob) {
  if (!(prob > 0) || !(prob < 1)) throw std::invalid_argument("quantile level in (0,1)");
  double s = p.lambda / (-std::log(prob));
  return s * s;
}

inline double pc_precision_mass(const PcPrecisionPrior& p, double lo, double hi) {
  return pc_precision_cdf(p, hi) - pc_precision_cdf(p, lo);
}

// ------------------------------------------------------------------ helpers

namespace detail {
// x - log1p(x), nonnegative for x > -1, series for small |x|.
inline double x_minus_log1p(double x) {
  if (std::abs(x) < 1e-4) return x * x * (0.5 - x / 3.0 + x * x * 0.25);
  return x - std::log1p(x);
}
// log1p(x) - x/(1+x), nonnegative for x > -1, series for small |x|.
inline double log1p_minus_ratio(double x) {
  if (std::abs(x) < 1e-4) return x * x * (0.5 - 2.0 * x / 3.0 + 0.75 * x * x);
  return std::log1p(x) - x / (1.0 + x);
}
}  // namespace detail

inline Mat delete_rowcol(const Mat& m, int r) {
  int n = static_cast<int>(m.rows());
  if (r < 0 || r >= n) throw std::invalid_argument("removed index out of range");
  Mat out(n - 1, n - 1);
  for (int i = 0, ii = 0; i < n; ++i) {
    if (i == r) continue;
    for (int j = 0, jj = 0; j < n; ++j) {
      if (j == r) continue;
      out(ii, jj++) = m(i, j);
    }
    ++ii;
  }
  return out;
}

// -------------------------------------------------------------------- phi

// Eigenvalues gamma of the scaled structure matrix, inverted where positive
// (relative tolerance 1e-8), zeros kept as gamma_tilde = 0.
inline Vec bym2_gamma_tilde(const SpMat& q_star) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(q_star), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Vec g = es.eigenvalues();
  double tol = 1e-8 * g.cwiseAbs().maxCoeff();
  Vec gt(g.size());
  for (int i = 0; i < g.size(); ++i) gt[i] = g[i] > tol ? 1.0 / g[i] : 0.0;
  return gt;
}

// d(phi) = sqrt( phi * sum(gt_i - 1) - sum log(1 + phi*(gt_i - 1)) ),
// accumulated termwise as x - log1p(x) with x = phi*(gt_i - 1).
inline double d_phi(double phi, const Vec& gamma_tilde) {
  if (!(phi >= 0) || !(phi < 1)) throw std::invalid_argument("phi in [0,1)");
  double s = 0.0;
  for (int i = 0; i < gamma_tilde.size(); ++i)
    s += detail::x_minus_log1p(phi * (gamma_tilde[i] - 1.0));
  return std::sqrt(s);
}

// |d d(phi)/d phi| = phi/(2 d) * sum (gt_i-1)^2 / (1 + phi*(gt_i-1)), with the
// phi -> 0 limit sqrt(sum (gt_i-1)^2 / 2).
inline double d_phi_jacobian(double phi, const Vec& gamma_tilde) {
  double d = d_phi(phi, gamma_tilde);
  double b2 = (gamma_tilde.array() - 1.0).square().sum();
  if (d < 1e-10) return std::sqrt(0.5 * b2);
  double a = 0.0;
  for (int i = 0; i < gamma_tilde.size(); ++i) {
    double g1 = gamma_tilde[i] - 1.0;
    a += g1 * g1 / (1.0 + phi * g1);
  }
  return 0.5 * phi * a / d;
}

struct PcPhiPrior {
  double lambda = 0.0;
  double u = 0.5, alpha = 2.0 / 3.0;  // defining statement P(phi < u) = alpha
  Vec gamma_tilde;
};

inline PcPhiPrior pc_phi_calibrate(const Vec& gamma_tilde, double u, double alpha) {
  if (!(u > 0) || !(u < 1) || !(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("phi prior needs u, alpha in (0,1)");
  double du = d_phi(u, gamma_tilde);
  if (!(du > 0))
    throw std::invalid_argument("phi prior degenerate: d(u) = 0 (structure eigenvalues all 1?)");
  PcPhiPrior p;
  p.lambda = -std::log1p(-alpha) / du;  // P(phi<u) = 1 - exp(-lambda d(u)) = alpha
  p.u = u;
  p.alpha = alpha;
  p.gamma_tilde = gamma_tilde;
  return p;
}

inline double pc_phi_pdf(const PcPhiPrior& p, double phi) {
  if (!(phi >= 0) || !(phi < 1)) return 0.0;
  double d = d_phi(phi, p.gamma_tilde);
  return p.lambda * std::exp(-p.lambda * d) * d_phi_jacobian(phi, p.gamma_tilde);
}

inline double pc_phi_logpdf(const PcPhiPrior& p, double phi) {
  if (!(phi >= 0) || !(phi < 1)) return -std::numeric_limits<double>::infinity();
  double d = d_phi(phi, p.gamma_tilde);
  return std::log(p.lambda) - p.lambda * d + std::log(d_phi_jacobian(phi, p.gamma_tilde));
}

inline double pc_phi_cdf(const PcPhiPrior& p, double phi) {
  return -std::expm1(-p.lambda * d_phi(phi, p.gamma_tilde));
}

inline double pc_phi_mass(const PcPhiPrior& p, double lo, double hi) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0 - 1e-12);
  if (hi <= lo) return 0.0;
  return integrate([&](double x) { return pc_phi_pdf(p, x); }, lo, hi, 1e-8);
}

inline double pc_phi_quantile(const PcPhiPrior& p, double prob) {
  if (!(prob > 0) || !(prob < 1)) throw std::invalid_argument("quantile level in (0,1)");
  return bisect([&](double x) { return pc_phi_cdf(p, x) - prob; }, 1e-12, 1.0 - 1e-12);
}

// -------------------------------------------------------------------- theta

// Generalized eigenvalues eps of (R1* + R2*)^-1 R2* with row/column `removed`
// deleted from both scaled parts; ascending, clamped to [0,1] after a
// tolerance check. Invariant to the removed index.
inline Vec theta_eigenvalues(const SpMat& r1_scaled, const SpMat& r2_scaled, int removed = 0) {
  Mat a = delete_rowcol(Mat(r2_scaled), removed);
  Mat b = delete_rowcol(Mat(r1_scaled), removed) + a;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(a, b, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("generalized eigenproblem failed (disconnected graph?)");
  Vec eps = es.eigenvalues();
  for (int i = 0; i < eps.size(); ++i) {
    if (eps[i] < -1e-8 || eps[i] > 1.0 + 1e-8)
      throw std::runtime_error("pencil eigenvalue outside [0,1]: " + std::to_string(eps[i]));
    eps[i] = std::min(1.0, std::max(0.0, eps[i]));
  }
  return eps;
}

// d(theta)^2 = sum 1/(1+(theta-1)eps) - (n-1) + sum log(1+(theta-1)eps),
// accumulated termwise as log1p(x) - x/(1+x) with x = (theta-1)eps.
inline double d_theta(double theta, const Vec& eps) {
  if (!(theta > 0) || !(theta <= 1)) throw std::invalid_argument("theta in (0,1]");
  double s = 0.0;
  for (int i = 0; i < eps.size(); ++i)
    s += detail::log1p_minus_ratio((theta - 1.0) * eps[i]);
  return std::sqrt(s);
}

// |d d(theta)/d theta| = (1-theta)/(2 d) * sum eps^2/(1+(theta-1)eps)^2, with
// the theta -> 1 limit sqrt(sum eps^2 / 2).
inline double d_theta_jacobian(double theta, const Vec& eps) {
  double d = d_theta(theta, eps);
  double e2 = eps.array().square().sum();
  if (d < 1e-10) return std::sqrt(0.5 * e2);
  double a = 0.0;
  for (int i = 0; i < eps.size(); ++i) {
    double q = 1.0 + (theta - 1.0) * eps[i];
    a += eps[i] * eps[i] / (q * q);
  }
  return 0.5 * (1.0 - theta) * a / d;
}

struct PcThetaPrior {
  double lambda = 0.0;
  double u = 0.75, alpha = 0.75;  // defining statement P(theta < u) = alpha
  Vec eps;
};

inline PcThetaPrior pc_theta_calibrate(const Vec& eps, double u, double alpha) {
  if (!(u > 0) || !(u < 1) || !(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("theta prior needs u, alpha in (0,1)");
  double du = d_theta(u, eps);
  if (!(du > 0))
    throw std::invalid_argument("theta prior degenerate: d(u) = 0 (no shock-class edges?)");
  PcThetaPrior p;
  p.lambda = -std::log(alpha) / du;  // P(theta<u) = exp(-lambda d(u)) = alpha
  p.u = u;
  p.alpha = alpha;
  p.eps = eps;
  return p;
}

inline double pc_theta_pdf(const PcThetaPrior& p, double theta) {
  if (!(theta > 0) || !(theta <= 1)) return 0.0;
  double d = d_theta(theta, p.eps);
  return p.lambda * std::exp(-p.lambda * d) * d_theta_jacobian(theta, p.eps);
}

inline double pc_theta_logpdf(const PcThetaPrior& p, double theta) {
  if (!(theta > 0) || !(theta <= 1)) return -std::numeric_limits<double>::infinity();
  double d = d_theta(theta, p.eps);
  return std::log(p.lambda) - p.lambda * d + std::log(d_theta_jacobian(theta, p.eps));
}

// P(Theta <= t) = P(d(Theta) >= d(t)) since d decreases toward the base t=1.
inline double pc_theta_cdf(const PcThetaPrior& p, double theta) {
  return std::exp(-p.lambda * d_theta(theta, p.eps));
}

inline double pc_theta_mass(const PcThetaPrior& p, double lo, double hi) {
  lo = std::max(lo, 1e-12);
  hi = std::min(hi, 1.0);
  if (hi <= lo) return 0.0;
  return integrate([&](double x) { return pc_theta_pdf(p, x); }, lo, hi, 1e-8);
}

inline double pc_theta_quantile(const PcThetaPrior& p, double prob) {
  if (!(prob > 0) || !(prob < 1)) throw std::invalid_argument("quantile level in (0,1)");
  return bisect([&](double x) { return pc_theta_cdf(p, x) - prob; }, 1e-12, 1.0 - 1e-12);
}

}  // namespace agmrf
