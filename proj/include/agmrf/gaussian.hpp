#pragma once
// Exact conditional inference for a Gaussian linear model with known
// observation variances and hard linear constraints:
//   z ~ N(0, Q^-) (possibly improper), y | z ~ N(Az, diag(V)), Cz = 0.
// The unconstrained posterior precision P = Q + A'V^-1 A is factorized once;
// constraints are imposed by conditioning-by-kriging (mean/covariance
// corrected through W = P^-1 C' and Sc = C P^-1 C'). The marginal likelihood
// of y under the constrained model uses the subspace identity
//   log|B'PB| = log|P| + log|Sc| - log|CC'|   (B an orthonormal basis of ker C)
// so the kriging byproducts supply the constraint correction exactly; the
// prior-side projected determinant log|B'QB| is supplied by the caller (it is
// where generalized determinants of intrinsic blocks enter).

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>

#include "agmrf/rng.hpp"
#include "agmrf/structure.hpp"

namespace agmrf {

struct GaussianModel {
  SpMat Q;                      // prior precision (dim x dim)
  double log_gdet_prior = 0.0;  // log|B'QB|; plain log|Q| when no constraints
  SpMat A;                      // design (n_obs x dim)
  Vec y, V;                     // observations and their known variances
  Mat C;                        // constraints (k x dim), Cz = 0; k may be 0
};

struct GaussianConditional {
  int dim = 0, k = 0;
  Vec mean;  // constrained posterior mean
  Eigen::LLT<Mat> P_llt;
  Mat W;                   // P^-1 C'
  Eigen::LLT<Mat> Sc_llt;  // of Sc = C P^-1 C'
  Mat C;
  double log_evidence = 0.0;

  // Constrained posterior variance of the linear functional a'z.
  double var(const Vec& a) const {
    double v = a.dot(P_llt.solve(a));
    if (k > 0) {
      Vec u = W.transpose() * a;
      v -= u.dot(Sc_llt.solve(u));
    }
    return v;
  }

  // Constrained posterior covariance of a'z with every coordinate.
  Vec cov_with_all(const Vec& a) const {
    Vec col = P_llt.solve(a);
    if (k > 0) col -= W * Sc_llt.solve(W.transpose() * a);
    return col;
  }

  // Exact draw from the constrained posterior.
  Vec sample(Philox& rng) const {
    Vec eps(dim);
    for (int i = 0; i < dim; ++i) eps[i] = rng.next_normal();
    Vec t = P_llt.matrixU().solve(eps);  // N(0, P^-1)
    if (k > 0) t -= W * Sc_llt.solve(C * t);
    return mean + t;
  }
};

namespace detail {
inline double llt_logdet(const Eigen::LLT<Mat>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}
}  // namespace detail

inline GaussianConditional gaussian_conditional(const GaussianModel& m) {
  const int dim = static_cast<int>(m.Q.rows());
  const int n = static_cast<int>(m.y.size());
  if (m.A.rows() != n || m.V.size() != n || m.A.cols() != dim)
    throw std::invalid_argument("gaussian_conditional: dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (!(m.V[i] > 0)) throw std::invalid_argument("observation variances must be positive");

  GaussianConditional g;
  g.dim = dim;
  g.k = static_cast<int>(m.C.rows());

  Vec vinv = m.V.cwiseInverse();
  Mat P = Mat(m.Q) + Mat(m.A.transpose() * vinv.asDiagonal() * m.A);
  g.P_llt.compute(P);
  if (g.P_llt.info() != Eigen::Success)
    throw std::runtime_error("posterior precision is not positive definite");

  Vec bvec = m.A.transpose() * vinv.cwiseProduct(m.y);
  Vec mu = g.P_llt.solve(bvec);

  double logdet_proj = detail::llt_logdet(g.P_llt);
  if (g.k > 0) {
    g.C = m.C;
    g.W = g.P_llt.solve(m.C.transpose());
    Mat sc = m.C * g.W;
    g.Sc_llt.compute(sc);
    if (g.Sc_llt.info() != Eigen::Success)
      throw std::runtime_error("constraint rank deficiency");
    g.mean = mu - g.W * g.Sc_llt.solve(m.C * mu);
    Eigen::LLT<Mat> cc_llt(Mat(m.C * m.C.transpose()));
    if (cc_llt.info() != Eigen::Success) throw std::runtime_error("constraint rank deficiency");
    logdet_proj += detail::llt_logdet(g.Sc_llt) - detail::llt_logdet(cc_llt);
  } else {
    g.mean = mu;
  }

  double quad = m.y.dot(vinv.cwiseProduct(m.y)) - g.mean.dot(bvec);
  g.log_evidence = -0.5 * (n * std::log(2.0 * M_PI) + m.V.array().log().sum()) +
                   0.5 * m.log_gdet_prior - 0.5 * logdet_proj - 0.5 * quad;
  return g;
}

// Reference computation of log|B'QB| with B an orthonormal basis of ker C,
// via a dense QR of C'. Used to validate the closed-form projected
// determinants assembled by the latent model (and their removal-row
// invariance); O(dim^3), test-sized inputs only.
inline double log_gdet_projected(const Mat& q, const Mat& c) {
  const int d = static_cast<int>(q.rows());
  const int k = static_cast<int>(c.rows());
  Mat reduced;
  if (k == 0) {
    reduced = q;
  } else {
    Eigen::HouseholderQR<Mat> qr(Mat(c.transpose()));
    Mat full = qr.householderQ();
    Mat b = full.rightCols(d - k);
    reduced = b.transpose() * q * b;
  }
  Eigen::LLT<Mat> llt(reduced);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("projected prior is not positive definite");
  return detail::llt_logdet(llt);
}

}  // namespace agmrf
