// Exact constrained Gaussian conditioning: conjugate closed forms,
// permutation invariance, kriging vs pseudo-observation constraints,
// posterior covariances against dense formulas, and the constrained
// marginal likelihood against an explicit null-space-basis computation.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "agmrf/gaussian.hpp"
#include "agmrf/rng.hpp"
#include "agmrf/structure.hpp"

using namespace agmrf;

namespace {

SpMat to_sparse(const Mat& m) {
  return m.sparseView(1.0, 1e-300);
}

Mat random_mat(int r, int c, Philox& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.next_normal();
  return m;
}

// A proper random model: SPD prior, dense-ish design, optional constraints.
GaussianModel random_model(int dim, int n_obs, int k, Philox& rng) {
  Mat m = random_mat(dim, dim, rng);
  Mat q = m * m.transpose() + Mat::Identity(dim, dim);
  GaussianModel gm;
  gm.Q = to_sparse(q);
  gm.A = to_sparse(random_mat(n_obs, dim, rng));
  gm.y = random_mat(n_obs, 1, rng).col(0);
  gm.V = Vec::Constant(n_obs, 0.5).array() + 1.5 * random_mat(n_obs, 1, rng).col(0).array().abs();
  if (k > 0) gm.C = random_mat(k, dim, rng);
  gm.log_gdet_prior = log_gdet_projected(q, k > 0 ? gm.C : Mat(0, dim));
  return gm;
}

// Marginal likelihood computed the slow way: reparametrize z = B u with B an
// orthonormal basis of ker C, integrate the proper Gaussian in u.
double evidence_by_basis(const GaussianModel& m) {
  const int dim = static_cast<int>(m.Q.rows());
  const int k = static_cast<int>(m.C.rows());
  Mat b;
  if (k == 0) {
    b = Mat::Identity(dim, dim);
  } else {
    Eigen::HouseholderQR<Mat> qr(Mat(m.C.transpose()));
    b = Mat(qr.householderQ()).rightCols(dim - k);
  }
  Mat qb = b.transpose() * Mat(m.Q) * b;
  Mat ab = Mat(m.A) * b;
  Vec vinv = m.V.cwiseInverse();
  Mat pb = qb + ab.transpose() * vinv.asDiagonal() * ab;
  Vec bb = ab.transpose() * vinv.cwiseProduct(m.y);
  Eigen::LLT<Mat> qb_llt(qb), pb_llt(pb);
  REQUIRE(qb_llt.info() == Eigen::Success);
  REQUIRE(pb_llt.info() == Eigen::Success);
  double logdet_qb = 2.0 * Mat(qb_llt.matrixL()).diagonal().array().log().sum();
  double logdet_pb = 2.0 * Mat(pb_llt.matrixL()).diagonal().array().log().sum();
  double quad = m.y.dot(vinv.cwiseProduct(m.y)) - bb.dot(pb_llt.solve(bb));
  int n = static_cast<int>(m.y.size());
  return -0.5 * (n * std::log(2.0 * M_PI) + m.V.array().log().sum()) + 0.5 * logdet_qb -
         0.5 * logdet_pb - 0.5 * quad;
}

}  // namespace

TEST_CASE("conjugate scalar model has closed-form posterior and evidence", "[gaussian]") {
  GaussianModel m;
  m.Q = to_sparse(Mat::Identity(1, 1));
  m.A = to_sparse(Mat::Identity(1, 1));
  m.y = Vec::Constant(1, 2.0);
  m.V = Vec::Constant(1, 1.0);
  m.C = Mat(0, 1);
  m.log_gdet_prior = 0.0;

  GaussianConditional g = gaussian_conditional(m);
  CHECK(g.mean[0] == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(g.var(Vec::Ones(1)) == Catch::Approx(0.5).epsilon(1e-14));
  // evidence = N(2; 0, 1 + 1)
  CHECK(g.log_evidence == Catch::Approx(-2.2655121234846454).epsilon(1e-10));
}

TEST_CASE("conditioning rejects bad inputs", "[gaussian]") {
  GaussianModel m;
  m.Q = to_sparse(Mat::Identity(2, 2));
  m.A = to_sparse(Mat::Identity(2, 2));
  m.y = Vec::Zero(2);
  m.V = Vec::Constant(2, 1.0);
  m.C = Mat(0, 2);
  m.V[1] = 0.0;
  CHECK_THROWS_AS(gaussian_conditional(m), std::invalid_argument);
  m.V[1] = 1.0;
  m.y = Vec::Zero(3);
  CHECK_THROWS_AS(gaussian_conditional(m), std::invalid_argument);
}

TEST_CASE("relabeling the latent coordinates permutes the answer", "[gaussian]") {
  Philox rng(301, 1);
  GaussianModel m = random_model(6, 8, 2, rng);
  GaussianConditional g = gaussian_conditional(m);

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(6);
  for (int i = 0; i < 6; ++i) pm.indices()[i] = perm[i];
  // z_new = P z_old with P[perm[i], i] = 1: columns of A and C get permuted
  Mat q = Mat(m.Q);
  GaussianModel mp = m;
  mp.Q = to_sparse(pm * q * pm.transpose());
  mp.A = to_sparse(Mat(Mat(m.A) * pm.transpose()));
  mp.C = m.C * pm.transpose();

  GaussianConditional gp = gaussian_conditional(mp);
  CHECK(gp.log_evidence == Catch::Approx(g.log_evidence).epsilon(1e-12));
  Vec remapped = pm * g.mean;
  CHECK((gp.mean - remapped).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kriging constraint agrees with a stiff pseudo-observation", "[gaussian]") {
  Philox rng(302, 1);
  GaussianModel m = random_model(5, 7, 1, rng);
  GaussianConditional g = gaussian_conditional(m);

  // same model, constraint replaced by an exact-zero observation of c'z with
  // variance 1e-10
  GaussianModel m2 = m;
  m2.C = Mat(0, 5);
  m2.log_gdet_prior = log_gdet_projected(Mat(m.Q), Mat(0, 5));
  Mat a2(8, 5);
  a2.topRows(7) = Mat(m.A);
  a2.row(7) = m.C.row(0);
  m2.A = to_sparse(a2);
  m2.y = Vec(8);
  m2.y.head(7) = m.y;
  m2.y[7] = 0.0;
  m2.V = Vec(8);
  m2.V.head(7) = m.V;
  m2.V[7] = 1e-10;

  GaussianConditional g2 = gaussian_conditional(m2);
  CHECK((g.mean - g2.mean).cwiseAbs().maxCoeff() < 1e-5);
  // the hard constraint is satisfied exactly by the kriging mean
  CHECK(std::abs(m.C.row(0).dot(g.mean)) < 1e-10);
}

TEST_CASE("var and cov_with_all match the dense constrained covariance", "[gaussian]") {
  Philox rng(303, 1);
  GaussianModel m = random_model(6, 9, 2, rng);
  GaussianConditional g = gaussian_conditional(m);

  Vec vinv = m.V.cwiseInverse();
  Mat p = Mat(m.Q) + Mat(m.A).transpose() * vinv.asDiagonal() * Mat(m.A);
  Mat pinv = p.llt().solve(Mat::Identity(6, 6));
  Mat sc = m.C * pinv * m.C.transpose();
  Mat sigma = pinv - pinv * m.C.transpose() * sc.llt().solve(m.C * pinv);

  for (int i = 0; i < 6; ++i) {
    Vec e = Vec::Unit(6, i);
    CHECK(g.var(e) == Catch::Approx(sigma(i, i)).epsilon(1e-10).margin(1e-12));
    CHECK((g.cov_with_all(e) - sigma.col(i)).cwiseAbs().maxCoeff() < 1e-10);
  }
  Vec a = random_mat(6, 1, rng).col(0);
  CHECK(g.var(a) == Catch::Approx(a.dot(sigma * a)).epsilon(1e-10));
}

TEST_CASE("constrained evidence matches the explicit-basis computation", "[gaussian]") {
  Philox rng(304, 1);
  for (int rep = 0; rep < 6; ++rep) {
    int dim = 4 + static_cast<int>(rng.next_unit() * 4);
    int k = rep % 3;  // 0, 1, 2 constraints
    GaussianModel m = random_model(dim, dim + 3, k, rng);
    GaussianConditional g = gaussian_conditional(m);
    CHECK(g.log_evidence == Catch::Approx(evidence_by_basis(m)).epsilon(1e-9).margin(1e-9));
  }
}

TEST_CASE("improper prior with a sum-to-zero constraint integrates correctly", "[gaussian]") {
  Philox rng(305, 1);
  int n = 6;
  GaussianModel m;
  m.Q = rw1_structure(n);  // rank n-1
  m.C = Mat::Ones(1, n);
  m.log_gdet_prior = log_gdet_projected(Mat(m.Q), m.C);
  m.A = to_sparse(Mat::Identity(n, n));
  m.y = random_mat(n, 1, rng).col(0);
  m.V = Vec::Constant(n, 0.8);

  GaussianConditional g = gaussian_conditional(m);
  CHECK(std::abs(g.mean.sum()) < 1e-10);
  CHECK(g.log_evidence == Catch::Approx(evidence_by_basis(m)).epsilon(1e-9).margin(1e-9));

  // quadratic-form identity used by the evidence: the constrained mean
  // reproduces the subspace quadratic term
  Eigen::HouseholderQR<Mat> qr(m.C.transpose());
  Mat b = Mat(qr.householderQ()).rightCols(n - 1);
  Vec vinv = m.V.cwiseInverse();
  Mat pb = b.transpose() * (Mat(m.Q) + vinv.asDiagonal() * Mat::Identity(n, n)) * b;
  Vec bb = b.transpose() * vinv.cwiseProduct(m.y);
  Vec bvec = vinv.cwiseProduct(m.y);
  CHECK(bb.dot(pb.llt().solve(bb)) == Catch::Approx(g.mean.dot(bvec)).epsilon(1e-9));
}

TEST_CASE("posterior samples respect constraints and match moments", "[gaussian]") {
  Philox rng(306, 1);
  GaussianModel m = random_model(5, 10, 1, rng);
  GaussianConditional g = gaussian_conditional(m);

  Philox draw_rng(307, 1);
  const int n_draws = 20000;
  Vec mean_acc = Vec::Zero(5), var_acc = Vec::Zero(5);
  double worst_constraint = 0.0;
  for (int s = 0; s < n_draws; ++s) {
    Vec z = g.sample(draw_rng);
    worst_constraint = std::max(worst_constraint, std::abs(m.C.row(0).dot(z)));
    mean_acc += z;
    var_acc += (z - g.mean).cwiseAbs2();
  }
  CHECK(worst_constraint < 1e-8);
  mean_acc /= n_draws;
  var_acc /= n_draws;
  for (int i = 0; i < 5; ++i) {
    double sd = std::sqrt(g.var(Vec::Unit(5, i)));
    CHECK(std::abs(mean_acc[i] - g.mean[i]) < 5.0 * sd / std::sqrt(double(n_draws)));
    CHECK(var_acc[i] == Catch::Approx(sd * sd).epsilon(0.05));
  }
}

TEST_CASE("projected determinant reduces to the plain determinant", "[gaussian]") {
  Philox rng(308, 1);
  Mat m = random_mat(5, 5, rng);
  Mat q = m * m.transpose() + Mat::Identity(5, 5);
  Eigen::LLT<Mat> llt(q);
  double direct = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  CHECK(log_gdet_projected(q, Mat(0, 5)) == Catch::Approx(direct).epsilon(1e-12));
}
