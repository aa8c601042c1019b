// Penalized-complexity priors: calibration identities, distance functions
// against brute-force Gaussian KL computations, Jacobians against central
// differences, and quadrature checks that the densities integrate to the
// probability statements that define them.
#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "agmrf/graph.hpp"
#include "agmrf/priors.hpp"
#include "agmrf/rng.hpp"
#include "agmrf/structure.hpp"

using namespace agmrf;

namespace {

// Moore-Penrose inverse with the same spectral tolerance rule the library
// uses (cut at 1e-8 relative to the largest eigenvalue).
Mat pinv_sym(const Mat& q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(q);
  const Vec& lam = es.eigenvalues();
  double tol = 1e-8 * lam.cwiseAbs().maxCoeff();
  Vec inv = Vec::Zero(lam.size());
  for (int i = 0; i < lam.size(); ++i)
    if (lam[i] > tol) inv[i] = 1.0 / lam[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double dense_logdet(const Mat& a) {
  Eigen::LLT<Mat> llt(a);
  REQUIRE(llt.info() == Eigen::Success);
  return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
}

// Brute-force d(phi): 2 KL( N(0, (1-phi)I + phi Sigma*) || N(0, I) ) computed
// from the dense mixture covariance, no termwise shortcut.
double brute_d_phi(double phi, const SpMat& scaled) {
  int n = static_cast<int>(scaled.rows());
  Mat sigma1 = (1.0 - phi) * Mat::Identity(n, n) + phi * pinv_sym(Mat(scaled));
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma1);
  double tr = sigma1.trace();
  double ld = es.eigenvalues().array().log().sum();
  return std::sqrt(tr - n - ld);
}

// Brute-force d(theta): 2 KL( N(0, Q_theta^-1) || N(0, Q_1^-1) ) on the
// deleted (full-rank) matrices, Q_theta = R1* + theta R2*, Q_1 = R1* + R2*.
double brute_d_theta(double theta, const Mat& r1_del, const Mat& r2_del) {
  Mat base = r1_del + r2_del;
  Mat flex = r1_del + theta * r2_del;
  int d = static_cast<int>(base.rows());
  double tr = flex.ldlt().solve(base).trace();
  double ld = dense_logdet(base) - dense_logdet(flex);
  return std::sqrt(tr - d - ld);
}

// Random connected areal graph: spanning tree plus a few extra edges.
AreaGraph random_connected(int n, Philox& rng) {
  std::set<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) {
    int j = static_cast<int>(rng.next_unit() * i);
    if (j >= i) j = i - 1;
    edges.emplace(j, i);
  }
  int extra = static_cast<int>(rng.next_unit() * n);
  for (int k = 0; k < extra; ++k) {
    int a = static_cast<int>(rng.next_unit() * n);
    int b = static_cast<int>(rng.next_unit() * n);
    if (a == b) continue;
    edges.emplace(std::min(a, b), std::max(a, b));
  }
  return areal_graph(n, {edges.begin(), edges.end()});
}

AreaGraph rwanda_like_graph() {
  // 35 annual periods starting 1985, shock window = calendar 1993..1999,
  // i.e. zero-based indices 8..14.
  return temporal_graph(35, {8, 9, 10, 11, 12, 13, 14}, 1985, 0);
}

}  // namespace

TEST_CASE("precision prior calibration and closed forms", "[priors]") {
  PcPrecisionPrior p = pc_precision_calibrate(1.0, 0.01);
  // lambda = -log(0.01) / 1
  CHECK(p.lambda == Catch::Approx(4.6051701859880909).epsilon(1e-15));
  // defining statement: P(1/sqrt(tau) > 1) = P(tau < 1) = 0.01
  CHECK(pc_precision_cdf(p, 1.0) == Catch::Approx(0.01).epsilon(1e-13));
  // median precision
  CHECK(pc_precision_quantile(p, 0.5) ==
        Catch::Approx(44.140825070407921).epsilon(1e-13));

  // quantile of cdf is identity across the support
  for (double tau : {0.05, 0.5, 3.0, 44.0, 900.0}) {
    CHECK(pc_precision_quantile(p, pc_precision_cdf(p, tau)) ==
          Catch::Approx(tau).epsilon(1e-10));
  }

  // the density integrates to the cdf difference
  double m = integrate([&](double t) { return pc_precision_pdf(p, t); }, 0.5, 80.0, 1e-10);
  CHECK(m == Catch::Approx(pc_precision_mass(p, 0.5, 80.0)).epsilon(1e-9));
  CHECK(m == Catch::Approx(pc_precision_cdf(p, 80.0) - pc_precision_cdf(p, 0.5)).margin(1e-8));

  // logpdf consistent with pdf
  CHECK(std::exp(pc_precision_logpdf(p, 7.5)) == Catch::Approx(pc_precision_pdf(p, 7.5)));
  CHECK(pc_precision_pdf(p, -1.0) == 0.0);

  CHECK_THROWS_AS(pc_precision_calibrate(0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(pc_precision_calibrate(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(pc_precision_quantile(p, 0.0), std::invalid_argument);
}

TEST_CASE("delete_rowcol removes one row and column", "[priors]") {
  Mat m(3, 3);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Mat d = delete_rowcol(m, 1);
  REQUIRE(d.rows() == 2);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(0, 1) == 3.0);
  CHECK(d(1, 0) == 7.0);
  CHECK(d(1, 1) == 9.0);
  CHECK_THROWS_AS(delete_rowcol(m, 3), std::invalid_argument);
  CHECK_THROWS_AS(delete_rowcol(m, -1), std::invalid_argument);
}

TEST_CASE("d(phi) matches brute-force Gaussian KL", "[priors]") {
  Philox rng(911, 1);
  for (int rep = 0; rep < 8; ++rep) {
    int n = 3 + static_cast<int>(rng.next_unit() * 4);  // 3..6
    AreaGraph g = random_connected(n, rng);
    ScaleResult sc = scale_parts({icar_structure(g)});
    Vec gt = bym2_gamma_tilde(sc.scaled[0]);
    REQUIRE(gt.size() == n);
    for (double phi : {1e-4, 0.05, 0.3, 0.5, 0.9, 0.999}) {
      double lib = d_phi(phi, gt);
      double brute = brute_d_phi(phi, sc.scaled[0]);
      CHECK(lib == Catch::Approx(brute).epsilon(1e-8).margin(1e-10));
    }
  }
}

TEST_CASE("d(phi) Jacobian matches central differences", "[priors]") {
  Philox rng(912, 1);
  AreaGraph g = random_connected(6, rng);
  ScaleResult sc = scale_parts({icar_structure(g)});
  Vec gt = bym2_gamma_tilde(sc.scaled[0]);

  double h = 1e-6;
  for (double phi : {0.05, 0.2, 0.5, 0.8, 0.95}) {
    double num = (d_phi(phi + h, gt) - d_phi(phi - h, gt)) / (2.0 * h);
    CHECK(d_phi_jacobian(phi, gt) == Catch::Approx(num).epsilon(1e-5));
  }
  // phi -> 0 limit: sqrt( sum (gt_i - 1)^2 / 2 )
  double lim = std::sqrt(0.5 * (gt.array() - 1.0).square().sum());
  CHECK(d_phi_jacobian(0.0, gt) == Catch::Approx(lim).epsilon(1e-12));
  CHECK(d_phi_jacobian(1e-9, gt) == Catch::Approx(lim).epsilon(1e-6));
}

TEST_CASE("phi prior integrates to its defining statement", "[priors]") {
  AreaGraph g = rwanda_like_graph();
  ScaleResult sc = scale_parts({rw1_structure(g.n)});
  Vec gt = bym2_gamma_tilde(sc.scaled[0]);
  PcPhiPrior p = pc_phi_calibrate(gt, 0.5, 2.0 / 3.0);

  // P(phi < 0.5) = 2/3 by quadrature over the density, not via the cdf
  double lower = integrate([&](double x) { return pc_phi_pdf(p, x); }, 1e-9, 0.5, 1e-10);
  CHECK(lower == Catch::Approx(2.0 / 3.0).margin(1e-4));

  // density integrates to the cdf difference on an interior window
  double mid = integrate([&](double x) { return pc_phi_pdf(p, x); }, 0.2, 0.8, 1e-10);
  CHECK(mid == Catch::Approx(pc_phi_cdf(p, 0.8) - pc_phi_cdf(p, 0.2)).margin(1e-6));
  CHECK(pc_phi_mass(p, 0.2, 0.8) == Catch::Approx(mid).margin(1e-6));

  // quantile inverts the cdf; calibration pins the u-quantile at alpha
  CHECK(pc_phi_quantile(p, 2.0 / 3.0) == Catch::Approx(0.5).margin(1e-9));
  for (double q : {0.1, 0.5, 0.9})
    CHECK(pc_phi_cdf(p, pc_phi_quantile(p, q)) == Catch::Approx(q).margin(1e-10));

  // proper at the upper end: the structure has a null direction, so d(1) is
  // infinite and the cdf keeps climbing toward 1
  CHECK(pc_phi_cdf(p, 1.0 - 1e-12) > pc_phi_cdf(p, 0.999));
  CHECK(pc_phi_cdf(p, 1.0 - 1e-12) <= 1.0);

  CHECK(pc_phi_pdf(p, -0.1) == 0.0);
  CHECK(pc_phi_pdf(p, 1.0) == 0.0);
  Vec ones = Vec::Ones(4);
  CHECK_THROWS_AS(pc_phi_calibrate(ones, 0.5, 2.0 / 3.0), std::invalid_argument);
}

TEST_CASE("pencil eigenvalues lie in [0,1] and ignore the removed index", "[priors]") {
  AreaGraph g = rwanda_like_graph();
  StructureParts sp = make_scaled_parts(g, conflict_arw1_parts(g));
  Vec e0 = theta_eigenvalues(sp.scaled[0], sp.scaled[1], 0);
  REQUIRE(e0.size() == g.n - 1);
  CHECK(e0.minCoeff() >= 0.0);
  CHECK(e0.maxCoeff() <= 1.0);
  // exactly as many (near-)unit eigenvalues as interior shock nodes
  int near_one = 0;
  for (int i = 0; i < e0.size(); ++i)
    if (e0[i] > 1.0 - 1e-6) ++near_one;
  CHECK(near_one == 8);

  for (int removed : {5, 11, 20, 34}) {
    Vec er = theta_eigenvalues(sp.scaled[0], sp.scaled[1], removed);
    REQUIRE(er.size() == e0.size());
    CHECK((er - e0).cwiseAbs().maxCoeff() < 1e-8);
    for (double th : {0.05, 0.3, 0.75, 0.99})
      CHECK(d_theta(th, er) == Catch::Approx(d_theta(th, e0)).epsilon(1e-10));
  }
}

TEST_CASE("d(theta) matches brute-force Gaussian KL", "[priors]") {
  Philox rng(913, 1);
  // temporal conflict instances
  for (int rep = 0; rep < 4; ++rep) {
    int n = 5 + static_cast<int>(rng.next_unit() * 2);  // 5..6
    int c0 = 1 + static_cast<int>(rng.next_unit() * (n - 3));
    AreaGraph g = temporal_graph(n, {c0, c0 + 1});
    StructureParts sp = make_scaled_parts(g, conflict_arw1_parts(g));
    Vec eps = theta_eigenvalues(sp.scaled[0], sp.scaled[1]);
    Mat r1d = delete_rowcol(Mat(sp.scaled[0]), 0);
    Mat r2d = delete_rowcol(Mat(sp.scaled[1]), 0);
    for (double th : {0.02, 0.1, 0.5, 0.75, 0.95}) {
      double lib = d_theta(th, eps);
      double brute = brute_d_theta(th, r1d, r2d);
      CHECK(lib == Catch::Approx(brute).epsilon(1e-8).margin(1e-8));
    }
    // at the base theta = 1 the distance is exactly zero; the brute-force
    // value is pure trace/logdet cancellation noise (sqrt amplifies it)
    CHECK(d_theta(1.0, eps) == 0.0);
    CHECK(brute_d_theta(1.0, r1d, r2d) < 2e-7);
  }
  // an areal two-country instance through the same identity
  AreaGraph g = areal_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {3, 5}});
  attach_countries_csv(g, "area_id,country_id\n1,1\n2,1\n3,1\n4,2\n5,2\n6,2\n");
  StructureParts sp = make_scaled_parts(g, multicountry_aicar_parts(g));
  Vec eps = theta_eigenvalues(sp.scaled[0], sp.scaled[1]);
  Mat r1d = delete_rowcol(Mat(sp.scaled[0]), 0);
  Mat r2d = delete_rowcol(Mat(sp.scaled[1]), 0);
  for (double th : {0.1, 0.6, 0.9})
    CHECK(d_theta(th, eps) == Catch::Approx(brute_d_theta(th, r1d, r2d)).epsilon(1e-8));
}

TEST_CASE("d(theta) Jacobian matches central differences", "[priors]") {
  AreaGraph g = rwanda_like_graph();
  StructureParts sp = make_scaled_parts(g, conflict_arw1_parts(g));
  Vec eps = theta_eigenvalues(sp.scaled[0], sp.scaled[1]);

  double h = 1e-6;
  for (double th : {0.05, 0.2, 0.5, 0.75, 0.95}) {
    double num = -(d_theta(th + h, eps) - d_theta(th - h, eps)) / (2.0 * h);
    CHECK(num > 0.0);  // d decreases toward the base theta = 1
    CHECK(d_theta_jacobian(th, eps) == Catch::Approx(num).epsilon(1e-5));
  }
  // theta -> 1 limit: sqrt( sum eps_i^2 / 2 )
  double lim = std::sqrt(0.5 * eps.array().square().sum());
  CHECK(d_theta_jacobian(1.0, eps) == Catch::Approx(lim).epsilon(1e-12));
  CHECK(d_theta_jacobian(1.0 - 1e-9, eps) == Catch::Approx(lim).epsilon(1e-6));
}

TEST_CASE("theta prior matches frozen reference values", "[priors]") {
  AreaGraph g = rwanda_like_graph();
  StructureParts sp = make_scaled_parts(g, conflict_arw1_parts(g));
  CHECK(sp.sigma2 == Catch::Approx(5.2869289177764811).epsilon(1e-12));

  Vec eps = theta_eigenvalues(sp.scaled[0], sp.scaled[1]);
  PcThetaPrior p = pc_theta_calibrate(eps, 0.75, 0.75);
  CHECK(p.lambda == Catch::Approx(0.47603777497963101).epsilon(1e-9));

  // central 95% interval
  CHECK(pc_theta_quantile(p, 0.025) ==
        Catch::Approx(0.091790469347066805).margin(1e-8));
  CHECK(pc_theta_quantile(p, 0.975) ==
        Catch::Approx(0.97387249889283511).margin(1e-8));

  // defining statement by quadrature over the density
  double lower = integrate([&](double x) { return pc_theta_pdf(p, x); }, 1e-9, 0.75, 1e-10);
  CHECK(lower == Catch::Approx(0.75).margin(1e-4));
  // with unit pencil eigenvalues present the lower tail vanishes, so the
  // density is proper: total mass 1 by quadrature
  double total = lower + pc_theta_mass(p, 0.75, 1.0);
  CHECK(total == Catch::Approx(1.0).margin(1e-4));

  // mass agrees with the cdf difference; quantile inverts the cdf
  CHECK(pc_theta_mass(p, 0.3, 0.9) ==
        Catch::Approx(pc_theta_cdf(p, 0.9) - pc_theta_cdf(p, 0.3)).margin(1e-6));
  for (double q : {0.025, 0.5, 0.975})
    CHECK(pc_theta_cdf(p, pc_theta_quantile(p, q)) == Catch::Approx(q).margin(1e-10));

  CHECK(pc_theta_pdf(p, 0.0) == 0.0);
  CHECK(pc_theta_pdf(p, 1.0000001) == 0.0);
  Vec zeros = Vec::Zero(5);
  CHECK_THROWS_AS(pc_theta_calibrate(zeros, 0.75, 0.75), std::invalid_argument);
}
