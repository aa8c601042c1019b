#pragma once
// Structure matrices for random-walk and ICAR fields and their adaptive
// variants. Every matrix built here is a weighted graph Laplacian: symmetric,
// zero row sums, PSD with the constant vector in the null space. Adaptive
// variants split the Laplacian into per-class parts R_l = D_l - W_l (each part
// carries its own degree matrix), so that summing the parts with unit weights
// recovers the classical matrix exactly.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "agmrf/graph.hpp"

namespace agmrf {

using SpMat = Eigen::SparseMatrix<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// Laplacian from a weighted edge list.
inline SpMat laplacian_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                                  const std::vector<double>& w) {
  std::vector<Triplet> t;
  t.reserve(4 * edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    auto [a, b] = edges[e];
    t.emplace_back(a, a, w[e]);
    t.emplace_back(b, b, w[e]);
    t.emplace_back(a, b, -w[e]);
    t.emplace_back(b, a, -w[e]);
  }
  SpMat q(n, n);
  q.setFromTriplets(t.begin(), t.end());
  return q;
}

inline SpMat rw1_structure(int n) {
  if (n < 2) throw std::invalid_argument("RW1 needs at least 2 periods");
  AreaGraph g = temporal_graph(n);
  return laplacian_from_edges(n, g.edges, std::vector<double>(g.edges.size(), 1.0));
}

inline SpMat icar_structure(const AreaGraph& g) {
  if (g.n < 2) throw std::invalid_argument("ICAR needs at least 2 areas");
  return laplacian_from_edges(g.n, g.edges, std::vector<double>(g.edges.size(), 1.0));
}

// Adaptive RW1: one precision per transition, Q = sum_i tau_i d_i d_i' with
// d_i the first-difference vector of transition i. Entries: Q_11 = tau_1,
// Q_NN = tau_{N-1}, Q_kk = tau_{k-1} + tau_k, Q_{i,i+1} = -tau_i.
inline SpMat arw1_precision(const std::vector<double>& tau) {
  int n = static_cast<int>(tau.size()) + 1;
  if (n < 2) throw std::invalid_argument("adaptive RW1 needs at least 1 transition precision");
  for (double t : tau)
    if (!(t > 0)) throw std::invalid_argument("transition precisions must be positive");
  AreaGraph g = temporal_graph(n);
  return laplacian_from_edges(n, g.edges, tau);
}

// Adaptive ICAR: one precision per adjacency pair, aligned with g.edges.
inline SpMat aicar_precision(const AreaGraph& g, const std::vector<double>& edge_tau) {
  if (edge_tau.size() != g.edges.size())
    throw std::invalid_argument("need one precision per edge (" + std::to_string(g.edges.size()) + ")");
  for (double t : edge_tau)
    if (!(t > 0)) throw std::invalid_argument("edge precisions must be positive");
  return laplacian_from_edges(g.n, g.edges, edge_tau);
}

// Adaptive RW2: Q = sum_i tau_i d_i d_i' with d_i the second-difference vector
// (1, -2, 1) at positions i, i+1, i+2. Rank N-2; null space spans the constant
// and linear-trend vectors. Construction-only (no latent model uses it here).
inline SpMat arw2_precision(const std::vector<double>& tau) {
  int n = static_cast<int>(tau.size()) + 2;
  if (n < 3) throw std::invalid_argument("adaptive RW2 needs at least 1 second difference");
  for (double t : tau)
    if (!(t > 0)) throw std::invalid_argument("second-difference precisions must be positive");
  Mat q = Mat::Zero(n, n);
  Vec d = Vec::Zero(n);
  for (size_t i = 0; i < tau.size(); ++i) {
    d.setZero();
    d[i] = 1.0;
    d[i + 1] = -2.0;
    d[i + 2] = 1.0;
    q += tau[i] * d * d.transpose();
  }
  return q.sparseView();
}

// Two-part split of the RW1 structure: part 2 collects transitions touching a
// conflict period, part 1 the rest. R1 + R2 equals the RW1 structure exactly.
inline std::vector<SpMat> conflict_arw1_parts(const AreaGraph& g) {
  if (g.kind != GraphKind::Temporal) throw std::invalid_argument("conflict split needs a temporal graph");
  if (g.n < 2) throw std::invalid_argument("conflict split needs at least 2 periods");
  std::vector<std::pair<int, int>> e1, e2;
  for (auto& e : g.edges)
    (edge_in_reference_class(g, e.first, e.second) ? e1 : e2).push_back(e);
  std::vector<SpMat> parts;
  parts.push_back(laplacian_from_edges(g.n, e1, std::vector<double>(e1.size(), 1.0)));
  parts.push_back(laplacian_from_edges(g.n, e2, std::vector<double>(e2.size(), 1.0)));
  return parts;
}

// Two-part split of the ICAR structure on a partitioned map: part 1 gathers
// within-country pairs, part 2 between-country pairs.
inline std::vector<SpMat> multicountry_aicar_parts(const AreaGraph& g) {
  if (g.kind != GraphKind::Areal) throw std::invalid_argument("multi-country split needs an areal graph");
  if (g.country.empty()) throw std::invalid_argument("multi-country split needs country labels");
  std::vector<std::pair<int, int>> e1, e2;
  for (auto& e : g.edges)
    (g.country[e.first] == g.country[e.second] ? e1 : e2).push_back(e);
  std::vector<SpMat> parts;
  parts.push_back(laplacian_from_edges(g.n, e1, std::vector<double>(e1.size(), 1.0)));
  parts.push_back(laplacian_from_edges(g.n, e2, std::vector<double>(e2.size(), 1.0)));
  return parts;
}

// General multi-country split: one part per country (its within-country pairs)
// plus a final part with all between-country pairs. M+1 parts.
inline std::vector<SpMat> general_multicountry_parts(const AreaGraph& g) {
  if (g.kind != GraphKind::Areal) throw std::invalid_argument("multi-country split needs an areal graph");
  if (g.country.empty()) throw std::invalid_argument("multi-country split needs country labels");
  std::vector<std::vector<std::pair<int, int>>> by_part(g.n_countries + 1);
  for (auto& e : g.edges) {
    int ca = g.country[e.first], cb = g.country[e.second];
    by_part[ca == cb ? ca : g.n_countries].push_back(e);
  }
  std::vector<SpMat> parts;
  for (auto& es : by_part)
    parts.push_back(laplacian_from_edges(g.n, es, std::vector<double>(es.size(), 1.0)));
  return parts;
}

inline Vec row_sums(const SpMat& q) {
  return Vec(q * Vec::Ones(q.rows()));
}

inline double quad_form(const SpMat& q, const Vec& x) { return x.dot(q * x); }

// Diagonal of the Moore-Penrose inverse via a full symmetric eigendecomposition;
// eigenvalues below 1e-8 relative to the largest are treated as zero.
// Returns the marginal variances of the field with its null space removed
// (the sum-to-zero interpretation of an intrinsic model).
inline Vec geninv_diag(const Mat& q, int* rank_deficiency = nullptr) {
  Eigen::SelfAdjointEigenSolver<Mat> es(q);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Vec& lam = es.eigenvalues();
  const Mat& v = es.eigenvectors();
  double tol = 1e-8 * lam.cwiseAbs().maxCoeff();
  Vec d = Vec::Zero(q.rows());
  int dropped = 0;
  for (int j = 0; j < lam.size(); ++j) {
    if (lam[j] > tol)
      d += v.col(j).cwiseAbs2() / lam[j];
    else
      ++dropped;
  }
  if (rank_deficiency) *rank_deficiency = dropped;
  return d;
}

struct ScaleResult {
  std::vector<SpMat> scaled;  // sigma2 * parts[l]
  double sigma2 = 0.0;        // geometric mean marginal variance at unit precisions
  Vec marginal_var;           // generalized-inverse diagonal of the unscaled sum
};

// Scale a family of parts so the field they jointly define has unit
// geometric-mean marginal variance: sigma2 = gm(diag((sum_l R_l)^+)) and
// R*_l = sigma2 * R_l. Requires the summed structure to have rank deficiency
// exactly 1 (a connected graph).
inline ScaleResult scale_parts(const std::vector<SpMat>& parts) {
  if (parts.empty()) throw std::invalid_argument("scale_parts needs at least one part");
  SpMat sum = parts[0];
  for (size_t l = 1; l < parts.size(); ++l) sum += parts[l];
  int deficiency = 0;
  Vec mv = geninv_diag(Mat(sum), &deficiency);
  if (deficiency != 1)
    throw std::runtime_error("structure matrix rank deficiency is " + std::to_string(deficiency) +
                             ", expected 1 (is the graph connected?)");
  ScaleResult r;
  r.marginal_var = mv;
  r.sigma2 = std::exp(mv.array().log().mean());
  for (const auto& p : parts) r.scaled.push_back(SpMat(r.sigma2 * p));
  return r;
}

struct StructureParts {
  AreaGraph graph;
  std::vector<SpMat> parts;
  std::vector<SpMat> scaled;
  double sigma2 = 0.0;
};

inline StructureParts make_scaled_parts(const AreaGraph& g, std::vector<SpMat> parts) {
  StructureParts sp;
  sp.graph = g;
  sp.parts = std::move(parts);
  auto res = scale_parts(sp.parts);
  sp.scaled = std::move(res.scaled);
  sp.sigma2 = res.sigma2;
  return sp;
}

}  // namespace agmrf
