#pragma once
// Hyperparameter integration and posterior summaries.
//
// The working likelihood is Gaussian with known variances, so the latent
// posterior given hyperparameters is exactly Gaussian (gaussian.hpp). The
// only approximation left is the integral over hyperparameters, done on a
// deterministic grid: locate the mode of the log posterior of z by pattern
// search, standardize coordinates with the numerically estimated Hessian,
// and either take the axis product of points within a log-density drop of
// Delta (<= 5 dims) or a central composite design (above). Everything
// downstream (latent marginals, DIC, CPO, U5MR draws) is a finite mixture
// over the grid.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "agmrf/gaussian.hpp"
#include "agmrf/model.hpp"
#include "agmrf/rng.hpp"

namespace agmrf {

struct ExploreOptions {
  double delta = 6.0;        // keep grid points within this log-density drop
  double dz = 0.75;          // step in standardized coordinates
  double mode_tol = 3e-3;    // pattern-search step at convergence
  double hess_step = 0.1;    // central-difference step for the Hessian
  double f0 = 1.1;           // central-composite scaling
  int max_mode_evals = 2000;
  int max_axis_steps = 30;   // per-direction cap when walking an axis
  int full_grid_max_dim = 5; // central composite design above this
  int max_grid_points = 50000;
  // For >= 4 dims, skip product points whose quadratic-approximation drop
  // 0.5|u|^2 already exceeds delta by this slack (saves evaluations only).
  int prefilter_min_dim = 4;
  double prefilter_slack = 4.0;
};

struct RawGridPoint {
  Vec z;
  double log_post = 0.0;
  double design_weight = 1.0;
  double weight = 0.0;
};

struct GridResult {
  std::vector<RawGridPoint> points;
  int mode_index = 0;  // argmax weight
  Vec z_search_mode;   // pattern-search optimum (not necessarily a grid point)
  Mat hessian;         // -d2 log post at the search mode
  Mat basis;           // z = z_search_mode + basis * u, u standardized
  int n_evals = 0;
  bool used_ccd = false;
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Evaluator {
  const std::function<double(const Vec&)>& f;
  int n_evals = 0;
  int max_evals = 0;

  double operator()(const Vec& z) {
    if (max_evals > 0 && n_evals >= max_evals)
      throw std::runtime_error("hyperparameter exploration exceeded its evaluation budget");
    ++n_evals;
    double v = f(z);
    return std::isfinite(v) ? v : kNegInf;
  }
};

// Standardizing basis G with G G' = H^{-1}; falls back to an eigenvalue
// floor when H is not positive definite (flat or saddle directions).
inline Mat standardizing_basis(Mat h) {
  h = 0.5 * (h + h.transpose()).eval();
  const int p = static_cast<int>(h.rows());
  Eigen::LLT<Mat> llt(h);
  Mat sigma;
  if (llt.info() == Eigen::Success) {
    sigma = llt.solve(Mat::Identity(p, p));
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("Hessian eigendecomposition failed");
    Vec lam = es.eigenvalues();
    double floor = 1e-8 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (int i = 0; i < p; ++i) lam[i] = std::max(lam[i], floor);
    sigma = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
  }
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  Eigen::LLT<Mat> slt(sigma);
  if (slt.info() != Eigen::Success)
    throw std::runtime_error("Hessian inverse is not positive definite");
  return slt.matrixL();
}

}  // namespace detail

// Derivative-free ascent: greedy coordinate pattern search with halving steps.
inline Vec pattern_search_mode(detail::Evaluator& ev, Vec z, double* f_out,
                               const ExploreOptions& opt) {
  double f = ev(z);
  if (!std::isfinite(f))
    throw std::runtime_error("log posterior is not finite at the initial hyperparameters");
  const int p = static_cast<int>(z.size());
  double step = 1.0;
  while (step >= opt.mode_tol) {
    bool improved = false;
    for (int i = 0; i < p; ++i) {
      for (double dir : {1.0, -1.0}) {
        Vec zt = z;
        zt[i] += dir * step;
        double ft = ev(zt);
        if (ft > f) {
          z = zt;
          f = ft;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  if (f_out) *f_out = f;
  return z;
}

inline Mat neg_hessian(detail::Evaluator& ev, const Vec& z, double f0,
                       double h) {
  const int p = static_cast<int>(z.size());
  Mat hess(p, p);
  auto at = [&](int i, double di, int j, double dj) {
    Vec zt = z;
    zt[i] += di * h;
    zt[j] += dj * h;
    double v = ev(zt);
    if (!std::isfinite(v))
      throw std::runtime_error("log posterior not finite near the mode (Hessian step)");
    return v;
  };
  for (int i = 0; i < p; ++i) {
    double fp = at(i, 1, i, 0), fm = at(i, -1, i, 0);
    hess(i, i) = -(fp - 2.0 * f0 + fm) / (h * h);
    for (int j = i + 1; j < p; ++j) {
      double v = -(at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) +
                   at(i, -1, j, -1)) /
                 (4.0 * h * h);
      hess(i, j) = hess(j, i) = v;
    }
  }
  return hess;
}

// Explore an arbitrary log posterior over R^p. Generic so that toy analytic
// posteriors can exercise the machinery directly.
inline GridResult explore_log_posterior(const std::function<double(const Vec&)>& f,
                                        Vec z0, const ExploreOptions& opt = {}) {
  detail::Evaluator ev{f, 0, opt.max_mode_evals};
  double f_mode = 0.0;
  Vec z_mode = pattern_search_mode(ev, std::move(z0), &f_mode, opt);
  const int p = static_cast<int>(z_mode.size());

  ev.max_evals = 0;  // budget applies to the mode search only
  GridResult out;
  out.z_search_mode = z_mode;
  out.hessian = neg_hessian(ev, z_mode, f_mode, opt.hess_step);
  out.basis = detail::standardizing_basis(out.hessian);

  auto eval_u = [&](const Vec& u) -> std::pair<Vec, double> {
    Vec z = z_mode + out.basis * u;
    return {z, ev(z)};
  };

  if (p <= opt.full_grid_max_dim) {
    // Per-axis offsets whose actual log density stays within delta.
    std::vector<std::vector<double>> offsets(p);
    for (int i = 0; i < p; ++i) {
      offsets[i].push_back(0.0);
      for (double dir : {-1.0, 1.0}) {
        for (int k = 1; k <= opt.max_axis_steps; ++k) {
          Vec u = Vec::Zero(p);
          u[i] = dir * k * opt.dz;
          if (eval_u(u).second < f_mode - opt.delta) break;
          offsets[i].push_back(u[i]);
        }
      }
      std::sort(offsets[i].begin(), offsets[i].end());
    }
    const bool prefilter = p >= opt.prefilter_min_dim;
    Vec u = Vec::Zero(p);
    std::function<void(int, double)> rec = [&](int d, double sq) {
      if (d == p) {
        auto [z, lp] = eval_u(u);
        if (lp >= f_mode - opt.delta) {
          if (static_cast<int>(out.points.size()) >= opt.max_grid_points)
            throw std::runtime_error("hyperparameter grid exceeds the point cap");
          out.points.push_back({z, lp, 1.0, 0.0});
        }
        return;
      }
      for (double o : offsets[d]) {
        if (prefilter && 0.5 * (sq + o * o) > opt.delta + opt.prefilter_slack) continue;
        u[d] = o;
        rec(d + 1, sq + o * o);
      }
      u[d] = 0.0;
    };
    rec(0, 0.0);
  } else {
    // Central composite design: half-fraction corners (even sign parity) at
    // coordinate f0, axial points at radius f0*sqrt(p), plus the center.
    out.used_ccd = true;
    const double r = opt.f0 * std::sqrt(static_cast<double>(p));
    std::vector<Vec> sphere;
    for (std::uint64_t bits = 0; bits < (1ull << (p - 1)); ++bits) {
      Vec u(p);
      int parity = 0;
      for (int i = 0; i < p - 1; ++i) {
        int neg = (bits >> i) & 1;
        parity ^= neg;
        u[i] = neg ? -opt.f0 : opt.f0;
      }
      u[p - 1] = parity ? -opt.f0 : opt.f0;
      sphere.push_back(u);
    }
    for (int i = 0; i < p; ++i) {
      for (double dir : {-1.0, 1.0}) {
        Vec u = Vec::Zero(p);
        u[i] = dir * r;
        sphere.push_back(u);
      }
    }
    const double n_s = static_cast<double>(sphere.size());
    const double w_s = 1.0 / (n_s * opt.f0 * opt.f0);
    const double w_c = 1.0 - 1.0 / (opt.f0 * opt.f0);
    out.points.push_back({z_mode, f_mode, w_c, 0.0});
    for (const Vec& u : sphere) {
      auto [z, lp] = eval_u(u);
      if (std::isfinite(lp)) out.points.push_back({z, lp, w_s, 0.0});
    }
  }

  double lp_max = detail::kNegInf;
  for (const auto& pt : out.points) lp_max = std::max(lp_max, pt.log_post);
  double total = 0.0;
  for (auto& pt : out.points) {
    pt.weight = pt.design_weight * std::exp(pt.log_post - lp_max);
    total += pt.weight;
  }
  if (!(total > 0)) throw std::runtime_error("all hyperparameter grid weights vanished");
  int best = 0;
  for (size_t k = 0; k < out.points.size(); ++k) {
    out.points[k].weight /= total;
    if (out.points[k].weight > out.points[best].weight) best = static_cast<int>(k);
  }
  out.mode_index = best;
  out.n_evals = ev.n_evals;
  return out;
}

// ---- model-bound exploration ------------------------------------------------

struct GridPoint {
  Vec z;
  HyperValues h;
  double log_post = 0.0;
  double weight = 0.0;
  GaussianConditional cond;
};

struct HyperExploration {
  std::vector<GridPoint> grid;
  int mode_index = 0;
  Vec z_search_mode;
  Mat hessian;
  Mat basis;
  int n_evals = 0;
  bool used_ccd = false;
  double log_evidence_mode = 0.0;  // conditional evidence at the weight mode
};

inline double model_log_posterior(const LatentModel& model, const Vec& z) {
  const HyperValues h = model.natural(z);
  GaussianConditional c = gaussian_conditional(model.gaussian(h));
  return model.log_hyper_prior(z) + c.log_evidence;
}

inline HyperExploration explore_hyperparameters(const LatentModel& model,
                                                const ExploreOptions& opt = {}) {
  auto f = [&model](const Vec& z) -> double {
    try {
      return model_log_posterior(model, z);
    } catch (const std::runtime_error&) {
      return detail::kNegInf;  // outside the numerically usable range
    }
  };
  GridResult raw = explore_log_posterior(f, model.z_init(), opt);

  HyperExploration ex;
  ex.mode_index = raw.mode_index;
  ex.z_search_mode = std::move(raw.z_search_mode);
  ex.hessian = std::move(raw.hessian);
  ex.basis = std::move(raw.basis);
  ex.n_evals = raw.n_evals;
  ex.used_ccd = raw.used_ccd;
  ex.grid.reserve(raw.points.size());
  for (auto& pt : raw.points) {
    GridPoint g;
    g.z = std::move(pt.z);
    g.h = model.natural(g.z);
    g.log_post = pt.log_post;
    g.weight = pt.weight;
    g.cond = gaussian_conditional(model.gaussian(g.h));
    ex.grid.push_back(std::move(g));
  }
  ex.log_evidence_mode = ex.grid[ex.mode_index].cond.log_evidence;
  return ex;
}

// ---- mixture summaries -------------------------------------------------------

struct MarginalSummary {
  double mean = 0.0, sd = 0.0, q025 = 0.0, median = 0.0, q975 = 0.0;
};

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Summary of a finite Gaussian mixture: exact moments, quantiles by bisection
// on the mixture CDF (monotone, so bisection is safe).
inline MarginalSummary gaussian_mixture_summary(const std::vector<double>& w,
                                                const std::vector<double>& m,
                                                const std::vector<double>& s) {
  const size_t K = w.size();
  MarginalSummary out;
  double ex = 0.0, ex2 = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (size_t k = 0; k < K; ++k) {
    ex += w[k] * m[k];
    ex2 += w[k] * (s[k] * s[k] + m[k] * m[k]);
    lo = std::min(lo, m[k] - 10.0 * s[k] - 1e-300);
    hi = std::max(hi, m[k] + 10.0 * s[k] + 1e-300);
  }
  out.mean = ex;
  out.sd = std::sqrt(std::max(0.0, ex2 - ex * ex));
  auto cdf = [&](double x) {
    double c = 0.0;
    for (size_t k = 0; k < K; ++k)
      c += w[k] * (s[k] > 0 ? norm_cdf((x - m[k]) / s[k]) : (x >= m[k] ? 1.0 : 0.0));
    return c;
  };
  auto quantile = [&](double p) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::max(std::abs(a), std::abs(b))); ++it) {
      double mid = 0.5 * (a + b);
      (cdf(mid) < p ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };
  out.q025 = quantile(0.025);
  out.median = quantile(0.5);
  out.q975 = quantile(0.975);
  return out;
}

// Mixture summary of a linear functional a'x over the grid.
inline MarginalSummary functional_summary(const HyperExploration& ex, const Vec& a) {
  const size_t K = ex.grid.size();
  std::vector<double> w(K), m(K), s(K);
  for (size_t k = 0; k < K; ++k) {
    w[k] = ex.grid[k].weight;
    m[k] = ex.grid[k].cond.mean.dot(a);
    s[k] = std::sqrt(std::max(0.0, ex.grid[k].cond.var(a)));
  }
  return gaussian_mixture_summary(w, m, s);
}

inline std::vector<MarginalSummary> latent_marginals(const LatentModel& model,
                                                     const HyperExploration& ex) {
  std::vector<MarginalSummary> out;
  out.reserve(model.layout().dim);
  for (int j = 0; j < model.layout().dim; ++j)
    out.push_back(functional_summary(ex, model.report_row(j)));
  return out;
}

// Posterior summaries of each hyperparameter on its natural scale. Quantiles
// are grid-resolution-limited (discrete weighted quantiles); Mode is the
// natural value at the maximal-weight grid point.
struct HyperSummary {
  std::string name;
  double mean = 0.0, sd = 0.0, q025 = 0.0, median = 0.0, q975 = 0.0, mode = 0.0;
};

inline std::vector<HyperSummary> hyper_summaries(const LatentModel& model,
                                                 const HyperExploration& ex) {
  const int p = model.n_hyper();
  auto natural_axis = [&](const HyperValues& h, int i) {
    const std::string& nm = model.hyper_names()[i];
    if (nm == "tau_b") return h.tau_b;
    if (nm == "phi") return h.phi;
    if (nm == "theta") return h.theta;
    if (nm == "tau_nu") return h.tau_nu;
    int m = std::stoi(nm.substr(4)) - 1;  // psi_<m>
    return h.psi[m];
  };
  std::vector<HyperSummary> out(p);
  for (int i = 0; i < p; ++i) {
    HyperSummary& hs = out[i];
    hs.name = model.hyper_names()[i];
    std::vector<std::pair<double, double>> vw;  // (value, weight)
    double ex1 = 0.0, ex2 = 0.0;
    for (const auto& g : ex.grid) {
      double v = natural_axis(g.h, i);
      ex1 += g.weight * v;
      ex2 += g.weight * v * v;
      vw.emplace_back(v, g.weight);
    }
    hs.mean = ex1;
    hs.sd = std::sqrt(std::max(0.0, ex2 - ex1 * ex1));
    std::sort(vw.begin(), vw.end());
    auto dq = [&](double prob) {
      double c = 0.0;
      for (const auto& [v, wt] : vw) {
        c += wt;
        if (c >= prob) return v;
      }
      return vw.back().first;
    };
    hs.q025 = dq(0.025);
    hs.median = dq(0.5);
    hs.q975 = dq(0.975);
    hs.mode = natural_axis(ex.grid[ex.mode_index].h, i);
  }
  return out;
}

// ---- model-comparison metrics -------------------------------------------------

struct DicResult {
  double dic = 0.0, p_d = 0.0, mean_deviance = 0.0, deviance_at_mean = 0.0;
};

// Gaussian deviance D(eta) = sum_r [log(2 pi V_r) + (y_r - eta_r)^2 / V_r];
// the posterior mean deviance is exact from mixture moments of eta_r.
inline DicResult dic(const LatentModel& model, const HyperExploration& ex) {
  const int n = static_cast<int>(model.y().size());
  const size_t K = ex.grid.size();
  DicResult out;
  for (int r = 0; r < n; ++r) {
    const Vec a = model.eta_row(r);
    const double yr = model.y()[r], vr = model.V()[r];
    double e1 = 0.0, esq = 0.0;
    for (size_t k = 0; k < K; ++k) {
      double m = ex.grid[k].cond.mean.dot(a);
      double v = std::max(0.0, ex.grid[k].cond.var(a));
      e1 += ex.grid[k].weight * m;
      esq += ex.grid[k].weight * ((yr - m) * (yr - m) + v);
    }
    const double base = std::log(2.0 * M_PI * vr);
    out.mean_deviance += base + esq / vr;
    out.deviance_at_mean += base + (yr - e1) * (yr - e1) / vr;
  }
  out.p_d = out.mean_deviance - out.deviance_at_mean;
  out.dic = out.mean_deviance + out.p_d;
  return out;
}

struct LogScoreResult {
  double log_score = 0.0;
  Vec log_cpo;   // per observation
  int n_refits = 0;  // observations*gridpoints that needed the explicit refit
};

inline double log_normal_pdf(double y, double m, double v) {
  return -0.5 * (std::log(2.0 * M_PI * v) + (y - m) * (y - m) / v);
}

// CPO_r = pi(y_r | y_-r), computed per grid point by leave-one-out downdating
// of the conditional posterior of eta_r and then mixed across the grid.
// Removing observation r from the posterior and then predicting it shows
// CPO_r^{-1} = E[ N(y_r; eta_r, V_r)^{-1} | y ] per point, so the grid mixing
// is harmonic in the per-point predictive densities.
inline LogScoreResult log_score(const LatentModel& model, const HyperExploration& ex) {
  const int n = static_cast<int>(model.y().size());
  const size_t K = ex.grid.size();
  LogScoreResult out;
  out.log_cpo = Vec::Zero(n);
  std::vector<double> log_w(K);
  for (size_t k = 0; k < K; ++k)
    log_w[k] = ex.grid[k].weight > 0 ? std::log(ex.grid[k].weight) : detail::kNegInf;

  for (int r = 0; r < n; ++r) {
    const Vec a = model.eta_row(r);
    const double yr = model.y()[r], vr = model.V()[r];
    std::vector<double> terms;  // log(w_k) - log(cpo_rk)
    terms.reserve(K);
    for (size_t k = 0; k < K; ++k) {
      if (!(ex.grid[k].weight > 0)) continue;
      const double m = ex.grid[k].cond.mean.dot(a);
      const double s = ex.grid[k].cond.var(a);
      const double prec_loo = 1.0 / s - 1.0 / vr;
      double log_cpo_rk;
      if (prec_loo > 0) {
        const double v_loo = 1.0 / prec_loo;
        const double m_loo = v_loo * (m / s - yr / vr);
        log_cpo_rk = log_normal_pdf(yr, m_loo, v_loo + vr);
      } else {
        // Downdate lost positivity (observation dominates): explicit refit.
        GaussianConditional c = gaussian_conditional(model.gaussian_without(ex.grid[k].h, r));
        const double m_loo = c.mean.dot(a);
        const double v_loo = std::max(0.0, c.var(a));
        log_cpo_rk = log_normal_pdf(yr, m_loo, v_loo + vr);
        ++out.n_refits;
      }
      terms.push_back(log_w[k] - log_cpo_rk);
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    double se = 0.0;
    for (double t : terms) se += std::exp(t - mx);
    out.log_cpo[r] = -(mx + std::log(se));
    out.log_score -= out.log_cpo[r];
  }
  out.log_score /= n;
  return out;
}

inline double rmse(const Vec& estimate, const Vec& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("rmse: estimate/truth length mismatch");
  return std::sqrt((estimate - truth).squaredNorm() / estimate.size());
}

// Posterior mean of the area-level linear predictor zeta_i (used as the
// point estimate in the simulation study's RMSE).
inline Vec zeta_posterior_mean(const LatentModel& model, const HyperExploration& ex) {
  Vec out = Vec::Zero(model.layout().n);
  for (int i = 0; i < model.layout().n; ++i) {
    const Vec a = model.zeta_row(i);
    for (const auto& g : ex.grid) out[i] += g.weight * g.cond.mean.dot(a);
  }
  return out;
}

// ---- sampling-based mortality summaries ---------------------------------------

struct U5mrOptions {
  int n_draws = 1000;
  std::uint64_t seed = 1;
};

inline double sample_quantile(const std::vector<double>& sorted, double p) {
  const size_t B = sorted.size();
  if (B == 1) return sorted[0];
  double h = (B - 1) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  if (lo >= B - 1) return sorted[B - 1];
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

// Per-area summaries of p_i = expit(zeta_i): draws allocated to grid points
// by largest remainder of B*w_k, drawn sequentially in grid order from one
// counter-based stream so results are reproducible for a fixed seed.
inline std::vector<MarginalSummary> u5mr_summaries(const LatentModel& model,
                                                   const HyperExploration& ex,
                                                   const U5mrOptions& opt = {}) {
  if (opt.n_draws < 1) throw std::invalid_argument("u5mr draws must be >= 1");
  const size_t K = ex.grid.size();
  const int N = model.layout().n;
  std::vector<long> alloc(K, 0);
  std::vector<std::pair<double, size_t>> rem;
  long assigned = 0;
  for (size_t k = 0; k < K; ++k) {
    double target = opt.n_draws * ex.grid[k].weight;
    alloc[k] = static_cast<long>(std::floor(target));
    assigned += alloc[k];
    rem.emplace_back(target - alloc[k], k);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (long i = 0; i < opt.n_draws - assigned; ++i) ++alloc[rem[i % K].second];

  Mat Z(N, model.layout().dim);
  for (int i = 0; i < N; ++i) Z.row(i) = model.zeta_row(i).transpose();

  std::vector<std::vector<double>> draws(N);
  for (int i = 0; i < N; ++i) draws[i].reserve(opt.n_draws);
  Philox rng(opt.seed, 0);
  for (size_t k = 0; k < K; ++k) {
    for (long d = 0; d < alloc[k]; ++d) {
      Vec x = ex.grid[k].cond.sample(rng);
      Vec zeta = Z * x;
      for (int i = 0; i < N; ++i) draws[i].push_back(LatentModel::expit(zeta[i]));
    }
  }

  std::vector<MarginalSummary> out(N);
  for (int i = 0; i < N; ++i) {
    std::vector<double>& v = draws[i];
    const double B = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= B;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].mean = mean;
    out[i].sd = B > 1 ? std::sqrt(ss / (B - 1)) : 0.0;
    std::sort(v.begin(), v.end());
    out[i].q025 = sample_quantile(v, 0.025);
    out[i].median = sample_quantile(v, 0.5);
    out[i].q975 = sample_quantile(v, 0.975);
  }
  return out;
}

// Prior and posterior density of theta on a fixed lattice, for prior-vs-
// posterior overlay plots. The posterior curve is a weighted Gaussian kernel
// estimate on the logit scale (the grid is discrete; this is a visualization
// aid, documented as such).
struct ThetaDensityTable {
  std::vector<double> theta, prior, posterior;
};

inline ThetaDensityTable theta_density_table(const LatentModel& model,
                                             const HyperExploration& ex,
                                             int n_lattice = 199) {
  if (!model.theta_prior())
    throw std::invalid_argument("theta density table requires a free theta");
  int axis = -1;
  for (int i = 0; i < model.n_hyper(); ++i)
    if (model.hyper_names()[i] == "theta") axis = i;
  if (axis < 0) throw std::invalid_argument("theta axis not found");

  double m1 = 0.0, m2 = 0.0, neff_den = 0.0;
  std::vector<std::pair<double, double>> lw;  // (logit theta, weight)
  for (const auto& g : ex.grid) {
    double t = std::min(1.0 - 1e-12, std::max(1e-12, g.h.theta));
    double l = std::log(t / (1.0 - t));
    lw.emplace_back(l, g.weight);
    m1 += g.weight * l;
    m2 += g.weight * l * l;
    neff_den += g.weight * g.weight;
  }
  const double sdw = std::sqrt(std::max(1e-12, m2 - m1 * m1));
  const double neff = 1.0 / std::max(1e-12, neff_den);
  const double bw = std::max(0.05, 1.06 * sdw * std::pow(neff, -0.2));

  ThetaDensityTable out;
  for (int i = 1; i <= n_lattice; ++i) {
    const double t = static_cast<double>(i) / (n_lattice + 1);
    const double l = std::log(t / (1.0 - t));
    double dens = 0.0;
    for (const auto& [lk, wk] : lw) {
      const double zd = (l - lk) / bw;
      dens += wk * std::exp(-0.5 * zd * zd);
    }
    dens /= bw * std::sqrt(2.0 * M_PI);
    out.theta.push_back(t);
    out.prior.push_back(pc_theta_pdf(*model.theta_prior(), t));
    out.posterior.push_back(dens / (t * (1.0 - t)));  // logit-scale Jacobian
  }
  return out;
}

}  // namespace agmrf
