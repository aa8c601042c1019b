#pragma once
// Simulation study comparing the non-adaptive temporal smoother (RW1-based)
// with the adaptive conflict variant on data generated with unstructured
// area effects only — both fitted models are deliberately misspecified.
//
// Design: N = 30 periods, shock window at 1-based indices 9..15; observation
// variance V in {1/75, 1/150, 1/300}; effect precision tau_i either 20
// everywhere ("equal") or 20 outside / 10 inside the window ("unequal");
// three mean trends. Per replicate: eta_i = mu_i + b_i, b_i ~ N(0, 1/tau_i),
// y_i ~ N(eta_i, V); both models fit the same y (paired design).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "agmrf/inference.hpp"
#include "agmrf/io.hpp"
#include "agmrf/model.hpp"
#include "agmrf/rng.hpp"

namespace agmrf {

inline constexpr int kStudyN = 30;
inline constexpr int kStudyConflictFirst = 8;  // 0-based, 1-based index 9
inline constexpr int kStudyConflictLast = 14;  // 0-based, 1-based index 15
inline constexpr int kStudyPeak = 11;          // 0-based, 1-based index 12
inline constexpr double kStudyBaseline = -3.0;
inline constexpr double kStudyAmplitude = 1.0;

inline bool in_study_window(int i0) {
  return i0 >= kStudyConflictFirst && i0 <= kStudyConflictLast;
}

// Mean trends: constant baseline; a level change inside the window; a
// triangle rising linearly to the amplitude at the peak index and back.
inline Vec make_trend(const std::string& kind, int n = kStudyN) {
  if (n <= kStudyConflictLast + 1)
    throw std::invalid_argument("trend needs n > " + std::to_string(kStudyConflictLast + 1));
  Vec mu = Vec::Constant(n, kStudyBaseline);
  if (kind == "constant") return mu;
  if (kind == "level-change") {
    for (int i = 0; i < n; ++i)
      if (in_study_window(i)) mu[i] += kStudyAmplitude;
    return mu;
  }
  if (kind == "triangle") {
    const double half = kStudyPeak - (kStudyConflictFirst - 1);  // zero at window edges
    for (int i = 0; i < n; ++i)
      mu[i] += kStudyAmplitude * std::max(0.0, 1.0 - std::abs(i - kStudyPeak) / half);
    return mu;
  }
  throw std::invalid_argument("unknown trend kind: " + kind);
}

struct SimSetting {
  std::string trend = "constant";
  std::string tau_regime = "equal";  // "equal" | "unequal"
  double v = 1.0 / 75.0;

  std::string key() const {
    return "trend=" + trend + ";tau=" + tau_regime + ";v=" + fmt_g17(v) +
           ";n=" + std::to_string(kStudyN);
  }
};

struct SimulatedData {
  Vec mu, eta, y;
  Vec tau;  // effect precision per period
};

inline Vec study_tau(const std::string& regime, int n = kStudyN) {
  Vec tau = Vec::Constant(n, 20.0);
  if (regime == "unequal") {
    for (int i = 0; i < n; ++i)
      if (in_study_window(i)) tau[i] = 10.0;
  } else if (regime != "equal") {
    throw std::invalid_argument("unknown tau regime: " + regime);
  }
  return tau;
}

// One replicate's data; the RNG stream is keyed by (seed, setting, replicate)
// so any replicate is reproducible in isolation and across thread counts.
inline SimulatedData simulate_dataset(const SimSetting& s, int replicate,
                                      std::uint64_t seed) {
  SimulatedData d;
  d.mu = make_trend(s.trend);
  d.tau = study_tau(s.tau_regime);
  const int n = kStudyN;
  Philox rng(seed, fnv1a64(s.key() + ";rep=" + std::to_string(replicate)));
  d.eta.resize(n);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.eta[i] = d.mu[i] + rng.next_normal() / std::sqrt(d.tau[i]);
  for (int i = 0; i < n; ++i) d.y[i] = d.eta[i] + rng.next_normal() * std::sqrt(s.v);
  return d;
}

struct StudyConfig {
  int replicates = 50;
  std::uint64_t seed = 20260815;
  int threads = 0;  // 0 = hardware concurrency
  std::vector<std::string> trends = {"constant", "level-change", "triangle"};
  std::vector<std::string> tau_regimes = {"equal", "unequal"};
  std::vector<double> v_levels = {1.0 / 75.0, 1.0 / 150.0, 1.0 / 300.0};
  PriorConfig priors;
  ExploreOptions explore;
};

struct StudyRow {
  SimSetting setting;
  int replicate = 0;
  bool ok = false;
  std::string error;
  // metrics per model: [0] = smoothed (RW1), [1] = proposed (conflict-adaptive)
  double rmse_m[2] = {0, 0}, dic_m[2] = {0, 0}, ls_m[2] = {0, 0};

  double d_rmse() const { return rmse_m[0] - rmse_m[1]; }
  double d_dic() const { return dic_m[0] - dic_m[1]; }
  double d_ls() const { return ls_m[0] - ls_m[1]; }
};

struct StudyResult {
  StudyConfig config;
  std::vector<StudyRow> rows;  // settings x replicates, fixed nested order
  int n_failed = 0;
};

inline std::vector<int> study_conflict_indices() {
  std::vector<int> c;
  for (int i = kStudyConflictFirst; i <= kStudyConflictLast; ++i) c.push_back(i);
  return c;
}

// Fit one model (adaptive or not) to a replicate and return (rmse, dic, ls).
inline void fit_study_model(const SimulatedData& d, double v, bool adaptive,
                            const PriorConfig& priors, const ExploreOptions& eopt,
                            double* out_rmse, double* out_dic, double* out_ls) {
  ModelSpec spec;
  spec.graph = temporal_graph(kStudyN, study_conflict_indices());
  spec.kind = adaptive ? StructKind::ConflictArw1 : StructKind::Rw1;
  spec.include_slope = false;
  spec.survey_mode = SurveyMode::None;
  spec.priors = priors;
  for (int i = 0; i < kStudyN; ++i) spec.obs.push_back({i, 0, d.y[i], v});
  LatentModel model(std::move(spec));
  HyperExploration ex = explore_hyperparameters(model, eopt);
  *out_rmse = rmse(zeta_posterior_mean(model, ex), d.eta);
  *out_dic = dic(model, ex).dic;
  *out_ls = log_score(model, ex).log_score;
}

inline StudyResult run_study(const StudyConfig& cfg) {
  if (cfg.replicates < 1) throw std::invalid_argument("study needs replicates >= 1");
  StudyResult res;
  res.config = cfg;
  std::vector<SimSetting> settings;
  for (const auto& trend : cfg.trends)
    for (const auto& regime : cfg.tau_regimes)
      for (double v : cfg.v_levels) settings.push_back({trend, regime, v});

  res.rows.resize(settings.size() * cfg.replicates);
  for (size_t s = 0; s < settings.size(); ++s)
    for (int r = 0; r < cfg.replicates; ++r) {
      StudyRow& row = res.rows[s * cfg.replicates + r];
      row.setting = settings[s];
      row.replicate = r;
    }

  auto work = [&](StudyRow& row) {
    try {
      SimulatedData d = simulate_dataset(row.setting, row.replicate, cfg.seed);
      fit_study_model(d, row.setting.v, false, cfg.priors, cfg.explore,
                      &row.rmse_m[0], &row.dic_m[0], &row.ls_m[0]);
      fit_study_model(d, row.setting.v, true, cfg.priors, cfg.explore,
                      &row.rmse_m[1], &row.dic_m[1], &row.ls_m[1]);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, res.rows.size());
  if (n_threads <= 1) {
    for (StudyRow& row : res.rows) work(row);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < res.rows.size(); i = next.fetch_add(1))
          work(res.rows[i]);
      });
    for (auto& t : pool) t.join();
  }
  for (const StudyRow& row : res.rows)
    if (!row.ok) ++res.n_failed;
  return res;
}

// ---- tables -------------------------------------------------------------------

inline std::string study_raw_csv(const StudyResult& res) {
  std::ostringstream out;
  out << "trend,tau_regime,v,replicate,model,rmse,dic,log_score\n";
  static const char* model_names[2] = {"smoothed-direct", "proposed"};
  for (const StudyRow& row : res.rows) {
    if (!row.ok) continue;
    for (int m = 0; m < 2; ++m)
      out << row.setting.trend << ',' << row.setting.tau_regime << ','
          << fmt_g17(row.setting.v) << ',' << row.replicate + 1 << ','
          << model_names[m] << ',' << fmt_g17(row.rmse_m[m]) << ','
          << fmt_g17(row.dic_m[m]) << ',' << fmt_g17(row.ls_m[m]) << '\n';
  }
  return out.str();
}

// Differences are smoothed-direct minus proposed: positive favors the
// adaptive model.
inline std::string study_diffs_csv(const StudyResult& res) {
  std::ostringstream out;
  out << "trend,tau_regime,v,replicate,d_rmse,d_dic,d_log_score\n";
  for (const StudyRow& row : res.rows) {
    if (!row.ok) continue;
    out << row.setting.trend << ',' << row.setting.tau_regime << ','
        << fmt_g17(row.setting.v) << ',' << row.replicate + 1 << ','
        << fmt_g17(row.d_rmse()) << ',' << fmt_g17(row.d_dic()) << ','
        << fmt_g17(row.d_ls()) << '\n';
  }
  return out.str();
}

struct StudyCellSummary {
  SimSetting setting;
  int n_ok = 0, n_failed = 0;
  double med_d_rmse = 0, iqr_d_rmse = 0;
  double med_d_dic = 0, iqr_d_dic = 0;
  double med_d_ls = 0, iqr_d_ls = 0;
};

inline std::vector<StudyCellSummary> study_summaries(const StudyResult& res) {
  std::vector<StudyCellSummary> cells;
  const int R = res.config.replicates;
  for (size_t s = 0; s * R < res.rows.size(); ++s) {
    StudyCellSummary cell;
    cell.setting = res.rows[s * R].setting;
    std::vector<double> dr, dd, dl;
    for (int r = 0; r < R; ++r) {
      const StudyRow& row = res.rows[s * R + r];
      if (!row.ok) {
        ++cell.n_failed;
        continue;
      }
      ++cell.n_ok;
      dr.push_back(row.d_rmse());
      dd.push_back(row.d_dic());
      dl.push_back(row.d_ls());
    }
    auto med_iqr = [](std::vector<double> v, double* med, double* iqr) {
      if (v.empty()) {
        *med = *iqr = std::numeric_limits<double>::quiet_NaN();
        return;
      }
      std::sort(v.begin(), v.end());
      *med = sample_quantile(v, 0.5);
      *iqr = sample_quantile(v, 0.75) - sample_quantile(v, 0.25);
    };
    med_iqr(dr, &cell.med_d_rmse, &cell.iqr_d_rmse);
    med_iqr(dd, &cell.med_d_dic, &cell.iqr_d_dic);
    med_iqr(dl, &cell.med_d_ls, &cell.iqr_d_ls);
    cells.push_back(cell);
  }
  return cells;
}

inline std::string study_summary_csv(const StudyResult& res) {
  std::ostringstream out;
  out << "trend,tau_regime,v,n_ok,n_failed,median_d_rmse,iqr_d_rmse,"
         "median_d_dic,iqr_d_dic,median_d_log_score,iqr_d_log_score\n";
  for (const StudyCellSummary& c : study_summaries(res))
    out << c.setting.trend << ',' << c.setting.tau_regime << ','
        << fmt_g17(c.setting.v) << ',' << c.n_ok << ',' << c.n_failed << ','
        << fmt_g17(c.med_d_rmse) << ',' << fmt_g17(c.iqr_d_rmse) << ','
        << fmt_g17(c.med_d_dic) << ',' << fmt_g17(c.iqr_d_dic) << ','
        << fmt_g17(c.med_d_ls) << ',' << fmt_g17(c.iqr_d_ls) << '\n';
  return out.str();
}

}  // namespace agmrf
