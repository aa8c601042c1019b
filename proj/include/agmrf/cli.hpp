#pragma once
// Command-line front end: subcommands `structure`, `prior`, `fit`, `simulate`,
// `study`. Every run writes a manifest.json (resolved config, input digests,
// wall time) next to its outputs. Exit codes: 0 ok, 2 usage, 3 validation,
// 4 numerical failure. All floating-point CSV/JSON output uses 17 significant
// digits so reruns with identical inputs are byte-identical.

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agmrf/inference.hpp"
#include "agmrf/io.hpp"
#include "agmrf/model.hpp"
#include "agmrf/simstudy.hpp"

namespace agmrf::cli {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

struct RunContext {
  std::string out_dir;
  Json config = Json::object();
  Json inputs = Json::object();  // path -> fnv1a digest
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::string read_input(const std::string& path) {
    std::string text = read_text_file(path);
    inputs[path] = fnv1a_hex(text);
    return text;
  }

  void write_output(const std::string& name, const std::string& content) const {
    write_text_file((std::filesystem::path(out_dir) / name).string(), content);
  }

  void finish(const std::string& subcommand) const {
    Json m;
    m["subcommand"] = subcommand;
    m["version"] = kVersion;
    m["config"] = config;
    m["inputs"] = inputs;
    m["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_output("manifest.json", m.dump(2) + "\n");
  }
};

inline void prepare_outdir(RunContext& ctx, const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--out directory is required");
  std::filesystem::create_directories(dir);
  ctx.out_dir = dir;
}

// ---- shared loaders ----------------------------------------------------------

// A graph file is either a temporal config (JSON object) or an areal
// adjacency document.
inline AreaGraph load_graph(RunContext& ctx, const std::string& graph_path,
                            const std::string& countries_path) {
  std::string text = ctx.read_input(graph_path);
  std::string t = trim(text);
  AreaGraph g = (!t.empty() && t[0] == '{') ? temporal_graph_from_json(text)
                                            : areal_graph_from_adjacency(text);
  if (!countries_path.empty()) {
    if (g.kind != GraphKind::Areal)
      throw std::invalid_argument("--countries applies to areal graphs only");
    attach_countries_csv(g, ctx.read_input(countries_path));
  }
  return g;
}

inline StructKind resolve_model_kind(const AreaGraph& g, const std::string& model) {
  if (g.kind == GraphKind::Temporal) {
    if (model == "smoothed-direct") return StructKind::Rw1;
    if (model == "proposed") return StructKind::ConflictArw1;
    if (model == "proposed-general")
      throw std::invalid_argument("proposed-general requires an areal graph with countries");
  } else {
    if (model == "smoothed-direct") return StructKind::Icar;
    if (model == "proposed") return StructKind::MulticountryAicar;
    if (model == "proposed-general") return StructKind::GeneralMulticountry;
  }
  throw std::invalid_argument("unknown model '" + model +
                              "' (smoothed-direct | proposed | proposed-general)");
}

inline std::string kind_name(StructKind k) {
  switch (k) {
    case StructKind::Rw1: return "rw1";
    case StructKind::Icar: return "icar";
    case StructKind::ConflictArw1: return "conflict-arw1";
    case StructKind::MulticountryAicar: return "multicountry-aicar";
    case StructKind::GeneralMulticountry: return "general-multicountry";
  }
  return "?";
}

inline StructKind kind_from_name(const std::string& s) {
  if (s == "rw1") return StructKind::Rw1;
  if (s == "icar") return StructKind::Icar;
  if (s == "conflict-arw1") return StructKind::ConflictArw1;
  if (s == "multicountry-aicar") return StructKind::MulticountryAicar;
  if (s == "general-multicountry") return StructKind::GeneralMulticountry;
  throw std::invalid_argument("unknown structure kind: " + s);
}

inline SurveyMode survey_mode_from_name(const std::string& s) {
  if (s == "random") return SurveyMode::Random;
  if (s == "fixed") return SurveyMode::Fixed;
  if (s == "none") return SurveyMode::None;
  throw std::invalid_argument("unknown survey mode: " + s + " (random | fixed | none)");
}

inline void apply_priors_json(PriorConfig& pc, const Json& j) {
  pc.u_tau = j.value("u_tau", pc.u_tau);
  pc.a_tau = j.value("a_tau", pc.a_tau);
  pc.u_phi = j.value("u_phi", pc.u_phi);
  pc.a_phi = j.value("a_phi", pc.a_phi);
  pc.u_theta = j.value("u_theta", pc.u_theta);
  pc.a_theta = j.value("a_theta", pc.a_theta);
  pc.u_nu = j.value("u_nu", pc.u_nu);
  pc.a_nu = j.value("a_nu", pc.a_nu);
  pc.u_psi = j.value("u_psi", pc.u_psi);
  pc.a_psi = j.value("a_psi", pc.a_psi);
}

inline Json priors_json(const PriorConfig& pc) {
  Json j;
  j["u_tau"] = pc.u_tau;
  j["a_tau"] = pc.a_tau;
  j["u_phi"] = pc.u_phi;
  j["a_phi"] = pc.a_phi;
  j["u_theta"] = pc.u_theta;
  j["a_theta"] = pc.a_theta;
  j["u_nu"] = pc.u_nu;
  j["a_nu"] = pc.a_nu;
  j["u_psi"] = pc.u_psi;
  j["a_psi"] = pc.a_psi;
  return j;
}

// ---- CSV emitters --------------------------------------------------------------

inline std::string summary_csv(const std::string& id_header,
                               const std::vector<std::string>& ids,
                               const std::vector<MarginalSummary>& s) {
  std::ostringstream out;
  out << id_header << ",Mean,SD,Q025,Median,Q975\n";
  for (size_t i = 0; i < s.size(); ++i)
    out << ids[i] << ',' << fmt_g17(s[i].mean) << ',' << fmt_g17(s[i].sd) << ','
        << fmt_g17(s[i].q025) << ',' << fmt_g17(s[i].median) << ','
        << fmt_g17(s[i].q975) << '\n';
  return out.str();
}

inline std::string hyper_csv(const std::vector<HyperSummary>& hs) {
  std::ostringstream out;
  out << "Parameter,Mean,SD,Q025,Median,Q975,Mode\n";
  for (const auto& h : hs)
    out << h.name << ',' << fmt_g17(h.mean) << ',' << fmt_g17(h.sd) << ','
        << fmt_g17(h.q025) << ',' << fmt_g17(h.median) << ',' << fmt_g17(h.q975)
        << ',' << fmt_g17(h.mode) << '\n';
  return out.str();
}

// ---- structure subcommand --------------------------------------------------------

struct StructureArgs {
  std::string graph_path, countries_path, kind = "auto", out_dir;
};

inline int cmd_structure(const StructureArgs& a) {
  RunContext ctx;
  prepare_outdir(ctx, a.out_dir);
  AreaGraph g = load_graph(ctx, a.graph_path, a.countries_path);
  StructKind kind;
  if (a.kind == "auto") {
    kind = g.kind == GraphKind::Temporal
               ? (g.conflict.empty() ? StructKind::Rw1 : StructKind::ConflictArw1)
               : (g.country.empty() ? StructKind::Icar : StructKind::MulticountryAicar);
  } else {
    kind = kind_from_name(a.kind);
  }
  std::vector<SpMat> parts = structure_parts_for(g, kind);
  ScaleResult sc = scale_parts(parts);
  ConnectivityReport conn = connectivity_report(g);

  std::ostringstream pcsv;
  pcsv << "part,row,col,value,scaled_value\n";
  for (size_t l = 0; l < parts.size(); ++l)
    for (int j = 0; j < parts[l].outerSize(); ++j)
      for (SpMat::InnerIterator it(parts[l], j); it; ++it)
        pcsv << (l + 1) << ',' << (it.row() + 1) << ',' << (it.col() + 1) << ','
             << fmt_g17(it.value()) << ',' << fmt_g17(sc.sigma2 * it.value()) << '\n';
  ctx.write_output("structure_parts.csv", pcsv.str());

  std::ostringstream mv;
  mv << "area,marginal_variance,scaled_marginal_variance\n";
  for (int i = 0; i < g.n; ++i)
    mv << (i + 1) << ',' << fmt_g17(sc.marginal_var[i]) << ','
       << fmt_g17(sc.marginal_var[i] / sc.sigma2) << '\n';
  ctx.write_output("marginal_variance.csv", mv.str());

  Json info;
  info["kind"] = kind_name(kind);
  info["n"] = g.n;
  info["sigma2"] = sc.sigma2;
  info["n_parts"] = parts.size();
  Json pj = Json::array();
  for (size_t l = 0; l < parts.size(); ++l)
    pj.push_back({{"part", l + 1}, {"nonzeros", parts[l].nonZeros()}});
  info["parts"] = pj;
  info["connectivity"] = {{"connected", conn.connected},
                          {"n_components", conn.n_components},
                          {"reference_class_components", conn.r1_components},
                          {"reference_class_edges", conn.r1_edges},
                          {"shock_class_edges", conn.r2_edges}};
  ctx.write_output("structure.json", info.dump(2) + "\n");

  ctx.config = {{"graph", a.graph_path},
                {"countries", a.countries_path},
                {"kind", kind_name(kind)},
                {"out", a.out_dir}};
  ctx.finish("structure");
  return 0;
}

// ---- prior subcommand -------------------------------------------------------------

struct PriorArgs {
  std::string which;  // theta | phi | tau
  std::string graph_path, countries_path, model = "proposed", out_dir;
  double u = 0.0, alpha = 0.0;  // 0 = use the parameter's default
};

inline int cmd_prior(const PriorArgs& a) {
  RunContext ctx;
  prepare_outdir(ctx, a.out_dir);
  PriorConfig defaults;
  Json lam;
  lam["parameter"] = a.which;

  if (a.which == "tau") {
    const double u = a.u > 0 ? a.u : defaults.u_tau;
    const double alpha = a.alpha > 0 ? a.alpha : defaults.a_tau;
    PcPrecisionPrior p = pc_precision_calibrate(u, alpha);
    std::ostringstream csv;
    csv << "tau,density\n";
    for (int i = 0; i <= 240; ++i) {
      double tau = std::pow(10.0, -4.0 + i / 30.0);
      csv << fmt_g17(tau) << ',' << fmt_g17(pc_precision_pdf(p, tau)) << '\n';
    }
    ctx.write_output("tau_prior.csv", csv.str());
    lam["lambda"] = p.lambda;
    lam["u"] = u;
    lam["alpha"] = alpha;
    lam["median"] = pc_precision_quantile(p, 0.5);
  } else {
    if (a.graph_path.empty())
      throw std::invalid_argument("prior " + a.which + " requires --graph");
    AreaGraph g = load_graph(ctx, a.graph_path, a.countries_path);
    StructKind kind = resolve_model_kind(g, a.model);
    StructureParts sp = make_scaled_parts(g, structure_parts_for(g, kind));
    SpMat scaled_sum = sp.scaled[0];
    for (size_t l = 1; l < sp.scaled.size(); ++l) scaled_sum += sp.scaled[l];

    if (a.which == "phi") {
      const double u = a.u > 0 ? a.u : defaults.u_phi;
      const double alpha = a.alpha > 0 ? a.alpha : defaults.a_phi;
      PcPhiPrior p = pc_phi_calibrate(bym2_gamma_tilde(scaled_sum), u, alpha);
      std::ostringstream csv;
      csv << "phi,distance,density\n";
      for (int i = 1; i < 200; ++i) {
        double phi = i / 200.0;
        csv << fmt_g17(phi) << ',' << fmt_g17(d_phi(phi, p.gamma_tilde)) << ','
            << fmt_g17(pc_phi_pdf(p, phi)) << '\n';
      }
      ctx.write_output("phi_prior.csv", csv.str());
      lam["lambda"] = p.lambda;
      lam["u"] = u;
      lam["alpha"] = alpha;
    } else if (a.which == "theta") {
      if (!kind_is_adaptive(kind))
        throw std::invalid_argument("theta prior requires an adaptive model");
      const double u = a.u > 0 ? a.u : defaults.u_theta;
      const double alpha = a.alpha > 0 ? a.alpha : defaults.a_theta;
      SpMat ref = sp.scaled[0];
      for (size_t l = 1; l + 1 < sp.scaled.size(); ++l) ref += sp.scaled[l];
      Vec eps = theta_eigenvalues(ref, sp.scaled.back(), 0);
      PcThetaPrior p = pc_theta_calibrate(eps, u, alpha);
      std::ostringstream csv;
      csv << "theta,distance,density\n";
      for (int i = 1; i <= 200; ++i) {
        double theta = i / 200.0;
        csv << fmt_g17(theta) << ',' << fmt_g17(d_theta(theta, p.eps)) << ','
            << fmt_g17(pc_theta_pdf(p, theta)) << '\n';
      }
      ctx.write_output("theta_prior.csv", csv.str());
      lam["lambda"] = p.lambda;
      lam["u"] = u;
      lam["alpha"] = alpha;
      lam["n_shock_eigenvalues"] = p.eps.size();
      lam["interval95"] = {pc_theta_quantile(p, 0.025), pc_theta_quantile(p, 0.975)};
    } else {
      throw std::invalid_argument("unknown prior parameter: " + a.which);
    }
  }
  ctx.write_output("lambda.json", lam.dump(2) + "\n");
  ctx.config = {{"parameter", a.which}, {"graph", a.graph_path},
                {"countries", a.countries_path}, {"model", a.model},
                {"U", a.u}, {"alpha", a.alpha}, {"out", a.out_dir}};
  ctx.finish("prior");
  return 0;
}

// ---- fit subcommand ----------------------------------------------------------------

struct FitArgs {
  std::string data_path, graph_path, countries_path, truth_path, config_path, out_dir;
  std::string model, survey_mode;
  bool slope = false;
  bool slope_set = false, model_set = false, survey_set = false, draws_set = false,
       seed_set = false;
  std::optional<double> fix_theta;
  int draws = 1000;
  std::uint64_t seed = 1;
};

struct FitConfig {
  std::string model = "smoothed-direct";
  bool slope = false;
  std::string survey_mode = "random";
  std::optional<double> fix_theta;
  int draws = 1000;
  std::uint64_t seed = 1;
  PriorConfig priors;
  ExploreOptions explore;
};

// Config precedence: defaults < JSON config file < explicit CLI flags.
inline FitConfig resolve_fit_config(const FitArgs& a, RunContext& ctx) {
  FitConfig cfg;
  if (!a.config_path.empty()) {
    Json j;
    try {
      j = Json::parse(ctx.read_input(a.config_path));
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("fit config is not valid JSON: ") + e.what());
    }
    cfg.model = j.value("model", cfg.model);
    cfg.slope = j.value("slope", cfg.slope);
    cfg.survey_mode = j.value("survey_mode", cfg.survey_mode);
    if (j.contains("fix_theta") && !j["fix_theta"].is_null())
      cfg.fix_theta = j["fix_theta"].get<double>();
    cfg.draws = j.value("draws", cfg.draws);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("priors")) apply_priors_json(cfg.priors, j["priors"]);
    if (j.contains("explore")) {
      cfg.explore.delta = j["explore"].value("delta", cfg.explore.delta);
      cfg.explore.dz = j["explore"].value("dz", cfg.explore.dz);
    }
  }
  if (a.model_set) cfg.model = a.model;
  if (a.slope_set) cfg.slope = a.slope;
  if (a.survey_set) cfg.survey_mode = a.survey_mode;
  if (a.fix_theta) cfg.fix_theta = a.fix_theta;
  if (a.draws_set) cfg.draws = a.draws;
  if (a.seed_set) cfg.seed = a.seed;
  if (cfg.draws < 1000) throw std::invalid_argument("fit needs --draws >= 1000");
  return cfg;
}

// Truth CSV for simulation checks: header with area_id and eta columns.
inline Vec parse_truth_csv(const std::string& text, int n_areas) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("truth CSV is empty");
  auto header = split_csv(trim(line));
  int col_area = -1, col_eta = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == "area_id") col_area = static_cast<int>(c);
    if (trim(header[c]) == "eta") col_eta = static_cast<int>(c);
  }
  if (col_area < 0 || col_eta < 0)
    throw std::invalid_argument("truth CSV needs area_id and eta columns");
  Vec eta = Vec::Constant(n_areas, std::numeric_limits<double>::quiet_NaN());
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    int a = static_cast<int>(parse_long(cells.at(col_area), "truth area_id"));
    if (a < 1 || a > n_areas) throw std::invalid_argument("truth area_id outside 1..N");
    eta[a - 1] = parse_double(cells.at(col_eta), "truth eta");
  }
  for (int i = 0; i < n_areas; ++i)
    if (!std::isfinite(eta[i]))
      throw std::invalid_argument("truth CSV missing area " + std::to_string(i + 1));
  return eta;
}

inline int cmd_fit(const FitArgs& a) {
  RunContext ctx;
  prepare_outdir(ctx, a.out_dir);
  FitConfig cfg = resolve_fit_config(a, ctx);
  AreaGraph g = load_graph(ctx, a.graph_path, a.countries_path);

  ModelSpec spec;
  spec.kind = resolve_model_kind(g, cfg.model);
  spec.graph = std::move(g);
  spec.include_slope = cfg.slope;
  spec.survey_mode = survey_mode_from_name(cfg.survey_mode);
  spec.priors = cfg.priors;
  spec.fix_theta = cfg.fix_theta;
  DataSet data = parse_data_csv(ctx.read_input(a.data_path), spec.graph.n);
  spec.obs = std::move(data.obs);
  spec.survey_labels = std::move(data.survey_labels);

  LatentModel model(std::move(spec));
  HyperExploration ex = explore_hyperparameters(model, cfg.explore);

  ctx.write_output("latent.csv",
                   summary_csv("Parameter", model.latent_names(), latent_marginals(model, ex)));

  std::vector<std::string> area_ids;
  for (int i = 0; i < model.layout().n; ++i) area_ids.push_back(std::to_string(i + 1));
  ctx.write_output("u5mr.csv", summary_csv("Area", area_ids,
                                           u5mr_summaries(model, ex, {cfg.draws, cfg.seed})));
  ctx.write_output("hyper.csv", hyper_csv(hyper_summaries(model, ex)));

  DicResult dd = dic(model, ex);
  LogScoreResult ls = log_score(model, ex);
  Json metrics;
  metrics["dic"] = dd.dic;
  metrics["p_d"] = dd.p_d;
  metrics["mean_deviance"] = dd.mean_deviance;
  metrics["log_score"] = ls.log_score;
  metrics["cpo_refit_fallbacks"] = ls.n_refits;
  metrics["n_obs"] = model.y().size();
  metrics["n_grid_points"] = ex.grid.size();
  metrics["n_posterior_evaluations"] = ex.n_evals;
  metrics["used_ccd"] = ex.used_ccd;
  metrics["log_evidence_at_mode"] = ex.log_evidence_mode;
  if (!a.truth_path.empty()) {
    Vec truth = parse_truth_csv(ctx.read_input(a.truth_path), model.layout().n);
    metrics["rmse"] = rmse(zeta_posterior_mean(model, ex), truth);
  }
  ctx.write_output("metrics.json", metrics.dump(2) + "\n");

  if (model.theta_prior()) {
    ThetaDensityTable tab = theta_density_table(model, ex);
    std::ostringstream csv;
    csv << "theta,prior_density,posterior_density\n";
    for (size_t i = 0; i < tab.theta.size(); ++i)
      csv << fmt_g17(tab.theta[i]) << ',' << fmt_g17(tab.prior[i]) << ','
          << fmt_g17(tab.posterior[i]) << '\n';
    ctx.write_output("prior_posterior_theta.csv", csv.str());
  }

  ctx.config = {{"data", a.data_path},
                {"graph", a.graph_path},
                {"countries", a.countries_path},
                {"truth", a.truth_path},
                {"model", cfg.model},
                {"slope", cfg.slope},
                {"survey_mode", cfg.survey_mode},
                {"fix_theta", cfg.fix_theta ? Json(*cfg.fix_theta) : Json(nullptr)},
                {"draws", cfg.draws},
                {"seed", cfg.seed},
                {"priors", priors_json(cfg.priors)},
                {"explore", {{"delta", cfg.explore.delta}, {"dz", cfg.explore.dz}}},
                {"out", a.out_dir}};
  ctx.finish("fit");
  return 0;
}

// ---- simulate subcommand --------------------------------------------------------------

struct SimulateArgs {
  std::string trend = "constant", tau_regime = "equal", out_dir;
  double v = 1.0 / 75.0;
  int replicate = 1;  // 1-based
  std::uint64_t seed = 20260815;
};

inline int cmd_simulate(const SimulateArgs& a) {
  RunContext ctx;
  prepare_outdir(ctx, a.out_dir);
  if (a.replicate < 1) throw std::invalid_argument("--replicate is 1-based");
  if (!(a.v > 0)) throw std::invalid_argument("--v must be positive");
  SimSetting s{a.trend, a.tau_regime, a.v};
  SimulatedData d = simulate_dataset(s, a.replicate - 1, a.seed);

  std::ostringstream data;
  data << "area_id,survey_id,logit_est,variance\n";
  for (int i = 0; i < kStudyN; ++i)
    data << (i + 1) << ",1," << fmt_g17(d.y[i]) << ',' << fmt_g17(a.v) << '\n';
  ctx.write_output("data.csv", data.str());

  std::ostringstream truth;
  truth << "area_id,mu,eta\n";
  for (int i = 0; i < kStudyN; ++i)
    truth << (i + 1) << ',' << fmt_g17(d.mu[i]) << ',' << fmt_g17(d.eta[i]) << '\n';
  ctx.write_output("truth.csv", truth.str());

  std::ostringstream graph;
  Json gj;
  gj["n_periods"] = kStudyN;
  Json cy = Json::array();
  for (int c : study_conflict_indices()) cy.push_back(c + 1);
  gj["conflict_years"] = cy;  // unlabeled periods: 1-based indices
  ctx.write_output("graph.json", gj.dump(2) + "\n");

  ctx.config = {{"trend", a.trend}, {"tau_regime", a.tau_regime}, {"v", a.v},
                {"replicate", a.replicate}, {"seed", a.seed}, {"out", a.out_dir}};
  ctx.finish("simulate");
  return 0;
}

// ---- study subcommand ------------------------------------------------------------------

struct StudyArgs {
  std::string config_path, out_dir;
  int replicates = 0;     // 0 = from config/default
  int threads = -1;       // -1 = from config/default
  std::uint64_t seed = 0;
  bool seed_set = false;
};

inline int cmd_study(const StudyArgs& a) {
  RunContext ctx;
  prepare_outdir(ctx, a.out_dir);
  StudyConfig cfg;
  if (!a.config_path.empty()) {
    Json j;
    try {
      j = Json::parse(ctx.read_input(a.config_path));
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("study config is not valid JSON: ") + e.what());
    }
    cfg.replicates = j.value("replicates", cfg.replicates);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("trends")) cfg.trends = j["trends"].get<std::vector<std::string>>();
    if (j.contains("tau_regimes"))
      cfg.tau_regimes = j["tau_regimes"].get<std::vector<std::string>>();
    if (j.contains("v_levels")) cfg.v_levels = j["v_levels"].get<std::vector<double>>();
    if (j.contains("priors")) apply_priors_json(cfg.priors, j["priors"]);
  }
  if (a.replicates > 0) cfg.replicates = a.replicates;
  if (a.threads >= 0) cfg.threads = a.threads;
  if (a.seed_set) cfg.seed = a.seed;

  StudyResult res = run_study(cfg);
  ctx.write_output("study_raw.csv", study_raw_csv(res));
  ctx.write_output("study_diffs.csv", study_diffs_csv(res));
  ctx.write_output("study_summary.csv", study_summary_csv(res));
  if (res.n_failed > 0)
    std::cerr << "warning: " << res.n_failed << " replicate fit(s) failed and were excluded\n";

  ctx.config = {{"config", a.config_path},
                {"replicates", cfg.replicates},
                {"seed", cfg.seed},
                {"threads", cfg.threads},
                {"trends", cfg.trends},
                {"tau_regimes", cfg.tau_regimes},
                {"v_levels", cfg.v_levels},
                {"priors", priors_json(cfg.priors)},
                {"failed_replicates", res.n_failed},
                {"out", a.out_dir}};
  ctx.finish("study");
  return 0;
}

// ---- dispatch ---------------------------------------------------------------------------

inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Adaptive-GMRF small-area smoothing of survey direct estimates"};
  app.require_subcommand(1);

  StructureArgs st;
  auto* c_st = app.add_subcommand("structure", "Assemble and scale structure matrices");
  c_st->add_option("--graph", st.graph_path, "Temporal config JSON or areal adjacency file")
      ->required();
  c_st->add_option("--countries", st.countries_path, "Country membership CSV (areal)");
  c_st->add_option("--kind", st.kind,
                   "auto|rw1|icar|conflict-arw1|multicountry-aicar|general-multicountry");
  c_st->add_option("--out", st.out_dir, "Output directory")->required();

  PriorArgs pr;
  auto* c_pr = app.add_subcommand("prior", "Calibrate and tabulate a penalized-complexity prior");
  c_pr->add_option("parameter", pr.which, "theta | phi | tau")->required();
  c_pr->add_option("--graph", pr.graph_path, "Graph file (required for theta/phi)");
  c_pr->add_option("--countries", pr.countries_path, "Country membership CSV (areal)");
  c_pr->add_option("--model", pr.model, "smoothed-direct | proposed | proposed-general");
  c_pr->add_option("--U,-U", pr.u, "Tail threshold");
  c_pr->add_option("--alpha", pr.alpha, "Tail probability");
  c_pr->add_option("--out", pr.out_dir, "Output directory")->required();

  FitArgs ft;
  auto* c_ft = app.add_subcommand("fit", "Fit a model to direct estimates");
  c_ft->add_option("--data", ft.data_path, "Observation CSV")->required();
  c_ft->add_option("--graph", ft.graph_path, "Temporal config JSON or areal adjacency file")
      ->required();
  c_ft->add_option("--countries", ft.countries_path, "Country membership CSV (areal)");
  auto* o_model =
      c_ft->add_option("--model", ft.model, "smoothed-direct | proposed | proposed-general");
  auto* o_slope = c_ft->add_flag("--slope", ft.slope, "Include a linear period trend");
  auto* o_survey = c_ft->add_option("--survey-mode", ft.survey_mode, "random | fixed | none");
  c_ft->add_option("--fix-theta", [&ft](const std::vector<std::string>& v) {
        ft.fix_theta = parse_double(v.at(0), "--fix-theta");
        return true;
      },
      "Fix theta at a value in (0,1] instead of exploring it");
  auto* o_draws = c_ft->add_option("--draws", ft.draws, "Mortality summary draws (>= 1000)");
  auto* o_seed = c_ft->add_option("--seed", ft.seed, "Seed for mortality summary draws");
  c_ft->add_option("--truth", ft.truth_path, "Truth CSV (area_id,eta) for RMSE");
  c_ft->add_option("--config", ft.config_path, "JSON config (CLI flags take precedence)");
  c_ft->add_option("--out", ft.out_dir, "Output directory")->required();

  SimulateArgs sm;
  auto* c_sm = app.add_subcommand("simulate", "Generate one synthetic dataset");
  c_sm->add_option("--trend", sm.trend, "constant | level-change | triangle");
  c_sm->add_option("--tau-regime", sm.tau_regime, "equal | unequal");
  c_sm->add_option("--v", sm.v, "Observation variance");
  c_sm->add_option("--replicate", sm.replicate, "Replicate number (1-based)");
  c_sm->add_option("--seed", sm.seed, "Study seed");
  c_sm->add_option("--out", sm.out_dir, "Output directory")->required();

  StudyArgs sd;
  auto* c_sd = app.add_subcommand("study", "Run the paired simulation study");
  c_sd->add_option("--config", sd.config_path, "Study config JSON");
  c_sd->add_option("--replicates", sd.replicates, "Replicates per setting");
  c_sd->add_option("--threads", sd.threads, "Worker threads (0 = all cores)");
  auto* o_sseed = c_sd->add_option("--seed", sd.seed, "Study seed");
  c_sd->add_option("--out", sd.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
    ft.model_set = o_model->count() > 0;
    ft.slope_set = o_slope->count() > 0;
    ft.survey_set = o_survey->count() > 0;
    ft.draws_set = o_draws->count() > 0;
    ft.seed_set = o_seed->count() > 0;
    sd.seed_set = o_sseed->count() > 0;
    if (c_st->parsed()) return cmd_structure(st);
    if (c_pr->parsed()) return cmd_prior(pr);
    if (c_ft->parsed()) return cmd_fit(ft);
    if (c_sm->parsed()) return cmd_simulate(sm);
    if (c_sd->parsed()) return cmd_study(sd);
    return 2;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  }
}

inline int dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("agmrf");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : full) argv.push_back(s.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace agmrf::cli
