#pragma once
// The smoothed-direct latent model and its adaptive variants.
//
// Latent vector z = [ mu | beta? | nu_1..nu_S? | b_1..b_N | x*_1..x*_N ] with
//   eta_is = mu + t_i beta + nu_s + b_i      (t_i = centered period index)
//   b = (sqrt(1-phi) v + sqrt(phi) x*)/sqrt(tau_b),  x* the scaled structured
// field. Marginalizing v gives the joint precision of w = (b, x*):
//   S = [ tau_b/(1-phi) I              -sqrt(phi tau_b)/(1-phi) I ]
//       [ -sqrt(phi tau_b)/(1-phi) I    Qstruct + phi/(1-phi) I   ]
// where Qstruct = sigma2 * sum_l coef_l R_l (coef 1 for the reference class,
// theta for the shock class, psi_m per country in the general model). The
// parts are summed before scaling so that at theta = psi = 1 the assembled
// block is bit-identical to the non-adaptive structure.
//
// x* carries a sum-to-zero constraint (it spans the one-dimensional null space
// of the joint prior); fixed effects get a vague N(0, 1/0.001) prior; survey
// effects are exchangeable N(0, 1/tau_nu) with a PC prior on tau_nu, or fixed
// effects with a sum-to-zero constraint, or absent.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agmrf/gaussian.hpp"
#include "agmrf/graph.hpp"
#include "agmrf/priors.hpp"
#include "agmrf/structure.hpp"

namespace agmrf {

using SpMatRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class StructKind { Rw1, Icar, ConflictArw1, MulticountryAicar, GeneralMulticountry };
enum class SurveyMode { Random, Fixed, None };

inline bool kind_is_adaptive(StructKind k) {
  return k != StructKind::Rw1 && k != StructKind::Icar;
}

struct Observation {
  int area = 0;    // 0-based
  int survey = 0;  // 0-based, compact
  double y = 0.0;  // logit-scale direct estimate
  double v = 1.0;  // design-based variance of y
};

struct PriorConfig {
  double u_tau = 1.0, a_tau = 0.01;          // P(1/sqrt(tau_b) > 1) = 0.01
  double u_phi = 0.5, a_phi = 2.0 / 3.0;     // P(phi < 0.5) = 2/3
  double u_theta = 0.75, a_theta = 0.75;     // P(theta < 0.75) = 0.75
  double u_nu = 1.0, a_nu = 0.01;            // P(sigma_nu > 1) = 0.01
  double u_psi = 1.0, a_psi = 0.01;          // psi ratios, same form as precisions
};

struct ModelSpec {
  AreaGraph graph;
  StructKind kind = StructKind::Rw1;
  bool include_slope = false;
  SurveyMode survey_mode = SurveyMode::Random;
  std::vector<Observation> obs;
  std::vector<long> survey_labels;  // reporting labels; defaults to 1..S
  PriorConfig priors;
  std::optional<double> fix_theta;  // point mass instead of the theta prior
  double fixed_effect_precision = 1e-3;
  int gdet_removed_index = 0;  // row/col deleted in generalized-determinant machinery
};

struct LatentLayout {
  int n = 0;          // areas/periods
  int i_mu = 0;
  int i_beta = -1;    // -1 when no slope
  int i_nu = -1;      // -1 when no survey block
  int n_nu = 0;
  int i_b = 0;
  int i_x = 0;
  int dim = 0;
  double t_center = 0.0;  // (N+1)/2, 1-based period index centering

  double t_cov(int area0) const { return (area0 + 1) - t_center; }
};

// Joint precision of w = (b, x*) given an assembled structured block.
inline SpMat bym2_joint_precision(const SpMat& structured, double tau_b, double phi) {
  const int n = static_cast<int>(structured.rows());
  if (!(tau_b > 0)) throw std::invalid_argument("tau_b must be positive");
  if (!(phi > 0) || !(phi < 1)) throw std::invalid_argument("phi must lie strictly in (0,1)");
  const double a = tau_b / (1.0 - phi);
  const double c = -std::sqrt(phi * tau_b) / (1.0 - phi);
  const double e = phi / (1.0 - phi);
  std::vector<Triplet> t;
  t.reserve(structured.nonZeros() + 4 * n);
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, a);
    t.emplace_back(i, n + i, c);
    t.emplace_back(n + i, i, c);
    t.emplace_back(n + i, n + i, e);
  }
  for (int j = 0; j < structured.outerSize(); ++j)
    for (SpMat::InnerIterator it(structured, j); it; ++it)
      t.emplace_back(n + it.row(), n + it.col(), it.value());
  SpMat s(2 * n, 2 * n);
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

struct HyperValues {
  double tau_b = 1.0, phi = 0.5, theta = 1.0, tau_nu = 1.0;
  std::vector<double> psi;  // per-country coefficients, psi[0] = 1 (reference)
};

inline std::vector<SpMat> structure_parts_for(const AreaGraph& g, StructKind kind) {
  switch (kind) {
    case StructKind::Rw1: return {rw1_structure(g.n)};
    case StructKind::Icar: return {icar_structure(g)};
    case StructKind::ConflictArw1: return conflict_arw1_parts(g);
    case StructKind::MulticountryAicar: return multicountry_aicar_parts(g);
    case StructKind::GeneralMulticountry: return general_multicountry_parts(g);
  }
  throw std::invalid_argument("unknown structure kind");
}

class LatentModel {
 public:
  explicit LatentModel(ModelSpec spec) : spec_(std::move(spec)) {
    validate_spec();
    build_structure();
    build_layout();
    build_observation_pieces();
    build_priors();
    build_gdet_machinery();
    build_hyper_axes();
  }

  const ModelSpec& spec() const { return spec_; }
  const LatentLayout& layout() const { return layout_; }
  const StructureParts& structure() const { return structure_; }
  const SpMat& design() const { return A_; }
  const Vec& y() const { return y_; }
  const Vec& V() const { return V_; }
  const Mat& constraints() const { return C_; }
  SurveyMode effective_survey_mode() const { return survey_mode_; }
  const std::optional<PcThetaPrior>& theta_prior() const { return theta_prior_; }
  const PcPhiPrior& phi_prior() const { return phi_prior_; }

  // ---- hyperparameter coordinates -----------------------------------------
  // z = (log tau_b, logit phi [, logit theta] [, log psi_2..psi_M] [, log tau_nu])

  int n_hyper() const { return static_cast<int>(axes_.size()); }
  const std::vector<std::string>& hyper_names() const { return names_; }

  Vec z_init() const {
    Vec z(n_hyper());
    for (int i = 0; i < n_hyper(); ++i) {
      switch (axes_[i]) {
        case Axis::TauB: z[i] = std::log(pc_precision_quantile(tau_prior_, 0.5)); break;
        case Axis::Phi: z[i] = 0.0; break;
        case Axis::Theta: z[i] = std::log(0.75 / 0.25); break;
        case Axis::Psi: z[i] = 0.0; break;
        case Axis::TauNu: z[i] = std::log(pc_precision_quantile(nu_prior_, 0.5)); break;
      }
    }
    return z;
  }

  HyperValues natural(const Vec& z) const {
    HyperValues h;
    h.theta = spec_.fix_theta.value_or(1.0);
    h.psi.assign(std::max(1, n_countries_), 1.0);
    for (int i = 0; i < n_hyper(); ++i) {
      switch (axes_[i]) {
        case Axis::TauB: h.tau_b = std::exp(z[i]); break;
        case Axis::Phi: h.phi = expit(z[i]); break;
        case Axis::Theta: h.theta = expit(z[i]); break;
        case Axis::Psi: h.psi[psi_country_[i]] = std::exp(z[i]); break;
        case Axis::TauNu: h.tau_nu = std::exp(z[i]); break;
      }
    }
    return h;
  }

  // Log prior density of z (parameter priors plus transform Jacobians).
  double log_hyper_prior(const Vec& z) const {
    const HyperValues h = natural(z);
    double lp = 0.0;
    for (int i = 0; i < n_hyper(); ++i) {
      switch (axes_[i]) {
        case Axis::TauB:
          lp += pc_precision_logpdf(tau_prior_, h.tau_b) + std::log(h.tau_b);
          break;
        case Axis::Phi:
          lp += pc_phi_logpdf(phi_prior_, h.phi) + std::log(h.phi) + std::log1p(-h.phi);
          break;
        case Axis::Theta:
          lp += pc_theta_logpdf(*theta_prior_, h.theta) + std::log(h.theta) + std::log1p(-h.theta);
          break;
        case Axis::Psi:
          lp += pc_precision_logpdf(psi_prior_, h.psi[psi_country_[i]]) +
                std::log(h.psi[psi_country_[i]]);
          break;
        case Axis::TauNu:
          lp += pc_precision_logpdf(nu_prior_, h.tau_nu) + std::log(h.tau_nu);
          break;
      }
    }
    return lp;
  }

  // ---- model assembly ------------------------------------------------------

  // Structured block: sigma2 * sum_l coef_l R_l (parts summed before scaling).
  SpMat structured_block(const HyperValues& h) const {
    SpMat m = structure_.parts[0];
    for (size_t l = 1; l < structure_.parts.size(); ++l)
      m += part_coef(h, static_cast<int>(l)) * structure_.parts[l];
    return SpMat(structure_.sigma2 * m);
  }

  SpMat prior_precision(const HyperValues& h) const {
    const int n = layout_.n;
    SpMat s = bym2_joint_precision(structured_block(h), h.tau_b, h.phi);
    std::vector<Triplet> t;
    t.reserve(s.nonZeros() + layout_.i_b);
    const double pfix = spec_.fixed_effect_precision;
    t.emplace_back(layout_.i_mu, layout_.i_mu, pfix);
    if (layout_.i_beta >= 0) t.emplace_back(layout_.i_beta, layout_.i_beta, pfix);
    for (int s_i = 0; s_i < layout_.n_nu; ++s_i) {
      double p = survey_mode_ == SurveyMode::Random ? h.tau_nu : pfix;
      t.emplace_back(layout_.i_nu + s_i, layout_.i_nu + s_i, p);
    }
    for (int j = 0; j < s.outerSize(); ++j)
      for (SpMat::InnerIterator it(s, j); it; ++it)
        t.emplace_back(layout_.i_b + it.row(), layout_.i_b + it.col(), it.value());
    SpMat q(layout_.dim, layout_.dim);
    q.setFromTriplets(t.begin(), t.end());
    (void)n;
    return q;
  }

  // log|B'QB| for the joint prior under the constraints: closed form per block.
  // The intrinsic (b, x*) block uses |S|_+ corrected for the angle between its
  // null vector and the sum-to-zero constraint; the two corrections collapse to
  //   N log tau_b - N log(1-phi) + log N + log|deleted structured block|.
  double log_gdet_prior(const HyperValues& h) const {
    const int n = layout_.n;
    const double pfix = spec_.fixed_effect_precision;
    double lg = (1 + (layout_.i_beta >= 0 ? 1 : 0)) * std::log(pfix);
    if (layout_.n_nu > 0) {
      if (survey_mode_ == SurveyMode::Random)
        lg += layout_.n_nu * std::log(h.tau_nu);
      else
        lg += (layout_.n_nu - 1) * std::log(pfix);
    }
    lg += n * std::log(h.tau_b) - n * std::log1p(-h.phi);
    lg += std::log(static_cast<double>(n)) + structured_deleted_logdet(h);
    return lg;
  }

  GaussianModel gaussian(const HyperValues& h) const {
    GaussianModel g;
    g.Q = prior_precision(h);
    g.log_gdet_prior = log_gdet_prior(h);
    g.A = A_;
    g.y = y_;
    g.V = V_;
    g.C = C_;
    return g;
  }

  // Leave-one-out variant used by the CPO refit fallback.
  GaussianModel gaussian_without(const HyperValues& h, int drop_obs) const {
    GaussianModel g = gaussian(h);
    const int n = static_cast<int>(y_.size());
    SpMat a(n - 1, layout_.dim);
    Vec yy(n - 1), vv(n - 1);
    std::vector<Triplet> t;
    for (int r = 0, rr = 0; r < n; ++r) {
      if (r == drop_obs) continue;
      for (SpMatRow::InnerIterator it(A_row_major_, r); it; ++it)
        t.emplace_back(rr, static_cast<int>(it.col()), it.value());
      yy[rr] = y_[r];
      vv[rr] = V_[r];
      ++rr;
    }
    a.setFromTriplets(t.begin(), t.end());
    g.A = a;
    g.y = yy;
    g.V = vv;
    return g;
  }

  // Linear functionals -------------------------------------------------------

  // eta row of observation r (matches the design).
  Vec eta_row(int r) const {
    Vec a = Vec::Zero(layout_.dim);
    for (SpMatRow::InnerIterator it(A_row_major_, r); it; ++it) a[it.col()] = it.value();
    return a;
  }

  // zeta_i = mu + t_i beta + b_i, the area-level logit pushed through expit
  // for mortality summaries (survey effects excluded).
  Vec zeta_row(int area0) const {
    Vec a = Vec::Zero(layout_.dim);
    a[layout_.i_mu] = 1.0;
    if (layout_.i_beta >= 0) a[layout_.i_beta] = layout_.t_cov(area0);
    a[layout_.i_b + area0] = 1.0;
    return a;
  }

  // Reporting functional of latent element j: identity except that the
  // intercept is translated back to the uncentered time parameterization.
  Vec report_row(int j) const {
    Vec a = Vec::Zero(layout_.dim);
    a[j] = 1.0;
    if (j == layout_.i_mu && layout_.i_beta >= 0) a[layout_.i_beta] = -layout_.t_center;
    return a;
  }

  std::vector<std::string> latent_names() const {
    std::vector<std::string> names(layout_.dim);
    names[layout_.i_mu] = "mu";
    if (layout_.i_beta >= 0) names[layout_.i_beta] = "beta";
    for (int s = 0; s < layout_.n_nu; ++s)
      names[layout_.i_nu + s] = "nu_" + std::to_string(survey_labels_[s]);
    for (int i = 0; i < layout_.n; ++i) {
      names[layout_.i_b + i] = "b_" + std::to_string(i + 1);
      names[layout_.i_x + i] = "xstar_" + std::to_string(i + 1);
    }
    return names;
  }

  static double expit(double x) {
    double p = 1.0 / (1.0 + std::exp(-x));
    return std::min(1.0 - 1e-14, std::max(1e-14, p));
  }

 private:
  enum class Axis { TauB, Phi, Theta, Psi, TauNu };

  void validate_spec() {
    const AreaGraph& g = spec_.graph;
    if (g.n < 2) throw std::invalid_argument("model needs at least 2 areas/periods");
    if (spec_.obs.empty()) throw std::invalid_argument("model needs at least one observation");
    switch (spec_.kind) {
      case StructKind::Rw1:
      case StructKind::ConflictArw1:
        if (g.kind != GraphKind::Temporal)
          throw std::invalid_argument("temporal structure requires a temporal graph");
        break;
      case StructKind::Icar:
      case StructKind::MulticountryAicar:
      case StructKind::GeneralMulticountry:
        if (g.kind != GraphKind::Areal)
          throw std::invalid_argument("areal structure requires an areal graph");
        break;
    }
    if ((spec_.kind == StructKind::MulticountryAicar ||
         spec_.kind == StructKind::GeneralMulticountry) &&
        g.country.empty())
      throw std::invalid_argument("multi-country structure requires country labels");
    if (spec_.fix_theta) {
      if (!kind_is_adaptive(spec_.kind))
        throw std::invalid_argument("fix_theta applies to adaptive structures only");
      if (!(*spec_.fix_theta > 0) || !(*spec_.fix_theta <= 1))
        throw std::invalid_argument("fixed theta must lie in (0,1]");
    }
    int max_survey = 0;
    for (const auto& o : spec_.obs) {
      if (o.area < 0 || o.area >= g.n) throw std::invalid_argument("observation area outside 1..N");
      if (o.survey < 0) throw std::invalid_argument("negative survey index");
      if (!(o.v > 0)) throw std::invalid_argument("observation variance must be positive");
      if (!std::isfinite(o.y)) throw std::invalid_argument("non-finite observation");
      max_survey = std::max(max_survey, o.survey);
    }
    n_surveys_ = max_survey + 1;
    survey_labels_ = spec_.survey_labels;
    if (survey_labels_.empty())
      for (int s = 0; s < n_surveys_; ++s) survey_labels_.push_back(s + 1);
    if (static_cast<int>(survey_labels_.size()) != n_surveys_)
      throw std::invalid_argument("survey label count does not match survey ids");
  }

  void build_structure() {
    const AreaGraph& g = spec_.graph;
    structure_ = make_scaled_parts(g, structure_parts_for(g, spec_.kind));
    n_countries_ = spec_.kind == StructKind::GeneralMulticountry ? g.n_countries : 0;
  }

  void build_layout() {
    layout_.n = spec_.graph.n;
    layout_.t_center = 0.5 * (layout_.n + 1);
    int at = 0;
    layout_.i_mu = at++;
    if (spec_.include_slope) layout_.i_beta = at++;
    survey_mode_ = spec_.survey_mode;
    if (survey_mode_ != SurveyMode::None && n_surveys_ >= 2) {
      layout_.i_nu = at;
      layout_.n_nu = n_surveys_;
      at += n_surveys_;
    } else {
      survey_mode_ = SurveyMode::None;
    }
    layout_.i_b = at;
    layout_.i_x = at + layout_.n;
    layout_.dim = at + 2 * layout_.n;
  }

  void build_observation_pieces() {
    const int n_obs = static_cast<int>(spec_.obs.size());
    std::vector<Triplet> t;
    y_.resize(n_obs);
    V_.resize(n_obs);
    for (int r = 0; r < n_obs; ++r) {
      const Observation& o = spec_.obs[r];
      t.emplace_back(r, layout_.i_mu, 1.0);
      if (layout_.i_beta >= 0) t.emplace_back(r, layout_.i_beta, layout_.t_cov(o.area));
      if (layout_.n_nu > 0) t.emplace_back(r, layout_.i_nu + o.survey, 1.0);
      t.emplace_back(r, layout_.i_b + o.area, 1.0);
      y_[r] = o.y;
      V_[r] = o.v;
    }
    A_.resize(n_obs, layout_.dim);
    A_.setFromTriplets(t.begin(), t.end());
    A_row_major_ = SpMatRow(A_);

    const int k = 1 + (survey_mode_ == SurveyMode::Fixed ? 1 : 0);
    C_ = Mat::Zero(k, layout_.dim);
    for (int i = 0; i < layout_.n; ++i) C_(0, layout_.i_x + i) = 1.0;
    if (k == 2)
      for (int s = 0; s < layout_.n_nu; ++s) C_(1, layout_.i_nu + s) = 1.0;
  }

  void build_priors() {
    const PriorConfig& pc = spec_.priors;
    tau_prior_ = pc_precision_calibrate(pc.u_tau, pc.a_tau);
    nu_prior_ = pc_precision_calibrate(pc.u_nu, pc.a_nu);
    psi_prior_ = pc_precision_calibrate(pc.u_psi, pc.a_psi);

    SpMat sum = structure_.scaled[0];
    for (size_t l = 1; l < structure_.scaled.size(); ++l) sum += structure_.scaled[l];
    scaled_sum_ = sum;
    phi_prior_ = pc_phi_calibrate(bym2_gamma_tilde(sum), pc.u_phi, pc.a_phi);

    if (kind_is_adaptive(spec_.kind)) {
      // Two-part collapse: reference classes at unit weight vs the shock class.
      SpMat ref = structure_.scaled[0];
      for (size_t l = 1; l + 1 < structure_.scaled.size(); ++l) ref += structure_.scaled[l];
      const SpMat& shock = structure_.scaled.back();
      eps_ = theta_eigenvalues(ref, shock, spec_.gdet_removed_index);
      if (!spec_.fix_theta)
        theta_prior_ = pc_theta_calibrate(eps_, pc.u_theta, pc.a_theta);
    }
  }

  void build_gdet_machinery() {
    Mat deleted = delete_rowcol(Mat(scaled_sum_), spec_.gdet_removed_index);
    Eigen::LLT<Mat> llt(deleted);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("deleted structure matrix is not positive definite (disconnected graph?)");
    ref_deleted_logdet_ = detail::llt_logdet(llt);
    if (spec_.kind == StructKind::GeneralMulticountry) {
      deleted_parts_.clear();
      for (const auto& p : structure_.scaled)
        deleted_parts_.push_back(delete_rowcol(Mat(p), spec_.gdet_removed_index));
    }
  }

  void build_hyper_axes() {
    axes_ = {Axis::TauB, Axis::Phi};
    psi_country_.assign(2, -1);
    if (kind_is_adaptive(spec_.kind) && !spec_.fix_theta) {
      axes_.push_back(Axis::Theta);
      psi_country_.push_back(-1);
    }
    if (spec_.kind == StructKind::GeneralMulticountry) {
      for (int m = 1; m < n_countries_; ++m) {
        axes_.push_back(Axis::Psi);
        psi_country_.push_back(m);
      }
    }
    if (survey_mode_ == SurveyMode::Random) {
      axes_.push_back(Axis::TauNu);
      psi_country_.push_back(-1);
    }
    names_.clear();
    for (size_t i = 0; i < axes_.size(); ++i) {
      switch (axes_[i]) {
        case Axis::TauB: names_.push_back("tau_b"); break;
        case Axis::Phi: names_.push_back("phi"); break;
        case Axis::Theta: names_.push_back("theta"); break;
        case Axis::Psi: names_.push_back("psi_" + std::to_string(psi_country_[i] + 1)); break;
        case Axis::TauNu: names_.push_back("tau_nu"); break;
      }
    }
  }

  double part_coef(const HyperValues& h, int l) const {
    const int n_parts = static_cast<int>(structure_.parts.size());
    if (l == 0) return 1.0;
    if (spec_.kind == StructKind::GeneralMulticountry)
      return l == n_parts - 1 ? h.theta : h.psi[l];
    return h.theta;  // two-part adaptive: shock class
  }

  double structured_deleted_logdet(const HyperValues& h) const {
    if (!kind_is_adaptive(spec_.kind)) return ref_deleted_logdet_;
    if (spec_.kind != StructKind::GeneralMulticountry) {
      // |R1* + theta R2*| with row r deleted = |deleted sum| * prod(1+(theta-1)eps)
      double s = ref_deleted_logdet_;
      for (int i = 0; i < eps_.size(); ++i) s += std::log1p((h.theta - 1.0) * eps_[i]);
      return s;
    }
    Mat d = deleted_parts_[0];
    for (size_t l = 1; l < deleted_parts_.size(); ++l)
      d += part_coef(h, static_cast<int>(l)) * deleted_parts_[l];
    Eigen::LLT<Mat> llt(d);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("deleted structured block not positive definite");
    return detail::llt_logdet(llt);
  }

  ModelSpec spec_;
  LatentLayout layout_;
  StructureParts structure_;
  SpMat scaled_sum_;
  SurveyMode survey_mode_ = SurveyMode::None;
  int n_surveys_ = 1;
  int n_countries_ = 0;
  std::vector<long> survey_labels_;

  PcPrecisionPrior tau_prior_, nu_prior_, psi_prior_;
  PcPhiPrior phi_prior_;
  std::optional<PcThetaPrior> theta_prior_;
  Vec eps_;
  double ref_deleted_logdet_ = 0.0;
  std::vector<Mat> deleted_parts_;

  SpMat A_;
  SpMatRow A_row_major_;
  Vec y_, V_;
  Mat C_;

  std::vector<Axis> axes_;
  std::vector<int> psi_country_;
  std::vector<std::string> names_;
};

// Observation CSV: header "area_id,survey_id,logit_est,variance"; 1-based
// area ids; survey ids arbitrary integers, compacted in ascending order.
struct DataSet {
  std::vector<Observation> obs;
  std::vector<long> survey_labels;
};

inline DataSet parse_data_csv(const std::string& text, int n_areas) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("data CSV is empty");
  std::vector<std::tuple<int, long, double, double>> rows;
  std::vector<long> labels;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 4) throw std::invalid_argument("data CSV expects 4 columns: " + line);
    int a = static_cast<int>(parse_long(cells[0], "data CSV area_id"));
    long s = parse_long(cells[1], "data CSV survey_id");
    double yv = parse_double(cells[2], "data CSV logit_est");
    double vv = parse_double(cells[3], "data CSV variance");
    if (a < 1 || a > n_areas)
      throw std::invalid_argument("data CSV area_id " + std::to_string(a) + " outside 1..N");
    if (!(vv > 0)) throw std::invalid_argument("data CSV variance must be positive");
    rows.emplace_back(a - 1, s, yv, vv);
    labels.push_back(s);
  }
  if (rows.empty()) throw std::invalid_argument("data CSV has no observations");
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::map<long, int> index;
  for (size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);
  DataSet d;
  d.survey_labels = labels;
  for (auto& [a, s, yv, vv] : rows) d.obs.push_back({a, index[s], yv, vv});
  return d;
}

}  // namespace agmrf
