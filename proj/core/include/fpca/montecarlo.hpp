#ifndef FPCA_MONTECARLO_HPP
#define FPCA_MONTECARLO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpca/dgp.hpp"
#include "fpca/inference.hpp"
#include "fpca/pca.hpp"

namespace fpca {

struct CheckSet {
  bool rates = false;
  bool coverage = false;
  bool normality = false;
  bool equivalence = false;
  bool hhat = false;
  bool cov_consistency = false;
  bool wald = false;
  bool ols_equiv = false;
  bool cal_h_errors = false;  // also track errors against the population rotation

  std::vector<std::string> names() const;
  static CheckSet parse(const std::vector<std::string>& names);
};

struct ProbeConfig {
  int series = 0;  // 0-based i; theorems hold for any fixed index
  int time = -1;   // -1 selects ceil(T/2)
};

// H0: R (stacked loadings of `series`) = q; with use_truth_q the engine sets
// q = R L_true per replication (a true null by construction).
struct WaldConfig {
  std::vector<int> series{0, 1};
  Eigen::MatrixXd r_mat;  // empty selects a default full-rank 2-restriction
  Eigen::VectorXd q;
  bool use_truth_q = true;
};

struct ExperimentGrid {
  std::vector<std::pair<int, int>> cells;  // (n, T)
  int replications = 100;
  std::uint64_t base_seed = 1;
  ModelSpec model;
  CheckSet checks;
  Approach approach = Approach::A;
  double alpha = 0.05;
  int bandwidth = -1;  // Newey-West; -1 = auto
  int band = 0;        // cross-sectional band for Gamma_t
  ProbeConfig probe;
  WaldConfig wald;
  int threads = 0;  // 0 = hardware concurrency
};

struct RepRecord {
  int cell = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;

  // Rotated estimation errors (H_hat is the per-replication rotation).
  double err_loadings = 0.0;     // ||Lambda_hat - Lambda H||_F / sqrt(n)
  double err_factors = 0.0;      // ||F_hat - F (H^{-1})'||_F / sqrt(T)
  double err_loading_max = 0.0;  // max_i ||lambda_hat_i - H' lambda_i||
  double err_factor_max = 0.0;   // max_t ||F_hat_t - H^{-1} F_t||
  double err_chi = 0.0;          // |chi_hat - chi| at the probe

  // Same errors against the population rotation calH (optional).
  double err_loadings_calh = 0.0;
  double err_factors_calh = 0.0;
  double err_chi_calh = 0.0;

  Eigen::VectorXd loading_zstats;  // sqrt(T) dev / sqrt(Theta_jj)
  Eigen::VectorXd factor_zstats;   // sqrt(n) dev / sqrt(Pi_jj)
  double chi_zstat = 0.0;
  std::vector<int> loading_ci_hit;  // 0/1 per coordinate
  std::vector<int> factor_ci_hit;

  double hhat_dist = 0.0;      // ||H_hat - J||_F, J = sign(diag(H_hat))
  double hhat_inv_dist = 0.0;  // ||H_hat^{-1} - J||_F
  double wald_stat = 0.0;
  double wald_pvalue = 1.0;
  int wald_reject = 0;    // at 5%
  double cov_dist = 0.0;  // (sqrt(T)/n) ||Gamma_hat_x - Gamma_x||_2
  double ols_gap = 0.0;   // OLS-equivalence remainder for the probe series
};

struct KsOutcome {
  double statistic = 0.0;
  double critical = 0.0;  // 1.63 / sqrt(reps), 1% level
  bool pass = false;
  int count = 0;
};

struct CellSummary {
  int n = 0;
  int t_len = 0;
  int replications = 0;
  int failed = 0;

  double med_err_loadings = 0.0, mean_err_loadings = 0.0;
  double med_err_factors = 0.0, mean_err_factors = 0.0;
  double med_err_loading_max = 0.0, med_err_factor_max = 0.0;
  double med_err_chi = 0.0, mean_err_chi = 0.0;
  double med_err_loadings_calh = 0.0, med_err_factors_calh = 0.0, med_err_chi_calh = 0.0;

  double coverage_loadings = -1.0;  // aggregated over r coordinates; -1 = not run
  double coverage_factors = -1.0;
  std::vector<KsOutcome> ks_loadings;
  std::vector<KsOutcome> ks_factors;
  KsOutcome ks_chi;

  double med_hhat = -1.0;
  double med_hhat_inv = -1.0;
  double wald_rejection_rate = -1.0;
  double med_cov_dist = -1.0;
  double med_ols_gap = -1.0;
};

struct RateFit {
  double slope = 0.0;
  double std_error = 0.0;
  int points = 0;
};

enum class ErrorKind { Loadings, Factors, ChiProbe };
enum class RateLaw { LoadingsMatrix, FactorsMatrix, CommonProbe };

struct McReport {
  std::vector<std::pair<int, int>> cells_spec;
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::string> checks;
  double alpha = 0.05;

  std::vector<CellSummary> cells;
  std::vector<RepRecord> records;  // flattened, ordered by (cell, rep)
  std::optional<RateFit> rate_loadings;
  std::optional<RateFit> rate_factors;
  std::optional<RateFit> rate_chi;

  std::string to_json_string() const;
  std::string to_text() const;
  std::string records_to_csv() const;
};

// ── Engine ────────────────────────────────────────────────────────────

struct RepOptions {
  CheckSet checks;
  Approach approach = Approach::A;
  double alpha = 0.05;
  int bandwidth = -1;
  int band = 0;
  ProbeConfig probe;
  std::optional<Eigen::MatrixXd> fixed_loadings;  // supplied by the grid engine
  const WaldConfig* wald = nullptr;
};

// One replication: generate, estimate, rotate, score. Deterministic in
// (spec, n, t_len, seed). Estimation failures are recorded, not thrown.
RepRecord run_replication(const ModelSpec& spec, int n, int t_len, std::uint64_t seed,
                          const RepOptions& opts = {});

McReport run_grid(const ExperimentGrid& grid);

// OLS fit of log(median error) on log(rate denominator).
double rate_denominator(RateLaw law, int n, int t_len);
RateFit fit_loglog(const std::vector<std::pair<double, double>>& denom_and_error);
RateFit rate_check(const std::vector<CellSummary>& cells, ErrorKind kind, RateLaw law);

// Kolmogorov-Smirnov normality check; requires at least 200 values.
KsOutcome normality_check(const std::vector<double>& standardized);

double coverage_fraction(const std::vector<int>& hits);

// ── Equivalence audit ─────────────────────────────────────────────────

struct AuditRecord {
  bool ran = false;
  std::string skip_reason;
  double max_pairwise_common_diff = 0.0;  // across approaches A-D
  double max_eigval_rel_diff = 0.0;       // X'X/(nT) vs XX'/(nT), top r
  bool common_ok = false;
  bool eigvals_ok = false;
  // Identified-truth checks, only when a truth with diagonal
  // Lambda'Lambda/n and F'F/T = I is supplied.
  bool prop7_checked = false;
  double prop7_offdiag = 0.0;  // max off-diagonal of Lambda'Lambda/n
  double prop7_diag_diff = 0.0;  // max |diag(Lambda'Lambda/n) - M_chi/n|
  bool prop7_ok = false;

  bool pass() const {
    return ran && common_ok && eigvals_ok && (!prop7_checked || prop7_ok);
  }
};

AuditRecord equivalence_audit(const Panel& x, int r,
                              const TruthDecomposition* identified_truth = nullptr);

}  // namespace fpca

#endif  // FPCA_MONTECARLO_HPP
