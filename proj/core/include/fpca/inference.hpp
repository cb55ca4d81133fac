#ifndef FPCA_INFERENCE_HPP
#define FPCA_INFERENCE_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "fpca/pca.hpp"

namespace fpca {

// Asymptotic covariance bundle for one series index i and one time index t.
struct AsymCov {
  Eigen::MatrixXd phi_i;    // long-run covariance of F_t xi_it
  Eigen::MatrixXd gamma_t;  // cross-sectional covariance of lambda_i xi_it
  Eigen::MatrixXd theta_i;  // loadings CLT covariance
  Eigen::MatrixXd pi_t;     // factors CLT covariance
  Eigen::VectorXd v_nt;     // diagonal of V_nT = M_hat/n
  Eigen::MatrixXd q_hat;    // Lambda_hat'Lambda/n (simulation) or diag(v_nt) (data mode)
  bool simulation_mode = false;
  int psd_clips = 0;  // PSD repairs applied
};

struct WaldResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::map<double, bool> reject_at;  // conventional levels 0.01/0.05/0.10
};

enum class RegionKind { Interval, Ellipsoid, BonferroniBand };

struct ConfidenceRegion {
  RegionKind kind = RegionKind::Interval;
  double alpha = 0.05;
  Eigen::VectorXd center;
  Eigen::VectorXd half_width;    // intervals / Bonferroni bands
  Eigen::MatrixXd axes;          // ellipsoid: unit eigenvectors as columns
  Eigen::VectorXd semi_lengths;  // ellipsoid: sqrt(c mu / n) per axis
  double threshold = 0.0;        // ellipsoid: chi-square quantile c

  bool contains(const Eigen::VectorXd& point) const;
};

// Bartlett-kernel auto bandwidth: floor(4 (T/100)^{2/9}).
int auto_bandwidth(int t_len);

// Newey-West long-run covariance of the rows of z (T x d), symmetrized.
Eigen::MatrixXd newey_west(const Eigen::MatrixXd& z, int bandwidth);

// Phi_i estimator: Newey-West applied to F_hat_t * xi_hat_it. A negative
// bandwidth selects auto_bandwidth(T).
Eigen::MatrixXd hac_phi(const Eigen::MatrixXd& f_hat, const Eigen::VectorXd& xi_hat_i,
                        int bandwidth = -1);

// Gamma_t estimator: banded cross-sectional sum with time-averaged products
// s_ij = (1/T) sum_t xi_it xi_jt. band = 0 assumes cross-sectional independence.
Eigen::MatrixXd gamma_t_hat(const Eigen::MatrixXd& lambda_hat, const Eigen::MatrixXd& xi_hat,
                            int band = 0);

Eigen::MatrixXd theta_i_cov(const Eigen::VectorXd& v_nt, const Eigen::MatrixXd& q_hat,
                            const Eigen::MatrixXd& phi_i);
Eigen::MatrixXd pi_t_cov(const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& gamma_t);

// Eigenvalue clipping at zero; counts whether any repair happened.
Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m, int* clip_counter = nullptr);

struct ChiSe {
  double se = 0.0;
  double v_it = 0.0;
  double w_it = 0.0;
  bool clipped = false;
};

// Standard error of the common component: sqrt(V_it/n + W_it/T) with
//   V_it = lambda_i' SigmaL^{-1} Gamma_t SigmaL^{-1} lambda_i
//   W_it = F_t' GammaF^{-1} Phi_i GammaF^{-1} F_t
ChiSe chi_se(const Eigen::VectorXd& lambda_i, const Eigen::VectorXd& f_t,
             const Eigen::MatrixXd& sigma_lambda_inv, const Eigen::MatrixXd& gamma_f_inv,
             const Eigen::MatrixXd& gamma_t, const Eigen::MatrixXd& phi_i, int n, int t_len);

// Wald test of H0: R L = q given the stacked loadings estimate and its
// covariance. Requires R full row rank and T > dim(L).
WaldResult wald_test(const Eigen::MatrixXd& r_mat, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& l_hat, const Eigen::MatrixXd& theta_bar, int t_len);

ConfidenceRegion ci_factor(double f_hat_jt, double pi_jj, int n, double alpha);
ConfidenceRegion ellipsoid_region(const Eigen::VectorXd& f_hat_stack,
                                  const Eigen::MatrixXd& pi_bar, int n, double alpha);
// pi_diag holds per-(t, j) variances, laid out like f_hat_block (Tbar x r).
ConfidenceRegion bonferroni_band(const Eigen::MatrixXd& f_hat_block,
                                 const Eigen::MatrixXd& pi_diag, int n, double alpha);

// Population rotation matrices behind the loadings/factors CLT covariances
// computed from either Gram matrix:
//   Q0 = V0 Upsilon0' (GammaF)^{-1/2},  Upsilon0 eigvecs of GammaF^{1/2} SigmaL GammaF^{1/2}
//   Q1 = V0^{1/2} Upsilon1' SigmaL^{-1/2}, Upsilon1 eigvecs of SigmaL^{1/2} GammaF SigmaL^{1/2}
// (sign matrix taken as identity).
struct PopulationRotations {
  Eigen::VectorXd v0;
  Eigen::MatrixXd upsilon0;
  Eigen::MatrixXd upsilon1;
  Eigen::MatrixXd q0;
  Eigen::MatrixXd q1;
};
PopulationRotations population_rotations(const Eigen::MatrixXd& gamma_f,
                                         const Eigen::MatrixXd& sigma_lambda);

// Covariance of the stacked loadings estimate for the index set `series`
// (each in [0, n)): (I (x) GammaF_hat)^{-1} Phi_bar (I (x) GammaF_hat)^{-1}
// with Phi_bar the Newey-West long-run covariance of (xi_[series],t (x) F_hat_t).
Eigen::MatrixXd stacked_loadings_cov(const Eigen::MatrixXd& f_hat, const Eigen::MatrixXd& xi_hat,
                                     const std::vector<int>& series, int bandwidth = -1);

// Stacked Gamma for a finite stretch of time points: block (a, b) is the
// banded sum (1/n) sum_{|i-j|<=band} lambda_i lambda_j' s_ij(t_a - t_b) with
// lagged time-averaged products s_ij(k). Tbar = 1 reduces to gamma_t_hat.
Eigen::MatrixXd gamma_bar_stacked(const Eigen::MatrixXd& lambda_hat,
                                  const Eigen::MatrixXd& xi_hat, const std::vector<int>& times,
                                  int band = 0);

// Pi for the stacked stretch: (I (x) Q^{-1})' Gamma_bar (I (x) Q^{-1}).
Eigen::MatrixXd pi_bar_stacked(const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& gamma_bar);

// Full bundle at probe indices. The two modes keep every ingredient in one
// coordinate system:
//  - simulation mode (truth supplied): Phi/Gamma use the true factors and
//    loadings with estimated residuals, and q_hat = Lambda_hat'Lambda/n,
//    matching the CLT expansions term by term;
//  - data mode: Phi/Gamma use the estimated factors and loadings, and
//    q_hat = diag(v_nt); the rotation is absorbed by V_nT^{-1} q_hat.
AsymCov compute_asym_cov(const Panel& x, const PcaEstimate& e,
                         const TruthDecomposition* truth, int i, int t,
                         int bandwidth = -1, int band = 0);

}  // namespace fpca

#endif  // FPCA_INFERENCE_HPP
