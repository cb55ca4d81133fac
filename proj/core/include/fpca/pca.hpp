#ifndef FPCA_PCA_HPP
#define FPCA_PCA_HPP

#include <Eigen/Dense>

#include "fpca/dgp.hpp"
#include "fpca/panel.hpp"

namespace fpca {

// The four equivalent PCA solutions. A and C diagonalize X'X/T; B and D
// diagonalize XX'/n; all span the same subspace and differ only in how
// loadings and factors are normalized:
//   A: F'F/T = I_r,        Lambda'Lambda   = M_hat (diagonal)
//   B: F'F/T = I_r,        Lambda'Lambda/n = M_tilde/T (diagonal)
//   C: Lambda'Lambda/n = I, F'F/T = M_hat/n (diagonal)
//   D: Lambda'Lambda/n = I, F'F   = M_tilde (diagonal)
enum class Approach { A, B, C, D };

enum class SignConvention { LoadingFirstRow, FactorFirst };

struct SampleCovariances {
  Eigen::MatrixXd gamma_hat_x;    // n x n, X'X/T
  Eigen::MatrixXd gamma_tilde_x;  // T x T, XX'/n
};

struct EigTopR {
  Eigen::VectorXd values;   // r, strictly descending
  Eigen::MatrixXd vectors;  // dim x r, unit columns
};

struct PcaEstimate {
  Approach approach = Approach::A;
  Eigen::MatrixXd lambda_hat;  // n x r
  Eigen::MatrixXd f_hat;       // T x r
  Eigen::VectorXd eigvals;     // r, of X'X/T (A, C) or XX'/n (B, D)
  Eigen::MatrixXd eigvecs;     // n x r (A, C) or T x r (B, D)
  Eigen::VectorXd sign;        // +-1 per column, as applied by sign_align

  Eigen::Index r() const { return lambda_hat.cols(); }
};

// Rotation matrices tying estimates to the generating truth. Only available
// in simulation mode (requires the truth and population covariances).
struct RotationBundle {
  Eigen::MatrixXd h_hat;      // (F'F/T)(Lambda'Lambda_hat/n) V_nT^{-1}
  Eigen::MatrixXd h_hat_inv;  // explicit algebraic inverse
  Eigen::MatrixXd h_tilde;    // (Lambda'Lambda/n)(F'F_tilde/T) V_nT^{-1}
  Eigen::MatrixXd cal_h;      // (Lambda'Lambda)^{-1} Lambda' V_chi M_chi^{1/2} J
  Eigen::VectorXd j_sign;     // +-1 diagonal of J
};

Eigen::MatrixXd sample_cov_nn(const Panel& x);  // X'X/T
Eigen::MatrixXd sample_cov_tt(const Panel& x);  // XX'/n
SampleCovariances sample_covariances(const Panel& x);

// Top-r eigenpairs of a symmetric matrix, descending, unit eigenvectors.
// Requires r < dim(S) and symmetry within 1e-8 (the matrix is symmetrized
// before solving). Throws DegenerateEigenvalues when any relative gap among
// mu_1..mu_{r+1} falls below 1e-10 (eigenvectors unidentified).
EigTopR eig_top_r(const Eigen::MatrixXd& s, int r);

PcaEstimate estimate(const Panel& x, int r, Approach approach);

Eigen::MatrixXd common_component(const PcaEstimate& e);
Eigen::MatrixXd idio_residuals(const Panel& x, const PcaEstimate& e);

PcaEstimate sign_align(PcaEstimate e, SignConvention convention = SignConvention::LoadingFirstRow);

RotationBundle rotation_bundle(const TruthDecomposition& truth,
                               const PopulationCovariances& pop, const PcaEstimate& e);

// Approach-A normalized quantities recovered from any estimate (the four
// solutions are column rescalings of one another).
Eigen::MatrixXd lambda_as_approach_a(const PcaEstimate& e);
Eigen::MatrixXd f_as_approach_a(const PcaEstimate& e);
Eigen::VectorXd v_nt_diagonal(const PcaEstimate& e);  // M_hat/n = M_tilde/T

}  // namespace fpca

#endif  // FPCA_PCA_HPP
