// Test-only oracles, deliberately independent of the library's computation
// paths: naive double-loop covariances, truncated-SVD reconstruction, and a
// fixed-point Lyapunov solver.
#ifndef FPCA_TESTS_ORACLES_HPP
#define FPCA_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <random>

namespace oracles {

// Entry-wise O(n^2 T) covariance, no BLAS involved.
inline Eigen::MatrixXd naive_cov_nn(const Eigen::MatrixXd& x) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index t = 0; t < t_len; ++t) acc += x(t, i) * x(t, j);
      s(i, j) = acc / static_cast<double>(t_len);
    }
  }
  return s;
}

inline Eigen::MatrixXd naive_cov_tt(const Eigen::MatrixXd& x) {
  return naive_cov_nn(x.transpose());
}

// Rank-r truncated SVD reconstruction via Eigen's BDCSVD.
inline Eigen::MatrixXd svd_truncation(const Eigen::MatrixXd& x, int r) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd u = svd.matrixU().leftCols(r);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(r);
  const Eigen::VectorXd s = svd.singularValues().head(r);
  return u * s.asDiagonal() * v.transpose();
}

// Fixed-point iteration for G = A G A' + S.
inline Eigen::MatrixXd lyapunov_fixed_point(const Eigen::MatrixXd& a, const Eigen::MatrixXd& s,
                                            int iterations = 10000) {
  Eigen::MatrixXd g = s;
  for (int k = 0; k < iterations; ++k) {
    const Eigen::MatrixXd next = a * g * a.transpose() + s;
    if ((next - g).cwiseAbs().maxCoeff() < 1e-15) return next;
    g = next;
  }
  return g;
}

// Random SPD matrix with eigenvalues in [0.5, 2.5].
inline Eigen::MatrixXd random_spd(int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = normal(gen);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  std::uniform_real_distribution<double> unif(0.5, 2.5);
  Eigen::VectorXd d(dim);
  for (Eigen::Index i = 0; i < dim; ++i) d(i) = unif(gen);
  return q * d.asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

}  // namespace oracles

#endif  // FPCA_TESTS_ORACLES_HPP
