#include "fpca/pca.hpp"

#include <cmath>
#include <string>

#include "fpca/errors.hpp"

namespace fpca {

Eigen::MatrixXd sample_cov_nn(const Panel& x) {
  Eigen::MatrixXd s = x.data.transpose() * x.data / static_cast<double>(x.t_len());
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd sample_cov_tt(const Panel& x) {
  Eigen::MatrixXd s = x.data * x.data.transpose() / static_cast<double>(x.n_len());
  return 0.5 * (s + s.transpose());
}

SampleCovariances sample_covariances(const Panel& x) {
  return SampleCovariances{sample_cov_nn(x), sample_cov_tt(x)};
}

EigTopR eig_top_r(const Eigen::MatrixXd& s, int r) {
  const Eigen::Index dim = s.rows();
  if (s.cols() != dim) throw SpecError("eig_top_r: matrix must be square");
  if (r < 1 || r >= dim) throw SpecError("eig_top_r: requires 1 <= r < dim(S)");

  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw SpecError("eig_top_r: matrix is not symmetric within 1e-8");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (s + s.transpose()));
  if (solver.info() != Eigen::Success) throw Error("eig_top_r: eigensolver failed");

  const Eigen::VectorXd& asc = solver.eigenvalues();  // ascending
  const double mu1 = asc(dim - 1);
  if (!(mu1 > 0.0)) throw DegenerateEigenvalues("eig_top_r: top eigenvalue is not positive");

  // Identification needs separation among mu_1..mu_r and from mu_{r+1}.
  for (int j = 0; j < r; ++j) {
    const double gap = asc(dim - 1 - j) - asc(dim - 2 - j);
    if (gap / mu1 < 1e-10) {
      throw DegenerateEigenvalues("eig_top_r: relative eigengap below 1e-10 at position " +
                                  std::to_string(j + 1));
    }
  }

  EigTopR out;
  out.values.resize(r);
  out.vectors.resize(dim, r);
  for (int j = 0; j < r; ++j) {
    out.values(j) = asc(dim - 1 - j);
    out.vectors.col(j) = solver.eigenvectors().col(dim - 1 - j).normalized();
  }
  return out;
}

namespace {

void check_estimate_pre(const Panel& x, int r) {
  const ValidationReport rep = validate_panel(x, r);
  if (!rep.pass()) {
    std::string msg = "estimate: panel validation failed:";
    for (const auto& f : rep.failures()) msg += " " + f + ";";
    throw SpecError(msg);
  }
}

}  // namespace

PcaEstimate estimate(const Panel& x, int r, Approach approach) {
  check_estimate_pre(x, r);
  const auto n = x.n_len();
  const auto t_len = x.t_len();
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t_len);

  // Diagonalize the smaller Gram matrix; the other side's eigenvectors are
  // recovered through X. The approach tag only selects the normalization.
  Eigen::MatrixXd v_hat;    // n x r eigenvectors of X'X/T
  Eigen::MatrixXd v_tilde;  // T x r eigenvectors of XX'/n
  Eigen::VectorXd m_hat;    // eigenvalues of X'X/T
  Eigen::VectorXd m_tilde;  // eigenvalues of XX'/n

  if (n <= t_len) {
    const EigTopR eig = eig_top_r(sample_cov_nn(x), r);
    v_hat = eig.vectors;
    m_hat = eig.values;
    m_tilde = m_hat * (td / nd);
    const Eigen::VectorXd s = (td * m_hat.array()).sqrt();
    v_tilde = x.data * v_hat;
    for (int j = 0; j < r; ++j) v_tilde.col(j) = (v_tilde.col(j) / s(j)).normalized();
  } else {
    const EigTopR eig = eig_top_r(sample_cov_tt(x), r);
    v_tilde = eig.vectors;
    m_tilde = eig.values;
    m_hat = m_tilde * (nd / td);
    const Eigen::VectorXd s = (nd * m_tilde.array()).sqrt();
    v_hat = x.data.transpose() * v_tilde;
    for (int j = 0; j < r; ++j) v_hat.col(j) = (v_hat.col(j) / s(j)).normalized();
  }

  PcaEstimate e;
  e.approach = approach;
  e.sign = Eigen::VectorXd::Ones(r);
  switch (approach) {
    case Approach::A:
      e.lambda_hat = v_hat * m_hat.cwiseSqrt().asDiagonal();
      e.f_hat = x.data * v_hat * m_hat.cwiseSqrt().cwiseInverse().asDiagonal();
      e.eigvals = m_hat;
      e.eigvecs = v_hat;
      break;
    case Approach::B:
      e.f_hat = v_tilde * std::sqrt(td);
      e.lambda_hat = x.data.transpose() * v_tilde / std::sqrt(td);
      e.eigvals = m_tilde;
      e.eigvecs = v_tilde;
      break;
    case Approach::C:
      e.lambda_hat = v_hat * std::sqrt(nd);
      e.f_hat = x.data * v_hat / std::sqrt(nd);
      e.eigvals = m_hat;
      e.eigvecs = v_hat;
      break;
    case Approach::D:
      e.f_hat = v_tilde * m_tilde.cwiseSqrt().asDiagonal();
      e.lambda_hat = x.data.transpose() * v_tilde * m_tilde.cwiseSqrt().cwiseInverse().asDiagonal();
      e.eigvals = m_tilde;
      e.eigvecs = v_tilde;
      break;
  }
  return sign_align(std::move(e), SignConvention::LoadingFirstRow);
}

Eigen::MatrixXd common_component(const PcaEstimate& e) {
  return e.f_hat * e.lambda_hat.transpose();
}

Eigen::MatrixXd idio_residuals(const Panel& x, const PcaEstimate& e) {
  if (x.t_len() != e.f_hat.rows() || x.n_len() != e.lambda_hat.rows())
    throw SpecError("idio_residuals: estimate does not match panel dimensions");
  return x.data - common_component(e);
}

PcaEstimate sign_align(PcaEstimate e, SignConvention convention) {
  const Eigen::MatrixXd& pivot_block =
      (convention == SignConvention::LoadingFirstRow) ? e.lambda_hat : e.f_hat;
  for (Eigen::Index j = 0; j < e.r(); ++j) {
    Eigen::Index pivot = 0;
    while (pivot < pivot_block.rows() && pivot_block(pivot, j) == 0.0) ++pivot;
    if (pivot == pivot_block.rows())
      throw SignUndefined("sign_align: column " + std::to_string(j + 1) + " is entirely zero");
    if (pivot_block(pivot, j) < 0.0) {
      e.lambda_hat.col(j) = -e.lambda_hat.col(j);
      e.f_hat.col(j) = -e.f_hat.col(j);
      e.eigvecs.col(j) = -e.eigvecs.col(j);
      e.sign(j) = -e.sign(j);
    }
  }
  return e;
}

Eigen::VectorXd v_nt_diagonal(const PcaEstimate& e) {
  if (e.approach == Approach::A || e.approach == Approach::C)
    return e.eigvals / static_cast<double>(e.lambda_hat.rows());
  return e.eigvals / static_cast<double>(e.f_hat.rows());
}

Eigen::MatrixXd lambda_as_approach_a(const PcaEstimate& e) {
  if (e.approach == Approach::A || e.approach == Approach::B) return e.lambda_hat;
  const Eigen::VectorXd v = v_nt_diagonal(e);
  return e.lambda_hat * v.cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd f_as_approach_a(const PcaEstimate& e) {
  if (e.approach == Approach::A || e.approach == Approach::B) return e.f_hat;
  const Eigen::VectorXd v = v_nt_diagonal(e);
  return e.f_hat * v.cwiseSqrt().cwiseInverse().asDiagonal();
}

RotationBundle rotation_bundle(const TruthDecomposition& truth,
                               const PopulationCovariances& pop, const PcaEstimate& e) {
  const int r = static_cast<int>(e.r());
  if (truth.r() != r) throw SpecError("rotation_bundle: truth and estimate disagree on r");
  const double nd = static_cast<double>(truth.loadings.rows());
  const double td = static_cast<double>(truth.factors.rows());

  const Eigen::VectorXd v_nt = v_nt_diagonal(e);
  const Eigen::MatrixXd lambda_a = lambda_as_approach_a(e);
  const Eigen::MatrixXd f_a = f_as_approach_a(e);

  const Eigen::MatrixXd ftf = truth.factors.transpose() * truth.factors / td;
  const Eigen::MatrixXd ltl_hat = truth.loadings.transpose() * lambda_a / nd;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(ltl_hat);
  if (!lu.isInvertible())
    throw RotationSingular("rotation_bundle: Lambda'Lambda_hat/n is numerically singular");

  Eigen::FullPivLU<Eigen::MatrixXd> lu_ftf(ftf);
  if (!lu_ftf.isInvertible())
    throw RotationSingular("rotation_bundle: F'F/T is numerically singular");

  RotationBundle b;
  b.h_hat = ftf * ltl_hat * v_nt.cwiseInverse().asDiagonal();
  b.h_hat_inv = v_nt.asDiagonal() * lu.inverse() * lu_ftf.inverse();
  b.h_tilde = (truth.loadings.transpose() * truth.loadings / nd) *
              (truth.factors.transpose() * f_a / td) * v_nt.cwiseInverse().asDiagonal();

  const EigTopR chi = eig_top_r(pop.gamma_chi, r);

  // n-side sample eigenvectors, whichever side the estimate was solved on.
  Eigen::MatrixXd v_hat_x;
  if (e.approach == Approach::A || e.approach == Approach::C) {
    v_hat_x = e.eigvecs;
  } else {
    v_hat_x = lambda_a * (nd * v_nt.array()).sqrt().inverse().matrix().asDiagonal();
  }

  b.j_sign = Eigen::VectorXd::Ones(r);
  for (int j = 0; j < r; ++j) {
    if (chi.vectors.col(j).dot(v_hat_x.col(j)) < 0.0) b.j_sign(j) = -1.0;
  }

  const Eigen::MatrixXd ltl = truth.loadings.transpose() * truth.loadings;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_ltl(ltl);
  if (!lu_ltl.isInvertible())
    throw RotationSingular("rotation_bundle: Lambda'Lambda is numerically singular");
  b.cal_h = lu_ltl.solve(truth.loadings.transpose() * chi.vectors) *
            chi.values.cwiseSqrt().asDiagonal() * b.j_sign.asDiagonal();
  return b;
}

}  // namespace fpca
