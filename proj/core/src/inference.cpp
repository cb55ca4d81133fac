#include "fpca/inference.hpp"

#include <algorithm>
#include <cmath>

#include "fpca/errors.hpp"
#include "fpca/stats.hpp"

namespace fpca {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double exponent, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw SpecError(std::string(what) + ": matrix is not positive definite");
  return eig.eigenvectors() *
         eig.eigenvalues().array().pow(exponent).matrix().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

bool ConfidenceRegion::contains(const Eigen::VectorXd& point) const {
  if (point.size() != center.size()) throw SpecError("ConfidenceRegion: dimension mismatch");
  if (kind == RegionKind::Ellipsoid) {
    double stat = 0.0;
    for (Eigen::Index k = 0; k < semi_lengths.size(); ++k) {
      const double proj = axes.col(k).dot(point - center);
      stat += (proj * proj) / (semi_lengths(k) * semi_lengths(k));
    }
    return stat <= 1.0;
  }
  for (Eigen::Index k = 0; k < center.size(); ++k) {
    if (std::abs(point(k) - center(k)) > half_width(k)) return false;
  }
  return true;
}

int auto_bandwidth(int t_len) {
  return static_cast<int>(std::floor(4.0 * std::pow(t_len / 100.0, 2.0 / 9.0)));
}

Eigen::MatrixXd newey_west(const Eigen::MatrixXd& z, int bandwidth) {
  const Eigen::Index t_len = z.rows();
  if (bandwidth < 0) throw SpecError("newey_west: bandwidth must be >= 0");
  if (bandwidth >= t_len) throw SpecError("newey_west: bandwidth must be < T");

  const double td = static_cast<double>(t_len);
  Eigen::MatrixXd omega = z.transpose() * z / td;
  for (int k = 1; k <= bandwidth; ++k) {
    const double w = 1.0 - static_cast<double>(k) / (bandwidth + 1.0);
    const Eigen::MatrixXd ck =
        z.bottomRows(t_len - k).transpose() * z.topRows(t_len - k) / td;
    omega += w * (ck + ck.transpose());
  }
  return symmetrize(omega);
}

Eigen::MatrixXd hac_phi(const Eigen::MatrixXd& f_hat, const Eigen::VectorXd& xi_hat_i,
                        int bandwidth) {
  if (f_hat.rows() != xi_hat_i.size())
    throw SpecError("hac_phi: factor path and residual series disagree on T");
  const int h = bandwidth < 0 ? auto_bandwidth(static_cast<int>(f_hat.rows())) : bandwidth;
  const Eigen::MatrixXd z = f_hat.array().colwise() * xi_hat_i.array();
  return newey_west(z, h);
}

Eigen::MatrixXd gamma_t_hat(const Eigen::MatrixXd& lambda_hat, const Eigen::MatrixXd& xi_hat,
                            int band) {
  const Eigen::Index n = lambda_hat.rows();
  const Eigen::Index r = lambda_hat.cols();
  if (xi_hat.cols() != n) throw SpecError("gamma_t_hat: residuals must be T x n");
  if (band < 0 || band >= n) throw SpecError("gamma_t_hat: band must satisfy 0 <= band < n");

  const double td = static_cast<double>(xi_hat.rows());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j_lo = std::max<Eigen::Index>(0, i - band);
    const Eigen::Index j_hi = std::min<Eigen::Index>(n - 1, i + band);
    for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
      const double s_ij = xi_hat.col(i).dot(xi_hat.col(j)) / td;
      g.noalias() += lambda_hat.row(i).transpose() * lambda_hat.row(j) * s_ij;
    }
  }
  return symmetrize(g / static_cast<double>(n));
}

Eigen::MatrixXd theta_i_cov(const Eigen::VectorXd& v_nt, const Eigen::MatrixXd& q_hat,
                            const Eigen::MatrixXd& phi_i) {
  if (v_nt.minCoeff() <= 0.0) throw SpecError("theta_i_cov: V_nT must be strictly positive");
  const Eigen::MatrixXd vinv_q = v_nt.cwiseInverse().asDiagonal() * q_hat;
  return symmetrize(vinv_q * phi_i * vinv_q.transpose());
}

Eigen::MatrixXd pi_t_cov(const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& gamma_t) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q_hat);
  if (!lu.isInvertible()) throw SpecError("pi_t_cov: q_hat is singular");
  const Eigen::MatrixXd q_inv = lu.inverse();
  return symmetrize(q_inv.transpose() * gamma_t * q_inv);
}

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m, int* clip_counter) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  if (eig.eigenvalues().minCoeff() >= 0.0) return symmetrize(m);
  if (clip_counter) ++*clip_counter;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  return symmetrize(eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose());
}

ChiSe chi_se(const Eigen::VectorXd& lambda_i, const Eigen::VectorXd& f_t,
             const Eigen::MatrixXd& sigma_lambda_inv, const Eigen::MatrixXd& gamma_f_inv,
             const Eigen::MatrixXd& gamma_t, const Eigen::MatrixXd& phi_i, int n, int t_len) {
  ChiSe out;
  out.v_it = lambda_i.dot(sigma_lambda_inv * gamma_t * sigma_lambda_inv * lambda_i);
  out.w_it = f_t.dot(gamma_f_inv * phi_i * gamma_f_inv * f_t);
  if (out.v_it < 0.0) {
    out.v_it = 0.0;
    out.clipped = true;
  }
  if (out.w_it < 0.0) {
    out.w_it = 0.0;
    out.clipped = true;
  }
  if (out.v_it == 0.0 && out.w_it == 0.0)
    throw DegenerateVariance("chi_se: both variance components are zero");
  out.se = std::sqrt(out.v_it / n + out.w_it / t_len);
  return out;
}

WaldResult wald_test(const Eigen::MatrixXd& r_mat, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& l_hat, const Eigen::MatrixXd& theta_bar, int t_len) {
  const Eigen::Index m = r_mat.rows();
  const Eigen::Index p = r_mat.cols();
  if (q.size() != m) throw SpecError("wald_test: q must have m entries");
  if (l_hat.size() != p || theta_bar.rows() != p || theta_bar.cols() != p)
    throw SpecError("wald_test: dimension mismatch between R, L_hat and Theta");
  if (t_len <= p)
    throw PreconditionViolation("wald_test: requires T > dim(L) for a positive definite Theta");

  Eigen::FullPivLU<Eigen::MatrixXd> rank_check(r_mat);
  if (rank_check.rank() < m) throw SpecError("wald_test: R is not full row rank");

  const Eigen::VectorXd dev = r_mat * l_hat - q;
  const Eigen::MatrixXd rtr = symmetrize(r_mat * theta_bar * r_mat.transpose());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(rtr);
  if (!lu.isInvertible())
    throw SingularRestriction("wald_test: R Theta R' is numerically singular");

  WaldResult out;
  out.statistic = static_cast<double>(t_len) * dev.dot(lu.solve(dev));
  if (out.statistic < 0.0) out.statistic = 0.0;
  out.dof = static_cast<int>(m);
  out.p_value = 1.0 - chi2_cdf(out.statistic, out.dof);
  for (double level : {0.01, 0.05, 0.10}) out.reject_at[level] = out.p_value < level;
  return out;
}

ConfidenceRegion ci_factor(double f_hat_jt, double pi_jj, int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw SpecError("ci_factor: alpha must lie in (0,1)");
  if (!(pi_jj > 0.0)) throw SpecError("ci_factor: variance must be > 0");
  ConfidenceRegion region;
  region.kind = RegionKind::Interval;
  region.alpha = alpha;
  region.center = Eigen::VectorXd::Constant(1, f_hat_jt);
  region.half_width = Eigen::VectorXd::Constant(
      1, normal_quantile(1.0 - alpha / 2.0) * std::sqrt(pi_jj / static_cast<double>(n)));
  return region;
}

ConfidenceRegion ellipsoid_region(const Eigen::VectorXd& f_hat_stack,
                                  const Eigen::MatrixXd& pi_bar, int n, double alpha) {
  const Eigen::Index dim = f_hat_stack.size();
  if (pi_bar.rows() != dim || pi_bar.cols() != dim)
    throw SpecError("ellipsoid_region: covariance must match the stacked estimate");
  if (!(alpha > 0.0 && alpha < 1.0)) throw SpecError("ellipsoid_region: alpha must lie in (0,1)");
  if (n <= dim)
    throw PreconditionViolation(
        "ellipsoid_region: requires n > Tbar*r for a positive definite Pi");

  const Eigen::MatrixXd psd = clip_psd(pi_bar);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(psd);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw SpecError("ellipsoid_region: Pi is singular after PSD clipping");

  ConfidenceRegion region;
  region.kind = RegionKind::Ellipsoid;
  region.alpha = alpha;
  region.center = f_hat_stack;
  region.threshold = chi2_quantile(1.0 - alpha, static_cast<int>(dim));
  region.axes = eig.eigenvectors().rowwise().reverse();
  region.semi_lengths =
      (region.threshold * eig.eigenvalues().reverse().array() / static_cast<double>(n)).sqrt();
  return region;
}

ConfidenceRegion bonferroni_band(const Eigen::MatrixXd& f_hat_block,
                                 const Eigen::MatrixXd& pi_diag, int n, double alpha) {
  if (pi_diag.rows() != f_hat_block.rows() || pi_diag.cols() != f_hat_block.cols())
    throw SpecError("bonferroni_band: variance block must match the estimate block");
  if (!(alpha > 0.0 && alpha < 1.0)) throw SpecError("bonferroni_band: alpha must lie in (0,1)");
  const Eigen::Index count = f_hat_block.size();
  const double level = alpha / static_cast<double>(count);
  const double z = normal_quantile(1.0 - level / 2.0);

  ConfidenceRegion region;
  region.kind = RegionKind::BonferroniBand;
  region.alpha = alpha;
  region.center.resize(count);
  region.half_width.resize(count);
  Eigen::Index k = 0;
  for (Eigen::Index t = 0; t < f_hat_block.rows(); ++t) {
    for (Eigen::Index j = 0; j < f_hat_block.cols(); ++j, ++k) {
      if (!(pi_diag(t, j) > 0.0)) throw SpecError("bonferroni_band: variance must be > 0");
      region.center(k) = f_hat_block(t, j);
      region.half_width(k) = z * std::sqrt(pi_diag(t, j) / static_cast<double>(n));
    }
  }
  return region;
}

PopulationRotations population_rotations(const Eigen::MatrixXd& gamma_f,
                                         const Eigen::MatrixXd& sigma_lambda) {
  const Eigen::Index r = gamma_f.rows();
  if (sigma_lambda.rows() != r || sigma_lambda.cols() != r)
    throw SpecError("population_rotations: dimension mismatch");

  const Eigen::MatrixXd gf_half = spd_power(gamma_f, 0.5, "population_rotations");
  const Eigen::MatrixXd gf_inv_half = spd_power(gamma_f, -0.5, "population_rotations");
  const Eigen::MatrixXd sl_half = spd_power(sigma_lambda, 0.5, "population_rotations");
  const Eigen::MatrixXd sl_inv_half = spd_power(sigma_lambda, -0.5, "population_rotations");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig0(
      symmetrize(gf_half * sigma_lambda * gf_half));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig1(
      symmetrize(sl_half * gamma_f * sl_half));

  PopulationRotations rot;
  rot.v0 = eig0.eigenvalues().reverse();
  rot.upsilon0 = eig0.eigenvectors().rowwise().reverse();
  rot.upsilon1 = eig1.eigenvectors().rowwise().reverse();
  rot.q0 = rot.v0.asDiagonal() * rot.upsilon0.transpose() * gf_inv_half;
  rot.q1 = rot.v0.cwiseSqrt().asDiagonal() * rot.upsilon1.transpose() * sl_inv_half;
  return rot;
}

Eigen::MatrixXd stacked_loadings_cov(const Eigen::MatrixXd& f_hat, const Eigen::MatrixXd& xi_hat,
                                     const std::vector<int>& series, int bandwidth) {
  const Eigen::Index t_len = f_hat.rows();
  const Eigen::Index r = f_hat.cols();
  const Eigen::Index nbar = static_cast<Eigen::Index>(series.size());
  if (nbar == 0) throw SpecError("stacked_loadings_cov: empty index set");
  for (int s : series) {
    if (s < 0 || s >= xi_hat.cols()) throw SpecError("stacked_loadings_cov: series index out of range");
  }

  Eigen::MatrixXd z(t_len, nbar * r);
  for (Eigen::Index k = 0; k < nbar; ++k) {
    z.middleCols(k * r, r) =
        f_hat.array().colwise() * xi_hat.col(series[static_cast<std::size_t>(k)]).array();
  }
  const int h = bandwidth < 0 ? auto_bandwidth(static_cast<int>(t_len)) : bandwidth;
  const Eigen::MatrixXd phi_bar = newey_west(z, h);

  const Eigen::MatrixXd gf = f_hat.transpose() * f_hat / static_cast<double>(t_len);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gf);
  if (!lu.isInvertible()) throw SpecError("stacked_loadings_cov: F_hat'F_hat/T is singular");
  const Eigen::MatrixXd gf_inv = lu.inverse();

  Eigen::MatrixXd big_inv = Eigen::MatrixXd::Zero(nbar * r, nbar * r);
  for (Eigen::Index k = 0; k < nbar; ++k) big_inv.block(k * r, k * r, r, r) = gf_inv;
  return symmetrize(big_inv * phi_bar * big_inv);
}

Eigen::MatrixXd gamma_bar_stacked(const Eigen::MatrixXd& lambda_hat,
                                  const Eigen::MatrixXd& xi_hat, const std::vector<int>& times,
                                  int band) {
  const Eigen::Index n = lambda_hat.rows();
  const Eigen::Index r = lambda_hat.cols();
  const Eigen::Index t_len = xi_hat.rows();
  const Eigen::Index tbar = static_cast<Eigen::Index>(times.size());
  if (tbar == 0) throw SpecError("gamma_bar_stacked: empty time set");
  if (band < 0 || band >= n) throw SpecError("gamma_bar_stacked: band must satisfy 0 <= band < n");
  for (int t : times) {
    if (t < 0 || t >= t_len) throw SpecError("gamma_bar_stacked: time index out of range");
  }

  const double td = static_cast<double>(t_len);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(tbar * r, tbar * r);
  for (Eigen::Index a = 0; a < tbar; ++a) {
    for (Eigen::Index b = 0; b < tbar; ++b) {
      const int lag = std::abs(times[static_cast<std::size_t>(a)] - times[static_cast<std::size_t>(b)]);
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(r, r);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j_lo = std::max<Eigen::Index>(0, i - band);
        const Eigen::Index j_hi = std::min<Eigen::Index>(n - 1, i + band);
        for (Eigen::Index j = j_lo; j <= j_hi; ++j) {
          // Lagged time-averaged product s_ij(lag).
          double s = 0.0;
          for (Eigen::Index t = lag; t < t_len; ++t) s += xi_hat(t, i) * xi_hat(t - lag, j);
          s /= td;
          block.noalias() += lambda_hat.row(i).transpose() * lambda_hat.row(j) * s;
        }
      }
      g.block(a * r, b * r, r, r) = block / static_cast<double>(n);
    }
  }
  return symmetrize(g);
}

Eigen::MatrixXd pi_bar_stacked(const Eigen::MatrixXd& q_hat, const Eigen::MatrixXd& gamma_bar) {
  const Eigen::Index r = q_hat.rows();
  if (gamma_bar.rows() % r != 0)
    throw SpecError("pi_bar_stacked: gamma_bar dimension is not a multiple of r");
  const Eigen::Index tbar = gamma_bar.rows() / r;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q_hat);
  if (!lu.isInvertible()) throw SpecError("pi_bar_stacked: q_hat is singular");
  const Eigen::MatrixXd q_inv = lu.inverse();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(gamma_bar.rows(), gamma_bar.cols());
  for (Eigen::Index k = 0; k < tbar; ++k) big.block(k * r, k * r, r, r) = q_inv;
  return symmetrize(big.transpose() * gamma_bar * big);
}

AsymCov compute_asym_cov(const Panel& x, const PcaEstimate& e,
                         const TruthDecomposition* truth, int i, int t,
                         int bandwidth, int band) {
  const Eigen::Index n = x.n_len();
  const Eigen::Index t_len = x.t_len();
  if (i < 0 || i >= n) throw SpecError("compute_asym_cov: series index out of range");
  if (t < 0 || t >= t_len) throw SpecError("compute_asym_cov: time index out of range");

  AsymCov out;
  out.v_nt = v_nt_diagonal(e);
  const Eigen::MatrixXd lambda_a = lambda_as_approach_a(e);
  const Eigen::MatrixXd f_a = f_as_approach_a(e);
  const Eigen::MatrixXd xi_hat = x.data - f_a * lambda_a.transpose();

  out.simulation_mode = truth != nullptr;
  if (out.simulation_mode) {
    if (truth->loadings.rows() != n || truth->loadings.cols() != e.r() ||
        truth->factors.rows() != t_len)
      throw SpecError("compute_asym_cov: truth does not match panel dimensions");
    out.q_hat = lambda_a.transpose() * truth->loadings / static_cast<double>(n);
    out.phi_i = clip_psd(hac_phi(truth->factors, xi_hat.col(i), bandwidth), &out.psd_clips);
    out.gamma_t = clip_psd(gamma_t_hat(truth->loadings, xi_hat, band), &out.psd_clips);
  } else {
    out.q_hat = Eigen::MatrixXd(out.v_nt.asDiagonal());
    out.phi_i = clip_psd(hac_phi(f_a, xi_hat.col(i), bandwidth), &out.psd_clips);
    out.gamma_t = clip_psd(gamma_t_hat(lambda_a, xi_hat, band), &out.psd_clips);
  }

  out.theta_i = clip_psd(theta_i_cov(out.v_nt, out.q_hat, out.phi_i), &out.psd_clips);
  out.pi_t = clip_psd(pi_t_cov(out.q_hat, out.gamma_t), &out.psd_clips);
  return out;
}

}  // namespace fpca
