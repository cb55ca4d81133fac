#include "fpca/inference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fpca/dgp.hpp"
#include "fpca/errors.hpp"
#include "fpca/stats.hpp"
#include "oracles.hpp"

using namespace fpca;

// ── Distribution functions ────────────────────────────────────────────

TEST(Stats, StandardQuantiles) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
  EXPECT_NEAR(chi2_quantile(0.95, 2), 5.991465, 1e-6);
  // chi2 with 2 dof has the closed form -2 ln(1 - p).
  EXPECT_NEAR(chi2_quantile(0.95, 2), -2.0 * std::log(0.05), 1e-12);
}

TEST(Stats, QuantileCdfRoundTrip) {
  for (double p : {0.01, 0.1, 0.5, 0.9, 0.975, 0.999}) {
    for (int dof : {1, 2, 5, 17}) {
      EXPECT_NEAR(chi2_cdf(chi2_quantile(p, dof), dof), p, 1e-9);
    }
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12);
  }
}

TEST(Stats, DomainErrors) {
  EXPECT_THROW(normal_quantile(0.0), SpecError);
  EXPECT_THROW(normal_quantile(1.0), SpecError);
  EXPECT_THROW(chi2_quantile(0.5, 0), SpecError);
}

// ── Newey-West / Phi_i ────────────────────────────────────────────────

TEST(HacPhi, AutoBandwidthFormula) {
  EXPECT_EQ(auto_bandwidth(100), 4);
  EXPECT_EQ(auto_bandwidth(400), static_cast<int>(std::floor(4.0 * std::pow(4.0, 2.0 / 9.0))));
}

TEST(HacPhi, ZeroBandwidthReduction) {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd f = oracles::random_matrix(50, 2, gen);
  const Eigen::VectorXd xi = oracles::random_matrix(50, 1, gen).col(0);
  const Eigen::MatrixXd phi = hac_phi(f, xi, 0);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(2, 2);
  for (int t = 0; t < 50; ++t)
    direct += f.row(t).transpose() * f.row(t) * xi(t) * xi(t);
  direct /= 50.0;
  EXPECT_LE((phi - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HacPhi, ZeroResidualsGiveZero) {
  std::mt19937_64 gen(2);
  const Eigen::MatrixXd f = oracles::random_matrix(60, 2, gen);
  const Eigen::MatrixXd phi = hac_phi(f, Eigen::VectorXd::Zero(60), 3);
  EXPECT_EQ(phi.cwiseAbs().maxCoeff(), 0.0);
}

TEST(HacPhi, IidSeriesRecoverUnitLongRunVariance) {
  // Population value Gamma^F Var(xi) = 1 under independence.
  std::mt19937_64 gen(3);
  const int t_len = 100000;
  const Eigen::MatrixXd f = oracles::random_matrix(t_len, 1, gen);
  const Eigen::VectorXd xi = oracles::random_matrix(t_len, 1, gen).col(0);
  const Eigen::MatrixXd phi = hac_phi(f, xi);  // auto bandwidth
  EXPECT_NEAR(phi(0, 0), 1.0, 0.05);
}

TEST(HacPhi, BandwidthMustBeBelowT) {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd f = oracles::random_matrix(10, 1, gen);
  EXPECT_THROW(hac_phi(f, f.col(0), 10), SpecError);
}

TEST(NeweyWest, OutputSymmetric) {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd z = oracles::random_matrix(200, 3, gen);
  const Eigen::MatrixXd omega = newey_west(z, 5);
  EXPECT_LE((omega - omega.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

// ── Gamma_t ───────────────────────────────────────────────────────────

TEST(GammaT, BandZeroReduction) {
  // With unit sample variances and Lambda'Lambda/n = I the estimator is I.
  std::mt19937_64 gen(6);
  const int n = 40, t_len = 80;
  Eigen::MatrixXd lambda = oracles::random_matrix(n, 2, gen);
  // Orthonormalize so that Lambda'Lambda/n = I exactly.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(lambda);
  lambda = Eigen::MatrixXd(qr.householderQ()).leftCols(2) * std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd xi = oracles::random_matrix(t_len, n, gen);
  for (int i = 0; i < n; ++i) {
    xi.col(i) /= std::sqrt(xi.col(i).squaredNorm() / static_cast<double>(t_len));
  }
  const Eigen::MatrixXd g = gamma_t_hat(lambda, xi, 0);
  EXPECT_LE((g - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GammaT, ZeroLoadingsGiveZero) {
  std::mt19937_64 gen(7);
  const Eigen::MatrixXd xi = oracles::random_matrix(30, 10, gen);
  const Eigen::MatrixXd g = gamma_t_hat(Eigen::MatrixXd::Zero(10, 2), xi, 0);
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GammaT, BandedEstimatorTracksToeplitzPopulation) {
  // Oracle: population Gamma_t = (1/n) sum_ij lambda_i lambda_j' sigma_ij
  // with the closed-form Toeplitz/AR(1) covariance.
  const int n = 500, t_len = 2000, band = 10;
  const IdioProcessSpec idio = IdioProcessSpec::make(0.0, 0.5, 1.0);
  const Eigen::MatrixXd lambda =
      gen_loadings(n, 2, LoadingsSpec{LoadingsLaw::GaussianFixedSeed, 5.0}, 8);
  const Eigen::MatrixXd xi = gen_idio(n, t_len, idio, 9);

  const Eigen::MatrixXd pop_xi = idio_covariance(n, idio);
  Eigen::MatrixXd pop_gamma = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      pop_gamma += lambda.row(i).transpose() * lambda.row(j) * pop_xi(i, j);
  pop_gamma /= static_cast<double>(n);

  const Eigen::MatrixXd g = gamma_t_hat(lambda, xi, band);
  EXPECT_NEAR(g.trace(), pop_gamma.trace(), 0.10 * pop_gamma.trace());
}

TEST(GammaT, BandOutOfRange) {
  std::mt19937_64 gen(10);
  const Eigen::MatrixXd lambda = oracles::random_matrix(5, 2, gen);
  const Eigen::MatrixXd xi = oracles::random_matrix(20, 5, gen);
  EXPECT_THROW(gamma_t_hat(lambda, xi, 5), SpecError);
}

// ── Theta_i / Pi_t ────────────────────────────────────────────────────

TEST(ThetaPi, IdentityReductions) {
  std::mt19937_64 gen(11);
  const Eigen::MatrixXd phi = oracles::random_spd(3, gen);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_LE((theta_i_cov(v, id, phi) - phi).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(theta_i_cov(v, id, Eigen::MatrixXd::Zero(3, 3)).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd gamma = oracles::random_spd(3, gen);
  EXPECT_LE((pi_t_cov(id, gamma) - gamma).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((pi_t_cov(id, Eigen::MatrixXd(4.0 * gamma)) - 4.0 * pi_t_cov(id, gamma))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(ThetaPi, SingularInputsThrow) {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(pi_t_cov(zero, id), SpecError);
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  EXPECT_THROW(theta_i_cov(v, id, id), SpecError);
}

// Population trace identities: tr(Theta_i) = tr((GammaF)^{-1} Phi_i),
// tr(Pi_t) = tr((GammaF)^{-1} SigmaL^{-1} Gamma_t SigmaL^{-1}), and equality
// with the T x T-side covariances built from Q1.
TEST(ThetaPi, PopulationTraceIdentities) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 100; ++rep) {
    const int r = 1 + static_cast<int>(gen() % 4);
    const Eigen::MatrixXd gamma_f = oracles::random_spd(r, gen);
    const Eigen::MatrixXd sigma_l = oracles::random_spd(r, gen);
    const Eigen::MatrixXd phi = oracles::random_spd(r, gen);
    const Eigen::MatrixXd gamma_t = oracles::random_spd(r, gen);

    const PopulationRotations rot = population_rotations(gamma_f, sigma_l);
    const Eigen::MatrixXd theta = theta_i_cov(rot.v0, rot.q0, phi);
    const Eigen::MatrixXd theta_b = pi_t_cov(rot.q1, phi);
    const Eigen::MatrixXd pi = pi_t_cov(rot.q0, gamma_t);
    const Eigen::MatrixXd pi_b = theta_i_cov(rot.v0, rot.q1, gamma_t);

    const double tr_theta_expected = (gamma_f.inverse() * phi).trace();
    const double tr_pi_expected =
        (gamma_f.inverse() * sigma_l.inverse() * gamma_t * sigma_l.inverse()).trace();

    const double scale_theta = std::max(1.0, std::abs(tr_theta_expected));
    const double scale_pi = std::max(1.0, std::abs(tr_pi_expected));
    EXPECT_NEAR(theta.trace(), tr_theta_expected, 1e-10 * scale_theta);
    EXPECT_NEAR(theta_b.trace(), tr_theta_expected, 1e-10 * scale_theta);
    EXPECT_NEAR(pi.trace(), tr_pi_expected, 1e-10 * scale_pi);
    EXPECT_NEAR(pi_b.trace(), tr_pi_expected, 1e-10 * scale_pi);
  }
}

// ── chi standard error ────────────────────────────────────────────────

TEST(ChiSe, IdentityReduction) {
  Eigen::VectorXd lambda(2), f(2);
  lambda << 1.0, 2.0;
  f << 0.5, -1.5;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const ChiSe se = chi_se(lambda, f, id, id, id, id, 100, 400);
  EXPECT_NEAR(se.se, std::sqrt(lambda.squaredNorm() / 100.0 + f.squaredNorm() / 400.0), 1e-14);
}

TEST(ChiSe, VanishesInLargeSamples) {
  Eigen::VectorXd lambda(1), f(1);
  lambda << 1.0;
  f << 1.0;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  const ChiSe se = chi_se(lambda, f, id, id, id, zero, 1000000000, 10);
  EXPECT_LT(se.se, 1e-4);
}

TEST(ChiSe, BothZeroThrows) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(1);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_THROW(chi_se(v, v, id, id, zero, zero, 10, 10), DegenerateVariance);
}

// ── Wald ──────────────────────────────────────────────────────────────

TEST(Wald, ScalarArithmetic) {
  Eigen::MatrixXd r_mat = Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd q(1), l_hat(1);
  q << 0.0;
  l_hat << 0.1;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(1, 1);
  const WaldResult w = wald_test(r_mat, q, l_hat, theta, 100);
  EXPECT_NEAR(w.statistic, 1.0, 1e-12);
  EXPECT_EQ(w.dof, 1);
}

TEST(Wald, NullHypothesisExactlyTrue) {
  std::mt19937_64 gen(13);
  const Eigen::MatrixXd r_mat = oracles::random_matrix(2, 4, gen);
  const Eigen::VectorXd l_hat = oracles::random_matrix(4, 1, gen).col(0);
  const Eigen::VectorXd q = r_mat * l_hat;
  const Eigen::MatrixXd theta = oracles::random_spd(4, gen);
  const WaldResult w = wald_test(r_mat, q, l_hat, theta, 50);
  EXPECT_NEAR(w.statistic, 0.0, 1e-12);
  EXPECT_NEAR(w.p_value, 1.0, 1e-12);
}

TEST(Wald, InvariantToRestrictionReparameterization) {
  std::mt19937_64 gen(14);
  const Eigen::MatrixXd r_mat = oracles::random_matrix(2, 6, gen);
  const Eigen::VectorXd l_hat = oracles::random_matrix(6, 1, gen).col(0);
  Eigen::VectorXd q = r_mat * l_hat + 0.05 * oracles::random_matrix(2, 1, gen).col(0);
  const Eigen::MatrixXd theta = oracles::random_spd(6, gen);
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.3, -1.0, 0.7;
  const WaldResult w1 = wald_test(r_mat, q, l_hat, theta, 100);
  const WaldResult w2 = wald_test(m * r_mat, m * q, l_hat, theta, 100);
  EXPECT_NEAR(w1.statistic, w2.statistic, 1e-10 * std::max(1.0, w1.statistic));
}

TEST(Wald, PreconditionTAboveDim) {
  const Eigen::MatrixXd r_mat = Eigen::MatrixXd::Identity(2, 4);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd l_hat = Eigen::VectorXd::Zero(4);
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_THROW(wald_test(r_mat, q, l_hat, theta, 4), PreconditionViolation);
}

TEST(Wald, SingularRestrictionCovariance) {
  const Eigen::MatrixXd r_mat = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd l_hat(2);
  l_hat << 1.0, 1.0;
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(wald_test(r_mat, q, l_hat, theta, 100), SingularRestriction);
}

TEST(Wald, RankDeficientRRejected) {
  Eigen::MatrixXd r_mat(2, 3);
  r_mat.row(0) << 1.0, 0.0, 0.0;
  r_mat.row(1) << 2.0, 0.0, 0.0;
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(2);
  const Eigen::VectorXd l_hat = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(wald_test(r_mat, q, l_hat, theta, 100), SpecError);
}

// ── Confidence regions ────────────────────────────────────────────────

TEST(CiFactor, HalfWidthFormula) {
  const ConfidenceRegion ci = ci_factor(0.7, 1.0, 100, 0.05);
  EXPECT_NEAR(ci.half_width(0), 0.1959964, 1e-7);
  EXPECT_DOUBLE_EQ(ci.center(0), 0.7);
}

TEST(CiFactor, WidthShrinksAsAlphaApproachesOne) {
  const ConfidenceRegion ci = ci_factor(0.0, 1.0, 100, 0.9999);
  EXPECT_LT(ci.half_width(0), 1e-4);
}

TEST(CiFactor, RejectsNonPositiveVariance) {
  EXPECT_THROW(ci_factor(0.0, 0.0, 100, 0.05), SpecError);
}

TEST(Ellipsoid, ChiSquareThresholdAndAxes) {
  Eigen::VectorXd center(2);
  center << 1.0, -1.0;
  const int n = 50;
  const ConfidenceRegion region =
      ellipsoid_region(center, Eigen::MatrixXd::Identity(2, 2), n, 0.05);
  EXPECT_NEAR(region.threshold, 5.991465, 1e-6);
  for (int k = 0; k < 2; ++k)
    EXPECT_NEAR(region.semi_lengths(k), std::sqrt(5.991465 / n), 1e-6);
  EXPECT_TRUE(region.contains(center));
  Eigen::VectorXd outside = center;
  outside(0) += 10.0;
  EXPECT_FALSE(region.contains(outside));
}

TEST(Ellipsoid, PreconditionNAboveDim) {
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(4);
  EXPECT_THROW(ellipsoid_region(center, Eigen::MatrixXd::Identity(4, 4), 4, 0.05),
               PreconditionViolation);
}

TEST(Bonferroni, SingleCoordinateMatchesCiFactor) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Constant(1, 1, 0.3);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const ConfidenceRegion band = bonferroni_band(f, v, 100, 0.05);
  const ConfidenceRegion ci = ci_factor(0.3, 1.0, 100, 0.05);
  EXPECT_NEAR(band.half_width(0), ci.half_width(0), 1e-12);
}

TEST(Bonferroni, TwentyCoordinateQuantile) {
  // Tbar*r = 20, alpha = 0.05: per-coordinate z_{0.99875} = 3.023341.
  const Eigen::MatrixXd f = Eigen::MatrixXd::Zero(10, 2);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Ones(10, 2);
  const int n = 100;
  const ConfidenceRegion band = bonferroni_band(f, v, n, 0.05);
  EXPECT_NEAR(band.half_width(0) * std::sqrt(static_cast<double>(n)), 3.023341, 1e-6);
}

// ── PSD clipping ──────────────────────────────────────────────────────

TEST(ClipPsd, RepairsIndefiniteMatrix) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  int clips = 0;
  const Eigen::MatrixXd repaired = clip_psd(m, &clips);
  EXPECT_EQ(clips, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(repaired);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  int no_clip = 0;
  clip_psd(Eigen::MatrixXd::Identity(2, 2), &no_clip);
  EXPECT_EQ(no_clip, 0);
}

// ── Stacked helpers ───────────────────────────────────────────────────

TEST(Stacked, GammaBarSingleTimeMatchesGammaT) {
  std::mt19937_64 gen(15);
  const Eigen::MatrixXd lambda = oracles::random_matrix(20, 2, gen);
  const Eigen::MatrixXd xi = oracles::random_matrix(50, 20, gen);
  const Eigen::MatrixXd bar = gamma_bar_stacked(lambda, xi, {7}, 2);
  const Eigen::MatrixXd single = gamma_t_hat(lambda, xi, 2);
  EXPECT_LE((bar - single).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stacked, PiBarSingleTimeMatchesPiT) {
  std::mt19937_64 gen(16);
  const Eigen::MatrixXd q = oracles::random_spd(2, gen);
  const Eigen::MatrixXd gamma = oracles::random_spd(2, gen);
  EXPECT_LE((pi_bar_stacked(q, gamma) - pi_t_cov(q, gamma)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stacked, LoadingsCovDimensions) {
  std::mt19937_64 gen(17);
  const Eigen::MatrixXd f = oracles::random_matrix(100, 2, gen);
  const Eigen::MatrixXd xi = oracles::random_matrix(100, 10, gen);
  const Eigen::MatrixXd theta = stacked_loadings_cov(f, xi, {0, 3}, 4);
  EXPECT_EQ(theta.rows(), 4);
  EXPECT_LE((theta - theta.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

// ── compute_asym_cov bundle ───────────────────────────────────────────

TEST(AsymCovBundle, SimulationAndDataModes) {
  ModelSpec spec;
  spec.r = 2;
  spec.factors = FactorProcessSpec::var1(0.5 * Eigen::MatrixXd::Identity(2, 2),
                                         Eigen::MatrixXd::Identity(2, 2));
  spec.idio = IdioProcessSpec::make(0.3, 0.3, 1.0);
  const auto [panel, truth] = generate(spec, 60, 80, 18);
  const PcaEstimate e = estimate(panel, 2, Approach::A);

  const AsymCov sim = compute_asym_cov(panel, e, &truth, 0, 40);
  EXPECT_TRUE(sim.simulation_mode);
  const AsymCov data = compute_asym_cov(panel, e, nullptr, 0, 40);
  EXPECT_FALSE(data.simulation_mode);
  // Data mode Q_hat is the V_nT diagonal.
  EXPECT_LE((data.q_hat - Eigen::MatrixXd(data.v_nt.asDiagonal())).cwiseAbs().maxCoeff(), 1e-14);

  for (const auto* m : {&sim.phi_i, &sim.gamma_t, &sim.theta_i, &sim.pi_t}) {
    EXPECT_LE((*m - m->transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(*m);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
  // V_nT diagonal entries strictly positive and descending.
  EXPECT_GT(sim.v_nt(1), 0.0);
  EXPECT_GE(sim.v_nt(0), sim.v_nt(1));
}
