#include "fpca/montecarlo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "fpca/errors.hpp"
#include "oracles.hpp"

using namespace fpca;

namespace {

ModelSpec default_spec(int r = 2) {
  ModelSpec spec;
  spec.r = r;
  spec.factors = FactorProcessSpec::var1(0.5 * Eigen::MatrixXd::Identity(r, r),
                                         Eigen::MatrixXd::Identity(r, r));
  spec.idio = IdioProcessSpec::make(0.3, 0.3, 1.0);
  return spec;
}

}  // namespace

// ── rate_check self-tests ─────────────────────────────────────────────

TEST(RateCheck, RecoversExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double d : {10.0, 20.0, 40.0, 80.0}) pts.emplace_back(d, 3.7 / d);
  const RateFit fit = fit_loglog(pts);
  EXPECT_NEAR(fit.slope, -1.0, 1e-10);
  EXPECT_NEAR(fit.std_error, 0.0, 1e-10);
}

TEST(RateCheck, ConstantErrorsGiveZeroSlope) {
  std::vector<std::pair<double, double>> pts;
  for (double d : {10.0, 20.0, 40.0}) pts.emplace_back(d, 0.5);
  EXPECT_NEAR(fit_loglog(pts).slope, 0.0, 1e-12);
}

TEST(RateCheck, NeedsThreePoints) {
  std::vector<std::pair<double, double>> pts{{10.0, 1.0}, {20.0, 0.5}};
  EXPECT_THROW(fit_loglog(pts), SpecError);
}

TEST(RateCheck, DenominatorLaws) {
  // Loadings law: min(n, sqrt(nT), sqrt(T)); on the diagonal it collapses
  // to sqrt(T).
  EXPECT_DOUBLE_EQ(rate_denominator(RateLaw::LoadingsMatrix, 100, 100), 10.0);
  EXPECT_DOUBLE_EQ(rate_denominator(RateLaw::LoadingsMatrix, 10, 10000), 10.0);
  EXPECT_DOUBLE_EQ(rate_denominator(RateLaw::FactorsMatrix, 100, 100), 10.0);
  EXPECT_DOUBLE_EQ(rate_denominator(RateLaw::CommonProbe, 400, 100), 10.0);
}

// ── normality / coverage primitives ───────────────────────────────────

TEST(NormalityCheck, CalibratedOnTrueNormals) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = normal(gen);
  const KsOutcome ks = normality_check(draws);
  EXPECT_TRUE(ks.pass);
  EXPECT_NEAR(ks.critical, 1.63 / std::sqrt(10000.0), 1e-12);
}

TEST(NormalityCheck, DegenerateInputFails) {
  const std::vector<double> zeros(500, 0.0);
  EXPECT_FALSE(normality_check(zeros).pass);
}

TEST(NormalityCheck, RequiresTwoHundredReplications) {
  const std::vector<double> few(100, 0.0);
  EXPECT_THROW(normality_check(few), SpecError);
}

TEST(Coverage, DegenerateRegions) {
  // Width-zero interval misses any truth off the center; infinite width
  // covers everything.
  ConfidenceRegion point;
  point.kind = RegionKind::Interval;
  point.center = Eigen::VectorXd::Zero(1);
  point.half_width = Eigen::VectorXd::Zero(1);
  EXPECT_FALSE(point.contains(Eigen::VectorXd::Constant(1, 0.1)));
  EXPECT_TRUE(point.contains(Eigen::VectorXd::Zero(1)));

  ConfidenceRegion infinite = point;
  infinite.half_width(0) = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(infinite.contains(Eigen::VectorXd::Constant(1, 1e12)));

  EXPECT_DOUBLE_EQ(coverage_fraction({1, 1, 0, 1}), 0.75);
}

// ── run_replication ───────────────────────────────────────────────────

TEST(RunReplication, NoiselessPanelRecoversExactly) {
  ModelSpec spec = default_spec();
  spec.idio.scale = 0.0;
  RepOptions opts;
  opts.checks.cal_h_errors = true;
  opts.checks.hhat = true;
  const RepRecord rec = run_replication(spec, 40, 60, 5, opts);
  ASSERT_FALSE(rec.failed) << rec.error;
  EXPECT_LE(rec.err_loadings, 1e-8);
  EXPECT_LE(rec.err_factors, 1e-8);
  EXPECT_LE(rec.err_chi, 1e-8);
}

TEST(RunReplication, DeterministicInSeed) {
  const ModelSpec spec = default_spec();
  RepOptions opts;
  opts.checks.hhat = true;
  opts.checks.cov_consistency = true;
  const RepRecord a = run_replication(spec, 30, 40, 77, opts);
  const RepRecord b = run_replication(spec, 30, 40, 77, opts);
  EXPECT_EQ(a.err_loadings, b.err_loadings);
  EXPECT_EQ(a.err_factors, b.err_factors);
  EXPECT_EQ(a.err_chi, b.err_chi);
  EXPECT_EQ(a.hhat_dist, b.hhat_dist);
  EXPECT_EQ(a.cov_dist, b.cov_dist);
}

TEST(RunReplication, ErrorShrinksWithSize) {
  const ModelSpec spec = default_spec();
  auto median_factors_err = [&](int n, int t_len) {
    std::vector<double> errs;
    for (int rep = 0; rep < 40; ++rep) {
      const RepRecord rec = run_replication(spec, n, t_len, 100 + rep, {});
      if (!rec.failed) errs.push_back(rec.err_factors);
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  EXPECT_LT(median_factors_err(100, 100), median_factors_err(25, 25));
}

TEST(RunReplication, FailureIsRecordedNotThrown) {
  // A panel with r = n - 1 ... generate a degenerate spec by forcing an
  // impossible probe index instead: errors are recorded on the record.
  const ModelSpec spec = default_spec();
  RepOptions opts;
  opts.probe.series = 500;  // out of range for n = 30
  const RepRecord rec = run_replication(spec, 30, 40, 5, opts);
  EXPECT_TRUE(rec.failed);
  EXPECT_FALSE(rec.error.empty());
}

// ── run_grid ──────────────────────────────────────────────────────────

TEST(RunGrid, SummariesIndependentOfThreadCount) {
  ExperimentGrid grid;
  grid.cells = {{30, 40}, {50, 60}};
  grid.replications = 8;
  grid.base_seed = 11;
  grid.model = default_spec();
  grid.checks.hhat = true;
  grid.checks.ols_equiv = true;

  grid.threads = 1;
  const McReport r1 = run_grid(grid);
  grid.threads = 4;
  const McReport r4 = run_grid(grid);
  EXPECT_EQ(r1.to_json_string(), r4.to_json_string());
}

TEST(RunGrid, RecordsCountAndReproducibility) {
  ExperimentGrid grid;
  grid.cells = {{25, 30}, {40, 50}};
  grid.replications = 10;
  grid.base_seed = 3;
  grid.model = default_spec();
  const McReport report = run_grid(grid);
  EXPECT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.records.size(), 20u);
  for (const auto& cell : report.cells) EXPECT_EQ(cell.failed, 0);

  // Seeds are distinct per (cell, rep).
  std::set<std::uint64_t> seeds;
  for (const auto& rec : report.records) seeds.insert(rec.seed);
  EXPECT_EQ(seeds.size(), report.records.size());

  const McReport again = run_grid(grid);
  EXPECT_EQ(report.to_json_string(), again.to_json_string());
}

TEST(RunGrid, RejectsInvalidCells) {
  ExperimentGrid grid;
  grid.cells = {{2, 100}};
  grid.replications = 1;
  grid.model = default_spec();  // r = 2 >= min(n, T)
  EXPECT_THROW(run_grid(grid), SpecError);
}

TEST(RunGrid, OlsEquivalenceGapShrinksAlongDiagonal) {
  ExperimentGrid grid;
  grid.cells = {{60, 60}, {120, 120}, {240, 240}};
  grid.replications = 60;
  grid.base_seed = 17;
  grid.model = default_spec();
  grid.checks.ols_equiv = true;
  const McReport report = run_grid(grid);
  EXPECT_GT(report.cells[0].med_ols_gap, report.cells[1].med_ols_gap);
  EXPECT_GT(report.cells[1].med_ols_gap, report.cells[2].med_ols_gap);
}

TEST(RunGrid, HhatSignMatrixProperties) {
  ExperimentGrid grid;
  grid.cells = {{50, 60}};
  grid.replications = 20;
  grid.base_seed = 23;
  grid.model = default_spec();
  grid.model.identification = true;
  grid.checks.hhat = true;
  const McReport report = run_grid(grid);
  EXPECT_GE(report.cells[0].med_hhat, 0.0);
  // J = sign(diag(H)) keeps ||H - J|| below ||H|| + sqrt(r) trivially; the
  // useful bound is that the distance is small once H is near a sign matrix.
  EXPECT_LT(report.cells[0].med_hhat, 1.0);
}

// chi standardized errors have roughly unit spread at moderate sizes.
TEST(RunGrid, ChiZstatSpreadNearOne) {
  ExperimentGrid grid;
  grid.cells = {{200, 200}};
  grid.replications = 1000;
  grid.base_seed = 29;
  grid.model = default_spec();
  grid.checks.coverage = true;
  grid.checks.normality = true;
  const McReport report = run_grid(grid);
  std::vector<double> z;
  for (const auto& rec : report.records)
    if (!rec.failed) z.push_back(rec.chi_zstat);
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.size() - 1);
  EXPECT_GE(std::sqrt(var), 0.85);
  EXPECT_LE(std::sqrt(var), 1.15);
}

// ── equivalence audit ─────────────────────────────────────────────────

TEST(EquivalenceAudit, RandomPanelPasses) {
  std::mt19937_64 gen(31);
  const Panel x{oracles::random_matrix(50, 30, gen)};
  const AuditRecord audit = equivalence_audit(x, 3);
  EXPECT_TRUE(audit.ran);
  EXPECT_TRUE(audit.pass()) << "common diff " << audit.max_pairwise_common_diff
                            << ", eig diff " << audit.max_eigval_rel_diff;
}

TEST(EquivalenceAudit, NoiselessRankRPanel) {
  std::mt19937_64 gen(32);
  const Eigen::MatrixXd lambda = oracles::random_matrix(20, 2, gen);
  const Eigen::MatrixXd f = oracles::random_matrix(35, 2, gen);
  const Panel x{f * lambda.transpose()};
  const AuditRecord audit = equivalence_audit(x, 2);
  EXPECT_TRUE(audit.pass());
  EXPECT_LE(audit.max_pairwise_common_diff, 1e-10);
}

TEST(EquivalenceAudit, DegenerateSpectrumIsSkippedWithReason) {
  // Orthogonal columns with identical norms give a repeated top eigenvalue.
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 4);
  x(0, 0) = x(1, 1) = x(2, 2) = x(3, 3) = 2.0;
  const AuditRecord audit = equivalence_audit(Panel{x}, 2);
  EXPECT_FALSE(audit.ran);
  EXPECT_FALSE(audit.skip_reason.empty());
}

TEST(EquivalenceAudit, IdentifiedTruthGramMatchesSpikedEigenvalues) {
  std::mt19937_64 gen(33);
  Eigen::MatrixXd lambda = oracles::random_matrix(40, 2, gen);
  Eigen::MatrixXd factors = oracles::random_matrix(60, 2, gen);
  apply_identification_constraints(lambda, factors);
  auto [panel, truth] = assemble_panel(lambda, factors, Eigen::MatrixXd::Zero(60, 40));
  const AuditRecord audit = equivalence_audit(panel, 2, &truth);
  EXPECT_TRUE(audit.prop7_checked);
  EXPECT_TRUE(audit.prop7_ok) << "offdiag " << audit.prop7_offdiag << ", diag diff "
                              << audit.prop7_diag_diff;
}
