#include "fpca/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fpca/errors.hpp"
#include "fpca/stats.hpp"

namespace fpca {

namespace {

constexpr std::uint64_t kCellStream = 0xce11;
constexpr std::uint64_t kCellLoadingsStream = 0x10ad;
constexpr std::uint64_t kRepFactorStream = 0xfac7;
constexpr std::uint64_t kRepIdioStream = 0x1d10;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

int resolve_probe_time(int configured, int t_len) {
  if (configured >= 0) {
    if (configured >= t_len) throw SpecError("probe time index out of range");
    return configured;
  }
  return (t_len + 1) / 2 - 1;  // ceil(T/2), 0-based
}

Eigen::MatrixXd default_wald_restrictions(int nbar, int r) {
  const int p = nbar * r;
  if (p < 2) throw SpecError("wald check needs at least two stacked coordinates");
  Eigen::MatrixXd rm = Eigen::MatrixXd::Zero(2, p);
  rm(0, 0) = 1.0;
  rm(0, p - 1) = -1.0;
  if (p == 2) {
    rm(1, 0) = 1.0;
    rm(1, 1) = 1.0;
  } else {
    rm(1, 1) = 1.0;
    rm(1, p - 2) = 1.0;
  }
  return rm;
}

}  // namespace

std::vector<std::string> CheckSet::names() const {
  std::vector<std::string> out;
  if (rates) out.push_back("rates");
  if (coverage) out.push_back("coverage");
  if (normality) out.push_back("normality");
  if (equivalence) out.push_back("equivalence");
  if (hhat) out.push_back("hhat");
  if (cov_consistency) out.push_back("cov_consistency");
  if (wald) out.push_back("wald");
  if (ols_equiv) out.push_back("ols_equiv");
  if (cal_h_errors) out.push_back("cal_h_errors");
  return out;
}

CheckSet CheckSet::parse(const std::vector<std::string>& names) {
  CheckSet cs;
  for (const auto& name : names) {
    if (name == "rates") cs.rates = true;
    else if (name == "coverage") cs.coverage = true;
    else if (name == "normality") cs.normality = true;
    else if (name == "equivalence") cs.equivalence = true;
    else if (name == "hhat") cs.hhat = true;
    else if (name == "cov_consistency") cs.cov_consistency = true;
    else if (name == "wald") cs.wald = true;
    else if (name == "ols_equiv") cs.ols_equiv = true;
    else if (name == "cal_h_errors") cs.cal_h_errors = true;
    else throw SpecError("unknown check tag: " + name);
  }
  return cs;
}

double rate_denominator(RateLaw law, int n, int t_len) {
  const double nd = n;
  const double td = t_len;
  switch (law) {
    case RateLaw::LoadingsMatrix:
      return std::min({nd, std::sqrt(nd * td), std::sqrt(td)});
    case RateLaw::FactorsMatrix:
      return std::min({std::sqrt(nd), std::sqrt(nd * td), td});
    case RateLaw::CommonProbe:
      return std::min(std::sqrt(nd), std::sqrt(td));
  }
  throw SpecError("rate_denominator: unknown law");
}

RateFit fit_loglog(const std::vector<std::pair<double, double>>& denom_and_error) {
  if (denom_and_error.size() < 3)
    throw SpecError("rate fit needs at least 3 grid points");
  const int k = static_cast<int>(denom_and_error.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(k), ys(k);
  for (int i = 0; i < k; ++i) {
    if (!(denom_and_error[i].first > 0.0) || !(denom_and_error[i].second > 0.0))
      throw SpecError("rate fit needs positive denominators and errors");
    xs[i] = std::log(denom_and_error[i].first);
    ys[i] = std::log(denom_and_error[i].second);
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw SpecError("rate fit needs distinct grid points");

  RateFit fit;
  fit.points = k;
  fit.slope = sxy / sxx;
  double rss = 0.0;
  for (int i = 0; i < k; ++i) {
    const double resid = ys[i] - my - fit.slope * (xs[i] - mx);
    rss += resid * resid;
  }
  fit.std_error = (k > 2) ? std::sqrt(rss / (k - 2) / sxx) : 0.0;
  return fit;
}

RateFit rate_check(const std::vector<CellSummary>& cells, ErrorKind kind, RateLaw law) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(cells.size());
  for (const auto& c : cells) {
    double err = 0.0;
    switch (kind) {
      case ErrorKind::Loadings: err = c.med_err_loadings; break;
      case ErrorKind::Factors: err = c.med_err_factors; break;
      case ErrorKind::ChiProbe: err = c.med_err_chi; break;
    }
    pts.emplace_back(rate_denominator(law, c.n, c.t_len), err);
  }
  return fit_loglog(pts);
}

KsOutcome normality_check(const std::vector<double>& standardized) {
  if (standardized.size() < 200)
    throw SpecError("normality_check requires at least 200 replications");
  KsOutcome out;
  out.count = static_cast<int>(standardized.size());
  out.statistic = ks_statistic_normal(standardized);
  out.critical = 1.63 / std::sqrt(static_cast<double>(out.count));
  out.pass = out.statistic < out.critical;
  return out;
}

double coverage_fraction(const std::vector<int>& hits) {
  if (hits.empty()) return 0.0;
  double s = 0.0;
  for (int h : hits) s += (h != 0) ? 1.0 : 0.0;
  return s / static_cast<double>(hits.size());
}

// ── Single replication ────────────────────────────────────────────────

RepRecord run_replication(const ModelSpec& spec, int n, int t_len, std::uint64_t seed,
                          const RepOptions& opts) {
  RepRecord rec;
  rec.seed = seed;
  try {
    Eigen::MatrixXd lambda =
        opts.fixed_loadings ? *opts.fixed_loadings
                            : gen_loadings(n, spec.r, spec.loadings,
                                           derive_seed(seed, kCellLoadingsStream));
    Eigen::MatrixXd factors = gen_factors(t_len, spec.r, spec.factors,
                                          derive_seed(seed, kRepFactorStream), spec.burn_in);
    Eigen::MatrixXd idio =
        gen_idio(n, t_len, spec.idio, derive_seed(seed, kRepIdioStream));
    if (spec.identification) apply_identification_constraints(lambda, factors);
    auto [panel, truth] = assemble_panel(lambda, factors, idio);

    const PcaEstimate est = estimate(panel, spec.r, opts.approach);
    const Eigen::MatrixXd lambda_a = lambda_as_approach_a(est);
    const Eigen::MatrixXd f_a = f_as_approach_a(est);
    const Eigen::VectorXd v_nt = v_nt_diagonal(est);
    const double nd = n, td = t_len;

    // Rotation H_hat (and its explicit inverse), no population input needed.
    const Eigen::MatrixXd ftf = truth.factors.transpose() * truth.factors / td;
    const Eigen::MatrixXd ltl_hat = truth.loadings.transpose() * lambda_a / nd;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ltl_hat);
    if (!lu.isInvertible())
      throw RotationSingular("run_replication: Lambda'Lambda_hat/n singular");
    Eigen::FullPivLU<Eigen::MatrixXd> lu_ftf(ftf);
    if (!lu_ftf.isInvertible())
      throw RotationSingular("run_replication: F'F/T singular");
    const Eigen::MatrixXd h_hat = ftf * ltl_hat * v_nt.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd h_inv =
        v_nt.asDiagonal() * lu.inverse() * lu_ftf.inverse();

    const Eigen::MatrixXd dev_l = lambda_a - truth.loadings * h_hat;
    const Eigen::MatrixXd dev_f = f_a - truth.factors * h_inv.transpose();
    rec.err_loadings = dev_l.norm() / std::sqrt(nd);
    rec.err_factors = dev_f.norm() / std::sqrt(td);
    rec.err_loading_max = dev_l.rowwise().norm().maxCoeff();
    rec.err_factor_max = dev_f.rowwise().norm().maxCoeff();

    const int probe_i = opts.probe.series;
    if (probe_i < 0 || probe_i >= n) throw SpecError("probe series index out of range");
    const int probe_t = resolve_probe_time(opts.probe.time, t_len);
    const double chi_hat = f_a.row(probe_t).dot(lambda_a.row(probe_i));
    rec.err_chi = std::abs(chi_hat - truth.common(probe_t, probe_i));

    if (opts.checks.cal_h_errors) {
      const PopulationCovariances pop =
          spec.identification
              ? population_covariances(
                    truth.loadings,
                    Eigen::MatrixXd::Identity(spec.r, spec.r), spec.idio, false)
              : population_covariances(truth.loadings, spec.factors, spec.idio, false);
      const RotationBundle bundle = rotation_bundle(truth, pop, est);
      const Eigen::MatrixXd cal_h_inv = bundle.cal_h.inverse();
      rec.err_loadings_calh =
          (lambda_a - truth.loadings * bundle.cal_h).norm() / std::sqrt(nd);
      rec.err_factors_calh =
          (f_a - truth.factors * cal_h_inv.transpose()).norm() / std::sqrt(td);
      rec.err_chi_calh = rec.err_chi;
    }

    if (opts.checks.hhat) {
      Eigen::VectorXd j_sign(spec.r);
      for (int j = 0; j < spec.r; ++j) j_sign(j) = (h_hat(j, j) >= 0.0) ? 1.0 : -1.0;
      rec.hhat_dist = (h_hat - Eigen::MatrixXd(j_sign.asDiagonal())).norm();
      rec.hhat_inv_dist = (h_inv - Eigen::MatrixXd(j_sign.asDiagonal())).norm();
    }

    if (opts.checks.coverage || opts.checks.normality) {
      const AsymCov cov = compute_asym_cov(panel, est, &truth, probe_i, probe_t,
                                           opts.bandwidth, opts.band);
      const Eigen::VectorXd target_l = h_hat.transpose() * truth.loadings.row(probe_i).transpose();
      const Eigen::VectorXd target_f = h_inv * truth.factors.row(probe_t).transpose();
      rec.loading_zstats.resize(spec.r);
      rec.factor_zstats.resize(spec.r);
      rec.loading_ci_hit.resize(spec.r);
      rec.factor_ci_hit.resize(spec.r);
      const double z = normal_quantile(1.0 - opts.alpha / 2.0);
      for (int j = 0; j < spec.r; ++j) {
        const double dl = lambda_a(probe_i, j) - target_l(j);
        const double se_l = std::sqrt(cov.theta_i(j, j) / td);
        rec.loading_zstats(j) = dl / se_l;
        rec.loading_ci_hit[j] = std::abs(dl) <= z * se_l ? 1 : 0;

        const double df = f_a(probe_t, j) - target_f(j);
        const ConfidenceRegion ci = ci_factor(f_a(probe_t, j), cov.pi_t(j, j), n, opts.alpha);
        rec.factor_zstats(j) = df / std::sqrt(cov.pi_t(j, j) / nd);
        rec.factor_ci_hit[j] =
            ci.contains(Eigen::VectorXd::Constant(1, target_f(j))) ? 1 : 0;
      }

      // chi_se plugs hatted quantities throughout; its quadratic forms are
      // rotation-invariant only when Phi/Gamma come from the same hatted
      // system, so they are recomputed from the estimate here.
      const Eigen::MatrixXd xi_hat = panel.data - f_a * lambda_a.transpose();
      const Eigen::MatrixXd phi_rot =
          clip_psd(hac_phi(f_a, xi_hat.col(probe_i), opts.bandwidth));
      const Eigen::MatrixXd gamma_rot = clip_psd(gamma_t_hat(lambda_a, xi_hat, opts.band));
      const Eigen::MatrixXd sigma_lambda_hat = lambda_a.transpose() * lambda_a / nd;
      const Eigen::MatrixXd gamma_f_hat = f_a.transpose() * f_a / td;
      const ChiSe se = chi_se(lambda_a.row(probe_i), f_a.row(probe_t),
                              sigma_lambda_hat.inverse(), gamma_f_hat.inverse(),
                              gamma_rot, phi_rot, n, t_len);
      rec.chi_zstat = (chi_hat - truth.common(probe_t, probe_i)) / se.se;
    }

    if (opts.checks.wald) {
      if (!opts.wald) throw SpecError("wald check enabled without a WaldConfig");
      const auto& wc = *opts.wald;
      const int nbar = static_cast<int>(wc.series.size());
      Eigen::MatrixXd r_mat =
          wc.r_mat.size() > 0 ? wc.r_mat : default_wald_restrictions(nbar, spec.r);
      Eigen::VectorXd l_hat(nbar * spec.r), l_true(nbar * spec.r);
      for (int k = 0; k < nbar; ++k) {
        const int s = wc.series[static_cast<std::size_t>(k)];
        if (s < 0 || s >= n) throw SpecError("wald series index out of range");
        l_hat.segment(k * spec.r, spec.r) = lambda_a.row(s).transpose();
        l_true.segment(k * spec.r, spec.r) = truth.loadings.row(s).transpose();
      }
      const Eigen::VectorXd q = wc.use_truth_q ? Eigen::VectorXd(r_mat * l_true) : wc.q;
      const Eigen::MatrixXd xi_hat = panel.data - f_a * lambda_a.transpose();
      const Eigen::MatrixXd theta_bar =
          stacked_loadings_cov(f_a, xi_hat, wc.series, opts.bandwidth);
      const WaldResult wald = wald_test(r_mat, q, l_hat, theta_bar, t_len);
      rec.wald_stat = wald.statistic;
      rec.wald_pvalue = wald.p_value;
      rec.wald_reject = wald.reject_at.at(0.05) ? 1 : 0;
    }

    if (opts.checks.cov_consistency) {
      const PopulationCovariances pop =
          spec.identification
              ? population_covariances(
                    truth.loadings,
                    Eigen::MatrixXd::Identity(spec.r, spec.r), spec.idio, false)
              : population_covariances(truth.loadings, spec.factors, spec.idio, false);
      rec.cov_dist =
          std::sqrt(td) / nd * spectral_norm_sym(sample_cov_nn(panel) - pop.gamma_x);
    }

    if (opts.checks.ols_equiv) {
      const Eigen::VectorXd dev =
          std::sqrt(td) *
          (lambda_a.row(probe_i).transpose() - h_hat.transpose() * truth.loadings.row(probe_i).transpose());
      const Eigen::VectorXd lead =
          h_inv * (truth.factors.transpose() * truth.idio.col(probe_i)) / std::sqrt(td);
      rec.ols_gap = (dev - lead).norm();
    }
  } catch (const Error& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

// ── Grid engine ───────────────────────────────────────────────────────

namespace {

// Per-cell loadings draw. The seed is shared across cells so loadings are
// nested in n (loadings are treated as fixed constants); probe-series quantities
// are then comparable across grid cells. In identification mode, redraw
// until the diagonalized first row is bounded away from zero so the
// first-row sign convention stays identified at finite samples.
Eigen::MatrixXd draw_cell_loadings(const ModelSpec& spec, int n, std::uint64_t base) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd lambda = gen_loadings(n, spec.r, spec.loadings, base + attempt);
    if (!spec.identification) return lambda;
    Eigen::MatrixXd ll = lambda.transpose() * lambda / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (ll + ll.transpose()));
    const Eigen::MatrixXd rotated = lambda * eig.eigenvectors().rowwise().reverse();
    if (rotated.row(0).cwiseAbs().minCoeff() >= 0.3) return lambda;
  }
  throw SpecError(
      "draw_cell_loadings: could not find a sign-identified loadings draw; "
      "first-row entries stay too close to zero");
}

CellSummary summarize_cell(int n, int t_len, const std::vector<RepRecord>& recs,
                           const CheckSet& checks) {
  CellSummary cell;
  cell.n = n;
  cell.t_len = t_len;
  cell.replications = static_cast<int>(recs.size());

  std::vector<double> el, ef, elm, efm, ec, elc, efc, ecc, hh, hhi, cd, og;
  std::vector<std::vector<double>> lz, fz;
  std::vector<double> cz;
  std::vector<std::vector<int>> lhit, fhit;
  std::vector<double> wrej;

  for (const auto& rec : recs) {
    if (rec.failed) {
      ++cell.failed;
      continue;
    }
    el.push_back(rec.err_loadings);
    ef.push_back(rec.err_factors);
    elm.push_back(rec.err_loading_max);
    efm.push_back(rec.err_factor_max);
    ec.push_back(rec.err_chi);
    if (checks.cal_h_errors) {
      elc.push_back(rec.err_loadings_calh);
      efc.push_back(rec.err_factors_calh);
      ecc.push_back(rec.err_chi_calh);
    }
    if (checks.hhat) {
      hh.push_back(rec.hhat_dist);
      hhi.push_back(rec.hhat_inv_dist);
    }
    if (checks.cov_consistency) cd.push_back(rec.cov_dist);
    if (checks.ols_equiv) og.push_back(rec.ols_gap);
    if (checks.wald) wrej.push_back(rec.wald_reject);
    if (checks.coverage || checks.normality) {
      const int r = static_cast<int>(rec.loading_zstats.size());
      lz.resize(r);
      fz.resize(r);
      lhit.resize(r);
      fhit.resize(r);
      for (int j = 0; j < r; ++j) {
        lz[j].push_back(rec.loading_zstats(j));
        fz[j].push_back(rec.factor_zstats(j));
        lhit[j].push_back(rec.loading_ci_hit[static_cast<std::size_t>(j)]);
        fhit[j].push_back(rec.factor_ci_hit[static_cast<std::size_t>(j)]);
      }
      cz.push_back(rec.chi_zstat);
    }
  }

  cell.med_err_loadings = median(el);
  cell.mean_err_loadings = mean(el);
  cell.med_err_factors = median(ef);
  cell.mean_err_factors = mean(ef);
  cell.med_err_loading_max = median(elm);
  cell.med_err_factor_max = median(efm);
  cell.med_err_chi = median(ec);
  cell.mean_err_chi = mean(ec);
  cell.med_err_loadings_calh = median(elc);
  cell.med_err_factors_calh = median(efc);
  cell.med_err_chi_calh = median(ecc);
  if (checks.hhat) {
    cell.med_hhat = median(hh);
    cell.med_hhat_inv = median(hhi);
  }
  if (checks.cov_consistency) cell.med_cov_dist = median(cd);
  if (checks.ols_equiv) cell.med_ols_gap = median(og);
  if (checks.wald) cell.wald_rejection_rate = mean(wrej);

  if (checks.coverage && !lhit.empty()) {
    std::vector<int> all_l, all_f;
    for (const auto& h : lhit) all_l.insert(all_l.end(), h.begin(), h.end());
    for (const auto& h : fhit) all_f.insert(all_f.end(), h.begin(), h.end());
    cell.coverage_loadings = coverage_fraction(all_l);
    cell.coverage_factors = coverage_fraction(all_f);
  }
  if (checks.normality && !cz.empty()) {
    for (const auto& z : lz) cell.ks_loadings.push_back(normality_check(z));
    for (const auto& z : fz) cell.ks_factors.push_back(normality_check(z));
    cell.ks_chi = normality_check(cz);
  }
  return cell;
}

}  // namespace

McReport run_grid(const ExperimentGrid& grid) {
  if (grid.cells.empty()) throw SpecError("run_grid: empty grid");
  if (grid.replications < 1) throw SpecError("run_grid: replications must be >= 1");
  for (const auto& [n, t_len] : grid.cells) {
    if (grid.model.r >= std::min(n, t_len))
      throw SpecError("run_grid: cell violates r < min(n, T)");
  }

  const int n_cells = static_cast<int>(grid.cells.size());
  std::vector<Eigen::MatrixXd> cell_loadings(static_cast<std::size_t>(n_cells));
  std::vector<std::uint64_t> cell_seeds(static_cast<std::size_t>(n_cells));
  const std::uint64_t loadings_seed = derive_seed(grid.base_seed, kCellLoadingsStream);
  for (int c = 0; c < n_cells; ++c) {
    cell_seeds[c] = derive_seed(grid.base_seed, kCellStream, static_cast<std::uint64_t>(c));
    cell_loadings[c] = draw_cell_loadings(grid.model, grid.cells[c].first, loadings_seed);
  }

  std::vector<std::vector<RepRecord>> records(static_cast<std::size_t>(n_cells));
  for (auto& v : records) v.resize(static_cast<std::size_t>(grid.replications));

  const int total = n_cells * grid.replications;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const int n_threads =
      std::max(1, std::min<int>(grid.threads > 0 ? grid.threads : static_cast<int>(hw), total));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= total) return;
      const int c = task / grid.replications;
      const int rep = task % grid.replications;
      RepOptions opts;
      opts.checks = grid.checks;
      opts.approach = grid.approach;
      opts.alpha = grid.alpha;
      opts.bandwidth = grid.bandwidth;
      opts.band = grid.band;
      opts.probe = grid.probe;
      opts.fixed_loadings = cell_loadings[static_cast<std::size_t>(c)];
      opts.wald = grid.checks.wald ? &grid.wald : nullptr;
      const std::uint64_t rep_seed =
          derive_seed(cell_seeds[static_cast<std::size_t>(c)], static_cast<std::uint64_t>(rep) + 1);
      RepRecord rec = run_replication(grid.model, grid.cells[static_cast<std::size_t>(c)].first,
                                      grid.cells[static_cast<std::size_t>(c)].second, rep_seed, opts);
      rec.cell = c;
      rec.rep = rep;
      records[static_cast<std::size_t>(c)][static_cast<std::size_t>(rep)] = std::move(rec);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  McReport report;
  report.cells_spec = grid.cells;
  report.replications = grid.replications;
  report.base_seed = grid.base_seed;
  report.checks = grid.checks.names();
  report.alpha = grid.alpha;
  for (int c = 0; c < n_cells; ++c) {
    report.cells.push_back(summarize_cell(grid.cells[static_cast<std::size_t>(c)].first,
                                          grid.cells[static_cast<std::size_t>(c)].second,
                                          records[static_cast<std::size_t>(c)], grid.checks));
    for (auto& rec : records[static_cast<std::size_t>(c)]) report.records.push_back(std::move(rec));
  }
  if (grid.checks.rates && n_cells >= 3) {
    report.rate_loadings = rate_check(report.cells, ErrorKind::Loadings, RateLaw::LoadingsMatrix);
    report.rate_factors = rate_check(report.cells, ErrorKind::Factors, RateLaw::FactorsMatrix);
    report.rate_chi = rate_check(report.cells, ErrorKind::ChiProbe, RateLaw::CommonProbe);
  }
  return report;
}

// ── Equivalence audit ─────────────────────────────────────────────────

AuditRecord equivalence_audit(const Panel& x, int r, const TruthDecomposition* identified_truth) {
  AuditRecord audit;
  try {
    const Approach approaches[4] = {Approach::A, Approach::B, Approach::C, Approach::D};
    Eigen::MatrixXd commons[4];
    for (int k = 0; k < 4; ++k) commons[k] = common_component(estimate(x, r, approaches[k]));
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        audit.max_pairwise_common_diff = std::max(
            audit.max_pairwise_common_diff, (commons[a] - commons[b]).cwiseAbs().maxCoeff());
      }
    }
    audit.common_ok = audit.max_pairwise_common_diff <= 1e-8;

    const double nd = static_cast<double>(x.n_len());
    const double td = static_cast<double>(x.t_len());
    const EigTopR nn = eig_top_r(sample_cov_nn(x) / nd, r);
    const EigTopR tt = eig_top_r(sample_cov_tt(x) / td, r);
    for (int j = 0; j < r; ++j) {
      audit.max_eigval_rel_diff = std::max(
          audit.max_eigval_rel_diff, std::abs(nn.values(j) - tt.values(j)) / nn.values(j));
    }
    audit.eigvals_ok = audit.max_eigval_rel_diff <= 1e-10;

    if (identified_truth) {
      audit.prop7_checked = true;
      const Eigen::MatrixXd& lambda = identified_truth->loadings;
      const Eigen::MatrixXd ll = lambda.transpose() * lambda / static_cast<double>(lambda.rows());
      for (Eigen::Index i = 0; i < ll.rows(); ++i) {
        for (Eigen::Index j = 0; j < ll.cols(); ++j) {
          if (i != j) audit.prop7_offdiag = std::max(audit.prop7_offdiag, std::abs(ll(i, j)));
        }
      }
      const Eigen::MatrixXd gamma_chi = lambda * lambda.transpose();
      const EigTopR chi = eig_top_r(gamma_chi, r);
      for (int j = 0; j < r; ++j) {
        audit.prop7_diag_diff = std::max(
            audit.prop7_diag_diff,
            std::abs(ll(j, j) - chi.values(j) / static_cast<double>(lambda.rows())));
      }
      audit.prop7_ok = audit.prop7_offdiag <= 1e-8 && audit.prop7_diag_diff <= 1e-8;
    }
    audit.ran = true;
  } catch (const DegenerateEigenvalues& e) {
    audit.ran = false;
    audit.skip_reason = e.what();
  }
  return audit;
}

// ── Report serialization ──────────────────────────────────────────────

namespace {

nlohmann::json ks_to_json(const KsOutcome& ks) {
  return nlohmann::json{{"statistic", ks.statistic},
                        {"critical", ks.critical},
                        {"pass", ks.pass},
                        {"count", ks.count}};
}

}  // namespace

std::string McReport::to_json_string() const {
  nlohmann::json j;
  j["replications"] = replications;
  j["base_seed"] = base_seed;
  j["checks"] = checks;
  j["alpha"] = alpha;
  j["cells_spec"] = nlohmann::json::array();
  for (const auto& [n, t] : cells_spec) j["cells_spec"].push_back({n, t});

  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json jc;
    jc["n"] = c.n;
    jc["t"] = c.t_len;
    jc["replications"] = c.replications;
    jc["failed"] = c.failed;
    jc["median"] = {{"err_loadings", c.med_err_loadings},
                    {"err_factors", c.med_err_factors},
                    {"err_loading_max", c.med_err_loading_max},
                    {"err_factor_max", c.med_err_factor_max},
                    {"err_chi", c.med_err_chi},
                    {"err_loadings_calh", c.med_err_loadings_calh},
                    {"err_factors_calh", c.med_err_factors_calh},
                    {"err_chi_calh", c.med_err_chi_calh}};
    jc["mean"] = {{"err_loadings", c.mean_err_loadings},
                  {"err_factors", c.mean_err_factors},
                  {"err_chi", c.mean_err_chi}};
    if (c.coverage_loadings >= 0.0) {
      jc["coverage"] = {{"loadings", c.coverage_loadings}, {"factors", c.coverage_factors}};
    }
    if (!c.ks_loadings.empty()) {
      jc["ks"]["loadings"] = nlohmann::json::array();
      for (const auto& ks : c.ks_loadings) jc["ks"]["loadings"].push_back(ks_to_json(ks));
      jc["ks"]["factors"] = nlohmann::json::array();
      for (const auto& ks : c.ks_factors) jc["ks"]["factors"].push_back(ks_to_json(ks));
      jc["ks"]["chi"] = ks_to_json(c.ks_chi);
    }
    if (c.med_hhat >= 0.0) {
      jc["hhat_median"] = c.med_hhat;
      jc["hhat_inv_median"] = c.med_hhat_inv;
    }
    if (c.wald_rejection_rate >= 0.0) jc["wald_rejection_rate"] = c.wald_rejection_rate;
    if (c.med_cov_dist >= 0.0) jc["cov_consistency_median"] = c.med_cov_dist;
    if (c.med_ols_gap >= 0.0) jc["ols_equiv_median"] = c.med_ols_gap;
    j["cells"].push_back(jc);
  }

  auto rate_json = [](const RateFit& f) {
    return nlohmann::json{{"slope", f.slope}, {"stderr", f.std_error}, {"points", f.points}};
  };
  if (rate_loadings) j["rates"]["loadings"] = rate_json(*rate_loadings);
  if (rate_factors) j["rates"]["factors"] = rate_json(*rate_factors);
  if (rate_chi) j["rates"]["chi"] = rate_json(*rate_chi);

  j["records"] = nlohmann::json::array();
  for (const auto& rec : records) {
    nlohmann::json jr = {{"cell", rec.cell},     {"rep", rec.rep},
                         {"seed", rec.seed},     {"failed", rec.failed},
                         {"err_loadings", rec.err_loadings},
                         {"err_factors", rec.err_factors},
                         {"err_chi", rec.err_chi}};
    if (rec.failed) jr["error"] = rec.error;
    j["records"].push_back(jr);
  }
  return j.dump(2);
}

std::string McReport::records_to_csv() const {
  std::string out =
      "cell,rep,seed,failed,err_loadings,err_factors,err_loading_max,err_factor_max,err_chi,"
      "hhat_dist,wald_stat,wald_pvalue,cov_dist,ols_gap\n";
  char buf[512];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%llu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  rec.cell, rec.rep, static_cast<unsigned long long>(rec.seed),
                  rec.failed ? 1 : 0, rec.err_loadings, rec.err_factors, rec.err_loading_max,
                  rec.err_factor_max, rec.err_chi, rec.hhat_dist, rec.wald_stat, rec.wald_pvalue,
                  rec.cov_dist, rec.ols_gap);
    out += buf;
  }
  return out;
}

std::string McReport::to_text() const {
  std::ostringstream out;
  char line[256];
  out << "Monte Carlo report: " << replications << " replications per cell, seed "
      << base_seed << "\n";
  std::snprintf(line, sizeof(line), "%6s %6s %6s %12s %12s %12s %9s %9s %9s\n", "n", "T",
                "failed", "med|L err|", "med|F err|", "med|chi err|", "cov(L)", "cov(F)",
                "med|H-J|");
  out << line;
  for (const auto& c : cells) {
    std::snprintf(line, sizeof(line), "%6d %6d %6d %12.4e %12.4e %12.4e %9s %9s %9s\n", c.n,
                  c.t_len, c.failed, c.med_err_loadings, c.med_err_factors, c.med_err_chi,
                  c.coverage_loadings >= 0.0
                      ? (std::to_string(c.coverage_loadings).substr(0, 6)).c_str()
                      : "-",
                  c.coverage_factors >= 0.0
                      ? (std::to_string(c.coverage_factors).substr(0, 6)).c_str()
                      : "-",
                  c.med_hhat >= 0.0 ? (std::to_string(c.med_hhat).substr(0, 7)).c_str() : "-");
    out << line;
  }
  auto print_rate = [&](const char* name, const std::optional<RateFit>& fit) {
    if (!fit) return;
    std::snprintf(line, sizeof(line), "rate[%s]: slope %.4f (se %.4f, %d points)\n", name,
                  fit->slope, fit->std_error, fit->points);
    out << line;
  };
  print_rate("loadings", rate_loadings);
  print_rate("factors", rate_factors);
  print_rate("chi", rate_chi);
  return out.str();
}

}  // namespace fpca
