// Command-line front end: generate synthetic panels, estimate factor models,
// run inference and Monte Carlo suites, audit estimator equivalences.
//
// Exit codes: 0 ok, 2 config/spec error, 3 numerical degeneracy,
// 4 asymptotic-precondition violation, 5 assertion failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpca/config.hpp"
#include "fpca/csv.hpp"
#include "fpca/dgp.hpp"
#include "fpca/errors.hpp"
#include "fpca/inference.hpp"
#include "fpca/montecarlo.hpp"
#include "fpca/pca.hpp"
#include "fpca/stats.hpp"
#include "fpca/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitAssert = 5;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw fpca::SpecError("cannot write " + path.string());
  out << text;
}

// Reproducibility manifest. Deliberately timestamp-free so that reruns with
// the same seed produce byte-identical output directories.
void write_manifest(const fs::path& dir, const std::string& subcommand, const json& config_echo,
                    std::uint64_t seed) {
  json manifest;
  manifest["tool"] = "fpca";
  manifest["version"] = fpca::kVersion;
  manifest["subcommand"] = subcommand;
  manifest["seed"] = seed;
  manifest["config"] = config_echo;
  manifest["versions"] = {{"fpca", fpca::kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

fpca::Approach parse_approach(const std::string& s) {
  if (s == "A") return fpca::Approach::A;
  if (s == "B") return fpca::Approach::B;
  if (s == "C") return fpca::Approach::C;
  if (s == "D") return fpca::Approach::D;
  throw fpca::SpecError("approach must be one of A, B, C, D");
}

std::string approach_name(fpca::Approach a) {
  switch (a) {
    case fpca::Approach::A: return "A";
    case fpca::Approach::B: return "B";
    case fpca::Approach::C: return "C";
    case fpca::Approach::D: return "D";
  }
  return "A";
}

// ── generate ──────────────────────────────────────────────────────────

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const fpca::IniDoc doc = fpca::IniDoc::load(config_path);
  fpca::ModelConfig cfg = fpca::model_config_from_ini(doc);
  if (cfg.n < 2 || cfg.t_len < 2)
    throw fpca::SpecError("generate: model.n and model.t must be >= 2");
  if (cfg.spec.r >= std::min(cfg.n, cfg.t_len))
    throw fpca::SpecError("generate: requires r < min(n, T)");

  const auto [panel, truth] = fpca::generate(cfg.spec, cfg.n, cfg.t_len, cfg.seed);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  fpca::write_panel_csv(dir / "panel.csv", panel);
  fpca::write_matrix_csv(dir / "loadings.csv", truth.loadings);
  fpca::write_matrix_csv(dir / "factors.csv", truth.factors);
  fpca::write_matrix_csv(dir / "idio.csv", truth.idio);
  const fpca::IniDoc echo = fpca::model_config_to_ini(cfg);
  echo.save(dir / "spec.ini");
  write_manifest(dir, "generate", json(echo.serialize()), cfg.seed);

  std::cout << "generated panel written to " << (dir / "panel.csv").string() << "\n";
  return kExitOk;
}

// ── estimate ──────────────────────────────────────────────────────────

int cmd_estimate(const std::string& panel_path, int r, const std::string& approach_str,
                 const std::string& out_dir, bool center) {
  fpca::Panel panel = fpca::read_panel_csv(panel_path);
  if (center) panel = fpca::center_panel(panel);
  const fpca::Approach approach = parse_approach(approach_str);

  const fpca::PcaEstimate est = fpca::estimate(panel, r, approach);
  const Eigen::MatrixXd common = fpca::common_component(est);
  const Eigen::MatrixXd resid = panel.data - common;

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  fpca::write_matrix_csv(dir / "lambda_hat.csv", est.lambda_hat);
  fpca::write_matrix_csv(dir / "f_hat.csv", est.f_hat);
  fpca::write_matrix_csv(dir / "eigenvalues.csv", est.eigvals);
  fpca::write_matrix_csv(dir / "common.csv", common);

  json meta;
  meta["approach"] = approach_name(approach);
  meta["r"] = r;
  meta["n"] = panel.n_len();
  meta["t"] = panel.t_len();
  meta["centered"] = center;
  meta["sign"] = std::vector<double>(est.sign.data(), est.sign.data() + est.sign.size());
  meta["eigenvalues"] =
      std::vector<double>(est.eigvals.data(), est.eigvals.data() + est.eigvals.size());
  meta["reconstruction_frobenius"] = resid.norm();
  meta["reconstruction_max_abs"] = resid.cwiseAbs().maxCoeff();
  write_text(dir / "metadata.json", meta.dump(2) + "\n");
  write_manifest(dir, "estimate",
                 json{{"panel", panel_path}, {"r", r}, {"approach", approach_str},
                      {"center", center}},
                 0);

  std::cout << "estimate written to " << dir.string() << "\n";
  return kExitOk;
}

// ── infer ─────────────────────────────────────────────────────────────

struct InferRow {
  std::string kind;
  int index = 0;  // 1-based i or t
  int coord = 0;  // 1-based factor coordinate
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

fpca::PcaEstimate load_estimate(const fs::path& dir) {
  std::ifstream meta_in(dir / "metadata.json");
  if (!meta_in) throw fpca::SpecError("infer: estimate outputs not found in " + dir.string());
  json meta = json::parse(meta_in);

  fpca::PcaEstimate est;
  est.approach = parse_approach(meta.at("approach").get<std::string>());
  est.lambda_hat = fpca::read_matrix_csv(dir / "lambda_hat.csv");
  est.f_hat = fpca::read_matrix_csv(dir / "f_hat.csv");
  const Eigen::MatrixXd ev = fpca::read_matrix_csv(dir / "eigenvalues.csv");
  est.eigvals = (ev.cols() == 1) ? Eigen::VectorXd(ev.col(0)) : Eigen::VectorXd(ev.row(0));
  est.sign = Eigen::VectorXd::Ones(est.lambda_hat.cols());
  return est;
}

int cmd_infer(const std::string& panel_path, const std::string& estimate_dir,
              const std::string& out_dir, double alpha, std::vector<int> series,
              std::vector<int> times, int band, int bandwidth, bool center,
              const std::string& wald_path, std::vector<int> joint_times,
              std::vector<int> bonferroni_times) {
  fpca::Panel panel = fpca::read_panel_csv(panel_path);
  if (center) panel = fpca::center_panel(panel);
  const fpca::PcaEstimate est = load_estimate(estimate_dir);
  if (est.lambda_hat.rows() != panel.n_len() || est.f_hat.rows() != panel.t_len())
    throw fpca::SpecError("infer: estimate does not match panel dimensions");

  const int n = static_cast<int>(panel.n_len());
  const int t_len = static_cast<int>(panel.t_len());
  const int r = static_cast<int>(est.r());
  const Eigen::MatrixXd lambda_a = fpca::lambda_as_approach_a(est);
  const Eigen::MatrixXd f_a = fpca::f_as_approach_a(est);
  const Eigen::MatrixXd xi_hat = panel.data - f_a * lambda_a.transpose();
  const Eigen::VectorXd v_nt = fpca::v_nt_diagonal(est);
  const Eigen::MatrixXd q_hat = v_nt.asDiagonal();  // data mode
  const double z = fpca::normal_quantile(1.0 - alpha / 2.0);

  if (series.empty()) series = {1};
  if (times.empty()) times = {(t_len + 1) / 2};

  std::vector<InferRow> rows;
  json report;
  report["alpha"] = alpha;
  report["mode"] = "data";  // q_hat = V_nT; simulation mode is Monte Carlo only
  report["loadings"] = json::array();
  report["factors"] = json::array();

  const Eigen::MatrixXd gamma_t = fpca::gamma_t_hat(lambda_a, xi_hat, band);
  const Eigen::MatrixXd pi_t = fpca::pi_t_cov(q_hat, gamma_t);

  for (int i1 : series) {
    const int i = i1 - 1;
    if (i < 0 || i >= n) throw fpca::SpecError("infer: series index out of range");
    const Eigen::MatrixXd phi = fpca::hac_phi(f_a, xi_hat.col(i), bandwidth);
    const Eigen::MatrixXd theta = fpca::theta_i_cov(v_nt, q_hat, phi);
    json ji;
    ji["i"] = i1;
    ji["theta"] = json::array();
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) ji["theta"].push_back(theta(a, b));
    }
    for (int j = 0; j < r; ++j) {
      InferRow row;
      row.kind = "loading";
      row.index = i1;
      row.coord = j + 1;
      row.estimate = lambda_a(i, j);
      row.se = std::sqrt(theta(j, j) / t_len);
      row.ci_lo = row.estimate - z * row.se;
      row.ci_hi = row.estimate + z * row.se;
      rows.push_back(row);
    }
    report["loadings"].push_back(ji);
  }

  for (int t1 : times) {
    const int t = t1 - 1;
    if (t < 0 || t >= t_len) throw fpca::SpecError("infer: time index out of range");
    json jt;
    jt["t"] = t1;
    jt["pi"] = json::array();
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) jt["pi"].push_back(pi_t(a, b));
    }
    for (int j = 0; j < r; ++j) {
      const fpca::ConfidenceRegion ci = fpca::ci_factor(f_a(t, j), pi_t(j, j), n, alpha);
      InferRow row;
      row.kind = "factor";
      row.index = t1;
      row.coord = j + 1;
      row.estimate = f_a(t, j);
      row.se = std::sqrt(pi_t(j, j) / n);
      row.ci_lo = row.estimate - ci.half_width(0);
      row.ci_hi = row.estimate + ci.half_width(0);
      rows.push_back(row);
    }
    report["factors"].push_back(jt);
  }

  if (!wald_path.empty()) {
    std::ifstream win(wald_path);
    if (!win) throw fpca::SpecError("infer: cannot open restrictions file " + wald_path);
    json wspec = json::parse(win);
    std::vector<int> widx;
    for (int s : wspec.at("series").get<std::vector<int>>()) widx.push_back(s - 1);
    const auto r_rows = wspec.at("R").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd r_mat(static_cast<Eigen::Index>(r_rows.size()),
                          static_cast<Eigen::Index>(r_rows.front().size()));
    for (Eigen::Index a = 0; a < r_mat.rows(); ++a)
      for (Eigen::Index b = 0; b < r_mat.cols(); ++b)
        r_mat(a, b) = r_rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    const auto qv = wspec.at("q").get<std::vector<double>>();
    const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(qv.data(), static_cast<Eigen::Index>(qv.size()));

    Eigen::VectorXd l_hat(static_cast<Eigen::Index>(widx.size()) * r);
    for (std::size_t k = 0; k < widx.size(); ++k) {
      if (widx[k] < 0 || widx[k] >= n) throw fpca::SpecError("infer: wald series index out of range");
      l_hat.segment(static_cast<Eigen::Index>(k) * r, r) = lambda_a.row(widx[k]).transpose();
    }
    const Eigen::MatrixXd theta_bar = fpca::stacked_loadings_cov(f_a, xi_hat, widx, bandwidth);
    const fpca::WaldResult wald = fpca::wald_test(r_mat, q, l_hat, theta_bar, t_len);
    report["wald"] = {{"statistic", wald.statistic},
                      {"dof", wald.dof},
                      {"p_value", wald.p_value},
                      {"reject_at_5pct", wald.reject_at.at(0.05)}};
  }

  if (!joint_times.empty()) {
    std::vector<int> jt0;
    for (int t1 : joint_times) jt0.push_back(t1 - 1);
    Eigen::VectorXd stack(static_cast<Eigen::Index>(jt0.size()) * r);
    for (std::size_t k = 0; k < jt0.size(); ++k) {
      if (jt0[k] < 0 || jt0[k] >= t_len) throw fpca::SpecError("infer: joint time index out of range");
      stack.segment(static_cast<Eigen::Index>(k) * r, r) = f_a.row(jt0[k]).transpose();
    }
    const Eigen::MatrixXd gamma_bar = fpca::gamma_bar_stacked(lambda_a, xi_hat, jt0, band);
    const Eigen::MatrixXd pi_bar = fpca::pi_bar_stacked(q_hat, gamma_bar);
    const fpca::ConfidenceRegion region = fpca::ellipsoid_region(stack, pi_bar, n, alpha);
    json je;
    je["times"] = joint_times;
    je["threshold"] = region.threshold;
    je["center"] = std::vector<double>(region.center.data(),
                                       region.center.data() + region.center.size());
    je["semi_lengths"] = std::vector<double>(
        region.semi_lengths.data(), region.semi_lengths.data() + region.semi_lengths.size());
    je["axes"] = json::array();
    for (Eigen::Index c = 0; c < region.axes.cols(); ++c) {
      je["axes"].push_back(std::vector<double>(region.axes.col(c).data(),
                                               region.axes.col(c).data() + region.axes.rows()));
    }
    report["ellipsoid"] = je;
  }

  if (!bonferroni_times.empty()) {
    std::vector<int> bt0;
    for (int t1 : bonferroni_times) bt0.push_back(t1 - 1);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(bt0.size()), r);
    Eigen::MatrixXd vars(static_cast<Eigen::Index>(bt0.size()), r);
    for (std::size_t k = 0; k < bt0.size(); ++k) {
      if (bt0[k] < 0 || bt0[k] >= t_len)
        throw fpca::SpecError("infer: bonferroni time index out of range");
      block.row(static_cast<Eigen::Index>(k)) = f_a.row(bt0[k]);
      vars.row(static_cast<Eigen::Index>(k)) = pi_t.diagonal().transpose();
    }
    const fpca::ConfidenceRegion band_region = fpca::bonferroni_band(block, vars, n, alpha);
    json jb;
    jb["times"] = bonferroni_times;
    jb["center"] = std::vector<double>(band_region.center.data(),
                                       band_region.center.data() + band_region.center.size());
    jb["half_width"] = std::vector<double>(
        band_region.half_width.data(), band_region.half_width.data() + band_region.half_width.size());
    report["bonferroni"] = jb;
  }

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::string csv = "kind,index,coord,estimate,se,ci_lo,ci_hi\n";
  for (const auto& row : rows) {
    csv += row.kind + "," + std::to_string(row.index) + "," + std::to_string(row.coord) + "," +
           fpca::format_double(row.estimate) + "," + fpca::format_double(row.se) + "," +
           fpca::format_double(row.ci_lo) + "," + fpca::format_double(row.ci_hi) + "\n";
  }
  write_text(dir / "inference.csv", csv);
  write_text(dir / "inference.json", report.dump(2) + "\n");
  write_manifest(dir, "infer",
                 json{{"panel", panel_path}, {"estimate_dir", estimate_dir}, {"alpha", alpha},
                      {"band", band}, {"bandwidth", bandwidth}},
                 0);
  std::cout << "inference written to " << dir.string() << "\n";
  return kExitOk;
}

// ── mc ────────────────────────────────────────────────────────────────

int cmd_mc(const std::string& config_path, const std::string& out_dir, bool assert_checks,
           bool write_records) {
  const fpca::IniDoc doc = fpca::IniDoc::load(config_path);
  const fpca::ExperimentGrid grid = fpca::grid_from_ini(doc);
  const fpca::AssertSpec asserts = fpca::assert_spec_from_ini(doc);

  const fpca::McReport report = fpca::run_grid(grid);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_text(dir / "mc_report.json", report.to_json_string() + "\n");
  write_text(dir / "mc_report.txt", report.to_text());
  write_manifest(dir, "mc", json(doc.serialize()), grid.base_seed);

  if (write_records) write_text(dir / "mc_records.csv", report.records_to_csv());

  std::vector<fpca::CheckResult> results = fpca::evaluate_asserts(report, asserts);
  json jr = json::array();
  bool all_pass = true;
  for (const auto& res : results) {
    jr.push_back({{"name", res.name}, {"pass", res.pass}, {"detail", res.detail}});
    all_pass = all_pass && res.pass;
    std::cout << (res.pass ? "PASS " : "FAIL ") << res.name << "\n";
  }
  write_text(dir / "mc_asserts.json", jr.dump(2) + "\n");
  std::cout << "mc report written to " << dir.string() << "\n";

  if (assert_checks && !all_pass) return kExitAssert;
  return kExitOk;
}

// ── audit ─────────────────────────────────────────────────────────────

int cmd_audit(const std::string& panel_path, int r, int random_n, int random_t, int random_r,
              int count, std::uint64_t seed, const std::string& out_dir) {
  json out = json::array();
  bool all_pass = true;

  auto run_one = [&](const fpca::Panel& panel, int rr, const std::string& label) {
    const fpca::AuditRecord audit = fpca::equivalence_audit(panel, rr);
    json ja;
    ja["label"] = label;
    ja["ran"] = audit.ran;
    if (!audit.ran) {
      ja["skip_reason"] = audit.skip_reason;
    } else {
      ja["max_pairwise_common_diff"] = audit.max_pairwise_common_diff;
      ja["max_eigval_rel_diff"] = audit.max_eigval_rel_diff;
      ja["pass"] = audit.pass();
      all_pass = all_pass && audit.pass();
    }
    out.push_back(ja);
    std::cout << (audit.ran ? (audit.pass() ? "PASS " : "FAIL ") : "SKIP ") << label << "\n";
  };

  if (!panel_path.empty()) {
    run_one(fpca::read_panel_csv(panel_path), r, panel_path);
  } else {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
      Eigen::MatrixXd data(random_t, random_n);
      for (Eigen::Index i = 0; i < data.rows(); ++i)
        for (Eigen::Index j = 0; j < data.cols(); ++j) data(i, j) = normal(gen);
      run_one(fpca::Panel{std::move(data)}, random_r, "random-" + std::to_string(k + 1));
    }
  }

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "audit.json", out.dump(2) + "\n");
  write_manifest(fs::path(out_dir), "audit", json{{"panel", panel_path}, {"count", count}}, seed);
  std::cout << "audit written to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal-components estimation of large approximate factor models"};
  app.require_subcommand(1);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "draw a synthetic panel from a model spec");
  std::string gen_config, gen_out = "out";
  gen_cmd->add_option("--config", gen_config, "model spec (ini)")->required();
  gen_cmd->add_option("--out", gen_out, "output directory");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "PCA estimation of loadings and factors");
  std::string est_panel, est_out = "out", est_approach = "A";
  int est_r = 1;
  bool est_center = false;
  est_cmd->add_option("--panel", est_panel, "panel csv")->required();
  est_cmd->add_option("--r", est_r, "number of factors")->required();
  est_cmd->add_option("--approach", est_approach, "A | B | C | D");
  est_cmd->add_option("--out", est_out, "output directory");
  est_cmd->add_flag("--center", est_center, "subtract column means first");

  // infer
  auto* inf_cmd = app.add_subcommand("infer", "confidence intervals, regions and Wald tests");
  std::string inf_panel, inf_est_dir, inf_out = "out", inf_wald;
  double inf_alpha = 0.05;
  std::vector<int> inf_series, inf_times, inf_joint, inf_bonf;
  int inf_band = 0, inf_bandwidth = -1;
  bool inf_center = false;
  inf_cmd->add_option("--panel", inf_panel, "panel csv")->required();
  inf_cmd->add_option("--estimate-dir", inf_est_dir, "directory with estimate outputs")->required();
  inf_cmd->add_option("--out", inf_out, "output directory");
  inf_cmd->add_option("--alpha", inf_alpha, "level (default 0.05)");
  inf_cmd->add_option("--series", inf_series, "1-based series indices for loading CIs");
  inf_cmd->add_option("--times", inf_times, "1-based time indices for factor CIs");
  inf_cmd->add_option("--band", inf_band, "cross-sectional band for Gamma_t");
  inf_cmd->add_option("--bandwidth", inf_bandwidth, "Newey-West bandwidth (-1 = auto)");
  inf_cmd->add_flag("--center", inf_center, "subtract column means first");
  inf_cmd->add_option("--wald", inf_wald, "restrictions json {series, R, q}");
  inf_cmd->add_option("--joint-times", inf_joint, "times for a joint elliptical region");
  inf_cmd->add_option("--bonferroni-times", inf_bonf, "times for a Bonferroni band");

  // mc
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo verification suite");
  std::string mc_config, mc_out = "out";
  bool mc_assert = false, mc_records = false;
  mc_cmd->add_option("--config", mc_config, "grid config (ini)")->required();
  mc_cmd->add_option("--out", mc_out, "output directory");
  mc_cmd->add_flag("--assert", mc_assert, "exit 5 when an [assert] band fails");
  mc_cmd->add_flag("--records", mc_records, "also write per-replication index csv");

  // audit
  auto* aud_cmd = app.add_subcommand("audit", "four-approach equivalence audit");
  std::string aud_panel, aud_out = "out";
  int aud_r = 1, aud_n = 50, aud_t = 60, aud_rr = 2, aud_count = 1;
  std::uint64_t aud_seed = 1;
  aud_cmd->add_option("--panel", aud_panel, "panel csv (omit for random panels)");
  aud_cmd->add_option("--r", aud_r, "number of factors for --panel");
  aud_cmd->add_option("--random-n", aud_n, "random panel columns");
  aud_cmd->add_option("--random-t", aud_t, "random panel rows");
  aud_cmd->add_option("--random-r", aud_rr, "factors for random panels");
  aud_cmd->add_option("--count", aud_count, "number of random panels");
  aud_cmd->add_option("--seed", aud_seed, "seed for random panels");
  aud_cmd->add_option("--out", aud_out, "output directory");

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) return cmd_generate(gen_config, gen_out);
    if (est_cmd->parsed()) return cmd_estimate(est_panel, est_r, est_approach, est_out, est_center);
    if (inf_cmd->parsed()) {
      return cmd_infer(inf_panel, inf_est_dir, inf_out, inf_alpha, inf_series, inf_times,
                       inf_band, inf_bandwidth, inf_center, inf_wald, inf_joint, inf_bonf);
    }
    if (mc_cmd->parsed()) return cmd_mc(mc_config, mc_out, mc_assert, mc_records);
    if (aud_cmd->parsed())
      return cmd_audit(aud_panel, aud_r, aud_n, aud_t, aud_rr, aud_count, aud_seed, aud_out);
  } catch (const CLI::ParseError& e) {
    // Fold CLI11's parse-error codes into the config-error slot; --help
    // stays a clean exit.
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const fpca::PreconditionViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const fpca::DegenerateEigenvalues& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const fpca::RotationSingular& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const fpca::SignUndefined& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const fpca::DegenerateVariance& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const fpca::SingularRestriction& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const fpca::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fpca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
