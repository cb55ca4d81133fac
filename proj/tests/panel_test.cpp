#include "fpca/panel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fpca/csv.hpp"
#include "fpca/dgp.hpp"
#include "fpca/errors.hpp"

namespace fs = std::filesystem;
using namespace fpca;

namespace {

Panel make_panel(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  const auto n_cols = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXd m(n_rows, n_cols);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return Panel{m};
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::path("panel_test_tmp") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(CenterPanel, SubtractsColumnMeans) {
  const Panel p = make_panel({{1.0}, {3.0}});
  const Panel c = center_panel(p);
  EXPECT_DOUBLE_EQ(c.data(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(c.data(1, 0), 1.0);
}

TEST(CenterPanel, IdentityOnCenteredData) {
  const Panel p = make_panel({{-2.0}, {2.0}});
  const Panel c = center_panel(p);
  EXPECT_EQ(c.data, p.data);
}

TEST(CenterPanel, ConstantColumnGoesToZero) {
  const Panel p = make_panel({{5.0}, {5.0}, {5.0}});
  const Panel c = center_panel(p);
  EXPECT_TRUE((c.data.array() == 0.0).all());
}

TEST(CenterPanel, ExactlyIdempotent) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(3.0, 2.0);
  Eigen::MatrixXd m(37, 5);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(gen);
  const Panel once = center_panel(Panel{m});
  const Panel twice = center_panel(once);
  EXPECT_EQ(once.data, twice.data);  // bitwise
  for (Eigen::Index j = 0; j < once.data.cols(); ++j)
    EXPECT_LT(std::abs(once.data.col(j).mean()), 1e-12);
}

TEST(CenterPanel, RejectsNonFinite) {
  Panel p = make_panel({{1.0, 2.0}, {3.0, 4.0}});
  p.data(0, 1) = std::nan("");
  EXPECT_THROW(center_panel(p), SpecError);
}

TEST(ValidatePanel, PassExample) {
  const Panel p{Eigen::MatrixXd::Random(10, 5)};
  EXPECT_TRUE(validate_panel(p, 2).pass());
}

TEST(ValidatePanel, FailsWhenRTooLargeForT) {
  const Panel p{Eigen::MatrixXd::Random(3, 5)};
  const ValidationReport rep = validate_panel(p, 3);
  EXPECT_FALSE(rep.pass());
  EXPECT_FALSE(rep.rank_ok);
}

TEST(ValidatePanel, FailsWhenRTooLargeForN) {
  const Panel p{Eigen::MatrixXd::Random(10, 5)};
  EXPECT_FALSE(validate_panel(p, 5).pass());
}

TEST(TruthDecomposition, ReconstructsPanelExactly) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd lambda(6, 2), f(9, 2), xi(9, 6);
  for (auto* m : {&lambda}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = normal(gen);
  }
  for (auto* m : {&f}) {
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = normal(gen);
  }
  for (Eigen::Index i = 0; i < xi.rows(); ++i)
    for (Eigen::Index j = 0; j < xi.cols(); ++j) xi(i, j) = normal(gen);

  const auto [panel, truth] = assemble_panel(lambda, f, xi);
  EXPECT_LE((panel.data - (truth.factors * truth.loadings.transpose() + truth.idio))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

// ── CSV ingestion ─────────────────────────────────────────────────────

TEST(PanelCsv, RoundTripsWithHeader) {
  const fs::path dir = temp_dir("roundtrip");
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(12, 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(gen);
  write_panel_csv(dir / "p.csv", Panel{m});
  const Panel back = read_panel_csv(dir / "p.csv");
  EXPECT_EQ(back.data, m);  // 17 significant digits round-trips doubles
}

TEST(PanelCsv, ReadsHeaderlessFiles) {
  const fs::path dir = temp_dir("noheader");
  std::ofstream out(dir / "p.csv");
  out << "1.5,2\n-3,0.25\n";
  out.close();
  const Panel p = read_panel_csv(dir / "p.csv");
  EXPECT_EQ(p.t_len(), 2);
  EXPECT_DOUBLE_EQ(p.data(1, 0), -3.0);
}

TEST(PanelCsv, MissingCellIsHardError) {
  const fs::path dir = temp_dir("missing");
  std::ofstream out(dir / "p.csv");
  out << "a,b\n1.0,2.0\n3.0,\n";
  out.close();
  EXPECT_THROW(read_panel_csv(dir / "p.csv"), CsvError);
}

TEST(PanelCsv, ShortRowIsHardError) {
  const fs::path dir = temp_dir("shortrow");
  std::ofstream out(dir / "p.csv");
  out << "1.0,2.0\n3.0\n";
  out.close();
  EXPECT_THROW(read_panel_csv(dir / "p.csv"), CsvError);
}

TEST(PanelCsv, NonFiniteIsHardError) {
  const fs::path dir = temp_dir("nonfinite");
  std::ofstream out(dir / "p.csv");
  out << "1.0,2.0\n3.0,inf\n";
  out.close();
  EXPECT_THROW(read_panel_csv(dir / "p.csv"), CsvError);
}
