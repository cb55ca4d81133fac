#ifndef FPCA_PANEL_HPP
#define FPCA_PANEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace fpca {

// Observed panel: T rows (time) by n columns (series). Rows-as-time is fixed
// throughout the library. Immutable after construction by convention; all
// operations return new objects.
struct Panel {
  Eigen::MatrixXd data;

  Eigen::Index t_len() const { return data.rows(); }
  Eigen::Index n_len() const { return data.cols(); }
};

// Ground-truth decomposition of a generated panel: data = factors*loadings' + idio.
struct TruthDecomposition {
  Eigen::MatrixXd loadings;  // n x r
  Eigen::MatrixXd factors;   // T x r
  Eigen::MatrixXd idio;      // T x n
  Eigen::MatrixXd common;    // T x n, equals factors * loadings'

  Eigen::Index r() const { return loadings.cols(); }
};

struct ValidationReport {
  bool finite = false;
  bool t_len_ok = false;   // T >= 2
  bool n_len_ok = false;   // n >= 2
  bool rank_ok = false;    // r < min(n, T)

  bool pass() const { return finite && t_len_ok && n_len_ok && rank_ok; }
  std::vector<std::string> failures() const;
};

// Subtracts each column's sample mean. Iterates the subtraction until the
// column stops changing, so centering is exactly idempotent in floating point.
// Throws SpecError on non-finite entries.
Panel center_panel(const Panel& p);

ValidationReport validate_panel(const Panel& p, int r);

}  // namespace fpca

#endif  // FPCA_PANEL_HPP
