#include "fpca/panel.hpp"

#include <algorithm>
#include <cmath>

#include "fpca/errors.hpp"

namespace fpca {

std::vector<std::string> ValidationReport::failures() const {
  std::vector<std::string> out;
  if (!finite) out.push_back("panel contains non-finite entries");
  if (!t_len_ok) out.push_back("T must be >= 2");
  if (!n_len_ok) out.push_back("n must be >= 2");
  if (!rank_ok) out.push_back("r must satisfy 1 <= r < min(n, T)");
  return out;
}

Panel center_panel(const Panel& p) {
  if (!p.data.allFinite()) throw SpecError("center_panel: non-finite entry in panel");

  Eigen::MatrixXd x = p.data;
  const Eigen::Index t_len = x.rows();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    // Subtract the residual mean only while it strictly shrinks in
    // magnitude. The stop state is a fixed point of the whole procedure, so
    // center(center(p)) == center(p) exactly. All means are computed from
    // the stored column so repeated calls see identical rounding.
    double mean = x.col(j).sum() / static_cast<double>(t_len);
    while (mean != 0.0) {
      const Eigen::VectorXd backup = x.col(j);
      x.col(j).array() -= mean;
      const double next = x.col(j).sum() / static_cast<double>(t_len);
      if (std::abs(next) >= std::abs(mean)) {
        x.col(j) = backup;
        break;
      }
      mean = next;
    }
  }
  return Panel{std::move(x)};
}

ValidationReport validate_panel(const Panel& p, int r) {
  ValidationReport rep;
  rep.finite = p.data.allFinite();
  rep.t_len_ok = p.t_len() >= 2;
  rep.n_len_ok = p.n_len() >= 2;
  rep.rank_ok = r >= 1 && r < std::min(p.t_len(), p.n_len());
  return rep;
}

}  // namespace fpca
