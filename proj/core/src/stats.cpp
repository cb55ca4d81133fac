#include "fpca/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "fpca/errors.hpp"

namespace fpca {

namespace {
const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);
}

double normal_cdf(double x) { return boost::math::cdf(kStdNormal, x); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw SpecError("normal_quantile: p must lie in (0,1)");
  return boost::math::quantile(kStdNormal, p);
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) throw SpecError("chi2_cdf: dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(dof), x);
}

double chi2_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw SpecError("chi2_quantile: p must lie in (0,1)");
  if (dof < 1) throw SpecError("chi2_quantile: dof must be >= 1");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

double ks_statistic_normal(std::vector<double> sample) {
  if (sample.empty()) throw SpecError("ks_statistic_normal: empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = normal_cdf(sample[i]);
    const double lo = cdf - static_cast<double>(i) / m;
    const double hi = static_cast<double>(i + 1) / m - cdf;
    d = std::max({d, lo, hi});
  }
  return d;
}

}  // namespace fpca
