#ifndef FPCA_STATS_HPP
#define FPCA_STATS_HPP

#include <vector>

namespace fpca {

// Standard-normal and chi-square distribution functions, absolute accuracy
// better than 1e-9 over the usual inference range.
double normal_cdf(double x);
double normal_quantile(double p);   // p in (0,1)
double chi2_cdf(double x, int dof);
double chi2_quantile(double p, int dof);

// One-sample Kolmogorov-Smirnov statistic against the standard normal.
double ks_statistic_normal(std::vector<double> sample);

}  // namespace fpca

#endif  // FPCA_STATS_HPP
