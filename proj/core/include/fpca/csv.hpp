#ifndef FPCA_CSV_HPP
#define FPCA_CSV_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "fpca/panel.hpp"

namespace fpca {

// Panel CSV layout: one row per time point, one column per series, comma
// separated, decimal-point floats. The first row may be a header; it is
// detected by attempting to parse it as numbers. Missing or non-numeric
// cells are hard errors.
Panel read_panel_csv(const std::filesystem::path& path);

// Writes with an optional "s1,s2,..." header. All floats use 17 significant
// digits so downstream comparisons can be bit-faithful.
void write_panel_csv(const std::filesystem::path& path, const Panel& p,
                     bool header = true);

// Headerless numeric matrix files (loadings, factors, eigenvalues, ...).
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

std::string format_double(double v);  // %.17g

}  // namespace fpca

#endif  // FPCA_CSV_HPP
