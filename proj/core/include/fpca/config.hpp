#ifndef FPCA_CONFIG_HPP
#define FPCA_CONFIG_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpca/dgp.hpp"
#include "fpca/montecarlo.hpp"

namespace fpca {

// Flat key-value configuration with [section] headers; ';' and '#' start
// comments. Matrices are written as rows separated by ';' with
// space-separated entries. Order-preserving so files round-trip cleanly.
class IniDoc {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static IniDoc parse(const std::string& text);
  static IniDoc load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  bool has_section(const std::string& section) const;
  const std::string* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  // Typed getters; all throw SpecError naming "section.key" on bad input.
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int_or(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  Eigen::MatrixXd get_matrix(const std::string& section, const std::string& key) const;
  Eigen::VectorXd get_vector(const std::string& section, const std::string& key) const;

  const std::vector<std::pair<std::string, Section>>& sections() const { return sections_; }

 private:
  std::vector<std::pair<std::string, Section>> sections_;
};

std::string format_matrix(const Eigen::MatrixXd& m);
std::string format_vector(const Eigen::VectorXd& v);
Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& what);

// Model spec plus the panel shape and base seed used by `generate`.
struct ModelConfig {
  ModelSpec spec;
  int n = 0;
  int t_len = 0;
  std::uint64_t seed = 1;
};

ModelConfig model_config_from_ini(const IniDoc& doc);
IniDoc model_config_to_ini(const ModelConfig& cfg);

// Grid configuration for the `mc` subcommand ([grid] section on top of the
// model sections).
ExperimentGrid grid_from_ini(const IniDoc& doc);

// Optional acceptance bands evaluated against a finished report
// ([assert] section; used by `mc --assert`).
struct AssertSpec {
  std::optional<double> coverage_loadings_min, coverage_loadings_max;
  std::optional<double> coverage_factors_min, coverage_factors_max;
  std::optional<double> slope_min, slope_max;
  bool ks_pass = false;
  bool hhat_monotone = false;
  std::optional<double> wald_min, wald_max;
  std::optional<double> cov_factor_max;

  bool any() const;
};

AssertSpec assert_spec_from_ini(const IniDoc& doc);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> evaluate_asserts(const McReport& report, const AssertSpec& spec);

}  // namespace fpca

#endif  // FPCA_CONFIG_HPP
