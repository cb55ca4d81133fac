#ifndef FPCA_DGP_HPP
#define FPCA_DGP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fpca/panel.hpp"
#include "fpca/rng.hpp"

namespace fpca {

// ── Factor process specs ──────────────────────────────────────────────

// F_t = sum_{k=0..K} C_k u_{t-k}, unit-variance white-noise innovations.
struct LinearMaSpec {
  std::vector<Eigen::MatrixXd> coeffs;  // C_0..C_K, each r x r
};

// F_t = A F_{t-1} + e_t, e_t ~ (0, innovation_cov), spectral radius(A) < 1.
struct Var1Spec {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd innovation_cov;
};

// Independent univariate GARCH(1,1) factors:
//   F_lt = sigma_lt nu_lt,  sigma_lt^2 = omega_l + alpha_l F_{l,t-1}^2 + beta_l sigma_{l,t-1}^2
struct Garch11Spec {
  Eigen::VectorXd omega;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

struct FactorProcessSpec {
  std::variant<LinearMaSpec, Var1Spec, Garch11Spec> process;
  Innovations innovations = Innovations::Gaussian;

  int r() const;

  // Factories validate stationarity and throw SpecError on violation.
  static FactorProcessSpec linear_ma(std::vector<Eigen::MatrixXd> coeffs,
                                     Innovations innov = Innovations::Gaussian,
                                     double max_norm_sum = 100.0);
  static FactorProcessSpec var1(Eigen::MatrixXd transition,
                                Eigen::MatrixXd innovation_cov,
                                Innovations innov = Innovations::Gaussian);
  static FactorProcessSpec garch11(Eigen::VectorXd omega, Eigen::VectorXd alpha,
                                   Eigen::VectorXd beta,
                                   Innovations innov = Innovations::Gaussian);
};

// AR(1)-in-time idiosyncratic process driven by innovations with Toeplitz
// cross-sectional covariance cross_decay^|i-j|:
//   xi_t = rho_time * xi_{t-1} + scale * w_t,   Cov(w_it, w_jt) = cross_decay^|i-j|
// Population covariance: E[xi_it xi_jt] = scale^2 cross_decay^|i-j| / (1 - rho_time^2).
struct IdioProcessSpec {
  double rho_time = 0.0;
  double cross_decay = 0.0;
  double scale = 1.0;
  Innovations innovations = Innovations::Gaussian;

  static IdioProcessSpec make(double rho_time, double cross_decay, double scale,
                              Innovations innov = Innovations::Gaussian);
};

enum class LoadingsLaw { GaussianFixedSeed, UniformFixedSeed, IdentityPadded };

struct LoadingsSpec {
  LoadingsLaw law = LoadingsLaw::GaussianFixedSeed;
  double bound = 4.0;  // M_Lambda: every row norm is kept <= bound
};

// Full generator description: everything needed to draw (Panel, truth).
struct ModelSpec {
  int r = 1;
  LoadingsSpec loadings;
  FactorProcessSpec factors = FactorProcessSpec::var1(
      Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1));
  IdioProcessSpec idio;
  bool identification = false;  // enforce Lambda'Lambda/n diagonal, F'F/T = I
  int burn_in = 1000;
};

struct PopulationCovariances {
  Eigen::MatrixXd gamma_f;        // r x r
  Eigen::MatrixXd gamma_xi;       // n x n
  Eigen::MatrixXd gamma_chi;      // n x n
  Eigen::MatrixXd gamma_x;        // n x n
  Eigen::MatrixXd sigma_lambda;   // r x r, Lambda'Lambda/n at the generated n
  std::vector<std::string> violations;  // invariant checks that failed
};

// ── Operations ────────────────────────────────────────────────────────

// Deterministic given seed. Guarantees rank r, row norms <= spec.bound and
// first-row sign normalization lambda_{1j} >= 0 (first nonzero entry of the
// column when the first row is exactly zero).
Eigen::MatrixXd gen_loadings(int n, int r, const LoadingsSpec& spec, std::uint64_t seed);

// T x r factor path; burn_in >= 100 initial samples are discarded.
Eigen::MatrixXd gen_factors(int t_len, int r, const FactorProcessSpec& spec,
                            std::uint64_t seed, int burn_in = 1000);

// T x n idiosyncratic path (internal burn-in of 1000 samples).
Eigen::MatrixXd gen_idio(int n, int t_len, const IdioProcessSpec& spec, std::uint64_t seed);

std::pair<Panel, TruthDecomposition> assemble_panel(const Eigen::MatrixXd& loadings,
                                                    const Eigen::MatrixXd& factors,
                                                    const Eigen::MatrixXd& idio);

// `verify` runs the PopulationCovariances invariant checks (eigen-solves of
// the n x n blocks); callers in tight loops can skip them.
PopulationCovariances population_covariances(const Eigen::MatrixXd& loadings,
                                             const FactorProcessSpec& factor_spec,
                                             const IdioProcessSpec& idio_spec,
                                             bool verify = true);

// Variant with an explicit Gamma^F (used after identification constraints,
// where the factor second moment is I_r by construction).
PopulationCovariances population_covariances(const Eigen::MatrixXd& loadings,
                                             const Eigen::MatrixXd& gamma_f,
                                             const IdioProcessSpec& idio_spec,
                                             bool verify = true);

// Closed-form Gamma^F of a factor process spec.
Eigen::MatrixXd factor_covariance(const FactorProcessSpec& spec);

// Closed-form Gamma^xi of the idiosyncratic spec at cross-section size n.
Eigen::MatrixXd idio_covariance(int n, const IdioProcessSpec& spec);

// Rotates (loadings, factors) in place so that F'F/T = I_r and
// Lambda'Lambda/n is diagonal with descending entries and lambda_{1j} >= 0,
// leaving the common component unchanged up to round-off. Rebuilds
// truth.common; the caller re-assembles the panel.
void apply_identification_constraints(Eigen::MatrixXd& loadings, Eigen::MatrixXd& factors);

// Draws a full (Panel, truth) pair from a model spec with disjoint seed
// streams for loadings, factors and idio innovations.
std::pair<Panel, TruthDecomposition> generate(const ModelSpec& spec, int n, int t_len,
                                              std::uint64_t seed);

}  // namespace fpca

#endif  // FPCA_DGP_HPP
