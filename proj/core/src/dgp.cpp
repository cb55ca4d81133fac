#include "fpca/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

constexpr std::uint64_t kLoadingsStream = 0x10ad;
constexpr std::uint64_t kFactorStream = 0xfac7;
constexpr std::uint64_t kIdioStream = 0x1d10;

double spectral_radius(const Eigen::MatrixXd& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& cov, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SpecError(std::string(what) + ": covariance is not positive definite");
  }
  return llt.matrixL();
}

double smallest_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

// ── Spec construction / validation ────────────────────────────────────

int FactorProcessSpec::r() const {
  if (const auto* ma = std::get_if<LinearMaSpec>(&process))
    return static_cast<int>(ma->coeffs.front().rows());
  if (const auto* var = std::get_if<Var1Spec>(&process))
    return static_cast<int>(var->transition.rows());
  return static_cast<int>(std::get<Garch11Spec>(process).omega.size());
}

FactorProcessSpec FactorProcessSpec::linear_ma(std::vector<Eigen::MatrixXd> coeffs,
                                               Innovations innov, double max_norm_sum) {
  if (coeffs.empty()) throw SpecError("linear_ma: needs at least C_0");
  const Eigen::Index r = coeffs.front().rows();
  double norm_sum = 0.0;
  for (const auto& c : coeffs) {
    if (c.rows() != r || c.cols() != r) throw SpecError("linear_ma: coefficient matrices must all be r x r");
    norm_sum += c.norm();
  }
  if (norm_sum > max_norm_sum) {
    throw SpecError("linear_ma: sum of coefficient norms " + std::to_string(norm_sum) +
                    " exceeds bound " + std::to_string(max_norm_sum));
  }
  return FactorProcessSpec{LinearMaSpec{std::move(coeffs)}, innov};
}

FactorProcessSpec FactorProcessSpec::var1(Eigen::MatrixXd transition,
                                          Eigen::MatrixXd innovation_cov,
                                          Innovations innov) {
  if (transition.rows() != transition.cols())
    throw SpecError("var1: transition matrix must be square");
  if (innovation_cov.rows() != transition.rows() || innovation_cov.cols() != transition.cols())
    throw SpecError("var1: innovation covariance must match transition dimensions");
  const double rho = spectral_radius(transition);
  if (rho >= 1.0) {
    throw SpecError("var1: spectral radius " + std::to_string(rho) +
                    " >= 1, process is not stationary");
  }
  return FactorProcessSpec{Var1Spec{std::move(transition), std::move(innovation_cov)}, innov};
}

FactorProcessSpec FactorProcessSpec::garch11(Eigen::VectorXd omega, Eigen::VectorXd alpha,
                                             Eigen::VectorXd beta, Innovations innov) {
  const Eigen::Index r = omega.size();
  if (alpha.size() != r || beta.size() != r)
    throw SpecError("garch11: omega, alpha, beta must have equal length");
  for (Eigen::Index l = 0; l < r; ++l) {
    if (!(omega(l) > 0.0))
      throw SpecError("garch11: omega must be > 0 (factor " + std::to_string(l + 1) + ")");
    if (alpha(l) < 0.0 || beta(l) < 0.0)
      throw SpecError("garch11: alpha and beta must be >= 0 (factor " + std::to_string(l + 1) + ")");
    if (!(alpha(l) + beta(l) < 1.0))
      throw SpecError("garch11: alpha + beta must be < 1 (factor " + std::to_string(l + 1) +
                      " has " + std::to_string(alpha(l) + beta(l)) + ")");
  }
  return FactorProcessSpec{Garch11Spec{std::move(omega), std::move(alpha), std::move(beta)}, innov};
}

IdioProcessSpec IdioProcessSpec::make(double rho_time, double cross_decay, double scale,
                                      Innovations innov) {
  if (rho_time < 0.0 || rho_time >= 1.0) throw SpecError("idio: rho_time must lie in [0,1)");
  if (cross_decay < 0.0 || cross_decay >= 1.0) throw SpecError("idio: cross_decay must lie in [0,1)");
  if (scale < 0.0) throw SpecError("idio: scale must be >= 0");
  return IdioProcessSpec{rho_time, cross_decay, scale, innov};
}

// ── Loadings ──────────────────────────────────────────────────────────

namespace {

Eigen::MatrixXd draw_loadings_once(int n, int r, const LoadingsSpec& spec, std::uint64_t seed) {
  Eigen::MatrixXd lambda(n, r);
  if (spec.law == LoadingsLaw::IdentityPadded) {
    lambda.setZero();
    for (int i = 0; i < n; ++i) {
      const int j = i % r;
      // First r rows are exactly I_r; later rows repeat the basis pattern
      // with a distinct per-column scale so the column norms are separated.
      const double c = (i < r) ? 1.0 : std::min(spec.bound, 1.0 + 0.5 * (r - 1 - j));
      lambda(i, j) = c;
    }
    return lambda;
  }

  InnovationSource src(seed, Innovations::Gaussian);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.7320508075688772935, 1.7320508075688772935);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < r; ++j) {
      lambda(i, j) = (spec.law == LoadingsLaw::GaussianFixedSeed) ? src() : unif(gen);
    }
  }
  // Row-norm bound M_Lambda.
  for (int i = 0; i < n; ++i) {
    const double norm = lambda.row(i).norm();
    if (norm > spec.bound) lambda.row(i) *= spec.bound / norm;
  }
  return lambda;
}

void normalize_loading_signs(Eigen::MatrixXd& lambda) {
  for (Eigen::Index j = 0; j < lambda.cols(); ++j) {
    Eigen::Index pivot = 0;
    while (pivot < lambda.rows() && lambda(pivot, j) == 0.0) ++pivot;
    if (pivot == lambda.rows()) throw SignUndefined("gen_loadings: all-zero loading column");
    if (lambda(pivot, j) < 0.0) lambda.col(j) = -lambda.col(j);
  }
}

}  // namespace

Eigen::MatrixXd gen_loadings(int n, int r, const LoadingsSpec& spec, std::uint64_t seed) {
  if (r >= n) throw SpecError("gen_loadings: requires r < n");
  if (spec.bound <= 0.0) throw SpecError("gen_loadings: bound must be > 0");

  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd lambda = draw_loadings_once(n, r, spec, seed + static_cast<std::uint64_t>(attempt));
    normalize_loading_signs(lambda);
    if (smallest_singular_value(lambda) > 1e-10 * std::max(1.0, lambda.norm())) return lambda;
  }
  throw SpecError("gen_loadings: rank-deficient loadings after 100 attempts");
}

// ── Factors ───────────────────────────────────────────────────────────

Eigen::MatrixXd gen_factors(int t_len, int r, const FactorProcessSpec& spec,
                            std::uint64_t seed, int burn_in) {
  if (t_len < 1) throw SpecError("gen_factors: t_len must be >= 1");
  if (burn_in < 100) throw SpecError("gen_factors: burn_in must be >= 100");
  if (spec.r() != r) throw SpecError("gen_factors: spec dimension does not match r");

  InnovationSource src(seed, spec.innovations);
  const int total = burn_in + t_len;
  Eigen::MatrixXd f(t_len, r);

  if (const auto* ma = std::get_if<LinearMaSpec>(&spec.process)) {
    const int k_len = static_cast<int>(ma->coeffs.size());
    if (k_len - 1 > burn_in)
      throw SpecError("gen_factors: MA truncation K exceeds burn_in");
    Eigen::MatrixXd u(total, r);
    for (int t = 0; t < total; ++t)
      for (int j = 0; j < r; ++j) u(t, j) = src();
    for (int t = burn_in; t < total; ++t) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(r);
      for (int k = 0; k < k_len; ++k) acc += ma->coeffs[static_cast<std::size_t>(k)] * u.row(t - k).transpose();
      f.row(t - burn_in) = acc.transpose();
    }
    return f;
  }

  if (const auto* var = std::get_if<Var1Spec>(&spec.process)) {
    const Eigen::MatrixXd chol = cholesky_factor(var->innovation_cov, "gen_factors");
    Eigen::VectorXd state = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd z(r);
    for (int t = 0; t < total; ++t) {
      for (int j = 0; j < r; ++j) z(j) = src();
      state = var->transition * state + chol * z;
      if (t >= burn_in) f.row(t - burn_in) = state.transpose();
    }
    return f;
  }

  const auto& g = std::get<Garch11Spec>(spec.process);
  Eigen::VectorXd sigma2(r);
  for (int l = 0; l < r; ++l) sigma2(l) = g.omega(l) / (1.0 - g.alpha(l) - g.beta(l));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(r);
  for (int t = 0; t < total; ++t) {
    for (int l = 0; l < r; ++l) {
      sigma2(l) = g.omega(l) + g.alpha(l) * u(l) * u(l) + g.beta(l) * sigma2(l);
      u(l) = std::sqrt(sigma2(l)) * src();
    }
    if (t >= burn_in) f.row(t - burn_in) = u.transpose();
  }
  return f;
}

// ── Idiosyncratic components ──────────────────────────────────────────

Eigen::MatrixXd gen_idio(int n, int t_len, const IdioProcessSpec& spec, std::uint64_t seed) {
  if (n < 1 || t_len < 1) throw SpecError("gen_idio: n and t_len must be >= 1");
  IdioProcessSpec::make(spec.rho_time, spec.cross_decay, spec.scale, spec.innovations);

  constexpr int kBurnIn = 1000;
  InnovationSource src(seed, spec.innovations);
  const double c = spec.cross_decay;
  const double cc = std::sqrt(1.0 - c * c);

  Eigen::MatrixXd xi(t_len, n);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w(n);
  for (int t = 0; t < kBurnIn + t_len; ++t) {
    // Cross-sectional AR(1) gives Cov(w_i, w_j) = c^|i-j| exactly.
    w(0) = src();
    for (int i = 1; i < n; ++i) w(i) = c * w(i - 1) + cc * src();
    state = spec.rho_time * state + spec.scale * w;
    if (t >= kBurnIn) xi.row(t - kBurnIn) = state.transpose();
  }
  return xi;
}

// ── Assembly and population quantities ────────────────────────────────

std::pair<Panel, TruthDecomposition> assemble_panel(const Eigen::MatrixXd& loadings,
                                                    const Eigen::MatrixXd& factors,
                                                    const Eigen::MatrixXd& idio) {
  if (factors.cols() != loadings.cols())
    throw SpecError("assemble_panel: loadings and factors disagree on r");
  if (idio.rows() != factors.rows() || idio.cols() != loadings.rows())
    throw SpecError("assemble_panel: idio must be T x n");
  if (loadings.cols() >= std::min(loadings.rows(), factors.rows()))
    throw SpecError("assemble_panel: requires r < min(n, T)");

  TruthDecomposition truth;
  truth.loadings = loadings;
  truth.factors = factors;
  truth.idio = idio;
  truth.common = factors * loadings.transpose();
  Panel panel{truth.common + truth.idio};
  return {std::move(panel), std::move(truth)};
}

Eigen::MatrixXd factor_covariance(const FactorProcessSpec& spec) {
  if (const auto* ma = std::get_if<LinearMaSpec>(&spec.process)) {
    const Eigen::Index r = ma->coeffs.front().rows();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(r, r);
    for (const auto& c : ma->coeffs) g += c * c.transpose();
    return g;
  }
  if (const auto* var = std::get_if<Var1Spec>(&spec.process)) {
    // Lyapunov solve: vec(G) = (I - A (x) A)^{-1} vec(Sigma).
    const Eigen::Index r = var->transition.rows();
    const Eigen::MatrixXd& a = var->transition;
    Eigen::MatrixXd kron(r * r, r * r);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j)
        kron.block(i * r, j * r, r, r) = a(i, j) * a;
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(r * r, r * r) - kron;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible()) throw SpecError("factor_covariance: Lyapunov solve failed");
    const Eigen::VectorXd vec_sigma =
        Eigen::Map<const Eigen::VectorXd>(var->innovation_cov.data(), r * r);
    Eigen::VectorXd vec_g = lu.solve(vec_sigma);
    Eigen::MatrixXd g = Eigen::Map<Eigen::MatrixXd>(vec_g.data(), r, r);
    return 0.5 * (g + g.transpose());
  }
  const auto& g = std::get<Garch11Spec>(spec.process);
  Eigen::VectorXd var = g.omega.array() / (1.0 - g.alpha.array() - g.beta.array());
  return var.asDiagonal();
}

Eigen::MatrixXd idio_covariance(int n, const IdioProcessSpec& spec) {
  Eigen::MatrixXd g(n, n);
  const double v = spec.scale * spec.scale / (1.0 - spec.rho_time * spec.rho_time);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = v * std::pow(spec.cross_decay, std::abs(i - j));
  return g;
}

namespace {

PopulationCovariances build_population(const Eigen::MatrixXd& loadings,
                                       Eigen::MatrixXd gamma_f,
                                       const IdioProcessSpec& idio_spec, bool verify) {
  const int n = static_cast<int>(loadings.rows());
  const int r = static_cast<int>(loadings.cols());

  PopulationCovariances pop;
  pop.gamma_f = std::move(gamma_f);
  pop.gamma_xi = idio_covariance(n, idio_spec);
  pop.gamma_chi = loadings * pop.gamma_f * loadings.transpose();
  pop.gamma_chi = 0.5 * (pop.gamma_chi + pop.gamma_chi.transpose());
  pop.gamma_x = pop.gamma_chi + pop.gamma_xi;
  pop.sigma_lambda = loadings.transpose() * loadings / static_cast<double>(n);
  if (!verify) return pop;

  // Invariant checks. Violations are reported, not thrown: a caller may be
  // probing a deliberately broken spec.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_f(pop.gamma_f);
  if (eig_f.eigenvalues().minCoeff() <= 0.0)
    pop.violations.push_back("gamma_f is not positive definite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_xi(pop.gamma_xi);
  const double max_row_sum = pop.gamma_xi.cwiseAbs().rowwise().sum().maxCoeff();
  if (eig_xi.eigenvalues().maxCoeff() > max_row_sum * (1.0 + 1e-10) + 1e-12)
    pop.violations.push_back("largest eigenvalue of gamma_xi exceeds max row absolute sum");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_chi(pop.gamma_chi);
  Eigen::VectorXd chi_desc = eig_chi.eigenvalues().reverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_sl(pop.sigma_lambda);
  if (eig_f.eigenvalues().minCoeff() > 0.0 && eig_sl.eigenvalues().minCoeff() > 0.0) {
    const double lo = eig_sl.eigenvalues().minCoeff() * eig_f.eigenvalues().minCoeff();
    const double hi = eig_sl.eigenvalues().maxCoeff() * eig_f.eigenvalues().maxCoeff();
    for (int j = 0; j < r; ++j) {
      const double mu = chi_desc(j) / static_cast<double>(n);
      if (mu < lo * (1.0 - 1e-8) - 1e-12 || mu > hi * (1.0 + 1e-8) + 1e-12) {
        pop.violations.push_back("eigenvalue " + std::to_string(j + 1) +
                                 " of gamma_chi/n escapes the pervasiveness band");
      }
    }
  }
  for (int j = 0; j + 1 < r; ++j) {
    if (chi_desc(j) - chi_desc(j + 1) <= 1e-10 * std::max(1.0, chi_desc(0)))
      pop.violations.push_back("top-r eigenvalues of gamma_chi are not distinct");
  }
  return pop;
}

}  // namespace

PopulationCovariances population_covariances(const Eigen::MatrixXd& loadings,
                                             const FactorProcessSpec& factor_spec,
                                             const IdioProcessSpec& idio_spec, bool verify) {
  if (factor_spec.r() != loadings.cols())
    throw SpecError("population_covariances: factor spec dimension does not match loadings");
  return build_population(loadings, factor_covariance(factor_spec), idio_spec, verify);
}

PopulationCovariances population_covariances(const Eigen::MatrixXd& loadings,
                                             const Eigen::MatrixXd& gamma_f,
                                             const IdioProcessSpec& idio_spec, bool verify) {
  if (gamma_f.rows() != loadings.cols() || gamma_f.cols() != loadings.cols())
    throw SpecError("population_covariances: gamma_f must be r x r");
  return build_population(loadings, gamma_f, idio_spec, verify);
}

// ── Identification constraints (exploratory-factor-analysis mode) ────

void apply_identification_constraints(Eigen::MatrixXd& loadings, Eigen::MatrixXd& factors) {
  const double t_len = static_cast<double>(factors.rows());
  const double n = static_cast<double>(loadings.rows());

  // F <- F S^{-1}, Lambda <- Lambda S with S = (F'F/T)^{1/2} keeps F Lambda'
  // unchanged and makes F'F/T = I_r.
  Eigen::MatrixXd ff = factors.transpose() * factors / t_len;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_ff(0.5 * (ff + ff.transpose()));
  if (eig_ff.eigenvalues().minCoeff() <= 0.0)
    throw SpecError("identification constraints: factor sample covariance is singular");
  const Eigen::MatrixXd sqrt_ff = eig_ff.operatorSqrt();
  const Eigen::MatrixXd inv_sqrt_ff = eig_ff.operatorInverseSqrt();
  factors = factors * inv_sqrt_ff;
  loadings = loadings * sqrt_ff;

  // Orthogonal rotation diagonalizing Lambda'Lambda/n (descending).
  Eigen::MatrixXd ll = loadings.transpose() * loadings / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_ll(0.5 * (ll + ll.transpose()));
  Eigen::MatrixXd rot = eig_ll.eigenvectors().rowwise().reverse();
  loadings = loadings * rot;
  factors = factors * rot;

  // Sign fixing (lambda_{1j} >= 0), applied to both sides.
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index pivot = 0;
    while (pivot < loadings.rows() && loadings(pivot, j) == 0.0) ++pivot;
    if (pivot < loadings.rows() && loadings(pivot, j) < 0.0) {
      loadings.col(j) = -loadings.col(j);
      factors.col(j) = -factors.col(j);
    }
  }
}

std::pair<Panel, TruthDecomposition> generate(const ModelSpec& spec, int n, int t_len,
                                              std::uint64_t seed) {
  Eigen::MatrixXd lambda =
      gen_loadings(n, spec.r, spec.loadings, derive_seed(seed, kLoadingsStream));
  Eigen::MatrixXd factors =
      gen_factors(t_len, spec.r, spec.factors, derive_seed(seed, kFactorStream), spec.burn_in);
  Eigen::MatrixXd idio = gen_idio(n, t_len, spec.idio, derive_seed(seed, kIdioStream));
  if (spec.identification) apply_identification_constraints(lambda, factors);
  return assemble_panel(lambda, factors, idio);
}

}  // namespace fpca
