#ifndef FPCA_RNG_HPP
#define FPCA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace fpca {

// splitmix64 step; used only to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed derivation: disjoint streams for loadings, factors and
// idiosyncratic innovations, and per-(cell, rep) streams in Monte Carlo runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

enum class Innovations { Gaussian, StudentT8 };

// Unit-variance innovation stream. Student-t(8) draws are rescaled by
// sqrt(6/8) so that E[u^2] = 1 holds for both laws.
class InnovationSource {
 public:
  InnovationSource(std::uint64_t seed, Innovations kind)
      : gen_(seed), kind_(kind) {}

  double operator()() {
    if (kind_ == Innovations::Gaussian) return normal_(gen_);
    return student_(gen_) * kTScale;
  }

 private:
  static constexpr double kTScale = 0.8660254037844386467637;  // sqrt(6/8)
  std::mt19937_64 gen_;
  Innovations kind_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::student_t_distribution<double> student_{8.0};
};

}  // namespace fpca

#endif  // FPCA_RNG_HPP
