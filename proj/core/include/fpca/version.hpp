#ifndef FPCA_VERSION_HPP
#define FPCA_VERSION_HPP

namespace fpca {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fpca

#endif  // FPCA_VERSION_HPP
