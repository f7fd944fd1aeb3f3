#pragma once

#include <string>

#include <Eigen/Core>

namespace pnid {

inline constexpr const char* kVersion = "0.1.0";

/// Library, compiler and Eigen versions, for reproducibility records.
inline std::string build_info() {
    std::string s = std::string("pnid ") + kVersion;
#if defined(__clang__)
    s += "; clang " __clang_version__;
#elif defined(__GNUC__)
    s += "; gcc " __VERSION__;
#endif
    s += "; eigen " + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
    return s;
}

}  // namespace pnid
