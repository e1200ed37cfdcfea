#pragma once

#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace superrad {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Physics variant used to build coupling matrices. All solvers consume the
// same CouplingSet, so the variant is chosen once at assembly time.
enum class CouplingMode { kFull, kInelasticOnly, kDicke };

const char* to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(const std::string& name);

}  // namespace superrad
