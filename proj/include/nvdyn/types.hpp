#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvdyn {

inline constexpr int kLevels = 8;

template <typename Scalar> using LevelVector = Eigen::Matrix<Scalar, kLevels, 1>;
template <typename Scalar> using LevelMatrix = Eigen::Matrix<Scalar, kLevels, kLevels>;

using Vector8 = LevelVector<double>;
using Matrix8 = LevelMatrix<double>;

// Zero-based indices into population vectors. Level numbering in file formats
// and reports is one-based (L1..L8).
enum Level : int {
  L1 = 0, // NV- ground, ms = 0
  L2 = 1, // NV- excited, ms = 0
  L3 = 2, // NV- ground, ms = +-1
  L4 = 3, // NV- excited, ms = +-1
  L5 = 4, // NV0 ground
  L6 = 5, // NV0 excited
  L7 = 6, // NV- metastable singlet
  L8 = 7, // higher singlet reached from L7
};

/// Raised when inputs violate a documented precondition. CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a meaningful result
/// (singular steady state, non-finite generator). CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace nvdyn
