#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <unsupported/Eigen/CXX11/Tensor>

namespace simplebev {

using Index = Eigen::Index;

// Dense row-major tensors; the last axis is the fastest-varying one (channels,
// depth bins), matching the H x W x D / X x Y x C layouts used throughout.
template <int Rank, typename Scalar = double>
using Tensor = Eigen::Tensor<Scalar, Rank, Eigen::RowMajor>;

// Thrown when inputs violate an operation's shape or value contract.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown for malformed or inconsistent files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

// Rounds a double to the nearest float. Values produced this way survive the
// float32 file encoding unchanged.
inline double to_f32_exact(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace simplebev
