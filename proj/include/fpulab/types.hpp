#pragma once

#include <complex>

#include <Eigen/Dense>

namespace fpulab {

using Index = Eigen::Index;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using ArrayXC = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, 1>;

constexpr bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace fpulab
