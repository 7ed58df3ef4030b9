#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace riskbn {

using Index = std::int64_t;
using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace riskbn
