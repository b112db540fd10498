#pragma once

#include <Eigen/Dense>

#include <vector>

namespace distopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One vector per block, in block order.
using BlockVectors = std::vector<Vector>;

}  // namespace distopt
