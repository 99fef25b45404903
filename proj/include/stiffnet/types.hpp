#pragma once

#include <Eigen/Dense>

namespace stiffnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Universal gas constant, J/(mol K).
inline constexpr double kGasConstant = 8.314462618;

}  // namespace stiffnet
