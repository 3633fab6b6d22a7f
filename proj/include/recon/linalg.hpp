#pragma once

#include <Eigen/Dense>

namespace recon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace recon
