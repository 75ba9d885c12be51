#pragma once

#include <Eigen/Dense>

namespace deepsel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace deepsel
