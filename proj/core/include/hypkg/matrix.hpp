#pragma once

#include <Eigen/Dense>

namespace hypkg {

// Row-major so that per-entity / per-node rows are contiguous in memory.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace hypkg
