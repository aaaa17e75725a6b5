#pragma once

#include <Eigen/Dense>

namespace privrec {

using Scalar = double;
using Index = Eigen::Index;

using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Closed range of valid rating values.
struct RatingRange {
  Scalar lo = -10.0;
  Scalar hi = 10.0;
};

}  // namespace privrec
