#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qpsa {

using Sequence = std::vector<int>;
using SequenceView = std::span<const int>;

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

}  // namespace qpsa
