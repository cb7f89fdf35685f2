#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace smr {

using Index = Eigen::Index;
using cx = std::complex<double>;

using CxMatrix = Eigen::MatrixXcd;
using CxVector = Eigen::VectorXcd;
using ReMatrix = Eigen::MatrixXd;
using ReVector = Eigen::VectorXd;

// Sample coordinates, one row per sample, columns (k_row, k_col).
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegenerateInputError : std::domain_error {
  using std::domain_error::domain_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace smr
