#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace storm {

using Complex = std::complex<double>;
using CxMatrix = Eigen::MatrixXcd;
using CxVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Invalid parameter or violated precondition (maps to CLI exit code 2).
class ParamError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Structurally inconsistent input data (maps to CLI exit code 3).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: divergence, non-finite values (maps to CLI exit code 4).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dynamic series of square complex images stored as a Casorati matrix:
/// one column per frame, pixels in row-major order within a column.
struct ImageSeries {
  int grid = 0;
  CxMatrix casorati;  // (grid*grid) x n_frames

  ImageSeries() = default;
  ImageSeries(int grid_size, int n_frames)
      : grid(grid_size), casorati(CxMatrix::Zero(std::int64_t(grid_size) * grid_size, n_frames)) {}

  int n_frames() const { return static_cast<int>(casorati.cols()); }
  int n_pixels() const { return static_cast<int>(casorati.rows()); }

  Complex& at(int frame, int row, int col) { return casorati(std::int64_t(row) * grid + col, frame); }
  Complex at(int frame, int row, int col) const { return casorati(std::int64_t(row) * grid + col, frame); }

  void require_grid(int expected) const {
    if (grid != expected)
      throw DataError("image series grid " + std::to_string(grid) + " does not match operator grid " +
                      std::to_string(expected));
  }
};

inline constexpr double kPi = 3.14159265358979323846;

/// Azimuthal increment between successive golden-angle readouts, pi*(3-sqrt(5)).
inline constexpr double kGoldenAngle = 2.3999632297286533;  // ~137.508 deg

}  // namespace storm
