#pragma once

#include "storm/types.hpp"

#include <memory>
#include <vector>

namespace storm {

/// Non-uniform Fourier transform of square images by Kaiser-Bessel gridding
/// on a 2x oversampled FFT grid.
///
/// Conventions: pixel coordinates are the centered integers r = (row - N/2,
/// col - N/2); sample coordinates k are in cycles/pixel with |k| <= 0.5.
/// forward() evaluates f(k) = sum_r x(r) exp(-i 2 pi k.r); adjoint() is its
/// exact algebraic adjoint (no density compensation, no normalization).
///
/// Immutable after construction and safe for concurrent application; each
/// call allocates its own oversampled scratch grid.
class GriddedFourier {
public:
  explicit GriddedFourier(int grid_size, int oversampling = 2, int kernel_width = 12);
  ~GriddedFourier();

  GriddedFourier(const GriddedFourier&) = delete;
  GriddedFourier& operator=(const GriddedFourier&) = delete;
  GriddedFourier(GriddedFourier&&) noexcept;
  GriddedFourier& operator=(GriddedFourier&&) noexcept;

  int grid_size() const;

  /// image: grid*grid row-major pixels; k: (n,2) sample coordinates.
  void forward(const CxVector& image, const Eigen::ArrayX2d& k, Eigen::Ref<CxVector> out) const;
  void adjoint(const Eigen::Ref<const CxVector>& samples, const Eigen::ArrayX2d& k,
               CxVector& image_out) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Unnormalized centered 2D DFT of a square image:
/// out(p) = sum_r in(r) exp(-i 2 pi (p - n/2).(r - n/2) / n), n even.
CxMatrix centered_fft2(const CxMatrix& image);

/// Unnormalized centered inverse (conjugate exponent). centered_ifft2(
/// centered_fft2(x)) == n*n*x.
CxMatrix centered_ifft2(const CxMatrix& spectrum);

}  // namespace storm
