#pragma once

#include "storm/types.hpp"

#include <vector>

namespace storm {

/// Gaussian inter-frame kernel matrix: symmetric, unit diagonal, entries in
/// (0, 1], positive semi-definite.
struct KernelMatrix {
  RealMatrix K;
  double sigma = 0.0;

  int size() const { return static_cast<int>(K.rows()); }
  /// Smallest-eigenvalue PSD check with tolerance -1e-8 * ||K||.
  bool is_psd() const;
};

/// Graph Laplacian L = D - W with zero row sums, together with the weight
/// matrix it came from. gamma records the IRLS smoothing used to build W
/// (zero for navigator- or test-derived Laplacians).
struct LaplacianMatrix {
  RealMatrix L;
  RealMatrix W;
  double gamma = 0.0;

  int size() const { return static_cast<int>(L.rows()); }
};

enum class FrameNormalization {
  none,
  max_modulus,  // divide all frames by the series' largest pixel magnitude
};

/// K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)) with the Euclidean norm over
/// all pixels (complex moduli of differences).
KernelMatrix gaussian_kernel(const ImageSeries& x, double sigma, FrameNormalization norm);

/// Navigator-signal weights w_ij = exp(-||z_i - z_j||^2 / sigma^2) -- note
/// the sigma^2 exponent, which differs from the kernel's 2 sigma^2.
RealMatrix navigator_weights(const std::vector<CxVector>& z, double sigma);

/// IRLS weight update W = (1/sigma^2) K .* (K + gamma I)^(-1/2), computed by
/// eigendecomposition, in the positive orientation (see module notes in
/// solvers): the Hadamard product of two PSD factors keeps W PSD and the
/// downstream Laplacian empirically PSD, which the quadratic solver asserts.
RealMatrix irls_weights(const KernelMatrix& kernel, double gamma);

/// L = D - W with D_ii = sum_j W_ij.
LaplacianMatrix laplacian(const RealMatrix& W);

/// Tridiagonal second-difference matrix with trace(X L X^H) =
/// sum_i ||x_{i+1} - x_i||^2: interior diagonal 2, boundary diagonal 1,
/// off-diagonals -1.
LaplacianMatrix temporal_laplacian(int n_frames);

/// trace(X L X^H), real part.
double manifold_energy(const ImageSeries& x, const LaplacianMatrix& lap);

/// Largest-magnitude eigenvalue of a symmetric matrix (spectral norm).
double spectral_norm(const RealMatrix& m);

/// Smallest eigenvalue >= -tol * ||L||.
bool is_psd(const RealMatrix& m, double tol = 1e-8);

}  // namespace storm
