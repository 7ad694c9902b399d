#include "storm/manifold.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace storm {
namespace {

RealMatrix symmetric_eigen_apply(const RealMatrix& m, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  RealVector d = eig.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = f(d[i]);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

bool KernelMatrix::is_psd() const { return storm::is_psd(K); }

bool is_psd(const RealMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("is_psd: eigendecomposition failed");
  const double norm = std::max(std::abs(eig.eigenvalues()(0)),
                               std::abs(eig.eigenvalues()(m.rows() - 1)));
  return eig.eigenvalues()(0) >= -tol * norm;
}

double spectral_norm(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("spectral_norm: eigendecomposition failed");
  return std::max(std::abs(eig.eigenvalues()(0)), std::abs(eig.eigenvalues()(m.rows() - 1)));
}

KernelMatrix gaussian_kernel(const ImageSeries& x, double sigma, FrameNormalization norm) {
  if (sigma <= 0) throw ParamError("gaussian_kernel: sigma must be > 0");
  const int n = x.n_frames();
  if (n < 2) throw ParamError("gaussian_kernel: need at least 2 frames");

  double scale = 1.0;
  if (norm == FrameNormalization::max_modulus) {
    const double max_mod = x.casorati.cwiseAbs().maxCoeff();
    if (max_mod > 0) scale = 1.0 / max_mod;
  }

  // Pairwise squared distances via the Gram matrix of the (scaled) Casorati
  // columns: ||xi - xj||^2 = g_ii + g_jj - 2 Re g_ij.
  CxMatrix gram = (scale * scale) * (x.casorati.adjoint() * x.casorati);

  KernelMatrix kernel;
  kernel.sigma = sigma;
  kernel.K.resize(n, n);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < n; ++i) {
    kernel.K(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d2 =
          std::max(0.0, gram(i, i).real() + gram(j, j).real() - 2.0 * gram(i, j).real());
      const double v = std::exp(-d2 * inv);
      kernel.K(i, j) = v;
      kernel.K(j, i) = v;
    }
  }
  return kernel;
}

RealMatrix navigator_weights(const std::vector<CxVector>& z, double sigma) {
  if (sigma <= 0) throw ParamError("navigator_weights: sigma must be > 0");
  const int n = static_cast<int>(z.size());
  if (n < 1) throw ParamError("navigator_weights: no navigator vectors");
  for (int i = 1; i < n; ++i)
    if (z[i].size() != z[0].size())
      throw DataError("navigator_weights: mismatched navigator lengths");

  RealMatrix w(n, n);
  const double inv = 1.0 / (sigma * sigma);
  for (int i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (z[i] - z[j]).squaredNorm();
      const double v = std::exp(-d2 * inv);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

RealMatrix irls_weights(const KernelMatrix& kernel, double gamma) {
  if (gamma <= 0) throw ParamError("irls_weights: gamma must be > 0");
  if (!kernel.K.allFinite()) throw NumericError("irls_weights: kernel matrix is not finite");

  const int n = kernel.size();
  RealMatrix shifted = kernel.K + gamma * RealMatrix::Identity(n, n);
  RealMatrix inv_sqrt = symmetric_eigen_apply(shifted, [](double v) {
    return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0;
  });

  // The leading minus is the orientation that gives the downstream Laplacian
  // a non-negative diagonal: K .* (K + gamma I)^(-1/2) is PSD (Schur product)
  // with negative off-diagonal entries wherever frames are similar, so the
  // negation turns those into positive similarity weights and L = D - W
  // comes out positive semi-definite. The solver asserts PSD regardless.
  RealMatrix w = -kernel.K.cwiseProduct(inv_sqrt) / (kernel.sigma * kernel.sigma);
  // Hadamard products of symmetric matrices stay symmetric; enforce exactly.
  w = 0.5 * (w + w.transpose()).eval();
  return w;
}

LaplacianMatrix laplacian(const RealMatrix& w) {
  if (w.rows() != w.cols()) throw ParamError("laplacian: weight matrix must be square");
  LaplacianMatrix lap;
  lap.W = w;
  lap.L = -w;
  lap.L.diagonal() += w.rowwise().sum();
  return lap;
}

LaplacianMatrix temporal_laplacian(int n_frames) {
  if (n_frames < 2) throw ParamError("temporal_laplacian: need at least 2 frames");
  LaplacianMatrix lap;
  lap.W = RealMatrix::Zero(n_frames, n_frames);
  for (int i = 0; i + 1 < n_frames; ++i) {
    lap.W(i, i + 1) = 1.0;
    lap.W(i + 1, i) = 1.0;
  }
  lap.L = -lap.W;
  lap.L.diagonal() += lap.W.rowwise().sum();
  return lap;
}

double manifold_energy(const ImageSeries& x, const LaplacianMatrix& lap) {
  if (lap.size() != x.n_frames()) throw DataError("manifold_energy: dimension mismatch");
  // trace(X L X^H) = sum_ij L_ij conj(G_ij) with G = X^H X; with symmetric
  // real L and Hermitian G this is real up to round-off.
  const CxMatrix gram = x.casorati.adjoint() * x.casorati;
  const Complex trace = (lap.L.cast<Complex>().cwiseProduct(gram.conjugate())).sum();
  return trace.real();
}

}  // namespace storm
