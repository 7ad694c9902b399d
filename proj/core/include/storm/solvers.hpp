#pragma once

#include "storm/manifold.hpp"
#include "storm/operators.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace storm {

/// Solver and regularization parameters. The regularization defaults are the
/// tuned values reused across datasets; gamma, grid and iteration settings
/// are artifact choices.
struct ReconConfig {
  double lambda1 = 0.01;  // kernel low-rank weight (step 1)
  double lambda2 = 1e-5;  // temporal smoothness weight
  double lambda = 0.025;  // manifold weight for the final high-resolution solve
  double sigma = 4.5;     // Gaussian kernel width (frames normalized to max modulus 1)

  double gamma0 = 0.0;  // 0 = auto: 0.01 * ||K||_2 of the initial kernel
  double gamma_decay = 0.8;
  double gamma_floor = 1e-4;
  bool fixed_gamma = false;  // test mode: hold gamma at its initial value

  int outer_iters = 5;
  int cg_iters_low = 50;   // step-1 / auxiliary quadratic solves
  int cg_iters_high = 80;  // final high-resolution solve
  double cg_tol = 1e-6;

  double central_fraction = 0.2;
  int low_grid = 0;  // 0 = auto (see resolve_low_grid)

  double sigma_nav = 0.0;  // self-nav kernel width; 0 = median-distance heuristic

  double lambda_lowrank = 0.02;  // low-rank baseline weight
  double schatten_p = 1.0;       // 1 = nuclear norm
  int lowrank_iters = 12;

  void validate() const;
  int resolve_low_grid(int grid) const;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ReconResult {
  ImageSeries images;
  std::optional<LaplacianMatrix> laplacian;
  std::vector<double> objective_trace;  // one value per outer iteration run
  std::vector<StageTiming> timings;
};

/// Progress report after each outer iteration. `laplacian` is the Laplacian
/// the image update solved with; `images` is the iterate it produced.
struct OuterIterationReport {
  int iteration = 0;  // 1-based
  double objective = 0.0;
  const LaplacianMatrix* laplacian = nullptr;
  const ImageSeries* images = nullptr;
};
using ProgressHook = std::function<void(const OuterIterationReport&)>;

/// Largest eigenvalue of the single-frame normal operator A^H A, by power
/// iteration from a fixed starting vector. Used to scale regularizers so the
/// lambda defaults are transferable across sample counts and grids.
double normal_operator_norm(const SamplingOperator& op, int frame = 0, int power_iters = 30);

/// ||A(X) - B||_F^2.
double data_term(const SamplingOperator& op, const MultiCoilKSpace& b, const ImageSeries& x);

/// Minimizes ||A(X) - B||_F^2 + trace(X L_eq X^H) by a conjugate-direction
/// (minimum-residual) iteration on the normal equations
/// (A^H A + . L_eq) X = A^H B; the regularizer is applied matrix-free as
/// X * L_eq. L_eq must be symmetric PSD. The residual norm is non-increasing
/// across iterations; terminates at cg_iters or relative residual <= cg_tol.
ImageSeries solve_image_update(const SamplingOperator& op, const MultiCoilKSpace& b,
                               const LaplacianMatrix& l_eq, int cg_iters, double cg_tol,
                               const ImageSeries* x0 = nullptr,
                               std::vector<double>* residual_history = nullptr);

/// CG reconstruction of the (central) data plus the kernel-weight Laplacian
/// estimated from it: the initializer of the IRLS loop and the whole of the
/// SENSE baseline's manifold estimation.
std::pair<ImageSeries, LaplacianMatrix> sense_laplacian(const SamplingOperator& op,
                                                        const MultiCoilKSpace& b,
                                                        const ReconConfig& cfg);

/// Iterative kernel low-rank recovery of (low-resolution) images: alternates
/// the quadratic image update with the kernel weight/Laplacian update,
/// starting from the SENSE-derived Laplacian. Returns the final images and
/// the Laplacian the last image update solved with (outer_iters = 1 therefore
/// returns the SENSE-initialized Laplacian).
ReconResult kernel_lowrank_irls(const SamplingOperator& op_central,
                                const MultiCoilKSpace& b_central, const ReconConfig& cfg,
                                const ProgressHook& hook = {});

/// Two-step reconstruction: estimate the Laplacian on the central k-space at
/// low resolution (navigators excluded), then solve one high-resolution
/// quadratic problem on all samples with lambda * L/||L|| + lambda2 * L_NN.
ReconResult storm_iterative(const SamplingOperator& op, const MultiCoilKSpace& b,
                            const ReconConfig& cfg, const ProgressHook& hook = {});

/// Laplacian from per-frame navigator signals (exponential weights), then the
/// same high-resolution solve as storm_iterative.
ReconResult storm_selfnav(const SamplingOperator& op, const MultiCoilKSpace& b,
                          const ReconConfig& cfg);

/// Laplacian from the CG-SENSE reconstruction of the central k-space (no IRLS
/// alternation), then the same high-resolution solve.
ReconResult storm_sense(const SamplingOperator& op, const MultiCoilKSpace& b,
                        const ReconConfig& cfg);

/// Schatten-p (p=1: nuclear norm) low-rank baseline by iteratively reweighted
/// quadratic solves on the Casorati matrix.
ReconResult lowrank_recon(const SamplingOperator& op, const MultiCoilKSpace& b, double lambda_lr,
                          double p, const ReconConfig& cfg);

}  // namespace storm
