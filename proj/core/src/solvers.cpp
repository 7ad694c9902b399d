#include "storm/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace storm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Per-frame partial reductions summed in frame order keep results identical
// across thread counts.
double deterministic_sum(std::vector<double>& partials) {
  double total = 0.0;
  for (double v : partials) total += v;
  return total;
}

// y = A^H A x + x * R (R optional, Hermitian PSD, frames x frames).
void apply_normal_operator(const SamplingOperator& op, const CxMatrix& x, const CxMatrix* r,
                           CxMatrix& y) {
  y.resize(x.rows(), x.cols());
  const int nf = op.n_frames();
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < nf; ++f) {
    CxMatrix data;
    op.forward_frame(f, x.col(f), data);
    CxVector img;
    op.adjoint_frame(f, data, img);
    y.col(f) = img;
  }
  if (r) y.noalias() += x * (*r);
}

double real_dot(const CxMatrix& a, const CxMatrix& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

// Conjugate-residual iteration for the Hermitian positive semi-definite
// normal operator: minimizes the residual 2-norm over the Krylov space, so
// the residual norm is non-increasing (which CG proper does not guarantee).
CxMatrix conjugate_residual(const SamplingOperator& op, const CxMatrix& rhs, const CxMatrix* r,
                            int max_iters, double tol, const CxMatrix* x0,
                            std::vector<double>* residual_history) {
  const double rhs_norm = rhs.norm();
  CxMatrix x = x0 ? *x0 : CxMatrix::Zero(rhs.rows(), rhs.cols());
  if (rhs_norm == 0.0) return CxMatrix::Zero(rhs.rows(), rhs.cols());

  CxMatrix res(rhs.rows(), rhs.cols());
  if (x0) {
    apply_normal_operator(op, x, r, res);
    res = rhs - res;
  } else {
    res = rhs;
  }

  if (residual_history) residual_history->push_back(res.norm());

  CxMatrix p = res;
  CxMatrix m_res(rhs.rows(), rhs.cols());
  apply_normal_operator(op, res, r, m_res);
  CxMatrix m_p = m_res;
  double rho = real_dot(res, m_res);

  double res_norm = res.norm();
  for (int it = 0; it < max_iters; ++it) {
    if (res_norm <= tol * rhs_norm) break;
    const double denom = real_dot(m_p, m_p);
    if (!(denom > 0.0)) break;
    const double alpha = rho / denom;
    x += alpha * p;
    res -= alpha * m_p;
    res_norm = res.norm();
    if (!std::isfinite(res_norm)) throw NumericError("quadratic solve diverged: non-finite residual");
    if (residual_history) residual_history->push_back(res_norm);
    apply_normal_operator(op, res, r, m_res);
    const double rho_new = real_dot(res, m_res);
    if (!(std::abs(rho) > 0.0)) break;
    const double beta = rho_new / rho;
    rho = rho_new;
    p = res + beta * p;
    m_p = m_res + beta * m_p;
  }
  return x;
}

CxMatrix adjoint_casorati(const SamplingOperator& op, const MultiCoilKSpace& b) {
  ImageSeries s = op.adjoint(b);
  return std::move(s.casorati);
}

ImageSeries wrap_series(const SamplingOperator& op, CxMatrix&& casorati) {
  ImageSeries s;
  s.grid = op.grid();
  s.casorati = std::move(casorati);
  return s;
}

LaplacianMatrix kernel_laplacian(const ImageSeries& x, double sigma, double gamma) {
  KernelMatrix kernel = gaussian_kernel(x, sigma, FrameNormalization::max_modulus);
  LaplacianMatrix lap = laplacian(irls_weights(kernel, gamma));
  lap.gamma = gamma;
  return lap;
}

// lambda1 * L + lambda2 * L_NN, PSD-checked and pre-scaled by the operator
// norm so the data term is effectively normalized to unit spectral norm.
LaplacianMatrix combine_regularizers(double lambda_l, const RealMatrix& l, double lambda_nn,
                                     const RealMatrix& l_nn, double op_norm) {
  LaplacianMatrix out;
  out.W = RealMatrix();
  out.L = lambda_l * l + lambda_nn * l_nn;
  if (!is_psd(out.L)) throw NumericError("combined Laplacian regularizer is not PSD");
  out.L *= op_norm;
  return out;
}

}  // namespace

void ReconConfig::validate() const {
  if (lambda1 <= 0) throw ParamError("recon: lambda1 must be > 0");
  if (lambda2 < 0) throw ParamError("recon: lambda2 must be >= 0");
  if (lambda <= 0) throw ParamError("recon: lambda must be > 0");
  if (sigma <= 0) throw ParamError("recon: sigma must be > 0");
  if (gamma0 < 0) throw ParamError("recon: gamma0 must be >= 0");
  if (gamma_decay <= 0 || gamma_decay > 1) throw ParamError("recon: gamma_decay must be in (0,1]");
  if (gamma_floor <= 0) throw ParamError("recon: gamma_floor must be > 0");
  if (outer_iters < 1) throw ParamError("recon: outer_iters must be >= 1");
  if (cg_iters_low < 1 || cg_iters_high < 1) throw ParamError("recon: cg iteration counts must be >= 1");
  if (cg_tol <= 0) throw ParamError("recon: cg_tol must be > 0");
  if (!(central_fraction > 0 && central_fraction <= 1))
    throw ParamError("recon: central_fraction must be in (0,1]");
  if (low_grid != 0 && (low_grid < 4 || low_grid % 2 != 0))
    throw ParamError("recon: low_grid must be 0 (auto) or an even integer >= 4");
  if (sigma_nav < 0) throw ParamError("recon: sigma_nav must be >= 0");
  if (lambda_lowrank <= 0) throw ParamError("recon: lambda_lowrank must be > 0");
  if (!(schatten_p > 0 && schatten_p <= 1)) throw ParamError("recon: schatten_p must be in (0,1]");
  if (lowrank_iters < 1) throw ParamError("recon: lowrank_iters must be >= 1");
}

int ReconConfig::resolve_low_grid(int grid) const {
  if (low_grid > 0) {
    if (low_grid > grid) throw ParamError("recon: low_grid exceeds the acquisition grid");
    return low_grid;
  }
  const int even = 2 * static_cast<int>(std::lround(grid * central_fraction / 2.0));
  return std::clamp(even, 8, grid);
}

double normal_operator_norm(const SamplingOperator& op, int frame, int power_iters) {
  const std::int64_t pixels = std::int64_t(op.grid()) * op.grid();
  CxVector v = CxVector::Ones(pixels) / std::sqrt(double(pixels));
  double lambda = 0.0;
  CxMatrix data;
  CxVector w;
  for (int it = 0; it < power_iters; ++it) {
    op.forward_frame(frame, v, data);
    op.adjoint_frame(frame, data, w);
    lambda = w.norm();
    if (!(lambda > 0.0)) throw NumericError("normal_operator_norm: operator annihilated the probe");
    v = w / lambda;
  }
  return lambda;
}

double data_term(const SamplingOperator& op, const MultiCoilKSpace& b, const ImageSeries& x) {
  op.require_compatible(b);
  x.require_grid(op.grid());
  const int nf = op.n_frames();
  std::vector<double> partials(nf, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < nf; ++f) {
    CxMatrix data;
    op.forward_frame(f, x.casorati.col(f), data);
    partials[f] = (data - b.data[f]).squaredNorm();
  }
  return deterministic_sum(partials);
}

ImageSeries solve_image_update(const SamplingOperator& op, const MultiCoilKSpace& b,
                               const LaplacianMatrix& l_eq, int cg_iters, double cg_tol,
                               const ImageSeries* x0, std::vector<double>* residual_history) {
  op.require_compatible(b);
  if (l_eq.size() != op.n_frames()) throw DataError("solve_image_update: Laplacian size mismatch");
  if (!l_eq.L.isApprox(l_eq.L.transpose(), 1e-12))
    throw ParamError("solve_image_update: L_eq must be symmetric");
  if (!is_psd(l_eq.L)) throw ParamError("solve_image_update: L_eq must be positive semi-definite");
  if (x0) x0->require_grid(op.grid());

  const CxMatrix reg = l_eq.L.cast<Complex>();
  const bool use_reg = l_eq.L.cwiseAbs().maxCoeff() > 0.0;
  const CxMatrix rhs = adjoint_casorati(op, b);
  CxMatrix x = conjugate_residual(op, rhs, use_reg ? &reg : nullptr, cg_iters, cg_tol,
                                  x0 ? &x0->casorati : nullptr, residual_history);
  return wrap_series(op, std::move(x));
}

std::pair<ImageSeries, LaplacianMatrix> sense_laplacian(const SamplingOperator& op,
                                                        const MultiCoilKSpace& b,
                                                        const ReconConfig& cfg) {
  cfg.validate();
  const CxMatrix rhs = adjoint_casorati(op, b);
  CxMatrix x = conjugate_residual(op, rhs, nullptr, cfg.cg_iters_low, cfg.cg_tol, nullptr, nullptr);
  ImageSeries images = wrap_series(op, std::move(x));

  KernelMatrix kernel = gaussian_kernel(images, cfg.sigma, FrameNormalization::max_modulus);
  const double gamma = cfg.gamma0 > 0 ? cfg.gamma0 : 0.01 * spectral_norm(kernel.K);
  LaplacianMatrix lap = laplacian(irls_weights(kernel, gamma));
  lap.gamma = gamma;
  return {std::move(images), std::move(lap)};
}

ReconResult kernel_lowrank_irls(const SamplingOperator& op_central,
                                const MultiCoilKSpace& b_central, const ReconConfig& cfg,
                                const ProgressHook& hook) {
  cfg.validate();
  op_central.require_compatible(b_central);
  const auto t0 = Clock::now();

  ReconResult result;
  const double op_norm = normal_operator_norm(op_central);
  const LaplacianMatrix l_nn = temporal_laplacian(op_central.n_frames());

  auto [images, lap] = sense_laplacian(op_central, b_central, cfg);
  const double gamma0 = lap.gamma;
  result.timings.push_back({"sense_init", seconds_since(t0)});

  const auto t1 = Clock::now();
  const CxMatrix rhs = adjoint_casorati(op_central, b_central);
  for (int i = 1; i <= cfg.outer_iters; ++i) {
    const LaplacianMatrix l_eq =
        combine_regularizers(cfg.lambda1, lap.L, cfg.lambda2, l_nn.L, op_norm);
    const CxMatrix reg = l_eq.L.cast<Complex>();
    CxMatrix x = conjugate_residual(op_central, rhs, &reg, cfg.cg_iters_low, cfg.cg_tol,
                                    &images.casorati, nullptr);
    images.casorati = std::move(x);

    const double objective =
        data_term(op_central, b_central, images) +
        (images.casorati.adjoint() * images.casorati)
            .conjugate()
            .cwiseProduct(l_eq.L.cast<Complex>())
            .sum()
            .real();
    result.objective_trace.push_back(objective);

    if (hook) hook({i, objective, &lap, &images});

    if (i < cfg.outer_iters) {
      const double gamma =
          cfg.fixed_gamma ? gamma0 : std::max(gamma0 * std::pow(cfg.gamma_decay, i), cfg.gamma_floor);
      lap = kernel_laplacian(images, cfg.sigma, gamma);
    }
  }
  result.timings.push_back({"irls_loop", seconds_since(t1)});
  result.images = std::move(images);
  result.laplacian = std::move(lap);
  return result;
}

namespace {

// Shared step 2: one high-resolution quadratic solve on all samples, with the
// step-1 Laplacian rescaled to unit spectral norm so lambda transfers across
// datasets.
void highres_solve(const SamplingOperator& op, const MultiCoilKSpace& b, const ReconConfig& cfg,
                   const LaplacianMatrix& manifold_lap, ReconResult& result) {
  const auto t0 = Clock::now();
  const double op_norm = normal_operator_norm(op);
  const LaplacianMatrix l_nn = temporal_laplacian(op.n_frames());
  const double lap_norm = spectral_norm(manifold_lap.L);
  const RealMatrix l_hat = lap_norm > 0 ? RealMatrix(manifold_lap.L / lap_norm) : manifold_lap.L;
  const LaplacianMatrix l_eq = combine_regularizers(cfg.lambda, l_hat, cfg.lambda2, l_nn.L, op_norm);
  result.images = solve_image_update(op, b, l_eq, cfg.cg_iters_high, cfg.cg_tol, nullptr, nullptr);
  result.timings.push_back({"highres_solve", seconds_since(t0)});
}

}  // namespace

ReconResult storm_iterative(const SamplingOperator& op, const MultiCoilKSpace& b,
                            const ReconConfig& cfg, const ProgressHook& hook) {
  cfg.validate();
  op.require_compatible(b);
  const auto t0 = Clock::now();

  // Step 1 on the central region, excluding navigator interleaves.
  ReconResult step1;
  {
    const int low_grid = cfg.resolve_low_grid(op.grid());
    if (op.acquisition().has_navigators()) {
      auto [op_data, b_data] = drop_navigators(op, b);
      auto [op_c, b_c] = restrict_central(op_data, b_data, cfg.central_fraction, low_grid);
      step1 = kernel_lowrank_irls(op_c, b_c, cfg, hook);
    } else {
      auto [op_c, b_c] = restrict_central(op, b, cfg.central_fraction, low_grid);
      step1 = kernel_lowrank_irls(op_c, b_c, cfg, hook);
    }
  }

  ReconResult result;
  result.objective_trace = std::move(step1.objective_trace);
  result.timings = std::move(step1.timings);
  result.timings.insert(result.timings.begin(), {"step1_total", seconds_since(t0)});

  highres_solve(op, b, cfg, *step1.laplacian, result);
  result.laplacian = std::move(step1.laplacian);
  return result;
}

ReconResult storm_selfnav(const SamplingOperator& op, const MultiCoilKSpace& b,
                          const ReconConfig& cfg) {
  cfg.validate();
  op.require_compatible(b);
  if (!op.acquisition().has_navigators())
    throw DataError("storm_selfnav: acquisition has no navigator interleaves; "
                    "acquire with navigator_every > 0 or use storm-iterative");

  const auto t0 = Clock::now();
  std::vector<CxVector> z = navigator_vectors(op, b);

  // Same normalization idea as the image kernel: scale by the series' max
  // modulus so sigma is unitless.
  double max_mod = 0.0;
  for (const CxVector& zi : z) max_mod = std::max(max_mod, zi.cwiseAbs().maxCoeff());
  if (max_mod > 0)
    for (CxVector& zi : z) zi /= max_mod;

  double sigma = cfg.sigma_nav;
  if (sigma <= 0) {
    // Median pairwise distance heuristic.
    const int n = static_cast<int>(z.size());
    std::vector<double> d2;
    d2.reserve(std::size_t(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) d2.push_back((z[i] - z[j]).squaredNorm());
    std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
    const double med = d2[d2.size() / 2];
    // Identical navigators (static object) give weight 1 for any sigma.
    sigma = med > 0 ? std::sqrt(med) : 1.0;
  }

  ReconResult result;
  LaplacianMatrix lap = laplacian(navigator_weights(z, sigma));
  result.timings.push_back({"navigator_laplacian", seconds_since(t0)});

  highres_solve(op, b, cfg, lap, result);
  result.laplacian = std::move(lap);
  return result;
}

ReconResult storm_sense(const SamplingOperator& op, const MultiCoilKSpace& b,
                        const ReconConfig& cfg) {
  cfg.validate();
  op.require_compatible(b);
  const auto t0 = Clock::now();

  LaplacianMatrix lap;
  {
    const int low_grid = cfg.resolve_low_grid(op.grid());
    if (op.acquisition().has_navigators()) {
      auto [op_data, b_data] = drop_navigators(op, b);
      auto [op_c, b_c] = restrict_central(op_data, b_data, cfg.central_fraction, low_grid);
      lap = sense_laplacian(op_c, b_c, cfg).second;
    } else {
      auto [op_c, b_c] = restrict_central(op, b, cfg.central_fraction, low_grid);
      lap = sense_laplacian(op_c, b_c, cfg).second;
    }
  }

  ReconResult result;
  result.timings.push_back({"sense_laplacian", seconds_since(t0)});
  highres_solve(op, b, cfg, lap, result);
  result.laplacian = std::move(lap);
  return result;
}

ReconResult lowrank_recon(const SamplingOperator& op, const MultiCoilKSpace& b, double lambda_lr,
                          double p, const ReconConfig& cfg) {
  cfg.validate();
  if (lambda_lr <= 0) throw ParamError("lowrank_recon: lambda_lr must be > 0");
  if (!(p > 0 && p <= 1)) throw ParamError("lowrank_recon: p must be in (0,1]");
  op.require_compatible(b);

  const auto t0 = Clock::now();
  const double op_norm = normal_operator_norm(op);
  const CxMatrix rhs = adjoint_casorati(op, b);

  // Short unregularized burn-in to set the scale of the singular spectrum.
  CxMatrix x = conjugate_residual(op, rhs, nullptr, 10, cfg.cg_tol, nullptr, nullptr);

  ReconResult result;
  double eps = 0.0;
  for (int it = 0; it < cfg.lowrank_iters; ++it) {
    Eigen::SelfAdjointEigenSolver<CxMatrix> eig(x.adjoint() * x);
    if (eig.info() != Eigen::Success) throw NumericError("lowrank_recon: eigendecomposition failed");
    const RealVector ev = eig.eigenvalues().cwiseMax(0.0);
    const double top = ev(ev.size() - 1);
    if (it == 0) eps = std::max(1e-12, 0.01 * top);

    // Weight H = (X^H X + eps I)^(p/2 - 1); the quadratic
    // (p/2) trace(X H X^H) majorizes the Schatten-p penalty at the iterate.
    RealVector f = ev;
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = std::pow(ev[i] + eps, 0.5 * p - 1.0);
    const CxMatrix h = eig.eigenvectors() * f.asDiagonal() * eig.eigenvectors().adjoint();
    const CxMatrix reg = (op_norm * lambda_lr * 0.5 * p) * h;

    x = conjugate_residual(op, rhs, &reg, cfg.cg_iters_low, cfg.cg_tol, &x, nullptr);

    double penalty = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) penalty += std::pow(ev[i] + eps, 0.5 * p);
    result.objective_trace.push_back(data_term(op, b, wrap_series(op, CxMatrix(x))) +
                                     op_norm * lambda_lr * penalty);
    eps = std::max(eps * 0.7, 1e-10 * std::max(top, 1.0));
  }

  result.images = wrap_series(op, std::move(x));
  result.timings.push_back({"lowrank_irls", seconds_since(t0)});
  return result;
}

}  // namespace storm
