#include "storm/operators.hpp"

#include "normal_source.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace storm {

CoilMaps simulate_coilmaps(int grid_size, int n_coils) {
  if (grid_size < 2) throw ParamError("simulate_coilmaps: grid_size must be at least 2");
  if (n_coils < 1) throw ParamError("simulate_coilmaps: n_coils must be >= 1");

  CoilMaps cm;
  cm.grid = grid_size;
  cm.maps.resize(std::int64_t(grid_size) * grid_size, n_coils);

  const double n = grid_size;
  const double lobe_sigma = 0.45 * n;
  const double ring_radius = 0.58 * n;
  const double center = 0.5 * (n - 1);

  for (int c = 0; c < n_coils; ++c) {
    const double angle = 2.0 * kPi * c / n_coils;
    const double cy = center + ring_radius * std::sin(angle);
    const double cx = center + ring_radius * std::cos(angle);
    // Small distinct phase ramp per coil keeps the stacked maps full rank.
    const double ramp_y = 0.9 * std::sin(angle) / n;
    const double ramp_x = 0.9 * std::cos(angle) / n;
    const double phase0 = 0.35 * c;
    for (int r = 0; r < grid_size; ++r) {
      for (int col = 0; col < grid_size; ++col) {
        const double dy = r - cy, dx = col - cx;
        const double mag = std::exp(-(dy * dy + dx * dx) / (2.0 * lobe_sigma * lobe_sigma));
        const double phase = 2.0 * kPi * (ramp_y * r + ramp_x * col) + phase0;
        cm.maps(std::int64_t(r) * grid_size + col, c) = std::polar(mag, phase);
      }
    }
  }

  // Unit sum-of-squares magnitude so reconstruction intensities are directly
  // comparable to the object.
  for (Eigen::Index p = 0; p < cm.maps.rows(); ++p) {
    const double sos = std::sqrt(cm.maps.row(p).squaredNorm());
    cm.maps.row(p) /= sos;
  }
  return cm;
}

SamplingOperator::SamplingOperator(SpiralAcquisition acquisition, CoilMaps maps, int grid_size,
                                   SamplingMode mode, double central_fraction)
    : acq_(std::move(acquisition)),
      maps_(std::move(maps)),
      grid_(grid_size),
      mode_(mode),
      central_fraction_(central_fraction),
      nufft_(grid_size) {
  if (!acq_.binned()) throw DataError("SamplingOperator: acquisition must be binned into frames");
  if (maps_.grid != grid_size) throw DataError("SamplingOperator: coil map grid mismatch");
  if (mode_ == SamplingMode::central && !(central_fraction_ > 0.0 && central_fraction_ <= 1.0))
    throw ParamError("SamplingOperator: central_fraction must be in (0,1]");

  frame_k_.resize(acq_.n_frames());
  for (int f = 0; f < acq_.n_frames(); ++f) {
    Eigen::ArrayX2d& k = frame_k_[f];
    k.resize(acq_.frame_sample_count(f), 2);
    Eigen::Index row = 0;
    const FrameRange& fr = acq_.frames[f];
    for (int m = fr.begin; m < fr.end; ++m) {
      const auto& s = acq_.interleaves[m].samples;
      k.block(row, 0, s.rows(), 2) = s;
      row += s.rows();
    }
  }
}

void SamplingOperator::require_compatible(const MultiCoilKSpace& b) const {
  if (b.n_frames() != n_frames()) throw DataError("k-space frame count does not match operator");
  for (int f = 0; f < n_frames(); ++f) {
    if (b.data[f].rows() != frame_k_[f].rows() || b.data[f].cols() != n_coils())
      throw DataError("k-space sample/coil layout does not match operator (frame " +
                      std::to_string(f) + ")");
  }
}

MultiCoilKSpace SamplingOperator::zero_kspace() const {
  MultiCoilKSpace b;
  b.data.resize(n_frames());
  for (int f = 0; f < n_frames(); ++f) b.data[f] = CxMatrix::Zero(frame_k_[f].rows(), n_coils());
  return b;
}

void SamplingOperator::forward_frame(int frame, const Eigen::Ref<const CxVector>& image,
                                     CxMatrix& out) const {
  const Eigen::ArrayX2d& k = frame_k_[frame];
  out.resize(k.rows(), n_coils());
  CxVector weighted(image.size());
  for (int c = 0; c < n_coils(); ++c) {
    weighted = maps_.maps.col(c).cwiseProduct(image);
    nufft_.forward(weighted, k, out.col(c));
  }
}

void SamplingOperator::adjoint_frame(int frame, const CxMatrix& data, CxVector& image_out) const {
  const Eigen::ArrayX2d& k = frame_k_[frame];
  if (data.rows() != k.rows() || data.cols() != n_coils())
    throw DataError("adjoint_frame: data shape mismatch");
  image_out = CxVector::Zero(std::int64_t(grid_) * grid_);
  CxVector coil_image;
  for (int c = 0; c < n_coils(); ++c) {
    nufft_.adjoint(data.col(c), k, coil_image);
    image_out.noalias() += maps_.maps.col(c).conjugate().cwiseProduct(coil_image);
  }
}

MultiCoilKSpace SamplingOperator::forward(const ImageSeries& x) const {
  x.require_grid(grid_);
  if (x.n_frames() != n_frames()) throw DataError("forward: frame count mismatch");
  MultiCoilKSpace b = zero_kspace();
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < n_frames(); ++f) forward_frame(f, x.casorati.col(f), b.data[f]);
  return b;
}

ImageSeries SamplingOperator::adjoint(const MultiCoilKSpace& b) const {
  require_compatible(b);
  ImageSeries x(grid_, n_frames());
#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < n_frames(); ++f) {
    CxVector img;
    adjoint_frame(f, b.data[f], img);
    x.casorati.col(f) = img;
  }
  return x;
}

MultiCoilKSpace add_noise(const MultiCoilKSpace& b, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw ParamError("add_noise: sigma must be >= 0");
  MultiCoilKSpace out = b;
  out.noise_sigma = sigma;
  if (sigma == 0.0) return out;
  detail::NormalSource normals(seed);
  for (CxMatrix& frame : out.data)
    for (Eigen::Index c = 0; c < frame.cols(); ++c)
      for (Eigen::Index s = 0; s < frame.rows(); ++s)
        frame(s, c) += Complex(sigma * normals.next(), sigma * normals.next());
  return out;
}

double sigma_for_snr_db(const MultiCoilKSpace& b, double snr_db) {
  double energy = 0.0;
  std::int64_t count = 0;
  for (const CxMatrix& frame : b.data) {
    energy += frame.squaredNorm();
    count += frame.size();
  }
  if (count == 0 || energy == 0.0) throw DataError("sigma_for_snr_db: empty or all-zero data");
  const double rms = std::sqrt(energy / double(count));
  // ||noise||/||signal|| = 10^(-snr/20); each complex sample carries 2 sigma^2.
  return rms * std::pow(10.0, -snr_db / 20.0) / std::sqrt(2.0);
}

std::pair<MultiCoilKSpace, CoilMaps> compress_coils(const MultiCoilKSpace& b, const CoilMaps& maps,
                                                    double max_error) {
  if (!(max_error > 0.0 && max_error < 1.0))
    throw ParamError("compress_coils: max_error must be in (0,1)");
  const int nc = maps.n_coils();
  if (b.n_coils() != nc) throw DataError("compress_coils: coil count mismatch between data and maps");

  // Principal coil subspace from the coil-by-coil Gram matrix of the stacked
  // data; equivalent to the SVD of the (samples x coils) stack.
  CxMatrix gram = CxMatrix::Zero(nc, nc);
  double total_energy = 0.0;
  for (const CxMatrix& frame : b.data) {
    gram.noalias() += frame.adjoint() * frame;
    total_energy += frame.squaredNorm();
  }
  if (total_energy == 0.0) throw DataError("compress_coils: data is all zero");

  Eigen::SelfAdjointEigenSolver<CxMatrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("compress_coils: eigendecomposition failed");

  // Eigenvalues ascending: drop the largest tail whose energy keeps the
  // relative Frobenius error strictly below max_error.
  const RealVector ev = eig.eigenvalues().cwiseMax(0.0);
  const double budget = max_error * max_error * total_energy;
  int drop = 0;
  double discarded = 0.0;
  while (drop < nc - 1 && discarded + ev[drop] < budget) {
    discarded += ev[drop];
    ++drop;
  }
  const int keep = nc - drop;

  // Any coil mixing matrix applies identically to data and maps, so projecting
  // both onto the leading eigenvectors keeps them consistent.
  CxMatrix basis(nc, keep);
  for (int j = 0; j < keep; ++j) basis.col(j) = eig.eigenvectors().col(nc - 1 - j);

  MultiCoilKSpace out;
  out.noise_sigma = b.noise_sigma;
  out.data.resize(b.n_frames());
  for (int f = 0; f < b.n_frames(); ++f) out.data[f].noalias() = b.data[f] * basis;

  CoilMaps vmaps;
  vmaps.grid = maps.grid;
  vmaps.maps.noalias() = maps.maps * basis;
  return {std::move(out), std::move(vmaps)};
}

std::pair<SamplingOperator, MultiCoilKSpace> restrict_central(const SamplingOperator& op,
                                                              const MultiCoilKSpace& b,
                                                              double central_fraction, int low_grid) {
  if (!(central_fraction > 0.0 && central_fraction <= 1.0))
    throw ParamError("restrict_central: central_fraction must be in (0,1]");
  if (low_grid < 4 || low_grid > op.grid() || low_grid % 2 != 0)
    throw ParamError("restrict_central: low_grid must be even and in [4, grid]");
  op.require_compatible(b);

  const double cutoff = central_fraction * 0.5;
  const double scale = double(op.grid()) / double(low_grid);  // same field of view

  const SpiralAcquisition& src = op.acquisition();
  SpiralAcquisition acq = src;

  std::vector<std::vector<Eigen::Index>> kept(src.n_interleaves());
  std::int64_t total_kept = 0;
  for (int m = 0; m < src.n_interleaves(); ++m) {
    const auto& s = src.interleaves[m].samples;
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      if (std::hypot(s(i, 0), s(i, 1)) <= cutoff) kept[m].push_back(i);
    total_kept += kept[m].size();
  }
  if (total_kept == 0) throw DataError("restrict_central: no samples inside the central region");

  for (int m = 0; m < src.n_interleaves(); ++m) {
    Eigen::ArrayX2d filtered(kept[m].size(), 2);
    for (std::size_t i = 0; i < kept[m].size(); ++i)
      filtered.row(i) = src.interleaves[m].samples.row(kept[m][i]) * scale;
    acq.interleaves[m].samples = std::move(filtered);
  }

  MultiCoilKSpace bc;
  bc.noise_sigma = b.noise_sigma;
  bc.data.resize(b.n_frames());
  for (int f = 0; f < b.n_frames(); ++f) {
    const FrameRange& fr = acq.frames[f];
    std::int64_t rows = 0;
    for (int m = fr.begin; m < fr.end; ++m) rows += kept[m].size();
    bc.data[f].resize(rows, b.n_coils());
    std::int64_t dst = 0;
    std::int64_t src_base = 0;
    for (int m = fr.begin; m < fr.end; ++m) {
      for (Eigen::Index i : kept[m]) bc.data[f].row(dst++) = b.data[f].row(src_base + i);
      src_base += src.interleaves[m].n_samples();
    }
  }

  // Band-limit the coil maps onto the low-resolution grid by Fourier
  // truncation, then restore unit sum-of-squares.
  const int n = op.grid();
  const int h_off = (n - low_grid) / 2;
  CoilMaps low_maps;
  low_maps.grid = low_grid;
  low_maps.maps.resize(std::int64_t(low_grid) * low_grid, op.n_coils());
  for (int c = 0; c < op.n_coils(); ++c) {
    Eigen::Map<const CxMatrix> full_colmajor(op.coil_maps().maps.col(c).data(), n, n);
    // Column-major map of a row-major pixel vector is the transposed image;
    // transpose in and out to keep row/column semantics straight.
    CxMatrix image = full_colmajor.transpose();
    CxMatrix spectrum = centered_fft2(image);
    CxMatrix low = centered_ifft2(spectrum.block(h_off, h_off, low_grid, low_grid)) / double(n * n);
    CxMatrix low_t = low.transpose();
    low_maps.maps.col(c) = Eigen::Map<const CxVector>(low_t.data(), std::int64_t(low_grid) * low_grid);
  }
  for (Eigen::Index p = 0; p < low_maps.maps.rows(); ++p) {
    const double sos = std::sqrt(low_maps.maps.row(p).squaredNorm());
    if (sos > 1e-12) low_maps.maps.row(p) /= sos;
  }

  SamplingOperator low_op(std::move(acq), std::move(low_maps), low_grid, SamplingMode::central,
                          central_fraction);
  return {std::move(low_op), std::move(bc)};
}

std::pair<SamplingOperator, MultiCoilKSpace> drop_navigators(const SamplingOperator& op,
                                                             const MultiCoilKSpace& b) {
  op.require_compatible(b);
  const SpiralAcquisition& src = op.acquisition();

  SpiralAcquisition acq;
  acq.samples_per_readout = src.samples_per_readout;
  acq.density_inner = src.density_inner;
  acq.density_outer = src.density_outer;
  acq.inner_extent = src.inner_extent;

  MultiCoilKSpace out;
  out.noise_sigma = b.noise_sigma;
  out.data.resize(src.n_frames());

  for (int f = 0; f < src.n_frames(); ++f) {
    const FrameRange& fr = src.frames[f];
    const int begin = acq.n_interleaves();
    std::int64_t rows = 0;
    std::int64_t src_row = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;  // (offset, count) into b.data[f]
    for (int m = fr.begin; m < fr.end; ++m) {
      const SpiralInterleaf& il = src.interleaves[m];
      if (!il.is_navigator) {
        acq.interleaves.push_back(il);
        spans.emplace_back(src_row, il.n_samples());
        rows += il.n_samples();
      }
      src_row += il.n_samples();
    }
    if (rows == 0) throw DataError("drop_navigators: frame " + std::to_string(f) +
                                   " would be left with no samples");
    acq.frames.push_back({begin, acq.n_interleaves()});
    out.data[f].resize(rows, b.n_coils());
    std::int64_t dst = 0;
    for (auto [offset, count] : spans) {
      out.data[f].middleRows(dst, count) = b.data[f].middleRows(offset, count);
      dst += count;
    }
  }

  SamplingOperator stripped(std::move(acq), op.coil_maps(), op.grid(), op.mode(),
                            op.central_fraction());
  return {std::move(stripped), std::move(out)};
}

std::vector<CxVector> navigator_vectors(const SamplingOperator& op, const MultiCoilKSpace& b) {
  op.require_compatible(b);
  const SpiralAcquisition& acq = op.acquisition();
  std::vector<CxVector> z(acq.n_frames());
  for (int f = 0; f < acq.n_frames(); ++f) {
    const FrameRange& fr = acq.frames[f];
    std::int64_t count = 0;
    std::int64_t row = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    for (int m = fr.begin; m < fr.end; ++m) {
      const int ns = acq.interleaves[m].n_samples();
      if (acq.interleaves[m].is_navigator) {
        spans.emplace_back(row, ns);
        count += ns;
      }
      row += ns;
    }
    if (count == 0)
      throw DataError("navigator_vectors: frame " + std::to_string(f) + " has no navigator samples");
    z[f].resize(count * b.n_coils());
    std::int64_t dst = 0;
    for (int c = 0; c < b.n_coils(); ++c) {
      for (auto [offset, ns] : spans) {
        z[f].segment(dst, ns) = b.data[f].col(c).segment(offset, ns);
        dst += ns;
      }
    }
  }
  return z;
}

}  // namespace storm
