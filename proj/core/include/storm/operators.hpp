#pragma once

#include "storm/nufft.hpp"
#include "storm/trajectory.hpp"
#include "storm/types.hpp"

#include <utility>
#include <vector>

namespace storm {

/// Static complex coil sensitivity maps, one column per coil, pixels
/// row-major. Sum-of-squares magnitude is positive everywhere (and equals 1
/// for simulated maps).
struct CoilMaps {
  int grid = 0;
  CxMatrix maps;  // (grid*grid) x n_coils

  int n_coils() const { return static_cast<int>(maps.cols()); }
};

/// Smooth Gaussian-lobe sensitivities centered around the image border with
/// distinct linear phase ramps, normalized to unit sum-of-squares magnitude
/// at every pixel. Deterministic.
CoilMaps simulate_coilmaps(int grid_size, int n_coils);

/// Measured k-space: per frame a (samples_in_frame x n_coils) matrix whose
/// row order matches the concatenation of the frame's interleaves.
struct MultiCoilKSpace {
  std::vector<CxMatrix> data;
  double noise_sigma = 0.0;  // record of added per-component noise

  int n_frames() const { return static_cast<int>(data.size()); }
  int n_coils() const { return data.empty() ? 0 : static_cast<int>(data[0].cols()); }
};

enum class SamplingMode { full, central };

/// Multichannel non-uniform Fourier sampling of a dynamic series: per frame f
/// and coil c, data = nufft_forward(maps_c .* x_f) at the frame's sample
/// coordinates. Immutable after construction; per-frame calls are independent
/// and thread-safe.
class SamplingOperator {
public:
  SamplingOperator(SpiralAcquisition acquisition, CoilMaps maps, int grid_size,
                   SamplingMode mode = SamplingMode::full, double central_fraction = 1.0);

  MultiCoilKSpace forward(const ImageSeries& x) const;
  ImageSeries adjoint(const MultiCoilKSpace& b) const;

  /// Allocates a zero k-space container shaped for this operator.
  MultiCoilKSpace zero_kspace() const;

  void forward_frame(int frame, const Eigen::Ref<const CxVector>& image, CxMatrix& out) const;
  void adjoint_frame(int frame, const CxMatrix& data, CxVector& image_out) const;

  const SpiralAcquisition& acquisition() const { return acq_; }
  const CoilMaps& coil_maps() const { return maps_; }
  int grid() const { return grid_; }
  int n_frames() const { return acq_.n_frames(); }
  int n_coils() const { return maps_.n_coils(); }
  SamplingMode mode() const { return mode_; }
  double central_fraction() const { return central_fraction_; }
  const Eigen::ArrayX2d& frame_coordinates(int frame) const { return frame_k_[frame]; }

  void require_compatible(const MultiCoilKSpace& b) const;

private:
  SpiralAcquisition acq_;
  CoilMaps maps_;
  int grid_;
  SamplingMode mode_;
  double central_fraction_;
  GriddedFourier nufft_;
  std::vector<Eigen::ArrayX2d> frame_k_;  // per-frame concatenated sample coordinates
};

/// Adds i.i.d. circular complex Gaussian noise (sigma per real component),
/// deterministic per seed; records noise_sigma.
MultiCoilKSpace add_noise(const MultiCoilKSpace& b, double sigma, std::uint64_t seed);

/// Per-component noise sigma that yields the requested measurement SNR
/// ||signal|| / ||noise|| in dB for this data.
double sigma_for_snr_db(const MultiCoilKSpace& b, double snr_db);

/// PCA coil compression: keeps the smallest number of virtual coils whose
/// relative Frobenius approximation error is below max_error, and projects
/// both the data and the maps onto them.
std::pair<MultiCoilKSpace, CoilMaps> compress_coils(const MultiCoilKSpace& b, const CoilMaps& maps,
                                                    double max_error);

/// Keeps only samples with |k| <= central_fraction * 0.5, rescales their
/// coordinates to the low-resolution grid (same field of view), downsamples
/// the coil maps by Fourier truncation, and returns a consistent
/// central-mode operator/data pair.
std::pair<SamplingOperator, MultiCoilKSpace> restrict_central(const SamplingOperator& op,
                                                              const MultiCoilKSpace& b,
                                                              double central_fraction, int low_grid);

/// Removes navigator interleaves (and their data rows) from a binned
/// acquisition. Frame count is unchanged.
std::pair<SamplingOperator, MultiCoilKSpace> drop_navigators(const SamplingOperator& op,
                                                             const MultiCoilKSpace& b);

/// Per-frame navigator sample vectors (all navigator interleaves of the
/// frame, all coils concatenated) for self-gated weight estimation.
std::vector<CxVector> navigator_vectors(const SamplingOperator& op, const MultiCoilKSpace& b);

}  // namespace storm
