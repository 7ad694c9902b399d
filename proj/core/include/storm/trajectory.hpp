#pragma once

#include "storm/types.hpp"

#include <iosfwd>
#include <vector>

namespace storm {

/// One spiral readout arm. Sample coordinates are in cycles/pixel with
/// |k| <= 0.5; |k| is monotonically non-decreasing along the readout and the
/// first sample sits at the k-space origin.
struct SpiralInterleaf {
  Eigen::ArrayX2d samples;  // columns: kx, ky
  double rotation_angle = 0.0;
  bool is_navigator = false;

  int n_samples() const { return static_cast<int>(samples.rows()); }
};

struct FrameRange {
  int begin = 0;  // first interleaf index
  int end = 0;    // one past the last
};

/// An ordered set of interleaves, optionally partitioned into frames.
struct SpiralAcquisition {
  std::vector<SpiralInterleaf> interleaves;
  std::vector<FrameRange> frames;  // empty until bin_frames() is applied
  int samples_per_readout = 0;
  double density_inner = 0.0;   // fraction of Nyquist
  double density_outer = 0.0;
  double inner_extent = 0.0;    // fraction of max |k|

  bool binned() const { return !frames.empty(); }
  int n_interleaves() const { return static_cast<int>(interleaves.size()); }
  int n_frames() const { return static_cast<int>(frames.size()); }
  int frame_sample_count(int frame) const;
  bool has_navigators() const;
};

/// Generates a dual-density spiral: a constant-angular-velocity Archimedean
/// spiral whose radial pitch follows a Fermi (logistic) transition from
/// density_inner x Nyquist to density_outer x Nyquist at radius
/// inner_extent * kmax. The readout starts at the origin and ends at
/// |k| = 0.5.
SpiralInterleaf make_spiral(int samples_per_readout, double density_inner, double density_outer,
                            double inner_extent, int grid_size);

/// Golden-angle schedule over n_interleaves slots. Non-navigator interleaves
/// advance by the golden angle per slot they occupy (navigator slots do not
/// advance the counter, so consecutive data interleaves always differ by one
/// golden angle). If navigator_every = p > 0, every p-th slot (0, p, 2p, ...)
/// carries a navigator: the base spiral at fixed angle 0, flagged.
SpiralAcquisition golden_angle_schedule(const SpiralInterleaf& base, int n_interleaves,
                                        int navigator_every = 0);

/// Partitions interleaves into consecutive groups of spirals_per_frame.
/// A trailing partial group is discarded.
SpiralAcquisition bin_frames(const SpiralAcquisition& acq, int spirals_per_frame);

/// CSV export: interleaf_index, sample_index, kx, ky, is_navigator.
void write_trajectory_csv(std::ostream& os, const SpiralAcquisition& acq);

}  // namespace storm
