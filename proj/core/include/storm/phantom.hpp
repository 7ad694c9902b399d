#pragma once

#include "storm/types.hpp"

namespace storm {

/// Parameters of the analytic free-breathing, ungated cardiac phantom.
/// Two quasi-periodic motions drive the scene: cardiac contraction of the
/// ventricle ellipses and a vertical respiratory translation of the heart
/// and liver. A per-frame jitter on the cardiac phase increment models a
/// varying heart rate.
struct PhantomSpec {
  int grid_size = 64;
  int n_frames = 200;
  double cardiac_period_frames = 20.3;
  double respiratory_period_frames = 75.0;
  double respiratory_amplitude = 2.4;  // pixels
  double contraction_fraction = 0.35;  // in (0,1)
  double heart_rate_jitter = 0.05;     // >= 0, std of relative rate perturbation
  std::uint64_t seed = 1234;

  /// Throws ParamError naming the violated invariant.
  void validate() const;
};

struct GroundTruthSeries {
  ImageSeries frames;           // real-valued intensities in [0,1], zero imaginary part
  RealVector cardiac_phase;     // per frame, in [0,1)
  RealVector respiratory_phase; // per frame, in [0,1)
};

/// Renders the scene for a single (cardiac, respiratory) phase pair into a
/// grid*grid row-major pixel vector. Pure function; generate_phantom() calls
/// this per frame, so regenerating a frame from its stored phases is
/// bit-exact.
void render_phantom_frame(const PhantomSpec& spec, double cardiac_phase, double respiratory_phase,
                          Eigen::Ref<CxVector> out);

/// Deterministic phantom generation; identical spec (including seed) yields a
/// bit-identical series.
GroundTruthSeries generate_phantom(const PhantomSpec& spec);

/// Combined wrap-around (circle metric) distance of the cardiac and
/// respiratory phases of frames i and j. Zero iff both phases match exactly.
double phase_distance(const GroundTruthSeries& gt, int i, int j);

}  // namespace storm
