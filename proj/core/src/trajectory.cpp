#include "storm/trajectory.hpp"

#include <cmath>
#include <ostream>

namespace storm {
namespace {

constexpr double kMaxRadius = 0.5;  // cycles/pixel

// Sampling density as a fraction of Nyquist at k-space radius r: a Fermi
// (logistic) step from density_inner down to density_outer centered at the
// transition radius, with width a quarter of that radius.
struct FermiDensity {
  double inner, outer, transition, width;

  double operator()(double r) const {
    if (width <= 0.0) return outer;
    return outer + (inner - outer) / (1.0 + std::exp((r - transition) / width));
  }
};

}  // namespace

int SpiralAcquisition::frame_sample_count(int frame) const {
  const FrameRange& fr = frames.at(frame);
  int count = 0;
  for (int m = fr.begin; m < fr.end; ++m) count += interleaves[m].n_samples();
  return count;
}

bool SpiralAcquisition::has_navigators() const {
  for (const SpiralInterleaf& il : interleaves)
    if (il.is_navigator) return true;
  return false;
}

SpiralInterleaf make_spiral(int samples_per_readout, double density_inner, double density_outer,
                            double inner_extent, int grid_size) {
  if (samples_per_readout < 2) throw ParamError("make_spiral: need at least 2 samples per readout");
  if (!(density_outer > 0.0) || !(density_inner >= density_outer))
    throw ParamError("make_spiral: densities must satisfy 0 < density_outer <= density_inner");
  if (!(inner_extent > 0.0 && inner_extent < 1.0))
    throw ParamError("make_spiral: inner_extent must be in (0,1)");
  if (grid_size < 2) throw ParamError("make_spiral: grid_size must be at least 2");

  const FermiDensity density{density_inner, density_outer, inner_extent * kMaxRadius,
                             0.125 * inner_extent * kMaxRadius};

  // One full turn advances the radius by the local pitch 1/(N*density),
  // so dtheta/dr = 2*pi*N*density(r). Total angle by composite Simpson.
  const double n = grid_size;
  const int quad = 8192;
  const double h = kMaxRadius / quad;
  double total_angle = 0.0;
  for (int i = 0; i < quad; ++i) {
    const double a = i * h;
    total_angle += h / 6.0 * (density(a) + 4.0 * density(a + 0.5 * h) + density(a + h));
  }
  total_angle *= 2.0 * kPi * n;

  // Constant angular velocity: equal angle steps per sample; integrate
  // dr/dtheta = 1/(2*pi*N*density(r)) with RK4 substeps between samples.
  const int ns = samples_per_readout;
  const double dtheta = total_angle / (ns - 1);
  constexpr int kSubsteps = 16;
  const double hs = dtheta / kSubsteps;

  SpiralInterleaf il;
  il.samples.resize(ns, 2);
  double r = 0.0;
  double theta = 0.0;
  auto slope = [&](double radius) { return 1.0 / (2.0 * kPi * n * density(radius)); };
  for (int s = 0; s < ns; ++s) {
    const double rc = std::min(r, kMaxRadius);
    il.samples(s, 0) = rc * std::cos(theta);
    il.samples(s, 1) = rc * std::sin(theta);
    for (int sub = 0; sub < kSubsteps; ++sub) {
      const double k1 = slope(r);
      const double k2 = slope(r + 0.5 * hs * k1);
      const double k3 = slope(r + 0.5 * hs * k2);
      const double k4 = slope(r + hs * k3);
      r += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    theta += dtheta;
  }
  return il;
}

SpiralAcquisition golden_angle_schedule(const SpiralInterleaf& base, int n_interleaves,
                                        int navigator_every) {
  if (n_interleaves < 1) throw ParamError("golden_angle_schedule: n_interleaves must be >= 1");
  if (navigator_every < 0) throw ParamError("golden_angle_schedule: navigator_every must be >= 0");

  SpiralAcquisition acq;
  acq.samples_per_readout = base.n_samples();
  acq.interleaves.reserve(n_interleaves);

  int data_counter = 0;
  for (int slot = 0; slot < n_interleaves; ++slot) {
    SpiralInterleaf il;
    if (navigator_every > 0 && slot % navigator_every == 0) {
      il.samples = base.samples;
      il.rotation_angle = 0.0;
      il.is_navigator = true;
    } else {
      const double angle = std::fmod(data_counter * kGoldenAngle, 2.0 * kPi);
      const double c = std::cos(angle), s = std::sin(angle);
      il.samples.resize(base.samples.rows(), 2);
      il.samples.col(0) = c * base.samples.col(0) - s * base.samples.col(1);
      il.samples.col(1) = s * base.samples.col(0) + c * base.samples.col(1);
      il.rotation_angle = angle;
      il.is_navigator = false;
      ++data_counter;
    }
    acq.interleaves.push_back(std::move(il));
  }
  return acq;
}

SpiralAcquisition bin_frames(const SpiralAcquisition& acq, int spirals_per_frame) {
  if (spirals_per_frame < 1) throw ParamError("bin_frames: spirals_per_frame must be >= 1");
  const int total = acq.n_interleaves();
  if (spirals_per_frame > total)
    throw ParamError("bin_frames: spirals_per_frame exceeds the number of interleaves");

  const int n_frames = total / spirals_per_frame;
  SpiralAcquisition out = acq;
  out.interleaves.resize(std::size_t(n_frames) * spirals_per_frame);  // discard trailing partial group
  out.frames.clear();
  out.frames.reserve(n_frames);
  for (int f = 0; f < n_frames; ++f)
    out.frames.push_back({f * spirals_per_frame, (f + 1) * spirals_per_frame});
  return out;
}

void write_trajectory_csv(std::ostream& os, const SpiralAcquisition& acq) {
  os << "interleaf_index,sample_index,kx,ky,is_navigator\n";
  for (int m = 0; m < acq.n_interleaves(); ++m) {
    const SpiralInterleaf& il = acq.interleaves[m];
    for (int s = 0; s < il.n_samples(); ++s)
      os << m << ',' << s << ',' << il.samples(s, 0) << ',' << il.samples(s, 1) << ','
         << (il.is_navigator ? 1 : 0) << '\n';
  }
}

}  // namespace storm
