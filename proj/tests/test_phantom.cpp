#include <doctest.h>

#include <storm/phantom.hpp>

#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace storm;

namespace {

PhantomSpec small_spec() {
  PhantomSpec spec;
  spec.grid_size = 48;
  spec.n_frames = 100;
  spec.cardiac_period_frames = 11.3;
  spec.respiratory_period_frames = 37.0;
  spec.respiratory_amplitude = 1.7;
  spec.contraction_fraction = 0.35;
  spec.heart_rate_jitter = 0.04;
  spec.seed = 7;
  return spec;
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("invalid specs name the violated invariant") {
  PhantomSpec spec = small_spec();
  spec.cardiac_period_frames = spec.respiratory_period_frames;
  CHECK_THROWS_WITH_AS(generate_phantom(spec), doctest::Contains("separable"), ParamError);

  spec = small_spec();
  spec.respiratory_amplitude = spec.grid_size / 8.0;
  CHECK_THROWS_WITH_AS(generate_phantom(spec), doctest::Contains("field of view"), ParamError);
}

TEST_CASE("determinism and self-consistency") {
  const PhantomSpec spec = small_spec();
  const GroundTruthSeries a = generate_phantom(spec);
  const GroundTruthSeries b = generate_phantom(spec);
  CHECK(a.frames.casorati == b.frames.casorati);
  CHECK(a.cardiac_phase == b.cardiac_phase);

  // Regenerating a frame from its stored phases reproduces it bit-exactly.
  CxVector frame(a.frames.n_pixels());
  for (int i : {0, 13, 99}) {
    render_phantom_frame(spec, a.cardiac_phase[i], a.respiratory_phase[i], frame);
    CHECK(frame == a.frames.casorati.col(i));
  }
}

TEST_CASE("intensities stay in [0,1] and imaginary parts are zero") {
  const GroundTruthSeries gt = generate_phantom(small_spec());
  CHECK(gt.frames.casorati.imag().maxCoeff() == 0.0);
  CHECK(gt.frames.casorati.real().minCoeff() >= 0.0);
  CHECK(gt.frames.casorati.real().maxCoeff() <= 1.0);
}

TEST_CASE("no motion sources: frames with equal cardiac phase are bit-identical") {
  PhantomSpec spec = small_spec();
  spec.respiratory_amplitude = 0.0;
  spec.heart_rate_jitter = 0.0;
  spec.cardiac_period_frames = 20.0;  // integer period: phase i and i+20 match exactly
  spec.n_frames = 60;
  const GroundTruthSeries gt = generate_phantom(spec);
  for (int i = 0; i + 20 < spec.n_frames; ++i) {
    REQUIRE(gt.cardiac_phase[i] == doctest::Approx(gt.cardiac_phase[i + 20]).epsilon(1e-15));
    CHECK(gt.frames.casorati.col(i) == gt.frames.casorati.col(i + 20));
  }
}

TEST_CASE("no cardiac deformation and no respiration: static phantom") {
  PhantomSpec spec = small_spec();
  spec.contraction_fraction = 0.0;
  spec.respiratory_amplitude = 0.0;
  const GroundTruthSeries gt = generate_phantom(spec);
  for (int i = 1; i < gt.frames.n_frames(); ++i)
    CHECK(gt.frames.casorati.col(i) == gt.frames.casorati.col(0));
}

TEST_CASE("zero jitter gives an exact arithmetic phase progression mod 1") {
  PhantomSpec spec = small_spec();
  spec.heart_rate_jitter = 0.0;
  const GroundTruthSeries gt = generate_phantom(spec);
  for (int i = 0; i < spec.n_frames; ++i) {
    const double expected = i / spec.cardiac_period_frames;
    const double wrapped = expected - std::floor(expected);
    CHECK(gt.cardiac_phase[i] == doctest::Approx(wrapped).epsilon(1e-10));
  }
}

TEST_CASE("frame-difference energy spectrum peaks at the cardiac and respiratory rates") {
  PhantomSpec spec;
  spec.grid_size = 64;
  spec.n_frames = 200;
  spec.cardiac_period_frames = 20.3;
  spec.respiratory_period_frames = 75.0;
  spec.respiratory_amplitude = 2.4;
  spec.contraction_fraction = 0.35;
  spec.heart_rate_jitter = 0.0;
  spec.seed = 3;
  const GroundTruthSeries gt = generate_phantom(spec);

  const int ne = spec.n_frames - 1;
  std::vector<double> energy(ne);
  for (int i = 0; i < ne; ++i)
    energy[i] = (gt.frames.casorati.col(i + 1) - gt.frames.casorati.col(i)).squaredNorm();
  const double mean = std::accumulate(energy.begin(), energy.end(), 0.0) / ne;

  // Zero-padded DFT magnitude of the mean-removed energy signal.
  const int nfft = 4096;
  auto magnitude = [&](double freq) {
    Complex acc(0, 0);
    for (int i = 0; i < ne; ++i)
      acc += (energy[i] - mean) * std::polar(1.0, -2.0 * kPi * freq * i);
    return std::abs(acc);
  };
  std::vector<double> spectrum(nfft / 2);
  for (int b = 1; b < nfft / 2; ++b) spectrum[b] = magnitude(double(b) / nfft);

  // A peak within 10% of each expected frequency must dominate the median level.
  std::vector<double> sorted(spectrum.begin() + 1, spectrum.end());
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];

  for (const double period : {20.3, 75.0}) {
    const double f0 = 1.0 / period;
    double peak = 0.0;
    for (int b = 1; b < nfft / 2; ++b) {
      const double f = double(b) / nfft;
      if (f >= 0.9 * f0 && f <= 1.1 * f0) peak = std::max(peak, spectrum[b]);
    }
    INFO("period ", period);
    CHECK(peak > 3.0 * median);
  }
}

TEST_CASE("phase_distance basics") {
  const GroundTruthSeries gt = generate_phantom(small_spec());
  CHECK(phase_distance(gt, 5, 5) == 0.0);
  CHECK_THROWS_AS(phase_distance(gt, 0, gt.frames.n_frames()), ParamError);

  GroundTruthSeries synthetic = gt;
  synthetic.cardiac_phase[0] = 0.1;
  synthetic.cardiac_phase[1] = 0.9;
  synthetic.respiratory_phase[0] = 0.4;
  synthetic.respiratory_phase[1] = 0.4;
  CHECK(phase_distance(synthetic, 0, 1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("phase distance correlates with image distance over random pairs") {
  const GroundTruthSeries gt = generate_phantom(small_spec());
  std::mt19937_64 gen(99);
  std::vector<double> dp, di;
  for (int trial = 0; trial < 400; ++trial) {
    const int i = int(gen() % gt.frames.n_frames());
    const int j = int(gen() % gt.frames.n_frames());
    if (i == j) continue;
    dp.push_back(phase_distance(gt, i, j));
    di.push_back((gt.frames.casorati.col(i) - gt.frames.casorati.col(j)).norm());
  }
  CHECK(storm::test::spearman(dp, di) > 0.8);
}

}  // TEST_SUITE
