#include <doctest.h>

#include <storm/trajectory.hpp>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

using namespace storm;

namespace {

// Radii where an interleaf crosses a fixed azimuth, by linear interpolation
// between consecutive samples.
std::vector<double> ray_crossings(const SpiralInterleaf& il, double azimuth) {
  std::vector<double> out;
  auto angle_of = [](double x, double y) { return std::atan2(y, x); };
  for (int s = 0; s + 1 < il.n_samples(); ++s) {
    const double x0 = il.samples(s, 0), y0 = il.samples(s, 1);
    const double x1 = il.samples(s + 1, 0), y1 = il.samples(s + 1, 1);
    double a0 = angle_of(x0, y0) - azimuth;
    double a1 = angle_of(x1, y1) - azimuth;
    a0 = std::remainder(a0, 2.0 * kPi);
    a1 = std::remainder(a1, 2.0 * kPi);
    if (std::abs(a0) > 0.5 || std::abs(a1) > 0.5) continue;  // far from the ray
    if ((a0 <= 0.0 && a1 > 0.0) || (a0 >= 0.0 && a1 < 0.0)) {
      const double t = std::abs(a0) / (std::abs(a0) + std::abs(a1));
      out.push_back(std::hypot(x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("make_spiral validates parameters") {
  CHECK_THROWS_AS(make_spiral(256, 0.02, 0.2, 0.2, 64), ParamError);  // non-monotone density
  CHECK_THROWS_AS(make_spiral(256, 0.2, 0.02, 0.0, 64), ParamError);
  CHECK_THROWS_AS(make_spiral(1, 0.2, 0.02, 0.2, 64), ParamError);
}

TEST_CASE("spiral starts at the origin and |k| grows monotonically to 0.5") {
  const SpiralInterleaf il = make_spiral(512, 0.2, 0.02, 0.2, 64);
  REQUIRE(il.n_samples() == 512);
  CHECK(std::hypot(il.samples(0, 0), il.samples(0, 1)) == 0.0);
  double prev = 0.0;
  double max_radius = 0.0;
  for (int s = 0; s < il.n_samples(); ++s) {
    const double r = std::hypot(il.samples(s, 0), il.samples(s, 1));
    CHECK(r >= prev - 1e-12);
    CHECK(r <= 0.5 + 1e-12);
    prev = r;
    max_radius = std::max(max_radius, r);
  }
  // Final sample reaches kmax (well within one outer pitch).
  const double outer_pitch = 1.0 / (64 * 0.02);
  CHECK(max_radius > 0.5 - outer_pitch);
  CHECK(max_radius == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("uniform density gives a constant radial pitch") {
  const SpiralInterleaf il = make_spiral(1024, 0.1, 0.1, 0.3, 64);
  // Crossing gaps along a few rays must all equal the pitch 1/(N*d).
  const double pitch = 1.0 / (64 * 0.1);
  for (const double azimuth : {0.3, 1.7, 4.1}) {
    const std::vector<double> r = ray_crossings(il, azimuth);
    REQUIRE(r.size() >= 3);
    for (std::size_t i = 1; i < r.size(); ++i)
      CHECK(r[i] - r[i - 1] == doctest::Approx(pitch).epsilon(0.01));
  }
}

TEST_CASE("dual-density defaults: inner pitch ~5x Nyquist, outer ~50x") {
  // Local pitch scanned directly from the generated coordinates: radial
  // advance per full turn, 2*pi*(dr/dtheta), between successive samples.
  const SpiralInterleaf il = make_spiral(2048, 0.2, 0.02, 0.2, 64);
  const double nyquist = 1.0 / 64;
  std::vector<double> inner_pitch, outer_pitch;
  double theta_prev = 0.0, r_prev = 0.0;
  for (int s = 1; s < il.n_samples(); ++s) {
    const double r = std::hypot(il.samples(s, 0), il.samples(s, 1));
    const double theta = std::atan2(il.samples(s, 1), il.samples(s, 0));
    double dtheta = theta - theta_prev;
    while (dtheta <= 0) dtheta += 2.0 * kPi;
    const double pitch = 2.0 * kPi * (r - r_prev) / dtheta;
    const double mid = 0.5 * (r + r_prev);
    if (mid > 0.01 && mid < 0.065) inner_pitch.push_back(pitch);  // clear of the 0.1 transition
    if (mid > 0.17 && mid < 0.49) outer_pitch.push_back(pitch);
    theta_prev = theta;
    r_prev = r;
  }
  REQUIRE(!inner_pitch.empty());
  REQUIRE(!outer_pitch.empty());
  for (double p : inner_pitch) CHECK(p / nyquist == doctest::Approx(5.0).epsilon(0.10));
  for (double p : outer_pitch) CHECK(p / nyquist == doctest::Approx(50.0).epsilon(0.15));
}

TEST_CASE("golden angle schedule") {
  const SpiralInterleaf base = make_spiral(64, 0.2, 0.02, 0.2, 32);

  SUBCASE("single interleaf sits at angle 0") {
    const SpiralAcquisition acq = golden_angle_schedule(base, 1);
    REQUIRE(acq.n_interleaves() == 1);
    CHECK(acq.interleaves[0].rotation_angle == 0.0);
    CHECK(!acq.interleaves[0].is_navigator);
  }

  SUBCASE("angles advance by pi*(3-sqrt(5)) mod 2pi") {
    const SpiralAcquisition acq = golden_angle_schedule(base, 3);
    const double gamma = kPi * (3.0 - std::sqrt(5.0));
    CHECK(acq.interleaves[0].rotation_angle == doctest::Approx(0.0));
    CHECK(acq.interleaves[1].rotation_angle == doctest::Approx(std::fmod(gamma, 2 * kPi)));
    CHECK(acq.interleaves[2].rotation_angle == doctest::Approx(std::fmod(2 * gamma, 2 * kPi)));
  }

  SUBCASE("navigator_every=10 over 30 slots gives 3 identical navigators") {
    const SpiralAcquisition acq = golden_angle_schedule(base, 30, 10);
    int navs = 0;
    for (const auto& il : acq.interleaves)
      if (il.is_navigator) ++navs;
    CHECK(navs == 3);
    CHECK(acq.interleaves[0].is_navigator);
    CHECK(acq.interleaves[10].is_navigator);
    CHECK(acq.interleaves[20].is_navigator);
    CHECK((acq.interleaves[0].samples == acq.interleaves[10].samples).all());
    CHECK((acq.interleaves[0].samples == acq.interleaves[20].samples).all());

    // Consecutive non-navigators still differ by exactly one golden angle.
    const double gamma = kPi * (3.0 - std::sqrt(5.0));
    double prev = -1.0;
    for (const auto& il : acq.interleaves) {
      if (il.is_navigator) continue;
      if (prev >= 0.0) {
        const double diff = std::remainder(il.rotation_angle - prev - gamma, 2 * kPi);
        CHECK(std::abs(diff) < 1e-12);
      }
      prev = il.rotation_angle;
    }
  }

  SUBCASE("rotation never changes the radius profile") {
    const SpiralAcquisition acq = golden_angle_schedule(base, 7);
    const Eigen::ArrayXd r0 =
        (base.samples.col(0).square() + base.samples.col(1).square()).sqrt();
    for (const auto& il : acq.interleaves) {
      const Eigen::ArrayXd r =
          (il.samples.col(0).square() + il.samples.col(1).square()).sqrt();
      CHECK(((r - r0).abs().maxCoeff()) < 1e-12);
    }
  }
}

TEST_CASE("bin_frames") {
  const SpiralInterleaf base = make_spiral(16, 0.2, 0.02, 0.2, 32);

  SUBCASE("1000 interleaves at 5 per frame give 200 frames") {
    const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 1000), 5);
    CHECK(acq.n_frames() == 200);
  }

  SUBCASE("7 interleaves at 5 per frame: one frame, trailing two discarded") {
    const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 7), 5);
    CHECK(acq.n_frames() == 1);
    CHECK(acq.n_interleaves() == 5);
  }

  SUBCASE("frame ranges partition the interleaves with no gaps or duplicates") {
    const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 103, 10), 5);
    std::set<int> seen;
    int expected_next = 0;
    for (const FrameRange& fr : acq.frames) {
      CHECK(fr.begin == expected_next);
      for (int m = fr.begin; m < fr.end; ++m) CHECK(seen.insert(m).second);
      expected_next = fr.end;
    }
    CHECK(expected_next == acq.n_interleaves());
    CHECK(acq.n_interleaves() == (103 / 5) * 5);
  }

  SUBCASE("spirals_per_frame larger than the schedule throws") {
    CHECK_THROWS_AS(bin_frames(golden_angle_schedule(base, 3), 5), ParamError);
  }
}

TEST_CASE("central disk is near Nyquist-sampled over 5 golden-angle interleaves") {
  const SpiralInterleaf base = make_spiral(512, 0.2, 0.02, 0.2, 64);
  const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 5), 5);

  // Gather the frame's samples.
  std::vector<std::pair<double, double>> pts;
  for (const auto& il : acq.interleaves)
    for (int s = 0; s < il.n_samples(); ++s) pts.emplace_back(il.samples(s, 0), il.samples(s, 1));

  // Worst-case nearest-neighbor gap over a probe lattice inside the disk.
  const double disk = 0.2 * 0.5;
  double worst = 0.0;
  for (double y = -disk; y <= disk; y += disk / 24) {
    for (double x = -disk; x <= disk; x += disk / 24) {
      if (std::hypot(x, y) > disk) continue;
      double best = 1e300;
      for (const auto& [px, py] : pts) best = std::min(best, std::hypot(px - x, py - y));
      worst = std::max(worst, best);
    }
  }
  CHECK(worst <= 1.25 / 64);
}

TEST_CASE("outer-region acceleration is ~8x for 5 interleaves") {
  const SpiralInterleaf base = make_spiral(2048, 0.2, 0.02, 0.2, 64);
  const SpiralAcquisition acq = golden_angle_schedule(base, 5);

  std::vector<double> gaps;
  for (int a = 0; a < 180; ++a) {
    const double azimuth = 2.0 * kPi * a / 180.0;
    std::vector<double> crossings;
    for (const auto& il : acq.interleaves)
      for (double r : ray_crossings(il, azimuth))
        if (r > 0.15) crossings.push_back(r);
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t i = 1; i < crossings.size(); ++i)
      gaps.push_back(crossings[i] - crossings[i - 1]);
  }
  REQUIRE(!gaps.empty());
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / double(gaps.size());
  const double ratio = mean / (1.0 / 64);
  CHECK(ratio >= 6.0);
  CHECK(ratio <= 10.0);
}

TEST_CASE("CSV export schema") {
  const SpiralInterleaf base = make_spiral(4, 0.2, 0.02, 0.2, 32);
  const SpiralAcquisition acq = golden_angle_schedule(base, 2);
  std::ostringstream os;
  write_trajectory_csv(os, acq);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "interleaf_index,sample_index,kx,ky,is_navigator");
  int lines = 0;
  std::string line;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 8);
}

}  // TEST_SUITE
