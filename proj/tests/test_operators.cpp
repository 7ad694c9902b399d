#include <doctest.h>

#include <storm/operators.hpp>
#include <storm/trajectory.hpp>

#include "support/oracles.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace storm;

namespace {

Eigen::ArrayX2d random_kpoints(int n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  Eigen::ArrayX2d k(n, 2);
  for (int i = 0; i < n; ++i) {
    k(i, 0) = uni(gen);
    k(i, 1) = uni(gen);
  }
  return k;
}

CxVector random_image(int grid, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CxVector x(std::int64_t(grid) * grid);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = Complex(normal(gen), normal(gen));
  return x;
}

// A binned acquisition whose "interleaves" are arbitrary k-point lists; used
// to build small operators without a full spiral.
SpiralAcquisition synthetic_acquisition(const std::vector<Eigen::ArrayX2d>& frames_points) {
  SpiralAcquisition acq;
  for (std::size_t f = 0; f < frames_points.size(); ++f) {
    SpiralInterleaf il;
    il.samples = frames_points[f];
    acq.interleaves.push_back(std::move(il));
    acq.frames.push_back({int(f), int(f) + 1});
  }
  acq.samples_per_readout = int(frames_points[0].rows());
  return acq;
}

CoilMaps uniform_single_coil(int grid) {
  CoilMaps cm;
  cm.grid = grid;
  cm.maps = CxMatrix::Ones(std::int64_t(grid) * grid, 1);
  return cm;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("simulated coil maps: positive sum-of-squares and full rank") {
  const CoilMaps cm = simulate_coilmaps(64, 8);
  for (Eigen::Index p = 0; p < cm.maps.rows(); ++p)
    CHECK(cm.maps.row(p).norm() == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::JacobiSVD<CxMatrix> svd(cm.maps);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++rank;
  CHECK(rank == 8);
}

TEST_CASE("single uniform coil reduces forward to the plain non-uniform transform") {
  std::mt19937_64 gen(11);
  const int grid = 8;
  const Eigen::ArrayX2d k = random_kpoints(17, gen);
  SamplingOperator op(synthetic_acquisition({k}), uniform_single_coil(grid), grid);

  ImageSeries x(grid, 1);
  x.casorati.col(0) = random_image(grid, gen);
  const MultiCoilKSpace b = op.forward(x);
  const CxVector oracle = storm::test::direct_forward(x.casorati.col(0), grid, k);
  CHECK((b.data[0].col(0) - oracle).norm() / oracle.norm() < 1e-10);
}

TEST_CASE("impulse image gives pure phase ramps") {
  const int grid = 16;
  std::mt19937_64 gen(5);
  const Eigen::ArrayX2d k = random_kpoints(33, gen);
  SamplingOperator op(synthetic_acquisition({k}), uniform_single_coil(grid), grid);

  const int r0 = 11, c0 = 4;
  ImageSeries x(grid, 1);
  x.at(0, r0, c0) = Complex(1.0, 0.0);
  const MultiCoilKSpace b = op.forward(x);
  for (Eigen::Index s = 0; s < k.rows(); ++s) {
    const double phase = -2.0 * kPi * (k(s, 0) * (r0 - grid / 2) + k(s, 1) * (c0 - grid / 2));
    CHECK(std::abs(b.data[0].col(0)[s] - std::polar(1.0, phase)) < 1e-9);
  }
}

TEST_CASE("zero image maps to zero k-space and back") {
  const int grid = 8;
  std::mt19937_64 gen(3);
  SamplingOperator op(synthetic_acquisition({random_kpoints(10, gen)}), simulate_coilmaps(grid, 2),
                      grid);
  const MultiCoilKSpace b = op.forward(ImageSeries(grid, 1));
  CHECK(b.data[0].norm() == 0.0);
  const ImageSeries x = op.adjoint(op.zero_kspace());
  CHECK(x.casorati.norm() == 0.0);
}

TEST_CASE("forward matches the direct multicoil oracle on random instances") {
  std::mt19937_64 gen(17);
  const int grid = 8;
  const Eigen::ArrayX2d k = random_kpoints(17, gen);
  const CoilMaps maps = simulate_coilmaps(grid, 2);
  SamplingOperator op(synthetic_acquisition({k}), maps, grid);

  ImageSeries x(grid, 1);
  x.casorati.col(0) = random_image(grid, gen);
  const MultiCoilKSpace b = op.forward(x);
  const CxMatrix oracle = storm::test::direct_forward_multicoil(x.casorati.col(0), maps, k);
  CHECK((b.data[0] - oracle).norm() / oracle.norm() < 1e-10);
}

TEST_CASE("linearity to round-off") {
  std::mt19937_64 gen(23);
  const int grid = 12;
  const Eigen::ArrayX2d k = random_kpoints(40, gen);
  SamplingOperator op(synthetic_acquisition({k}), simulate_coilmaps(grid, 3), grid);

  ImageSeries x(grid, 1), y(grid, 1), mix(grid, 1);
  x.casorati.col(0) = random_image(grid, gen);
  y.casorati.col(0) = random_image(grid, gen);
  const Complex alpha(0.7, -1.3), beta(-0.2, 0.45);
  mix.casorati = alpha * x.casorati + beta * y.casorati;

  const MultiCoilKSpace bx = op.forward(x), by = op.forward(y), bmix = op.forward(mix);
  const CxMatrix expected = alpha * bx.data[0] + beta * by.data[0];
  CHECK((bmix.data[0] - expected).norm() / expected.norm() < 1e-10);
}

TEST_CASE("randomized adjoint identity over 20 trials") {
  std::mt19937_64 gen(31);
  const int grid = 16;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::ArrayX2d> pts;
    for (int f = 0; f < 3; ++f) pts.push_back(random_kpoints(25 + int(gen() % 20), gen));
    SamplingOperator op(synthetic_acquisition(pts), simulate_coilmaps(grid, 2), grid);

    ImageSeries x(grid, 3);
    for (int f = 0; f < 3; ++f) x.casorati.col(f) = random_image(grid, gen);
    MultiCoilKSpace y = op.zero_kspace();
    for (int f = 0; f < 3; ++f)
      for (int c = 0; c < 2; ++c)
        for (Eigen::Index s = 0; s < y.data[f].rows(); ++s)
          y.data[f](s, c) = Complex(std::normal_distribution<double>()(gen),
                                    std::normal_distribution<double>()(gen));

    const MultiCoilKSpace ax = op.forward(x);
    const ImageSeries aty = op.adjoint(y);
    Complex lhs(0, 0), rhs(0, 0);
    for (int f = 0; f < 3; ++f) lhs += (ax.data[f].conjugate().cwiseProduct(y.data[f])).sum();
    rhs = (x.casorati.conjugate().cwiseProduct(aty.casorati)).sum();
    const double scale = x.casorati.norm() * std::sqrt(double(3 * 2 * 40));
    CHECK(std::abs(lhs - rhs) / scale < 1e-6);
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
  }
}

TEST_CASE("frame independence: perturbing one frame leaves others bit-identical") {
  std::mt19937_64 gen(41);
  const int grid = 8;
  std::vector<Eigen::ArrayX2d> pts{random_kpoints(12, gen), random_kpoints(12, gen),
                                   random_kpoints(12, gen)};
  SamplingOperator op(synthetic_acquisition(pts), simulate_coilmaps(grid, 2), grid);

  ImageSeries x(grid, 3);
  for (int f = 0; f < 3; ++f) x.casorati.col(f) = random_image(grid, gen);
  const MultiCoilKSpace b0 = op.forward(x);
  x.casorati.col(1) += random_image(grid, gen);
  const MultiCoilKSpace b1 = op.forward(x);
  CHECK(b0.data[0] == b1.data[0]);
  CHECK(b0.data[2] == b1.data[2]);
  CHECK(b0.data[1] != b1.data[1]);
}

TEST_CASE("DC atom: single origin sample spreads a constant image") {
  const int grid = 8;
  Eigen::ArrayX2d k(1, 2);
  k.setZero();
  SamplingOperator op(synthetic_acquisition({k}), uniform_single_coil(grid), grid);
  MultiCoilKSpace b = op.zero_kspace();
  b.data[0](0, 0) = Complex(1.0, 0.0);
  const ImageSeries x = op.adjoint(b);
  const Complex mean = x.casorati.col(0).mean();
  CHECK((x.casorati.col(0).array() - mean).matrix().norm() < 1e-9 * x.casorati.norm());
}

TEST_CASE("add_noise") {
  std::mt19937_64 gen(51);
  const int grid = 8;
  SamplingOperator op(synthetic_acquisition({random_kpoints(60, gen)}), simulate_coilmaps(grid, 2),
                      grid);
  ImageSeries x(grid, 1);
  x.casorati.col(0) = random_image(grid, gen);
  const MultiCoilKSpace clean = op.forward(x);

  SUBCASE("sigma 0 is bit-identical") {
    const MultiCoilKSpace same = add_noise(clean, 0.0, 7);
    CHECK(same.data[0] == clean.data[0]);
  }

  SUBCASE("identical seeds give identical noise") {
    const MultiCoilKSpace a = add_noise(clean, 0.01, 7);
    const MultiCoilKSpace b = add_noise(clean, 0.01, 7);
    const MultiCoilKSpace c = add_noise(clean, 0.01, 8);
    CHECK(a.data[0] == b.data[0]);
    CHECK(a.data[0] != c.data[0]);
    CHECK(a.noise_sigma == 0.01);
  }

  SUBCASE("sample variance of the added noise is 2 sigma^2") {
    // One long pseudo-frame with >= 1e5 samples.
    Eigen::ArrayX2d k = random_kpoints(100000, gen);
    SamplingOperator big(synthetic_acquisition({k}), uniform_single_coil(4), 4);
    MultiCoilKSpace zero = big.zero_kspace();
    const double sigma = 0.01;
    const MultiCoilKSpace noisy = add_noise(zero, sigma, 1234);
    const double var = noisy.data[0].squaredNorm() / double(noisy.data[0].size());
    CHECK(var == doctest::Approx(2 * sigma * sigma).epsilon(0.05));
  }
}

TEST_CASE("sigma_for_snr_db hits the requested ratio") {
  std::mt19937_64 gen(61);
  const int grid = 16;
  SamplingOperator op(synthetic_acquisition({random_kpoints(3000, gen)}),
                      simulate_coilmaps(grid, 4), grid);
  ImageSeries x(grid, 1);
  x.casorati.col(0) = random_image(grid, gen);
  const MultiCoilKSpace clean = op.forward(x);
  const double sigma = sigma_for_snr_db(clean, 30.0);
  const MultiCoilKSpace noisy = add_noise(clean, sigma, 5);
  double signal = 0, noise = 0;
  for (int f = 0; f < 1; ++f) {
    signal += clean.data[f].squaredNorm();
    noise += (noisy.data[f] - clean.data[f]).squaredNorm();
  }
  const double snr = 10.0 * std::log10(signal / noise);
  CHECK(snr == doctest::Approx(30.0).epsilon(0.01));
}

TEST_CASE("coil compression") {
  std::mt19937_64 gen(71);
  const int grid = 16;

  SUBCASE("duplicated coils collapse to one virtual coil") {
    CoilMaps cm;
    cm.grid = grid;
    CxVector map = CxVector::Ones(grid * grid);
    cm.maps.resize(grid * grid, 4);
    for (int c = 0; c < 4; ++c) cm.maps.col(c) = map;
    SamplingOperator op(synthetic_acquisition({random_kpoints(50, gen)}), cm, grid);
    ImageSeries x(grid, 1);
    x.casorati.col(0) = random_image(grid, gen);
    const MultiCoilKSpace b = op.forward(x);
    auto [bc, vmaps] = compress_coils(b, cm, 0.05);
    CHECK(vmaps.n_coils() == 1);
    CHECK(bc.n_coils() == 1);
  }

  SUBCASE("projection error stays below the budget and maps stay consistent") {
    const CoilMaps maps = simulate_coilmaps(grid, 8);
    SamplingOperator op(synthetic_acquisition({random_kpoints(400, gen)}), maps, grid);
    ImageSeries x(grid, 1);
    x.casorati.col(0) = random_image(grid, gen);
    const MultiCoilKSpace b = op.forward(x);
    const double budget = 0.2;  // force an actual truncation
    auto [bc, vmaps] = compress_coils(b, maps, budget);
    REQUIRE(vmaps.n_coils() < 8);

    // Recomputed Frobenius error of representing the data in the kept basis.
    SamplingOperator vop(op.acquisition(), vmaps, grid);
    const MultiCoilKSpace bv = vop.forward(x);
    CHECK((bv.data[0] - bc.data[0]).norm() / bc.data[0].norm() < 1e-9);
  }

  SUBCASE("all-zero data throws") {
    const CoilMaps maps = simulate_coilmaps(grid, 3);
    SamplingOperator op(synthetic_acquisition({random_kpoints(10, gen)}), maps, grid);
    CHECK_THROWS_AS(compress_coils(op.zero_kspace(), maps, 0.05), DataError);
  }
}

TEST_CASE("restrict_central") {
  std::mt19937_64 gen(81);
  const int grid = 32;
  const SpiralInterleaf base = make_spiral(128, 0.2, 0.02, 0.2, grid);
  const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 10), 5);
  const CoilMaps maps = simulate_coilmaps(grid, 3);
  SamplingOperator op(acq, maps, grid);
  ImageSeries x(grid, 2);
  x.casorati.col(0) = random_image(grid, gen);
  x.casorati.col(1) = random_image(grid, gen);
  const MultiCoilKSpace b = op.forward(x);

  SUBCASE("identity restriction keeps every sample") {
    auto [opc, bc] = restrict_central(op, b, 1.0, grid);
    for (int f = 0; f < 2; ++f) CHECK(bc.data[f].rows() == b.data[f].rows());
  }

  SUBCASE("retained count matches a brute-force coordinate scan") {
    auto [opc, bc] = restrict_central(op, b, 0.2, 8);
    std::int64_t expected = 0;
    for (const auto& il : acq.interleaves)
      for (Eigen::Index s = 0; s < il.samples.rows(); ++s)
        if (std::hypot(il.samples(s, 0), il.samples(s, 1)) <= 0.1) ++expected;
    std::int64_t kept = 0;
    for (int f = 0; f < 2; ++f) kept += bc.data[f].rows();
    CHECK(kept == expected);
    // Dual-density: the dense inner 20% holds well over half the samples.
    std::int64_t total = 0;
    for (int f = 0; f < 2; ++f) total += b.data[f].rows();
    CHECK(double(kept) / double(total) > 0.5);
    // Rescaled coordinates stay inside the low grid's Nyquist box.
    for (int f = 0; f < 2; ++f) {
      const auto& k = opc.frame_coordinates(f);
      CHECK((k.abs() <= 0.5 + 1e-12).all());
    }
  }

  SUBCASE("restricted forward reproduces the retained data on band-limited objects") {
    // On lattice frequencies with a uniform coil and an object band-limited
    // to the low grid, the central-mode operator applied to the subsampled
    // object matches the retained measurements up to the (grid/low)^2
    // sample-count factor.
    const int low = 8;
    Eigen::ArrayX2d lattice(49, 2);
    int idx = 0;
    for (int q1 = -3; q1 <= 3; ++q1)
      for (int q2 = -3; q2 <= 3; ++q2) {
        lattice(idx, 0) = double(q1) / grid;
        lattice(idx, 1) = double(q2) / grid;
        ++idx;
      }
    SamplingOperator uop(synthetic_acquisition({lattice, lattice}), uniform_single_coil(grid),
                         grid);
    ImageSeries smooth(grid, 2);
    for (int f = 0; f < 2; ++f) {
      CxMatrix spec = CxMatrix::Zero(grid, grid);
      for (int r = grid / 2 - 2; r <= grid / 2 + 2; ++r)
        for (int c = grid / 2 - 2; c <= grid / 2 + 2; ++c)
          spec(r, c) = Complex(std::normal_distribution<double>()(gen),
                               std::normal_distribution<double>()(gen));
      CxMatrix img_t = centered_ifft2(spec).transpose();
      smooth.casorati.col(f) = Eigen::Map<CxVector>(img_t.data(), grid * grid);
    }
    const MultiCoilKSpace bs = uop.forward(smooth);
    auto [opc, bc] = restrict_central(uop, bs, 0.25, low);
    REQUIRE(bc.data[0].rows() == 45);  // the four 7x7 block corners sit outside the disk

    // Subsample the object (every (grid/low)-th pixel, shared center).
    const int step = grid / low;
    ImageSeries small(low, 2);
    for (int f = 0; f < 2; ++f)
      for (int r = 0; r < low; ++r)
        for (int c = 0; c < low; ++c)
          small.at(f, r, c) = smooth.at(f, (r - low / 2) * step + grid / 2,
                                        (c - low / 2) * step + grid / 2);
    const MultiCoilKSpace blow = opc.forward(small);
    const double scale = double(step) * double(step);
    for (int f = 0; f < 2; ++f)
      CHECK((scale * blow.data[f] - bc.data[f]).norm() / bc.data[f].norm() < 1e-8);
  }
}

TEST_CASE("drop_navigators and navigator_vectors") {
  std::mt19937_64 gen(91);
  const int grid = 16;
  const SpiralInterleaf base = make_spiral(32, 0.2, 0.02, 0.2, grid);
  const SpiralAcquisition acq = bin_frames(golden_angle_schedule(base, 20, 5), 5);
  const CoilMaps maps = simulate_coilmaps(grid, 2);
  SamplingOperator op(acq, maps, grid);
  ImageSeries x(grid, 4);
  for (int f = 0; f < 4; ++f) x.casorati.col(f) = random_image(grid, gen);
  const MultiCoilKSpace b = op.forward(x);

  auto [opd, bd] = drop_navigators(op, b);
  CHECK(opd.n_frames() == 4);
  for (int f = 0; f < 4; ++f) {
    CHECK(opd.acquisition().frames[f].end - opd.acquisition().frames[f].begin == 4);
    CHECK(bd.data[f].rows() == 4 * 32);
  }

  const std::vector<CxVector> z = navigator_vectors(op, b);
  CHECK(z.size() == 4);
  for (const auto& zi : z) CHECK(zi.size() == 32 * 2);

  // Navigator-free acquisition: navigator_vectors must throw.
  const SpiralAcquisition plain = bin_frames(golden_angle_schedule(base, 20), 5);
  SamplingOperator op2(plain, maps, grid);
  ImageSeries x2(grid, 4);
  const MultiCoilKSpace b2 = op2.forward(x2);
  CHECK_THROWS_AS(navigator_vectors(op2, b2), DataError);
}

}  // TEST_SUITE
