#include "storm/nufft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace storm {
namespace {

// FFTW plan creation is not thread-safe; new-array execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Kaiser-Bessel window I0(beta*sqrt(1-(2u/W)^2)) on |u| <= W/2, and its
// continuous Fourier transform W*sinh(s)/s with s = sqrt(beta^2-(pi*W*nu)^2).
// Inside the image support |nu| <= 1/(2*oversampling) the argument stays in
// the sinh branch, so the deapodization factor never vanishes.
double kb_fourier(double nu, int width, double beta) {
  const double t = beta * beta - (kPi * width * nu) * (kPi * width * nu);
  if (t > 0.0) {
    const double s = std::sqrt(t);
    return width * std::sinh(s) / s;
  }
  const double s = std::sqrt(-t);
  return s < 1e-12 ? double(width) : width * std::sin(s) / s;
}

}  // namespace

struct GriddedFourier::Impl {
  int n = 0;          // image grid
  int m = 0;          // oversampled grid
  int width = 8;      // kernel taps per axis
  double beta = 0.0;
  RealVector deapod;              // n*n, 1/(kb_hat(rx/m)*kb_hat(ry/m))
  std::vector<double> table;      // kernel samples on [0, width/2]
  double table_scale = 0.0;       // entries per unit of u
  fftw_plan plan_fwd = nullptr;   // m x m, FFTW_FORWARD
  fftw_plan plan_bwd = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_fwd) fftw_destroy_plan(plan_fwd);
    if (plan_bwd) fftw_destroy_plan(plan_bwd);
  }

  double kernel(double u) const {
    const double a = std::abs(u) * table_scale;
    const auto idx = static_cast<std::size_t>(a);
    if (idx + 1 >= table.size()) return 0.0;
    const double frac = a - double(idx);
    return table[idx] + frac * (table[idx + 1] - table[idx]);
  }
};

GriddedFourier::GriddedFourier(int grid_size, int oversampling, int kernel_width) {
  if (grid_size < 2) throw ParamError("GriddedFourier: grid_size must be at least 2");
  if (oversampling < 2) throw ParamError("GriddedFourier: oversampling must be at least 2");
  if (kernel_width < 2 || kernel_width > 16)
    throw ParamError("GriddedFourier: kernel_width out of range");

  impl_ = std::make_unique<Impl>();
  Impl& im = *impl_;
  im.n = grid_size;
  im.m = grid_size * oversampling;
  im.width = kernel_width;
  // Beatty et al. choice of beta for a given width and oversampling.
  const double os = oversampling;
  im.beta = kPi * std::sqrt(double(kernel_width * kernel_width) / (os * os) * (os - 0.5) * (os - 0.5) - 0.8);

  // Dense kernel table; linear interpolation keeps the relative error well
  // below the gridding accuracy itself.
  const int per_unit = 65536;
  const int entries = per_unit * kernel_width / 2 + 2;
  im.table.resize(entries, 0.0);
  im.table_scale = per_unit;
  const double i0_beta = std::cyl_bessel_i(0.0, im.beta);
  for (int i = 0; i < entries; ++i) {
    const double u = double(i) / per_unit;
    const double t = 1.0 - (2.0 * u / kernel_width) * (2.0 * u / kernel_width);
    im.table[i] = t <= 0.0 ? 0.0 : std::cyl_bessel_i(0.0, im.beta * std::sqrt(t)) / i0_beta;
  }

  im.deapod.resize(std::int64_t(im.n) * im.n);
  std::vector<double> axis(im.n);
  for (int i = 0; i < im.n; ++i) {
    const double nu = double(i - im.n / 2) / im.m;
    axis[i] = 1.0 / (kb_fourier(nu, im.width, im.beta) / i0_beta);
  }
  for (int r = 0; r < im.n; ++r)
    for (int c = 0; c < im.n; ++c) im.deapod[std::int64_t(r) * im.n + c] = axis[r] * axis[c];

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::vector<Complex> dummy(std::size_t(im.m) * im.m);
    auto* ptr = reinterpret_cast<fftw_complex*>(dummy.data());
    // FFTW_ESTIMATE for run-to-run determinism; FFTW_UNALIGNED so the plans
    // accept any caller buffer.
    im.plan_fwd = fftw_plan_dft_2d(im.m, im.m, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    im.plan_bwd = fftw_plan_dft_2d(im.m, im.m, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!im.plan_fwd || !im.plan_bwd) throw NumericError("GriddedFourier: FFTW planning failed");
  }
}

GriddedFourier::~GriddedFourier() = default;
GriddedFourier::GriddedFourier(GriddedFourier&&) noexcept = default;
GriddedFourier& GriddedFourier::operator=(GriddedFourier&&) noexcept = default;

int GriddedFourier::grid_size() const { return impl_->n; }

void GriddedFourier::forward(const CxVector& image, const Eigen::ArrayX2d& k,
                             Eigen::Ref<CxVector> out) const {
  const Impl& im = *impl_;
  const int n = im.n, m = im.m, w = im.width;
  if (image.size() != std::int64_t(n) * n) throw DataError("GriddedFourier::forward: image size mismatch");
  if (out.size() != k.rows()) throw DataError("GriddedFourier::forward: output size mismatch");

  // Deapodize and place the centered image into the oversampled grid with
  // wrap-around (ifftshift) indexing, so FFT output index p equals the
  // centered frequency p (mod m).
  std::vector<Complex> grid(std::size_t(m) * m, Complex(0, 0));
  for (int r = 0; r < n; ++r) {
    const int gr = (r - n / 2 + m) % m;
    for (int c = 0; c < n; ++c) {
      const int gc = (c - n / 2 + m) % m;
      grid[std::size_t(gr) * m + gc] =
          image[std::int64_t(r) * n + c] * im.deapod[std::int64_t(r) * n + c];
    }
  }
  auto* ptr = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(im.plan_fwd, ptr, ptr);

  // Interpolate each sample from the oversampled spectrum.
  std::vector<double> wx(w), wy(w);
  for (Eigen::Index s = 0; s < k.rows(); ++s) {
    const double uy = k(s, 0) * m;  // first coordinate pairs with the row axis
    const double ux = k(s, 1) * m;
    const int bx = int(std::ceil(ux - 0.5 * w));
    const int by = int(std::ceil(uy - 0.5 * w));
    for (int t = 0; t < w; ++t) {
      wx[t] = im.kernel(ux - (bx + t));
      wy[t] = im.kernel(uy - (by + t));
    }
    Complex acc(0, 0);
    for (int ty = 0; ty < w; ++ty) {
      int gy = by + ty + m;
      if (gy >= m) gy -= m;
      if (gy >= m) gy -= m;
      Complex row_acc(0, 0);
      const Complex* row = grid.data() + std::size_t(gy) * m;
      for (int tx = 0; tx < w; ++tx) {
        int gx = bx + tx + m;
        if (gx >= m) gx -= m;
        if (gx >= m) gx -= m;
        row_acc += wx[tx] * row[gx];
      }
      acc += wy[ty] * row_acc;
    }
    out[s] = acc;
  }
}

namespace {

CxMatrix centered_dft2(const CxMatrix& in, int sign) {
  const int n = static_cast<int>(in.rows());
  if (in.cols() != n || n % 2 != 0) throw ParamError("centered_dft2: image must be square with even side");

  // ifftshift in, FFT, fftshift out; for even n both shifts swap halves.
  CxMatrix work(n, n);
  const int h = n / 2;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) work((r + h) % n, (c + h) % n) = in(r, c);

  auto* ptr = reinterpret_cast<fftw_complex*>(work.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(n, n, ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (!plan) throw NumericError("centered_dft2: FFTW planning failed");
  fftw_execute_dft(plan, ptr, ptr);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  // Eigen matrices are column-major while FFTW assumes row-major; a 2D DFT is
  // symmetric in its axes, so the transform is unaffected by the transpose.
  CxMatrix out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = work((r + h) % n, (c + h) % n);
  return out;
}

}  // namespace

CxMatrix centered_fft2(const CxMatrix& image) { return centered_dft2(image, FFTW_FORWARD); }
CxMatrix centered_ifft2(const CxMatrix& spectrum) { return centered_dft2(spectrum, FFTW_BACKWARD); }

void GriddedFourier::adjoint(const Eigen::Ref<const CxVector>& samples, const Eigen::ArrayX2d& k,
                             CxVector& image_out) const {
  const Impl& im = *impl_;
  const int n = im.n, m = im.m, w = im.width;
  if (samples.size() != k.rows()) throw DataError("GriddedFourier::adjoint: sample count mismatch");

  std::vector<Complex> grid(std::size_t(m) * m, Complex(0, 0));
  std::vector<double> wx(w), wy(w);
  for (Eigen::Index s = 0; s < k.rows(); ++s) {
    const double uy = k(s, 0) * m;  // first coordinate pairs with the row axis
    const double ux = k(s, 1) * m;
    const int bx = int(std::ceil(ux - 0.5 * w));
    const int by = int(std::ceil(uy - 0.5 * w));
    for (int t = 0; t < w; ++t) {
      wx[t] = im.kernel(ux - (bx + t));
      wy[t] = im.kernel(uy - (by + t));
    }
    const Complex v = samples[s];
    for (int ty = 0; ty < w; ++ty) {
      int gy = by + ty + m;
      if (gy >= m) gy -= m;
      if (gy >= m) gy -= m;
      Complex* row = grid.data() + std::size_t(gy) * m;
      const Complex vy = v * wy[ty];
      for (int tx = 0; tx < w; ++tx) {
        int gx = bx + tx + m;
        if (gx >= m) gx -= m;
        if (gx >= m) gx -= m;
        row[gx] += vy * wx[tx];
      }
    }
  }

  auto* ptr = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(im.plan_bwd, ptr, ptr);

  image_out.resize(std::int64_t(n) * n);
  for (int r = 0; r < n; ++r) {
    const int gr = (r - n / 2 + m) % m;
    for (int c = 0; c < n; ++c) {
      const int gc = (c - n / 2 + m) % m;
      image_out[std::int64_t(r) * n + c] =
          grid[std::size_t(gr) * m + gc] * im.deapod[std::int64_t(r) * n + c];
    }
  }
}

}  // namespace storm
