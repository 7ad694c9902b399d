#include "storm/phantom.hpp"

#include "normal_source.hpp"

#include <cmath>

namespace storm {
namespace {

struct Ellipse {
  double row_center;  // pixels, relative to grid center
  double col_center;
  double row_semi;
  double col_semi;
  double intensity;
};

inline bool inside(const Ellipse& e, double row, double col) {
  const double dr = (row - e.row_center) / e.row_semi;
  const double dc = (col - e.col_center) / e.col_semi;
  return dr * dr + dc * dc <= 1.0;
}

// Asymmetric envelope in [0, ~1]: the second harmonic gives a fast upstroke
// and a slow recovery, which puts the fundamental frequency into the
// frame-difference energy (a pure harmonic would only show up at twice the
// rate after squaring). Breathing is markedly more asymmetric than the
// heartbeat.
inline double envelope(double u, double skew) {
  return ((1.0 - std::cos(u)) / 2.0 + skew * (1.0 - std::cos(2.0 * u)) / 2.0) / (1.0 + skew);
}

// Scene description for one phase pair, in units of the grid side. Painted
// in order; later shapes overwrite earlier ones.
//
// Each motion carries a quadrature component (RV contraction lag, LV center
// wobble, lateral breathing sway) so that one cycle traces a loop in image
// space rather than a back-and-forth segment: frames are then uniquely
// placed on the cycle and image distance tracks phase distance.
void build_scene(const PhantomSpec& spec, double cardiac, double respiratory,
                 std::vector<Ellipse>& scene) {
  const double n = spec.grid_size;
  const double cf = spec.contraction_fraction;

  const double uc = 2.0 * kPi * cardiac;
  const double ur = 2.0 * kPi * respiratory;
  const double contraction = envelope(uc, 0.10);  // ~1 = peak systole
  const double wobble = std::sin(uc);
  const double rv_contraction = envelope(uc - 0.5 * kPi, 0.10);  // RV lags LV
  const double lift = spec.respiratory_amplitude * envelope(ur, 0.30);
  const double sway = 0.45 * spec.respiratory_amplitude * std::sin(ur);

  scene.clear();
  // Torso with a chest-wall rim and a spine shadow; static.
  scene.push_back({0.02 * n, 0.0, 0.40 * n, 0.46 * n, 0.25});
  scene.push_back({0.02 * n, 0.0, 0.365 * n, 0.425 * n, 0.18});
  scene.push_back({0.30 * n, 0.0, 0.065 * n, 0.055 * n, 0.10});
  // Liver moves with respiration like the heart.
  scene.push_back({0.20 * n - lift, 0.12 * n + sway, 0.125 * n, 0.17 * n, 0.42});
  // Heart: myocardium ring, LV blood pool, RV pool. The outer wall contracts
  // less than the cavity so the wall thickens in systole.
  const double lv_row = -0.06 * n - lift;
  const double lv_col = -0.02 * n + sway;
  // The quadrature component of the cardiac cycle is a twist-like aspect
  // oscillation, not a translation, so it stays out of the respiratory
  // (translation) image subspace.
  const double aspect = 1.0 + 0.30 * cf * wobble;
  const double outer = 0.165 * n * (1.0 - 0.40 * cf * contraction);
  const double inner = 0.108 * n * (1.0 - cf * contraction);
  const double rv = 1.0 - 0.9 * cf * rv_contraction;
  scene.push_back({lv_row, lv_col, 1.05 * outer * aspect, 0.95 * outer / aspect, 0.50});
  scene.push_back({lv_row, lv_col, inner * aspect, 0.90 * inner / aspect, 1.00});
  scene.push_back({-0.05 * n - lift, -0.21 * n + sway, 0.105 * n * rv, 0.075 * n * rv, 0.95});
}

inline double frac(double x) { return x - std::floor(x); }

inline double wrap_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

void PhantomSpec::validate() const {
  if (grid_size < 8) throw ParamError("phantom: grid_size must be at least 8");
  if (n_frames < 1) throw ParamError("phantom: n_frames must be positive");
  if (cardiac_period_frames <= 0) throw ParamError("phantom: cardiac_period_frames must be > 0");
  if (respiratory_period_frames <= 0) throw ParamError("phantom: respiratory_period_frames must be > 0");
  if (cardiac_period_frames == respiratory_period_frames)
    throw ParamError("phantom: cardiac_period_frames must differ from respiratory_period_frames "
                     "(motions must be separable)");
  if (respiratory_amplitude < 0) throw ParamError("phantom: respiratory_amplitude must be >= 0");
  if (respiratory_amplitude >= grid_size / 8.0)
    throw ParamError("phantom: respiratory_amplitude must be < grid_size/8 "
                     "(object must stay inside the field of view)");
  if (contraction_fraction < 0.0 || contraction_fraction >= 1.0)
    throw ParamError("phantom: contraction_fraction must be in [0,1)");
  if (heart_rate_jitter < 0) throw ParamError("phantom: heart_rate_jitter must be >= 0");
}

void render_phantom_frame(const PhantomSpec& spec, double cardiac_phase, double respiratory_phase,
                          Eigen::Ref<CxVector> out) {
  const int n = spec.grid_size;
  if (out.size() != std::int64_t(n) * n) throw DataError("render_phantom_frame: output size mismatch");

  std::vector<Ellipse> scene;
  build_scene(spec, cardiac_phase, respiratory_phase, scene);

  // 4x4 supersampling per pixel for anti-aliased coverage.
  constexpr int kSub = 4;
  constexpr double kSubWeight = 1.0 / (kSub * kSub);
  const double center = 0.5 * (n - 1);

  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      double value = 0.0;
      for (int sr = 0; sr < kSub; ++sr) {
        const double y = row - center + (sr + 0.5) / kSub - 0.5;
        for (int sc = 0; sc < kSub; ++sc) {
          const double x = col - center + (sc + 0.5) / kSub - 0.5;
          double v = 0.0;
          for (const Ellipse& e : scene)
            if (inside(e, y, x)) v = e.intensity;
          value += v;
        }
      }
      out[std::int64_t(row) * n + col] = Complex(value * kSubWeight, 0.0);
    }
  }
}

GroundTruthSeries generate_phantom(const PhantomSpec& spec) {
  spec.validate();

  const int nf = spec.n_frames;
  GroundTruthSeries gt;
  gt.frames = ImageSeries(spec.grid_size, nf);
  gt.cardiac_phase.resize(nf);
  gt.respiratory_phase.resize(nf);

  detail::NormalSource normals(spec.seed);
  const double base_increment = 1.0 / spec.cardiac_period_frames;
  double cardiac = 0.0;
  for (int i = 0; i < nf; ++i) {
    gt.cardiac_phase[i] = cardiac;
    gt.respiratory_phase[i] = frac(double(i) / spec.respiratory_period_frames);
    double increment = base_increment;
    if (spec.heart_rate_jitter > 0.0) {
      increment *= 1.0 + spec.heart_rate_jitter * normals.next();
      // The heart never beats backwards.
      increment = std::max(increment, 0.1 * base_increment);
    }
    cardiac = frac(cardiac + increment);
  }

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nf; ++i)
    render_phantom_frame(spec, gt.cardiac_phase[i], gt.respiratory_phase[i], gt.frames.casorati.col(i));

  return gt;
}

double phase_distance(const GroundTruthSeries& gt, int i, int j) {
  const int n = gt.frames.n_frames();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw ParamError("phase_distance: frame index out of range");
  const double dc = wrap_distance(gt.cardiac_phase[i], gt.cardiac_phase[j]);
  const double dr = wrap_distance(gt.respiratory_phase[i], gt.respiratory_phase[j]);
  return std::hypot(dc, dr);
}

}  // namespace storm
