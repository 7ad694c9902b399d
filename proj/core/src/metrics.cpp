#include "storm/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace storm {
namespace {

RealMatrix roi_magnitude(const ImageSeries& x, const RegionOfInterest& roi, int frame) {
  RealMatrix out(roi.height, roi.width);
  for (int r = 0; r < roi.height; ++r)
    for (int c = 0; c < roi.width; ++c)
      out(r, c) = std::abs(x.at(frame, roi.row0 + r, roi.col0 + c));
  return out;
}

// 15x15 Laplacian-of-Gaussian, sigma 1.5, normalized Gaussian, forced to an
// exactly zero sum so constant offsets vanish under valid-mode convolution.
RealMatrix log_kernel() {
  constexpr int size = 15;
  constexpr double s = 1.5;
  RealMatrix g(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double y = r - size / 2, x = c - size / 2;
      g(r, c) = std::exp(-(x * x + y * y) / (2 * s * s));
    }
  g /= g.sum();
  RealMatrix h(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double y = r - size / 2, x = c - size / 2;
      h(r, c) = g(r, c) * (x * x + y * y - 2 * s * s) / (s * s * s * s);
    }
  h.array() -= h.mean();
  return h;
}

RealMatrix valid_convolve(const RealMatrix& image, const RealMatrix& kernel) {
  const int kh = static_cast<int>(kernel.rows()), kw = static_cast<int>(kernel.cols());
  const int oh = static_cast<int>(image.rows()) - kh + 1;
  const int ow = static_cast<int>(image.cols()) - kw + 1;
  RealMatrix out(oh, ow);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c)
      out(r, c) = (image.block(r, c, kh, kw).cwiseProduct(kernel)).sum();
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / double(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(var / double(values.size() - 1)) : 0.0;
  return s;
}

void require_pair(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi) {
  if (orig.grid != rec.grid || orig.n_frames() != rec.n_frames())
    throw DataError("metrics: image series dimensions do not match");
  roi.validate(orig.grid);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void RegionOfInterest::validate(int grid) const {
  if (height < 1 || width < 1) throw ParamError("roi: height and width must be positive");
  if (row0 < 0 || col0 < 0 || row0 + height > grid || col0 + width > grid)
    throw ParamError("roi: rectangle must lie inside the image grid");
}

double ser(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi) {
  require_pair(orig, rec, roi);
  double signal = 0.0, error = 0.0;
  for (int f = 0; f < orig.n_frames(); ++f) {
    const RealMatrix o = roi_magnitude(orig, roi, f);
    const RealMatrix r = roi_magnitude(rec, roi, f);
    signal += o.squaredNorm();
    error += (o - r).squaredNorm();
  }
  if (signal == 0.0) throw DataError("ser: reference is all zero in the ROI");
  if (error == 0.0) return kInf;
  return 10.0 * std::log10(signal / error);
}

HfenResult hfen(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi) {
  require_pair(orig, rec, roi);
  const RealMatrix kernel = log_kernel();
  if (roi.height <= kernel.rows() || roi.width <= kernel.cols())
    throw ParamError("hfen: ROI must be larger than the 15x15 LoG kernel");

  std::vector<double> db(orig.n_frames()), norm(orig.n_frames());
  for (int f = 0; f < orig.n_frames(); ++f) {
    const RealMatrix lo = valid_convolve(roi_magnitude(orig, roi, f), kernel);
    const RealMatrix lr = valid_convolve(roi_magnitude(rec, roi, f), kernel);
    const double ref = lo.norm();
    if (ref == 0.0) throw DataError("hfen: reference has no high-frequency energy in the ROI");
    const double err = (lo - lr).norm();
    norm[f] = err / ref;
    db[f] = err == 0.0 ? kInf : 20.0 * std::log10(ref / err);
  }

  HfenResult out;
  out.norm = summarize(norm).mean;
  out.db = summarize(db).mean;
  return out;
}

double ssim(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi) {
  require_pair(orig, rec, roi);
  constexpr int win = 11;
  constexpr double s = 1.5;
  if (roi.height <= win || roi.width <= win)
    throw ParamError("ssim: ROI must be larger than the 11x11 window");

  RealMatrix w(win, win);
  for (int r = 0; r < win; ++r)
    for (int c = 0; c < win; ++c) {
      const double y = r - win / 2, x = c - win / 2;
      w(r, c) = std::exp(-(x * x + y * y) / (2 * s * s));
    }
  w /= w.sum();

  // Data range of the reference over the ROI and series.
  double lo = kInf, hi = -kInf;
  for (int f = 0; f < orig.n_frames(); ++f) {
    const RealMatrix o = roi_magnitude(orig, roi, f);
    lo = std::min(lo, o.minCoeff());
    hi = std::max(hi, o.maxCoeff());
  }
  const double range = hi - lo;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  double total = 0.0;
  for (int f = 0; f < orig.n_frames(); ++f) {
    const RealMatrix o = roi_magnitude(orig, roi, f);
    const RealMatrix r = roi_magnitude(rec, roi, f);
    const RealMatrix mu_o = valid_convolve(o, w);
    const RealMatrix mu_r = valid_convolve(r, w);
    const RealMatrix o2 = valid_convolve(o.cwiseProduct(o), w);
    const RealMatrix r2 = valid_convolve(r.cwiseProduct(r), w);
    const RealMatrix or_ = valid_convolve(o.cwiseProduct(r), w);

    double frame_sum = 0.0;
    for (Eigen::Index i = 0; i < mu_o.size(); ++i) {
      const double mo = mu_o(i), mr = mu_r(i);
      const double var_o = o2(i) - mo * mo;
      const double var_r = r2(i) - mr * mr;
      const double cov = or_(i) - mo * mr;
      frame_sum += ((2 * mo * mr + c1) * (2 * cov + c2)) /
                   ((mo * mo + mr * mr + c1) * (var_o + var_r + c2));
    }
    total += frame_sum / double(mu_o.size());
  }
  return total / double(orig.n_frames());
}

MetricReport report(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi) {
  require_pair(orig, rec, roi);
  MetricReport rep;
  rep.ser_db = ser(orig, rec, roi);
  rep.ssim_mean = ssim(orig, rec, roi);
  const HfenResult h = hfen(orig, rec, roi);
  rep.hfen_norm = h.norm;
  rep.hfen_db = h.db;

  const int nf = orig.n_frames();
  rep.ser_per_frame.resize(nf);
  rep.ssim_per_frame.resize(nf);
  rep.hfen_norm_per_frame.resize(nf);
  rep.hfen_db_per_frame.resize(nf);
  for (int f = 0; f < nf; ++f) {
    ImageSeries of(orig.grid, 1), rf(orig.grid, 1);
    of.casorati.col(0) = orig.casorati.col(f);
    rf.casorati.col(0) = rec.casorati.col(f);
    rep.ser_per_frame[f] = ser(of, rf, roi);
    rep.ssim_per_frame[f] = ssim(of, rf, roi);
    const HfenResult hf = hfen(of, rf, roi);
    rep.hfen_norm_per_frame[f] = hf.norm;
    rep.hfen_db_per_frame[f] = hf.db;
  }
  rep.ser_frames = summarize(rep.ser_per_frame);
  rep.ssim_frames = summarize(rep.ssim_per_frame);
  rep.hfen_norm_frames = summarize(rep.hfen_norm_per_frame);
  rep.hfen_db_frames = summarize(rep.hfen_db_per_frame);
  return rep;
}

void write_report_csv(std::ostream& os, const MetricReport& rep, const std::string& label,
                      bool with_header) {
  if (with_header) os << "method,row,ser_db,ssim,hfen_norm,hfen_db\n";
  const auto line = [&](const std::string& row, double a, double b, double c, double d) {
    os << label << ',' << row << ',' << a << ',' << b << ',' << c << ',' << d << '\n';
  };
  for (std::size_t f = 0; f < rep.ser_per_frame.size(); ++f)
    line("frame_" + std::to_string(f), rep.ser_per_frame[f], rep.ssim_per_frame[f],
         rep.hfen_norm_per_frame[f], rep.hfen_db_per_frame[f]);
  line("mean", rep.ser_frames.mean, rep.ssim_frames.mean, rep.hfen_norm_frames.mean,
       rep.hfen_db_frames.mean);
  line("std", rep.ser_frames.stddev, rep.ssim_frames.stddev, rep.hfen_norm_frames.stddev,
       rep.hfen_db_frames.stddev);
  line("global", rep.ser_db, rep.ssim_mean, rep.hfen_norm, rep.hfen_db);
}

}  // namespace storm
