#pragma once

#include "storm/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace storm {

struct RegionOfInterest {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;

  /// Centered square covering half the grid side.
  static RegionOfInterest centered(int grid) {
    return {grid / 4, grid / 4, grid / 2, grid / 2};
  }
  void validate(int grid) const;
};

/// Signal-to-error ratio 20 log10(||orig|| / ||orig - rec||) computed on
/// pixel magnitudes over the ROI across all frames. Identical inputs return
/// +infinity rather than throwing.
double ser(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi);

/// High-frequency error norm: Laplacian-of-Gaussian filtered (15x15 kernel,
/// sigma 1.5, zero-sum, valid-mode convolution) difference between orig and
/// rec. `db` is the per-frame-averaged ratio in dB (higher is better); `norm`
/// is the per-frame-averaged normalized error (lower is better).
struct HfenResult {
  double db = 0.0;
  double norm = 0.0;
};
HfenResult hfen(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi);

/// Mean structural similarity over the ROI (11x11 Gaussian window, sigma 1.5,
/// stabilizers C1=(0.01 D)^2, C2=(0.03 D)^2 with D the magnitude range of
/// orig over the ROI and series), averaged across frames.
double ssim(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct MetricReport {
  double ser_db = 0.0;  // global, all frames pooled
  double ssim_mean = 0.0;
  double hfen_norm = 0.0;
  double hfen_db = 0.0;
  std::vector<double> ser_per_frame;
  std::vector<double> ssim_per_frame;
  std::vector<double> hfen_norm_per_frame;
  std::vector<double> hfen_db_per_frame;
  MetricSummary ser_frames;
  MetricSummary ssim_frames;
  MetricSummary hfen_norm_frames;
  MetricSummary hfen_db_frames;
};

/// All metrics plus per-frame mean and standard deviation.
MetricReport report(const ImageSeries& orig, const ImageSeries& rec, const RegionOfInterest& roi);

/// CSV: one row per frame plus mean/std/global summary rows; `label` fills a
/// leading method column so reports from several runs concatenate into one
/// comparison table.
void write_report_csv(std::ostream& os, const MetricReport& rep, const std::string& label,
                      bool with_header = true);

}  // namespace storm
