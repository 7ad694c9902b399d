#pragma once

#include "storm/metrics.hpp"
#include "storm/phantom.hpp"
#include "storm/solvers.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace storm {

/// Full run configuration covering simulation, acquisition and
/// reconstruction. Serialized as a flat `[section] key = value` text file;
/// every key is also exposed as a --key CLI flag (keys are globally unique).
struct RunConfig {
  PhantomSpec phantom;

  struct Trajectory {
    int samples_per_readout = 512;
    double density_inner = 0.2;
    double density_outer = 0.02;
    double inner_extent = 0.2;
    int spirals_per_frame = 5;
    int navigator_every = 5;  // 0 = no navigators
    int n_interleaves = 0;    // 0 = auto: n_frames * spirals_per_frame
  } trajectory;

  struct Coils {
    int n_coils = 8;
    double compress_max_error = 0.05;  // 0 disables compression
  } coils;

  struct Noise {
    double snr_db = 30.0;  // 0 = noiseless (unless sigma set)
    double sigma = 0.0;    // explicit per-component sigma wins over snr_db
    std::uint64_t seed = 20240915;
  } noise;

  ReconConfig recon;

  struct Metrics {
    // Negative row0 means "auto": centered square of half the grid side.
    int roi_row0 = -1;
    int roi_col0 = -1;
    int roi_height = 0;
    int roi_width = 0;
  } metrics;

  void validate() const;
  int resolve_n_interleaves() const;
  RegionOfInterest resolve_roi(int grid) const;
};

/// One schema entry: section, key, type tag and accessors. The schema drives
/// parsing, serialization, CLI flag generation and unknown-key rejection.
struct ConfigKey {
  std::string section;
  std::string key;
  std::string type;  // int | real | bool | u64
  std::string doc;
  double (*get)(const RunConfig&);
  void (*set)(RunConfig&, double);
};

const std::vector<ConfigKey>& config_schema();

/// Parses `[section] key = value` text; unknown sections or keys are
/// rejected with line diagnostics.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config_file(const std::filesystem::path& path);

/// Canonical serialization: every key in schema order. Reparsing reproduces
/// the identical RunConfig, and its hash identifies a run.
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace storm
