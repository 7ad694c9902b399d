#include "storm/config.hpp"

#include "storm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace storm {
namespace {

// All values move through double in the schema accessors; integers and seeds
// are representable exactly well beyond the ranges used here.
#define STORM_KEY(sec, field, type, doc)                                  \
  ConfigKey {                                                             \
    #sec, #field, type, doc, [](const RunConfig& c) -> double {           \
      return static_cast<double>(c.sec.field);                            \
    },                                                                    \
        [](RunConfig& c, double v) {                                      \
          c.sec.field = static_cast<decltype(c.sec.field)>(v);            \
        }                                                                 \
  }

std::vector<ConfigKey> build_schema() {
  return {
      STORM_KEY(phantom, grid_size, "int", "image side in pixels"),
      STORM_KEY(phantom, n_frames, "int", "number of frames"),
      STORM_KEY(phantom, cardiac_period_frames, "real", "cardiac period in frames"),
      STORM_KEY(phantom, respiratory_period_frames, "real", "respiratory period in frames"),
      STORM_KEY(phantom, respiratory_amplitude, "real", "respiratory translation in pixels"),
      STORM_KEY(phantom, contraction_fraction, "real", "ventricular contraction fraction"),
      STORM_KEY(phantom, heart_rate_jitter, "real", "std of relative heart-rate perturbation"),
      STORM_KEY(phantom, seed, "u64", "phantom generator seed"),

      STORM_KEY(trajectory, samples_per_readout, "int", "samples per spiral readout"),
      STORM_KEY(trajectory, density_inner, "real", "inner density, fraction of Nyquist"),
      STORM_KEY(trajectory, density_outer, "real", "outer density, fraction of Nyquist"),
      STORM_KEY(trajectory, inner_extent, "real", "dense-region extent, fraction of kmax"),
      STORM_KEY(trajectory, spirals_per_frame, "int", "interleaves binned per frame"),
      STORM_KEY(trajectory, navigator_every, "int", "navigator slot period, 0 = none"),
      STORM_KEY(trajectory, n_interleaves, "int", "total interleaf slots, 0 = auto"),

      STORM_KEY(coils, n_coils, "int", "simulated physical coils"),
      STORM_KEY(coils, compress_max_error, "real", "PCA compression error budget, 0 = off"),

      STORM_KEY(noise, snr_db, "real", "measurement SNR in dB, 0 = noiseless"),
      STORM_KEY(noise, sigma, "real", "explicit noise sigma (overrides snr_db)"),
      STORM_KEY(noise, seed, "u64", "noise generator seed"),

      STORM_KEY(recon, lambda1, "real", "kernel low-rank weight (step 1)"),
      STORM_KEY(recon, lambda2, "real", "temporal smoothness weight"),
      STORM_KEY(recon, lambda, "real", "manifold weight (final solve)"),
      STORM_KEY(recon, sigma, "real", "Gaussian kernel width"),
      STORM_KEY(recon, gamma0, "real", "initial IRLS smoothing, 0 = auto"),
      STORM_KEY(recon, gamma_decay, "real", "IRLS smoothing decay per outer iteration"),
      STORM_KEY(recon, gamma_floor, "real", "IRLS smoothing floor"),
      STORM_KEY(recon, fixed_gamma, "bool", "hold gamma fixed (test mode)"),
      STORM_KEY(recon, outer_iters, "int", "outer IRLS iterations"),
      STORM_KEY(recon, cg_iters_low, "int", "inner solve iterations (step 1)"),
      STORM_KEY(recon, cg_iters_high, "int", "inner solve iterations (final)"),
      STORM_KEY(recon, cg_tol, "real", "inner solve relative residual tolerance"),
      STORM_KEY(recon, central_fraction, "real", "central k-space cutoff, fraction of kmax"),
      STORM_KEY(recon, low_grid, "int", "step-1 grid side, 0 = auto"),
      STORM_KEY(recon, sigma_nav, "real", "self-nav kernel width, 0 = median heuristic"),
      STORM_KEY(recon, lambda_lowrank, "real", "low-rank baseline weight"),
      STORM_KEY(recon, schatten_p, "real", "Schatten exponent for the low-rank baseline"),
      STORM_KEY(recon, lowrank_iters, "int", "low-rank IRLS iterations"),

      STORM_KEY(metrics, roi_row0, "int", "ROI top row, -1 = centered default"),
      STORM_KEY(metrics, roi_col0, "int", "ROI left column, -1 = centered default"),
      STORM_KEY(metrics, roi_height, "int", "ROI height"),
      STORM_KEY(metrics, roi_width, "int", "ROI width"),
  };
}

#undef STORM_KEY

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_value(const ConfigKey& key, const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  try {
    if (key.type == "bool") {
      if (v == "true" || v == "1") return 1.0;
      if (v == "false" || v == "0") return 0.0;
      throw std::invalid_argument("expected true/false");
    }
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    if ((key.type == "int" || key.type == "u64") && d != std::floor(d))
      throw std::invalid_argument("expected an integer");
    return d;
  } catch (const std::exception& e) {
    throw ParamError("config: " + where + ": bad value '" + v + "' for " + key.section + "." +
                     key.key + " (" + e.what() + ")");
  }
}

std::string format_value(const ConfigKey& key, double v) {
  if (key.type == "bool") return v != 0.0 ? "true" : "false";
  if (key.type == "int") return std::to_string(static_cast<long long>(v));
  if (key.type == "u64") {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = build_schema();
  return schema;
}

void RunConfig::validate() const {
  phantom.validate();
  recon.validate();
  if (trajectory.samples_per_readout < 2)
    throw ParamError("config: trajectory.samples_per_readout must be >= 2");
  if (trajectory.spirals_per_frame < 1)
    throw ParamError("config: trajectory.spirals_per_frame must be >= 1");
  if (trajectory.navigator_every < 0)
    throw ParamError("config: trajectory.navigator_every must be >= 0");
  if (trajectory.n_interleaves < 0) throw ParamError("config: trajectory.n_interleaves must be >= 0");
  if (coils.n_coils < 1) throw ParamError("config: coils.n_coils must be >= 1");
  if (coils.compress_max_error < 0 || coils.compress_max_error >= 1)
    throw ParamError("config: coils.compress_max_error must be in [0,1)");
  if (noise.snr_db < 0) throw ParamError("config: noise.snr_db must be >= 0");
  if (noise.sigma < 0) throw ParamError("config: noise.sigma must be >= 0");
}

int RunConfig::resolve_n_interleaves() const {
  if (trajectory.n_interleaves > 0) return trajectory.n_interleaves;
  return phantom.n_frames * trajectory.spirals_per_frame;
}

RegionOfInterest RunConfig::resolve_roi(int grid) const {
  if (metrics.roi_row0 < 0 || metrics.roi_col0 < 0 || metrics.roi_height <= 0 ||
      metrics.roi_width <= 0)
    return RegionOfInterest::centered(grid);
  RegionOfInterest roi{metrics.roi_row0, metrics.roi_col0, metrics.roi_height, metrics.roi_width};
  roi.validate(grid);
  return roi;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParamError("config: " + where + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      const auto& schema = config_schema();
      const bool known = std::any_of(schema.begin(), schema.end(),
                                     [&](const ConfigKey& k) { return k.section == section; });
      if (!known) throw ParamError("config: " + where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParamError("config: " + where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = t.substr(eq + 1);
    if (section.empty())
      throw ParamError("config: " + where + ": key '" + key + "' appears before any [section]");

    const ConfigKey* match = nullptr;
    for (const ConfigKey& k : config_schema()) {
      if (k.section == section && k.key == key) {
        match = &k;
        break;
      }
    }
    if (!match)
      throw ParamError("config: " + where + ": unknown key '" + key + "' in section [" + section +
                       "]");
    match->set(cfg, parse_value(*match, value, where));
  }
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParamError("config: cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.filename().string());
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const ConfigKey& k : config_schema()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << format_value(k, k.get(cfg)) << '\n';
  }
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
  return buf;
}

}  // namespace storm
