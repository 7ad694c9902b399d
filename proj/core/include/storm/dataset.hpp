#pragma once

#include "storm/manifold.hpp"
#include "storm/operators.hpp"
#include "storm/phantom.hpp"
#include "storm/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace storm {

/// Single-file dataset container: a text header (first line carries the magic
/// tag and the exact header byte length) followed by the named raw arrays,
/// little-endian, concatenated in header order. Complex values are stored as
/// 64-bit float pairs. Round-trips are bit-exact.
enum class DatasetKind { images, kspace, trajectory, laplacian };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

struct Provenance {
  std::string config_hash;  // hex digest of the canonical config text
  std::uint64_t seed = 0;
};

/// FNV-1a 64-bit digest (content fingerprinting, not security).
std::uint64_t fnv1a(const void* data, std::size_t size);
std::string file_digest(const std::filesystem::path& path);

struct ImagesFile {
  ImageSeries images;
  std::optional<RealVector> cardiac_phase;
  std::optional<RealVector> respiratory_phase;
  Provenance provenance;
};

struct KSpaceFile {
  SpiralAcquisition acquisition;
  MultiCoilKSpace data;
  CoilMaps maps;
  int grid = 0;
  Provenance provenance;
};

struct TrajectoryFile {
  SpiralAcquisition acquisition;
  Provenance provenance;
};

struct LaplacianFile {
  LaplacianMatrix laplacian;
  Provenance provenance;
};

void write_images(const std::filesystem::path& path, const ImagesFile& file);
ImagesFile read_images(const std::filesystem::path& path);

void write_kspace(const std::filesystem::path& path, const KSpaceFile& file);
KSpaceFile read_kspace(const std::filesystem::path& path);

void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file);
TrajectoryFile read_trajectory(const std::filesystem::path& path);

void write_laplacian(const std::filesystem::path& path, const LaplacianFile& file);
LaplacianFile read_laplacian(const std::filesystem::path& path);

/// Peeks at the kind tag without loading payloads.
DatasetKind probe_kind(const std::filesystem::path& path);

/// Execution record for a CLI run: resolved config, file digests, stage
/// timings, and method-specific extras. Written as JSON next to the outputs.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::string config_hash;
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
  std::vector<std::pair<std::string, double>> timings;
  std::map<std::string, std::string> extra;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

/// Recomputes the digests of every file the manifest names and throws
/// DataError on mismatch.
void verify_manifest(const std::filesystem::path& path);

}  // namespace storm
