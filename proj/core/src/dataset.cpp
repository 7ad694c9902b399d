#include "storm/dataset.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "dataset payloads are little-endian; big-endian hosts are unsupported");

namespace storm {
namespace {

constexpr const char* kMagic = "SPIRALSTORM1";
constexpr int kVersion = 1;

struct ArrayDesc {
  std::string name;
  std::string dtype;  // complex128 | float64 | int64 | uint8
  std::vector<std::int64_t> dims;

  std::int64_t elements() const {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  std::int64_t element_size() const {
    if (dtype == "complex128") return 16;
    if (dtype == "float64") return 8;
    if (dtype == "int64") return 8;
    if (dtype == "uint8") return 1;
    throw DataError("dataset: unknown dtype '" + dtype + "'");
  }
  std::int64_t bytes() const { return elements() * element_size(); }
};

class Writer {
public:
  Writer(DatasetKind kind, const Provenance& prov) {
    meta_["kind"] = to_string(kind);
    meta_["version"] = std::to_string(kVersion);
    meta_["endianness"] = "little";
    meta_["provenance_config_hash"] = prov.config_hash;
    meta_["provenance_seed"] = std::to_string(prov.seed);
  }

  void meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  void meta(const std::string& key, std::int64_t value) { meta_[key] = std::to_string(value); }
  void meta_double(const std::string& key, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    meta_[key] = buf;
  }

  void array(const std::string& name, const std::string& dtype, std::vector<std::int64_t> dims,
             const void* data) {
    ArrayDesc d{name, dtype, std::move(dims)};
    const auto* bytes = static_cast<const char*>(data);
    payload_.insert(payload_.end(), bytes, bytes + d.bytes());
    arrays_.push_back(std::move(d));
  }

  void save(const std::filesystem::path& path) const {
    std::ostringstream body;
    for (const auto& [k, v] : meta_) body << k << " = " << v << '\n';
    for (const auto& a : arrays_) {
      body << "array = " << a.name << ' ' << a.dtype;
      for (auto d : a.dims) body << ' ' << d;
      body << '\n';
    }
    body << "payload\n";
    // First line: magic + fixed-width header byte count (including itself).
    const std::string first_prefix = std::string(kMagic) + " ";
    const std::size_t first_len = first_prefix.size() + 10 + 1;  // %010zu + newline
    const std::size_t header_bytes = first_len + body.str().size();
    char first[64];
    std::snprintf(first, sizeof first, "%s %010zu\n", kMagic, header_bytes);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("dataset: cannot open '" + path.string() + "' for writing");
    os << first << body.str();
    os.write(payload_.data(), std::streamsize(payload_.size()));
    if (!os) throw DataError("dataset: write failed for '" + path.string() + "'");
  }

private:
  std::map<std::string, std::string> meta_;
  std::vector<ArrayDesc> arrays_;
  std::vector<char> payload_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("dataset: cannot open '" + path_ + "'");
    std::string first;
    std::getline(is, first);
    std::istringstream fl(first);
    std::string magic;
    std::size_t header_bytes = 0;
    fl >> magic >> header_bytes;
    if (magic != kMagic || header_bytes <= first.size())
      throw DataError("dataset: '" + path_ + "' is not a spiralstorm dataset file");

    std::string header(header_bytes - first.size() - 1, '\0');
    is.read(header.data(), std::streamsize(header.size()));
    if (!is) throw DataError("dataset: truncated header in '" + path_ + "'");

    std::istringstream hs(header);
    std::string line;
    bool saw_payload = false;
    while (std::getline(hs, line)) {
      if (line == "payload") {
        saw_payload = true;
        break;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw DataError("dataset: malformed header line '" + line + "'");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 3);
      if (key == "array") {
        std::istringstream as(value);
        ArrayDesc d;
        as >> d.name >> d.dtype;
        std::int64_t dim;
        while (as >> dim) d.dims.push_back(dim);
        if (d.name.empty() || d.dims.empty())
          throw DataError("dataset: malformed array declaration '" + value + "'");
        arrays_.push_back(std::move(d));
      } else {
        meta_[key] = value;
      }
    }
    if (!saw_payload) throw DataError("dataset: header of '" + path_ + "' has no payload marker");
    if (meta("endianness") != "little")
      throw DataError("dataset: only little-endian payloads are supported");

    std::int64_t expected = 0;
    for (const auto& a : arrays_) expected += a.bytes();
    payload_.resize(std::size_t(expected));
    is.read(payload_.data(), expected);
    if (is.gcount() != expected)
      throw DataError("dataset: payload of '" + path_ + "' is shorter than the declared arrays");
    char extra;
    if (is.read(&extra, 1))
      throw DataError("dataset: payload of '" + path_ + "' is longer than the declared arrays");

    std::int64_t offset = 0;
    for (const auto& a : arrays_) {
      offsets_[a.name] = offset;
      offset += a.bytes();
    }
  }

  std::string meta(const std::string& key) const {
    const auto it = meta_.find(key);
    if (it == meta_.end()) throw DataError("dataset: '" + path_ + "' is missing field '" + key + "'");
    return it->second;
  }
  std::int64_t meta_int(const std::string& key) const { return std::stoll(meta(key)); }
  double meta_dbl(const std::string& key) const { return std::stod(meta(key)); }
  std::uint64_t meta_u64(const std::string& key) const { return std::stoull(meta(key)); }

  const ArrayDesc& desc(const std::string& name) const {
    for (const auto& a : arrays_)
      if (a.name == name) return a;
    throw DataError("dataset: '" + path_ + "' has no array '" + name + "'");
  }

  void read_into(const std::string& name, const std::string& dtype, void* dst,
                 std::int64_t expect_elements) const {
    const ArrayDesc& d = desc(name);
    if (d.dtype != dtype)
      throw DataError("dataset: array '" + name + "' has dtype " + d.dtype + ", expected " + dtype);
    if (d.elements() != expect_elements)
      throw DataError("dataset: array '" + name + "' has " + std::to_string(d.elements()) +
                      " elements, expected " + std::to_string(expect_elements));
    std::memcpy(dst, payload_.data() + offsets_.at(name), std::size_t(d.bytes()));
  }

  Provenance provenance() const { return {meta("provenance_config_hash"), meta_u64("provenance_seed")}; }

private:
  std::string path_;
  std::map<std::string, std::string> meta_;
  std::vector<ArrayDesc> arrays_;
  std::map<std::string, std::int64_t> offsets_;
  std::vector<char> payload_;
};

// Trajectory arrays shared by the kspace and trajectory kinds.
void put_acquisition(Writer& w, const SpiralAcquisition& acq) {
  const int ni = acq.n_interleaves();
  std::int64_t total = 0;
  for (const auto& il : acq.interleaves) total += il.n_samples();

  std::vector<std::int64_t> counts(ni);
  std::vector<double> kx, ky;
  kx.reserve(total);
  ky.reserve(total);
  std::vector<double> rotation(ni);
  std::vector<std::uint8_t> navigator(ni);
  for (int m = 0; m < ni; ++m) {
    const auto& il = acq.interleaves[m];
    counts[m] = il.n_samples();
    rotation[m] = il.rotation_angle;
    navigator[m] = il.is_navigator ? 1 : 0;
    for (int s = 0; s < il.n_samples(); ++s) {
      kx.push_back(il.samples(s, 0));
      ky.push_back(il.samples(s, 1));
    }
  }
  std::vector<std::int64_t> frames(acq.frames.size() * 2);
  for (std::size_t f = 0; f < acq.frames.size(); ++f) {
    frames[2 * f] = acq.frames[f].begin;
    frames[2 * f + 1] = acq.frames[f].end;
  }

  w.meta("samples_per_readout", acq.samples_per_readout);
  w.meta_double("density_inner", acq.density_inner);
  w.meta_double("density_outer", acq.density_outer);
  w.meta_double("inner_extent", acq.inner_extent);
  w.array("traj_sample_counts", "int64", {ni}, counts.data());
  w.array("traj_kx", "float64", {total}, kx.data());
  w.array("traj_ky", "float64", {total}, ky.data());
  w.array("traj_rotation", "float64", {ni}, rotation.data());
  w.array("traj_navigator", "uint8", {ni}, navigator.data());
  if (!acq.frames.empty())
    w.array("traj_frames", "int64", {std::int64_t(acq.frames.size()), 2}, frames.data());
}

SpiralAcquisition get_acquisition(const Reader& r) {
  SpiralAcquisition acq;
  acq.samples_per_readout = static_cast<int>(r.meta_int("samples_per_readout"));
  acq.density_inner = r.meta_dbl("density_inner");
  acq.density_outer = r.meta_dbl("density_outer");
  acq.inner_extent = r.meta_dbl("inner_extent");

  const auto ni = r.desc("traj_sample_counts").elements();
  std::vector<std::int64_t> counts(ni);
  r.read_into("traj_sample_counts", "int64", counts.data(), ni);
  std::int64_t total = 0;
  for (auto c : counts) total += c;

  std::vector<double> kx(total), ky(total), rotation(ni);
  std::vector<std::uint8_t> navigator(ni);
  r.read_into("traj_kx", "float64", kx.data(), total);
  r.read_into("traj_ky", "float64", ky.data(), total);
  r.read_into("traj_rotation", "float64", rotation.data(), ni);
  r.read_into("traj_navigator", "uint8", navigator.data(), ni);

  acq.interleaves.resize(ni);
  std::int64_t pos = 0;
  for (std::int64_t m = 0; m < ni; ++m) {
    SpiralInterleaf& il = acq.interleaves[m];
    il.samples.resize(counts[m], 2);
    for (std::int64_t s = 0; s < counts[m]; ++s) {
      il.samples(s, 0) = kx[pos];
      il.samples(s, 1) = ky[pos];
      ++pos;
    }
    il.rotation_angle = rotation[m];
    il.is_navigator = navigator[m] != 0;
  }

  bool has_frames = true;
  try {
    r.desc("traj_frames");
  } catch (const DataError&) {
    has_frames = false;
  }
  if (has_frames) {
    const auto nf = r.desc("traj_frames").elements() / 2;
    std::vector<std::int64_t> frames(nf * 2);
    r.read_into("traj_frames", "int64", frames.data(), nf * 2);
    for (std::int64_t f = 0; f < nf; ++f)
      acq.frames.push_back({int(frames[2 * f]), int(frames[2 * f + 1])});
  }
  return acq;
}

}  // namespace

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::images: return "images";
    case DatasetKind::kspace: return "kspace";
    case DatasetKind::trajectory: return "trajectory";
    case DatasetKind::laplacian: return "laplacian";
  }
  throw ParamError("unknown dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "images") return DatasetKind::images;
  if (s == "kspace") return DatasetKind::kspace;
  if (s == "trajectory") return DatasetKind::trajectory;
  if (s == "laplacian") return DatasetKind::laplacian;
  throw DataError("unknown dataset kind '" + s + "'");
}

std::uint64_t fnv1a(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("digest: cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  const std::string content = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a(content.data(), content.size())));
  return buf;
}

void write_images(const std::filesystem::path& path, const ImagesFile& file) {
  Writer w(DatasetKind::images, file.provenance);
  const int grid = file.images.grid;
  const int nf = file.images.n_frames();
  w.meta("grid", grid);
  // Casorati columns are row-major frames, so the payload is [frame, row, col].
  w.array("data", "complex128", {nf, grid, grid}, file.images.casorati.data());
  if (file.cardiac_phase)
    w.array("cardiac_phase", "float64", {nf}, file.cardiac_phase->data());
  if (file.respiratory_phase)
    w.array("respiratory_phase", "float64", {nf}, file.respiratory_phase->data());
  w.save(path);
}

ImagesFile read_images(const std::filesystem::path& path) {
  Reader r(path);
  if (r.meta("kind") != "images") throw DataError("expected an images dataset: " + path.string());
  ImagesFile f;
  const int grid = static_cast<int>(r.meta_int("grid"));
  const auto& d = r.desc("data");
  if (d.dims.size() != 3 || d.dims[1] != grid || d.dims[2] != grid)
    throw DataError("images dataset has inconsistent dimensions");
  const int nf = static_cast<int>(d.dims[0]);
  f.images = ImageSeries(grid, nf);
  r.read_into("data", "complex128", f.images.casorati.data(), std::int64_t(grid) * grid * nf);
  for (const char* name : {"cardiac_phase", "respiratory_phase"}) {
    bool present = true;
    try {
      r.desc(name);
    } catch (const DataError&) {
      present = false;
    }
    if (present) {
      RealVector v(nf);
      r.read_into(name, "float64", v.data(), nf);
      if (std::string(name) == "cardiac_phase")
        f.cardiac_phase = std::move(v);
      else
        f.respiratory_phase = std::move(v);
    }
  }
  f.provenance = r.provenance();
  return f;
}

void write_kspace(const std::filesystem::path& path, const KSpaceFile& file) {
  Writer w(DatasetKind::kspace, file.provenance);
  w.meta("grid", file.grid);
  w.meta("n_coils", file.maps.n_coils());
  w.meta_double("noise_sigma", file.data.noise_sigma);
  put_acquisition(w, file.acquisition);

  w.array("coil_maps", "complex128", {file.maps.n_coils(), std::int64_t(file.grid) * file.grid},
          file.maps.maps.data());

  std::int64_t total_rows = 0;
  for (const auto& frame : file.data.data) total_rows += frame.rows();
  CxMatrix stacked(total_rows, file.data.n_coils());
  std::int64_t row = 0;
  for (const auto& frame : file.data.data) {
    stacked.middleRows(row, frame.rows()) = frame;
    row += frame.rows();
  }
  // Column-major storage: payload is [coil][sample].
  w.array("data", "complex128", {file.data.n_coils(), total_rows}, stacked.data());
  w.save(path);
}

KSpaceFile read_kspace(const std::filesystem::path& path) {
  Reader r(path);
  if (r.meta("kind") != "kspace") throw DataError("expected a kspace dataset: " + path.string());
  KSpaceFile f;
  f.grid = static_cast<int>(r.meta_int("grid"));
  f.acquisition = get_acquisition(r);
  if (!f.acquisition.binned()) throw DataError("kspace dataset must carry frame ranges");

  const int nc = static_cast<int>(r.meta_int("n_coils"));
  f.maps.grid = f.grid;
  f.maps.maps.resize(std::int64_t(f.grid) * f.grid, nc);
  r.read_into("coil_maps", "complex128", f.maps.maps.data(), std::int64_t(f.grid) * f.grid * nc);

  const auto& d = r.desc("data");
  if (d.dims.size() != 2 || d.dims[0] != nc) throw DataError("kspace data array malformed");
  const std::int64_t total_rows = d.dims[1];
  CxMatrix stacked(total_rows, nc);
  r.read_into("data", "complex128", stacked.data(), total_rows * nc);

  f.data.noise_sigma = r.meta_dbl("noise_sigma");
  f.data.data.resize(f.acquisition.n_frames());
  std::int64_t row = 0;
  for (int fr = 0; fr < f.acquisition.n_frames(); ++fr) {
    const std::int64_t rows = f.acquisition.frame_sample_count(fr);
    if (row + rows > total_rows) throw DataError("kspace data shorter than the trajectory demands");
    f.data.data[fr] = stacked.middleRows(row, rows);
    row += rows;
  }
  if (row != total_rows) throw DataError("kspace data longer than the trajectory demands");
  f.provenance = r.provenance();
  return f;
}

void write_trajectory(const std::filesystem::path& path, const TrajectoryFile& file) {
  Writer w(DatasetKind::trajectory, file.provenance);
  put_acquisition(w, file.acquisition);
  w.save(path);
}

TrajectoryFile read_trajectory(const std::filesystem::path& path) {
  Reader r(path);
  if (r.meta("kind") != "trajectory")
    throw DataError("expected a trajectory dataset: " + path.string());
  TrajectoryFile f;
  f.acquisition = get_acquisition(r);
  f.provenance = r.provenance();
  return f;
}

void write_laplacian(const std::filesystem::path& path, const LaplacianFile& file) {
  Writer w(DatasetKind::laplacian, file.provenance);
  const int n = file.laplacian.size();
  w.meta("n_frames", n);
  w.meta_double("gamma", file.laplacian.gamma);
  w.array("laplacian", "float64", {n, n}, file.laplacian.L.data());
  if (file.laplacian.W.size() > 0) w.array("weights", "float64", {n, n}, file.laplacian.W.data());
  w.save(path);
}

LaplacianFile read_laplacian(const std::filesystem::path& path) {
  Reader r(path);
  if (r.meta("kind") != "laplacian")
    throw DataError("expected a laplacian dataset: " + path.string());
  LaplacianFile f;
  const int n = static_cast<int>(r.meta_int("n_frames"));
  f.laplacian.L.resize(n, n);
  r.read_into("laplacian", "float64", f.laplacian.L.data(), std::int64_t(n) * n);
  f.laplacian.gamma = r.meta_dbl("gamma");
  bool has_w = true;
  try {
    r.desc("weights");
  } catch (const DataError&) {
    has_w = false;
  }
  if (has_w) {
    f.laplacian.W.resize(n, n);
    r.read_into("weights", "float64", f.laplacian.W.data(), std::int64_t(n) * n);
  }
  f.provenance = r.provenance();
  return f;
}

DatasetKind probe_kind(const std::filesystem::path& path) {
  Reader r(path);
  return dataset_kind_from_string(r.meta("kind"));
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["tool"] = "spiralstorm";
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["config"] = manifest.config_text;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& [stage, seconds] : manifest.timings)
    timings.push_back({{"stage", stage}, {"seconds", seconds}});
  j["timings"] = timings;
  j["extra"] = manifest.extra;

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("manifest: cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest: cannot open '" + path.string() + "'");
  nlohmann::json j;
  is >> j;
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.config_text = j.at("config").get<std::string>();
  m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  for (const auto& t : j.at("timings"))
    m.timings.emplace_back(t.at("stage").get<std::string>(), t.at("seconds").get<double>());
  m.extra = j.at("extra").get<std::map<std::string, std::string>>();
  return m;
}

void verify_manifest(const std::filesystem::path& path) {
  const RunManifest m = read_manifest(path);
  const auto base = path.parent_path();
  for (const auto& table : {m.inputs, m.outputs}) {
    for (const auto& [file, digest] : table) {
      std::filesystem::path p(file);
      if (p.is_relative()) p = base / p;
      const std::string actual = file_digest(p);
      if (actual != digest)
        throw DataError("manifest: digest mismatch for '" + file + "': recorded " + digest +
                        ", actual " + actual);
    }
  }
}

}  // namespace storm
