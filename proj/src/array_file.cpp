#include "osmm/array_file.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace osmm {

namespace {

constexpr char kMagic[8] = {'O', 'S', 'M', 'M', 'A', 'R', 'R', '\0'};

class Writer {
 public:
  std::vector<std::uint8_t> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    uint(std::uint32_t(s.size()));
    raw(s.data(), s.size());
  }
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}

  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw TruncatedError("array file is truncated");
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str() {
    const auto n = uint<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths
  while (n > 0) {
    const uInt chunk = uInt(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return std::uint32_t(crc);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw FormatError("metadata '" + key + "' is not a number");
  return v;
}

int parse_int(const std::string& key, const std::string& s) {
  int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw FormatError("metadata '" + key + "' is not an integer");
  return v;
}

void require_kind(const ArrayFile& a, const std::string& kind) {
  auto it = a.metadata.find("kind");
  const std::string got = it == a.metadata.end() ? "<none>" : it->second;
  if (got != kind) throw ShapeError("expected a " + kind + " file, found kind " + got);
  if (a.shape.size() != 2) throw ShapeError(kind + " file must be rank 2");
}

Array2 to_array2(const ArrayFile& a) {
  Array2 out(Eigen::Index(a.shape[0]), Eigen::Index(a.shape[1]));
  std::memcpy(out.data(), a.data.data(), a.data.size() * sizeof(double));
  return out;
}

ArrayFile from_array2(const Array2& v, const std::map<std::string, std::string>& extra) {
  ArrayFile a;
  a.shape = {std::uint64_t(v.rows()), std::uint64_t(v.cols())};
  a.data.assign(v.data(), v.data() + v.size());
  a.metadata = extra;
  return a;
}

void put_geometry(ArrayFile& a, const SinogramGeometry& g) {
  a.metadata["num_views"] = std::to_string(g.num_views);
  a.metadata["num_detectors"] = std::to_string(g.num_detectors);
  a.metadata["detector_spacing"] = format_exact(g.detector_spacing);
  a.metadata["detector_offset"] = format_exact(g.detector_offset);
}

SinogramGeometry get_geometry(const ArrayFile& a) {
  SinogramGeometry g;
  g.num_views = parse_int("num_views", a.require("num_views"));
  g.num_detectors = parse_int("num_detectors", a.require("num_detectors"));
  g.detector_spacing = parse_double("detector_spacing", a.require("detector_spacing"));
  g.detector_offset = parse_double("detector_offset", a.require("detector_offset"));
  return g;
}

}  // namespace

std::uint64_t ArrayFile::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const std::string& ArrayFile::require(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw ShapeError("array file lacks metadata key '" + key + "'");
  return it->second;
}

std::string format_exact(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<std::uint8_t> encode_array(const ArrayFile& a) {
  if (a.element_count() != a.data.size()) throw ShapeError("array payload does not match its shape");
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.uint(ArrayFile::kVersion);
  w.uint(ArrayFile::kDtypeF64);
  w.uint(std::uint32_t(a.shape.size()));
  for (auto d : a.shape) w.uint(std::uint64_t(d));
  w.uint(std::uint32_t(a.metadata.size()));
  for (const auto& [k, v] : a.metadata) {
    w.str(k);
    w.str(v);
  }
  for (double v : a.data) w.f64(v);
  w.uint(crc_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

ArrayFile decode_array(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    if (bytes.size() < sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, bytes.size()) == 0)
      throw TruncatedError("array file is truncated");
    throw FormatError("not an array file (bad magic)");
  }
  // Parse the header against the full buffer minus the trailing crc, so a short
  // file reports truncation before the checksum is consulted.
  const std::size_t body_end = bytes.size() >= 4 ? bytes.size() - 4 : 0;
  Reader r(bytes, bytes.size());
  r.need(sizeof(kMagic));
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.uint<std::uint8_t>();
  const auto version = r.uint<std::uint32_t>();
  if (version != ArrayFile::kVersion)
    throw VersionError("array file version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(ArrayFile::kVersion) + ")");
  const auto dtype = r.uint<std::uint32_t>();
  if (dtype != ArrayFile::kDtypeF64) throw FormatError("unsupported dtype tag " + std::to_string(dtype));

  ArrayFile a;
  const auto rank = r.uint<std::uint32_t>();
  r.need(std::uint64_t(rank) * 8);
  for (std::uint32_t i = 0; i < rank; ++i) a.shape.push_back(r.uint<std::uint64_t>());
  const auto n_meta = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    a.metadata[k] = r.str();
  }
  const std::uint64_t count = a.element_count();
  if (count > r.remaining() / 8) throw TruncatedError("array file is truncated");
  if (r.remaining() != count * 8 + 4) {
    if (r.remaining() < count * 8 + 4) throw TruncatedError("array file is truncated");
    throw FormatError("array file has trailing bytes");
  }
  const std::uint32_t stored = std::uint32_t(bytes[body_end]) | std::uint32_t(bytes[body_end + 1]) << 8 |
                               std::uint32_t(bytes[body_end + 2]) << 16 | std::uint32_t(bytes[body_end + 3]) << 24;
  if (crc_of(bytes.data(), body_end) != stored) throw ChecksumError("array file checksum mismatch");
  a.data.resize(count);
  for (auto& v : a.data) v = r.f64();
  return a;
}

void save_array(const std::filesystem::path& path, const ArrayFile& a) {
  const auto bytes = encode_array(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ArrayFile load_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_array(bytes);
}

void save_image(const std::filesystem::path& path, const Image& img, const std::map<std::string, std::string>& extra) {
  ArrayFile a = from_array2(img.values, extra);
  a.metadata["kind"] = "image";
  a.metadata["pixel_size"] = format_exact(img.pixel_size);
  save_array(path, a);
}

Image load_image(const std::filesystem::path& path) {
  const ArrayFile a = load_array(path);
  require_kind(a, "image");
  return Image(to_array2(a), parse_double("pixel_size", a.require("pixel_size")));
}

void save_sinogram(const std::filesystem::path& path, const Sinogram& s,
                   const std::map<std::string, std::string>& extra) {
  s.validate_shape();
  ArrayFile a = from_array2(s.values, extra);
  a.metadata["kind"] = "sinogram";
  put_geometry(a, s.geometry);
  save_array(path, a);
}

Sinogram load_sinogram(const std::filesystem::path& path) {
  const ArrayFile a = load_array(path);
  require_kind(a, "sinogram");
  return Sinogram(get_geometry(a), to_array2(a));
}

void save_masked_sinogram(const std::filesystem::path& path, const MaskedSinogram& s,
                          const std::map<std::string, std::string>& extra) {
  if (s.mask.size() != s.data.geometry.num_views) throw ShapeError("mask length does not match view count");
  auto meta = extra;
  meta["mask"] = s.mask.to_string();
  save_sinogram(path, s.data, meta);
}

MaskedSinogram load_masked_sinogram(const std::filesystem::path& path) {
  const ArrayFile a = load_array(path);
  require_kind(a, "sinogram");
  MaskedSinogram s{Sinogram(get_geometry(a), to_array2(a)), ViewMask::parse(a.require("mask"))};
  if (s.mask.size() != s.data.geometry.num_views) throw ShapeError("stored mask length does not match view count");
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const TinyScoreNet& net, const SigmaSchedule& schedule,
                     const std::map<std::string, std::string>& extra) {
  const auto& arch = net.architecture();
  ArrayFile a;
  a.shape = {std::uint64_t(net.parameters().size())};
  a.data.assign(net.parameters().data(), net.parameters().data() + net.parameters().size());
  a.metadata = extra;
  a.metadata["kind"] = "checkpoint";
  a.metadata["arch.rows"] = std::to_string(arch.rows);
  a.metadata["arch.cols"] = std::to_string(arch.cols);
  a.metadata["arch.channels"] = std::to_string(arch.channels);
  a.metadata["arch.embed"] = std::to_string(arch.embed);
  a.metadata["arch.template_stride"] = std::to_string(arch.template_stride);
  a.metadata["arch.sigma_data"] = format_exact(arch.sigma_data);
  a.metadata["schedule.sigma_min"] = format_exact(schedule.sigma_min);
  a.metadata["schedule.sigma_max"] = format_exact(schedule.sigma_max);
  a.metadata["schedule.steps"] = std::to_string(schedule.steps);
  save_array(path, a);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  ArrayFile a = load_array(path);
  auto it = a.metadata.find("kind");
  if (it == a.metadata.end() || it->second != "checkpoint" || a.shape.size() != 1)
    throw ShapeError("file is not a model checkpoint");
  Checkpoint c;
  c.architecture.rows = parse_int("arch.rows", a.require("arch.rows"));
  c.architecture.cols = parse_int("arch.cols", a.require("arch.cols"));
  c.architecture.channels = parse_int("arch.channels", a.require("arch.channels"));
  c.architecture.embed = parse_int("arch.embed", a.require("arch.embed"));
  c.architecture.template_stride = parse_int("arch.template_stride", a.require("arch.template_stride"));
  c.architecture.sigma_data = parse_double("arch.sigma_data", a.require("arch.sigma_data"));
  c.schedule.sigma_min = parse_double("schedule.sigma_min", a.require("schedule.sigma_min"));
  c.schedule.sigma_max = parse_double("schedule.sigma_max", a.require("schedule.sigma_max"));
  c.schedule.steps = parse_int("schedule.steps", a.require("schedule.steps"));
  c.architecture.validate();
  c.schedule.validate();
  if (Eigen::Index(a.data.size()) != c.architecture.parameter_count())
    throw ShapeError("checkpoint parameter count does not match its architecture");
  c.parameters = Eigen::Map<const Eigen::VectorXd>(a.data.data(), Eigen::Index(a.data.size()));
  for (auto& [k, v] : a.metadata)
    if (k != "kind" && k.rfind("arch.", 0) != 0 && k.rfind("schedule.", 0) != 0) c.extra[k] = v;
  return c;
}

TinyScoreNet restore_net(const Checkpoint& c) {
  TinyScoreNet net(c.architecture);
  net.parameters() = c.parameters;
  return net;
}

}  // namespace osmm
