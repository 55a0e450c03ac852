#include "osmm/png.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <zlib.h>

namespace osmm {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(std::uint8_t(v >> s));
}

void chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
  put_u32(out, std::uint32_t(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + start, uInt(out.size() - start));
  put_u32(out, std::uint32_t(crc));
}

}  // namespace

std::uint8_t quantize(double v, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("PNG window needs lo < hi");
  if (!(v > lo)) return 0;  // also maps NaN to 0
  if (v >= hi) return 255;
  return std::uint8_t(std::min(255.0, std::floor((v - lo) / (hi - lo) * 255.0 + 0.5)));
}

std::vector<std::uint8_t> encode_png(const Array2& values, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("PNG window needs lo < hi");
  const auto h = std::uint32_t(values.rows()), w = std::uint32_t(values.cols());
  if (h == 0 || w == 0) throw ShapeError("cannot export an empty array");

  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(h) * (w + 1));
  for (std::uint32_t j = 0; j < h; ++j) {
    raw.push_back(0);  // filter: none
    for (std::uint32_t i = 0; i < w; ++i) raw.push_back(quantize(values(j, i), lo, hi));
  }
  uLongf zlen = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> z(zlen);
  if (compress2(z.data(), &zlen, raw.data(), uLong(raw.size()), 9) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  z.resize(zlen);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, w);
  put_u32(ihdr, h);
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});  // 8-bit grayscale, deflate, no interlace
  chunk(out, "IHDR", ihdr);
  chunk(out, "IDAT", z);
  chunk(out, "IEND", {});
  return out;
}

void export_png(const std::filesystem::path& path, const Array2& values, double lo, double hi) {
  const auto bytes = encode_png(values, lo, hi);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace osmm
