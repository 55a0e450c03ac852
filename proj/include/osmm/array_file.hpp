#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "osmm/sde.hpp"
#include "osmm/tiny_net.hpp"
#include "osmm/types.hpp"

namespace osmm {

/// On-disk layout (little-endian):
///   "OSMMARR\0" | u32 version | u32 dtype (1 = f64) | u32 rank | u64 dims[rank]
///   | u32 n_meta | n_meta x (u32 len, key bytes, u32 len, value bytes)
///   | f64 payload[prod(dims)] | u32 crc32 of everything before it
struct ArrayFile {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kDtypeF64 = 1;

  std::vector<std::uint64_t> shape;
  std::vector<double> data;  // row-major
  std::map<std::string, std::string> metadata;

  std::uint64_t element_count() const;
  const std::string& require(const std::string& key) const;  // ShapeError if absent
};

std::vector<std::uint8_t> encode_array(const ArrayFile& a);
ArrayFile decode_array(const std::vector<std::uint8_t>& bytes);

void save_array(const std::filesystem::path& path, const ArrayFile& a);
ArrayFile load_array(const std::filesystem::path& path);

/// Formats a double so that std::stod gives the same bits back.
std::string format_exact(double v);

// Typed wrappers. Each tags metadata "kind"; loading the wrong kind is a ShapeError.
void save_image(const std::filesystem::path& path, const Image& img,
                const std::map<std::string, std::string>& extra = {});
Image load_image(const std::filesystem::path& path);

void save_sinogram(const std::filesystem::path& path, const Sinogram& s,
                   const std::map<std::string, std::string>& extra = {});
Sinogram load_sinogram(const std::filesystem::path& path);

/// Masked sinograms are stored as sinograms with a "mask" entry of 0/1 characters.
void save_masked_sinogram(const std::filesystem::path& path, const MaskedSinogram& s,
                          const std::map<std::string, std::string>& extra = {});
MaskedSinogram load_masked_sinogram(const std::filesystem::path& path);

struct Checkpoint {
  NetArchitecture architecture;
  SigmaSchedule schedule;
  Eigen::VectorXd parameters;
  std::map<std::string, std::string> extra;
};

void save_checkpoint(const std::filesystem::path& path, const TinyScoreNet& net, const SigmaSchedule& schedule,
                     const std::map<std::string, std::string>& extra = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);
TinyScoreNet restore_net(const Checkpoint& c);

}  // namespace osmm
