#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "osmm/types.hpp"

namespace osmm {

/// Window-clamp-quantize to 8 bits: v <= lo -> 0, v >= hi -> 255, otherwise
/// round((v - lo) / (hi - lo) * 255) with halves rounded up, so the window
/// midpoint maps to 128.
std::uint8_t quantize(double v, double lo, double hi);

/// Grayscale 8-bit PNG bytes for a 2-D array (rows top to bottom).
std::vector<std::uint8_t> encode_png(const Array2& values, double lo, double hi);

void export_png(const std::filesystem::path& path, const Array2& values, double lo, double hi);

}  // namespace osmm
