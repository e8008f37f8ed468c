#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>

#include "planehec/plane_detection.hpp"

namespace planehec {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

struct PlyReadStats {
  std::size_t vertices = 0;
  std::size_t dropped_non_finite = 0;
};

/// Reads the x/y/z float or double properties of the "vertex" element from an
/// ASCII or binary little-endian PLY; other elements and properties are
/// skipped. Non-finite points are dropped (and counted). Errors are
/// Error(kParse) naming the header line or body offset, or Error(kIo).
PointCloud parse_ply(const std::filesystem::path& path, PlyReadStats* stats = nullptr);
PointCloud parse_ply(std::istream& in, PlyReadStats* stats = nullptr);

/// Writes x/y/z as doubles, so a read-back is exact.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);

}  // namespace planehec
