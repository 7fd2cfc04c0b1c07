#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landau/field.hpp"

namespace landau {

// Binary layout, all fields little-endian:
//   offset  0  char[8]  magic "LANDAUSN"
//   offset  8  u32      version (1)
//   offset 12  u32      n
//   offset 16  f64      h
//   offset 24  u64      k
//   offset 32  f64      t
//   offset 40  u32      CRC-32 (zlib polynomial) of the payload bytes
//   offset 44  u32      reserved, 0
//   offset 48  f64[n^3] values, x fastest
inline constexpr char kSnapshotMagic[8] = {'L', 'A', 'N', 'D', 'A', 'U', 'S', 'N'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 48;

struct Snapshot {
    Grid3 grid;
    long k = 0;
    double t = 0.0;
    std::vector<double> values;

    ScalarField field() const { return ScalarField(grid, values); }
};

std::string encode_snapshot(const Snapshot& s);
Snapshot decode_snapshot(const std::string& bytes, const std::string& source = "snapshot");

// Written to a temporary file in the same directory, then renamed.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

void write_snapshot(const std::string& path, const Snapshot& s);
Snapshot read_snapshot(const std::string& path);

}  // namespace landau
