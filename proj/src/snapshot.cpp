#include "landau/snapshot.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "landau/errors.hpp"

namespace landau {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

std::uint32_t payload_crc(const std::string& bytes, std::size_t offset) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto* data = reinterpret_cast<const Bytef*>(bytes.data() + offset);
    std::size_t left = bytes.size() - offset;
    while (left > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string encode_snapshot(const Snapshot& s) {
    if (s.values.size() != s.grid.size()) throw DimensionError("snapshot values do not match the grid");
    std::string out;
    out.reserve(kSnapshotHeaderBytes + 8 * s.values.size());
    out.append(kSnapshotMagic, 8);
    put_u32(out, kSnapshotVersion);
    put_u32(out, static_cast<std::uint32_t>(s.grid.n));
    put_f64(out, s.grid.h);
    put_u64(out, static_cast<std::uint64_t>(s.k));
    put_f64(out, s.t);
    put_u32(out, 0);  // checksum, patched below
    put_u32(out, 0);
    for (double v : s.values) put_f64(out, v);
    const std::uint32_t crc = payload_crc(out, kSnapshotHeaderBytes);
    for (int i = 0; i < 4; ++i) out[40 + i] = static_cast<char>((crc >> (8 * i)) & 0xff);
    return out;
}

Snapshot decode_snapshot(const std::string& bytes, const std::string& source) {
    if (bytes.size() < kSnapshotHeaderBytes) throw CorruptSnapshot(source + ": truncated header");
    if (std::memcmp(bytes.data(), kSnapshotMagic, 8) != 0) throw CorruptSnapshot(source + ": bad magic");
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
    if (version != kSnapshotVersion)
        throw CorruptSnapshot(source + ": unsupported version " + std::to_string(version));
    const auto n = static_cast<int>(get_le(bytes, 12, 4));
    const double h = std::bit_cast<double>(get_le(bytes, 16, 8));
    Snapshot s;
    try {
        s.grid = Grid3(n, h);
    } catch (const Error& e) {
        throw CorruptSnapshot(source + ": invalid grid (" + e.what() + ")");
    }
    s.k = static_cast<long>(get_le(bytes, 24, 8));
    s.t = std::bit_cast<double>(get_le(bytes, 32, 8));
    const auto crc = static_cast<std::uint32_t>(get_le(bytes, 40, 4));
    if (bytes.size() != kSnapshotHeaderBytes + 8 * s.grid.size())
        throw CorruptSnapshot(source + ": payload size does not match the grid");
    if (payload_crc(bytes, kSnapshotHeaderBytes) != crc) throw CorruptSnapshot(source + ": checksum mismatch");
    s.values.resize(s.grid.size());
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.values[i] = std::bit_cast<double>(get_le(bytes, kSnapshotHeaderBytes + 8 * i, 8));
    return s;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f) throw Error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_snapshot(const std::string& path, const Snapshot& s) { write_file_atomic(path, encode_snapshot(s)); }

Snapshot read_snapshot(const std::string& path) {
    std::string bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        throw CorruptSnapshot(e.what());
    }
    return decode_snapshot(bytes, path);
}

}  // namespace landau
