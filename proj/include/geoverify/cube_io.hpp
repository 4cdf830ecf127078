#pragma once

// Binary cube format "GVC1", all multi-byte fields little-endian:
//
//   magic        4 bytes  "GVC1"
//   version      u16      1
//   orientation  u8       bit0 = latitudes stored north-to-south,
//                         bit1 = longitudes stored west-to-east
//   n_lat n_lon n_chan    u32 each
//   lat_start lat_step lon_start lon_step   f64 each
//   valid_time   i64      UNIX seconds UTC
//   catalog      n_chan x (u32 byte length, UTF-8 "(name,level,role)")
//   payload      f32 x n_chan*n_lat*n_lon, channel-major then row-major

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"

namespace geoverify {

inline constexpr std::array<char, 4> kCubeMagic = {'G', 'V', 'C', '1'};
inline constexpr std::uint16_t kCubeVersion = 1;

struct CubeFileHeader {
    std::uint16_t version = kCubeVersion;
    std::uint8_t orientation = 0;
    GridSpec spec;
    UnixTime valid_time = 0;
    VariableCatalog catalog;

    std::uint64_t payload_bytes() const {
        return 4ull * catalog.size() * spec.n_lat * spec.n_lon;
    }
};

inline std::uint8_t orientation_flags(const GridSpec& g) {
    std::uint8_t f = 0;
    if (g.lat_step < 0.0) f |= 1u;
    if (g.lon_step > 0.0) f |= 2u;
    return f;
}

/// "(Z,500,io)", "(T2M,surface,io)", "(LSM,surface,input)"
inline std::string encode_catalog_entry(const VariableId& v) {
    return "(" + v.name + "," + v.level_text() + "," +
           (v.role == Role::InputOnly ? "input" : "io") + ")";
}

inline VariableId decode_catalog_entry(std::string_view s) {
    auto fail = [&] {
        return Error(ErrorKind::BadMagic, "malformed catalog entry '" + std::string(s) + "'");
    };
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') throw fail();
    s = s.substr(1, s.size() - 2);
    const auto c1 = s.find(',');
    const auto c2 = s.rfind(',');
    if (c1 == std::string_view::npos || c1 == c2) throw fail();
    VariableId v;
    v.name = std::string(s.substr(0, c1));
    const auto level = s.substr(c1 + 1, c2 - c1 - 1);
    const auto role = s.substr(c2 + 1);
    if (v.name.empty()) throw fail();
    if (level == "surface") {
        v.level = kSurface;
    } else {
        try {
            std::size_t used = 0;
            v.level = std::stoi(std::string(level), &used);
            if (used != level.size() || v.level <= 0) throw fail();
        } catch (const std::logic_error&) {
            throw fail();
        }
    }
    if (role == "io") v.role = Role::InputOutput;
    else if (role == "input") v.role = Role::InputOnly;
    else throw fail();
    return v;
}

namespace detail {

class LeWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <class T>
    void scalar(T v) {
        auto raw = std::bit_cast<std::array<char, sizeof(T)>>(v);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        bytes(raw.data(), raw.size());
    }
    const std::vector<char>& data() const { return buf_; }

private:
    std::vector<char> buf_;
};

class LeReader {
public:
    LeReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw Error(ErrorKind::TruncatedPayload, path_ + ": header ends early");
    }
    template <class T>
    T scalar() {
        std::array<char, sizeof(T)> raw;
        bytes(raw.data(), raw.size());
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }

private:
    std::istream& in_;
    std::string path_;
};

inline CubeFileHeader read_header(std::istream& in, const std::string& path) {
    LeReader r(in, path);
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (in.gcount() != 4 || magic != kCubeMagic)
        throw Error(ErrorKind::BadMagic, path + ": not a GVC1 cube file");
    CubeFileHeader h;
    h.version = r.scalar<std::uint16_t>();
    if (h.version != kCubeVersion)
        throw Error(ErrorKind::UnsupportedVersion,
                    path + ": cube format version " + std::to_string(h.version));
    h.orientation = r.scalar<std::uint8_t>();
    h.spec.n_lat = r.scalar<std::uint32_t>();
    h.spec.n_lon = r.scalar<std::uint32_t>();
    const std::uint32_t n_chan = r.scalar<std::uint32_t>();
    h.spec.lat_start = r.scalar<double>();
    h.spec.lat_step = r.scalar<double>();
    h.spec.lon_start = r.scalar<double>();
    h.spec.lon_step = r.scalar<double>();
    h.valid_time = r.scalar<std::int64_t>();
    h.spec.validate();
    if (h.orientation != orientation_flags(h.spec))
        throw Error(ErrorKind::InvalidGrid, path + ": orientation flag disagrees with grid steps");
    std::vector<VariableId> entries;
    entries.reserve(n_chan);
    for (std::uint32_t c = 0; c < n_chan; ++c) {
        const auto len = r.scalar<std::uint32_t>();
        if (len > 4096) throw Error(ErrorKind::BadMagic, path + ": oversized catalog entry");
        std::string text(len, '\0');
        r.bytes(text.data(), len);
        entries.push_back(decode_catalog_entry(text));
    }
    h.catalog = VariableCatalog(std::move(entries));
    return h;
}

}  // namespace detail

inline void write_cube(const FieldCube& cube, const std::filesystem::path& path) {
    const GridSpec& g = cube.spec();
    detail::LeWriter w;
    w.bytes(kCubeMagic.data(), kCubeMagic.size());
    w.scalar<std::uint16_t>(kCubeVersion);
    w.scalar<std::uint8_t>(orientation_flags(g));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(g.n_lat));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(g.n_lon));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(cube.n_chan()));
    w.scalar<double>(g.lat_start);
    w.scalar<double>(g.lat_step);
    w.scalar<double>(g.lon_start);
    w.scalar<double>(g.lon_step);
    w.scalar<std::int64_t>(cube.valid_time());
    for (const VariableId& v : cube.catalog()) {
        const std::string text = encode_catalog_entry(v);
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
        w.bytes(text.data(), text.size());
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    const auto values = cube.values();
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(float)));
    } else {
        detail::LeWriter payload;
        for (float v : values) payload.scalar<float>(v);
        out.write(payload.data().data(), static_cast<std::streamsize>(payload.data().size()));
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

inline CubeFileHeader read_cube_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return detail::read_header(in, path.string());
}

inline FieldCube read_cube(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    CubeFileHeader h = detail::read_header(in, path.string());
    std::vector<float> values(h.catalog.size() * h.spec.size());
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (static_cast<std::uint64_t>(in.gcount()) != h.payload_bytes())
        throw Error(ErrorKind::TruncatedPayload,
                    path.string() + ": payload has " + std::to_string(in.gcount()) +
                        " bytes, header implies " + std::to_string(h.payload_bytes()));
    if constexpr (std::endian::native == std::endian::big) {
        for (float& v : values) {
            auto raw = std::bit_cast<std::array<char, 4>>(v);
            std::reverse(raw.begin(), raw.end());
            v = std::bit_cast<float>(raw);
        }
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]))
            throw Error(ErrorKind::NonFiniteValue,
                        path.string() + ": non-finite value at flat index " + std::to_string(k));
    }
    return FieldCube(h.spec, std::move(h.catalog), h.valid_time, std::move(values));
}

}  // namespace geoverify
