#pragma once

// Raw tensor file: "ATTN" magic, u32 version, u32 order, order x u64 dims,
// then f64 data first-index-fastest. Everything little-endian.

#include "attn/error.hpp"
#include "attn/tensor.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace attn {

inline constexpr std::array<char, 4> kTensorMagic{'A', 'T', 'T', 'N'};
inline constexpr std::uint32_t kTensorFormatVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "raw tensor I/O assumes a little-endian host");

template <class T>
void write_le(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    require(static_cast<bool>(is), ErrorCode::format_error, "truncated tensor stream");
    return value;
}

} // namespace detail

inline void write_tensor(std::ostream& os, const DenseTensor& t) {
    os.write(kTensorMagic.data(), kTensorMagic.size());
    detail::write_le<std::uint32_t>(os, kTensorFormatVersion);
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
    for (auto d : t.shape()) detail::write_le<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    require(static_cast<bool>(os), ErrorCode::io_failure, "tensor write failed");
}

inline DenseTensor read_tensor(std::istream& is) {
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    require(static_cast<bool>(is) && magic == kTensorMagic, ErrorCode::format_error,
            "missing ATTN magic");
    const auto version = detail::read_le<std::uint32_t>(is);
    require(version == kTensorFormatVersion, ErrorCode::format_error,
            "unsupported tensor format version " + std::to_string(version));
    const auto order = detail::read_le<std::uint32_t>(is);
    require(order >= 1 && order <= 64, ErrorCode::format_error, "implausible tensor order");
    Shape shape(order);
    for (auto& d : shape) d = static_cast<std::size_t>(detail::read_le<std::uint64_t>(is));
    for (auto d : shape) require(d >= 1, ErrorCode::format_error, "zero-sized dimension");
    std::vector<double> data(shape_product(shape));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    require(static_cast<bool>(is), ErrorCode::format_error, "truncated tensor data");
    return DenseTensor(std::move(shape), std::move(data));
}

inline void save_tensor(const std::filesystem::path& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot open " + path.string());
    write_tensor(os, t);
}

inline DenseTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    return read_tensor(is);
}

inline bool has_tensor_magic(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    return static_cast<bool>(is) && magic == kTensorMagic;
}

} // namespace attn
