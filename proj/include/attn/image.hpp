#pragma once

// 8-bit binary PPM (P6) images as (rows, cols, 3) tensors scaled to [0, 1].

#include "attn/error.hpp"
#include "attn/tensor.hpp"
#include "attn/tensor_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace attn {

namespace detail {

inline std::string ppm_token(std::istream& is) {
    std::string tok;
    char ch = 0;
    while (is.get(ch)) {
        if (ch == '#') {
            std::string skip;
            std::getline(is, skip);
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            tok.push_back(ch);
            break;
        }
    }
    while (is.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) tok.push_back(ch);
    return tok;  // the single whitespace after the token has been consumed
}

} // namespace detail

inline DenseTensor read_ppm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorCode::io_failure, "cannot open " + path.string());
    require(detail::ppm_token(is) == "P6", ErrorCode::unsupported_format,
            path.string() + " is neither a raw tensor nor a binary PPM");
    std::size_t width = 0, height = 0, maxval = 0;
    try {
        width = std::stoul(detail::ppm_token(is));
        height = std::stoul(detail::ppm_token(is));
        maxval = std::stoul(detail::ppm_token(is));
    } catch (const std::exception&) {
        throw Error(ErrorCode::format_error, "malformed PPM header in " + path.string());
    }
    require(width >= 1 && height >= 1, ErrorCode::format_error, "empty PPM image");
    require(maxval >= 1 && maxval <= 255, ErrorCode::unsupported_format, "only 8-bit PPM is supported");

    std::vector<unsigned char> raw(width * height * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<bool>(is), ErrorCode::format_error, "truncated PPM pixel data");

    DenseTensor img({height, width, 3});
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.at({y, x, c}) = raw[(y * width + x) * 3 + c] * scale;
    return img;
}

/// Writes an (rows, cols, 3) tensor, clamping to [0, 1] and rounding to 8 bits.
inline void write_ppm(const std::filesystem::path& path, const DenseTensor& img) {
    require(img.order() == 3 && img.dim(2) == 3, ErrorCode::shape_mismatch, "PPM needs a (rows, cols, 3) tensor");
    const std::size_t height = img.dim(0), width = img.dim(1);
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorCode::io_failure, "cannot open " + path.string());
    os << "P6\n" << width << ' ' << height << "\n255\n";
    std::vector<unsigned char> raw(width * height * 3);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at({y, x, c}), 0.0, 1.0);
                raw[(y * width + x) * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<bool>(os), ErrorCode::io_failure, "write failed: " + path.string());
}

/// Loads a raw tensor file as-is or a PPM scaled to [0, 1], then optionally
/// reshapes (e.g. 256x256x3 -> 16x16x16x16x3).
inline DenseTensor load_image_tensor(const std::filesystem::path& path, const std::optional<Shape>& reshape_to = {}) {
    DenseTensor t = has_tensor_magic(path) ? load_tensor(path) : read_ppm(path);
    if (!reshape_to) return t;
    require(shape_product(*reshape_to) == t.size(), ErrorCode::shape_mismatch,
            "cannot reshape " + shape_string(t.shape()) + " to " + shape_string(*reshape_to));
    return reshape(t, *reshape_to);
}

} // namespace attn
