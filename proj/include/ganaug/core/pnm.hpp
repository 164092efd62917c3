#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "ganaug/core/check.hpp"
#include "ganaug/core/tensor.hpp"

namespace ganaug {

// Lossless 8-bit raster I/O: binary PPM (P6) for RGB images, PGM (P5) for
// single-channel masks. Float values in [0,1] quantize as round(v*255).

inline unsigned char quantize_u8(float v) {
    const float scaled = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
    return static_cast<unsigned char>(scaled);
}

inline void write_pnm(const std::filesystem::path& path, const TensorF& img) {
    check_arg(img.n == 1 && (img.c == 3 || img.c == 1), "write_pnm expects a single image with 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    check(out.good(), "cannot open for writing: ", path.string());
    out << (img.c == 3 ? "P6" : "P5") << "\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.w) * img.c);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int ci = 0; ci < img.c; ++ci) row[static_cast<size_t>(x) * img.c + ci] = quantize_u8(img.at(0, ci, y, x));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    check(out.good(), "write failed: ", path.string());
}

inline void write_ppm(const std::filesystem::path& path, const TensorF& img) {
    check_arg(img.c == 3, "write_ppm expects 3 channels");
    write_pnm(path, img);
}

inline void write_pgm(const std::filesystem::path& path, const TensorF& img) {
    check_arg(img.c == 1, "write_pgm expects 1 channel");
    write_pnm(path, img);
}

namespace detail {
inline int read_pnm_int(std::istream& in) {
    // skips whitespace and '#' comments per the PNM grammar
    int ch = in.get();
    while (ch == '#' || std::isspace(ch)) {
        if (ch == '#')
            while (ch != '\n' && ch != EOF) ch = in.get();
        ch = in.get();
    }
    check(ch != EOF, "unexpected end of PNM header");
    int value = 0;
    while (std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        ch = in.get();
    }
    return value;
}
}  // namespace detail

inline TensorF read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "cannot open image: ", path.string());
    char p = 0, kind = 0;
    in.get(p);
    in.get(kind);
    check(p == 'P' && (kind == '6' || kind == '5'), "unsupported raster format in ", path.string());
    const int w = detail::read_pnm_int(in);
    const int h = detail::read_pnm_int(in);
    const int maxval = detail::read_pnm_int(in);
    check(maxval == 255, "only 8-bit rasters supported: ", path.string());
    const int channels = (kind == '6') ? 3 : 1;
    TensorF img(1, channels, h, w);
    std::vector<unsigned char> row(static_cast<size_t>(w) * channels);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        check(in.good(), "truncated raster data: ", path.string());
        for (int x = 0; x < w; ++x)
            for (int ci = 0; ci < channels; ++ci)
                img.at(0, ci, y, x) = static_cast<float>(row[static_cast<size_t>(x) * channels + ci]) / 255.0f;
    }
    return img;
}

}  // namespace ganaug
