#pragma once

#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/pnm.hpp"
#include "ganaug/core/resize.hpp"
#include "ganaug/core/tensor.hpp"

namespace ganaug::report {

namespace detail {

// 3x5 bitmap glyphs, scaled 2x at render time; enough for row captions
inline const char* glyph(char c) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
        case 'a': return "010101111101101";
        case 'b': return "110101110101110";
        case 'c': return "011100100100011";
        case 'd': return "110101101101110";
        case 'e': return "111100110100111";
        case 'f': return "111100110100100";
        case 'g': return "011100101101011";
        case 'h': return "101101111101101";
        case 'i': return "111010010010111";
        case 'j': return "001001001101010";
        case 'k': return "101110100110101";
        case 'l': return "100100100100111";
        case 'm': return "101111111101101";
        case 'n': return "101111111111101";
        case 'o': return "010101101101010";
        case 'p': return "110101110100100";
        case 'q': return "010101101011001";
        case 'r': return "110101110110101";
        case 's': return "011100010001110";
        case 't': return "111010010010010";
        case 'u': return "101101101101011";
        case 'v': return "101101101010010";
        case 'w': return "101101111111101";
        case 'x': return "101010010010101";
        case 'y': return "101101010010010";
        case 'z': return "111001010100111";
        case '0': return "010101101101010";
        case '1': return "010110010010111";
        case '2': return "110001010100111";
        case '3': return "110001010001110";
        case '4': return "101101111001001";
        case '5': return "111100110001110";
        case '6': return "011100110101010";
        case '7': return "111001010010010";
        case '8': return "010101010101010";
        case '9': return "010101011001110";
        case '-': return "000000111000000";
        case '_': return "000000000000111";
        case '.': return "000000000000010";
        case '/': return "001001010100100";
        default: return "000000000000000";  // space and unknown
    }
}

inline void draw_text(TensorF& canvas, int x0, int y0, const std::string& text, float value = 1.0f) {
    const int scale = 2;
    int x = x0;
    for (char ch : text) {
        const char* g = glyph(ch);
        for (int r = 0; r < 5; ++r)
            for (int c = 0; c < 3; ++c)
                if (g[r * 3 + c] == '1')
                    for (int sy = 0; sy < scale; ++sy)
                        for (int sx = 0; sx < scale; ++sx) {
                            const int py = y0 + r * scale + sy;
                            const int px = x + c * scale + sx;
                            if (py >= 0 && py < canvas.h && px >= 0 && px < canvas.w)
                                for (int cc = 0; cc < 3; ++cc) canvas.at(0, cc, py, px) = value;
                        }
        x += 4 * scale;
        if (x >= canvas.w) break;
    }
}

}  // namespace detail

struct GridLayout {
    int columns = 5;
    int padding = 2;
    std::vector<std::string> row_captions;  // optional, one per row
    float background = 0.15f;
};

// Tiles images into a rows x columns grid (blank cells where the count does
// not fill the last row), with an optional caption gutter on the left.
// Layout is deterministic; images are resampled to the first image's size.
inline TensorF make_grid(const std::vector<TensorF>& images, const GridLayout& layout) {
    check_arg(!images.empty(), "report grid needs at least one image");
    check_arg(layout.columns >= 1, "columns must be >= 1");
    const int cell_h = images[0].h;
    const int cell_w = images[0].w;
    const int cols = layout.columns;
    const int rows = (static_cast<int>(images.size()) + cols - 1) / cols;
    const int caption_w = layout.row_captions.empty() ? 0 : 96;
    const int pad = layout.padding;

    TensorF canvas(1, 3, rows * (cell_h + pad) + pad, caption_w + cols * (cell_w + pad) + pad);
    canvas.fill(layout.background);

    for (size_t i = 0; i < images.size(); ++i) {
        TensorF img = images[i];
        check_arg(img.c == 3, "grid images must be RGB");
        if (img.h != cell_h || img.w != cell_w) img = resize_bilinear(img, cell_h, cell_w);
        const int r = static_cast<int>(i) / cols;
        const int c = static_cast<int>(i) % cols;
        const int y0 = pad + r * (cell_h + pad);
        const int x0 = caption_w + pad + c * (cell_w + pad);
        for (int ch = 0; ch < 3; ++ch)
            for (int y = 0; y < cell_h; ++y)
                std::copy(img.plane(0, ch) + y * cell_w, img.plane(0, ch) + (y + 1) * cell_w,
                          canvas.plane(0, ch) + (y0 + y) * canvas.w + x0);
    }

    for (size_t r = 0; r < layout.row_captions.size() && static_cast<int>(r) < rows; ++r) {
        const int y0 = pad + static_cast<int>(r) * (cell_h + pad) + cell_h / 2 - 5;
        detail::draw_text(canvas, pad + 2, y0, layout.row_captions[r]);
    }
    return canvas;
}

inline void report_grid(const std::vector<TensorF>& images, const GridLayout& layout,
                        const std::filesystem::path& out_path) {
    write_ppm(out_path, make_grid(images, layout));
}

}  // namespace ganaug::report
