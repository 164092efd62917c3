#pragma once

#include <algorithm>
#include <cmath>

#include "ganaug/core/tensor.hpp"

namespace ganaug {

// Bilinear resample (half-pixel centers). Data-path only; no gradient.
template <class T>
Tensor<T> resize_bilinear(const Tensor<T>& in, int out_h, int out_w) {
    if (in.h == out_h && in.w == out_w) return in;
    Tensor<T> out(in.n, in.c, out_h, out_w);
    const double sy = static_cast<double>(in.h) / out_h;
    const double sx = static_cast<double>(in.w) / out_w;
    for (int ni = 0; ni < in.n; ++ni) {
        for (int ci = 0; ci < in.c; ++ci) {
            const T* src = in.plane(ni, ci);
            T* dst = out.plane(ni, ci);
            for (int y = 0; y < out_h; ++y) {
                const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.h - 1.0);
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, in.h - 1);
                const double wy = fy - y0;
                for (int x = 0; x < out_w; ++x) {
                    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.w - 1.0);
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, in.w - 1);
                    const double wx = fx - x0;
                    const double top = (1.0 - wx) * src[y0 * in.w + x0] + wx * src[y0 * in.w + x1];
                    const double bot = (1.0 - wx) * src[y1 * in.w + x0] + wx * src[y1 * in.w + x1];
                    dst[y * out_w + x] = static_cast<T>((1.0 - wy) * top + wy * bot);
                }
            }
        }
    }
    return out;
}

}  // namespace ganaug
