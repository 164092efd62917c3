#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/core/tensor.hpp"

namespace ganaug::gan {

// Discriminator-input augmentation pipeline (a representative subset of the
// ADA categories: pixel flips, 90-degree rotations, integer translations and
// an affine color transform; cutout is excluded by the training recipe and
// rejected at config validation). Every op is linear in the pixels, so the
// generator path backpropagates through it exactly: geometry transposes to
// the inverse index map and color to the transposed matrix.
struct AugCategories {
    bool flip = true;
    bool rotate = true;
    bool translate = true;
    bool color = true;

    static AugCategories from_names(const std::vector<std::string>& names) {
        AugCategories c{false, false, false, false};
        for (const auto& n : names) {
            if (n == "flip")
                c.flip = true;
            else if (n == "rotate")
                c.rotate = true;
            else if (n == "translate")
                c.translate = true;
            else if (n == "color")
                c.color = true;
            else if (n == "cutout")
                throw std::invalid_argument("cutout is excluded from the augmentation pipeline");
            else
                throw std::invalid_argument("unknown augmentation category: " + n);
        }
        return c;
    }
};

struct AugParams {
    bool xflip = false;
    int rot90 = 0;  // quarter turns
    int tx = 0, ty = 0;
    bool use_color = false;
    double color_m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    double color_b[3] = {0, 0, 0};

    bool is_identity() const {
        if (xflip || rot90 != 0 || tx != 0 || ty != 0 || use_color) return false;
        return true;
    }
};

namespace detail {
inline void matmul3(const double a[3][3], const double b[3][3], double out[3][3]) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0;
            for (int k = 0; k < 3; ++k) acc += a[i][k] * b[k][j];
            out[i][j] = acc;
        }
}

// compose y = A*(B*x + bb) + ba  ->  M = A*B, b = A*bb + ba
inline void compose_affine(double m[3][3], double b[3], const double a_m[3][3], const double a_b[3]) {
    double nm[3][3];
    matmul3(a_m, m, nm);
    double nb[3];
    for (int i = 0; i < 3; ++i) {
        nb[i] = a_b[i];
        for (int k = 0; k < 3; ++k) nb[i] += a_m[i][k] * b[k];
    }
    std::copy(&nm[0][0], &nm[0][0] + 9, &m[0][0]);
    std::copy(nb, nb + 3, b);
}
}  // namespace detail

// One parameter draw per batch slot; the trainer applies the same draw to the
// real and the fake image in that slot so the discriminator never sees an
// augmentation signature that separates them.
inline AugParams sample_aug_params(Rng& rng, double p, const AugCategories& cats, int image_size) {
    AugParams a;
    if (cats.flip && rng.coin(p)) a.xflip = rng.coin(0.5);
    if (cats.rotate && rng.coin(p)) a.rot90 = static_cast<int>(rng.uniform_int(0, 3));
    if (cats.translate && rng.coin(p)) {
        const int max_t = std::max(1, image_size / 8);
        a.tx = static_cast<int>(rng.uniform_int(-max_t, max_t));
        a.ty = static_cast<int>(rng.uniform_int(-max_t, max_t));
    }
    if (cats.color) {
        double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        double b[3] = {0, 0, 0};
        bool any = false;
        if (rng.coin(p)) {  // brightness
            const double beta = rng.normal(0.0, 0.12);
            const double am[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
            const double ab[3] = {beta, beta, beta};
            detail::compose_affine(m, b, am, ab);
            any = true;
        }
        if (rng.coin(p)) {  // contrast about mid-gray
            const double c = std::exp2(rng.normal(0.0, 0.3));
            const double am[3][3] = {{c, 0, 0}, {0, c, 0}, {0, 0, c}};
            const double ab[3] = {0.5 * (1 - c), 0.5 * (1 - c), 0.5 * (1 - c)};
            detail::compose_affine(m, b, am, ab);
            any = true;
        }
        if (rng.coin(p)) {  // saturation about per-pixel luma
            const double s = std::exp2(rng.normal(0.0, 0.5));
            double am[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) am[i][j] = (i == j ? s : 0.0) + (1.0 - s) / 3.0;
            const double ab[3] = {0, 0, 0};
            detail::compose_affine(m, b, am, ab);
            any = true;
        }
        if (rng.coin(p)) {  // hue rotation about the gray axis
            const double theta = rng.uniform(-M_PI / 3, M_PI / 3);
            const double c = std::cos(theta), s = std::sin(theta);
            const double k = 1.0 / 3.0;
            const double r = 1.0 / std::sqrt(3.0);
            double am[3][3];
            // Rodrigues rotation about (1,1,1)/sqrt(3)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) am[i][j] = k + (((i == j) ? 1.0 : 0.0) - k) * c;
            am[0][1] += -r * s;
            am[0][2] += r * s;
            am[1][0] += r * s;
            am[1][2] += -r * s;
            am[2][0] += -r * s;
            am[2][1] += r * s;
            const double ab[3] = {0, 0, 0};
            detail::compose_affine(m, b, am, ab);
            any = true;
        }
        if (any) {
            a.use_color = true;
            std::copy(&m[0][0], &m[0][0] + 9, &a.color_m[0][0]);
            std::copy(b, b + 3, a.color_b);
        }
    }
    return a;
}

namespace detail {
// source pixel for an output pixel under flip -> rot90 -> translate
inline bool source_pixel(const AugParams& a, int h, int w, int oy, int ox, int& sy, int& sx) {
    int y = oy - a.ty;
    int x = ox - a.tx;
    if (y < 0 || y >= h || x < 0 || x >= w) return false;
    for (int r = 0; r < a.rot90; ++r) {  // inverse of +90 rotation
        const int ny = x;
        const int nx = h - 1 - y;
        y = ny;
        x = nx;
    }
    if (a.xflip) x = w - 1 - x;
    if (y < 0 || y >= h || x < 0 || x >= w) return false;
    sy = y;
    sx = x;
    return true;
}
}  // namespace detail

template <class T>
Tensor<T> aug_forward(const Tensor<T>& x, const std::vector<AugParams>& params) {
    check_arg(static_cast<size_t>(x.n) == params.size(), "aug: params/batch mismatch");
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int n = 0; n < x.n; ++n) {
        const AugParams& a = params[static_cast<size_t>(n)];
        for (int oy = 0; oy < x.h; ++oy)
            for (int ox = 0; ox < x.w; ++ox) {
                int sy = 0, sx = 0;
                if (!detail::source_pixel(a, x.h, x.w, oy, ox, sy, sx)) continue;  // zero padding
                double px[3];
                for (int c = 0; c < x.c; ++c) px[c] = x.at(n, c, sy, sx);
                if (a.use_color && x.c == 3) {
                    double out[3];
                    for (int i = 0; i < 3; ++i)
                        out[i] = a.color_m[i][0] * px[0] + a.color_m[i][1] * px[1] + a.color_m[i][2] * px[2] +
                                 a.color_b[i];
                    for (int c = 0; c < 3; ++c) y.at(n, c, oy, ox) = static_cast<T>(out[c]);
                } else {
                    for (int c = 0; c < x.c; ++c) y.at(n, c, oy, ox) = static_cast<T>(px[c]);
                }
            }
    }
    return y;
}

// transpose of the linear map: color matrix transposed, indices scattered back
template <class T>
Tensor<T> aug_backward(const Tensor<T>& dy, const std::vector<AugParams>& params) {
    Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
    for (int n = 0; n < dy.n; ++n) {
        const AugParams& a = params[static_cast<size_t>(n)];
        for (int oy = 0; oy < dy.h; ++oy)
            for (int ox = 0; ox < dy.w; ++ox) {
                int sy = 0, sx = 0;
                if (!detail::source_pixel(a, dy.h, dy.w, oy, ox, sy, sx)) continue;
                double g[3];
                for (int c = 0; c < dy.c; ++c) g[c] = dy.at(n, c, oy, ox);
                if (a.use_color && dy.c == 3) {
                    for (int i = 0; i < 3; ++i) {
                        const double acc = a.color_m[0][i] * g[0] + a.color_m[1][i] * g[1] + a.color_m[2][i] * g[2];
                        dx.at(n, i, sy, sx) += static_cast<T>(acc);
                    }
                } else {
                    for (int c = 0; c < dy.c; ++c) dx.at(n, c, sy, sx) += static_cast<T>(g[c]);
                }
            }
    }
    return dx;
}

}  // namespace ganaug::gan
