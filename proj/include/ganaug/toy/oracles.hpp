#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "ganaug/core/check.hpp"
#include "ganaug/core/tensor.hpp"
#include "ganaug/toy/corpus.hpp"

namespace ganaug::toy {

// Pure color-statistic modality rule. Warmth = mean(R) - mean(B); the two toy
// styles sit at roughly +0.25 / -0.25, so the rule is exact on unedited
// renders and degrades smoothly toward confidence 0.5 on neutral inputs.
struct ModalityGuess {
    std::string modality;
    double confidence = 0;
    double warmth = 0;
};

inline ModalityGuess modality_oracle(const TensorF& image) {
    check_arg(image.n == 1 && image.c == 3, "modality_oracle expects one RGB image");
    const int np = image.plane_size();
    double sum_r = 0, sum_b = 0;
    const float* r = image.plane(0, 0);
    const float* b = image.plane(0, 2);
    for (int i = 0; i < np; ++i) {
        sum_r += r[i];
        sum_b += b[i];
    }
    ModalityGuess g;
    g.warmth = (sum_r - sum_b) / np;
    g.modality = g.warmth > 0 ? kModalityWarm : kModalityCool;
    g.confidence = 0.5 + 0.5 * std::min(1.0, std::abs(g.warmth) / 0.08);
    return g;
}

// Foreground-overlap score between the image's luminance-segmented blob and a
// reference mask. Shares the renderer's threshold, so an original image scores
// 1.0 against its own mask. Degenerate inputs flag instead of throwing.
struct ShapeScore {
    double iou = 0;
    bool degenerate = false;
};

inline ShapeScore shape_oracle(const TensorF& image, const TensorF& reference_mask) {
    check_arg(image.n == 1 && image.c == 3, "shape_oracle expects one RGB image");
    check_arg(reference_mask.c == 1 && reference_mask.h == image.h && reference_mask.w == image.w,
              "shape_oracle: mask/image shape mismatch");
    const int np = image.plane_size();
    const float* r = image.plane(0, 0);
    const float* g = image.plane(0, 1);
    const float* b = image.plane(0, 2);
    const float* m = reference_mask.plane(0, 0);

    double mean = 0, mean_sq = 0;
    for (int i = 0; i < np; ++i) {
        const double lum = (r[i] + g[i] + b[i]) / 3.0;
        mean += lum;
        mean_sq += lum * lum;
    }
    mean /= np;
    const double variance = std::max(0.0, mean_sq / np - mean * mean);

    long inter = 0, uni = 0, fg = 0;
    for (int i = 0; i < np; ++i) {
        const bool seg = (r[i] + g[i] + b[i]) / 3.0f > kSegmentationThreshold;
        const bool ref = m[i] > 0.5f;
        fg += seg;
        inter += (seg && ref);
        uni += (seg || ref);
    }
    if (fg == 0 || uni == 0 || std::sqrt(variance) < 1e-4) return {0.0, true};
    return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

}  // namespace ganaug::toy
