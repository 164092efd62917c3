#pragma once

#include <algorithm>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/gan/style_stack.hpp"

namespace ganaug::latent {

// Style mixing crossover: output layers [0,k) come from source-1 (coarse,
// shape-carrying) and [k,L) from source-2 (fine, texture/color-carrying).
struct CrossoverSpec {
    int k = 0;

    void validate(int num_layers) const {
        check_arg(k >= 0 && k <= num_layers, "crossover k=", k, " outside [0,", num_layers, "]");
    }

    // default split: coarse half (rounded up) from source-1
    static CrossoverSpec default_for(int num_layers) { return {(num_layers + 1) / 2}; }
};

inline gan::StyleStack style_mix(const gan::StyleStack& w1, const gan::StyleStack& w2, const CrossoverSpec& spec) {
    check_arg(w1.same_shape(w2), "style_mix: shape mismatch (", w1.num_layers(), "x", w1.dim(), " vs ",
              w2.num_layers(), "x", w2.dim(), ")");
    spec.validate(w1.num_layers());
    gan::StyleStack out = w1;
    for (int l = spec.k; l < w1.num_layers(); ++l) out.layers.row(l) = w2.layers.row(l);
    return out;
}

// Linear interpolation per layer: lambda * wA + (1 - lambda) * wB.
// Note the convention: lambda weights wA. Augmentation uses the open interval
// (0,1); the closed endpoints are allowed for testing identities only.
struct InterpolationSpec {
    std::vector<double> lambdas{0.25, 0.5, 0.75};

    void validate() const {
        check_arg(!lambdas.empty(), "interpolation lambda grid is empty");
        for (double l : lambdas) check_arg(l > 0.0 && l < 1.0, "lambda=", l, " outside open interval (0,1)");
        check_arg(std::is_sorted(lambdas.begin(), lambdas.end()), "lambda grid must be sorted ascending");
    }
};

inline gan::StyleStack interpolate(const gan::StyleStack& wa, const gan::StyleStack& wb, double lambda) {
    check_arg(wa.same_shape(wb), "interpolate: shape mismatch");
    check_arg(lambda >= 0.0 && lambda <= 1.0, "lambda=", lambda, " outside [0,1]");
    gan::StyleStack out = wa;
    out.layers = lambda * wa.layers + (1.0 - lambda) * wb.layers;
    return out;
}

}  // namespace ganaug::latent
