#pragma once

#include <algorithm>
#include <cmath>

namespace ganaug::gan {

// Adaptive discriminator augmentation controller. The overfit heuristic is
// the running mean of sign(D(real)); when it exceeds the target the
// discriminator is too confident on reals and the augmentation probability p
// rises, otherwise it falls. p stays clamped to [0,1].
struct AdaState {
    double p = 0.0;
    double overfit_stat = 0.0;  // running estimate in [-1,1]
    double target = 0.6;
    double adjustment_step = 0.0025;
};

constexpr double kAdaEmaDecay = 0.9;

inline AdaState ada_update(AdaState state, double batch_mean_sign) {
    batch_mean_sign = std::clamp(batch_mean_sign, -1.0, 1.0);
    state.overfit_stat = kAdaEmaDecay * state.overfit_stat + (1.0 - kAdaEmaDecay) * batch_mean_sign;
    if (state.overfit_stat > state.target)
        state.p += state.adjustment_step;
    else if (state.overfit_stat < state.target)
        state.p -= state.adjustment_step;
    state.p = std::clamp(state.p, 0.0, 1.0);
    return state;
}

}  // namespace ganaug::gan
