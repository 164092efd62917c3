#pragma once

#include <cmath>
#include <vector>

#include "ganaug/nn/param.hpp"

namespace ganaug::nn {

// Adam with optional coupled L2 penalty. State is aligned to the param list
// passed at construction; step order is fixed so updates are deterministic.
template <class T>
class Adam {
  public:
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    explicit Adam(const ParamRefs<T>& params, double lr_ = 1e-3, double beta1_ = 0.9, double beta2_ = 0.999)
        : lr(lr_), beta1(beta1_), beta2(beta2_) {
        slots_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            slots_[i].m.assign(params[i]->size(), 0.0);
            slots_[i].v.assign(params[i]->size(), 0.0);
        }
    }

    void step(const ParamRefs<T>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1, t_);
        const double bc2 = 1.0 - std::pow(beta2, t_);
        for (size_t pi = 0; pi < params.size(); ++pi) {
            Param<T>& p = *params[pi];
            auto& slot = slots_[pi];
            const double plr = lr * p.lr_scale;
            for (size_t i = 0; i < p.size(); ++i) {
                double g = static_cast<double>(p.g[i]);
                if (weight_decay != 0.0) g += weight_decay * static_cast<double>(p.w[i]);
                slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
                slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
                const double mhat = slot.m[i] / bc1;
                const double vhat = slot.v[i] / bc2;
                p.w[i] -= static_cast<T>(plr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }

    int iterations() const { return t_; }

  private:
    struct Slot {
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    int t_ = 0;
};

}  // namespace ganaug::nn
