#pragma once

#include <vector>

#include "ganaug/gan/generator.hpp"
#include "ganaug/nn/ops.hpp"

namespace ganaug::gan {

template <class T>
struct DiscCache {
    Tensor<T> input;                    // for fromRGB weight grads
    Tensor<T> rgb_out;                  // post-lrelu fromRGB
    std::vector<Tensor<T>> conv_a_out;  // per down block
    std::vector<Tensor<T>> conv_b_out;
    std::vector<Tensor<T>> pooled;
    Tensor<T> final_conv_out;
    Mat<T> flat;       // (c4*16 x N)
    Mat<T> fc0_out;    // post-lrelu
    Mat<T> logits;     // (1 x N)
};

// Plain convolutional critic mirroring the generator's channel schedule:
// fromRGB, then two 3x3 convs + avgpool per halving down to 4x4, then a
// dense head to one logit per sample.
template <class T>
class Discriminator {
  public:
    Discriminator() = default;
    explicit Discriminator(GanArch arch, uint64_t init_seed = 2) : arch_(arch) {
        arch_.validate();
        Rng rng = Rng(init_seed).child("discriminator");
        const int b = arch_.blocks();

        from_rgb_w_.init("disc.from_rgb.w", {arch_.channels[b - 1], 3, 1, 1});
        from_rgb_w_.fill_normal(rng, 1.0 / std::sqrt(3.0));
        from_rgb_b_.init("disc.from_rgb.b", {arch_.channels[b - 1]});

        // down blocks: res S..8, block j runs at res 4<<j with widths ch[j] -> ch[j-1]
        conv_a_w_.resize(b - 1);
        conv_a_b_.resize(b - 1);
        conv_b_w_.resize(b - 1);
        conv_b_b_.resize(b - 1);
        for (int j = b - 1; j >= 1; --j) {
            const int ci = arch_.channels[j];
            const int co = arch_.channels[j - 1];
            const int idx = b - 1 - j;  // 0 = highest resolution block
            conv_a_w_[idx].init(format_msg("disc.block", idx, ".conv_a.w"), {ci, ci, 3, 3});
            conv_a_w_[idx].fill_normal(rng, 1.0 / std::sqrt(ci * 9.0));
            conv_a_b_[idx].init(format_msg("disc.block", idx, ".conv_a.b"), {ci});
            conv_b_w_[idx].init(format_msg("disc.block", idx, ".conv_b.w"), {co, ci, 3, 3});
            conv_b_w_[idx].fill_normal(rng, 1.0 / std::sqrt(ci * 9.0));
            conv_b_b_[idx].init(format_msg("disc.block", idx, ".conv_b.b"), {co});
        }

        const int c4 = arch_.channels[0];
        final_conv_w_.init("disc.final_conv.w", {c4, c4, 3, 3});
        final_conv_w_.fill_normal(rng, 1.0 / std::sqrt(c4 * 9.0));
        final_conv_b_.init("disc.final_conv.b", {c4});
        fc0_w_.init("disc.fc0.w", {c4, c4 * 16});
        fc0_w_.fill_normal(rng, 1.0 / std::sqrt(c4 * 16.0));
        fc0_b_.init("disc.fc0.b", {c4});
        fc1_w_.init("disc.fc1.w", {1, c4});
        fc1_w_.fill_normal(rng, 1.0 / std::sqrt(static_cast<double>(c4)));
        fc1_b_.init("disc.fc1.b", {1});
    }

    const GanArch& arch() const { return arch_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> p{&from_rgb_w_, &from_rgb_b_};
        for (size_t i = 0; i < conv_a_w_.size(); ++i) {
            p.push_back(&conv_a_w_[i]);
            p.push_back(&conv_a_b_[i]);
            p.push_back(&conv_b_w_[i]);
            p.push_back(&conv_b_b_[i]);
        }
        p.push_back(&final_conv_w_);
        p.push_back(&final_conv_b_);
        p.push_back(&fc0_w_);
        p.push_back(&fc0_b_);
        p.push_back(&fc1_w_);
        p.push_back(&fc1_b_);
        return p;
    }

    Vec<T> forward(const Tensor<T>& x, DiscCache<T>* cache = nullptr) const {
        check_arg(x.c == 3 && x.h == arch_.image_size && x.w == arch_.image_size, "discriminator: bad input shape");
        DiscCache<T> local;
        DiscCache<T>& c = cache ? *cache : local;
        const int b = arch_.blocks();
        if (cache != nullptr) c.input = x;

        Tensor<T> t;
        nn::conv2d_fwd(x, from_rgb_w_.w, arch_.channels[b - 1], 1, t, &from_rgb_b_.w);
        nn::lrelu_fwd(t.v.data(), t.size(), T(0.2));
        c.rgb_out = t;

        const int nblocks = b - 1;
        c.conv_a_out.resize(nblocks);
        c.conv_b_out.resize(nblocks);
        c.pooled.resize(nblocks);
        for (int i = 0; i < nblocks; ++i) {
            const int j = b - 1 - i;
            Tensor<T> a;
            nn::conv2d_fwd(t, conv_a_w_[i].w, arch_.channels[j], 3, a, &conv_a_b_[i].w);
            nn::lrelu_fwd(a.v.data(), a.size(), T(0.2));
            c.conv_a_out[i] = a;
            Tensor<T> bb;
            nn::conv2d_fwd(a, conv_b_w_[i].w, arch_.channels[j - 1], 3, bb, &conv_b_b_[i].w);
            nn::lrelu_fwd(bb.v.data(), bb.size(), T(0.2));
            c.conv_b_out[i] = bb;
            Tensor<T> pooled;
            nn::avgpool2_fwd(bb, pooled);
            c.pooled[i] = pooled;
            t = std::move(pooled);
        }

        Tensor<T> f;
        nn::conv2d_fwd(t, final_conv_w_.w, arch_.channels[0], 3, f, &final_conv_b_.w);
        nn::lrelu_fwd(f.v.data(), f.size(), T(0.2));
        c.final_conv_out = f;

        c.flat.resize(f.sample_size(), f.n);
        for (int n = 0; n < f.n; ++n)
            std::copy(f.sample(n), f.sample(n) + f.sample_size(), c.flat.data() + static_cast<size_t>(n) * f.sample_size());

        nn::dense_fwd(c.flat, fc0_w_.w, fc0_b_.w, arch_.channels[0], c.fc0_out);
        nn::lrelu_fwd(c.fc0_out.data(), static_cast<size_t>(c.fc0_out.size()), T(0.2));
        nn::dense_fwd(c.fc0_out, fc1_w_.w, fc1_b_.w, 1, c.logits);
        return c.logits.row(0).transpose();
    }

    // returns dL/dx for the augmentation/generator path
    Tensor<T> backward(const DiscCache<T>& c, const Vec<T>& dlogits, bool accum = true) {
        const int b = arch_.blocks();
        const int N = static_cast<int>(dlogits.size());

        Mat<T> dlog(1, N);
        dlog.row(0) = dlogits.transpose();
        Mat<T> dfc0;
        nn::dense_bwd(c.fc0_out, fc1_w_.w, 1, dlog, &dfc0, accum ? &fc1_w_.g : nullptr, accum ? &fc1_b_.g : nullptr);
        nn::lrelu_bwd(c.fc0_out.data(), dfc0.data(), static_cast<size_t>(dfc0.size()), T(0.2));
        Mat<T> dflat;
        nn::dense_bwd(c.flat, fc0_w_.w, arch_.channels[0], dfc0, &dflat, accum ? &fc0_w_.g : nullptr,
                      accum ? &fc0_b_.g : nullptr);

        Tensor<T> dt(N, arch_.channels[0], 4, 4);
        for (int n = 0; n < N; ++n)
            std::copy(dflat.data() + static_cast<size_t>(n) * dt.sample_size(),
                      dflat.data() + static_cast<size_t>(n + 1) * dt.sample_size(), dt.sample(n));

        nn::lrelu_bwd(c.final_conv_out.v.data(), dt.v.data(), dt.size(), T(0.2));
        const int nblocks = b - 1;
        const Tensor<T>& final_in = (nblocks > 0) ? c.pooled[nblocks - 1] : c.rgb_out;
        Tensor<T> dx;
        nn::conv2d_bwd(final_in, final_conv_w_.w, arch_.channels[0], 3, dt, &dx, accum ? &final_conv_w_.g : nullptr,
                       accum ? &final_conv_b_.g : nullptr);

        for (int i = nblocks - 1; i >= 0; --i) {
            const int j = b - 1 - i;
            Tensor<T> dbb;
            nn::avgpool2_bwd(dx, dbb, c.conv_b_out[i].h, c.conv_b_out[i].w);
            nn::lrelu_bwd(c.conv_b_out[i].v.data(), dbb.v.data(), dbb.size(), T(0.2));
            Tensor<T> da;
            nn::conv2d_bwd(c.conv_a_out[i], conv_b_w_[i].w, arch_.channels[j - 1], 3, dbb, &da,
                           accum ? &conv_b_w_[i].g : nullptr, accum ? &conv_b_b_[i].g : nullptr);
            nn::lrelu_bwd(c.conv_a_out[i].v.data(), da.v.data(), da.size(), T(0.2));
            const Tensor<T>& in = (i == 0) ? c.rgb_out : c.pooled[i - 1];
            nn::conv2d_bwd(in, conv_a_w_[i].w, arch_.channels[j], 3, da, &dx, accum ? &conv_a_w_[i].g : nullptr,
                           accum ? &conv_a_b_[i].g : nullptr);
        }

        nn::lrelu_bwd(c.rgb_out.v.data(), dx.v.data(), dx.size(), T(0.2));
        Tensor<T> dimg;
        nn::conv2d_bwd(c.input, from_rgb_w_.w, arch_.channels[b - 1], 1, dx, &dimg,
                       accum ? &from_rgb_w_.g : nullptr, accum ? &from_rgb_b_.g : nullptr);
        return dimg;
    }

  private:
    GanArch arch_;
    nn::Param<T> from_rgb_w_, from_rgb_b_;
    std::vector<nn::Param<T>> conv_a_w_, conv_a_b_, conv_b_w_, conv_b_b_;
    nn::Param<T> final_conv_w_, final_conv_b_, fc0_w_, fc0_b_, fc1_w_, fc1_b_;
};

}  // namespace ganaug::gan
