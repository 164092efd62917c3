#pragma once

#include <vector>

#include "ganaug/core/container.hpp"
#include "ganaug/nn/ops.hpp"

namespace ganaug::classify {

// Small residual convolutional classifier: stem + pooled residual stages +
// global average pooling, dropout, dense head.
struct ClassifierArch {
    int input_size = 64;
    int n_classes = 2;
    std::vector<int> widths{16, 32, 64};

    void validate() const {
        check_arg(input_size >= 16 && input_size % (1 << widths.size()) == 0, "classifier input size ", input_size,
                  " incompatible with ", widths.size(), " pooling stages");
        check_arg(n_classes >= 2 && !widths.empty(), "bad classifier dims");
    }

    nlohmann::json to_json() const {
        return {{"input_size", input_size}, {"n_classes", n_classes}, {"widths", widths}};
    }
    static ClassifierArch from_json(const nlohmann::json& j) {
        ClassifierArch a;
        a.input_size = j.at("input_size");
        a.n_classes = j.at("n_classes");
        a.widths = j.at("widths").get<std::vector<int>>();
        a.validate();
        return a;
    }
};

template <class T>
struct ClassifierCache {
    Tensor<T> input;
    Tensor<T> stem_out;
    Tensor<T> stem_pooled;
    std::vector<Tensor<T>> res_in;     // stage input
    std::vector<Tensor<T>> res_mid;    // post-lrelu of first conv
    std::vector<Tensor<T>> res_out;    // post-lrelu of (x + conv2)
    std::vector<Tensor<T>> trans_out;  // post transition conv (pre-pool)
    std::vector<Tensor<T>> pooled;
    Mat<T> feat;  // GAP output
    std::vector<uint8_t> dropout_mask;
    Mat<T> dropped;
};

template <class T>
class Classifier {
  public:
    Classifier() = default;
    explicit Classifier(ClassifierArch arch, uint64_t init_seed = 5) : arch_(arch) {
        arch_.validate();
        Rng rng = Rng(init_seed).child("classifier");
        stem_w_.init("cls.stem.w", {arch_.widths[0], 3, 3, 3});
        stem_w_.fill_normal(rng, std::sqrt(2.0 / 27.0));
        stem_b_.init("cls.stem.b", {arch_.widths[0]});

        const size_t n = arch_.widths.size();
        res1_w_.resize(n);
        res1_b_.resize(n);
        res2_w_.resize(n);
        res2_b_.resize(n);
        trans_w_.resize(n - 1);
        trans_b_.resize(n - 1);
        for (size_t i = 0; i < n; ++i) {
            const int c = arch_.widths[i];
            res1_w_[i].init(format_msg("cls.res", i, ".conv1.w"), {c, c, 3, 3});
            res1_w_[i].fill_normal(rng, std::sqrt(2.0 / (c * 9.0)));
            res1_b_[i].init(format_msg("cls.res", i, ".conv1.b"), {c});
            res2_w_[i].init(format_msg("cls.res", i, ".conv2.w"), {c, c, 3, 3});
            res2_w_[i].fill_normal(rng, std::sqrt(2.0 / (c * 9.0)) * 0.5);
            res2_b_[i].init(format_msg("cls.res", i, ".conv2.b"), {c});
            if (i + 1 < n) {
                trans_w_[i].init(format_msg("cls.trans", i, ".w"), {arch_.widths[i + 1], c, 1, 1});
                trans_w_[i].fill_normal(rng, std::sqrt(2.0 / c));
                trans_b_[i].init(format_msg("cls.trans", i, ".b"), {arch_.widths[i + 1]});
            }
        }
        head_w_.init("cls.head.w", {arch_.n_classes, arch_.widths.back()});
        head_w_.fill_normal(rng, std::sqrt(1.0 / arch_.widths.back()));
        head_b_.init("cls.head.b", {arch_.n_classes});
    }

    const ClassifierArch& arch() const { return arch_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> p{&stem_w_, &stem_b_};
        for (size_t i = 0; i < res1_w_.size(); ++i) {
            p.push_back(&res1_w_[i]);
            p.push_back(&res1_b_[i]);
            p.push_back(&res2_w_[i]);
            p.push_back(&res2_b_[i]);
            if (i < trans_w_.size()) {
                p.push_back(&trans_w_[i]);
                p.push_back(&trans_b_[i]);
            }
        }
        p.push_back(&head_w_);
        p.push_back(&head_b_);
        return p;
    }
    nn::ParamRefs<T> params() const { return const_cast<Classifier*>(this)->params(); }

    uint64_t weights_hash() const { return nn::params_hash(params()); }

    // logits (n_classes x N); dropout active when dropout_p > 0 and rng given
    Mat<T> forward(const Tensor<T>& x, double dropout_p, Rng* rng, ClassifierCache<T>* cache = nullptr) const {
        check_arg(x.c == 3 && x.h == arch_.input_size && x.w == arch_.input_size, "classifier: bad input shape");
        ClassifierCache<T> local;
        ClassifierCache<T>& c = cache ? *cache : local;
        if (cache != nullptr) c.input = x;

        Tensor<T> t;
        nn::conv2d_fwd(x, stem_w_.w, arch_.widths[0], 3, t, &stem_b_.w);
        nn::lrelu_fwd(t.v.data(), t.size(), T(0.2));
        c.stem_out = t;
        nn::avgpool2_fwd(t, c.stem_pooled);
        t = c.stem_pooled;

        const size_t n = arch_.widths.size();
        c.res_in.resize(n);
        c.res_mid.resize(n);
        c.res_out.resize(n);
        c.trans_out.resize(n - 1);
        c.pooled.resize(n - 1);
        for (size_t i = 0; i < n; ++i) {
            c.res_in[i] = t;
            Tensor<T> h;
            nn::conv2d_fwd(t, res1_w_[i].w, arch_.widths[i], 3, h, &res1_b_[i].w);
            nn::lrelu_fwd(h.v.data(), h.size(), T(0.2));
            c.res_mid[i] = h;
            Tensor<T> h2;
            nn::conv2d_fwd(h, res2_w_[i].w, arch_.widths[i], 3, h2, &res2_b_[i].w);
            for (size_t j = 0; j < h2.v.size(); ++j) h2.v[j] += t.v[j];  // skip connection
            nn::lrelu_fwd(h2.v.data(), h2.size(), T(0.2));
            c.res_out[i] = h2;
            t = std::move(h2);
            if (i + 1 < n) {
                Tensor<T> tr;
                nn::conv2d_fwd(t, trans_w_[i].w, arch_.widths[i + 1], 1, tr, &trans_b_[i].w);
                nn::lrelu_fwd(tr.v.data(), tr.size(), T(0.2));
                c.trans_out[i] = tr;
                Tensor<T> pooled;
                nn::avgpool2_fwd(tr, pooled);
                c.pooled[i] = pooled;
                t = std::move(pooled);
            }
        }

        nn::global_avgpool_fwd(t, c.feat);
        c.dropped = c.feat;
        if (dropout_p > 0 && rng != nullptr)
            nn::dropout_fwd(c.dropped, dropout_p, *rng, c.dropout_mask);
        Mat<T> logits;
        nn::dense_fwd(c.dropped, head_w_.w, head_b_.w, arch_.n_classes, logits);
        return logits;
    }

    void backward(const ClassifierCache<T>& c, const Mat<T>& dlogits, double dropout_p) {
        Mat<T> dfeat;
        nn::dense_bwd(c.dropped, head_w_.w, arch_.n_classes, dlogits, &dfeat, &head_w_.g, &head_b_.g);
        if (dropout_p > 0 && !c.dropout_mask.empty()) nn::dropout_bwd(dfeat, dropout_p, c.dropout_mask);

        const size_t n = arch_.widths.size();
        const Tensor<T>& gap_in = c.res_out[n - 1];
        Tensor<T> dt;
        nn::global_avgpool_bwd(dfeat, dt, gap_in.h, gap_in.w);

        for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
            const size_t si = static_cast<size_t>(i);
            if (si + 1 < n) {
                // arriving gradient is w.r.t. pooled[i]; walk back through
                // pool and transition conv first
                Tensor<T> dtr;
                nn::avgpool2_bwd(dt, dtr, c.trans_out[si].h, c.trans_out[si].w);
                nn::lrelu_bwd(c.trans_out[si].v.data(), dtr.v.data(), dtr.size(), T(0.2));
                nn::conv2d_bwd(c.res_out[si], trans_w_[si].w, arch_.widths[si + 1], 1, dtr, &dt, &trans_w_[si].g,
                               &trans_b_[si].g);
            }
            nn::lrelu_bwd(c.res_out[si].v.data(), dt.v.data(), dt.size(), T(0.2));
            // dt now holds grad of (x + conv2(h)); split into both branches
            Tensor<T> dh;
            nn::conv2d_bwd(c.res_mid[si], res2_w_[si].w, arch_.widths[si], 3, dt, &dh, &res2_w_[si].g, &res2_b_[si].g);
            nn::lrelu_bwd(c.res_mid[si].v.data(), dh.v.data(), dh.size(), T(0.2));
            Tensor<T> dx;
            nn::conv2d_bwd(c.res_in[si], res1_w_[si].w, arch_.widths[si], 3, dh, &dx, &res1_w_[si].g, &res1_b_[si].g);
            for (size_t j = 0; j < dt.v.size(); ++j) dt.v[j] += dx.v[j];  // skip path
        }

        Tensor<T> dstem;
        nn::avgpool2_bwd(dt, dstem, c.stem_out.h, c.stem_out.w);
        nn::lrelu_bwd(c.stem_out.v.data(), dstem.v.data(), dstem.size(), T(0.2));
        nn::conv2d_bwd(c.input, stem_w_.w, arch_.widths[0], 3, dstem, static_cast<Tensor<T>*>(nullptr), &stem_w_.g,
                       &stem_b_.g);
    }

  private:
    ClassifierArch arch_;
    nn::Param<T> stem_w_, stem_b_;
    std::vector<nn::Param<T>> res1_w_, res1_b_, res2_w_, res2_b_, trans_w_, trans_b_;
    nn::Param<T> head_w_, head_b_;
};

}  // namespace ganaug::classify
