#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ganaug/core/container.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/data/loader.hpp"
#include "ganaug/data/manifest.hpp"
#include "ganaug/nn/adam.hpp"
#include "ganaug/nn/ops.hpp"

namespace ganaug::metrics {

// Small convolutional feature network: the desk-scale stand-in for the
// reference inception features. Trained as a label-x-modality classifier on
// the corpus; the global-average-pooled penultimate activations are the
// feature space for FID and for the inversion perceptual loss.
struct FeatureArch {
    int input_size = 64;
    int feature_dim = 64;
    int n_classes = 4;
    std::vector<int> widths{16, 32, 48};

    void validate() const {
        check_arg(input_size % 8 == 0 && input_size >= 16, "feature net input must be a multiple of 8");
        check_arg(widths.size() == 3, "feature net expects 3 down blocks");
        check_arg(feature_dim >= 8 && n_classes >= 2, "bad feature head dims");
    }

    nlohmann::json to_json() const {
        return {{"input_size", input_size}, {"feature_dim", feature_dim}, {"n_classes", n_classes}, {"widths", widths}};
    }
    static FeatureArch from_json(const nlohmann::json& j) {
        FeatureArch a;
        a.input_size = j.at("input_size");
        a.feature_dim = j.at("feature_dim");
        a.n_classes = j.at("n_classes");
        a.widths = j.at("widths").get<std::vector<int>>();
        a.validate();
        return a;
    }
};

template <class T>
struct FeatureCache {
    Tensor<T> input;
    std::vector<Tensor<T>> conv_out;   // post-lrelu per block
    std::vector<Tensor<T>> pooled;     // per block
    Tensor<T> last_conv_out;           // post-lrelu
    Mat<T> features;                   // (F x N)
};

template <class T>
class FeatureNet {
  public:
    FeatureNet() = default;
    explicit FeatureNet(FeatureArch arch, uint64_t init_seed = 3) : arch_(arch) {
        arch_.validate();
        Rng rng = Rng(init_seed).child("features");
        int ci = 3;
        conv_w_.resize(arch_.widths.size());
        conv_b_.resize(arch_.widths.size());
        for (size_t i = 0; i < arch_.widths.size(); ++i) {
            const int co = arch_.widths[i];
            conv_w_[i].init(format_msg("feat.conv", i, ".w"), {co, ci, 3, 3});
            conv_w_[i].fill_normal(rng, std::sqrt(2.0 / (ci * 9.0)));
            conv_b_[i].init(format_msg("feat.conv", i, ".b"), {co});
            ci = co;
        }
        last_w_.init("feat.last.w", {arch_.feature_dim, ci, 3, 3});
        last_w_.fill_normal(rng, std::sqrt(2.0 / (ci * 9.0)));
        last_b_.init("feat.last.b", {arch_.feature_dim});
        head_w_.init("feat.head.w", {arch_.n_classes, arch_.feature_dim});
        head_w_.fill_normal(rng, std::sqrt(1.0 / arch_.feature_dim));
        head_b_.init("feat.head.b", {arch_.n_classes});
    }

    const FeatureArch& arch() const { return arch_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> p;
        for (size_t i = 0; i < conv_w_.size(); ++i) {
            p.push_back(&conv_w_[i]);
            p.push_back(&conv_b_[i]);
        }
        p.push_back(&last_w_);
        p.push_back(&last_b_);
        p.push_back(&head_w_);
        p.push_back(&head_b_);
        return p;
    }
    nn::ParamRefs<T> params() const { return const_cast<FeatureNet*>(this)->params(); }

    uint64_t weights_hash() const { return nn::params_hash(params()); }

    // deterministic features: (feature_dim x N)
    Mat<T> forward_features(const Tensor<T>& x, FeatureCache<T>* cache = nullptr) const {
        check_arg(x.c == 3 && x.h == arch_.input_size && x.w == arch_.input_size, "feature net: bad input shape ", x.h,
                  "x", x.w);
        FeatureCache<T> local;
        FeatureCache<T>& c = cache ? *cache : local;
        if (cache != nullptr) c.input = x;
        c.conv_out.resize(conv_w_.size());
        c.pooled.resize(conv_w_.size());
        Tensor<T> t = x;
        for (size_t i = 0; i < conv_w_.size(); ++i) {
            Tensor<T> y;
            nn::conv2d_fwd(t, conv_w_[i].w, arch_.widths[i], 3, y, &conv_b_[i].w);
            nn::lrelu_fwd(y.v.data(), y.size(), T(0.2));
            c.conv_out[i] = y;
            Tensor<T> pooled;
            nn::avgpool2_fwd(y, pooled);
            c.pooled[i] = pooled;
            t = std::move(pooled);
        }
        Tensor<T> y;
        nn::conv2d_fwd(t, last_w_.w, arch_.feature_dim, 3, y, &last_b_.w);
        nn::lrelu_fwd(y.v.data(), y.size(), T(0.2));
        c.last_conv_out = y;
        nn::global_avgpool_fwd(y, c.features);
        return c.features;
    }

    Mat<T> head_forward(const Mat<T>& features) const {
        Mat<T> logits;
        nn::dense_fwd(features, head_w_.w, head_b_.w, arch_.n_classes, logits);
        return logits;
    }

    // backward from a feature-space gradient to the input image
    Tensor<T> backward_features(const FeatureCache<T>& c, const Mat<T>& dfeat, bool accum = true) {
        Tensor<T> dt;
        nn::global_avgpool_bwd(dfeat, dt, c.last_conv_out.h, c.last_conv_out.w);
        nn::lrelu_bwd(c.last_conv_out.v.data(), dt.v.data(), dt.size(), T(0.2));
        Tensor<T> dx;
        nn::conv2d_bwd(c.pooled.back(), last_w_.w, arch_.feature_dim, 3, dt, &dx, accum ? &last_w_.g : nullptr,
                       accum ? &last_b_.g : nullptr);
        for (int i = static_cast<int>(conv_w_.size()) - 1; i >= 0; --i) {
            Tensor<T> dy;
            nn::avgpool2_bwd(dx, dy, c.conv_out[static_cast<size_t>(i)].h, c.conv_out[static_cast<size_t>(i)].w);
            nn::lrelu_bwd(c.conv_out[static_cast<size_t>(i)].v.data(), dy.v.data(), dy.size(), T(0.2));
            const Tensor<T>& in = (i == 0) ? c.input : c.pooled[static_cast<size_t>(i) - 1];
            nn::conv2d_bwd(in, conv_w_[static_cast<size_t>(i)].w, arch_.widths[static_cast<size_t>(i)], 3, dy, &dx,
                           accum ? &conv_w_[static_cast<size_t>(i)].g : nullptr,
                           accum ? &conv_b_[static_cast<size_t>(i)].g : nullptr);
        }
        return dx;
    }

    void head_backward(const Mat<T>& features, const Mat<T>& dlogits, Mat<T>* dfeat, bool accum = true) {
        nn::dense_bwd(features, head_w_.w, arch_.n_classes, dlogits, dfeat, accum ? &head_w_.g : nullptr,
                      accum ? &head_b_.g : nullptr);
    }

  private:
    FeatureArch arch_;
    std::vector<nn::Param<T>> conv_w_, conv_b_;
    nn::Param<T> last_w_, last_b_, head_w_, head_b_;
};

// ---------------------------------------------------------------- training --

struct FeatureTrainConfig {
    FeatureArch arch;
    int epochs = 30;
    int batch_size = 16;
    double lr = 1e-3;
    uint64_t seed = 1;
};

struct FeatureCheckpoint {
    FeatureNet<float> net;
    std::vector<std::string> class_names;  // label|modality products
    uint64_t corpus_hash = 0;
    uint64_t seed = 0;
};

inline Container features_to_container(const FeatureCheckpoint& ck) {
    Container c;
    c.kind = "features";
    c.config["arch"] = ck.net.arch().to_json();
    c.config["class_names"] = ck.class_names;
    c.config["corpus_hash"] = to_hex(ck.corpus_hash);
    c.config["seed"] = ck.seed;
    nn::save_params(c, ck.net.params());
    return c;
}

inline FeatureCheckpoint features_from_container(const Container& c) {
    check(c.kind == "features", "checkpoint kind is `", c.kind, "`, expected `features`");
    FeatureCheckpoint ck;
    ck.net = FeatureNet<float>(FeatureArch::from_json(c.config.at("arch")));
    nn::load_params(c, ck.net.params());
    ck.class_names = c.config.value("class_names", std::vector<std::string>{});
    ck.seed = c.config.value("seed", 0ULL);
    return ck;
}

inline FeatureCheckpoint load_features(const std::filesystem::path& path) {
    return features_from_container(Container::load(path));
}

// Trains the extractor as a label-x-modality classifier so its features carry
// both class shape and style statistics.
inline FeatureCheckpoint train_feature_extractor(const data::Manifest& manifest, FeatureTrainConfig cfg) {
    check_arg(!manifest.records.empty(), "train_feature_extractor: empty manifest");

    std::set<std::string> class_set;
    for (const auto& r : manifest.records) class_set.insert(r.label + "|" + r.modality);
    std::vector<std::string> class_names(class_set.begin(), class_set.end());
    check_arg(class_names.size() >= 2, "feature extractor needs >= 2 label-modality classes");
    cfg.arch.n_classes = static_cast<int>(class_names.size());

    std::map<std::string, int> class_index;
    for (size_t i = 0; i < class_names.size(); ++i) class_index[class_names[i]] = static_cast<int>(i);
    std::vector<int> labels(manifest.records.size());
    for (size_t i = 0; i < manifest.records.size(); ++i)
        labels[i] = class_index.at(manifest.records[i].label + "|" + manifest.records[i].modality);

    const TensorF all = data::load_all_images(manifest, cfg.arch.input_size);
    FeatureNet<float> net(cfg.arch, cfg.seed);
    auto params = net.params();
    nn::Adam<float> opt(params, cfg.lr);
    const std::vector<double> class_weights(class_names.size(), 1.0);

    Rng rng = Rng(cfg.seed).child("feat_train");
    std::vector<int> order(manifest.records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start + cfg.batch_size <= order.size() || start == 0; start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            if (end <= start) break;
            std::vector<int> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
            const TensorF batch = data::slice_samples(all, idx);
            std::vector<int> batch_labels(idx.size());
            for (size_t i = 0; i < idx.size(); ++i) batch_labels[i] = labels[static_cast<size_t>(idx[i])];

            FeatureCache<float> cache;
            const MatF features = net.forward_features(batch, &cache);
            const MatF logits = net.head_forward(features);
            const auto ce = nn::weighted_ce_fwd(logits, batch_labels, class_weights);
            check(std::isfinite(ce.loss), "feature extractor diverged at epoch ", epoch);
            const MatF dlogits = nn::weighted_ce_bwd(ce, batch_labels, class_weights);

            nn::zero_grads(params);
            MatF dfeat;
            net.head_backward(features, dlogits, &dfeat, true);
            net.backward_features(cache, dfeat, true);
            opt.step(params);
            if (end == order.size()) break;
        }
    }

    FeatureCheckpoint ck;
    ck.net = std::move(net);
    ck.class_names = class_names;
    ck.corpus_hash = manifest.content_hash();
    ck.seed = cfg.seed;
    return ck;
}

// convenience: features for a batch of images, one row per sample
inline MatD extract_features(const FeatureNet<float>& net, const TensorF& images) {
    TensorF input = images;
    if (input.h != net.arch().input_size || input.w != net.arch().input_size)
        input = resize_bilinear(input, net.arch().input_size, net.arch().input_size);
    const MatF f = net.forward_features(input);  // (F x N)
    return f.transpose().cast<double>();
}

}  // namespace ganaug::metrics
