#pragma once

#include <vector>

#include "ganaug/gan/generator.hpp"
#include "ganaug/metrics/features.hpp"
#include "ganaug/nn/ops.hpp"

namespace ganaug::inversion {

// Image -> StyleStack encoder in the e4e mold: a conv trunk predicts one base
// w code plus per-layer deltas. Delta heads are zero-initialized and enabled
// progressively during training, which keeps layer codes low-variance and
// close to W while training buys back reconstruction detail.
struct EncoderArch {
    int input_size = 64;
    int w_dim = 128;
    int num_ws = 10;
    std::vector<int> widths{16, 24, 32, 48};  // one per halving down to 4x4
    int trunk_dim = 128;

    int pools() const { return static_cast<int>(widths.size()); }

    void validate() const {
        check_arg(input_size >= 8 && (input_size & (input_size - 1)) == 0, "encoder input must be a power of two");
        check_arg((input_size >> pools()) == 4, "widths must take the input down to 4x4 (got ", pools(), " pools for ",
                  input_size, ")");
        check_arg(w_dim > 0 && num_ws >= 2 && trunk_dim > 0, "bad encoder dims");
    }

    static EncoderArch for_generator(const gan::GanArch& g) {
        EncoderArch a;
        a.input_size = g.image_size;
        a.w_dim = g.w_dim;
        a.num_ws = g.num_style_layers();
        a.widths.clear();
        int c = 16;
        for (int r = g.image_size; r > 4; r /= 2) {
            a.widths.push_back(std::min(96, c));
            c += c / 2;
        }
        return a;
    }

    nlohmann::json to_json() const {
        return {{"input_size", input_size},
                {"w_dim", w_dim},
                {"num_ws", num_ws},
                {"widths", widths},
                {"trunk_dim", trunk_dim}};
    }
    static EncoderArch from_json(const nlohmann::json& j) {
        EncoderArch a;
        a.input_size = j.at("input_size");
        a.w_dim = j.at("w_dim");
        a.num_ws = j.at("num_ws");
        a.widths = j.at("widths").get<std::vector<int>>();
        a.trunk_dim = j.at("trunk_dim");
        a.validate();
        return a;
    }
};

template <class T>
struct EncoderCache {
    Tensor<T> input;
    std::vector<Tensor<T>> conv_out;
    std::vector<Tensor<T>> pooled;
    Mat<T> flat;
    Mat<T> trunk_out;  // post-lrelu
    Mat<T> base;       // (w_dim x N)
};

template <class T>
class Encoder {
  public:
    Encoder() = default;
    explicit Encoder(EncoderArch arch, uint64_t init_seed = 4) : arch_(arch) {
        arch_.validate();
        Rng rng = Rng(init_seed).child("encoder");
        int ci = 3;
        conv_w_.resize(arch_.widths.size());
        conv_b_.resize(arch_.widths.size());
        for (size_t i = 0; i < arch_.widths.size(); ++i) {
            const int co = arch_.widths[i];
            conv_w_[i].init(format_msg("enc.conv", i, ".w"), {co, ci, 3, 3});
            conv_w_[i].fill_normal(rng, std::sqrt(2.0 / (ci * 9.0)));
            conv_b_[i].init(format_msg("enc.conv", i, ".b"), {co});
            ci = co;
        }
        const int flat_dim = ci * 16;
        trunk_w_.init("enc.trunk.w", {arch_.trunk_dim, flat_dim});
        trunk_w_.fill_normal(rng, std::sqrt(2.0 / flat_dim));
        trunk_b_.init("enc.trunk.b", {arch_.trunk_dim});
        base_w_.init("enc.base.w", {arch_.w_dim, arch_.trunk_dim});
        base_w_.fill_normal(rng, std::sqrt(1.0 / arch_.trunk_dim));
        base_b_.init("enc.base.b", {arch_.w_dim});
        delta_w_.resize(static_cast<size_t>(arch_.num_ws - 1));
        delta_b_.resize(static_cast<size_t>(arch_.num_ws - 1));
        for (int l = 0; l < arch_.num_ws - 1; ++l) {
            // zero-init: training starts in pure W (all layers share the base)
            delta_w_[static_cast<size_t>(l)].init(format_msg("enc.delta", l + 1, ".w"), {arch_.w_dim, arch_.trunk_dim});
            delta_b_[static_cast<size_t>(l)].init(format_msg("enc.delta", l + 1, ".b"), {arch_.w_dim});
        }
    }

    const EncoderArch& arch() const { return arch_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> p;
        for (size_t i = 0; i < conv_w_.size(); ++i) {
            p.push_back(&conv_w_[i]);
            p.push_back(&conv_b_[i]);
        }
        p.push_back(&trunk_w_);
        p.push_back(&trunk_b_);
        p.push_back(&base_w_);
        p.push_back(&base_b_);
        for (size_t l = 0; l < delta_w_.size(); ++l) {
            p.push_back(&delta_w_[l]);
            p.push_back(&delta_b_[l]);
        }
        return p;
    }
    nn::ParamRefs<T> params() const { return const_cast<Encoder*>(this)->params(); }

    uint64_t weights_hash() const { return nn::params_hash(params()); }

    // styles per layer ((w_dim x N) x num_ws); deltas beyond active_deltas are
    // inactive (layer code = base)
    std::vector<Mat<T>> forward(const Tensor<T>& x, int active_deltas, EncoderCache<T>* cache = nullptr) const {
        check_arg(x.c == 3 && x.h == arch_.input_size && x.w == arch_.input_size, "encoder: bad input shape");
        check_arg(active_deltas >= 0 && active_deltas <= arch_.num_ws - 1, "encoder: bad active_deltas");
        EncoderCache<T> local;
        EncoderCache<T>& c = cache ? *cache : local;
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
        c.flat.resize(t.sample_size(), t.n);
        for (int n = 0; n < t.n; ++n)
            std::copy(t.sample(n), t.sample(n) + t.sample_size(), c.flat.data() + static_cast<size_t>(n) * t.sample_size());
        nn::dense_fwd(c.flat, trunk_w_.w, trunk_b_.w, arch_.trunk_dim, c.trunk_out);
        nn::lrelu_fwd(c.trunk_out.data(), static_cast<size_t>(c.trunk_out.size()), T(0.2));
        nn::dense_fwd(c.trunk_out, base_w_.w, base_b_.w, arch_.w_dim, c.base);

        std::vector<Mat<T>> styles(static_cast<size_t>(arch_.num_ws));
        styles[0] = c.base;
        for (int l = 1; l < arch_.num_ws; ++l) {
            if (l <= active_deltas) {
                Mat<T> delta;
                nn::dense_fwd(c.trunk_out, delta_w_[static_cast<size_t>(l - 1)].w, delta_b_[static_cast<size_t>(l - 1)].w,
                              arch_.w_dim, delta);
                styles[static_cast<size_t>(l)] = c.base + delta;
            } else {
                styles[static_cast<size_t>(l)] = c.base;
            }
        }
        return styles;
    }

    void backward(const EncoderCache<T>& c, const std::vector<Mat<T>>& dstyles, int active_deltas) {
        // base receives every layer's gradient; active deltas receive their own
        Mat<T> dbase = dstyles[0];
        for (int l = 1; l < arch_.num_ws; ++l) dbase += dstyles[static_cast<size_t>(l)];
        Mat<T> dtrunk = Mat<T>::Zero(arch_.trunk_dim, c.trunk_out.cols());
        for (int l = 1; l <= active_deltas; ++l) {
            Mat<T> dt;
            nn::dense_bwd(c.trunk_out, delta_w_[static_cast<size_t>(l - 1)].w, arch_.w_dim, dstyles[static_cast<size_t>(l)],
                          &dt, &delta_w_[static_cast<size_t>(l - 1)].g, &delta_b_[static_cast<size_t>(l - 1)].g);
            dtrunk += dt;
        }
        {
            Mat<T> dt;
            nn::dense_bwd(c.trunk_out, base_w_.w, arch_.w_dim, dbase, &dt, &base_w_.g, &base_b_.g);
            dtrunk += dt;
        }
        nn::lrelu_bwd(c.trunk_out.data(), dtrunk.data(), static_cast<size_t>(dtrunk.size()), T(0.2));
        Mat<T> dflat;
        nn::dense_bwd(c.flat, trunk_w_.w, arch_.trunk_dim, dtrunk, &dflat, &trunk_w_.g, &trunk_b_.g);

        const int N = static_cast<int>(dflat.cols());
        Tensor<T> dx(N, arch_.widths.back(), 4, 4);
        for (int n = 0; n < N; ++n)
            std::copy(dflat.data() + static_cast<size_t>(n) * dx.sample_size(),
                      dflat.data() + static_cast<size_t>(n + 1) * dx.sample_size(), dx.sample(n));

        for (int i = static_cast<int>(conv_w_.size()) - 1; i >= 0; --i) {
            Tensor<T> dy;
            nn::avgpool2_bwd(dx, dy, c.conv_out[static_cast<size_t>(i)].h, c.conv_out[static_cast<size_t>(i)].w);
            nn::lrelu_bwd(c.conv_out[static_cast<size_t>(i)].v.data(), dy.v.data(), dy.size(), T(0.2));
            const Tensor<T>& in = (i == 0) ? c.input : c.pooled[static_cast<size_t>(i) - 1];
            // input gradient is not needed below the stem
            nn::conv2d_bwd(in, conv_w_[static_cast<size_t>(i)].w, arch_.widths[static_cast<size_t>(i)], 3, dy,
                           (i > 0) ? &dx : nullptr, &conv_w_[static_cast<size_t>(i)].g,
                           &conv_b_[static_cast<size_t>(i)].g);
        }
    }

  private:
    EncoderArch arch_;
    std::vector<nn::Param<T>> conv_w_, conv_b_;
    nn::Param<T> trunk_w_, trunk_b_, base_w_, base_b_;
    std::vector<nn::Param<T>> delta_w_, delta_b_;
};

// ------------------------------------------------------------- checkpoint ---

struct EncoderTrainMeta {
    uint64_t generator_hash = 0;
    double l2_lambda = 1.5;
    int batch_size = 6;
    int steps = 20000;
    uint64_t seed = 0;
};

struct EncoderCheckpoint {
    Encoder<float> net;
    metrics::FeatureNet<float> perc;  // embedded perceptual feature net
    EncoderTrainMeta meta;
};

inline Container encoder_to_container(const EncoderCheckpoint& ck) {
    Container c;
    c.kind = "encoder";
    c.config["arch"] = ck.net.arch().to_json();
    c.config["perc_arch"] = ck.perc.arch().to_json();
    c.config["generator_hash"] = to_hex(ck.meta.generator_hash);
    c.config["l2_lambda"] = ck.meta.l2_lambda;
    c.config["batch_size"] = ck.meta.batch_size;
    c.config["steps"] = ck.meta.steps;
    c.config["seed"] = ck.meta.seed;
    nn::save_params(c, ck.net.params());
    nn::save_params(c, ck.perc.params(), "perc.");
    return c;
}

inline EncoderCheckpoint encoder_from_container(const Container& c) {
    check(c.kind == "encoder", "checkpoint kind is `", c.kind, "`, expected `encoder`");
    EncoderCheckpoint ck;
    ck.net = Encoder<float>(EncoderArch::from_json(c.config.at("arch")));
    nn::load_params(c, ck.net.params());
    ck.perc = metrics::FeatureNet<float>(metrics::FeatureArch::from_json(c.config.at("perc_arch")));
    nn::load_params(c, ck.perc.params(), "perc.");
    ck.meta.generator_hash = std::stoull(c.config.value("generator_hash", "0"), nullptr, 16);
    ck.meta.l2_lambda = c.config.value("l2_lambda", 1.5);
    ck.meta.batch_size = c.config.value("batch_size", 6);
    ck.meta.steps = c.config.value("steps", 20000);
    ck.meta.seed = c.config.value("seed", 0ULL);
    return ck;
}

inline void save_encoder(const std::filesystem::path& path, const EncoderCheckpoint& ck) {
    encoder_to_container(ck).save(path);
}

inline EncoderCheckpoint load_encoder(const std::filesystem::path& path) {
    return encoder_from_container(Container::load(path));
}

// Generator/encoder pairing guard: any joint operation must use the generator
// the encoder was trained against.
inline void check_generator_match(const EncoderCheckpoint& enc, const gan::Generator<float>& gen) {
    check(enc.meta.generator_hash == gen.weights_hash(),
          "encoder was trained against generator ", to_hex(enc.meta.generator_hash),
          " but the loaded generator hashes to ", to_hex(gen.weights_hash()));
}

}  // namespace ganaug::inversion
