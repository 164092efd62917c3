#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganaug/core/check.hpp"
#include "ganaug/core/container.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/core/tensor.hpp"
#include "ganaug/gan/style_stack.hpp"
#include "ganaug/nn/adam.hpp"
#include "ganaug/nn/ops.hpp"

namespace ganaug::gan {

// Architecture of the style-based generator pair (mapping + synthesis).
// Synthesis starts from a learned 4x4 constant and doubles resolution per
// block; one style vector feeds each modulated conv plus one for toRGB, so
// the style count is L = 2*log2(image_size) - 2.
struct GanArch {
    int image_size = 64;
    int z_dim = 128;
    int w_dim = 128;
    int map_layers = 3;
    int map_hidden = 128;
    std::vector<int> channels;  // per resolution 4, 8, ..., image_size

    static std::vector<int> default_channels(int image_size) {
        std::vector<int> ch;
        int c = 96;
        for (int r = 4; r <= image_size; r *= 2) {
            ch.push_back(c);
            if (r >= 8) c = std::max(8, c / 2);
        }
        return ch;
    }

    int blocks() const { return static_cast<int>(std::log2(image_size)) - 1; }
    int num_style_layers() const { return 2 * blocks(); }  // == 2*log2(S) - 2
    int conv_layers() const { return 2 * blocks() - 1; }

    void validate() const {
        check_arg(image_size >= 8 && (image_size & (image_size - 1)) == 0, "image_size must be a power of two >= 8");
        check_arg(z_dim > 0 && w_dim > 0 && map_layers >= 1, "bad latent dims");
        check_arg(static_cast<int>(channels.size()) == blocks(), "channels must list one width per resolution 4..",
                  image_size);
        for (int c : channels) check_arg(c >= 4 && c <= 256, "channel widths must be in [4,256]");
    }

    // resolution and channel widths entering conv layer l
    struct LayerSpec {
        int res, ci, co;
        bool upsample;
    };
    LayerSpec layer_spec(int l) const {
        if (l == 0) return {4, channels[0], channels[0], false};
        const int j = (l + 1) / 2;  // block index 1..blocks-1
        const int res = 4 << j;
        if (l % 2 == 1) return {res, channels[j - 1], channels[j], true};
        return {res, channels[j], channels[j], false};
    }

    nlohmann::json to_json() const {
        return {{"image_size", image_size}, {"z_dim", z_dim},           {"w_dim", w_dim},
                {"map_layers", map_layers}, {"map_hidden", map_hidden}, {"channels", channels}};
    }
    static GanArch from_json(const nlohmann::json& j) {
        GanArch a;
        a.image_size = j.at("image_size");
        a.z_dim = j.at("z_dim");
        a.w_dim = j.at("w_dim");
        a.map_layers = j.at("map_layers");
        a.map_hidden = j.at("map_hidden");
        a.channels = j.at("channels").get<std::vector<int>>();
        a.validate();
        return a;
    }
};

template <class T>
struct MappingCache {
    Mat<T> z_norm;
    Vec<T> inv_norm;
    std::vector<Mat<T>> layer_out;  // post-activation per fc layer
};

template <class T>
struct SynthCache {
    std::vector<Mat<T>> styles;               // per layer (w_dim x N), includes toRGB at index L-1
    std::vector<Tensor<T>> layer_in;          // modconv input per conv layer (post-upsample)
    std::vector<Tensor<T>> layer_out;         // post-activation per conv layer
    std::vector<Tensor<T>> noise;             // per conv layer (N,1,res,res)
    std::vector<nn::ModConvCache<T>> conv;    // per conv layer
    nn::ModConvCache<T> torgb;
    Tensor<T> rgb;  // post-sigmoid
};

template <class T>
class Generator {
  public:
    Generator() = default;
    explicit Generator(GanArch arch, uint64_t init_seed = 1) : arch_(arch) {
        arch_.validate();
        const int L = arch_.conv_layers();
        Rng rng = Rng(init_seed).child("generator");

        map_w_.resize(arch_.map_layers);
        map_b_.resize(arch_.map_layers);
        for (int i = 0; i < arch_.map_layers; ++i) {
            const int in = (i == 0) ? arch_.z_dim : arch_.map_hidden;
            const int out = (i == arch_.map_layers - 1) ? arch_.w_dim : arch_.map_hidden;
            map_w_[i].init(format_msg("mapping.fc", i, ".w"), {out, in});
            map_w_[i].fill_normal(rng, 1.0 / std::sqrt(in));
            map_w_[i].lr_scale = 0.1;  // slow mapping updates, as in the style-GAN lineage
            map_b_[i].init(format_msg("mapping.fc", i, ".b"), {out});
            map_b_[i].lr_scale = 0.1;
        }

        const_input_.init("synth.const", {arch_.channels[0], 4, 4});
        const_input_.fill_normal(rng, 1.0);

        conv_w_.resize(L);
        conv_b_.resize(L);
        affine_w_.resize(L);
        affine_b_.resize(L);
        noise_strength_.resize(L);
        for (int l = 0; l < L; ++l) {
            const auto spec = arch_.layer_spec(l);
            conv_w_[l].init(format_msg("synth.conv", l, ".w"), {spec.co, spec.ci, 3, 3});
            conv_w_[l].fill_normal(rng, 1.0 / std::sqrt(spec.ci * 9.0));
            conv_b_[l].init(format_msg("synth.conv", l, ".b"), {spec.co});
            affine_w_[l].init(format_msg("synth.conv", l, ".affine.w"), {spec.ci, arch_.w_dim});
            affine_w_[l].fill_normal(rng, 1.0 / std::sqrt(arch_.w_dim));
            affine_b_[l].init(format_msg("synth.conv", l, ".affine.b"), {spec.ci});
            affine_b_[l].fill_constant(T(1));
            noise_strength_[l].init(format_msg("synth.conv", l, ".noise"), {1});
        }
        const int cl = arch_.channels.back();
        torgb_affine_w_.init("synth.torgb.affine.w", {cl, arch_.w_dim});
        torgb_affine_w_.fill_normal(rng, 1.0 / std::sqrt(arch_.w_dim));
        torgb_affine_b_.init("synth.torgb.affine.b", {cl});
        torgb_affine_b_.fill_constant(T(1));
        torgb_w_.init("synth.torgb.w", {3, cl, 1, 1});
        torgb_w_.fill_normal(rng, 1.0 / std::sqrt(cl));
        torgb_b_.init("synth.torgb.b", {3});

        w_avg = Vec<T>::Zero(arch_.w_dim);
    }

    const GanArch& arch() const { return arch_; }

    nn::ParamRefs<T> params() {
        nn::ParamRefs<T> p;
        for (auto& x : map_w_) p.push_back(&x);
        for (auto& x : map_b_) p.push_back(&x);
        p.push_back(&const_input_);
        for (size_t l = 0; l < conv_w_.size(); ++l) {
            p.push_back(&conv_w_[l]);
            p.push_back(&conv_b_[l]);
            p.push_back(&affine_w_[l]);
            p.push_back(&affine_b_[l]);
            p.push_back(&noise_strength_[l]);
        }
        p.push_back(&torgb_affine_w_);
        p.push_back(&torgb_affine_b_);
        p.push_back(&torgb_w_);
        p.push_back(&torgb_b_);
        return p;
    }
    nn::ParamRefs<T> params() const { return const_cast<Generator*>(this)->params(); }

    uint64_t weights_hash() const { return nn::params_hash(params()); }

    // ------------------------------------------------------------ mapping --

    // z: (z_dim x N) -> w: (w_dim x N)
    Mat<T> map_forward(const Mat<T>& z, MappingCache<T>* cache = nullptr) const {
        check_arg(z.rows() == arch_.z_dim, "map_latent: z has dimension ", z.rows(), ", expected ", arch_.z_dim);
        MappingCache<T> local;
        MappingCache<T>& c = cache ? *cache : local;
        c.z_norm = z;
        nn::pixelnorm_fwd(c.z_norm, c.inv_norm);
        c.layer_out.resize(map_w_.size());
        Mat<T> x = c.z_norm;
        for (size_t i = 0; i < map_w_.size(); ++i) {
            Mat<T> y;
            nn::dense_fwd(x, map_w_[i].w, map_b_[i].w, map_w_[i].dims[0], y);
            nn::lrelu_fwd(y.data(), static_cast<size_t>(y.size()), T(0.2));
            c.layer_out[i] = y;
            x = std::move(y);
        }
        return c.layer_out.back();
    }

    // dw: (w_dim x N); accumulates parameter grads unless accum=false
    void map_backward(const MappingCache<T>& cache, Mat<T> dw, bool accum = true) {
        for (int i = static_cast<int>(map_w_.size()) - 1; i >= 0; --i) {
            nn::lrelu_bwd(cache.layer_out[i].data(), dw.data(), static_cast<size_t>(dw.size()), T(0.2));
            const Mat<T>& in = (i == 0) ? cache.z_norm : cache.layer_out[i - 1];
            Mat<T> dx;
            nn::dense_bwd(in, map_w_[i].w, map_w_[i].dims[0], dw, &dx, accum ? &map_w_[i].g : nullptr,
                          accum ? &map_b_[i].g : nullptr);
            dw = std::move(dx);
        }
        // gradient into z is not needed by any caller; stop at the pixelnorm
    }

    // ---------------------------------------------------------- synthesis --

    // per-sample per-layer noise maps derived from (seed, layer)
    std::vector<Tensor<T>> make_noise(const std::vector<uint64_t>& seeds) const {
        const int L = arch_.conv_layers();
        std::vector<Tensor<T>> noise(L);
        for (int l = 0; l < L; ++l) {
            const auto spec = arch_.layer_spec(l);
            noise[l].resize(static_cast<int>(seeds.size()), 1, spec.res, spec.res);
            for (size_t n = 0; n < seeds.size(); ++n) {
                Rng rng = Rng(seeds[n]).child("noise").child(static_cast<uint64_t>(l));
                T* plane = noise[l].plane(static_cast<int>(n), 0);
                for (int i = 0; i < spec.res * spec.res; ++i) plane[i] = static_cast<T>(rng.normal());
            }
        }
        return noise;
    }

    // styles: one (w_dim x N) matrix per style layer (L entries)
    Tensor<T> synth_forward(const std::vector<Mat<T>>& styles, std::vector<Tensor<T>> noise,
                            SynthCache<T>* cache = nullptr) const {
        const int L = arch_.conv_layers();
        check_arg(static_cast<int>(styles.size()) == arch_.num_style_layers(),
                  "synthesize: StyleStack has ", styles.size(), " layers, generator expects ",
                  arch_.num_style_layers());
        const int N = static_cast<int>(styles[0].cols());
        for (const auto& s : styles)
            check_arg(s.rows() == arch_.w_dim && s.cols() == N, "synthesize: style dimension mismatch");

        SynthCache<T> local;
        SynthCache<T>& c = cache ? *cache : local;
        c.styles = styles;
        c.layer_in.resize(L);
        c.layer_out.resize(L);
        c.conv.resize(L);
        c.noise = std::move(noise);

        Tensor<T> x(N, arch_.channels[0], 4, 4);
        for (int n = 0; n < N; ++n)
            std::copy(const_input_.w.begin(), const_input_.w.end(), x.sample(n));

        for (int l = 0; l < L; ++l) {
            const auto spec = arch_.layer_spec(l);
            if (spec.upsample) {
                Tensor<T> up;
                nn::upsample2_fwd(x, up);
                x = std::move(up);
            }
            c.layer_in[l] = x;
            Mat<T> s;
            nn::dense_fwd(c.styles[l], affine_w_[l].w, affine_b_[l].w, spec.ci, s);
            Tensor<T> y;
            nn::modconv_fwd(c.layer_in[l], s, conv_w_[l].w, spec.co, 3, /*demod=*/true, y, c.conv[l]);
            nn::add_noise(y, c.noise[l], noise_strength_[l].w[0]);
            nn::add_channel_bias(y, conv_b_[l].w);
            nn::lrelu_fwd(y.v.data(), y.size(), T(0.2));
            c.layer_out[l] = y;
            x = std::move(y);
        }

        Mat<T> s_rgb;
        nn::dense_fwd(c.styles[L], torgb_affine_w_.w, torgb_affine_b_.w, arch_.channels.back(), s_rgb);
        Tensor<T> rgb;
        nn::modconv_fwd(c.layer_out[L - 1], s_rgb, torgb_w_.w, 3, 1, /*demod=*/false, rgb, c.torgb);
        nn::add_channel_bias(rgb, torgb_b_.w);
        nn::sigmoid_fwd(rgb.v.data(), rgb.size());
        c.rgb = rgb;
        return c.rgb;
    }

    // dimg -> per-layer style grads; param grads accumulate unless accum=false
    // (frozen-generator training backprops through without touching weights)
    void synth_backward(const SynthCache<T>& c, Tensor<T> dimg, std::vector<Mat<T>>* dstyles,
                        bool accum = true) const {
        auto* self = const_cast<Generator*>(this);
        const int L = arch_.conv_layers();
        const int N = dimg.n;
        if (dstyles != nullptr) dstyles->assign(arch_.num_style_layers(), Mat<T>());

        nn::sigmoid_bwd(c.rgb.v.data(), dimg.v.data(), dimg.size());
        if (accum) nn::channel_bias_grad(dimg, self->torgb_b_.g);
        Mat<T> ds_rgb;
        Tensor<T> dx;
        nn::modconv_bwd(c.layer_out[L - 1], torgb_w_.w, 3, 1, /*demod=*/false, dimg, c.torgb, &dx,
                        accum ? &self->torgb_w_.g : nullptr, ds_rgb);
        {
            Mat<T> dstyle;
            nn::dense_bwd(c.styles[L], torgb_affine_w_.w, arch_.channels.back(), ds_rgb, &dstyle,
                          accum ? &self->torgb_affine_w_.g : nullptr, accum ? &self->torgb_affine_b_.g : nullptr);
            if (dstyles != nullptr) (*dstyles)[L] = std::move(dstyle);
        }

        for (int l = L - 1; l >= 0; --l) {
            const auto spec = arch_.layer_spec(l);
            nn::lrelu_bwd(c.layer_out[l].v.data(), dx.v.data(), dx.size(), T(0.2));
            if (accum) {
                nn::channel_bias_grad(dx, self->conv_b_[l].g);
                self->noise_strength_[l].g[0] += nn::noise_strength_grad(dx, c.noise[l]);
            }
            Mat<T> ds;
            Tensor<T> dprev;
            const bool need_dprev = (l > 0) || accum;
            nn::modconv_bwd(c.layer_in[l], conv_w_[l].w, spec.co, 3, /*demod=*/true, dx, c.conv[l],
                            need_dprev ? &dprev : nullptr, accum ? &self->conv_w_[l].g : nullptr, ds);
            {
                Mat<T> dstyle;
                nn::dense_bwd(c.styles[l], affine_w_[l].w, spec.ci, ds, &dstyle,
                              accum ? &self->affine_w_[l].g : nullptr, accum ? &self->affine_b_[l].g : nullptr);
                if (dstyles != nullptr) (*dstyles)[l] = std::move(dstyle);
            }
            if (l == 0) {
                if (accum)
                    for (int n = 0; n < N; ++n) {
                        const T* src = dprev.sample(n);
                        for (size_t i = 0; i < self->const_input_.g.size(); ++i) self->const_input_.g[i] += src[i];
                    }
                break;
            }
            if (spec.upsample) {
                Tensor<T> down;
                nn::upsample2_bwd(dprev, down);
                dx = std::move(down);
            } else {
                dx = std::move(dprev);
            }
        }
    }

    Vec<T> w_avg;  // running mean of mapped w, tracked by the trainer

  private:
    GanArch arch_;
    std::vector<nn::Param<T>> map_w_, map_b_;
    nn::Param<T> const_input_;
    std::vector<nn::Param<T>> conv_w_, conv_b_, affine_w_, affine_b_, noise_strength_;
    nn::Param<T> torgb_affine_w_, torgb_affine_b_, torgb_w_, torgb_b_;

    friend struct GeneratorCheckpointIo;
};

// ---------------------------------------------------- single-image API -----

// w computed by the mapping network, broadcast to all style layers
template <class T>
StyleStack map_latent(const Generator<T>& g, const Eigen::VectorXd& z) {
    check_arg(static_cast<int>(z.size()) == g.arch().z_dim, "map_latent: z has dimension ", z.size(), ", expected ",
              g.arch().z_dim);
    Mat<T> zb(z.size(), 1);
    for (Eigen::Index i = 0; i < z.size(); ++i) zb(i, 0) = static_cast<T>(z[i]);
    const Mat<T> w = g.map_forward(zb);
    Eigen::VectorXd wd(w.rows());
    for (Eigen::Index i = 0; i < w.rows(); ++i) wd[i] = static_cast<double>(w(i, 0));
    return StyleStack::broadcast(wd, g.arch().num_style_layers());
}

template <class T>
std::vector<Mat<T>> style_batch(const GanArch& arch, const std::vector<const StyleStack*>& stacks) {
    const int L = arch.num_style_layers();
    const int N = static_cast<int>(stacks.size());
    for (const auto* s : stacks) {
        check_arg(s->num_layers() == L && s->dim() == arch.w_dim,
                  "StyleStack shape (", s->num_layers(), "x", s->dim(), ") does not match generator (", L, "x",
                  arch.w_dim, ")");
        check_arg(s->all_finite(), "StyleStack has non-finite entries");
    }
    std::vector<Mat<T>> styles(L);
    for (int l = 0; l < L; ++l) {
        styles[l].resize(arch.w_dim, N);
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < arch.w_dim; ++i) styles[l](i, n) = static_cast<T>(stacks[n]->layers(l, i));
    }
    return styles;
}

// image of configured size with channel values in [0,1]; deterministic given
// (styles, weights, noise_seed)
template <class T>
Tensor<T> synthesize_batch(const Generator<T>& g, const std::vector<const StyleStack*>& stacks,
                           const std::vector<uint64_t>& noise_seeds) {
    check_arg(noise_seeds.size() == stacks.size(), "synthesize: seeds/stacks mismatch");
    const auto styles = style_batch<T>(g.arch(), stacks);
    return g.synth_forward(styles, g.make_noise(noise_seeds));
}

template <class T>
Tensor<T> synthesize(const Generator<T>& g, const StyleStack& s, uint64_t noise_seed = 0) {
    return synthesize_batch(g, {&s}, {noise_seed});
}

// ------------------------------------------------------------ checkpoint ---

struct GeneratorMeta {
    uint64_t seed = 0;
    double fid_at_selection = -1.0;
    std::string features_hash;
};

inline Container generator_to_container(const Generator<float>& g, const GeneratorMeta& meta) {
    Container c;
    c.kind = "generator";
    c.config["arch"] = g.arch().to_json();
    c.config["seed"] = meta.seed;
    c.config["fid_at_selection"] = meta.fid_at_selection;
    c.config["features_hash"] = meta.features_hash;
    nn::save_params(c, g.params());
    std::vector<float> wavg(g.w_avg.data(), g.w_avg.data() + g.w_avg.size());
    const int wavg_size = static_cast<int>(wavg.size());
    c.add("w_avg", {wavg_size}, std::move(wavg));
    return c;
}

inline std::pair<Generator<float>, GeneratorMeta> generator_from_container(const Container& c) {
    check(c.kind == "generator", "checkpoint kind is `", c.kind, "`, expected `generator`");
    Generator<float> g(GanArch::from_json(c.config.at("arch")));
    nn::load_params(c, g.params());
    const auto& wavg = c.require("w_avg");
    check(static_cast<int>(wavg.data.size()) == g.arch().w_dim, "w_avg size mismatch");
    for (size_t i = 0; i < wavg.data.size(); ++i) g.w_avg[static_cast<Eigen::Index>(i)] = wavg.data[i];
    GeneratorMeta meta;
    meta.seed = c.config.value("seed", 0ULL);
    meta.fid_at_selection = c.config.value("fid_at_selection", -1.0);
    meta.features_hash = c.config.value("features_hash", "");
    return {std::move(g), meta};
}

inline void save_generator(const std::filesystem::path& path, const Generator<float>& g, const GeneratorMeta& meta) {
    generator_to_container(g, meta).save(path);
}

inline std::pair<Generator<float>, GeneratorMeta> load_generator(const std::filesystem::path& path) {
    return generator_from_container(Container::load(path));
}

}  // namespace ganaug::gan
