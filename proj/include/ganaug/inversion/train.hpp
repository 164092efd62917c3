#pragma once

#include <iostream>

#include "ganaug/core/kvconfig.hpp"
#include "ganaug/data/loader.hpp"
#include "ganaug/gan/generator.hpp"
#include "ganaug/inversion/encoder.hpp"
#include "ganaug/nn/adam.hpp"

namespace ganaug::inversion {

// Second training stage: the encoder learns to invert images through the
// frozen generator. Loss terms:
//   - pixel L2 (weight l2_lambda, default 1.5)
//   - perceptual distance in the shared feature-extractor space
//   - adversarial latent regularizer: a small MLP discriminates encoder base
//     codes from mapped w samples, pulling codes toward W
//   - per-layer delta penalty with progressive delta activation
struct EncoderTrainConfig {
    double l2_lambda = 1.5;
    int batch_size = 6;
    int steps = 20000;
    double lr = 1e-3;
    double perc_lambda = 0.8;
    double adv_lambda = 0.1;
    double delta_lambda = 5e-3;
    double delta_ramp = 0.6;  // fraction of training by which all deltas are active
    int warmup_steps = 200;   // pure-W phase before the first delta unlocks
    uint64_t seed = 1;

    void validate() const {
        check_arg(l2_lambda >= 0 && perc_lambda >= 0 && adv_lambda >= 0 && delta_lambda >= 0, "negative loss weight");
        check_arg(batch_size >= 1 && steps >= 1, "bad encoder training sizes");
        check_arg(delta_ramp > 0 && delta_ramp <= 1.0, "delta_ramp must be in (0,1]");
    }

    static EncoderTrainConfig from_kv(const KvConfig& kv) {
        EncoderTrainConfig c;
        c.l2_lambda = kv.get_double("encoder.l2_lambda", c.l2_lambda);
        c.batch_size = static_cast<int>(kv.get_int("encoder.batch_size", c.batch_size));
        c.steps = static_cast<int>(kv.get_int("encoder.steps", c.steps));
        c.lr = kv.get_double("encoder.lr", c.lr);
        c.perc_lambda = kv.get_double("encoder.perc_lambda", c.perc_lambda);
        c.adv_lambda = kv.get_double("encoder.adv_lambda", c.adv_lambda);
        c.delta_lambda = kv.get_double("encoder.delta_lambda", c.delta_lambda);
        c.delta_ramp = kv.get_double("encoder.delta_ramp", c.delta_ramp);
        c.warmup_steps = static_cast<int>(kv.get_int("encoder.warmup_steps", c.warmup_steps));
        c.seed = static_cast<uint64_t>(kv.get_int("encoder.seed", static_cast<int64_t>(c.seed)));
        c.validate();
        return c;
    }

    nlohmann::json to_json() const {
        return {{"l2_lambda", l2_lambda},   {"batch_size", batch_size},     {"steps", steps},
                {"lr", lr},                 {"perc_lambda", perc_lambda},   {"adv_lambda", adv_lambda},
                {"delta_lambda", delta_lambda}, {"delta_ramp", delta_ramp}, {"warmup_steps", warmup_steps},
                {"seed", seed}};
    }
};

// w-space critic for the adversarial latent regularizer
template <class T>
class LatentDisc {
  public:
    LatentDisc() = default;
    LatentDisc(int w_dim, uint64_t seed) {
        Rng rng = Rng(seed).child("latent_disc");
        fc0_w_.init("ldisc.fc0.w", {64, w_dim});
        fc0_w_.fill_normal(rng, std::sqrt(1.0 / w_dim));
        fc0_b_.init("ldisc.fc0.b", {64});
        fc1_w_.init("ldisc.fc1.w", {1, 64});
        fc1_w_.fill_normal(rng, std::sqrt(1.0 / 64.0));
        fc1_b_.init("ldisc.fc1.b", {1});
    }

    nn::ParamRefs<T> params() { return {&fc0_w_, &fc0_b_, &fc1_w_, &fc1_b_}; }

    struct Cache {
        Mat<T> input, h0;
    };

    Vec<T> forward(const Mat<T>& w, Cache* cache = nullptr) const {
        Cache local;
        Cache& c = cache ? *cache : local;
        c.input = w;
        nn::dense_fwd(w, fc0_w_.w, fc0_b_.w, 64, c.h0);
        nn::lrelu_fwd(c.h0.data(), static_cast<size_t>(c.h0.size()), T(0.2));
        Mat<T> logits;
        nn::dense_fwd(c.h0, fc1_w_.w, fc1_b_.w, 1, logits);
        return logits.row(0).transpose();
    }

    Mat<T> backward(const Cache& c, const Vec<T>& dlogits, bool accum) {
        Mat<T> dlog(1, dlogits.size());
        dlog.row(0) = dlogits.transpose();
        Mat<T> dh;
        nn::dense_bwd(c.h0, fc1_w_.w, 1, dlog, &dh, accum ? &fc1_w_.g : nullptr, accum ? &fc1_b_.g : nullptr);
        nn::lrelu_bwd(c.h0.data(), dh.data(), static_cast<size_t>(dh.size()), T(0.2));
        Mat<T> dw;
        nn::dense_bwd(c.input, fc0_w_.w, 64, dh, &dw, accum ? &fc0_w_.g : nullptr, accum ? &fc0_b_.g : nullptr);
        return dw;
    }

  private:
    nn::Param<T> fc0_w_, fc0_b_, fc1_w_, fc1_b_;
};

struct EncoderTrainResult {
    EncoderCheckpoint checkpoint;
    double final_l2 = 0;   // running mean pixel L2 near the end of training
};

inline EncoderTrainResult train_encoder(const data::Manifest& manifest, const gan::Generator<float>& generator,
                                        const metrics::FeatureNet<float>& features, const EncoderTrainConfig& cfg,
                                        std::ostream* log = nullptr) {
    cfg.validate();
    check_arg(!manifest.records.empty(), "train_encoder: empty manifest");
    const auto& garch = generator.arch();
    const int S = garch.image_size;
    const int L = garch.num_style_layers();
    const int B = cfg.batch_size;

    const uint64_t generator_hash_before = generator.weights_hash();
    const TensorF all = data::load_all_images(manifest, S);
    const int n = all.n;

    Encoder<float> enc(EncoderArch::for_generator(garch), cfg.seed);
    LatentDisc<float> ldisc(garch.w_dim, cfg.seed + 1);
    auto e_params = enc.params();
    auto d_params = ldisc.params();
    nn::Adam<float> opt_e(e_params, cfg.lr, 0.9, 0.999);
    nn::Adam<float> opt_d(d_params, cfg.lr, 0.9, 0.999);

    const Rng root(cfg.seed);
    const int max_deltas = L - 1;
    const double ramp_steps = cfg.delta_ramp * cfg.steps;

    double l2_running = 0;
    int l2_count = 0;

    for (int step = 0; step < cfg.steps; ++step) {
        const int active =
            (step < cfg.warmup_steps)
                ? 0
                : std::min(max_deltas,
                           1 + static_cast<int>((step - cfg.warmup_steps) * max_deltas / std::max(1.0, ramp_steps)));

        Rng data_stream = root.child("data").child(static_cast<uint64_t>(step));
        std::vector<int> idx(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(data_stream.uniform_int(0, n - 1));
        const TensorF batch = data::slice_samples(all, idx);

        EncoderCache<float> ecache;
        const auto styles = enc.forward(batch, active, &ecache);

        // reconstruction noise is pinned per source image
        std::vector<uint64_t> noise_seeds(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i)
            noise_seeds[static_cast<size_t>(i)] = hash_combine(cfg.seed, static_cast<uint64_t>(idx[static_cast<size_t>(i)]));
        gan::SynthCache<float> scache;
        const TensorF recon = generator.synth_forward(styles, generator.make_noise(noise_seeds), &scache);

        // pixel L2
        const double numel = static_cast<double>(recon.size());
        double l2 = 0;
        TensorF drecon(recon.n, recon.c, recon.h, recon.w);
        for (size_t i = 0; i < recon.v.size(); ++i) {
            const double diff = static_cast<double>(recon.v[i]) - batch.v[i];
            l2 += diff * diff;
            drecon.v[i] = static_cast<float>(cfg.l2_lambda * 2.0 * diff / numel);
        }
        l2 /= numel;

        // perceptual distance in extractor features
        metrics::FeatureCache<float> fcache;
        const MatF f_recon = features.forward_features(recon, &fcache);
        const MatF f_target = features.forward_features(batch);
        const MatF fdiff = f_recon - f_target;
        const double perc = fdiff.squaredNorm() / fdiff.size();
        if (cfg.perc_lambda > 0) {
            const MatF dfeat = fdiff * static_cast<float>(cfg.perc_lambda * 2.0 / fdiff.size());
            metrics::FeatureNet<float>& fmut = const_cast<metrics::FeatureNet<float>&>(features);
            const TensorF dimg_perc = fmut.backward_features(fcache, dfeat, /*accum=*/false);
            for (size_t i = 0; i < drecon.v.size(); ++i) drecon.v[i] += dimg_perc.v[i];
        }

        check(std::isfinite(l2) && std::isfinite(perc), "encoder training diverged at step ", step);

        // adversarial latent term on the base code
        typename LatentDisc<float>::Cache adv_cache;
        Mat<float> dbase_adv;
        if (cfg.adv_lambda > 0) {
            const VecF adv_logits = ldisc.forward(ecache.base, &adv_cache);
            VecF dlogit(B);
            for (int i = 0; i < B; ++i)
                dlogit[i] = static_cast<float>(-nn::sigmoid(-adv_logits[i]) * cfg.adv_lambda / B);
            dbase_adv = ldisc.backward(adv_cache, dlogit, /*accum=*/false);
        }

        // backprop through the frozen generator into the styles
        nn::zero_grads(e_params);
        std::vector<MatF> dstyles;
        generator.synth_backward(scache, drecon, &dstyles, /*accum=*/false);

        // delta penalty: styles[l] - base for active layers
        if (cfg.delta_lambda > 0 && active > 0) {
            const double scale = cfg.delta_lambda * 2.0 / (active * garch.w_dim * B);
            for (int l = 1; l <= active; ++l) {
                const MatF delta = styles[static_cast<size_t>(l)] - ecache.base;
                dstyles[static_cast<size_t>(l)] += delta * static_cast<float>(scale);
                dstyles[0] -= delta * static_cast<float>(scale);
            }
        }
        if (cfg.adv_lambda > 0) dstyles[0] += dbase_adv;

        enc.backward(ecache, dstyles, active);
        opt_e.step(e_params);

        // latent discriminator step: mapped w vs encoder base codes
        if (cfg.adv_lambda > 0) {
            Rng zs = root.child("ldisc_z").child(static_cast<uint64_t>(step));
            MatF z(garch.z_dim, B);
            for (int i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(zs.normal());
            const MatF w_real = generator.map_forward(z);

            nn::zero_grads(d_params);
            typename LatentDisc<float>::Cache cr, cf;
            const VecF lr_logits = ldisc.forward(w_real, &cr);
            const VecF lf_logits = ldisc.forward(ecache.base, &cf);
            VecF dr(B), df(B);
            for (int i = 0; i < B; ++i) {
                dr[i] = static_cast<float>(-nn::sigmoid(-lr_logits[i]) / B);
                df[i] = static_cast<float>(nn::sigmoid(lf_logits[i]) / B);
            }
            ldisc.backward(cr, dr, true);
            ldisc.backward(cf, df, true);
            opt_d.step(d_params);
        }

        if (step >= cfg.steps - std::min(100, cfg.steps)) {
            l2_running += l2;
            ++l2_count;
        }
        if (log != nullptr && ((step + 1) % 500 == 0 || step + 1 == cfg.steps))
            *log << "encoder step " << (step + 1) << "  l2 " << l2 << "  perc " << perc << "  active_deltas "
                 << active << "\n";
    }

    check(generator.weights_hash() == generator_hash_before, "generator weights changed during encoder training");

    EncoderTrainResult result;
    result.checkpoint.net = std::move(enc);
    result.checkpoint.perc = features;
    result.checkpoint.meta = {generator_hash_before, cfg.l2_lambda, cfg.batch_size, cfg.steps, cfg.seed};
    result.final_l2 = l2_count > 0 ? l2_running / l2_count : 0.0;
    return result;
}

}  // namespace ganaug::inversion
