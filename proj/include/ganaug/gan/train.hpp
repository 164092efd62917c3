#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include "ganaug/core/kvconfig.hpp"
#include "ganaug/data/loader.hpp"
#include "ganaug/gan/ada.hpp"
#include "ganaug/gan/augment_ops.hpp"
#include "ganaug/gan/discriminator.hpp"
#include "ganaug/gan/generator.hpp"
#include "ganaug/metrics/fid.hpp"
#include "ganaug/nn/adam.hpp"

namespace ganaug::gan {

// First training stage: adversarial training of the style-based generator
// with non-saturating logistic loss, lazy R1 regularization and the ADA
// input-augmentation pipeline (x-flips enabled, cutout excluded). The
// checkpoint returned is the snapshot with the lowest FID seen at the
// periodic evaluations.
struct GanTrainConfig {
    GanArch arch;
    int batch_size = 6;
    int total_steps = 3000;
    double lr = 2.5e-3;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.99;
    double mix_prob = 0.9;
    bool xflip = true;
    std::vector<std::string> ada_augs{"flip", "rotate", "translate", "color"};
    double ada_target = 0.6;
    double ada_step = 0.0025;  // p traverses [0,1] in ~10k images at batch 6 / interval 4
    int ada_interval = 4;
    double r1_gamma = 0.3;
    int r1_interval = 16;
    double r1_eps = 1e-2;
    int fid_interval = 500;
    int fid_max_samples = 1000;
    uint64_t seed = 1;

    void validate() const {
        arch.validate();
        check_arg(batch_size >= 2, "batch_size must be >= 2");
        check_arg(total_steps >= 1, "total_steps must be >= 1");
        (void)AugCategories::from_names(ada_augs);  // rejects cutout/unknown
        check_arg(ada_target > -1.0 && ada_target < 1.0, "ada_target must be in (-1,1)");
        check_arg(r1_interval >= 1 && fid_interval >= 1, "intervals must be >= 1");
    }

    static GanTrainConfig from_kv(const KvConfig& kv) {
        GanTrainConfig c;
        c.arch.image_size = static_cast<int>(kv.get_int("gan.image_size", c.arch.image_size));
        c.arch.z_dim = static_cast<int>(kv.get_int("gan.z_dim", c.arch.z_dim));
        c.arch.w_dim = static_cast<int>(kv.get_int("gan.w_dim", c.arch.w_dim));
        c.arch.map_layers = static_cast<int>(kv.get_int("gan.map_layers", c.arch.map_layers));
        c.arch.map_hidden = static_cast<int>(kv.get_int("gan.map_hidden", c.arch.map_hidden));
        if (kv.has("gan.channels")) {
            c.arch.channels.clear();
            for (const auto& s : kv.get_list("gan.channels", {})) c.arch.channels.push_back(std::stoi(s));
        } else {
            c.arch.channels = GanArch::default_channels(c.arch.image_size);
        }
        c.batch_size = static_cast<int>(kv.get_int("gan.batch_size", c.batch_size));
        c.total_steps = static_cast<int>(kv.get_int("gan.total_steps", c.total_steps));
        c.lr = kv.get_double("gan.lr", c.lr);
        c.mix_prob = kv.get_double("gan.mix_prob", c.mix_prob);
        c.xflip = kv.get_bool("gan.xflip", c.xflip);
        c.ada_augs = kv.get_list("gan.ada_augs", c.ada_augs);
        c.ada_target = kv.get_double("gan.ada_target", c.ada_target);
        c.ada_step = kv.get_double("gan.ada_step", c.ada_step);
        c.ada_interval = static_cast<int>(kv.get_int("gan.ada_interval", c.ada_interval));
        c.r1_gamma = kv.get_double("gan.r1_gamma", c.r1_gamma);
        c.r1_interval = static_cast<int>(kv.get_int("gan.r1_interval", c.r1_interval));
        c.r1_eps = kv.get_double("gan.r1_eps", c.r1_eps);
        c.fid_interval = static_cast<int>(kv.get_int("gan.fid_interval", c.fid_interval));
        c.fid_max_samples = static_cast<int>(kv.get_int("gan.fid_max_samples", c.fid_max_samples));
        c.seed = static_cast<uint64_t>(kv.get_int("gan.seed", static_cast<int64_t>(c.seed)));
        c.validate();
        return c;
    }

    nlohmann::json to_json() const {
        return {{"arch", arch.to_json()},
                {"batch_size", batch_size},
                {"total_steps", total_steps},
                {"lr", lr},
                {"mix_prob", mix_prob},
                {"xflip", xflip},
                {"ada_augs", ada_augs},
                {"ada_target", ada_target},
                {"ada_step", ada_step},
                {"ada_interval", ada_interval},
                {"r1_gamma", r1_gamma},
                {"r1_interval", r1_interval},
                {"r1_eps", r1_eps},
                {"fid_interval", fid_interval},
                {"fid_max_samples", fid_max_samples},
                {"seed", seed}};
    }
};

struct GanTrainResult {
    Generator<float> generator;
    GeneratorMeta meta;
    double best_fid = -1.0;
    int best_step = -1;
    AdaState final_ada;
};

namespace detail {

struct StyleMixPlan {
    MatF z1, z2;                 // (z_dim x N)
    std::vector<int> crossover;  // per sample; L means "no mixing"
};

inline StyleMixPlan sample_mix_plan(Rng& stream, int z_dim, int n, int num_layers, double mix_prob) {
    StyleMixPlan plan;
    plan.z1.resize(z_dim, n);
    plan.z2.resize(z_dim, n);
    plan.crossover.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < z_dim; ++i) plan.z1(i, j) = static_cast<float>(stream.normal());
        for (int i = 0; i < z_dim; ++i) plan.z2(i, j) = static_cast<float>(stream.normal());
        plan.crossover[static_cast<size_t>(j)] =
            stream.coin(mix_prob) ? static_cast<int>(stream.uniform_int(1, num_layers - 1)) : num_layers;
    }
    return plan;
}

// build per-layer style batch from two mapped w batches and crossovers
inline std::vector<MatF> mix_styles(const MatF& w1, const MatF& w2, const std::vector<int>& crossover,
                                    int num_layers) {
    const int n = static_cast<int>(w1.cols());
    std::vector<MatF> styles(static_cast<size_t>(num_layers));
    for (int l = 0; l < num_layers; ++l) {
        styles[static_cast<size_t>(l)].resize(w1.rows(), n);
        for (int j = 0; j < n; ++j)
            styles[static_cast<size_t>(l)].col(j) =
                (l < crossover[static_cast<size_t>(j)]) ? w1.col(j) : w2.col(j);
    }
    return styles;
}

}  // namespace detail

inline GanTrainResult train_gan(const data::Manifest& manifest, const GanTrainConfig& cfg,
                                const metrics::FeatureNet<float>& features,
                                const std::filesystem::path& metrics_csv = {}, std::ostream* log = nullptr) {
    cfg.validate();
    check_arg(!manifest.records.empty(), "train_gan: empty manifest");

    const int S = cfg.arch.image_size;
    const int L = cfg.arch.num_style_layers();
    const int B = cfg.batch_size;
    const auto cats = AugCategories::from_names(cfg.ada_augs);

    const TensorF all_real = data::load_all_images(manifest, S);
    const int n_real = all_real.n;

    Generator<float> gen(cfg.arch, cfg.seed);
    Discriminator<float> disc(cfg.arch, cfg.seed + 1);
    auto g_params = gen.params();
    auto d_params = disc.params();
    nn::Adam<float> opt_g(g_params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    nn::Adam<float> opt_d(d_params, cfg.lr, cfg.adam_beta1, cfg.adam_beta2);

    AdaState ada;
    ada.target = cfg.ada_target;
    ada.adjustment_step = cfg.ada_step;

    const Rng root(cfg.seed);

    // fixed evaluation set: real features once, one z/noise draw reused at
    // every FID evaluation so selection compares like against like
    const int n_eval = std::min(n_real, cfg.fid_max_samples);
    MatD real_features(n_eval, features.arch().feature_dim);
    {
        std::vector<int> idx(static_cast<size_t>(n_eval));
        for (int i = 0; i < n_eval; ++i) idx[static_cast<size_t>(i)] = i;
        const TensorF reals = data::slice_samples(all_real, idx);
        real_features = metrics::extract_features(features, reals);
    }
    const metrics::GaussianStats real_stats = metrics::gaussian_stats(real_features);
    MatF eval_z(cfg.arch.z_dim, n_eval);
    {
        Rng ez = root.child("eval_z");
        for (int i = 0; i < eval_z.size(); ++i) eval_z.data()[i] = static_cast<float>(ez.normal());
    }

    auto eval_fid = [&]() {
        MatD fake_features(n_eval, features.arch().feature_dim);
        const int chunk = 16;
        for (int start = 0; start < n_eval; start += chunk) {
            const int n = std::min(chunk, n_eval - start);
            const MatF z = eval_z.middleCols(start, n);
            const MatF w = gen.map_forward(z);
            std::vector<MatF> styles(static_cast<size_t>(L));
            for (int l = 0; l < L; ++l) styles[static_cast<size_t>(l)] = w;
            std::vector<uint64_t> seeds(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) seeds[static_cast<size_t>(i)] = hash_combine(cfg.seed, fnv1a64("eval_noise")) + start + i;
            const TensorF fakes = gen.synth_forward(styles, gen.make_noise(seeds));
            fake_features.middleRows(start, n) = metrics::extract_features(features, fakes);
        }
        return metrics::fid_from_stats(real_stats, metrics::gaussian_stats(fake_features)).fid;
    };

    std::ofstream csv;
    if (!metrics_csv.empty()) {
        csv.open(metrics_csv);
        check(csv.good(), "cannot write metrics log: ", metrics_csv.string());
        csv << "step,fid,loss_g,loss_d,ada_p\n";
    }

    // best-FID snapshot
    double best_fid = std::numeric_limits<double>::infinity();
    int best_step = -1;
    std::vector<std::vector<float>> best_weights;
    VecF best_wavg;
    auto snapshot = [&](int step, double fid) {
        best_fid = fid;
        best_step = step;
        best_weights.clear();
        for (auto* p : g_params) best_weights.push_back(p->w);
        best_wavg = gen.w_avg;
    };

    double loss_d_value = 0, loss_g_value = 0;

    for (int step = 0; step < cfg.total_steps; ++step) {
        // ---------------------------------------------------------- D step --
        Rng data_stream = root.child("data").child(static_cast<uint64_t>(step));
        std::vector<int> real_idx(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) real_idx[static_cast<size_t>(i)] = static_cast<int>(data_stream.uniform_int(0, n_real - 1));
        TensorF reals = data::slice_samples(all_real, real_idx);
        if (cfg.xflip) {
            for (int i = 0; i < B; ++i)
                if (data_stream.coin(0.5))
                    for (int c = 0; c < 3; ++c) {
                        float* plane = reals.plane(i, c);
                        for (int y = 0; y < S; ++y)
                            for (int x = 0; x < S / 2; ++x) std::swap(plane[y * S + x], plane[y * S + (S - 1 - x)]);
                    }
        }

        Rng zd = root.child("z_d").child(static_cast<uint64_t>(step));
        auto plan = detail::sample_mix_plan(zd, cfg.arch.z_dim, B, L, cfg.mix_prob);
        const MatF w1 = gen.map_forward(plan.z1);
        const MatF w2 = gen.map_forward(plan.z2);
        const auto styles = detail::mix_styles(w1, w2, plan.crossover, L);
        std::vector<uint64_t> noise_seeds(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i)
            noise_seeds[static_cast<size_t>(i)] = hash_combine(cfg.seed, hash_combine(fnv1a64("gnoise_d"), static_cast<uint64_t>(step) * 1000 + i));
        const TensorF fakes = gen.synth_forward(styles, gen.make_noise(noise_seeds));

        Rng ada_stream = root.child("ada").child(static_cast<uint64_t>(step));
        std::vector<AugParams> aug_params(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) aug_params[static_cast<size_t>(i)] = sample_aug_params(ada_stream, ada.p, cats, S);
        const TensorF reals_aug = aug_forward(reals, aug_params);
        const TensorF fakes_aug = aug_forward(fakes, aug_params);

        nn::zero_grads(d_params);
        DiscCache<float> cache_real, cache_fake;
        const VecF logits_real = disc.forward(reals_aug, &cache_real);
        const VecF logits_fake = disc.forward(fakes_aug, &cache_fake);

        double loss_d = 0, mean_sign = 0;
        VecF dreal(B), dfake(B);
        for (int i = 0; i < B; ++i) {
            loss_d += nn::softplus(-logits_real[i]) + nn::softplus(logits_fake[i]);
            dreal[i] = static_cast<float>(-nn::sigmoid(-logits_real[i]) / B);
            dfake[i] = static_cast<float>(nn::sigmoid(logits_fake[i]) / B);
            mean_sign += logits_real[i] > 0 ? 1.0 : (logits_real[i] < 0 ? -1.0 : 0.0);
        }
        loss_d /= B;
        mean_sign /= B;
        check(std::isfinite(loss_d), "discriminator loss diverged (non-finite) at step ", step);
        disc.backward(cache_real, dreal, true);
        disc.backward(cache_fake, dfake, true);

        // lazy R1 via a stochastic directional finite difference: for u uniform
        // on the unit sphere, E[dim * ((D(x+eps*u)-D(x))/eps)^2] = ||grad D||^2
        if (cfg.r1_gamma > 0 && step % cfg.r1_interval == 0) {
            Rng r1_stream = root.child("r1").child(static_cast<uint64_t>(step));
            const int dim = 3 * S * S;
            TensorF perturbed = reals_aug;
            std::vector<float> u(static_cast<size_t>(B) * dim);
            for (int i = 0; i < B; ++i) {
                double norm_sq = 0;
                float* ui = u.data() + static_cast<size_t>(i) * dim;
                for (int j = 0; j < dim; ++j) {
                    ui[j] = static_cast<float>(r1_stream.normal());
                    norm_sq += static_cast<double>(ui[j]) * ui[j];
                }
                const float scale = static_cast<float>(cfg.r1_eps / std::sqrt(std::max(norm_sq, 1e-12)));
                float* xi = perturbed.sample(i);
                for (int j = 0; j < dim; ++j) xi[j] += ui[j] * scale;
            }
            DiscCache<float> cache_base, cache_pert;
            const VecF d_base = disc.forward(reals_aug, &cache_base);
            const VecF d_pert = disc.forward(perturbed, &cache_pert);
            const double coeff = 0.5 * cfg.r1_gamma * cfg.r1_interval * dim / (cfg.r1_eps * cfg.r1_eps);
            VecF dpert(B), dbase(B);
            for (int i = 0; i < B; ++i) {
                const double diff = static_cast<double>(d_pert[i]) - d_base[i];
                dpert[i] = static_cast<float>(2.0 * coeff * diff / B);
                dbase[i] = -dpert[i];
            }
            disc.backward(cache_pert, dpert, true);
            disc.backward(cache_base, dbase, true);
        }
        opt_d.step(d_params);

        if (step % cfg.ada_interval == 0) ada = ada_update(ada, mean_sign);

        // ---------------------------------------------------------- G step --
        Rng zg = root.child("z_g").child(static_cast<uint64_t>(step));
        auto gplan = detail::sample_mix_plan(zg, cfg.arch.z_dim, B, L, cfg.mix_prob);
        MappingCache<float> map_cache1, map_cache2;
        const MatF gw1 = gen.map_forward(gplan.z1, &map_cache1);
        const MatF gw2 = gen.map_forward(gplan.z2, &map_cache2);
        const auto gstyles = detail::mix_styles(gw1, gw2, gplan.crossover, L);
        for (int i = 0; i < B; ++i)
            noise_seeds[static_cast<size_t>(i)] = hash_combine(cfg.seed, hash_combine(fnv1a64("gnoise_g"), static_cast<uint64_t>(step) * 1000 + i));
        SynthCache<float> synth_cache;
        const TensorF gfakes = gen.synth_forward(gstyles, gen.make_noise(noise_seeds), &synth_cache);

        Rng ada_g = root.child("ada_g").child(static_cast<uint64_t>(step));
        std::vector<AugParams> gaug(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) gaug[static_cast<size_t>(i)] = sample_aug_params(ada_g, ada.p, cats, S);
        const TensorF gfakes_aug = aug_forward(gfakes, gaug);

        DiscCache<float> gcache;
        const VecF glogits = disc.forward(gfakes_aug, &gcache);
        double loss_g = 0;
        VecF dglogits(B);
        for (int i = 0; i < B; ++i) {
            loss_g += nn::softplus(-glogits[i]);
            dglogits[i] = static_cast<float>(-nn::sigmoid(-glogits[i]) / B);
        }
        loss_g /= B;
        check(std::isfinite(loss_g), "generator loss diverged (non-finite) at step ", step);

        nn::zero_grads(g_params);
        const TensorF dimg_aug = disc.backward(gcache, dglogits, /*accum=*/false);
        TensorF dimg = aug_backward(dimg_aug, gaug);
        std::vector<MatF> dstyles;
        gen.synth_backward(synth_cache, dimg, &dstyles, /*accum=*/true);

        MatF dw1 = MatF::Zero(cfg.arch.w_dim, B);
        MatF dw2 = MatF::Zero(cfg.arch.w_dim, B);
        for (int l = 0; l < L; ++l)
            for (int j = 0; j < B; ++j) {
                if (l < gplan.crossover[static_cast<size_t>(j)])
                    dw1.col(j) += dstyles[static_cast<size_t>(l)].col(j);
                else
                    dw2.col(j) += dstyles[static_cast<size_t>(l)].col(j);
            }
        gen.map_backward(map_cache1, dw1, true);
        gen.map_backward(map_cache2, dw2, true);
        opt_g.step(g_params);

        // track mean w for truncation-free initialization of inversions
        const VecF batch_mean = gw1.rowwise().mean();
        gen.w_avg = 0.995f * gen.w_avg + 0.005f * batch_mean;

        loss_d_value = loss_d;
        loss_g_value = loss_g;

        // ------------------------------------------------------ evaluation --
        if ((step + 1) % cfg.fid_interval == 0 || step + 1 == cfg.total_steps) {
            const double fid = eval_fid();
            check(std::isfinite(fid), "FID became non-finite at step ", step + 1);
            if (fid < best_fid) snapshot(step + 1, fid);
            if (csv.is_open()) {
                csv << (step + 1) << "," << fid << "," << loss_g_value << "," << loss_d_value << "," << ada.p << "\n";
                csv.flush();
            }
            if (log != nullptr)
                *log << "gan step " << (step + 1) << "  fid " << fid << "  loss_g " << loss_g_value << "  loss_d "
                     << loss_d_value << "  ada_p " << ada.p << "\n";
        }
    }

    // the checkpoint is the least-FID snapshot, not the final weights
    for (size_t i = 0; i < g_params.size(); ++i) g_params[i]->w = best_weights[i];
    gen.w_avg = best_wavg;

    GanTrainResult result{std::move(gen), GeneratorMeta{cfg.seed, best_fid, to_hex(features.weights_hash())},
                          best_fid, best_step, ada};
    return result;
}

}  // namespace ganaug::gan
