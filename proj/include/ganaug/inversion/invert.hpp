#pragma once

#include <optional>

#include "ganaug/core/resize.hpp"
#include "ganaug/gan/generator.hpp"
#include "ganaug/inversion/encoder.hpp"

namespace ganaug::inversion {

struct InversionResult {
    gan::StyleStack styles;
    TensorF reconstruction;
    double pixel_l2 = 0;                    // mean squared pixel error
    std::optional<double> perceptual;       // feature-space distance when an extractor is available
    Eigen::VectorXd delta_norms;            // per-layer offsets from the stack mean
    bool degenerate_warning = false;        // near-constant input
    std::optional<int> resized_from = {};   // original resolution when resampled
};

namespace detail {

inline double mean_sq_diff(const TensorF& a, const TensorF& b) {
    double acc = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - b.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.v.size());
}

inline double perceptual_distance(const metrics::FeatureNet<float>& perc, const TensorF& a, const TensorF& b) {
    const MatD fa = metrics::extract_features(perc, a);
    const MatD fb = metrics::extract_features(perc, b);
    return (fa - fb).squaredNorm() / static_cast<double>(fa.size());
}

inline bool near_constant(const TensorF& img) {
    double mean = 0, mean_sq = 0;
    for (float v : img.v) {
        mean += v;
        mean_sq += static_cast<double>(v) * v;
    }
    mean /= static_cast<double>(img.v.size());
    const double var = std::max(0.0, mean_sq / static_cast<double>(img.v.size()) - mean * mean);
    return std::sqrt(var) < 1e-4;
}

inline gan::StyleStack stack_from_batch(const std::vector<MatF>& styles, int col) {
    gan::StyleStack s(static_cast<int>(styles.size()), static_cast<int>(styles[0].rows()));
    for (size_t l = 0; l < styles.size(); ++l)
        for (int i = 0; i < styles[l].rows(); ++i) s.layers(static_cast<Eigen::Index>(l), i) = styles[l](i, col);
    return s;
}

}  // namespace detail

// Encoder inversion: pure function of (image, encoder, generator). Inputs at
// other resolutions are resampled (recorded in the result); near-constant
// inputs return a degenerate-input warning instead of throwing.
inline InversionResult invert(const TensorF& image, const EncoderCheckpoint& enc, const gan::Generator<float>& gen,
                              uint64_t noise_seed = 0) {
    check_generator_match(enc, gen);
    const int S = enc.net.arch().input_size;
    InversionResult res;
    TensorF input = image;
    if (input.h != S || input.w != S) {
        res.resized_from = input.h;
        input = resize_bilinear(input, S, S);
    }
    res.degenerate_warning = detail::near_constant(input);

    const auto styles = enc.net.forward(input, enc.net.arch().num_ws - 1);
    res.styles = detail::stack_from_batch(styles, 0);
    res.reconstruction = synthesize(gen, res.styles, noise_seed);
    res.pixel_l2 = detail::mean_sq_diff(res.reconstruction, input);
    res.perceptual = detail::perceptual_distance(enc.perc, res.reconstruction, input);
    res.delta_norms = res.styles.delta_norms();
    return res;
}

// Batched optimization-based inversion: Adam over the extended style stack
// from a mean-w initialization, minimizing pixel L2. The independent oracle
// for encoder quality; steps=0 returns the mean-w reconstruction untouched.
inline std::vector<InversionResult> invert_by_optimization_batch(const TensorF& images,
                                                                 const gan::Generator<float>& gen, int steps,
                                                                 uint64_t seed,
                                                                 const metrics::FeatureNet<float>* perc = nullptr,
                                                                 double lr = 0.05) {
    check_arg(steps >= 0, "invert_by_optimization: negative steps");
    const auto& arch = gen.arch();
    const int S = arch.image_size;
    const int L = arch.num_style_layers();
    const int N = images.n;

    TensorF target = images;
    std::optional<int> resized_from;
    if (target.h != S || target.w != S) {
        resized_from = target.h;
        target = resize_bilinear(target, S, S);
    }

    // optimization state: per-layer styles, initialized at the tracked mean w
    std::vector<MatF> styles(static_cast<size_t>(L));
    for (int l = 0; l < L; ++l) {
        styles[static_cast<size_t>(l)].resize(arch.w_dim, N);
        styles[static_cast<size_t>(l)].colwise() = gen.w_avg;
    }
    std::vector<uint64_t> noise_seeds(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) noise_seeds[static_cast<size_t>(i)] = hash_combine(seed, static_cast<uint64_t>(i));
    const auto noise = gen.make_noise(noise_seeds);

    // per-element Adam state over the style stack
    std::vector<MatF> m(static_cast<size_t>(L)), v(static_cast<size_t>(L));
    for (int l = 0; l < L; ++l) {
        m[static_cast<size_t>(l)] = MatF::Zero(arch.w_dim, N);
        v[static_cast<size_t>(l)] = MatF::Zero(arch.w_dim, N);
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double numel_per_sample = static_cast<double>(3 * S * S);

    for (int step = 1; step <= steps; ++step) {
        gan::SynthCache<float> cache;
        const TensorF recon = gen.synth_forward(styles, noise, &cache);
        TensorF drecon(N, 3, S, S);
        double loss = 0;
        for (size_t i = 0; i < recon.v.size(); ++i) {
            const double diff = static_cast<double>(recon.v[i]) - target.v[i];
            loss += diff * diff;
            // per-sample mean objective keeps samples independent
            drecon.v[i] = static_cast<float>(2.0 * diff / numel_per_sample);
        }
        check(std::isfinite(loss), "optimization inversion diverged (non-finite loss) at step ", step);

        std::vector<MatF> dstyles;
        gen.synth_backward(cache, drecon, &dstyles, /*accum=*/false);

        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        for (int l = 0; l < L; ++l) {
            auto& ml = m[static_cast<size_t>(l)];
            auto& vl = v[static_cast<size_t>(l)];
            auto& sl = styles[static_cast<size_t>(l)];
            const auto& gl = dstyles[static_cast<size_t>(l)];
            for (int i = 0; i < sl.size(); ++i) {
                const double g = gl.data()[i];
                ml.data()[i] = static_cast<float>(beta1 * ml.data()[i] + (1 - beta1) * g);
                vl.data()[i] = static_cast<float>(beta2 * vl.data()[i] + (1 - beta2) * g * g);
                sl.data()[i] -= static_cast<float>(lr * (ml.data()[i] / bc1) / (std::sqrt(vl.data()[i] / bc2) + eps));
            }
        }
    }

    const TensorF recon = gen.synth_forward(styles, noise);
    std::vector<InversionResult> results;
    results.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        InversionResult r;
        r.styles = detail::stack_from_batch(styles, i);
        r.reconstruction.resize(1, 3, S, S);
        std::copy(recon.sample(i), recon.sample(i) + recon.sample_size(), r.reconstruction.v.data());
        TensorF target_i(1, 3, S, S);
        std::copy(target.sample(i), target.sample(i) + target.sample_size(), target_i.v.data());
        r.pixel_l2 = detail::mean_sq_diff(r.reconstruction, target_i);
        if (perc != nullptr) r.perceptual = detail::perceptual_distance(*perc, r.reconstruction, target_i);
        r.delta_norms = r.styles.delta_norms();
        r.degenerate_warning = detail::near_constant(target_i);
        r.resized_from = resized_from;
        results.push_back(std::move(r));
    }
    return results;
}

inline InversionResult invert_by_optimization(const TensorF& image, const gan::Generator<float>& gen, int steps,
                                              uint64_t seed, const metrics::FeatureNet<float>* perc = nullptr) {
    return invert_by_optimization_batch(image, gen, steps, seed, perc).front();
}

}  // namespace ganaug::inversion
