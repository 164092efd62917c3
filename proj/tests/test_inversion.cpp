#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ganaug/inversion/invert.hpp"
#include "ganaug/inversion/train.hpp"
#include "ganaug/toy/corpus.hpp"

using namespace ganaug;
using namespace ganaug::inversion;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ganaug_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

gan::GanArch tiny_arch(int size = 16) {
    gan::GanArch a;
    a.image_size = size;
    a.z_dim = 8;
    a.w_dim = 8;
    a.map_layers = 2;
    a.map_hidden = 8;
    a.channels.assign(static_cast<size_t>(std::log2(size)) - 1, 10);
    return a;
}

EncoderArch tiny_enc(const gan::GanArch& g) {
    EncoderArch a = EncoderArch::for_generator(g);
    a.trunk_dim = 32;
    return a;
}
}  // namespace

TEST_CASE("encoder gradients match finite differences") {
    EncoderArch arch;
    arch.input_size = 16;
    arch.w_dim = 6;
    arch.num_ws = 5;
    arch.widths = {6, 8};
    arch.trunk_dim = 12;
    Encoder<double> enc(arch, 3);

    Rng rng(5);
    TensorD x(2, 3, 16, 16);
    for (auto& v : x.v) v = rng.uniform();
    std::vector<MatD> proj(5);
    for (auto& p : proj) {
        p.resize(6, 2);
        for (int i = 0; i < p.size(); ++i) p.data()[i] = rng.normal();
    }
    const int active = 3;

    auto loss = [&]() {
        const auto styles = enc.forward(x, active);
        double acc = 0;
        for (size_t l = 0; l < styles.size(); ++l) acc += (styles[l].array() * proj[l].array()).sum();
        return acc;
    };

    EncoderCache<double> cache;
    enc.forward(x, active, &cache);
    nn::zero_grads(enc.params());
    enc.backward(cache, proj, active);

    for (auto* p : enc.params()) {
        // inactive delta heads receive no gradient; their FD is also zero
        INFO("param " << p->name);
        const double before = std::abs(loss());
        REQUIRE(std::isfinite(before));
        const size_t stride = std::max<size_t>(1, p->w.size() / 48);
        for (size_t i = 0; i < p->w.size(); i += stride) {
            const double orig = p->w[i];
            const double eps = 1e-5;
            p->w[i] = orig + eps;
            const double lp = loss();
            p->w[i] = orig - eps;
            const double lm = loss();
            p->w[i] = orig;
            const double numeric = (lp - lm) / (2 * eps);
            const double scale = std::max({1.0, std::abs(numeric), std::abs(p->g[i])});
            REQUIRE(std::abs(numeric - p->g[i]) / scale < 1e-5);
        }
    }
}

TEST_CASE("invert is pure, flags degenerate inputs, records resizes") {
    const auto arch = tiny_arch();
    gan::Generator<float> gen(arch, 7);
    EncoderCheckpoint enc;
    enc.net = Encoder<float>(tiny_enc(arch), 9);
    metrics::FeatureArch farch;
    farch.input_size = 16;
    farch.feature_dim = 16;
    farch.widths = {8, 12, 16};
    enc.perc = metrics::FeatureNet<float>(farch, 11);
    enc.meta.generator_hash = gen.weights_hash();

    Rng rng(3);
    TensorF img(1, 3, 16, 16);
    for (auto& v : img.v) v = static_cast<float>(rng.uniform());

    const auto r1 = invert(img, enc, gen);
    const auto r2 = invert(img, enc, gen);
    REQUIRE(r1.styles.content_hash() == r2.styles.content_hash());
    REQUIRE(r1.reconstruction.v == r2.reconstruction.v);
    REQUIRE(r1.pixel_l2 == r2.pixel_l2);
    REQUIRE(r1.pixel_l2 >= 0.0);
    REQUIRE(r1.perceptual.has_value());
    REQUIRE(*r1.perceptual >= 0.0);
    REQUIRE(r1.delta_norms.size() == arch.num_style_layers());
    REQUIRE_FALSE(r1.degenerate_warning);
    REQUIRE_FALSE(r1.resized_from.has_value());

    // constant black image: warning flag, no exception
    TensorF black(1, 3, 16, 16);
    const auto rb = invert(black, enc, gen);
    REQUIRE(rb.degenerate_warning);
    REQUIRE(std::isfinite(rb.pixel_l2));

    // resize recorded
    TensorF big(1, 3, 32, 32);
    for (auto& v : big.v) v = 0.5f + 0.1f * static_cast<float>(rng.normal());
    const auto rr = invert(big, enc, gen);
    REQUIRE(rr.resized_from == 32);

    // generator mismatch refuses to run
    gan::Generator<float> other(arch, 8);
    REQUIRE_THROWS_WITH(invert(img, enc, other), Catch::Matchers::ContainsSubstring("generator"));
}

TEST_CASE("optimization inversion: init contract, improvement, determinism") {
    const auto arch = tiny_arch();
    gan::Generator<float> gen(arch, 13);
    gen.w_avg.setConstant(0.1f);

    // target inside generator range: synthesized from a known stack
    Rng rng(15);
    Eigen::VectorXd z(8);
    for (int i = 0; i < 8; ++i) z[i] = rng.normal();
    const auto target_stack = gan::map_latent(gen, z);
    const TensorF target = gan::synthesize(gen, target_stack, 0);

    // steps=0 returns the mean-w reconstruction untouched
    const auto r0 = invert_by_optimization(target, gen, 0, 42);
    const gan::StyleStack mean_stack = gan::StyleStack::broadcast(gen.w_avg.cast<double>(), arch.num_style_layers());
    const TensorF mean_recon = gan::synthesize(gen, mean_stack, hash_combine(42, 0));
    REQUIRE(r0.reconstruction.v == mean_recon.v);

    // optimization reduces distortion
    const auto r100 = invert_by_optimization(target, gen, 100, 42);
    REQUIRE(r100.pixel_l2 < r0.pixel_l2);

    // deterministic given the seed
    const auto r100b = invert_by_optimization(target, gen, 100, 42);
    REQUIRE(r100.pixel_l2 == r100b.pixel_l2);
    REQUIRE(r100.styles.content_hash() == r100b.styles.content_hash());
}

TEST_CASE("encoder checkpoint round-trip and generator guard") {
    const auto dir = temp_dir("enc_ckpt");
    const auto arch = tiny_arch();
    gan::Generator<float> gen(arch, 17);
    EncoderCheckpoint ck;
    ck.net = Encoder<float>(tiny_enc(arch), 19);
    metrics::FeatureArch farch;
    farch.input_size = 16;
    farch.feature_dim = 16;
    farch.widths = {8, 12, 16};
    ck.perc = metrics::FeatureNet<float>(farch, 21);
    ck.meta = {gen.weights_hash(), 1.5, 6, 20000, 19};

    save_encoder(dir / "e.ckpt", ck);
    const auto back = load_encoder(dir / "e.ckpt");
    REQUIRE(back.net.weights_hash() == ck.net.weights_hash());
    REQUIRE(back.perc.weights_hash() == ck.perc.weights_hash());
    REQUIRE(back.meta.generator_hash == gen.weights_hash());
    REQUIRE(back.meta.l2_lambda == 1.5);
    REQUIRE(back.meta.batch_size == 6);
    REQUIRE_NOTHROW(check_generator_match(back, gen));
}

TEST_CASE("encoder training: short run is deterministic and leaves the generator frozen") {
    const auto dir = temp_dir("enc_train");
    toy::ToyParams params;
    params.image_size = 32;
    params.n_videos = 10;
    params.frames_per_video = 3;
    params.seed = 23;
    const auto manifest = toy::build_corpus(params, dir);

    const auto garch = tiny_arch(32);
    gan::Generator<float> gen(garch, 25);
    const uint64_t gen_hash = gen.weights_hash();

    metrics::FeatureTrainConfig fcfg;
    fcfg.arch.input_size = 32;
    fcfg.arch.feature_dim = 16;
    fcfg.arch.widths = {8, 12, 16};
    fcfg.epochs = 2;
    fcfg.seed = 27;
    const auto features = metrics::train_feature_extractor(manifest, fcfg);

    EncoderTrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 4;
    cfg.warmup_steps = 10;
    cfg.seed = 29;
    const auto r1 = train_encoder(manifest, gen, features.net, cfg);
    const auto r2 = train_encoder(manifest, gen, features.net, cfg);

    REQUIRE(gen.weights_hash() == gen_hash);  // frozen-generator contract
    REQUIRE(r1.checkpoint.net.weights_hash() == r2.checkpoint.net.weights_hash());
    REQUIRE(r1.final_l2 == r2.final_l2);
    REQUIRE(std::isfinite(r1.final_l2));
    REQUIRE(r1.checkpoint.meta.generator_hash == gen_hash);

    // defaults carried in the checkpoint metadata
    EncoderTrainConfig defaults;
    REQUIRE(defaults.l2_lambda == 1.5);
    REQUIRE(defaults.batch_size == 6);
    REQUIRE(defaults.steps == 20000);
}
