#include <catch2/catch_amalgamated.hpp>

#include "ganaug/metrics/fid.hpp"
#include "ganaug/toy/corpus.hpp"

using namespace ganaug;
using namespace ganaug::metrics;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ganaug_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

MatD random_features(int n, int dim, uint64_t seed, double mean = 0.0, double scale = 1.0) {
    Rng rng(seed);
    MatD f(n, dim);
    for (int i = 0; i < f.size(); ++i) f.data()[i] = mean + scale * rng.normal();
    return f;
}
}  // namespace

TEST_CASE("fid of a set against itself is zero") {
    const MatD f = random_features(64, 16, 5);
    const auto d = fid_from_features(f, f);
    REQUIRE(std::abs(d.fid) < 1e-6);
}

TEST_CASE("fid matches the closed form for diagonal Gaussians") {
    // analytic: ||mu_a - mu_b||^2 + sum_i (sa_i + sb_i - 2 sqrt(sa_i sb_i))
    const int dim = 6;
    Eigen::VectorXd mu_a(dim), mu_b(dim), va(dim), vb(dim);
    Rng rng(17);
    for (int i = 0; i < dim; ++i) {
        mu_a[i] = rng.uniform(-2, 2);
        mu_b[i] = rng.uniform(-2, 2);
        va[i] = rng.uniform(0.2, 3.0);
        vb[i] = rng.uniform(0.2, 3.0);
    }
    double expect = (mu_a - mu_b).squaredNorm();
    for (int i = 0; i < dim; ++i) expect += va[i] + vb[i] - 2.0 * std::sqrt(va[i] * vb[i]);

    GaussianStats a{mu_a, va.asDiagonal()};
    GaussianStats b{mu_b, vb.asDiagonal()};
    const auto d = fid_from_stats(a, b);
    REQUIRE(d.fid == Catch::Approx(expect).margin(1e-4));
}

TEST_CASE("fid is symmetric and non-negative") {
    const MatD a = random_features(80, 12, 7, 0.0, 1.0);
    const MatD b = random_features(90, 12, 8, 0.4, 1.3);
    const auto dab = fid_from_features(a, b);
    const auto dba = fid_from_features(b, a);
    REQUIRE(std::abs(dab.fid - dba.fid) < 1e-6);
    REQUIRE(dab.fid >= 0.0);
    REQUIRE(dab.fid > 0.1);  // clearly different distributions
}

TEST_CASE("fid grows monotonically with corruption strength (feature level)") {
    const MatD base = random_features(120, 10, 9);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        MatD weak = base, strong = base;
        for (int i = 0; i < base.size(); ++i) {
            const double n = rng.normal();
            weak.data()[i] += 0.05 * n;
            strong.data()[i] += 0.10 * n;
        }
        const double f_weak = fid_from_features(base, weak).fid;
        const double f_strong = fid_from_features(base, strong).fid;
        REQUIRE(f_weak > 0.0);
        REQUIRE(f_strong > f_weak);
    }
}

TEST_CASE("small sets engage shrinkage instead of failing") {
    const int dim = 64;
    const MatD a = random_features(10, dim, 3);  // 10 < 64/4
    const MatD b = random_features(100, dim, 4);
    const auto d = fid_from_features(a, b);
    REQUIRE(d.shrinkage_a);
    REQUIRE_FALSE(d.shrinkage_b);
    REQUIRE(std::isfinite(d.fid));
    REQUIRE(d.fid >= 0.0);
}

TEST_CASE("gaussian_stats rejects non-finite features") {
    MatD f = random_features(8, 4, 2);
    f(3, 2) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS(gaussian_stats(f));
}

TEST_CASE("feature extractor: determinism and class separation on the toy corpus") {
    const auto dir = temp_dir("feat_train");
    toy::ToyParams params;
    params.image_size = 32;
    params.n_videos = 16;
    params.frames_per_video = 8;
    params.seed = 19;
    const auto manifest = toy::build_corpus(params, dir);

    FeatureTrainConfig cfg;
    cfg.arch.input_size = 32;
    cfg.arch.feature_dim = 48;
    cfg.arch.widths = {16, 32, 48};
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = 5;
    const auto ck = train_feature_extractor(manifest, cfg);
    const auto ck2 = train_feature_extractor(manifest, cfg);
    REQUIRE(ck.net.weights_hash() == ck2.net.weights_hash());  // same seed, same weights

    // feature determinism
    const TensorF all = data::load_all_images(manifest, 32);
    const MatD f1 = extract_features(ck.net, all);
    const MatD f2 = extract_features(ck.net, all);
    REQUIRE(f1 == f2);

    // linear probe on the binary toy label: fit ridge regression on even
    // samples, evaluate on odd; separable features by construction
    const int n = static_cast<int>(manifest.records.size());
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < n; ++i) (i % 2 == 0 ? train_idx : test_idx).push_back(i);
    const int dim = static_cast<int>(f1.cols());
    MatD x(train_idx.size(), dim + 1);
    Eigen::VectorXd y(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)).head(dim) = f1.row(train_idx[i]);
        x(static_cast<Eigen::Index>(i), dim) = 1.0;
        y[static_cast<Eigen::Index>(i)] = manifest.records[static_cast<size_t>(train_idx[i])].label == toy::kLabelLobed ? 1.0 : -1.0;
    }
    const Eigen::VectorXd beta =
        (x.transpose() * x + 1e-3 * Eigen::MatrixXd::Identity(dim + 1, dim + 1)).ldlt().solve(x.transpose() * y);
    int correct = 0;
    for (int idx : test_idx) {
        const double score = f1.row(idx).dot(beta.head(dim)) + beta[dim];
        const bool lobed = score > 0;
        if (lobed == (manifest.records[static_cast<size_t>(idx)].label == toy::kLabelLobed)) ++correct;
    }
    const double probe_acc = static_cast<double>(correct) / test_idx.size();
    REQUIRE(probe_acc >= 0.8);

    // checkpoint round-trip
    features_to_container(ck).save(dir / "feat.ckpt");
    const auto loaded = load_features(dir / "feat.ckpt");
    REQUIRE(loaded.net.weights_hash() == ck.net.weights_hash());
    REQUIRE(loaded.class_names == ck.class_names);

    // end-to-end fid on images: identical sets give ~0, disjoint styles differ
    const auto warm = data::load_all_images(data::filter_by_modality(manifest, toy::kModalityWarm), 32);
    const auto cool = data::load_all_images(data::filter_by_modality(manifest, toy::kModalityCool), 32);
    const auto d_same = fid(warm, warm, ck.net);
    const auto d_diff = fid(warm, cool, ck.net);
    REQUIRE(d_same.fid < 1e-6);
    REQUIRE(d_diff.fid > d_same.fid);
}
