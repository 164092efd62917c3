#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ganaug/classify/cross_validate.hpp"
#include "ganaug/classify/train.hpp"
#include "ganaug/toy/corpus.hpp"

using namespace ganaug;
using namespace ganaug::classify;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ganaug_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("metrics from confusion counts match the direct formulas") {
    // all correct
    const Metrics perfect = metrics_from_confusion({5, 0, 5, 0});
    REQUIRE(perfect.accuracy == 1.0);
    REQUIRE(perfect.f1 == 1.0);

    // TP=2 FN=1 FP=1 TN=6
    const Metrics m = metrics_from_confusion({2, 1, 6, 1});
    REQUIRE(m.sensitivity == Catch::Approx(2.0 / 3.0).margin(5e-4));
    REQUIRE(m.specificity == Catch::Approx(6.0 / 7.0).margin(5e-4));
    REQUIRE(m.precision == Catch::Approx(2.0 / 3.0).margin(5e-4));
    REQUIRE(m.accuracy == Catch::Approx(0.8).margin(1e-12));

    // zero-denominator convention
    const Metrics empty = metrics_from_confusion({0, 0, 4, 0});
    REQUIRE(empty.sensitivity == 0.0);
    REQUIRE(empty.precision == 0.0);
}

TEST_CASE("metrics match a brute-force counting oracle on random prediction vectors") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(5, 200));
        std::vector<int> truth(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            truth[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(0, 1));
            pred[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_int(0, 1));
        }
        Confusion c;
        for (int i = 0; i < n; ++i) {
            const bool tp = truth[static_cast<size_t>(i)] == 1, pp = pred[static_cast<size_t>(i)] == 1;
            if (tp && pp)
                ++c.tp;
            else if (tp)
                ++c.fn;
            else if (pp)
                ++c.fp;
            else
                ++c.tn;
        }
        const Metrics m = metrics_from_confusion(c);

        // independent counting oracle
        int correct = 0, pos_hit = 0, pos_total = 0, neg_hit = 0, neg_total = 0, pred_pos = 0, pred_pos_hit = 0;
        for (int i = 0; i < n; ++i) {
            const int t = truth[static_cast<size_t>(i)], p = pred[static_cast<size_t>(i)];
            correct += (t == p);
            if (t == 1) {
                ++pos_total;
                pos_hit += (p == 1);
            } else {
                ++neg_total;
                neg_hit += (p == 0);
            }
            if (p == 1) {
                ++pred_pos;
                pred_pos_hit += (t == 1);
            }
        }
        REQUIRE(m.accuracy == Catch::Approx(static_cast<double>(correct) / n).margin(1e-12));
        if (pos_total > 0) REQUIRE(m.sensitivity == Catch::Approx(static_cast<double>(pos_hit) / pos_total).margin(1e-12));
        if (neg_total > 0) REQUIRE(m.specificity == Catch::Approx(static_cast<double>(neg_hit) / neg_total).margin(1e-12));
        if (pred_pos > 0) REQUIRE(m.precision == Catch::Approx(static_cast<double>(pred_pos_hit) / pred_pos).margin(1e-12));

        // F1 identity
        if (m.precision + m.sensitivity > 0)
            REQUIRE(m.f1 ==
                    Catch::Approx(2 * m.precision * m.sensitivity / (m.precision + m.sensitivity)).margin(1e-9));
    }
}

TEST_CASE("class weights default to inverse label frequency") {
    // supplement-shaped imbalance: 949 neoplastic vs 179 non-neoplastic
    std::vector<int> labels;
    labels.insert(labels.end(), 949, 0);  // index 0 = neoplastic (sorted order)
    labels.insert(labels.end(), 179, 1);
    const auto w = classify::detail::inverse_frequency_weights(labels, 2);
    REQUIRE(w[0] / w[1] == Catch::Approx(179.0 / 949.0).epsilon(1e-9));
}

TEST_CASE("report mean equals the arithmetic mean of fold metrics") {
    MetricsReport rep;
    rep.positive_label = "neoplastic";
    Rng rng(7);
    for (int f = 0; f < 5; ++f) {
        FoldReport fr;
        fr.fold = f;
        fr.confusion = {static_cast<long>(rng.uniform_int(1, 20)), static_cast<long>(rng.uniform_int(0, 10)),
                        static_cast<long>(rng.uniform_int(1, 20)), static_cast<long>(rng.uniform_int(0, 10))};
        fr.metrics = metrics_from_confusion(fr.confusion);
        rep.folds.push_back(fr);
    }
    rep.compute_mean();
    REQUIRE_NOTHROW(rep.validate());
    double acc = 0;
    for (const auto& f : rep.folds) acc += f.metrics.accuracy;
    REQUIRE(rep.mean.accuracy == Catch::Approx(acc / 5).margin(1e-9));

    const std::string csv = rep.to_csv();
    REQUIRE(csv.rfind("fold,accuracy,f1_score,sensitivity,specificity,precision", 0) == 0);
    REQUIRE(csv.find("mean,") != std::string::npos);
}

TEST_CASE("classifier learns the toy task; deterministic; rejects single-label train") {
    const auto dir = temp_dir("cls_train");
    toy::ToyParams params;
    params.image_size = 32;
    params.n_videos = 20;
    params.frames_per_video = 8;
    params.seed = 61;
    const auto corpus = toy::build_corpus(params, dir);

    const auto folds = data::make_splits(corpus, 5, data::Ratios{}, 3);
    const auto train = data::subset_by_role(corpus, folds[0], data::Role::train);
    const auto val = data::subset_by_role(corpus, folds[0], data::Role::val);
    const auto test = data::subset_by_role(corpus, folds[0], data::Role::test);

    ClassifierConfig cfg;
    cfg.input_size = 32;
    cfg.widths = {16, 32, 48};
    cfg.learning_rate = 1e-3;
    cfg.epochs = 100;
    cfg.patience = 30;
    cfg.batch_size = 8;
    cfg.seed = 5;
    const auto ck = train_classifier(train, val, cfg);
    REQUIRE(ck.best_val_metric >= 0.9);  // learnable by construction (observed 1.0)

    const auto result = evaluate(ck, test);
    REQUIRE(result.metrics.accuracy >= 0.6);  // video-level generalization gap is expected
    REQUIRE(result.confusion.total() == static_cast<long>(test.records.size()));

    // determinism: identical final metrics
    const auto ck2 = train_classifier(train, val, cfg);
    REQUIRE(ck2.net.weights_hash() == ck.net.weights_hash());
    REQUIRE(evaluate(ck2, test).metrics.accuracy == result.metrics.accuracy);

    // single-label training set rejected
    const auto single = data::filter_by_label(train, toy::kLabelLobed);
    REQUIRE_THROWS_WITH(train_classifier(single, val, cfg), Catch::Matchers::ContainsSubstring("single label"));

    // checkpoint round-trip
    classifier_to_container(ck).save(dir / "cls.ckpt");
    const auto back = classifier_from_container(Container::load(dir / "cls.ckpt"));
    REQUIRE(back.net.weights_hash() == ck.net.weights_hash());
    REQUIRE(evaluate(back, test).metrics.accuracy == result.metrics.accuracy);
}

TEST_CASE("an untrained classifier sits at chance on a balanced test set") {
    const auto dir = temp_dir("cls_chance");
    toy::ToyParams params;
    params.image_size = 32;
    params.n_videos = 10;
    params.frames_per_video = 10;
    params.seed = 67;
    const auto corpus = toy::build_corpus(params, dir);

    ClassifierArch arch;
    arch.input_size = 32;
    arch.widths = {12, 24, 32};
    ClassifierCheckpoint ck;
    ck.net = Classifier<float>(arch, 99);  // random weights, never trained
    ck.labels = {toy::kLabelLobed, toy::kLabelRound};
    ck.positive_label = toy::kLabelLobed;

    // balance the test set exactly
    int lobed = 0, round = 0;
    const auto balanced = data::filter_manifest(corpus, [&](const data::ImageRecord& r) {
        if (r.label == toy::kLabelLobed && lobed < 40) return ++lobed > 0;
        if (r.label == toy::kLabelRound && round < 40) return ++round > 0;
        return false;
    });
    REQUIRE(balanced.records.size() == 80);
    const auto result = evaluate(ck, balanced);
    REQUIRE(result.metrics.accuracy == Catch::Approx(0.5).margin(0.1));
}

TEST_CASE("cross_validate: structure, rotation, mean consistency") {
    const auto dir = temp_dir("cls_cv");
    toy::ToyParams params;
    params.image_size = 32;
    params.n_videos = 12;
    params.frames_per_video = 5;
    params.seed = 71;
    const auto corpus = toy::build_corpus(params, dir);

    CvOptions opts;
    opts.k = 5;
    opts.seed = 9;
    opts.base.input_size = 32;
    opts.base.widths = {12, 24, 32};
    opts.base.learning_rate = 1e-3;
    opts.base.epochs = 6;
    opts.base.batch_size = 12;
    opts.grid = {opts.base};  // single config for speed

    const auto cv = cross_validate(corpus, {}, opts, nullptr, dir / "work");
    REQUIRE(cv.report.folds.size() == 5);
    REQUIRE_NOTHROW(cv.report.validate());

    // every video tested exactly once across folds
    std::map<std::string, int> tested;
    for (const auto& fold : cv.folds)
        for (const auto& [video, role] : fold.role_by_video)
            if (role == data::Role::test) tested[video]++;
    for (const auto& [video, n] : tested) REQUIRE(n == 1);
    REQUIRE(tested.size() == corpus.video_ids().size());

    // mean row is the arithmetic mean of folds
    double acc = 0;
    for (const auto& f : cv.report.folds) acc += f.metrics.accuracy;
    REQUIRE(cv.report.mean.accuracy == Catch::Approx(acc / 5).margin(1e-9));

    // starved option caps per-class train images
    CvOptions starved = opts;
    starved.max_train_per_class = 5;
    const auto cv2 = cross_validate(corpus, {}, starved, nullptr, dir / "work2");
    REQUIRE(cv2.report.folds.size() == 5);
}
