#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ganaug/toy/corpus.hpp"
#include "ganaug/toy/oracles.hpp"

using namespace ganaug;
using namespace ganaug::toy;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ganaug_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ToyParams small_params(uint64_t seed = 3) {
    ToyParams p;
    p.image_size = 32;
    p.n_videos = 20;
    p.frames_per_video = 10;
    p.seed = seed;
    return p;
}
}  // namespace

TEST_CASE("build_corpus writes the full grid and a valid manifest") {
    const auto dir = temp_dir("toy_build");
    const auto m = build_corpus(small_params(), dir);
    REQUIRE(m.records.size() == 200);
    REQUIRE_NOTHROW(m.validate());

    // class counts per label within +-1 video of 50:50
    std::map<std::string, std::set<std::string>> videos_by_label;
    for (const auto& r : m.records) videos_by_label[r.label].insert(r.video_id);
    REQUIRE(std::abs(static_cast<int>(videos_by_label[kLabelLobed].size()) -
                     static_cast<int>(videos_by_label[kLabelRound].size())) <= 1);

    // every frame got an image and a mask on disk
    for (const auto& r : m.records) {
        REQUIRE(fs::exists(m.resolve(r)));
        REQUIRE(fs::exists(dir / mask_path_for(r.path)));
    }

    // every video's frames share a single label
    std::map<std::string, std::string> label_by_video;
    for (const auto& r : m.records) {
        auto [it, inserted] = label_by_video.emplace(r.video_id, r.label);
        if (!inserted) REQUIRE(it->second == r.label);
    }

    // both modalities represented
    std::set<std::string> mods;
    for (const auto& r : m.records) mods.insert(r.modality);
    REQUIRE(mods == std::set<std::string>{kModalityWarm, kModalityCool});
}

TEST_CASE("build_corpus is byte-identical for equal params") {
    const auto dir_a = temp_dir("toy_det_a");
    const auto dir_b = temp_dir("toy_det_b");
    const auto ma = build_corpus(small_params(11), dir_a);
    const auto mb = build_corpus(small_params(11), dir_b);
    REQUIRE(ma.content_hash() == mb.content_hash());
    for (const auto& r : ma.records) REQUIRE(hash_file(dir_a / r.path) == hash_file(dir_b / r.path));
    REQUIRE(hash_file(dir_a / "corpus.manifest") == hash_file(dir_b / "corpus.manifest"));

    const auto dir_c = temp_dir("toy_det_c");
    const auto mc = build_corpus(small_params(12), dir_c);
    REQUIRE(ma.content_hash() != mc.content_hash());
}

TEST_CASE("build_corpus validates params") {
    ToyParams p = small_params();
    p.image_size = 48;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
    p = small_params();
    p.n_videos = 5;
    REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("modality oracle is exact on unedited toy images") {
    const auto dir = temp_dir("toy_oracle_mod");
    const auto m = build_corpus(small_params(7), dir);
    for (const auto& r : m.records) {
        const auto img = read_pnm(m.resolve(r));
        const auto guess = modality_oracle(img);
        REQUIRE(guess.modality == r.modality);
        REQUIRE(guess.confidence >= 0.99);
    }
}

TEST_CASE("modality oracle on uniform gray is ambiguous") {
    TensorF gray(1, 3, 32, 32);
    gray.fill(0.5f);
    const auto guess = modality_oracle(gray);
    // warmth is exactly 0 on gray, so the rule sits at its midpoint
    REQUIRE(guess.confidence == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(guess.confidence <= 0.6);
}

TEST_CASE("shape oracle: self overlap is exact, blank is degenerate") {
    const auto dir = temp_dir("toy_oracle_shape");
    const auto m = build_corpus(small_params(5), dir);
    for (size_t i = 0; i < 20; ++i) {
        const auto& r = m.records[i * 7 % m.records.size()];
        const auto img = read_pnm(m.resolve(r));
        const auto mask = read_pnm(dir / mask_path_for(r.path));
        const auto score = shape_oracle(img, mask);
        REQUIRE_FALSE(score.degenerate);
        REQUIRE(score.iou >= 0.98);
    }

    TensorF blank(1, 3, 32, 32);
    TensorF mask(1, 1, 32, 32);
    mask.fill(1.0f);
    const auto score = shape_oracle(blank, mask);
    REQUIRE(score.degenerate);
    REQUIRE(score.iou == 0.0);
}

TEST_CASE("shape oracle separates same-shape from cross-shape masks") {
    const auto dir = temp_dir("toy_oracle_gap");
    const auto m = build_corpus(small_params(13), dir);

    // group one mask per video
    std::map<std::string, std::pair<std::string, TensorF>> video_mask;  // video -> (label, mask of frame 0)
    for (const auto& r : m.records)
        if (video_mask.find(r.video_id) == video_mask.end())
            video_mask[r.video_id] = {r.label, read_pnm(dir / mask_path_for(r.path))};

    double same_sum = 0, cross_sum = 0;
    int same_n = 0, cross_n = 0;
    int idx = 0;
    for (const auto& r : m.records) {
        if (++idx % 3 != 0) continue;  // subsample for speed
        const auto img = read_pnm(m.resolve(r));
        for (const auto& [video, entry] : video_mask) {
            if (video == r.video_id) continue;
            const auto score = shape_oracle(img, entry.second);
            if (entry.first == r.label) {
                same_sum += score.iou;
                ++same_n;
            } else {
                cross_sum += score.iou;
                ++cross_n;
            }
        }
    }
    const double same_mean = same_sum / same_n;
    const double cross_mean = cross_sum / cross_n;
    // corpus-wide distributions computed once at seed 13: same-class mean
    // 0.528, cross-class 0.497, gap 0.0312 (deterministic); pinned with slack
    REQUIRE(same_mean > cross_mean);
    REQUIRE(same_mean - cross_mean > 0.025);
}

TEST_CASE("oracles are pure: repeated calls agree") {
    const auto dir = temp_dir("toy_oracle_pure");
    ToyParams p = small_params(21);
    p.n_videos = 10;
    p.frames_per_video = 2;
    const auto m = build_corpus(p, dir);
    const auto img = read_pnm(m.resolve(m.records[3]));
    const auto g1 = modality_oracle(img);
    const auto g2 = modality_oracle(img);
    REQUIRE(g1.modality == g2.modality);
    REQUIRE(g1.confidence == g2.confidence);
    REQUIRE(g1.warmth == g2.warmth);
}
