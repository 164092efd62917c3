#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/data/manifest.hpp"

namespace ganaug::data {

enum class Role { train, val, test };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::train: return "train";
        case Role::val: return "val";
        case Role::test: return "test";
    }
    return "?";
}

inline Role role_from(const std::string& s) {
    if (s == "train") return Role::train;
    if (s == "val") return Role::val;
    if (s == "test") return Role::test;
    throw ParseError("unknown role: " + s);
}

// Video-level role assignment for one fold: every frame of a video shares the
// video's role, so no polyp appears on both sides of a split.
struct SplitAssignment {
    int fold_index = 0;
    std::map<std::string, Role> role_by_video;

    Role role(const std::string& video_id) const {
        auto it = role_by_video.find(video_id);
        check(it != role_by_video.end(), "video not covered by split: ", video_id);
        return it->second;
    }
};

struct Ratios {
    double train = 0.6, val = 0.2, test = 0.2;
};

namespace detail {
// stratum label for a video = majority label of its records (ties: smaller label)
inline std::map<std::string, std::string> video_strata(const Manifest& m) {
    std::map<std::string, std::map<std::string, int>> counts;
    for (const auto& r : m.records) counts[r.video_id][r.label]++;
    std::map<std::string, std::string> stratum;
    for (const auto& [video, by_label] : counts) {
        std::string best;
        int best_n = -1;
        for (const auto& [label, n] : by_label)
            if (n > best_n) {
                best = label;
                best_n = n;
            }
        stratum[video] = best;
    }
    return stratum;
}
}  // namespace detail

// K stratified splits with rotating test groups: each label stratum is
// shuffled once, cut into k balanced groups, and fold i tests on group i, so
// every video lands in the test role exactly once across the folds. The val
// share is apportioned per stratum by largest remainder; proportions hold
// within +-1 video per role.
inline std::vector<SplitAssignment> make_splits(const Manifest& manifest, int k, Ratios ratios, uint64_t seed) {
    check_arg(k >= 2, "make_splits: k must be >= 2");
    check_arg(std::abs(ratios.train + ratios.val + ratios.test - 1.0) < 1e-9, "make_splits: ratios must sum to 1");

    const auto stratum_of = detail::video_strata(manifest);
    std::map<std::string, std::vector<std::string>> strata;  // label -> video ids (sorted)
    for (const auto& [video, label] : stratum_of) strata[label].push_back(video);

    for (const auto& [label, videos] : strata)
        check(static_cast<int>(videos.size()) >= k,
              "too few videos for label `", label, "`: ", videos.size(), " < k=", k);

    Rng rng = Rng(seed).child("splits");

    // per stratum: shuffled video list cut into k groups with sizes differing by <=1
    std::map<std::string, std::vector<std::vector<std::string>>> groups;
    for (auto& [label, videos] : strata) {
        std::sort(videos.begin(), videos.end());
        Rng stream = rng.child(label);
        stream.shuffle(videos);
        const int n = static_cast<int>(videos.size());
        const int base = n / k, rem = n % k;
        std::vector<std::vector<std::string>> g(k);
        int pos = 0;
        for (int gi = 0; gi < k; ++gi) {
            const int sz = base + (gi < rem ? 1 : 0);
            g[gi].assign(videos.begin() + pos, videos.begin() + pos + sz);
            pos += sz;
        }
        groups[label] = std::move(g);
    }

    std::vector<SplitAssignment> folds(k);
    for (int fi = 0; fi < k; ++fi) {
        folds[fi].fold_index = fi;
        for (const auto& [label, g] : groups) {
            const int n = static_cast<int>(strata[label].size());
            for (const auto& video : g[fi]) folds[fi].role_by_video[video] = Role::test;
            // remaining videos in rotation order after the test group
            std::vector<std::string> rest;
            for (int off = 1; off < k; ++off)
                for (const auto& video : g[(fi + off) % k]) rest.push_back(video);
            int val_n = static_cast<int>(std::llround(ratios.val * n));
            val_n = std::clamp(val_n, 0, static_cast<int>(rest.size()));
            for (size_t i = 0; i < rest.size(); ++i)
                folds[fi].role_by_video[rest[i]] = (static_cast<int>(i) < val_n) ? Role::val : Role::train;
        }
    }
    return folds;
}

inline Manifest subset_by_role(const Manifest& m, const SplitAssignment& split, Role role) {
    return filter_manifest(m, [&](const ImageRecord& r) { return split.role(r.video_id) == role; });
}

// `video_id<TAB>fold<TAB>role`, sorted by (fold, video) for byte-stable output
inline void save_splits(const std::filesystem::path& path, const std::vector<SplitAssignment>& folds) {
    std::ofstream out(path);
    check(out.good(), "cannot write splits: ", path.string());
    for (const auto& fold : folds)
        for (const auto& [video, role] : fold.role_by_video)
            out << video << "\t" << fold.fold_index << "\t" << role_name(role) << "\n";
    check(out.good(), "split write failed: ", path.string());
}

inline std::vector<SplitAssignment> load_splits(const std::filesystem::path& path) {
    std::ifstream in(path);
    check(in.good(), "cannot open splits: ", path.string());
    std::map<int, SplitAssignment> folds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string video, fold_s, role_s;
        if (!std::getline(ls, video, '\t') || !std::getline(ls, fold_s, '\t') || !std::getline(ls, role_s))
            throw ParseError(format_msg(path.string(), ":", lineno, ": expected video<TAB>fold<TAB>role"));
        const int fi = std::stoi(fold_s);
        folds[fi].fold_index = fi;
        folds[fi].role_by_video[video] = role_from(role_s);
    }
    std::vector<SplitAssignment> out;
    for (auto& [fi, fold] : folds) out.push_back(std::move(fold));
    return out;
}

}  // namespace ganaug::data
