#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/data/manifest.hpp"

namespace ganaug::latent {

// Constraints on partner sampling. Same-label is non-negotiable in every
// pipeline (cross-label features must never transfer); same-modality applies
// to interpolation; target_modality switches translation mode, where partners
// come from the target domain and sources from the rest.
struct PairConstraint {
    bool require_same_label = true;
    bool require_same_modality = false;
    std::optional<std::string> target_modality;
    int partners_per_image = 3;

    void validate() const {
        check_arg(require_same_label, "require_same_label must stay true");
        check_arg(partners_per_image >= 1, "partners_per_image must be >= 1");
        check_arg(!(require_same_modality && target_modality.has_value()),
                  "same-modality and target-modality constraints are mutually exclusive");
    }
};

struct PairSample {
    std::string source_id;
    std::string partner_id;
};

struct SkipEntry {
    std::string source_id;
    std::string reason;
};

struct PairResult {
    std::vector<PairSample> pairs;
    std::vector<SkipEntry> skips;
};

// For each eligible source record, draws partners_per_image distinct partners
// satisfying the constraint (fewer when the pool is short, with a skip-report
// entry). Deterministic: partner draws come from a per-source child stream of
// `seed`, so record order changes do not reshuffle other sources' partners.
inline PairResult sample_pairs(const data::Manifest& manifest, const PairConstraint& constraint, uint64_t seed) {
    constraint.validate();
    PairResult result;
    const Rng root = Rng(seed).child("pairs");

    for (const auto& source : manifest.records) {
        if (constraint.target_modality.has_value() && source.modality == *constraint.target_modality)
            continue;  // already in the target domain; not a translation source

        std::vector<const data::ImageRecord*> pool;
        for (const auto& candidate : manifest.records) {
            if (candidate.path == source.path) continue;
            if (constraint.require_same_label && candidate.label != source.label) continue;
            if (constraint.require_same_modality && candidate.modality != source.modality) continue;
            if (constraint.target_modality.has_value() && candidate.modality != *constraint.target_modality) continue;
            pool.push_back(&candidate);
        }

        if (pool.empty()) {
            result.skips.push_back({source.path, "no eligible partner"});
            continue;
        }
        const int want = constraint.partners_per_image;
        const int take = std::min<int>(want, static_cast<int>(pool.size()));
        if (take < want)
            result.skips.push_back({source.path, format_msg("only ", take, " of ", want, " partners available")});

        // partial Fisher-Yates for `take` draws without replacement
        Rng stream = root.child(source.path);
        std::vector<size_t> idx(pool.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (int i = 0; i < take; ++i) {
            const auto j = static_cast<size_t>(stream.uniform_int(i, static_cast<int64_t>(idx.size()) - 1));
            std::swap(idx[static_cast<size_t>(i)], idx[j]);
            result.pairs.push_back({source.path, pool[idx[static_cast<size_t>(i)]]->path});
        }
    }
    return result;
}

// audit/replay serialization: `source_id,partner_id,edit_type,param`
inline void save_pairs_csv(const std::filesystem::path& path, const std::vector<PairSample>& pairs,
                           const std::string& edit_type, const std::string& param) {
    std::ofstream out(path);
    check(out.good(), "cannot write pair list: ", path.string());
    out << "source_id,partner_id,edit_type,param\n";
    for (const auto& p : pairs) out << p.source_id << "," << p.partner_id << "," << edit_type << "," << param << "\n";
}

inline void save_skip_report(const std::filesystem::path& path, const std::vector<SkipEntry>& skips) {
    std::ofstream out(path);
    check(out.good(), "cannot write skip report: ", path.string());
    out << "source_id,reason\n";
    for (const auto& s : skips) out << s.source_id << "," << s.reason << "\n";
}

}  // namespace ganaug::latent
