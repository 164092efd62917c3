#pragma once

#include <filesystem>
#include <iostream>

#include "ganaug/augment/pipeline.hpp"
#include "ganaug/classify/train.hpp"
#include "ganaug/data/splits.hpp"

namespace ganaug::classify {

// K-fold cross-validation protocol: video-level 60:20:20 splits per fold,
// augmentation jobs applied to train-role records only, hyperparameter grid
// selected on validation, best config evaluated on the untouched test role.
struct CvOptions {
    int k = 5;
    data::Ratios ratios;
    uint64_t seed = 1;
    std::vector<ClassifierConfig> grid;  // empty -> supplement default grid over `base`
    ClassifierConfig base;
    std::string positive_label = "neoplastic";
    std::string select_metric = "f1";
    int max_train_per_class = 0;  // starved-regime cap; 0 disables
};

struct CvAugJob {
    augment::EditType edit_type = augment::EditType::interpolate;
    std::optional<std::string> target_modality;  // translate only
    int per_image_count = 0;                     // translate: targets per source
    int partners_per_image = 0;                  // interpolate
    latent::InterpolationSpec interpolation;
    latent::CrossoverSpec crossover{-1};
    uint64_t seed = 1;
};

namespace detail {

inline data::Manifest starve(const data::Manifest& train, int max_per_class, uint64_t seed) {
    if (max_per_class <= 0) return train;
    std::map<std::string, std::vector<int>> by_label;
    for (size_t i = 0; i < train.records.size(); ++i)
        by_label[train.records[i].label].push_back(static_cast<int>(i));
    std::set<int> keep;
    Rng rng = Rng(seed).child("starve");
    for (auto& [label, idx] : by_label) {
        Rng stream = rng.child(label);
        stream.shuffle(idx);
        for (size_t i = 0; i < idx.size() && i < static_cast<size_t>(max_per_class); ++i) keep.insert(idx[i]);
    }
    int pos = 0;
    return data::filter_manifest(train, [&](const data::ImageRecord&) { return keep.count(pos++) > 0; });
}

}  // namespace detail

struct CvResult {
    MetricsReport report;
    std::vector<data::SplitAssignment> folds;
};

inline CvResult cross_validate(const data::Manifest& manifest, const std::vector<CvAugJob>& jobs,
                               const CvOptions& opts, augment::AugmentContext* aug_ctx,
                               const std::filesystem::path& workdir, std::ostream* log = nullptr) {
    check_arg(jobs.empty() || aug_ctx != nullptr, "augmentation jobs need a loaded generator/encoder context");
    namespace fs = std::filesystem;

    const auto folds = data::make_splits(manifest, opts.k, opts.ratios, opts.seed);
    const auto grid = opts.grid.empty() ? default_grid(opts.base) : opts.grid;

    CvResult result;
    result.folds = folds;
    result.report.positive_label = opts.positive_label;

    for (const auto& fold : folds) {
        const data::Manifest train_real = detail::starve(
            data::subset_by_role(manifest, fold, data::Role::train), opts.max_train_per_class,
            hash_combine(opts.seed, static_cast<uint64_t>(fold.fold_index)));
        const data::Manifest val = data::subset_by_role(manifest, fold, data::Role::val);
        const data::Manifest test = data::subset_by_role(manifest, fold, data::Role::test);
        check(!train_real.records.empty() && !val.records.empty() && !test.records.empty(),
              "fold ", fold.fold_index, ": empty role subset");

        // augmentation sees train-role data only
        std::vector<data::Manifest> augmented;
        for (size_t ji = 0; ji < jobs.size(); ++ji) {
            const auto& j = jobs[ji];
            augment::AugmentationJob aj;
            aj.edit_type = j.edit_type;
            aj.source = train_real;
            aj.constraint.target_modality = j.target_modality;
            aj.constraint.partners_per_image = (j.edit_type == augment::EditType::translate)
                                                   ? std::max(1, j.per_image_count)
                                                   : std::max(1, j.partners_per_image);
            aj.per_image_count = j.per_image_count;
            aj.interpolation = j.interpolation;
            aj.crossover = j.crossover;
            aj.out_dir = workdir / format_msg("fold", fold.fold_index, "_job", ji);
            aj.seed = hash_combine(j.seed, static_cast<uint64_t>(fold.fold_index));
            augmented.push_back(augment::run_job(std::move(aj), *aug_ctx));
        }

        const data::Manifest merged = augment::merge_manifests(train_real, augmented);
        const data::Manifest train_full = augment::training_subset(merged, fold);
        check(!train_full.records.empty(), "fold ", fold.fold_index, ": empty training set after leakage guard");

        // grid search on validation
        FoldReport fr;
        fr.fold = fold.fold_index;
        double best_val = -1.0;
        for (const auto& cfg_base : grid) {
            ClassifierConfig cfg = cfg_base;
            cfg.seed = hash_combine(opts.seed, static_cast<uint64_t>(fold.fold_index) * 131 + 7);
            const auto ck = train_classifier(train_full, val, cfg, opts.positive_label, opts.select_metric);
            if (ck.best_val_metric > best_val) {
                best_val = ck.best_val_metric;
                const auto test_result = evaluate(ck, test);
                fr.confusion = test_result.confusion;
                fr.metrics = test_result.metrics;
                fr.chosen_config = cfg.describe();
            }
        }
        if (log != nullptr)
            *log << "fold " << fold.fold_index << "  train " << train_full.records.size() << " (real "
                 << train_real.records.size() << ")  val " << val.records.size() << "  test " << test.records.size()
                 << "  acc " << fr.metrics.accuracy << "  [" << fr.chosen_config << "]\n";
        result.report.folds.push_back(std::move(fr));
    }

    result.report.compute_mean();
    result.report.validate();
    return result;
}

}  // namespace ganaug::classify
