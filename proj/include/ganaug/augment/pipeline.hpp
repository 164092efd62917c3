#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ganaug/core/pnm.hpp"
#include "ganaug/data/loader.hpp"
#include "ganaug/data/splits.hpp"
#include "ganaug/gan/generator.hpp"
#include "ganaug/inversion/invert.hpp"
#include "ganaug/latent/ops.hpp"
#include "ganaug/latent/pairs.hpp"

namespace ganaug::augment {

enum class EditType { translate, interpolate };

inline const char* edit_name(EditType e) { return e == EditType::translate ? "translate" : "interpolate"; }

// One augmentation run: sources + partners come from `source`, inversion goes
// through the encoder checkpoint, edits through the generator, and outputs
// are materialized under out_dir with an augmented manifest beside them.
struct AugmentationJob {
    EditType edit_type = EditType::translate;
    data::Manifest source;
    std::filesystem::path generator_ckpt;
    std::filesystem::path encoder_ckpt;
    latent::PairConstraint constraint;
    latent::CrossoverSpec crossover{-1};  // -1: default coarse/fine split for the generator
    latent::InterpolationSpec interpolation;
    int per_image_count = 0;  // translate only; 0 -> default 5
    std::filesystem::path out_dir;
    uint64_t seed = 1;

    void finalize_defaults() {
        if (edit_type == EditType::translate) {
            if (per_image_count <= 0) per_image_count = 5;  // five style-transferred images per source
            constraint.partners_per_image = per_image_count;
            constraint.require_same_modality = false;
        } else {
            if (constraint.partners_per_image <= 0) constraint.partners_per_image = 3;
            constraint.require_same_modality = true;  // three partners x three lambdas = nine per source
            constraint.target_modality.reset();
        }
        constraint.require_same_label = true;
    }

    void validate() const {
        constraint.validate();
        if (edit_type == EditType::translate) {
            check_arg(constraint.target_modality.has_value(), "translation job requires a target modality");
            check_arg(source.vocabulary.has_modality(*constraint.target_modality), "target modality `",
                      *constraint.target_modality, "` not in vocabulary");
        } else {
            interpolation.validate();
        }
    }
};

// Shared state across jobs: loaded checkpoints plus an inversion cache keyed
// by resolved image path, so cross-validation folds invert each image once.
struct AugmentContext {
    const gan::Generator<float>* generator = nullptr;
    const inversion::EncoderCheckpoint* encoder = nullptr;
    std::map<std::string, gan::StyleStack> inversion_cache;

    const gan::StyleStack& invert_cached(const data::Manifest& manifest, const data::ImageRecord& rec) {
        const std::string key = std::filesystem::weakly_canonical(manifest.resolve(rec)).string();
        auto it = inversion_cache.find(key);
        if (it != inversion_cache.end()) return it->second;
        const TensorF img = data::load_image(manifest, rec, encoder->net.arch().input_size);
        auto res = inversion::invert(img, *encoder, *generator);
        return inversion_cache.emplace(key, std::move(res.styles)).first->second;
    }
};

namespace detail {

struct PendingOutput {
    gan::StyleStack styles;
    data::ImageRecord record;
    uint64_t noise_seed;
};

inline data::Manifest materialize(const AugmentationJob& job, const AugmentContext& ctx,
                                  std::vector<PendingOutput>& outputs,
                                  const std::vector<latent::SkipEntry>& skips,
                                  const std::vector<latent::PairSample>& pairs, const std::string& param_desc) {
    namespace fs = std::filesystem;
    fs::create_directories(job.out_dir);

    data::Manifest out;
    out.vocabulary = job.source.vocabulary;
    out.provenance.command = format_msg("augment ", edit_name(job.edit_type), " seed=", job.seed);
    out.provenance.seed = job.seed;
    out.root = job.out_dir;

    const int chunk = 16;
    for (size_t start = 0; start < outputs.size(); start += chunk) {
        const size_t end = std::min(outputs.size(), start + chunk);
        std::vector<const gan::StyleStack*> stacks;
        std::vector<uint64_t> seeds;
        for (size_t i = start; i < end; ++i) {
            stacks.push_back(&outputs[i].styles);
            seeds.push_back(outputs[i].noise_seed);
        }
        const TensorF images = gan::synthesize_batch(*ctx.generator, stacks, seeds);
        for (size_t i = start; i < end; ++i) {
            TensorF img(1, 3, images.h, images.w);
            std::copy(images.sample(static_cast<int>(i - start)),
                      images.sample(static_cast<int>(i - start)) + images.sample_size(), img.v.data());
            write_ppm(job.out_dir / outputs[i].record.path, img);
            out.records.push_back(outputs[i].record);
        }
    }

    out.validate();
    out.save(job.out_dir / "augmented.manifest");
    latent::save_skip_report(job.out_dir / "skip_report.csv", skips);
    latent::save_pairs_csv(job.out_dir / "pairs.csv", pairs, edit_name(job.edit_type), param_desc);
    return out;
}

}  // namespace detail

// Modality translation by style mixing: invert source and target, keep the
// source's coarse layers and take the target's fine layers, and emit the
// re-synthesized image labeled with the (shared) histological label and the
// target's modality. The record inherits the source's video id so split
// integrity survives merging.
inline data::Manifest run_translation(AugmentationJob job, AugmentContext& ctx) {
    job.finalize_defaults();
    check_arg(job.edit_type == EditType::translate, "run_translation: wrong edit type");
    job.validate();

    const int L = ctx.generator->arch().num_style_layers();
    latent::CrossoverSpec spec = job.crossover;
    if (spec.k < 0) spec = latent::CrossoverSpec::default_for(L);
    spec.validate(L);

    const auto pair_result = latent::sample_pairs(job.source, job.constraint, job.seed);
    std::vector<detail::PendingOutput> outputs;
    int seq = 0;
    for (const auto& pair : pair_result.pairs) {
        const auto* src = job.source.find(pair.source_id);
        const auto* tgt = job.source.find(pair.partner_id);
        check(src != nullptr && tgt != nullptr, "pair references unknown record");
        check(src->label == tgt->label, "label inheritance violated: ", src->path, " vs ", tgt->path);

        const auto& w_src = ctx.invert_cached(job.source, *src);
        const auto& w_tgt = ctx.invert_cached(job.source, *tgt);

        detail::PendingOutput p;
        p.styles = latent::style_mix(w_src, w_tgt, spec);
        p.noise_seed = hash_combine(job.seed, static_cast<uint64_t>(seq));
        p.record.path = format_msg("translated_", seq, ".ppm");
        p.record.label = src->label;
        p.record.modality = *job.constraint.target_modality;
        p.record.video_id = src->video_id;
        p.record.origin = data::Origin::translated;
        p.record.source_ids = {src->path, tgt->path};
        p.record.extra["crossover_k"] = format_msg(spec.k);
        p.record.extra["partner_video"] = tgt->video_id;
        outputs.push_back(std::move(p));
        ++seq;
    }
    return detail::materialize(job, ctx, outputs, pair_result.skips, pair_result.pairs, format_msg("k=", spec.k));
}

// Latent interpolation: per source, sample same-label same-modality partners
// and emit one image per (partner, lambda). Labels are inherited; modality is
// the shared one.
inline data::Manifest run_interpolation(AugmentationJob job, AugmentContext& ctx) {
    job.finalize_defaults();
    check_arg(job.edit_type == EditType::interpolate, "run_interpolation: wrong edit type");
    job.validate();

    const auto pair_result = latent::sample_pairs(job.source, job.constraint, job.seed);
    std::vector<detail::PendingOutput> outputs;
    int seq = 0;
    for (const auto& pair : pair_result.pairs) {
        const auto* src = job.source.find(pair.source_id);
        const auto* partner = job.source.find(pair.partner_id);
        check(src != nullptr && partner != nullptr, "pair references unknown record");
        check(src->label == partner->label, "label inheritance violated: ", src->path, " vs ", partner->path);
        check(src->modality == partner->modality, "interpolation pair crosses modalities: ", src->path, " vs ",
              partner->path);

        const auto& w_a = ctx.invert_cached(job.source, *src);
        const auto& w_b = ctx.invert_cached(job.source, *partner);
        for (const double lambda : job.interpolation.lambdas) {
            detail::PendingOutput p;
            p.styles = latent::interpolate(w_a, w_b, lambda);
            p.noise_seed = hash_combine(job.seed, static_cast<uint64_t>(seq));
            p.record.path = format_msg("interp_", seq, ".ppm");
            p.record.label = src->label;
            p.record.modality = src->modality;
            p.record.video_id = src->video_id;
            p.record.origin = data::Origin::interpolated;
            p.record.source_ids = {src->path, partner->path};
            p.record.extra["lambda"] = format_msg(lambda);
            p.record.extra["partner_video"] = partner->video_id;
            outputs.push_back(std::move(p));
            ++seq;
        }
    }
    std::string lambdas_desc;
    for (double l : job.interpolation.lambdas) lambdas_desc += (lambdas_desc.empty() ? "" : " ") + format_msg(l);
    return detail::materialize(job, ctx, outputs, pair_result.skips, pair_result.pairs, lambdas_desc);
}

inline data::Manifest run_job(AugmentationJob job, AugmentContext& ctx) {
    return job.edit_type == EditType::translate ? run_translation(std::move(job), ctx)
                                                : run_interpolation(std::move(job), ctx);
}

// ---------------------------------------------------------------- merging ---

// Concatenates manifests into one in-memory manifest with absolute paths
// (inputs may live under different roots). Source-id references are rewritten
// through the same path map, so the label-inheritance and leakage checks keep
// working on the merged view.
inline data::Manifest merge_manifests(const data::Manifest& base, const std::vector<data::Manifest>& augmented) {
    namespace fs = std::filesystem;
    data::Manifest merged;
    merged.vocabulary = base.vocabulary;
    merged.provenance = base.provenance;
    merged.root = "";

    std::map<std::string, std::string> rename;  // original id -> absolute id (per input manifest, unioned)
    auto absorb = [&](const data::Manifest& m) {
        check(m.vocabulary == base.vocabulary, "vocabulary conflict while merging manifests");
        for (const auto& r : m.records) {
            const std::string abs = fs::weakly_canonical(m.resolve(r)).string();
            auto [it, inserted] = rename.emplace(r.path, abs);
            check(inserted || it->second == abs, "ambiguous record id across merged manifests: ", r.path);
            data::ImageRecord nr = r;
            nr.path = abs;
            merged.records.push_back(std::move(nr));
        }
    };
    absorb(base);
    for (const auto& m : augmented) absorb(m);

    for (auto& r : merged.records)
        for (auto& sid : r.source_ids) {
            auto it = rename.find(sid);
            if (it != rename.end()) sid = it->second;
        }

    merged.validate();  // duplicate paths, vocabulary, label inheritance
    return merged;
}

// ----------------------------------------------------------- leakage guard --

// An augmented record may train only if every video it derives from holds the
// train role; records touching val/test videos are excluded outright.
inline bool usable_for_training(const data::ImageRecord& rec, const data::Manifest& merged,
                                const data::SplitAssignment& fold) {
    if (fold.role_by_video.count(rec.video_id) == 0 || fold.role(rec.video_id) != data::Role::train) return false;
    for (const auto& sid : rec.source_ids) {
        const auto* src = merged.find(sid);
        if (src == nullptr) return false;  // unresolvable provenance never trains
        if (fold.role_by_video.count(src->video_id) == 0 || fold.role(src->video_id) != data::Role::train)
            return false;
    }
    return true;
}

inline data::Manifest training_subset(const data::Manifest& merged, const data::SplitAssignment& fold) {
    return data::filter_manifest(merged,
                                 [&](const data::ImageRecord& r) { return usable_for_training(r, merged, fold); });
}

}  // namespace ganaug::augment
