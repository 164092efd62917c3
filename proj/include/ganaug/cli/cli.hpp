#pragma once

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "ganaug/augment/pipeline.hpp"
#include "ganaug/classify/cross_validate.hpp"
#include "ganaug/core/run_record.hpp"
#include "ganaug/gan/train.hpp"
#include "ganaug/inversion/train.hpp"
#include "ganaug/latent/cluster.hpp"
#include "ganaug/metrics/fid.hpp"
#include "ganaug/report/grid.hpp"
#include "ganaug/toy/corpus.hpp"

namespace ganaug::cli {

namespace detail {

inline std::string join_args(const std::vector<std::string>& args) {
    std::string s = "ganaug";
    for (const auto& a : args) s += " " + a;
    return s;
}

// `--set section.key=value` overrides on top of --config on top of defaults
inline KvConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
    KvConfig kv = config_path.empty() ? KvConfig() : KvConfig::parse_file(config_path);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got: " + s);
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    return kv;
}

inline std::filesystem::path default_out(const std::string& given, const std::string& command_slug) {
    if (!given.empty()) return given;
    const char* root = std::getenv("GANAUG_OUT_ROOT");
    if (root == nullptr || *root == '\0')
        throw UsageError("--out not given and GANAUG_OUT_ROOT is not set");
    return std::filesystem::path(root) / command_slug;
}

inline nlohmann::json kv_to_json(const KvConfig& kv) {
    auto j = nlohmann::json::object();
    for (const auto& [k, v] : kv.entries()) j[k] = v;
    return j;
}

inline void write_record(const std::filesystem::path& path, const std::vector<std::string>& args,
                         const nlohmann::json& config, uint64_t seed,
                         const std::vector<std::pair<std::string, std::string>>& inputs = {}) {
    RunRecord rec;
    rec.command_line = join_args(args);
    rec.resolved_config = config;
    rec.input_hashes = inputs;
    rec.seed = seed;
    rec.write(path);
}

inline gan::StyleStack load_styles(const std::filesystem::path& path) {
    const Container c = Container::load(path);
    check(c.kind == "styles", "not a styles file: ", path.string());
    const auto& a = c.require("styles");
    check(a.dims.size() == 2, "styles array must be 2-d");
    gan::StyleStack s(a.dims[0], a.dims[1]);
    for (int l = 0; l < a.dims[0]; ++l)
        for (int i = 0; i < a.dims[1]; ++i)
            s.layers(l, i) = a.data[static_cast<size_t>(l) * a.dims[1] + i];
    return s;
}

inline void save_styles(const std::filesystem::path& path, const gan::StyleStack& s) {
    Container c;
    c.kind = "styles";
    c.config["num_layers"] = s.num_layers();
    c.config["w_dim"] = s.dim();
    std::vector<float> data(static_cast<size_t>(s.num_layers()) * s.dim());
    for (int l = 0; l < s.num_layers(); ++l)
        for (int i = 0; i < s.dim(); ++i) data[static_cast<size_t>(l) * s.dim() + i] = static_cast<float>(s.layers(l, i));
    c.add("styles", {s.num_layers(), s.dim()}, std::move(data));
    c.save(path);
}

// images from a manifest file or a directory of .ppm files, sorted
inline std::vector<std::filesystem::path> collect_images(const std::string& source) {
    namespace fs = std::filesystem;
    std::vector<fs::path> paths;
    if (fs::is_directory(source)) {
        for (const auto& entry : fs::directory_iterator(source))
            if (entry.path().extension() == ".ppm") paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
    } else {
        const auto m = data::Manifest::load(source);
        for (const auto& r : m.records) paths.push_back(m.resolve(r));
    }
    check(!paths.empty(), "no images found in ", source);
    return paths;
}

inline TensorF load_image_set(const std::string& source, int size) {
    const auto paths = collect_images(source);
    TensorF out(static_cast<int>(paths.size()), 3, size, size);
    for (size_t i = 0; i < paths.size(); ++i) {
        TensorF img = read_pnm(paths[i]);
        if (img.h != size || img.w != size) img = resize_bilinear(img, size, size);
        std::copy(img.v.begin(), img.v.end(), out.sample(static_cast<int>(i)));
    }
    return out;
}

// auto-trained extractor when --features is not given
inline metrics::FeatureCheckpoint obtain_features(const std::string& features_path, const data::Manifest& manifest,
                                                  int image_size, uint64_t seed, std::ostream& log) {
    if (!features_path.empty()) return metrics::load_features(features_path);
    log << "training feature extractor on the input manifest (no --features given)\n";
    metrics::FeatureTrainConfig fcfg;
    fcfg.arch.input_size = image_size;
    fcfg.arch.feature_dim = 64;
    fcfg.arch.widths = {16, 32, 48};
    fcfg.epochs = 30;
    fcfg.seed = hash_combine(seed, fnv1a64("features"));
    return metrics::train_feature_extractor(manifest, fcfg);
}

inline int levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
    for (size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
    return d[a.size()][b.size()];
}

inline void collect_option_names(const CLI::App* app, std::vector<std::string>& names) {
    for (const auto* opt : app->get_options())
        for (const auto& n : opt->get_lnames()) names.push_back("--" + n);
    for (const auto* sub : app->get_subcommands({})) collect_option_names(sub, names);
    for (const auto& sub : app->get_subcommands(nullptr)) collect_option_names(sub, names);
}

inline std::string suggest_flag(const CLI::App& app, const std::vector<std::string>& args) {
    std::vector<std::string> names;
    collect_option_names(&app, names);
    for (const auto& a : args) {
        if (a.rfind("--", 0) != 0) continue;
        const std::string flag = a.substr(0, a.find('='));
        if (std::find(names.begin(), names.end(), flag) != names.end()) continue;
        int best = 100;
        std::string best_name;
        for (const auto& n : names) {
            const int dist = levenshtein(flag, n);
            if (dist < best) {
                best = dist;
                best_name = n;
            }
        }
        if (!best_name.empty() && best <= 3) return format_msg("unknown flag ", flag, "; did you mean ", best_name, "?");
    }
    return "";
}

}  // namespace detail

// Entry point shared by the binary and the tests. Exit codes: 0 success,
// 1 usage error, 2 runtime failure.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app{"GAN-inversion data augmentation workbench"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    int jobs = 1;
    app.add_option("--seed", seed, "root random seed (sub-streams derive from it)")->capture_default_str();
    app.add_option("--jobs", jobs, "worker parallelism cap")->capture_default_str();

    std::string config_path;
    std::vector<std::string> sets;

    // ------------------------------------------------------------- corpus --
    auto* corpus = app.add_subcommand("corpus", "synthetic corpus commands");
    auto* corpus_build = corpus->add_subcommand("build", "render the procedural toy corpus");
    std::string cb_out;
    toy::ToyParams cb_params;
    corpus_build->add_option("--out", cb_out, "output directory");
    corpus_build->add_option("--size", cb_params.image_size, "image size (32/64/128)")->capture_default_str();
    corpus_build->add_option("--videos", cb_params.n_videos, "number of videos")->capture_default_str();
    corpus_build->add_option("--frames", cb_params.frames_per_video, "frames per video")->capture_default_str();

    // -------------------------------------------------------------- split --
    auto* split = app.add_subcommand("split", "split commands");
    auto* split_make = split->add_subcommand("make", "make video-level cross-validation splits");
    std::string sm_manifest, sm_out, sm_ratios = "0.6,0.2,0.2";
    int sm_k = 5;
    split_make->add_option("--manifest", sm_manifest, "input manifest")->required();
    split_make->add_option("--k", sm_k, "number of folds")->capture_default_str();
    split_make->add_option("--ratios", sm_ratios, "train,val,test ratios")->capture_default_str();
    split_make->add_option("--out", sm_out, "output split file");

    // ---------------------------------------------------------------- gan --
    auto* gan_cmd = app.add_subcommand("gan", "generator commands");
    auto* gan_train = gan_cmd->add_subcommand("train", "train the style-based generator with ADA");
    std::string gt_manifest, gt_out, gt_features, gt_metrics;
    gan_train->add_option("--manifest", gt_manifest, "training manifest")->required();
    gan_train->add_option("--out", gt_out, "output checkpoint");
    gan_train->add_option("--features", gt_features, "feature extractor checkpoint for FID");
    gan_train->add_option("--metrics", gt_metrics, "metrics CSV path (default <out>.metrics.csv)");
    gan_train->add_option("--config", config_path, "config file");
    gan_train->add_option("--set", sets, "override config key=value");

    // ------------------------------------------------------------ encoder --
    auto* enc_cmd = app.add_subcommand("encoder", "inversion encoder commands");
    auto* enc_train = enc_cmd->add_subcommand("train", "train the inversion encoder against a frozen generator");
    std::string et_manifest, et_generator, et_out, et_features;
    enc_train->add_option("--manifest", et_manifest, "training manifest")->required();
    enc_train->add_option("--generator", et_generator, "generator checkpoint")->required();
    enc_train->add_option("--out", et_out, "output checkpoint");
    enc_train->add_option("--features", et_features, "feature extractor checkpoint (perceptual loss)");
    enc_train->add_option("--config", config_path, "config file");
    enc_train->add_option("--set", sets, "override config key=value");

    // ------------------------------------------------------------- invert --
    auto* invert_cmd = app.add_subcommand("invert", "invert images to style stacks");
    std::string iv_manifest, iv_encoder, iv_generator, iv_out;
    int iv_limit = 0, iv_optimize = 0;
    invert_cmd->add_option("--manifest", iv_manifest, "manifest of images to invert")->required();
    invert_cmd->add_option("--encoder", iv_encoder, "encoder checkpoint")->required();
    invert_cmd->add_option("--generator", iv_generator, "generator checkpoint")->required();
    invert_cmd->add_option("--out", iv_out, "output directory");
    invert_cmd->add_option("--limit", iv_limit, "invert only the first N records");
    invert_cmd->add_option("--optimize", iv_optimize, "also run N optimization steps as an oracle");

    // --------------------------------------------------------------- edit --
    auto* edit = app.add_subcommand("edit", "latent edits");
    auto* edit_mix = edit->add_subcommand("mix", "style mixing crossover of two style stacks");
    std::string em_a, em_b, em_generator, em_out;
    int em_k = -1;
    uint64_t em_noise = 0;
    edit_mix->add_option("--a", em_a, "source-1 styles file (coarse layers)")->required();
    edit_mix->add_option("--b", em_b, "source-2 styles file (fine layers)")->required();
    edit_mix->add_option("--k", em_k, "crossover layer index (default: coarse half)");
    edit_mix->add_option("--generator", em_generator, "generator checkpoint")->required();
    edit_mix->add_option("--out", em_out, "output image");
    edit_mix->add_option("--noise-seed", em_noise, "synthesis noise seed")->capture_default_str();

    auto* edit_interp = edit->add_subcommand("interp", "linear interpolation between two style stacks");
    std::string ei_a, ei_b, ei_generator, ei_out;
    double ei_lambda = 0.5;
    uint64_t ei_noise = 0;
    edit_interp->add_option("--a", ei_a, "styles file weighted by lambda")->required();
    edit_interp->add_option("--b", ei_b, "styles file weighted by 1-lambda")->required();
    edit_interp->add_option("--lambda", ei_lambda, "interpolation weight of --a")->capture_default_str();
    edit_interp->add_option("--generator", ei_generator, "generator checkpoint")->required();
    edit_interp->add_option("--out", ei_out, "output image");
    edit_interp->add_option("--noise-seed", ei_noise, "synthesis noise seed")->capture_default_str();

    // ------------------------------------------------------------ augment --
    auto* aug_cmd = app.add_subcommand("augment", "augmentation pipelines");
    auto* aug_run = aug_cmd->add_subcommand("run", "run an augmentation job file");
    std::string ar_job;
    aug_run->add_option("job", ar_job, "job config file")->required();
    aug_run->add_option("--set", sets, "override job key=value");

    // ----------------------------------------------------------- classify --
    auto* cls_cmd = app.add_subcommand("classify", "downstream classifier harness");
    auto* cls_cv = cls_cmd->add_subcommand("cv", "k-fold cross-validation with optional augmentation jobs");
    std::string cv_manifest, cv_out, cv_ratios = "0.6,0.2,0.2", cv_grid = "full", cv_select = "f1";
    std::vector<std::string> cv_jobs;
    int cv_k = 5, cv_max_train = 0, cv_input = 64, cv_epochs = 40, cv_batch = 16, cv_patience = 10;
    cls_cv->add_option("--manifest", cv_manifest, "corpus manifest")->required();
    cls_cv->add_option("--out", cv_out, "output directory");
    cls_cv->add_option("--k", cv_k, "folds")->capture_default_str();
    cls_cv->add_option("--ratios", cv_ratios, "train,val,test ratios")->capture_default_str();
    cls_cv->add_option("--aug", cv_jobs, "augmentation job file (repeatable)");
    cls_cv->add_option("--grid", cv_grid, "hyperparameter grid: full|quick")->capture_default_str();
    cls_cv->add_option("--select-metric", cv_select, "validation selection metric: f1|accuracy")->capture_default_str();
    cls_cv->add_option("--max-train-per-class", cv_max_train, "starved-regime cap (0 = off)")->capture_default_str();
    cls_cv->add_option("--input-size", cv_input, "classifier input size")->capture_default_str();
    cls_cv->add_option("--epochs", cv_epochs, "max epochs")->capture_default_str();
    cls_cv->add_option("--batch-size", cv_batch, "batch size")->capture_default_str();
    cls_cv->add_option("--patience", cv_patience, "early-stop patience")->capture_default_str();

    // ------------------------------------------------------------- metrics --
    auto* met_cmd = app.add_subcommand("metrics", "generative metrics");
    auto* met_fid = met_cmd->add_subcommand("fid", "Frechet distance between two image sets");
    std::string mf_a, mf_b, mf_features, mf_out;
    met_fid->add_option("--a", mf_a, "manifest or image directory")->required();
    met_fid->add_option("--b", mf_b, "manifest or image directory")->required();
    met_fid->add_option("--features", mf_features, "feature extractor checkpoint")->required();
    met_fid->add_option("--out", mf_out, "JSON detail output path");

    // -------------------------------------------------------------- report --
    auto* rep_cmd = app.add_subcommand("report", "report artifacts");
    auto* rep_grid = rep_cmd->add_subcommand("grid", "tile images into a grid");
    std::vector<std::string> rg_images;
    std::string rg_manifest, rg_out, rg_captions;
    int rg_cols = 5, rg_limit = 0;
    rep_grid->add_option("--images", rg_images, "image files in order");
    rep_grid->add_option("--manifest", rg_manifest, "take images from a manifest");
    rep_grid->add_option("--cols", rg_cols, "columns")->capture_default_str();
    rep_grid->add_option("--captions", rg_captions, "comma-separated row captions");
    rep_grid->add_option("--limit", rg_limit, "use only the first N images");
    rep_grid->add_option("--out", rg_out, "output image");

    // parent options (--seed, --jobs) remain usable after a subcommand name
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* a) {
        a->fallthrough(true);
        for (auto* sub : a->get_subcommands({})) enable_fallthrough(sub);
    };
    enable_fallthrough(&app);

    // CLI11's vector overload consumes arguments from the back
    std::vector<std::string> cli_args(args.rbegin(), args.rend());
    try {
        app.parse(cli_args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        const std::string suggestion = detail::suggest_flag(app, args);
        err << "usage error: " << e.what() << "\n";
        if (!suggestion.empty()) err << suggestion << "\n";
        return 1;
    }

    try {
        // ----------------------------------------------------- corpus build
        if (corpus_build->parsed()) {
            const auto out_dir = detail::default_out(cb_out, "corpus");
            cb_params.seed = seed;
            const auto manifest = toy::build_corpus(cb_params, out_dir);
            detail::write_record(out_dir / "run_record.json", args,
                                 {{"size", cb_params.image_size},
                                  {"videos", cb_params.n_videos},
                                  {"frames", cb_params.frames_per_video}},
                                 seed, {{"manifest", to_hex(manifest.content_hash())}});
            out << "corpus: " << manifest.records.size() << " images at " << out_dir.string() << "\n";
            return 0;
        }

        // ------------------------------------------------------- split make
        if (split_make->parsed()) {
            const auto manifest = data::Manifest::load(sm_manifest);
            const auto parts = KvConfig::split_list(sm_ratios);
            check_arg(parts.size() == 3, "--ratios expects three comma-separated values");
            data::Ratios ratios{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
            const auto splits = data::make_splits(manifest, sm_k, ratios, seed);
            const auto out_path = sm_out.empty() ? detail::default_out("", "splits") / "splits.tsv"
                                                 : std::filesystem::path(sm_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            data::save_splits(out_path, splits);
            detail::write_record(out_path.string() + ".run_record.json", args,
                                 {{"k", sm_k}, {"ratios", sm_ratios}}, seed,
                                 {{"manifest", to_hex(hash_file(sm_manifest))}});
            out << "splits: " << splits.size() << " folds at " << out_path.string() << "\n";
            return 0;
        }

        // -------------------------------------------------------- gan train
        if (gan_train->parsed()) {
            const auto kv = detail::resolve_config(config_path, sets);
            gan::GanTrainConfig cfg = gan::GanTrainConfig::from_kv(kv);
            if (!kv.has("gan.seed")) cfg.seed = seed;
            const auto manifest = data::Manifest::load(gt_manifest);
            const auto out_path = gt_out.empty() ? detail::default_out("", "gan") / "generator.ckpt"
                                                 : std::filesystem::path(gt_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            const auto features =
                detail::obtain_features(gt_features, manifest, cfg.arch.image_size, cfg.seed, out);
            if (gt_features.empty())
                metrics::features_to_container(features).save(out_path.string() + ".features.ckpt");
            const auto metrics_path =
                gt_metrics.empty() ? std::filesystem::path(out_path.string() + ".metrics.csv")
                                   : std::filesystem::path(gt_metrics);
            const auto result = gan::train_gan(manifest, cfg, features.net, metrics_path, &out);
            gan::save_generator(out_path, result.generator, result.meta);
            detail::write_record(out_path.string() + ".run_record.json", args, cfg.to_json(), cfg.seed,
                                 {{"manifest", to_hex(manifest.content_hash())},
                                  {"features", to_hex(features.net.weights_hash())},
                                  {"checkpoint", to_hex(result.generator.weights_hash())}});
            out << "generator: fid " << result.best_fid << " (step " << result.best_step << ") -> "
                << out_path.string() << "\n";
            return 0;
        }

        // ---------------------------------------------------- encoder train
        if (enc_train->parsed()) {
            const auto kv = detail::resolve_config(config_path, sets);
            inversion::EncoderTrainConfig cfg = inversion::EncoderTrainConfig::from_kv(kv);
            if (!kv.has("encoder.seed")) cfg.seed = seed;
            const auto manifest = data::Manifest::load(et_manifest);
            auto [generator, gmeta] = gan::load_generator(et_generator);
            const auto out_path = et_out.empty() ? detail::default_out("", "encoder") / "encoder.ckpt"
                                                 : std::filesystem::path(et_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            const auto features =
                detail::obtain_features(et_features, manifest, generator.arch().image_size, cfg.seed, out);
            if (et_features.empty())
                metrics::features_to_container(features).save(out_path.string() + ".features.ckpt");
            const auto result = inversion::train_encoder(manifest, generator, features.net, cfg, &out);
            inversion::save_encoder(out_path, result.checkpoint);
            detail::write_record(out_path.string() + ".run_record.json", args, cfg.to_json(), cfg.seed,
                                 {{"manifest", to_hex(manifest.content_hash())},
                                  {"generator", to_hex(generator.weights_hash())},
                                  {"checkpoint", to_hex(result.checkpoint.net.weights_hash())}});
            out << "encoder: final l2 " << result.final_l2 << " -> " << out_path.string() << "\n";
            return 0;
        }

        // ----------------------------------------------------------- invert
        if (invert_cmd->parsed()) {
            const auto manifest = data::Manifest::load(iv_manifest);
            auto [generator, gmeta] = gan::load_generator(iv_generator);
            const auto encoder = inversion::load_encoder(iv_encoder);
            const auto out_dir = detail::default_out(iv_out, "invert");
            std::filesystem::create_directories(out_dir);

            const int n = iv_limit > 0 ? std::min<int>(iv_limit, static_cast<int>(manifest.records.size()))
                                       : static_cast<int>(manifest.records.size());
            std::ofstream csv(out_dir / "distortion.csv");
            csv << "path,pixel_l2,perceptual,delta_norm_mean,degenerate";
            if (iv_optimize > 0) csv << ",opt_pixel_l2";
            csv << "\n";
            std::vector<TensorF> originals, recons;
            for (int i = 0; i < n; ++i) {
                const auto& rec = manifest.records[static_cast<size_t>(i)];
                const TensorF img = data::load_image(manifest, rec, encoder.net.arch().input_size);
                const auto res = inversion::invert(img, encoder, generator);
                const std::string stem = std::filesystem::path(rec.path).stem().string();
                detail::save_styles(out_dir / (stem + ".styles"), res.styles);
                write_ppm(out_dir / (stem + "_recon.ppm"), res.reconstruction);
                csv << rec.path << "," << res.pixel_l2 << "," << (res.perceptual ? *res.perceptual : -1.0) << ","
                    << res.delta_norms.mean() << "," << (res.degenerate_warning ? 1 : 0);
                if (iv_optimize > 0) {
                    const auto opt = inversion::invert_by_optimization(img, generator, iv_optimize,
                                                                       hash_combine(seed, static_cast<uint64_t>(i)));
                    csv << "," << opt.pixel_l2;
                }
                csv << "\n";
                if (originals.size() < 8) {
                    originals.push_back(img);
                    recons.push_back(res.reconstruction);
                }
            }
            // side-by-side grid: originals on the top row, reconstructions below
            std::vector<TensorF> tiles = originals;
            tiles.insert(tiles.end(), recons.begin(), recons.end());
            report::GridLayout layout;
            layout.columns = static_cast<int>(originals.size());
            layout.row_captions = {"original", "inverted"};
            report::report_grid(tiles, layout, out_dir / "grid.ppm");
            detail::write_record(out_dir / "run_record.json", args, {{"optimize", iv_optimize}, {"count", n}}, seed,
                                 {{"manifest", to_hex(manifest.content_hash())},
                                  {"generator", to_hex(generator.weights_hash())},
                                  {"encoder", to_hex(encoder.net.weights_hash())}});
            out << "inverted " << n << " images -> " << out_dir.string() << "\n";
            return 0;
        }

        // --------------------------------------------------------- edit mix
        if (edit_mix->parsed()) {
            auto [generator, gmeta] = gan::load_generator(em_generator);
            const auto a = detail::load_styles(em_a);
            const auto b = detail::load_styles(em_b);
            latent::CrossoverSpec spec{em_k};
            if (spec.k < 0) spec = latent::CrossoverSpec::default_for(generator.arch().num_style_layers());
            const auto mixed = latent::style_mix(a, b, spec);
            const auto out_path = em_out.empty() ? detail::default_out("", "edit") / "mixed.ppm"
                                                 : std::filesystem::path(em_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            write_ppm(out_path, gan::synthesize(generator, mixed, em_noise));
            detail::write_record(out_path.string() + ".run_record.json", args, {{"k", spec.k}}, em_noise,
                                 {{"a", to_hex(hash_file(em_a))}, {"b", to_hex(hash_file(em_b))}});
            out << "mixed image -> " << out_path.string() << "\n";
            return 0;
        }

        // ------------------------------------------------------ edit interp
        if (edit_interp->parsed()) {
            auto [generator, gmeta] = gan::load_generator(ei_generator);
            const auto a = detail::load_styles(ei_a);
            const auto b = detail::load_styles(ei_b);
            const auto mixed = latent::interpolate(a, b, ei_lambda);
            const auto out_path = ei_out.empty() ? detail::default_out("", "edit") / "interp.ppm"
                                                 : std::filesystem::path(ei_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            write_ppm(out_path, gan::synthesize(generator, mixed, ei_noise));
            detail::write_record(out_path.string() + ".run_record.json", args, {{"lambda", ei_lambda}}, ei_noise,
                                 {{"a", to_hex(hash_file(ei_a))}, {"b", to_hex(hash_file(ei_b))}});
            out << "interpolated image -> " << out_path.string() << "\n";
            return 0;
        }

        // ------------------------------------------------------ augment run
        if (aug_run->parsed()) {
            KvConfig kv = KvConfig::parse_file(ar_job);
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw UsageError("--set expects key=value");
                kv.set(s.substr(0, eq), s.substr(eq + 1));
            }
            augment::AugmentationJob job;
            const std::string edit = kv.get_str("job.edit", "");
            check_arg(edit == "translate" || edit == "interpolate", "job.edit must be translate|interpolate");
            job.edit_type = (edit == "translate") ? augment::EditType::translate : augment::EditType::interpolate;
            job.source = data::Manifest::load(kv.get_str("job.manifest", ""));
            job.generator_ckpt = kv.get_str("job.generator", "");
            job.encoder_ckpt = kv.get_str("job.encoder", "");
            job.out_dir = kv.get_str("job.out_dir", "");
            job.seed = static_cast<uint64_t>(kv.get_int("job.seed", static_cast<int64_t>(seed)));
            if (kv.has("job.target_modality")) job.constraint.target_modality = kv.get_str("job.target_modality", "");
            job.per_image_count = static_cast<int>(kv.get_int("job.per_image_count", 0));
            job.constraint.partners_per_image = static_cast<int>(kv.get_int("job.partners_per_image", 0));
            job.crossover.k = static_cast<int>(kv.get_int("job.crossover_k", -1));
            if (kv.has("job.lambdas")) {
                job.interpolation.lambdas.clear();
                for (const auto& l : kv.get_list("job.lambdas", {})) job.interpolation.lambdas.push_back(std::stod(l));
            }

            auto [generator, gmeta] = gan::load_generator(job.generator_ckpt);
            const auto encoder = inversion::load_encoder(job.encoder_ckpt);
            inversion::check_generator_match(encoder, generator);
            augment::AugmentContext ctx;
            ctx.generator = &generator;
            ctx.encoder = &encoder;
            const auto result = augment::run_job(job, ctx);
            detail::write_record(job.out_dir / "run_record.json", args, detail::kv_to_json(kv), job.seed,
                                 {{"manifest", to_hex(job.source.content_hash())},
                                  {"generator", to_hex(generator.weights_hash())},
                                  {"encoder", to_hex(encoder.net.weights_hash())},
                                  {"augmented", to_hex(result.content_hash())}});
            out << "augmented: " << result.records.size() << " images -> " << job.out_dir.string() << "\n";
            return 0;
        }

        // ------------------------------------------------------ classify cv
        if (cls_cv->parsed()) {
            const auto manifest = data::Manifest::load(cv_manifest);
            const auto out_dir = detail::default_out(cv_out, "classify");
            std::filesystem::create_directories(out_dir);

            classify::CvOptions opts;
            opts.k = cv_k;
            const auto parts = KvConfig::split_list(cv_ratios);
            check_arg(parts.size() == 3, "--ratios expects three values");
            opts.ratios = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
            opts.seed = seed;
            opts.select_metric = cv_select;
            opts.max_train_per_class = cv_max_train;
            opts.base.input_size = cv_input;
            opts.base.epochs = cv_epochs;
            opts.base.batch_size = cv_batch;
            opts.base.patience = cv_patience;
            if (cv_grid == "quick")
                opts.grid = {opts.base};
            else
                check_arg(cv_grid == "full", "--grid must be full|quick");

            std::vector<classify::CvAugJob> jobs;
            std::optional<gan::Generator<float>> generator;
            std::optional<inversion::EncoderCheckpoint> encoder;
            augment::AugmentContext ctx;
            for (const auto& job_file : cv_jobs) {
                const auto kv = KvConfig::parse_file(job_file);
                classify::CvAugJob j;
                const std::string edit = kv.get_str("job.edit", "");
                check_arg(edit == "translate" || edit == "interpolate", "job.edit must be translate|interpolate");
                j.edit_type = (edit == "translate") ? augment::EditType::translate : augment::EditType::interpolate;
                if (kv.has("job.target_modality")) j.target_modality = kv.get_str("job.target_modality", "");
                j.per_image_count = static_cast<int>(kv.get_int("job.per_image_count", 0));
                j.partners_per_image = static_cast<int>(kv.get_int("job.partners_per_image", 0));
                j.crossover.k = static_cast<int>(kv.get_int("job.crossover_k", -1));
                if (kv.has("job.lambdas")) {
                    j.interpolation.lambdas.clear();
                    for (const auto& l : kv.get_list("job.lambdas", {}))
                        j.interpolation.lambdas.push_back(std::stod(l));
                }
                j.seed = static_cast<uint64_t>(kv.get_int("job.seed", static_cast<int64_t>(seed)));
                jobs.push_back(j);
                if (!generator.has_value()) {
                    auto [g, gm] = gan::load_generator(kv.get_str("job.generator", ""));
                    generator = std::move(g);
                    encoder = inversion::load_encoder(kv.get_str("job.encoder", ""));
                    inversion::check_generator_match(*encoder, *generator);
                }
            }
            if (generator.has_value()) {
                ctx.generator = &*generator;
                ctx.encoder = &*encoder;
            }

            const auto cv = classify::cross_validate(manifest, jobs, opts, generator ? &ctx : nullptr,
                                                     out_dir / "aug", &out);
            cv.report.save(out_dir / "report.csv", out_dir / "report.txt");
            data::save_splits(out_dir / "splits.tsv", cv.folds);
            detail::write_record(out_dir / "run_record.json", args,
                                 {{"k", cv_k},
                                  {"grid", cv_grid},
                                  {"max_train_per_class", cv_max_train},
                                  {"jobs", cv_jobs}},
                                 seed, {{"manifest", to_hex(manifest.content_hash())}});
            out << cv.report.to_text();
            out << "report -> " << (out_dir / "report.csv").string() << "\n";
            return 0;
        }

        // ------------------------------------------------------- metrics fid
        if (met_fid->parsed()) {
            const auto features = metrics::load_features(mf_features);
            const int S = features.net.arch().input_size;
            const TensorF set_a = detail::load_image_set(mf_a, S);
            const TensorF set_b = detail::load_image_set(mf_b, S);
            const auto d = metrics::fid(set_a, set_b, features.net);
            out << d.fid << "\n";
            if (!mf_out.empty()) {
                std::ofstream js(mf_out);
                check(js.good(), "cannot write ", mf_out);
                auto j = d.to_json();
                j["a"] = mf_a;
                j["b"] = mf_b;
                j["n_a"] = set_a.n;
                j["n_b"] = set_b.n;
                js << j.dump(2) << "\n";
                detail::write_record(mf_out + ".run_record.json", args, j, seed,
                                     {{"features", to_hex(features.net.weights_hash())}});
            }
            return 0;
        }

        // ------------------------------------------------------- report grid
        if (rep_grid->parsed()) {
            std::vector<TensorF> images;
            for (const auto& p : rg_images) images.push_back(read_pnm(p));
            if (!rg_manifest.empty()) {
                const auto m = data::Manifest::load(rg_manifest);
                for (const auto& r : m.records) {
                    if (rg_limit > 0 && static_cast<int>(images.size()) >= rg_limit) break;
                    images.push_back(read_pnm(m.resolve(r)));
                }
            }
            if (rg_limit > 0 && static_cast<int>(images.size()) > rg_limit) images.resize(static_cast<size_t>(rg_limit));
            report::GridLayout layout;
            layout.columns = rg_cols;
            if (!rg_captions.empty()) layout.row_captions = KvConfig::split_list(rg_captions);
            const auto out_path = rg_out.empty() ? detail::default_out("", "report") / "grid.ppm"
                                                 : std::filesystem::path(rg_out);
            if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
            report::report_grid(images, layout, out_path);
            detail::write_record(out_path.string() + ".run_record.json", args,
                                 {{"cols", rg_cols}, {"count", images.size()}}, seed);
            out << "grid (" << images.size() << " images) -> " << out_path.string() << "\n";
            return 0;
        }

        err << "no subcommand executed\n";
        return 1;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ganaug::cli
