#include <catch2/catch_amalgamated.hpp>

#include "ganaug/gan/generator.hpp"
#include "ganaug/latent/cluster.hpp"
#include "ganaug/latent/ops.hpp"
#include "ganaug/latent/pairs.hpp"

using namespace ganaug;
using namespace ganaug::latent;
using gan::StyleStack;

namespace {
StyleStack random_stack(int layers, int dim, uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    StyleStack s(layers, dim);
    for (int l = 0; l < layers; ++l)
        for (int i = 0; i < dim; ++i) s.layers(l, i) = rng.normal() * scale;
    return s;
}
}  // namespace

TEST_CASE("style_mix: identity, boundaries, definition") {
    const StyleStack w1 = random_stack(4, 6, 1);
    const StyleStack w2 = random_stack(4, 6, 2);

    for (int k = 0; k <= 4; ++k) {
        const StyleStack same = style_mix(w1, w1, {k});
        REQUIRE(same.layers == w1.layers);  // style_mix(w, w, k) == w exactly
    }
    REQUIRE(style_mix(w1, w2, {0}).layers == w2.layers);  // k=0 -> all from source-2
    REQUIRE(style_mix(w1, w2, {4}).layers == w1.layers);  // k=L -> all from source-1

    const StyleStack mixed = style_mix(w1, w2, {2});
    REQUIRE(mixed.layers.row(0) == w1.layers.row(0));
    REQUIRE(mixed.layers.row(1) == w1.layers.row(1));
    REQUIRE(mixed.layers.row(2) == w2.layers.row(2));
    REQUIRE(mixed.layers.row(3) == w2.layers.row(3));

    REQUIRE_THROWS_AS(style_mix(w1, w2, {5}), std::invalid_argument);
    REQUIRE_THROWS_AS(style_mix(w1, w2, {-1}), std::invalid_argument);
    REQUIRE_THROWS_AS(style_mix(w1, random_stack(5, 6, 3), {2}), std::invalid_argument);
}

TEST_CASE("interpolate: midpoint, endpoints, symmetry, monotonicity") {
    StyleStack wa(3, 2), wb(3, 2);
    wa.layers.col(0).setConstant(2.0);
    wa.layers.col(1).setConstant(0.0);
    wb.layers.col(0).setConstant(0.0);
    wb.layers.col(1).setConstant(2.0);

    const StyleStack mid = interpolate(wa, wb, 0.5);
    for (int l = 0; l < 3; ++l) {
        REQUIRE(mid.layers(l, 0) == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(mid.layers(l, 1) == Catch::Approx(1.0).margin(1e-9));
    }

    // endpoints (testing only): lambda weights wa
    REQUIRE((interpolate(wa, wb, 1.0).layers - wa.layers).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE((interpolate(wa, wb, 0.0).layers - wb.layers).cwiseAbs().maxCoeff() < 1e-9);

    // symmetry: interpolate(wa,wb,l) == interpolate(wb,wa,1-l)
    const StyleStack a = random_stack(5, 8, 10);
    const StyleStack b = random_stack(5, 8, 11);
    for (double lam : {0.1, 0.25, 0.37, 0.5, 0.93}) {
        const auto lhs = interpolate(a, b, lam);
        const auto rhs = interpolate(b, a, 1.0 - lam);
        REQUIRE((lhs.layers - rhs.layers).cwiseAbs().maxCoeff() < 1e-9);
    }

    REQUIRE_THROWS_AS(interpolate(wa, wb, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(interpolate(wa, wb, -0.1), std::invalid_argument);

    // coordinate-wise monotonicity along the path where wa > wb
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const StyleStack x = random_stack(2, 4, 100 + trial);
        const StyleStack y = random_stack(2, 4, 200 + trial);
        double l1 = rng.uniform(0.01, 0.98);
        double l2 = std::min(0.99, l1 + rng.uniform(0.001, 0.5));
        const auto p1 = interpolate(x, y, l1);
        const auto p2 = interpolate(x, y, l2);
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 4; ++i) {
                if (x.layers(l, i) > y.layers(l, i))
                    REQUIRE(p1.layers(l, i) <= p2.layers(l, i) + 1e-12);
                else if (x.layers(l, i) < y.layers(l, i))
                    REQUIRE(p1.layers(l, i) >= p2.layers(l, i) - 1e-12);
            }
    }
}

TEST_CASE("interpolation spec validates the open-interval grid") {
    InterpolationSpec def;
    REQUIRE_NOTHROW(def.validate());
    REQUIRE(def.lambdas == std::vector<double>{0.25, 0.5, 0.75});

    InterpolationSpec bad;
    bad.lambdas = {0.0, 0.5};
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.lambdas = {0.5, 0.25};
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.lambdas = {};
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("composition: synthesize(style_mix(w,w,k)) == synthesize(w) bit-exactly") {
    gan::GanArch arch;
    arch.image_size = 16;
    arch.z_dim = 8;
    arch.w_dim = 8;
    arch.map_layers = 2;
    arch.map_hidden = 8;
    arch.channels = {8, 8, 8};
    gan::Generator<float> g(arch, 3);

    Rng rng(4);
    Eigen::VectorXd z(8);
    for (int i = 0; i < 8; ++i) z[i] = rng.normal();
    const StyleStack w = map_latent(g, z);
    const TensorF ref = synthesize(g, w, 9);
    for (int k = 0; k <= w.num_layers(); ++k) {
        const TensorF mixed = synthesize(g, style_mix(w, w, {k}), 9);
        REQUIRE(mixed.v == ref.v);
    }
}

TEST_CASE("default crossover exposes the coarse half to source-1") {
    REQUIRE(CrossoverSpec::default_for(10).k == 5);
    REQUIRE(CrossoverSpec::default_for(9).k == 5);  // rounded up
}

TEST_CASE("sample_pairs: counts, constraints, determinism, skip report") {
    data::Manifest m;
    m.vocabulary.labels = {"neoplastic", "non_neoplastic"};
    m.vocabulary.modalities = {"SYNTH_A", "SYNTH_B", "WLI", "NBI", "DYED"};
    for (int i = 0; i < 10; ++i) {
        data::ImageRecord r;
        r.path = format_msg("a", i, ".ppm");
        r.label = "neoplastic";
        r.modality = "SYNTH_A";
        r.video_id = format_msg("v", i);
        m.records.push_back(r);
    }

    PairConstraint c;
    c.require_same_modality = true;
    c.partners_per_image = 3;
    const auto res = sample_pairs(m, c, 5);
    REQUIRE(res.pairs.size() == 30);  // 10 sources x 3 partners
    REQUIRE(res.skips.empty());
    for (const auto& p : res.pairs) REQUIRE(p.source_id != p.partner_id);

    // partners are distinct per source
    std::map<std::string, std::set<std::string>> partners;
    for (const auto& p : res.pairs) REQUIRE(partners[p.source_id].insert(p.partner_id).second);

    // determinism
    const auto res2 = sample_pairs(m, c, 5);
    for (size_t i = 0; i < res.pairs.size(); ++i) {
        REQUIRE(res.pairs[i].source_id == res2.pairs[i].source_id);
        REQUIRE(res.pairs[i].partner_id == res2.pairs[i].partner_id);
    }

    // single record in a class: skipped with a report entry
    data::ImageRecord lone;
    lone.path = "lone.ppm";
    lone.label = "non_neoplastic";
    lone.modality = "SYNTH_A";
    lone.video_id = "vl";
    m.records.push_back(lone);
    const auto res3 = sample_pairs(m, c, 5);
    REQUIRE(res3.skips.size() == 1);
    REQUIRE(res3.skips[0].source_id == "lone.ppm");
    REQUIRE(res3.pairs.size() == 30);
}

TEST_CASE("sample_pairs never violates constraints on randomized manifests") {
    Rng rng(77);
    const std::vector<std::string> labels = {"neoplastic", "non_neoplastic"};
    const std::vector<std::string> modalities = {"SYNTH_A", "SYNTH_B"};
    for (int trial = 0; trial < 300; ++trial) {
        data::Manifest m;
        m.vocabulary.labels = labels;
        m.vocabulary.modalities = {"WLI", "NBI", "DYED", "SYNTH_A", "SYNTH_B"};
        const int n = static_cast<int>(rng.uniform_int(2, 14));
        for (int i = 0; i < n; ++i) {
            data::ImageRecord r;
            r.path = format_msg("r", i, ".ppm");
            r.label = labels[static_cast<size_t>(rng.uniform_int(0, 1))];
            r.modality = modalities[static_cast<size_t>(rng.uniform_int(0, 1))];
            r.video_id = format_msg("v", rng.uniform_int(0, 5));
            m.records.push_back(r);
        }
        const auto index = [&](const std::string& id) { return m.find(id); };

        PairConstraint same_mod;
        same_mod.require_same_modality = true;
        same_mod.partners_per_image = static_cast<int>(rng.uniform_int(1, 4));
        for (const auto& p : sample_pairs(m, same_mod, trial).pairs) {
            REQUIRE(index(p.source_id)->label == index(p.partner_id)->label);
            REQUIRE(index(p.source_id)->modality == index(p.partner_id)->modality);
            REQUIRE(p.source_id != p.partner_id);
        }

        PairConstraint translate;
        translate.target_modality = "SYNTH_B";
        translate.partners_per_image = static_cast<int>(rng.uniform_int(1, 5));
        for (const auto& p : sample_pairs(m, translate, trial).pairs) {
            REQUIRE(index(p.source_id)->label == index(p.partner_id)->label);
            REQUIRE(index(p.partner_id)->modality == "SYNTH_B");
            REQUIRE(index(p.source_id)->modality != "SYNTH_B");
        }
    }
}

TEST_CASE("cluster diagnostic separates constructed clusters") {
    // two well-separated Gaussian clusters in mean-pooled space
    std::map<std::string, std::vector<StyleStack>> groups;
    Rng rng(31);
    for (int i = 0; i < 12; ++i) {
        StyleStack a(4, 6), b(4, 6);
        for (int l = 0; l < 4; ++l)
            for (int d = 0; d < 6; ++d) {
                a.layers(l, d) = 3.0 + 0.3 * rng.normal();
                b.layers(l, d) = -3.0 + 0.3 * rng.normal();
            }
        groups["neoplastic"].push_back(a);
        groups["non_neoplastic"].push_back(b);
    }
    // constructed-cluster value: separation ~6 sigma, silhouette ~= 0.97
    REQUIRE(cluster_diagnostic(groups) > 0.5);

    // identical distributions: no separation
    std::map<std::string, std::vector<StyleStack>> same;
    for (int i = 0; i < 20; ++i) {
        same["neoplastic"].push_back(random_stack(4, 6, 1000 + i));
        same["non_neoplastic"].push_back(random_stack(4, 6, 2000 + i));
    }
    const double s = cluster_diagnostic(same);
    REQUIRE(std::abs(s) < 0.1);

    // too few samples
    std::map<std::string, std::vector<StyleStack>> tiny;
    tiny["a"] = {random_stack(4, 6, 1)};
    tiny["b"] = {random_stack(4, 6, 2)};
    REQUIRE_THROWS_WITH(cluster_diagnostic(tiny), Catch::Matchers::ContainsSubstring("too few samples"));
}
