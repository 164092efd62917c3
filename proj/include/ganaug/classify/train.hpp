#pragma once

#include <map>
#include <optional>

#include "ganaug/classify/metrics.hpp"
#include "ganaug/classify/model.hpp"
#include "ganaug/core/kvconfig.hpp"
#include "ganaug/data/loader.hpp"
#include "ganaug/nn/adam.hpp"

namespace ganaug::classify {

// Downstream classifier training configuration. The default hyperparameter
// grid spans learning_rate {1e-4, 1e-5}, l2_penalty {1e-2, 1e-3, 1e-4} and
// dropout {0, 0.5}; cross-validation selects per fold on validation.
struct ClassifierConfig {
    double learning_rate = 1e-4;
    double l2_penalty = 1e-3;
    double dropout_probability = 0.0;
    int epochs = 40;
    int batch_size = 16;
    int patience = 10;  // early stop after this many epochs without val improvement
    std::vector<double> class_weights;  // per label (sorted label order); empty -> inverse frequency
    int input_size = 64;
    std::vector<int> widths{16, 32, 64};
    uint64_t seed = 1;

    std::string describe() const {
        return format_msg("lr=", learning_rate, " l2=", l2_penalty, " dropout=", dropout_probability);
    }

    nlohmann::json to_json() const {
        return {{"learning_rate", learning_rate},
                {"l2_penalty", l2_penalty},
                {"dropout_probability", dropout_probability},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"patience", patience},
                {"input_size", input_size},
                {"widths", widths},
                {"seed", seed}};
    }
};

inline std::vector<ClassifierConfig> default_grid(const ClassifierConfig& base) {
    std::vector<ClassifierConfig> grid;
    for (double lr : {1e-4, 1e-5})
        for (double l2 : {1e-2, 1e-3, 1e-4})
            for (double dropout : {0.0, 0.5}) {
                ClassifierConfig c = base;
                c.learning_rate = lr;
                c.l2_penalty = l2;
                c.dropout_probability = dropout;
                grid.push_back(c);
            }
    return grid;
}

struct ClassifierCheckpoint {
    Classifier<float> net;
    std::vector<std::string> labels;  // sorted; index = class id
    std::string positive_label;
    ClassifierConfig config;
    double best_val_metric = 0;
    int best_epoch = -1;
};

inline Container classifier_to_container(const ClassifierCheckpoint& ck) {
    Container c;
    c.kind = "classifier";
    c.config["arch"] = ck.net.arch().to_json();
    c.config["labels"] = ck.labels;
    c.config["positive_label"] = ck.positive_label;
    c.config["train_config"] = ck.config.to_json();
    c.config["best_val_metric"] = ck.best_val_metric;
    c.config["best_epoch"] = ck.best_epoch;
    nn::save_params(c, ck.net.params());
    return c;
}

inline ClassifierCheckpoint classifier_from_container(const Container& c) {
    check(c.kind == "classifier", "checkpoint kind is `", c.kind, "`, expected `classifier`");
    ClassifierCheckpoint ck;
    ck.net = Classifier<float>(ClassifierArch::from_json(c.config.at("arch")));
    nn::load_params(c, ck.net.params());
    ck.labels = c.config.at("labels").get<std::vector<std::string>>();
    ck.positive_label = c.config.value("positive_label", "neoplastic");
    ck.best_val_metric = c.config.value("best_val_metric", 0.0);
    ck.best_epoch = c.config.value("best_epoch", -1);
    return ck;
}

namespace detail {

inline std::vector<std::string> sorted_labels(const data::Manifest& m) {
    std::set<std::string> s;
    for (const auto& r : m.records) s.insert(r.label);
    return {s.begin(), s.end()};
}

inline std::vector<int> label_indices(const data::Manifest& m, const std::vector<std::string>& labels) {
    std::map<std::string, int> index;
    for (size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);
    std::vector<int> out(m.records.size());
    for (size_t i = 0; i < m.records.size(); ++i) {
        auto it = index.find(m.records[i].label);
        check(it != index.end(), "label `", m.records[i].label, "` not present in training vocabulary");
        out[i] = it->second;
    }
    return out;
}

// inverse label frequency, normalized to mean 1
inline std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int n_classes) {
    std::vector<double> counts(static_cast<size_t>(n_classes), 0.0);
    for (int l : labels) counts[static_cast<size_t>(l)] += 1.0;
    std::vector<double> w(static_cast<size_t>(n_classes));
    double sum = 0;
    for (int i = 0; i < n_classes; ++i) {
        check(counts[static_cast<size_t>(i)] > 0, "class ", i, " absent from training set");
        w[static_cast<size_t>(i)] = 1.0 / counts[static_cast<size_t>(i)];
        sum += w[static_cast<size_t>(i)];
    }
    for (auto& x : w) x *= n_classes / sum;
    return w;
}

}  // namespace detail

// predictions on a manifest; returns confusion counts against the positive label
inline Confusion evaluate_confusion(const ClassifierCheckpoint& ck, const data::Manifest& test) {
    check_arg(!test.records.empty(), "evaluate: empty test set");
    std::map<std::string, int> index;
    for (size_t i = 0; i < ck.labels.size(); ++i) index[ck.labels[i]] = static_cast<int>(i);
    for (const auto& r : test.records)
        check(index.count(r.label) == 1, "test label `", r.label, "` unknown to the classifier");
    const int positive = index.at(ck.positive_label);

    Confusion conf;
    const int S = ck.net.arch().input_size;
    const int chunk = 32;
    for (size_t start = 0; start < test.records.size(); start += chunk) {
        const size_t end = std::min(test.records.size(), start + chunk);
        std::vector<int> idx;
        for (size_t i = start; i < end; ++i) idx.push_back(static_cast<int>(i));
        const TensorF batch = data::load_image_batch(test, idx, S);
        const MatF logits = ck.net.forward(batch, 0.0, nullptr);
        for (size_t i = start; i < end; ++i) {
            int pred = 0;
            logits.col(static_cast<Eigen::Index>(i - start)).maxCoeff(&pred);
            const bool actual_pos = index.at(test.records[i].label) == positive;
            const bool pred_pos = pred == positive;
            if (actual_pos && pred_pos)
                ++conf.tp;
            else if (actual_pos && !pred_pos)
                ++conf.fn;
            else if (!actual_pos && pred_pos)
                ++conf.fp;
            else
                ++conf.tn;
        }
    }
    return conf;
}

struct EvaluateResult {
    Confusion confusion;
    Metrics metrics;
};

inline EvaluateResult evaluate(const ClassifierCheckpoint& ck, const data::Manifest& test) {
    EvaluateResult r;
    r.confusion = evaluate_confusion(ck, test);
    r.metrics = metrics_from_confusion(r.confusion);
    return r;
}

// Weighted cross-entropy training with best-validation-epoch checkpointing.
// Deterministic for a fixed config/seed.
inline ClassifierCheckpoint train_classifier(const data::Manifest& train, const data::Manifest& val,
                                             const ClassifierConfig& cfg,
                                             const std::string& positive_label = "neoplastic",
                                             const std::string& select_metric = "f1") {
    const auto labels = detail::sorted_labels(train);
    check_arg(labels.size() >= 2, "train_classifier: training set has a single label");
    check_arg(std::find(labels.begin(), labels.end(), positive_label) != labels.end(),
              "positive label `", positive_label, "` absent from training set");

    const auto train_labels = detail::label_indices(train, labels);
    std::vector<double> class_weights = cfg.class_weights;
    if (class_weights.empty()) class_weights = detail::inverse_frequency_weights(train_labels, static_cast<int>(labels.size()));
    check_arg(class_weights.size() == labels.size(), "class_weights size mismatch");

    ClassifierArch arch;
    arch.input_size = cfg.input_size;
    arch.n_classes = static_cast<int>(labels.size());
    arch.widths = cfg.widths;
    Classifier<float> net(arch, cfg.seed);
    auto params = net.params();
    nn::Adam<float> opt(params, cfg.learning_rate);
    opt.weight_decay = cfg.l2_penalty;

    const TensorF all = data::load_all_images(train, cfg.input_size);
    Rng root(cfg.seed);
    Rng shuffle_stream = root.child("shuffle");
    Rng dropout_stream = root.child("dropout");

    ClassifierCheckpoint best;
    best.labels = labels;
    best.positive_label = positive_label;
    best.config = cfg;
    best.best_val_metric = -1.0;

    std::vector<int> order(train.records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    int epochs_since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_stream.shuffle(order);
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<int> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
            const TensorF batch = data::slice_samples(all, idx);
            std::vector<int> batch_labels(idx.size());
            for (size_t i = 0; i < idx.size(); ++i) batch_labels[i] = train_labels[static_cast<size_t>(idx[i])];

            ClassifierCache<float> cache;
            const MatF logits = net.forward(batch, cfg.dropout_probability, &dropout_stream, &cache);
            const auto ce = nn::weighted_ce_fwd(logits, batch_labels, class_weights);
            check(std::isfinite(ce.loss), "classifier diverged at epoch ", epoch);
            const MatF dlogits = nn::weighted_ce_bwd(ce, batch_labels, class_weights);
            nn::zero_grads(params);
            net.backward(cache, dlogits, cfg.dropout_probability);
            opt.step(params);
        }

        // validation selection
        ClassifierCheckpoint probe;
        probe.net = net;
        probe.labels = labels;
        probe.positive_label = positive_label;
        const auto val_result = evaluate(probe, val);
        const double val_metric = (select_metric == "accuracy") ? val_result.metrics.accuracy : val_result.metrics.f1;
        if (val_metric > best.best_val_metric) {
            best.net = net;
            best.best_val_metric = val_metric;
            best.best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.patience) {
            break;
        }
    }
    check(best.best_epoch >= 0, "classifier training never produced a validation checkpoint");
    return best;
}

}  // namespace ganaug::classify
