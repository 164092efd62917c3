#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganaug/core/check.hpp"

namespace ganaug::classify {

// Binary confusion counts with the positive class fixed to the neoplastic
// label. All reported metrics derive from these counts; the report carries
// the counts for auditability.
struct Confusion {
    long tp = 0, fp = 0, tn = 0, fn = 0;

    long total() const { return tp + fp + tn + fn; }
};

struct Metrics {
    double accuracy = 0, f1 = 0, sensitivity = 0, specificity = 0, precision = 0;
};

// zero-denominator convention: the metric reports 0
inline Metrics metrics_from_confusion(const Confusion& c) {
    Metrics m;
    const double total = static_cast<double>(c.total());
    m.accuracy = total > 0 ? (c.tp + c.tn) / total : 0.0;
    m.sensitivity = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    m.specificity = (c.tn + c.fp) > 0 ? static_cast<double>(c.tn) / (c.tn + c.fp) : 0.0;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    m.f1 = (m.precision + m.sensitivity) > 0 ? 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity) : 0.0;
    return m;
}

struct FoldReport {
    int fold = -1;
    Confusion confusion;
    Metrics metrics;
    std::string chosen_config;  // hyperparameters selected on validation
};

struct MetricsReport {
    std::string positive_label;
    std::vector<FoldReport> folds;
    Metrics mean;

    // mean = arithmetic mean of fold metrics (the reported row)
    void compute_mean() {
        mean = Metrics{};
        if (folds.empty()) return;
        for (const auto& f : folds) {
            mean.accuracy += f.metrics.accuracy;
            mean.f1 += f.metrics.f1;
            mean.sensitivity += f.metrics.sensitivity;
            mean.specificity += f.metrics.specificity;
            mean.precision += f.metrics.precision;
        }
        const double k = static_cast<double>(folds.size());
        mean.accuracy /= k;
        mean.f1 /= k;
        mean.sensitivity /= k;
        mean.specificity /= k;
        mean.precision /= k;
    }

    // every fold's metrics must re-derive from its confusion counts
    void validate() const {
        for (const auto& f : folds) {
            const Metrics re = metrics_from_confusion(f.confusion);
            check(std::abs(re.accuracy - f.metrics.accuracy) < 1e-12 && std::abs(re.f1 - f.metrics.f1) < 1e-12 &&
                      std::abs(re.sensitivity - f.metrics.sensitivity) < 1e-12 &&
                      std::abs(re.specificity - f.metrics.specificity) < 1e-12 &&
                      std::abs(re.precision - f.metrics.precision) < 1e-12,
                  "fold ", f.fold, ": metrics inconsistent with confusion counts");
        }
    }

    std::string to_csv() const {
        std::ostringstream os;
        os << std::setprecision(12);
        os << "fold,accuracy,f1_score,sensitivity,specificity,precision,tp,fp,tn,fn,chosen_config\n";
        for (const auto& f : folds)
            os << f.fold << "," << f.metrics.accuracy << "," << f.metrics.f1 << "," << f.metrics.sensitivity << ","
               << f.metrics.specificity << "," << f.metrics.precision << "," << f.confusion.tp << ","
               << f.confusion.fp << "," << f.confusion.tn << "," << f.confusion.fn << "," << f.chosen_config << "\n";
        os << "mean," << mean.accuracy << "," << mean.f1 << "," << mean.sensitivity << "," << mean.specificity << ","
           << mean.precision << ",,,,,\n";
        return os.str();
    }

    std::string to_text() const {
        std::ostringstream os;
        os << std::fixed << std::setprecision(3);
        os << "positive label: " << positive_label << "\n";
        os << "fold  accuracy  f1      sens    spec    prec    (tp/fp/tn/fn)\n";
        for (const auto& f : folds)
            os << f.fold << "     " << f.metrics.accuracy << "     " << f.metrics.f1 << "   " << f.metrics.sensitivity
               << "   " << f.metrics.specificity << "   " << f.metrics.precision << "   (" << f.confusion.tp << "/"
               << f.confusion.fp << "/" << f.confusion.tn << "/" << f.confusion.fn << ")\n";
        os << "mean  " << mean.accuracy << "     " << mean.f1 << "   " << mean.sensitivity << "   " << mean.specificity
           << "   " << mean.precision << "\n";
        return os.str();
    }

    void save(const std::filesystem::path& csv_path, const std::filesystem::path& text_path) const {
        std::ofstream csv(csv_path);
        check(csv.good(), "cannot write report: ", csv_path.string());
        csv << to_csv();
        std::ofstream txt(text_path);
        check(txt.good(), "cannot write report: ", text_path.string());
        txt << to_text();
    }
};

}  // namespace ganaug::classify
