#pragma once

#include <map>
#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/gan/style_stack.hpp"

namespace ganaug::latent {

// Silhouette-style separation score over mean-pooled StyleStacks, reported as
// a diagnostic for the cluster assumption behind interpolation (same-class
// codes should sit together in latent space). Range [-1,1]; not enforced.
inline double cluster_diagnostic(const std::map<std::string, std::vector<gan::StyleStack>>& by_label) {
    check_arg(by_label.size() >= 2, "cluster_diagnostic: need >= 2 labels, got ", by_label.size());
    for (const auto& [label, stacks] : by_label)
        check_arg(stacks.size() >= 5, "cluster_diagnostic: too few samples for label `", label, "` (", stacks.size(),
                  " < 5)");

    std::vector<Eigen::VectorXd> points;
    std::vector<int> cluster;
    int ci = 0;
    for (const auto& [label, stacks] : by_label) {
        for (const auto& s : stacks) {
            points.push_back(s.mean_layer());
            cluster.push_back(ci);
        }
        ++ci;
    }
    const int n = static_cast<int>(points.size());
    const int k = ci;

    double score_sum = 0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> mean_dist(k, 0.0);
        std::vector<int> count(k, 0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[static_cast<size_t>(cluster[j])] += (points[i] - points[j]).norm();
            count[static_cast<size_t>(cluster[j])]++;
        }
        const int own = cluster[i];
        const double a = mean_dist[static_cast<size_t>(own)] / std::max(1, count[static_cast<size_t>(own)]);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || count[static_cast<size_t>(c)] == 0) continue;
            b = std::min(b, mean_dist[static_cast<size_t>(c)] / count[static_cast<size_t>(c)]);
        }
        const double denom = std::max(a, b);
        score_sum += denom > 0 ? (b - a) / denom : 0.0;
    }
    return score_sum / n;
}

}  // namespace ganaug::latent
