#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug::gan {

// Per-layer latent style codes in extended W space: one d_w vector per
// synthesis layer. A freshly mapped sample broadcasts the same vector to all
// layers; inversion and editing operate on the layers independently.
// Stored in double so latent arithmetic identities hold to 1e-9.
struct StyleStack {
    Eigen::MatrixXd layers;  // L x d_w, one row per synthesis layer

    StyleStack() = default;
    StyleStack(int num_layers, int dim) : layers(Eigen::MatrixXd::Zero(num_layers, dim)) {}

    int num_layers() const { return static_cast<int>(layers.rows()); }
    int dim() const { return static_cast<int>(layers.cols()); }

    bool same_shape(const StyleStack& o) const {
        return layers.rows() == o.layers.rows() && layers.cols() == o.layers.cols();
    }

    bool all_finite() const { return layers.allFinite(); }

    static StyleStack broadcast(const Eigen::VectorXd& w, int num_layers) {
        StyleStack s(num_layers, static_cast<int>(w.size()));
        for (int l = 0; l < num_layers; ++l) s.layers.row(l) = w.transpose();
        return s;
    }

    Eigen::VectorXd mean_layer() const { return layers.colwise().mean().transpose(); }

    // per-layer offsets from the stack's mean code; the e4e editability proxy
    Eigen::VectorXd delta_norms() const {
        const Eigen::VectorXd mean = mean_layer();
        Eigen::VectorXd norms(num_layers());
        for (int l = 0; l < num_layers(); ++l) norms[l] = (layers.row(l).transpose() - mean).norm();
        return norms;
    }

    // mean squared deviation of layer codes around their mean
    double layer_variance() const {
        const Eigen::VectorXd norms = delta_norms();
        return norms.squaredNorm() / (num_layers() * dim());
    }

    uint64_t content_hash() const {
        return hash_span(layers.data(), static_cast<size_t>(layers.size()));
    }
};

}  // namespace ganaug::gan
