#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ganaug/core/check.hpp"
#include "ganaug/metrics/features.hpp"

namespace ganaug::metrics {

// Frechet distance between Gaussian fits of feature sets:
//   ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2)
// Matrix square roots go through eigendecomposition of the symmetrized
// product with eigenvalues clamped at 0 (tolerance 1e-8); desk-scale
// covariances are near-singular, so clamping is routine, and small sets
// (n < dim/4) engage a fixed shrinkage toward the isotropic covariance.
// Values here are "toy-FID": the extractor, resolution and corpus differ from
// the reference inception setup, so they are not comparable across setups.
struct FidDetail {
    double fid = 0;
    double mean_term = 0;
    double trace_term = 0;
    int clamped_eigenvalues = 0;
    bool shrinkage_a = false;
    bool shrinkage_b = false;

    nlohmann::json to_json() const {
        return {{"fid", fid},
                {"mean_term", mean_term},
                {"trace_term", trace_term},
                {"clamped_eigenvalues", clamped_eigenvalues},
                {"shrinkage_a", shrinkage_a},
                {"shrinkage_b", shrinkage_b}};
    }
};

struct GaussianStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
};

// rows = samples, cols = feature dims; unbiased covariance
inline GaussianStats gaussian_stats(const MatD& features) {
    const auto n = features.rows();
    check_arg(n >= 2, "gaussian_stats: need >= 2 samples, got ", n);
    check_arg(features.allFinite(), "gaussian_stats: non-finite features");
    GaussianStats s;
    s.mu = features.colwise().mean().transpose();
    const MatD centered = features.rowwise() - s.mu.transpose();
    s.cov = centered.transpose() * centered / static_cast<double>(n - 1);
    return s;
}

inline void apply_shrinkage(GaussianStats& s, double alpha = 0.1) {
    const auto dim = s.cov.rows();
    const double iso = s.cov.trace() / static_cast<double>(dim);
    s.cov = (1.0 - alpha) * s.cov + alpha * iso * Eigen::MatrixXd::Identity(dim, dim);
}

namespace detail {
// PSD square root with negative-eigenvalue clamping; returns clamp count
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, int* clamped, double tol = 1e-8) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    check(es.info() == Eigen::Success, "eigendecomposition failed in FID");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < 0.0) {
            if (clamped != nullptr && ev[i] < -tol) ++(*clamped);
            ev[i] = 0.0;
        }
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}
}  // namespace detail

inline FidDetail fid_from_stats(const GaussianStats& a, const GaussianStats& b) {
    check_arg(a.mu.size() == b.mu.size(), "fid: feature dimension mismatch");
    FidDetail d;
    d.mean_term = (a.mu - b.mu).squaredNorm();
    const Eigen::MatrixXd sqrt_a = detail::psd_sqrt(a.cov, &d.clamped_eigenvalues);
    const Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
    const Eigen::MatrixXd sqrt_inner = detail::psd_sqrt(inner, &d.clamped_eigenvalues);
    d.trace_term = a.cov.trace() + b.cov.trace() - 2.0 * sqrt_inner.trace();
    d.fid = d.mean_term + d.trace_term;
    if (d.fid < 0.0 && d.fid > -1e-6) d.fid = 0.0;  // numerical floor
    return d;
}

// feature matrices: rows = samples
inline FidDetail fid_from_features(MatD features_a, MatD features_b) {
    const auto dim = features_a.cols();
    check_arg(features_b.cols() == dim, "fid: feature dimension mismatch");
    GaussianStats a = gaussian_stats(features_a);
    GaussianStats b = gaussian_stats(features_b);
    FidDetail detail;
    if (features_a.rows() < dim / 4) {
        apply_shrinkage(a);
        detail.shrinkage_a = true;
    }
    if (features_b.rows() < dim / 4) {
        apply_shrinkage(b);
        detail.shrinkage_b = true;
    }
    FidDetail d = fid_from_stats(a, b);
    d.shrinkage_a = detail.shrinkage_a;
    d.shrinkage_b = detail.shrinkage_b;
    return d;
}

inline FidDetail fid(const TensorF& images_a, const TensorF& images_b, const FeatureNet<float>& extractor) {
    check_arg(images_a.n >= 2 && images_b.n >= 2, "fid: each set needs >= 2 images");
    return fid_from_features(extract_features(extractor, images_a), extract_features(extractor, images_b));
}

}  // namespace ganaug::metrics
