#pragma once

#include <cmath>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/tensor.hpp"
#include "ganaug/nn/param.hpp"

// Low-level batched ops with hand-written backward passes. Convolution is
// stride-1 same-padding (k in {1,3}) via per-sample im2col + Eigen GEMM;
// resolution changes go through explicit pool/upsample ops. Every backward is
// verified against finite differences in the unit suite (double instantiation).
namespace ganaug::nn {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------- conv2d ---

template <class T>
void im2col(const T* x, int ci, int h, int w, int k, Mat<T>& cols) {
    const int pad = k / 2;
    cols.resize(ci * k * k, h * w);
    for (int c = 0; c < ci; ++c) {
        const T* plane = x + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int row = (c * k + ky) * k + kx;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    T* dst = cols.data() + static_cast<size_t>(y * w) * cols.rows() + row;
                    if (sy < 0 || sy >= h) {
                        for (int xx = 0; xx < w; ++xx) dst[static_cast<size_t>(xx) * cols.rows()] = T(0);
                        continue;
                    }
                    const T* src = plane + static_cast<size_t>(sy) * w;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - pad;
                        dst[static_cast<size_t>(xx) * cols.rows()] = (sx < 0 || sx >= w) ? T(0) : src[sx];
                    }
                }
            }
        }
    }
}

template <class T>
void col2im(const Mat<T>& cols, int ci, int h, int w, int k, T* dx) {
    const int pad = k / 2;
    for (int c = 0; c < ci; ++c) {
        T* plane = dx + static_cast<size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const int row = (c * k + ky) * k + kx;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    T* dst = plane + static_cast<size_t>(sy) * w;
                    const T* src = cols.data() + static_cast<size_t>(y * w) * cols.rows() + row;
                    for (int xx = 0; xx < w; ++xx) {
                        const int sx = xx + kx - pad;
                        if (sx >= 0 && sx < w) dst[sx] += src[static_cast<size_t>(xx) * cols.rows()];
                    }
                }
            }
        }
    }
}

// y = conv(x, w) + bias; w flat layout [co][ci][ky][kx]
template <class T>
void conv2d_fwd(const Tensor<T>& x, const std::vector<T>& w, int co, int k, Tensor<T>& y,
                const std::vector<T>* bias = nullptr) {
    const int ci = x.c, h = x.h, wd = x.w;
    check(static_cast<size_t>(co) * ci * k * k == w.size(), "conv2d: weight size mismatch");
    y.resize(x.n, co, h, wd);
    Eigen::Map<const RowMat<T>> wm(w.data(), co, ci * k * k);
    Mat<T> cols;
    for (int n = 0; n < x.n; ++n) {
        im2col(x.sample(n), ci, h, wd, k, cols);
        Eigen::Map<Mat<T>> ym(y.sample(n), h * wd, co);  // (pixel, channel)
        ym.noalias() = cols.transpose() * wm.transpose();
    }
    if (bias != nullptr) {
        check(bias->size() == static_cast<size_t>(co), "conv2d: bias size mismatch");
        for (int n = 0; n < y.n; ++n)
            for (int c = 0; c < co; ++c) {
                T* plane = y.plane(n, c);
                const T b = (*bias)[c];
                for (int i = 0; i < h * wd; ++i) plane[i] += b;
            }
    }
}

// Gradients: any of dx/dw/dbias may be null; dw/dbias accumulate.
template <class T>
void conv2d_bwd(const Tensor<T>& x, const std::vector<T>& w, int co, int k, const Tensor<T>& dy, Tensor<T>* dx,
                std::vector<T>* dw, std::vector<T>* dbias) {
    const int ci = x.c, h = x.h, wd = x.w;
    Eigen::Map<const RowMat<T>> wm(w.data(), co, ci * k * k);
    if (dx != nullptr) dx->resize(x.n, ci, h, wd);
    Eigen::Map<RowMat<T>> dwm(dw != nullptr ? dw->data() : nullptr, dw != nullptr ? co : 0,
                              dw != nullptr ? ci * k * k : 0);
    Mat<T> cols, dcols;
    for (int n = 0; n < x.n; ++n) {
        Eigen::Map<const Mat<T>> dym(dy.sample(n), h * wd, co);
        if (dx != nullptr) {
            dcols.noalias() = wm.transpose() * dym.transpose();
            col2im(dcols, ci, h, wd, k, dx->sample(n));
        }
        if (dw != nullptr) {
            im2col(x.sample(n), ci, h, wd, k, cols);
            dwm.noalias() += dym.transpose() * cols.transpose();
        }
    }
    if (dbias != nullptr) {
        for (int n = 0; n < dy.n; ++n)
            for (int c = 0; c < co; ++c) {
                const T* plane = dy.plane(n, c);
                T acc = T(0);
                for (int i = 0; i < h * wd; ++i) acc += plane[i];
                (*dbias)[c] += acc;
            }
    }
}

// ----------------------------------------------------------------- dense ---

// X: (in x N), W flat [out][in], Y: (out x N)
template <class T>
void dense_fwd(const Mat<T>& x, const std::vector<T>& w, const std::vector<T>& b, int out, Mat<T>& y) {
    const int in = static_cast<int>(x.rows());
    check(w.size() == static_cast<size_t>(out) * in, "dense: weight size mismatch");
    Eigen::Map<const RowMat<T>> wm(w.data(), out, in);
    y.noalias() = wm * x;
    if (!b.empty()) {
        check(b.size() == static_cast<size_t>(out), "dense: bias size mismatch");
        Eigen::Map<const Vec<T>> bv(b.data(), out);
        y.colwise() += bv;
    }
}

template <class T>
void dense_bwd(const Mat<T>& x, const std::vector<T>& w, int out, const Mat<T>& dy, Mat<T>* dx, std::vector<T>* dw,
               std::vector<T>* db) {
    const int in = static_cast<int>(x.rows());
    Eigen::Map<const RowMat<T>> wm(w.data(), out, in);
    if (dx != nullptr) dx->noalias() = wm.transpose() * dy;
    if (dw != nullptr) {
        Eigen::Map<RowMat<T>> dwm(dw->data(), out, in);
        dwm.noalias() += dy * x.transpose();
    }
    if (db != nullptr) {
        Eigen::Map<Vec<T>> dbv(db->data(), out);
        dbv.noalias() += dy.rowwise().sum();
    }
}

// ----------------------------------------------------------- activations ---

// Leaky ReLU; the mask is recoverable from the output sign since slope > 0.
template <class T>
void lrelu_fwd(T* data, size_t n, T slope) {
    for (size_t i = 0; i < n; ++i)
        if (data[i] < T(0)) data[i] *= slope;
}

template <class T>
void lrelu_bwd(const T* y, T* dy, size_t n, T slope) {
    for (size_t i = 0; i < n; ++i)
        if (y[i] < T(0)) dy[i] *= slope;
}

template <class T>
void sigmoid_fwd(T* data, size_t n) {
    for (size_t i = 0; i < n; ++i) data[i] = T(1) / (T(1) + std::exp(-data[i]));
}

template <class T>
void sigmoid_bwd(const T* y, T* dy, size_t n) {
    for (size_t i = 0; i < n; ++i) dy[i] *= y[i] * (T(1) - y[i]);
}

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ------------------------------------------------------------ resampling ---

template <class T>
void avgpool2_fwd(const Tensor<T>& x, Tensor<T>& y) {
    check(x.h % 2 == 0 && x.w % 2 == 0, "avgpool2: odd input");
    y.resize(x.n, x.c, x.h / 2, x.w / 2);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* src = x.plane(n, c);
            T* dst = y.plane(n, c);
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx) {
                    const T* p = src + (2 * yy) * x.w + 2 * xx;
                    dst[yy * y.w + xx] = (p[0] + p[1] + p[x.w] + p[x.w + 1]) * T(0.25);
                }
        }
}

template <class T>
void avgpool2_bwd(const Tensor<T>& dy, Tensor<T>& dx, int h, int w) {
    dx.resize(dy.n, dy.c, h, w);
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            const T* src = dy.plane(n, c);
            T* dst = dx.plane(n, c);
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) {
                    const T v = src[yy * dy.w + xx] * T(0.25);
                    T* p = dst + (2 * yy) * w + 2 * xx;
                    p[0] = v;
                    p[1] = v;
                    p[w] = v;
                    p[w + 1] = v;
                }
        }
}

template <class T>
void upsample2_fwd(const Tensor<T>& x, Tensor<T>& y) {
    y.resize(x.n, x.c, x.h * 2, x.w * 2);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* src = x.plane(n, c);
            T* dst = y.plane(n, c);
            for (int yy = 0; yy < x.h; ++yy)
                for (int xx = 0; xx < x.w; ++xx) {
                    const T v = src[yy * x.w + xx];
                    T* p = dst + (2 * yy) * y.w + 2 * xx;
                    p[0] = v;
                    p[1] = v;
                    p[y.w] = v;
                    p[y.w + 1] = v;
                }
        }
}

template <class T>
void upsample2_bwd(const Tensor<T>& dy, Tensor<T>& dx) {
    check(dy.h % 2 == 0 && dy.w % 2 == 0, "upsample2_bwd: odd grad");
    dx.resize(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            const T* src = dy.plane(n, c);
            T* dst = dx.plane(n, c);
            for (int yy = 0; yy < dx.h; ++yy)
                for (int xx = 0; xx < dx.w; ++xx) {
                    const T* p = src + (2 * yy) * dy.w + 2 * xx;
                    dst[yy * dx.w + xx] = p[0] + p[1] + p[dy.w] + p[dy.w + 1];
                }
        }
}

// --------------------------------------------------------- vector norms ----

// column-wise x / sqrt(mean(x^2) + eps)
template <class T>
void pixelnorm_fwd(Mat<T>& x, Vec<T>& inv_norm, T eps = T(1e-8)) {
    const int d = static_cast<int>(x.rows());
    inv_norm.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const T s = T(1) / std::sqrt(x.col(j).squaredNorm() / d + eps);
        x.col(j) *= s;
        inv_norm[j] = s;
    }
}

template <class T>
void pixelnorm_bwd(const Mat<T>& y, const Vec<T>& inv_norm, Mat<T>& dy) {
    const int d = static_cast<int>(y.rows());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const T dot = y.col(j).dot(dy.col(j));
        dy.col(j) = inv_norm[j] * (dy.col(j) - y.col(j) * (dot / d));
    }
}

// --------------------------------------------------------------- pooling ---

template <class T>
void global_avgpool_fwd(const Tensor<T>& x, Mat<T>& feat) {
    feat.resize(x.c, x.n);
    const T inv = T(1) / static_cast<T>(x.plane_size());
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* plane = x.plane(n, c);
            T acc = T(0);
            for (int i = 0; i < x.plane_size(); ++i) acc += plane[i];
            feat(c, n) = acc * inv;
        }
}

template <class T>
void global_avgpool_bwd(const Mat<T>& dfeat, Tensor<T>& dx, int h, int w) {
    dx.resize(static_cast<int>(dfeat.cols()), static_cast<int>(dfeat.rows()), h, w);
    const T inv = T(1) / static_cast<T>(h * w);
    for (int n = 0; n < dx.n; ++n)
        for (int c = 0; c < dx.c; ++c) {
            const T v = dfeat(c, n) * inv;
            T* plane = dx.plane(n, c);
            for (int i = 0; i < h * w; ++i) plane[i] = v;
        }
}

// --------------------------------------------------------------- dropout ---

template <class T>
void dropout_fwd(Mat<T>& x, double p, Rng& rng, std::vector<uint8_t>& mask) {
    mask.resize(static_cast<size_t>(x.size()));
    if (p <= 0.0) {
        std::fill(mask.begin(), mask.end(), 1);
        return;
    }
    const T scale = T(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool keep = !rng.coin(p);
        mask[static_cast<size_t>(i)] = keep;
        x.data()[i] = keep ? x.data()[i] * scale : T(0);
    }
}

template <class T>
void dropout_bwd(Mat<T>& dy, double p, const std::vector<uint8_t>& mask) {
    if (p <= 0.0) return;
    const T scale = T(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < dy.size(); ++i) dy.data()[i] = mask[static_cast<size_t>(i)] ? dy.data()[i] * scale : T(0);
}

// --------------------------------------------- weighted cross entropy ------

// logits: (K x N). Loss = sum_i w[y_i] * -log softmax(logits)_{y_i} / sum_i w[y_i]
template <class T>
struct WceResult {
    double loss = 0;
    Mat<T> probs;
    double weight_sum = 0;
};

template <class T>
WceResult<T> weighted_ce_fwd(const Mat<T>& logits, const std::vector<int>& labels,
                             const std::vector<double>& class_weights) {
    const int K = static_cast<int>(logits.rows());
    const int N = static_cast<int>(logits.cols());
    check(static_cast<int>(labels.size()) == N, "weighted_ce: labels/batch mismatch");
    WceResult<T> res;
    res.probs.resize(K, N);
    double loss = 0, wsum = 0;
    for (int j = 0; j < N; ++j) {
        const T mx = logits.col(j).maxCoeff();
        double z = 0;
        for (int i = 0; i < K; ++i) z += std::exp(static_cast<double>(logits(i, j) - mx));
        for (int i = 0; i < K; ++i)
            res.probs(i, j) = static_cast<T>(std::exp(static_cast<double>(logits(i, j) - mx)) / z);
        const int y = labels[j];
        check(y >= 0 && y < K, "weighted_ce: label out of range");
        const double wy = class_weights[static_cast<size_t>(y)];
        loss += wy * -std::log(std::max(1e-12, static_cast<double>(res.probs(y, j))));
        wsum += wy;
    }
    res.loss = loss / std::max(1e-12, wsum);
    res.weight_sum = wsum;
    return res;
}

template <class T>
Mat<T> weighted_ce_bwd(const WceResult<T>& res, const std::vector<int>& labels,
                       const std::vector<double>& class_weights) {
    Mat<T> dlogits = res.probs;
    const int N = static_cast<int>(dlogits.cols());
    for (int j = 0; j < N; ++j) {
        const int y = labels[j];
        const double wy = class_weights[static_cast<size_t>(y)];
        dlogits(y, j) -= T(1);
        dlogits.col(j) *= static_cast<T>(wy / res.weight_sum);
    }
    return dlogits;
}

// ------------------------------------------------------- modulated conv ----

// StyleGAN2-style modulated convolution in the input/output-scaling form:
//   u = s (.) x  per input channel, z = conv(u, W),
//   y[o] = sigma[o] * z[o],  sigma[o] = (sum_{i,k} (W[o,i,k] * s[i])^2 + eps)^(-1/2)
// toRGB layers disable demodulation (sigma = 1).
template <class T>
struct ModConvCache {
    Tensor<T> u;      // scaled input
    Tensor<T> z;      // conv output before demod
    Mat<T> s;         // (Ci x N) styles
    Mat<T> sigma;     // (Co x N) demod factors (demod only)
    Mat<T> q;         // (Co x N) pre-rsqrt sums (demod only)
};

template <class T>
void modconv_fwd(const Tensor<T>& x, const Mat<T>& s, const std::vector<T>& w, int co, int k, bool demod,
                 Tensor<T>& y, ModConvCache<T>& cache, T eps = T(1e-8)) {
    const int ci = x.c;
    check(s.rows() == ci && s.cols() == x.n, "modconv: style shape mismatch");
    cache.s = s;
    cache.u.resize(x.n, ci, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < ci; ++c) {
            const T sc = s(c, n);
            const T* src = x.plane(n, c);
            T* dst = cache.u.plane(n, c);
            for (int i = 0; i < x.plane_size(); ++i) dst[i] = src[i] * sc;
        }
    conv2d_fwd(cache.u, w, co, k, cache.z);
    y = cache.z;
    if (!demod) return;

    // M[o][i] = sum_k W[o,i,k]^2
    Eigen::Map<const RowMat<T>> wm(w.data(), co, ci * k * k);
    Mat<T> m(co, ci);
    for (int o = 0; o < co; ++o)
        for (int i = 0; i < ci; ++i) m(o, i) = wm.row(o).segment(i * k * k, k * k).squaredNorm();
    cache.q.noalias() = m * s.cwiseProduct(s);
    cache.sigma = (cache.q.array() + eps).rsqrt();
    for (int n = 0; n < y.n; ++n)
        for (int c = 0; c < co; ++c) {
            const T sc = cache.sigma(c, n);
            T* plane = y.plane(n, c);
            for (int i = 0; i < y.plane_size(); ++i) plane[i] *= sc;
        }
}

// ds gets the per-sample style gradient; dw accumulates; dx may be null.
template <class T>
void modconv_bwd(const Tensor<T>& x, const std::vector<T>& w, int co, int k, bool demod, const Tensor<T>& dy,
                 const ModConvCache<T>& cache, Tensor<T>* dx, std::vector<T>* dw, Mat<T>& ds) {
    const int ci = x.c;
    const int N = x.n;
    ds.setZero(ci, N);

    // through the output scaling
    Tensor<T> dz = dy;
    Mat<T> dsigma;
    if (demod) {
        dsigma.setZero(co, N);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < co; ++c) {
                const T* zp = cache.z.plane(n, c);
                T* dzp = dz.plane(n, c);
                const T* dyp = dy.plane(n, c);
                T acc = T(0);
                for (int i = 0; i < dy.plane_size(); ++i) acc += dyp[i] * zp[i];
                dsigma(c, n) = acc;
                const T sc = cache.sigma(c, n);
                for (int i = 0; i < dy.plane_size(); ++i) dzp[i] = dyp[i] * sc;
            }
    }

    // through the convolution
    Tensor<T> du;
    conv2d_bwd(cache.u, w, co, k, dz, &du, dw, static_cast<std::vector<T>*>(nullptr));

    // through the input scaling
    if (dx != nullptr) dx->resize(N, ci, x.h, x.w);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < ci; ++c) {
            const T sc = cache.s(c, n);
            const T* dup = du.plane(n, c);
            const T* xp = x.plane(n, c);
            T acc = T(0);
            for (int i = 0; i < x.plane_size(); ++i) acc += dup[i] * xp[i];
            ds(c, n) += acc;
            if (dx != nullptr) {
                T* dxp = dx->plane(n, c);
                for (int i = 0; i < x.plane_size(); ++i) dxp[i] = dup[i] * sc;
            }
        }

    if (!demod) return;

    // through sigma = (q + eps)^{-1/2}
    Eigen::Map<const RowMat<T>> wm(w.data(), co, ci * k * k);
    Mat<T> m(co, ci);
    for (int o = 0; o < co; ++o)
        for (int i = 0; i < ci; ++i) m(o, i) = wm.row(o).segment(i * k * k, k * k).squaredNorm();
    // dq = dsigma * -0.5 * sigma^3
    Mat<T> dq = dsigma.cwiseProduct(cache.sigma.array().cube().matrix()) * T(-0.5);
    // ds[i,n] += sum_o dq[o,n] * 2 * M[o,i] * s[i,n]
    ds.noalias() += (m.transpose() * dq).cwiseProduct(cache.s) * T(2);
    if (dw != nullptr) {
        // dW[o,i,k] += dq[o,n] * 2 * W[o,i,k] * s[i,n]^2 summed over n
        Mat<T> s2sum = cache.s.cwiseProduct(cache.s) * dq.transpose();  // (Ci x Co)
        Eigen::Map<RowMat<T>> dwm(dw->data(), co, ci * k * k);
        for (int o = 0; o < co; ++o)
            for (int i = 0; i < ci; ++i)
                dwm.row(o).segment(i * k * k, k * k) +=
                    T(2) * s2sum(i, o) * wm.row(o).segment(i * k * k, k * k);
    }
}

// --------------------------------------------------------------- helpers ---

template <class T>
void add_channel_bias(Tensor<T>& y, const std::vector<T>& b) {
    check(b.size() == static_cast<size_t>(y.c), "bias size mismatch");
    for (int n = 0; n < y.n; ++n)
        for (int c = 0; c < y.c; ++c) {
            T* plane = y.plane(n, c);
            for (int i = 0; i < y.plane_size(); ++i) plane[i] += b[c];
        }
}

template <class T>
void channel_bias_grad(const Tensor<T>& dy, std::vector<T>& db) {
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            const T* plane = dy.plane(n, c);
            T acc = T(0);
            for (int i = 0; i < dy.plane_size(); ++i) acc += plane[i];
            db[c] += acc;
        }
}

// per-layer noise: one map per sample broadcast over channels, learned scalar strength
template <class T>
void add_noise(Tensor<T>& y, const Tensor<T>& noise, T strength) {
    check(noise.n == y.n && noise.c == 1 && noise.h == y.h && noise.w == y.w, "noise shape mismatch");
    for (int n = 0; n < y.n; ++n) {
        const T* np = noise.plane(n, 0);
        for (int c = 0; c < y.c; ++c) {
            T* plane = y.plane(n, c);
            for (int i = 0; i < y.plane_size(); ++i) plane[i] += strength * np[i];
        }
    }
}

template <class T>
T noise_strength_grad(const Tensor<T>& dy, const Tensor<T>& noise) {
    double acc = 0;
    for (int n = 0; n < dy.n; ++n) {
        const T* np = noise.plane(n, 0);
        for (int c = 0; c < dy.c; ++c) {
            const T* plane = dy.plane(n, c);
            for (int i = 0; i < dy.plane_size(); ++i) acc += static_cast<double>(plane[i]) * np[i];
        }
    }
    return static_cast<T>(acc);
}

}  // namespace ganaug::nn
