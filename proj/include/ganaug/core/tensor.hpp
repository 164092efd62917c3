#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;

// Dense NCHW tensor. Images are Tensor<float> with n=1, c=3 and values in [0,1].
template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) { resize(n_, c_, h_, w_); }

    void resize(int n_, int c_, int h_, int w_) {
        n = n_;
        c = c_;
        h = h_;
        w = w_;
        v.assign(static_cast<size_t>(n) * c * h * w, T(0));
    }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    int plane_size() const { return h * w; }
    int sample_size() const { return c * h * w; }

    T* sample(int ni) { return v.data() + static_cast<size_t>(ni) * sample_size(); }
    const T* sample(int ni) const { return v.data() + static_cast<size_t>(ni) * sample_size(); }
    T* plane(int ni, int ci) { return sample(ni) + static_cast<size_t>(ci) * plane_size(); }
    const T* plane(int ni, int ci) const { return sample(ni) + static_cast<size_t>(ci) * plane_size(); }

    T& at(int ni, int ci, int y, int x) { return plane(ni, ci)[y * w + x]; }
    const T& at(int ni, int ci, int y, int x) const { return plane(ni, ci)[y * w + x]; }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    void fill(T value) { std::fill(v.begin(), v.end(), value); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(n, c, h, w);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    uint64_t content_hash() const { return hash_span(v.data(), v.size()); }

    bool all_finite() const {
        for (const T& x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class T>
Eigen::Map<Vec<T>> as_vec(Tensor<T>& t) {
    return Eigen::Map<Vec<T>>(t.v.data(), static_cast<Eigen::Index>(t.v.size()));
}
template <class T>
Eigen::Map<const Vec<T>> as_vec(const Tensor<T>& t) {
    return Eigen::Map<const Vec<T>>(t.v.data(), static_cast<Eigen::Index>(t.v.size()));
}

}  // namespace ganaug
