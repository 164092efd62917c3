#pragma once

#include <string>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/container.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/core/tensor.hpp"

namespace ganaug::nn {

// Learnable array with matching gradient buffer. Nets register their params
// in a stable order; optimizers and checkpoints address them by that order
// and by name.
template <class T>
struct Param {
    std::string name;
    std::vector<int> dims;
    std::vector<T> w;
    std::vector<T> g;
    double lr_scale = 1.0;

    void init(std::string name_, std::vector<int> dims_) {
        name = std::move(name_);
        dims = std::move(dims_);
        size_t n = 1;
        for (int d : dims) n *= static_cast<size_t>(d);
        w.assign(n, T(0));
        g.assign(n, T(0));
    }

    size_t size() const { return w.size(); }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }

    void fill_normal(Rng& rng, double stddev) {
        for (auto& x : w) x = static_cast<T>(rng.normal() * stddev);
    }
    void fill_constant(T v) { std::fill(w.begin(), w.end(), v); }

    Eigen::Map<Mat<T>> mat(int rows, int cols) {
        check(static_cast<size_t>(rows) * cols == w.size(), "param ", name, ": bad mat view");
        return Eigen::Map<Mat<T>>(w.data(), rows, cols);
    }
    Eigen::Map<const Mat<T>> mat(int rows, int cols) const {
        check(static_cast<size_t>(rows) * cols == w.size(), "param ", name, ": bad mat view");
        return Eigen::Map<const Mat<T>>(w.data(), rows, cols);
    }
    Eigen::Map<Mat<T>> grad_mat(int rows, int cols) {
        check(static_cast<size_t>(rows) * cols == g.size(), "param ", name, ": bad grad view");
        return Eigen::Map<Mat<T>>(g.data(), rows, cols);
    }
};

template <class T>
using ParamRefs = std::vector<Param<T>*>;

template <class T>
void zero_grads(const ParamRefs<T>& params) {
    for (auto* p : params) p->zero_grad();
}

template <class T>
size_t param_count(const ParamRefs<T>& params) {
    size_t n = 0;
    for (auto* p : params) n += p->size();
    return n;
}

template <class T>
uint64_t params_hash(const ParamRefs<T>& params) {
    Fnv64 f;
    for (const auto* p : params) {
        f.add(p->name);
        f.add_bytes(p->w.data(), p->w.size() * sizeof(T));
    }
    return f.h;
}

// Checkpoint bridging. Containers store float32; double nets round-trip
// through float only in tests.
template <class T>
void save_params(Container& c, const ParamRefs<T>& params, const std::string& prefix = "") {
    for (const auto* p : params) {
        std::vector<float> data(p->w.size());
        for (size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(p->w[i]);
        c.add(prefix + p->name, p->dims, std::move(data));
    }
}

template <class T>
void load_params(const Container& c, const ParamRefs<T>& params, const std::string& prefix = "") {
    for (auto* p : params) {
        const auto& a = c.require(prefix + p->name);
        check(a.data.size() == p->w.size(), "checkpoint array `", a.name, "` has wrong size");
        for (size_t i = 0; i < a.data.size(); ++i) p->w[i] = static_cast<T>(a.data[i]);
    }
}

}  // namespace ganaug::nn
