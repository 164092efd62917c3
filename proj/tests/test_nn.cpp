#include <catch2/catch_amalgamated.hpp>

#include "ganaug/gan/discriminator.hpp"
#include "ganaug/gan/generator.hpp"
#include "ganaug/nn/adam.hpp"
#include "ganaug/nn/ops.hpp"

using namespace ganaug;
using namespace ganaug::nn;

namespace {

// central finite differences against an analytic gradient
template <class LossFn>
void check_grad(std::vector<double>& x, const std::vector<double>& analytic, LossFn loss, double eps = 1e-5,
                double tol = 1e-6) {
    REQUIRE(analytic.size() == x.size());
    const size_t stride = std::max<size_t>(1, x.size() / 64);  // probe a spread of entries
    for (size_t i = 0; i < x.size(); i += stride) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double lp = loss();
        x[i] = orig - eps;
        const double lm = loss();
        x[i] = orig;
        const double numeric = (lp - lm) / (2 * eps);
        const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
        INFO("index " << i << " numeric " << numeric << " analytic " << analytic[i]);
        REQUIRE(std::abs(numeric - analytic[i]) / scale < tol);
    }
}

TensorD random_tensor(int n, int c, int h, int w, Rng& rng, double scale = 1.0) {
    TensorD t(n, c, h, w);
    for (auto& v : t.v) v = rng.normal() * scale;
    return t;
}

std::vector<double> random_vec(size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * scale;
    return v;
}

double dot(const TensorD& a, const std::vector<double>& r) {
    double acc = 0;
    for (size_t i = 0; i < a.v.size(); ++i) acc += a.v[i] * r[i];
    return acc;
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(101);
    for (int k : {1, 3}) {
        TensorD x = random_tensor(2, 3, 5, 5, rng);
        const int co = 4;
        std::vector<double> w = random_vec(static_cast<size_t>(co) * 3 * k * k, rng, 0.3);
        std::vector<double> b = random_vec(co, rng, 0.1);
        std::vector<double> proj = random_vec(static_cast<size_t>(2) * co * 25, rng);

        auto loss = [&]() {
            TensorD y;
            conv2d_fwd(x, w, co, k, y, &b);
            return dot(y, proj);
        };

        TensorD y;
        conv2d_fwd(x, w, co, k, y, &b);
        TensorD dy = y;
        dy.v.assign(proj.begin(), proj.end());
        TensorD dx;
        std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
        conv2d_bwd(x, w, co, k, dy, &dx, &dw, &db);

        check_grad(x.v, dx.v, loss);
        check_grad(w, dw, loss);
        check_grad(b, db, loss);
    }
}

TEST_CASE("dense gradients match finite differences") {
    Rng rng(102);
    MatD x(6, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<double> w = random_vec(4 * 6, rng, 0.4);
    std::vector<double> b = random_vec(4, rng, 0.1);
    MatD proj(4, 3);
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();

    std::vector<double> xv(x.data(), x.data() + x.size());
    // rebuild x from the flat copy each call so perturbing any input is seen
    auto loss = [&]() {
        std::copy(xv.begin(), xv.end(), x.data());
        MatD y;
        dense_fwd(x, w, b, 4, y);
        return (y.array() * proj.array()).sum();
    };

    MatD y;
    dense_fwd(x, w, b, 4, y);
    MatD dx;
    std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
    dense_bwd(x, w, 4, proj, &dx, &dw, &db);

    std::vector<double> dxv(dx.data(), dx.data() + dx.size());
    check_grad(xv, dxv, loss);
    check_grad(w, dw, loss);
    check_grad(b, db, loss);
}

TEST_CASE("pixelnorm gradient matches finite differences") {
    Rng rng(103);
    MatD x0(8, 3);
    for (int i = 0; i < x0.size(); ++i) x0.data()[i] = rng.normal();
    MatD proj = x0;
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();

    std::vector<double> xv(x0.data(), x0.data() + x0.size());
    auto loss = [&]() {
        MatD x = Eigen::Map<MatD>(xv.data(), 8, 3);
        VecD inv;
        pixelnorm_fwd(x, inv);
        return (x.array() * proj.array()).sum();
    };

    MatD x = x0;
    VecD inv;
    pixelnorm_fwd(x, inv);
    MatD dy = proj;
    pixelnorm_bwd(x, inv, dy);
    std::vector<double> dxv(dy.data(), dy.data() + dy.size());
    check_grad(xv, dxv, loss);
}

TEST_CASE("pool and upsample gradients match finite differences") {
    Rng rng(104);
    TensorD x = random_tensor(2, 2, 4, 4, rng);
    std::vector<double> proj_up = random_vec(2 * 2 * 64, rng);
    auto loss_up = [&]() {
        TensorD y;
        upsample2_fwd(x, y);
        return dot(y, proj_up);
    };
    TensorD dy_up(2, 2, 8, 8);
    dy_up.v.assign(proj_up.begin(), proj_up.end());
    TensorD dx_up;
    upsample2_bwd(dy_up, dx_up);
    check_grad(x.v, dx_up.v, loss_up);

    std::vector<double> proj_dn = random_vec(2 * 2 * 4, rng);
    auto loss_dn = [&]() {
        TensorD y;
        avgpool2_fwd(x, y);
        return dot(y, proj_dn);
    };
    TensorD dy_dn(2, 2, 2, 2);
    dy_dn.v.assign(proj_dn.begin(), proj_dn.end());
    TensorD dx_dn;
    avgpool2_bwd(dy_dn, dx_dn, 4, 4);
    check_grad(x.v, dx_dn.v, loss_dn);
}

TEST_CASE("modulated conv gradients match finite differences (demod on and off)") {
    Rng rng(105);
    for (bool demod : {true, false}) {
        const int ci = 3, co = 4, k = 3, N = 2, hw = 4;
        TensorD x = random_tensor(N, ci, hw, hw, rng);
        std::vector<double> w = random_vec(static_cast<size_t>(co) * ci * k * k, rng, 0.4);
        std::vector<double> sv = random_vec(static_cast<size_t>(ci) * N, rng, 0.5);
        for (auto& s : sv) s += 1.0;  // styles near 1 as after the affine
        std::vector<double> proj = random_vec(static_cast<size_t>(N) * co * hw * hw, rng);

        auto loss = [&]() {
            MatD s = Eigen::Map<MatD>(sv.data(), ci, N);
            TensorD y;
            ModConvCache<double> cache;
            modconv_fwd(x, s, w, co, k, demod, y, cache);
            return dot(y, proj);
        };

        MatD s = Eigen::Map<MatD>(sv.data(), ci, N);
        TensorD y;
        ModConvCache<double> cache;
        modconv_fwd(x, s, w, co, k, demod, y, cache);
        TensorD dy = y;
        dy.v.assign(proj.begin(), proj.end());
        TensorD dx;
        std::vector<double> dw(w.size(), 0.0);
        MatD ds;
        modconv_bwd(x, w, co, k, demod, dy, cache, &dx, &dw, ds);

        check_grad(x.v, dx.v, loss);
        check_grad(w, dw, loss);
        std::vector<double> dsv(ds.data(), ds.data() + ds.size());
        check_grad(sv, dsv, loss);
    }
}

TEST_CASE("weighted cross entropy gradient matches finite differences") {
    Rng rng(106);
    const int K = 3, N = 5;
    MatD logits(K, N);
    for (int i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
    std::vector<int> labels = {0, 2, 1, 2, 0};
    std::vector<double> wts = {1.0, 2.5, 0.7};

    std::vector<double> lv(logits.data(), logits.data() + logits.size());
    auto loss = [&]() {
        MatD l = Eigen::Map<MatD>(lv.data(), K, N);
        return weighted_ce_fwd(l, labels, wts).loss;
    };

    const auto res = weighted_ce_fwd(logits, labels, wts);
    const MatD dlogits = weighted_ce_bwd(res, labels, wts);
    std::vector<double> dv(dlogits.data(), dlogits.data() + dlogits.size());
    check_grad(lv, dv, loss);
}

TEST_CASE("dropout respects mask and scaling") {
    Rng rng(107);
    MatD x(10, 4);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = 1.0;
    MatD orig = x;
    std::vector<uint8_t> mask;
    Rng drop(55);
    dropout_fwd(x, 0.5, drop, mask);
    int kept = 0;
    for (int i = 0; i < x.size(); ++i) {
        if (mask[static_cast<size_t>(i)]) {
            REQUIRE(x.data()[i] == Catch::Approx(2.0));
            ++kept;
        } else {
            REQUIRE(x.data()[i] == 0.0);
        }
    }
    REQUIRE(kept > 5);
    REQUIRE(kept < 35);
    MatD dy = orig;
    dropout_bwd(dy, 0.5, mask);
    for (int i = 0; i < dy.size(); ++i) REQUIRE(dy.data()[i] == (mask[static_cast<size_t>(i)] ? 2.0 : 0.0));
}

namespace {
gan::GanArch tiny_arch() {
    gan::GanArch a;
    a.image_size = 16;
    a.z_dim = 8;
    a.w_dim = 8;
    a.map_layers = 2;
    a.map_hidden = 8;
    a.channels = {8, 6, 4};
    return a;
}
}  // namespace

TEST_CASE("generator synthesis gradients match finite differences") {
    Rng rng(108);
    gan::Generator<double> g(tiny_arch(), 7);
    const int L = g.arch().num_style_layers();
    const int N = 2;

    std::vector<MatD> styles(L);
    std::vector<double> flat_styles;
    for (int l = 0; l < L; ++l) {
        styles[l].resize(8, N);
        for (int i = 0; i < styles[l].size(); ++i) {
            styles[l].data()[i] = rng.normal() * 0.5;
            flat_styles.push_back(styles[l].data()[i]);
        }
    }
    const std::vector<uint64_t> seeds = {11, 12};
    std::vector<double> proj = random_vec(static_cast<size_t>(N) * 3 * 16 * 16, rng);

    auto rebuild_styles = [&]() {
        size_t idx = 0;
        for (int l = 0; l < L; ++l)
            for (int i = 0; i < styles[l].size(); ++i) styles[l].data()[i] = flat_styles[idx++];
    };
    auto loss = [&]() {
        rebuild_styles();
        const TensorD img = g.synth_forward(styles, g.make_noise(seeds));
        return dot(img, proj);
    };

    rebuild_styles();
    gan::SynthCache<double> cache;
    const TensorD img = g.synth_forward(styles, g.make_noise(seeds), &cache);
    TensorD dimg = img;
    dimg.v.assign(proj.begin(), proj.end());
    std::vector<MatD> dstyles;
    zero_grads(g.params());
    g.synth_backward(cache, dimg, &dstyles, /*accum=*/true);

    // style gradients
    std::vector<double> dflat;
    for (int l = 0; l < L; ++l)
        for (int i = 0; i < dstyles[l].size(); ++i) dflat.push_back(dstyles[l].data()[i]);
    check_grad(flat_styles, dflat, loss, 1e-5, 1e-5);

    // parameter gradients for every generator param
    for (auto* p : g.params()) {
        if (p->name.rfind("mapping.", 0) == 0) continue;  // mapping not exercised by synth
        INFO("param " << p->name);
        check_grad(p->w, p->g, loss, 1e-5, 1e-5);
    }
}

TEST_CASE("generator mapping gradients match finite differences") {
    Rng rng(109);
    gan::Generator<double> g(tiny_arch(), 9);
    const int N = 3;
    MatD z(8, N);
    for (int i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    MatD proj(8, N);
    for (int i = 0; i < proj.size(); ++i) proj.data()[i] = rng.normal();

    auto loss = [&]() {
        const MatD w = g.map_forward(z);
        return (w.array() * proj.array()).sum();
    };

    gan::MappingCache<double> cache;
    g.map_forward(z, &cache);
    zero_grads(g.params());
    g.map_backward(cache, proj, true);
    for (auto* p : g.params()) {
        if (p->name.rfind("mapping.", 0) != 0) continue;
        INFO("param " << p->name);
        check_grad(p->w, p->g, loss, 1e-5, 1e-5);
    }
}

TEST_CASE("discriminator gradients match finite differences") {
    Rng rng(110);
    gan::Discriminator<double> d(tiny_arch(), 13);
    const int N = 2;
    TensorD x = random_tensor(N, 3, 16, 16, rng, 0.5);
    for (auto& v : x.v) v = v * 0.2 + 0.5;
    VecD proj(N);
    for (int i = 0; i < N; ++i) proj[i] = rng.normal();

    auto loss = [&]() {
        const VecD logits = d.forward(x);
        return logits.dot(proj);
    };

    gan::DiscCache<double> cache;
    d.forward(x, &cache);
    zero_grads(d.params());
    const TensorD dx = d.backward(cache, proj, true);

    check_grad(x.v, dx.v, loss, 1e-5, 1e-5);
    for (auto* p : d.params()) {
        INFO("param " << p->name);
        check_grad(p->w, p->g, loss, 1e-5, 1e-5);
    }
}

TEST_CASE("adam minimizes a quadratic deterministically") {
    Param<double> p;
    p.init("x", {4});
    p.w = {5.0, -3.0, 2.0, 0.5};
    ParamRefs<double> refs{&p};
    Adam<double> opt(refs, 0.1);
    for (int step = 0; step < 500; ++step) {
        for (size_t i = 0; i < p.w.size(); ++i) p.g[i] = 2.0 * p.w[i];
        opt.step(refs);
    }
    for (double x : p.w) REQUIRE(std::abs(x) < 1e-3);

    // determinism
    Param<double> q;
    q.init("x", {4});
    q.w = {5.0, -3.0, 2.0, 0.5};
    ParamRefs<double> qrefs{&q};
    Adam<double> opt2(qrefs, 0.1);
    for (int step = 0; step < 500; ++step) {
        for (size_t i = 0; i < q.w.size(); ++i) q.g[i] = 2.0 * q.w[i];
        opt2.step(qrefs);
    }
    REQUIRE(q.w == p.w);
}
