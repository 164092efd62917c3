#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ganaug/core/container.hpp"
#include "ganaug/core/kvconfig.hpp"
#include "ganaug/core/pnm.hpp"
#include "ganaug/core/resize.hpp"
#include "ganaug/core/rng.hpp"
#include "ganaug/core/run_record.hpp"

using namespace ganaug;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ganaug_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("rng streams are deterministic and child streams are independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng root(7);
    Rng c1 = root.child("pairs");
    Rng c2 = root.child("noise");
    REQUIRE(c1.next_u64() != c2.next_u64());

    // children derive from the root seed, not consumed state
    Rng root2(7);
    root2.next_u64();
    REQUIRE(root2.child("pairs").next_u64() == Rng(7).child("pairs").next_u64());

    Rng u(3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        const auto k = u.uniform_int(-3, 3);
        REQUIRE(k >= -3);
        REQUIRE(k <= 3);
    }
}

TEST_CASE("rng normal has sane moments") {
    Rng r(11);
    double sum = 0, sum_sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sum_sq += x * x;
    }
    REQUIRE(std::abs(sum / n) < 0.05);
    REQUIRE(std::abs(sum_sq / n - 1.0) < 0.05);
}

TEST_CASE("kvconfig parses sections, types and lists") {
    const auto cfg = KvConfig::parse_string(
        "# comment\n"
        "top = 1\n"
        "[gan]\n"
        "lr = 2.5e-3\n"
        "augs = flip, rotate,color\n"
        "xflip = true\n");
    REQUIRE(cfg.get_int("top", 0) == 1);
    REQUIRE(cfg.get_double("gan.lr", 0) == Catch::Approx(2.5e-3));
    REQUIRE(cfg.get_list("gan.augs", {}) == std::vector<std::string>{"flip", "rotate", "color"});
    REQUIRE(cfg.get_bool("gan.xflip", false));
    REQUIRE(cfg.get_str("missing", "d") == "d");
    REQUIRE_THROWS_AS(KvConfig::parse_string("novalue\n"), ParseError);

    // canonical form is order independent
    const auto cfg2 = KvConfig::parse_string("[gan]\nxflip = true\naugs = flip, rotate,color\nlr = 2.5e-3\n");
    KvConfig cfg3 = cfg2;
    cfg3.set("top", "1");
    REQUIRE(cfg3.canonical() == cfg.canonical());
}

TEST_CASE("checkpoint container round-trips bit-exactly") {
    const auto dir = temp_dir("container");
    Container c;
    c.kind = "generator";
    c.config["image_size"] = 64;
    c.config["seed"] = 123;
    Rng r(5);
    std::vector<float> w(257);
    for (auto& x : w) x = static_cast<float>(r.normal());
    c.add("mapping.fc0.w", {257}, w);
    c.add("empty.bias", {0}, {});
    const auto h0 = c.weights_hash();
    c.save(dir / "ck.bin");

    const Container d = Container::load(dir / "ck.bin");
    REQUIRE(d.kind == "generator");
    REQUIRE(d.config["image_size"] == 64);
    REQUIRE(d.weights_hash() == h0);
    REQUIRE(d.require("mapping.fc0.w").data == w);
    REQUIRE(d.find("nope") == nullptr);
    REQUIRE_THROWS(Container::load(dir / "missing.bin"));
}

TEST_CASE("pnm round-trip preserves 8-bit content") {
    const auto dir = temp_dir("pnm");
    TensorF img(1, 3, 5, 7);
    Rng r(9);
    for (auto& v : img.v) v = static_cast<float>(r.uniform());
    write_ppm(dir / "x.ppm", img);
    const TensorF back = read_pnm(dir / "x.ppm");
    REQUIRE(back.c == 3);
    REQUIRE(back.h == 5);
    REQUIRE(back.w == 7);
    for (size_t i = 0; i < img.v.size(); ++i)
        REQUIRE(std::abs(back.v[i] - img.v[i]) <= 0.5f / 255.0f + 1e-6f);

    // writing the loaded image again is byte-identical (8-bit fixed point)
    write_ppm(dir / "y.ppm", back);
    REQUIRE(hash_file(dir / "x.ppm") == hash_file(dir / "y.ppm"));

    TensorF mask(1, 1, 4, 4);
    mask.at(0, 0, 1, 2) = 1.0f;
    write_pgm(dir / "m.pgm", mask);
    const TensorF mback = read_pnm(dir / "m.pgm");
    REQUIRE(mback.at(0, 0, 1, 2) == 1.0f);
    REQUIRE(mback.at(0, 0, 0, 0) == 0.0f);
}

TEST_CASE("bilinear resize is identity at equal size and averages at 2x down") {
    TensorF img(1, 1, 4, 4);
    for (int i = 0; i < 16; ++i) img.v[i] = static_cast<float>(i);
    const auto same = resize_bilinear(img, 4, 4);
    REQUIRE(same.v == img.v);
    const auto half = resize_bilinear(img, 2, 2);
    REQUIRE(half.at(0, 0, 0, 0) == Catch::Approx((0 + 1 + 4 + 5) / 4.0));
    REQUIRE(half.at(0, 0, 1, 1) == Catch::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("run record replay view drops timestamps only") {
    const auto dir = temp_dir("runrec");
    RunRecord rec;
    rec.command_line = "ganaug corpus build --seed 3";
    rec.resolved_config["videos"] = 20;
    rec.input_hashes.emplace_back("manifest", to_hex(0x1234));
    rec.seed = 3;
    rec.write(dir / "run_record.json");
    const auto view = run_record_replay_view(dir / "run_record.json");
    REQUIRE_FALSE(view.contains("started"));
    REQUIRE(view["seed"] == 3);
    REQUIRE(view["config"]["videos"] == 20);
    REQUIRE(view["inputs"]["manifest"] == to_hex(0x1234));
}
