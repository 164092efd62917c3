#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug {

// Single-file checkpoint container: 8-byte magic, little-endian u64 header
// length, JSON header (kind / version / config / array directory), then the
// named float32 arrays back to back in directory order. Round-trips weights
// bit-exactly.
class Container {
  public:
    static constexpr char kMagic[9] = "GANAUGC1";

    struct NamedArray {
        std::string name;
        std::vector<int> dims;
        std::vector<float> data;
    };

    std::string kind;
    nlohmann::json config = nlohmann::json::object();
    std::vector<NamedArray> arrays;

    void add(const std::string& name, std::vector<int> dims, std::vector<float> data) {
        size_t expect = 1;
        for (int d : dims) expect *= static_cast<size_t>(d);
        check(expect == data.size(), "array `", name, "`: dims/data mismatch");
        arrays.push_back({name, std::move(dims), std::move(data)});
    }

    const NamedArray* find(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.name == name) return &a;
        return nullptr;
    }

    const NamedArray& require(const std::string& name) const {
        const NamedArray* a = find(name);
        check(a != nullptr, "checkpoint is missing array `", name, "`");
        return *a;
    }

    uint64_t weights_hash() const {
        Fnv64 f;
        for (const auto& a : arrays) {
            f.add(a.name);
            f.add_bytes(a.data.data(), a.data.size() * sizeof(float));
        }
        return f.h;
    }

    void save(const std::filesystem::path& path) const {
        nlohmann::json header;
        header["format_version"] = 1;
        header["kind"] = kind;
        header["config"] = config;
        auto dir = nlohmann::json::array();
        for (const auto& a : arrays) dir.push_back({{"name", a.name}, {"dims", a.dims}, {"dtype", "f32"}});
        header["arrays"] = dir;
        const std::string htext = header.dump();

        std::ofstream out(path, std::ios::binary);
        check(out.good(), "cannot write checkpoint: ", path.string());
        out.write(kMagic, 8);
        const uint64_t hlen = htext.size();
        out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
        for (const auto& a : arrays)
            out.write(reinterpret_cast<const char*>(a.data.data()),
                      static_cast<std::streamsize>(a.data.size() * sizeof(float)));
        check(out.good(), "checkpoint write failed: ", path.string());
    }

    static Container load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        check(in.good(), "cannot open checkpoint: ", path.string());
        char magic[8];
        in.read(magic, 8);
        check(in.good() && std::string_view(magic, 8) == std::string_view(kMagic, 8),
              "not a checkpoint container: ", path.string());
        uint64_t hlen = 0;
        in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
        std::string htext(hlen, '\0');
        in.read(htext.data(), static_cast<std::streamsize>(hlen));
        check(in.good(), "truncated checkpoint header: ", path.string());
        nlohmann::json header = nlohmann::json::parse(htext);
        check(header.value("format_version", 0) == 1, "unsupported checkpoint version in ", path.string());

        Container c;
        c.kind = header.value("kind", "");
        c.config = header.value("config", nlohmann::json::object());
        for (const auto& entry : header["arrays"]) {
            NamedArray a;
            a.name = entry["name"].get<std::string>();
            a.dims = entry["dims"].get<std::vector<int>>();
            check(entry.value("dtype", "f32") == "f32", "unsupported dtype for array `", a.name, "`");
            size_t count = 1;
            for (int d : a.dims) count *= static_cast<size_t>(d);
            a.data.resize(count);
            in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(count * sizeof(float)));
            check(in.good(), "truncated array `", a.name, "` in ", path.string());
            c.arrays.push_back(std::move(a));
        }
        return c;
    }
};

}  // namespace ganaug
