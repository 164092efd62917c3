#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

#ifndef GANAUG_VERSION
#define GANAUG_VERSION "0.0.0"
#endif

namespace ganaug {

// Every artifact-producing command drops exactly one run_record.json beside
// its outputs: command line, resolved config, input hashes, seed, timestamps.
// The `nondeterministic` list names the fields excluded from replay hashing
// (timestamps are the only ones).
struct RunRecord {
    std::string command_line;
    nlohmann::json resolved_config = nlohmann::json::object();
    std::vector<std::pair<std::string, std::string>> input_hashes;  // name -> hex hash
    uint64_t seed = 0;

    nlohmann::json to_json(bool with_timestamps = true) const {
        nlohmann::json j;
        j["tool"] = std::string("ganaug ") + GANAUG_VERSION;
        j["command"] = command_line;
        j["config"] = resolved_config;
        j["config_hash"] = to_hex(fnv1a64(resolved_config.dump()));
        auto inputs = nlohmann::json::object();
        for (const auto& [name, hash] : input_hashes) inputs[name] = hash;
        j["inputs"] = inputs;
        j["seed"] = seed;
        j["nondeterministic"] = {"started", "finished"};
        if (with_timestamps) {
            j["started"] = iso_now();
            j["finished"] = iso_now();
        }
        return j;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        check(out.good(), "cannot write run record: ", path.string());
        out << to_json().dump(2) << "\n";
    }

    static std::string iso_now() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&t, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        return buf;
    }
};

// Replay comparison helper: parse a run record and drop its timestamp fields.
inline nlohmann::json run_record_replay_view(const std::filesystem::path& path) {
    std::ifstream in(path);
    check(in.good(), "cannot open run record: ", path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    j.erase("started");
    j.erase("finished");
    return j;
}

}  // namespace ganaug
