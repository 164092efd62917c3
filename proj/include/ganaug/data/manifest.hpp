#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ganaug/core/check.hpp"
#include "ganaug/core/hash.hpp"

namespace ganaug::data {

enum class Origin { real, translated, interpolated, generated };

inline const char* origin_name(Origin o) {
    switch (o) {
        case Origin::real: return "real";
        case Origin::translated: return "translated";
        case Origin::interpolated: return "interpolated";
        case Origin::generated: return "generated";
    }
    return "?";
}

inline Origin origin_from(const std::string& s) {
    if (s == "real") return Origin::real;
    if (s == "translated") return Origin::translated;
    if (s == "interpolated") return Origin::interpolated;
    if (s == "generated") return Origin::generated;
    throw ParseError("unknown origin: " + s);
}

// One labeled, modality-tagged, video-grouped image. The record id is its
// path (unique within a manifest); augmented records name their sources by id.
struct ImageRecord {
    std::string path;
    std::string label;
    std::string modality;
    std::string video_id;
    Origin origin = Origin::real;
    std::vector<std::string> source_ids;
    std::map<std::string, std::string> extra;
};

struct Vocabulary {
    std::vector<std::string> labels;
    std::vector<std::string> modalities;

    bool has_label(const std::string& l) const { return std::find(labels.begin(), labels.end(), l) != labels.end(); }
    bool has_modality(const std::string& m) const {
        return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
    }
    bool operator==(const Vocabulary& o) const = default;
};

struct Provenance {
    std::string command;
    uint64_t seed = 0;
};

// Ordered record list + vocabulary + provenance. Immutable by convention
// after construction; all pipeline operations return new manifests.
//
// File format (UTF-8): header lines `#label:` / `#modality:` declaring the
// vocabularies (plus optional `#provenance:` / `#seed:`), then one record per
// line: path<TAB>label<TAB>modality<TAB>video_id<TAB>origin<TAB>source_ids
// (comma separated, may be empty). A 7th `k=v;k=v` column carries the
// optional extra map.
class Manifest {
  public:
    Vocabulary vocabulary;
    Provenance provenance;
    std::vector<ImageRecord> records;
    std::filesystem::path root;  // directory paths resolve against; not serialized

    const ImageRecord* find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) {
            if (index_.size() != records.size()) rebuild_index();
            it = index_.find(id);
            if (it == index_.end()) return nullptr;
        }
        return &records[it->second];
    }

    std::filesystem::path resolve(const ImageRecord& rec) const {
        std::filesystem::path p(rec.path);
        return p.is_absolute() ? p : root / p;
    }

    std::set<std::string> video_ids() const {
        std::set<std::string> v;
        for (const auto& r : records) v.insert(r.video_id);
        return v;
    }

    void validate() const {
        std::set<std::string> seen;
        for (const auto& r : records) {
            if (!seen.insert(r.path).second) throw InvariantError("duplicate path in manifest: " + r.path);
            if (!vocabulary.has_label(r.label))
                throw InvariantError(format_msg("record ", r.path, ": label `", r.label, "` not in vocabulary"));
            if (!vocabulary.has_modality(r.modality))
                throw InvariantError(format_msg("record ", r.path, ": modality `", r.modality, "` not in vocabulary"));
            if (r.origin == Origin::real && !r.source_ids.empty())
                throw InvariantError(format_msg("record ", r.path, ": origin=real but source_ids non-empty"));
            if ((r.origin == Origin::translated || r.origin == Origin::interpolated) && r.source_ids.empty())
                throw InvariantError(format_msg("record ", r.path, ": origin=", origin_name(r.origin),
                                                " requires non-empty source_ids"));
            for (const auto& sid : r.source_ids) {
                // label inheritance is checkable only for sources present here;
                // the augmentation pipeline asserts it at creation time
                const ImageRecord* src = find(sid);
                if (src != nullptr && src->label != r.label)
                    throw InvariantError(format_msg("record ", r.path, ": label `", r.label,
                                                    "` differs from source ", sid, " label `", src->label, "`"));
            }
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        check(out.good(), "cannot write manifest: ", path.string());
        out << "#label:" << join(vocabulary.labels) << "\n";
        out << "#modality:" << join(vocabulary.modalities) << "\n";
        if (!provenance.command.empty()) out << "#provenance: " << provenance.command << "\n";
        out << "#seed: " << provenance.seed << "\n";
        for (const auto& r : records) {
            out << r.path << "\t" << r.label << "\t" << r.modality << "\t" << r.video_id << "\t"
                << origin_name(r.origin) << "\t";
            for (size_t i = 0; i < r.source_ids.size(); ++i) out << (i ? "," : "") << r.source_ids[i];
            if (!r.extra.empty()) {
                out << "\t";
                bool first = true;
                for (const auto& [k, v] : r.extra) {
                    out << (first ? "" : ";") << k << "=" << v;
                    first = false;
                }
            }
            out << "\n";
        }
        check(out.good(), "manifest write failed: ", path.string());
    }

    static Manifest load(const std::filesystem::path& path) {
        std::ifstream in(path);
        check(in.good(), "cannot open manifest: ", path.string());
        Manifest m;
        m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line[0] == '#') {
                parse_header(m, line, path.string(), lineno);
                continue;
            }
            std::vector<std::string> cols;
            std::string col;
            std::istringstream ls(line);
            while (std::getline(ls, col, '\t')) cols.push_back(col);
            if (cols.size() < 5 || cols.size() > 7)
                throw ParseError(format_msg(path.string(), ":", lineno, ": expected 5-7 tab-separated fields, got ",
                                            cols.size()));
            ImageRecord r;
            r.path = cols[0];
            r.label = cols[1];
            r.modality = cols[2];
            r.video_id = cols[3];
            try {
                r.origin = origin_from(cols[4]);
            } catch (const ParseError& e) {
                throw ParseError(format_msg(path.string(), ":", lineno, ": ", e.what()));
            }
            if (cols.size() >= 6 && !cols[5].empty()) {
                std::istringstream ss(cols[5]);
                std::string sid;
                while (std::getline(ss, sid, ',')) r.source_ids.push_back(sid);
            }
            if (cols.size() == 7 && !cols[6].empty()) {
                std::istringstream es(cols[6]);
                std::string kv;
                while (std::getline(es, kv, ';')) {
                    const auto eq = kv.find('=');
                    if (eq == std::string::npos)
                        throw ParseError(format_msg(path.string(), ":", lineno, ": malformed extra field: ", kv));
                    r.extra[kv.substr(0, eq)] = kv.substr(eq + 1);
                }
            }
            m.records.push_back(std::move(r));
        }
        m.validate();
        m.rebuild_index();
        return m;
    }

    uint64_t content_hash() const {
        std::ostringstream os;
        os << join(vocabulary.labels) << "|" << join(vocabulary.modalities) << "\n";
        for (const auto& r : records) {
            os << r.path << "\t" << r.label << "\t" << r.modality << "\t" << r.video_id << "\t"
               << origin_name(r.origin);
            for (const auto& s : r.source_ids) os << "," << s;
            os << "\n";
        }
        return fnv1a64(os.str());
    }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += " " + x;
        return s;
    }

    static void parse_header(Manifest& m, const std::string& line, const std::string& origin_name, int lineno) {
        auto parse_words = [](const std::string& rest) {
            std::vector<std::string> words;
            std::istringstream ws(rest);
            std::string word;
            while (ws >> word) words.push_back(word);
            return words;
        };
        if (line.rfind("#label:", 0) == 0)
            m.vocabulary.labels = parse_words(line.substr(7));
        else if (line.rfind("#modality:", 0) == 0)
            m.vocabulary.modalities = parse_words(line.substr(10));
        else if (line.rfind("#provenance:", 0) == 0) {
            std::string cmd = line.substr(12);
            const auto b = cmd.find_first_not_of(' ');
            m.provenance.command = (b == std::string::npos) ? "" : cmd.substr(b);
        } else if (line.rfind("#seed:", 0) == 0) {
            try {
                m.provenance.seed = std::stoull(line.substr(6));
            } catch (...) {
                throw ParseError(format_msg(origin_name, ":", lineno, ": malformed #seed header"));
            }
        }
        // other comment lines are permitted and ignored
    }

    void rebuild_index() const {
        index_.clear();
        for (size_t i = 0; i < records.size(); ++i) index_[records[i].path] = i;
    }

    mutable std::unordered_map<std::string, size_t> index_;
};

// Subset preserving record order; vocabulary and root unchanged.
inline Manifest filter_manifest(const Manifest& m, const std::function<bool(const ImageRecord&)>& keep) {
    Manifest out;
    out.vocabulary = m.vocabulary;
    out.provenance = m.provenance;
    out.root = m.root;
    for (const auto& r : m.records)
        if (keep(r)) out.records.push_back(r);
    return out;
}

inline Manifest filter_by_modality(const Manifest& m, const std::string& modality) {
    return filter_manifest(m, [&](const ImageRecord& r) { return r.modality == modality; });
}

inline Manifest filter_by_label(const Manifest& m, const std::string& label) {
    return filter_manifest(m, [&](const ImageRecord& r) { return r.label == label; });
}

}  // namespace ganaug::data
