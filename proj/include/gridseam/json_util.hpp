#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gridseam/error.hpp"

namespace gridseam::jsonu {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Strict field reader: tracks a human-readable path ("case.json: buses[3]")
/// so every schema error names where it happened.
class Reader {
public:
    Reader(const Json& node, std::string where) : node_(node), where_(std::move(where)) {
        if (!node_.is_object()) throw DataError(where_ + ": expected an object");
    }

    const std::string& where() const { return where_; }
    const Json& node() const { return node_; }
    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    /// Rejects keys outside the allowed set.
    void only(std::initializer_list<const char*> allowed) const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            bool ok = false;
            for (const char* a : allowed)
                if (it.key() == a) { ok = true; break; }
            if (!ok) throw DataError(where_ + ": unknown field '" + it.key() + "'");
        }
    }

    const Json& at(const std::string& key) const {
        if (!has(key)) throw DataError(where_ + ": missing required field '" + key + "'");
        return node_.at(key);
    }

    std::string str(const std::string& key) const {
        const Json& v = at(key);
        if (!v.is_string()) throw DataError(where_ + ": field '" + key + "' must be a string");
        return v.get<std::string>();
    }
    std::string str_or(const std::string& key, std::string fallback) const {
        return has(key) ? str(key) : std::move(fallback);
    }

    double num(const std::string& key) const {
        const Json& v = at(key);
        if (!v.is_number()) throw DataError(where_ + ": field '" + key + "' must be a number");
        return v.get<double>();
    }
    double num_or(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
    std::optional<double> opt_num(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return num(key);
    }

    bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Json& v = node_.at(key);
        if (!v.is_boolean()) throw DataError(where_ + ": field '" + key + "' must be true or false");
        return v.get<bool>();
    }

    const Json& array(const std::string& key) const {
        const Json& v = at(key);
        if (!v.is_array()) throw DataError(where_ + ": field '" + key + "' must be an array");
        return v;
    }
    /// Missing array means empty.
    const Json& array_or_empty(const std::string& key) const {
        static const Json empty = Json::array();
        return has(key) ? array(key) : empty;
    }

    Reader child(const std::string& key) const { return Reader(at(key), where_ + "." + key); }

private:
    const Json& node_;
    std::string where_;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json parse(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(source + ": invalid JSON: " + e.what());
    }
}

inline Json parse_file(const std::string& path) { return parse(read_text_file(path), path); }

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": output path not writable");
    out << text;
    if (!out) throw DataError(path + ": write failed");
}

}  // namespace gridseam::jsonu
