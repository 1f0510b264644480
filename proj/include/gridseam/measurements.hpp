#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gridseam/csv.hpp"
#include "gridseam/error.hpp"
#include "gridseam/json_util.hpp"

namespace gridseam {

struct Series {
    std::vector<double> t;
    std::vector<double> v;
    bool operator==(const Series&) const = default;
};

/// Field measurements keyed by signal id, plus the table that maps each
/// signal onto a model channel name (V:<bus>, F:<bus>, P:<from>-<to>:<ckt>, ...).
struct MeasurementSet {
    std::map<std::string, Series> signals;
    std::string source = "PMU";
    std::map<std::string, std::string> units;
    std::map<std::string, std::string> mapping;
    std::vector<std::string> unmapped;  // present in data, absent from mapping
    std::vector<std::string> ras_operations;  // RAS ids observed to operate in the field

    std::optional<std::string> channel_of(const std::string& signal) const {
        auto it = mapping.find(signal);
        if (it == mapping.end()) return std::nullopt;
        return it->second;
    }
};

namespace detail {

struct MappingDoc {
    std::string source = "PMU";
    std::map<std::string, std::string> mapping;
    std::map<std::string, std::string> units;
    std::vector<std::string> ras_operations;
};

inline MappingDoc parse_mapping(const std::string& text, const std::string& where) {
    auto doc = jsonu::parse(text, where);
    jsonu::Reader r(doc, where);
    r.only({"source", "signals", "ras_operations"});
    MappingDoc out;
    out.source = r.str_or("source", "PMU");
    if (out.source != "PMU" && out.source != "SCADA" && out.source != "SIM")
        throw DataError(where + ": source must be PMU, SCADA or SIM");
    const auto& sig = r.at("signals");
    if (!sig.is_object()) throw DataError(where + ": 'signals' must be an object of signal -> channel");
    for (auto it = sig.begin(); it != sig.end(); ++it) {
        if (it.value().is_string()) {
            out.mapping[it.key()] = it.value().get<std::string>();
        } else {
            jsonu::Reader e(it.value(), where + ": signals." + it.key());
            e.only({"channel", "unit"});
            out.mapping[it.key()] = e.str("channel");
            if (e.has("unit")) out.units[it.key()] = e.str("unit");
        }
    }
    for (const auto& op : r.array_or_empty("ras_operations")) {
        if (!op.is_string()) throw DataError(where + ": ras_operations entries must be strings");
        out.ras_operations.push_back(op.get<std::string>());
    }
    return out;
}

}  // namespace detail

/// Reads the long-format measurement CSV (`time_s,signal,value`). Without a
/// mapping document every signal maps to the channel of the same name.
/// Rows may come in any order; each signal is sorted by time and a repeated
/// timestamp is an error.
inline MeasurementSet import_measurements(const std::string& csv_text,
                                          const std::optional<std::string>& mapping_text = std::nullopt,
                                          const std::string& csv_name = "measurements.csv",
                                          const std::string& mapping_name = "mapping.json") {
    MeasurementSet ms;
    std::map<std::string, std::vector<std::size_t>> rows;  // source line of each sample
    bool header_seen = false;
    csv::for_each_line(csv_text, [&](std::size_t line_no, std::string_view line) {
        auto where = [&] { return csv_name + ":" + std::to_string(line_no); };
        if (!header_seen) {
            if (line != "time_s,signal,value")
                throw DataError(where() + ": header must be 'time_s,signal,value'");
            header_seen = true;
            return;
        }
        if (line.empty()) return;
        auto cols = csv::split(line);
        if (cols.size() != 3) throw DataError(where() + ": malformed row, expected 3 columns");
        auto t = csv::parse_double(cols[0]);
        auto v = csv::parse_double(cols[2]);
        if (!t || !v || cols[1].empty()) throw DataError(where() + ": malformed row");
        auto& s = ms.signals[std::string(cols[1])];
        s.t.push_back(*t);
        s.v.push_back(*v);
        rows[std::string(cols[1])].push_back(line_no);
    });
    if (!header_seen) throw DataError(csv_name + ": empty file, header 'time_s,signal,value' required");
    for (auto& [sig, s] : ms.signals) {
        const auto& line = rows[sig];
        std::vector<std::size_t> order(s.t.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.t[a] < s.t[b]; });
        Series sorted;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0 && s.t[order[i]] == s.t[order[i - 1]])
                throw DataError(csv_name + ":" + std::to_string(line[order[i]]) + ": duplicate timestamp " +
                                csv::num(s.t[order[i]]) + " for signal " + sig + " (also on line " +
                                std::to_string(line[order[i - 1]]) + ")");
            sorted.t.push_back(s.t[order[i]]);
            sorted.v.push_back(s.v[order[i]]);
        }
        s = std::move(sorted);
    }

    if (mapping_text) {
        auto doc = detail::parse_mapping(*mapping_text, mapping_name);
        ms.source = doc.source;
        ms.units = std::move(doc.units);
        ms.ras_operations = std::move(doc.ras_operations);
        for (const auto& [sig, chan] : doc.mapping)
            if (ms.signals.count(sig)) ms.mapping[sig] = chan;
        for (const auto& [sig, series] : ms.signals)
            if (!doc.mapping.count(sig)) ms.unmapped.push_back(sig);
    } else {
        for (const auto& [sig, series] : ms.signals) ms.mapping[sig] = sig;
    }
    return ms;
}

inline MeasurementSet import_measurement_files(const std::string& csv_path,
                                               const std::optional<std::string>& mapping_path) {
    std::optional<std::string> mapping_text;
    if (mapping_path) mapping_text = jsonu::read_text_file(*mapping_path);
    return import_measurements(jsonu::read_text_file(csv_path), mapping_text, csv_path,
                               mapping_path.value_or("mapping"));
}

}  // namespace gridseam
