#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridseam/csv.hpp"
#include "gridseam/dynamics.hpp"
#include "gridseam/error.hpp"
#include "gridseam/json_util.hpp"
#include "gridseam/measurements.hpp"
#include "gridseam/netmodel.hpp"
#include "gridseam/powerflow.hpp"
#include "gridseam/ras.hpp"

namespace gridseam {

// ---------------------------------------------------------------------------
// Export of a run in measurement format

/// Long-format `time_s,signal,value`, one signal per channel, channel order.
inline std::string result_measurements_csv(const SimulationResult& r, const std::vector<std::string>& channels = {}) {
    std::string out = "time_s,signal,value\n";
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        if (!channels.empty() && std::find(channels.begin(), channels.end(), r.names[i]) == channels.end()) continue;
        for (std::size_t k = 0; k < r.time.size(); ++k)
            out += csv::num(r.time[k]) + "," + r.names[i] + "," + csv::num(r.data[i][k]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alignment

/// One measured signal resampled onto the simulation grid.
struct AlignedPair {
    std::string signal;
    std::string channel;
    std::vector<double> t;  // simulation time
    std::vector<double> measured;
    std::vector<double> simulated;
};

/// Linear interpolation inside the sample range; nullopt outside it.
inline std::optional<double> interpolate(const Series& s, double t) {
    if (s.t.empty() || t < s.t.front() || t > s.t.back()) return std::nullopt;
    auto hi = std::lower_bound(s.t.begin(), s.t.end(), t);
    const auto k = static_cast<std::size_t>(hi - s.t.begin());
    if (s.t[k] == t || k == 0) return s.v[k];
    const double w = (t - s.t[k - 1]) / (s.t[k] - s.t[k - 1]);
    return s.v[k - 1] + w * (s.v[k] - s.v[k - 1]);
}

inline constexpr double kMinOverlap = 1.0;  // s

/// Measurement time t_m lands on simulation time t_m - t0_offset. Every
/// mapped signal must name a simulated channel; unmapped signals are skipped.
/// With `channels` given, only those are aligned and each must exist on
/// both sides.
inline std::vector<AlignedPair> align(const MeasurementSet& ms, const SimulationResult& r, double t0_offset = 0.0,
                                      const std::vector<std::string>& channels = {}) {
    std::vector<std::string> missing;
    std::vector<std::pair<std::string, std::string>> todo;  // signal, channel
    for (const auto& [signal, series] : ms.signals) {
        auto ch = ms.channel_of(signal);
        if (!ch) continue;
        if (!channels.empty() && std::find(channels.begin(), channels.end(), *ch) == channels.end()) continue;
        if (!r.has(*ch)) {
            missing.push_back("simulation lacks " + *ch + " (signal " + signal + ")");
            continue;
        }
        todo.emplace_back(signal, *ch);
    }
    for (const auto& ch : channels) {
        const bool measured = std::any_of(todo.begin(), todo.end(), [&](const auto& p) { return p.second == ch; });
        const bool listed = std::any_of(missing.begin(), missing.end(), [&](const std::string& m) {
            return m.find("lacks " + ch + " ") != std::string::npos;
        });
        if (!measured && !listed) missing.push_back("measurements lack " + ch);
    }
    if (!missing.empty()) {
        std::string msg = "align: channel absent on one side:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw DataError(msg);
    }
    std::vector<AlignedPair> out;
    for (const auto& [signal, ch] : todo) {
        const Series& s = ms.signals.at(signal);
        const double lo = std::max(r.time.empty() ? 0.0 : r.time.front(), s.t.front() - t0_offset);
        const double hi = std::min(r.time.empty() ? 0.0 : r.time.back(), s.t.back() - t0_offset);
        if (!(hi - lo >= kMinOverlap - 1e-9))
            throw DataError("align: signal " + signal + " overlaps the simulation by " + csv::num(std::max(0.0, hi - lo)) +
                            " s, at least " + csv::num(kMinOverlap) + " s required");
        AlignedPair p{signal, ch, {}, {}, {}};
        const auto& sim = r.channel(ch);
        for (std::size_t k = 0; k < r.time.size(); ++k) {
            const double t = r.time[k];
            if (t < lo - 1e-9 || t > hi + 1e-9) continue;
            // snap grid points within rounding of the ends onto the sample range
            const double tm = std::clamp(t + t0_offset, s.t.front(), s.t.back());
            p.t.push_back(t);
            p.measured.push_back(*interpolate(s, tm));
            p.simulated.push_back(sim[k]);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct Window {
    double t0 = 0.0;
    double t1 = 0.0;
    bool operator==(const Window&) const = default;
};

struct Windows {
    Window during;
    Window post;
};

/// During: [t_event, t_event + 20 s]; post: the last 10 s; both clipped to
/// the simulation span.
inline Windows default_windows(double t_event, double duration) {
    Windows w;
    w.during = {t_event, std::min(t_event + 20.0, duration)};
    w.post = {std::max(0.0, duration - 10.0), duration};
    return w;
}

struct Sample {
    double value = 0.0;
    double t = 0.0;
};

/// Signed errors are simulated minus measured.
struct ChannelMetrics {
    std::string signal;
    std::string channel;
    Sample meas_max, sim_max, meas_min, sim_min;
    double max_error = 0.0, max_time_error = 0.0;
    double min_error = 0.0, min_time_error = 0.0;
    bool principal_is_min = true;  // the extremum with the larger excursion
    double extremum_error = 0.0;
    double extremum_time_error = 0.0;
    double steady_offset = 0.0;  // mean(sim - meas) over the post window
    double rmse = 0.0;  // over the during window
    Window during, post;
};

inline std::string channel_class(const std::string& channel) {
    auto c = channel.find(':');
    return c == std::string::npos ? std::string() : channel.substr(0, c);
}

namespace detail {

inline void check_window(const AlignedPair& p, const Window& w, const char* name) {
    if (p.t.empty() || !(w.t1 > w.t0) || w.t0 < p.t.front() - 1e-9 || w.t1 > p.t.back() + 1e-9)
        throw DataError(std::string("metrics: ") + name + " window [" + csv::num(w.t0) + ", " + csv::num(w.t1) +
                        "] lies outside the overlap of " + p.signal + " [" +
                        csv::num(p.t.empty() ? 0.0 : p.t.front()) + ", " + csv::num(p.t.empty() ? 0.0 : p.t.back()) + "]");
}

inline bool in(const Window& w, double t) { return t >= w.t0 - 1e-9 && t <= w.t1 + 1e-9; }

}  // namespace detail

inline ChannelMetrics channel_metrics(const AlignedPair& p, const Windows& w) {
    detail::check_window(p, w.during, "during");
    detail::check_window(p, w.post, "post");
    ChannelMetrics m;
    m.signal = p.signal;
    m.channel = p.channel;
    m.during = w.during;
    m.post = w.post;
    bool first = true;
    double sq = 0.0, ref_m = 0.0, ref_s = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < p.t.size(); ++k) {
        if (!detail::in(w.during, p.t[k])) continue;
        const double a = p.measured[k], b = p.simulated[k], t = p.t[k];
        if (first) {
            m.meas_max = m.meas_min = {a, t};
            m.sim_max = m.sim_min = {b, t};
            ref_m = a;
            ref_s = b;
            first = false;
        }
        if (a > m.meas_max.value) m.meas_max = {a, t};
        if (a < m.meas_min.value) m.meas_min = {a, t};
        if (b > m.sim_max.value) m.sim_max = {b, t};
        if (b < m.sim_min.value) m.sim_min = {b, t};
        sq += (b - a) * (b - a);
        ++n;
    }
    m.rmse = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
    m.max_error = m.sim_max.value - m.meas_max.value;
    m.max_time_error = m.sim_max.t - m.meas_max.t;
    m.min_error = m.sim_min.value - m.meas_min.value;
    m.min_time_error = m.sim_min.t - m.meas_min.t;
    // symmetric in the two traces so that swapping them only flips signs
    const double up = (m.meas_max.value - ref_m) + (m.sim_max.value - ref_s);
    const double down = (ref_m - m.meas_min.value) + (ref_s - m.sim_min.value);
    m.principal_is_min = down >= up;
    m.extremum_error = m.principal_is_min ? m.min_error : m.max_error;
    m.extremum_time_error = m.principal_is_min ? m.min_time_error : m.max_time_error;
    double off = 0.0;
    std::size_t np = 0;
    for (std::size_t k = 0; k < p.t.size(); ++k)
        if (detail::in(w.post, p.t[k])) {
            off += p.simulated[k] - p.measured[k];
            ++np;
        }
    m.steady_offset = np ? off / static_cast<double>(np) : 0.0;
    return m;
}

inline std::vector<ChannelMetrics> compute_metrics(const std::vector<AlignedPair>& pairs, const Windows& w) {
    std::vector<ChannelMetrics> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(channel_metrics(p, w));
    return out;
}

// ---------------------------------------------------------------------------
// Grading

enum class Grade { A, B, C, D };

inline std::string to_string(Grade g) { return std::string(1, static_cast<char>('A' + static_cast<int>(g))); }

struct GradeLevel {
    double value = 0.0;  // |extremum error| in channel units
    double time = 0.0;  // |extremum time error|, s
    bool operator==(const GradeLevel&) const = default;
};

/// Per channel class (F, V, P, ...): the A, B and C limits; anything worse is D.
using GradeThresholds = std::map<std::string, std::array<GradeLevel, 3>>;

inline GradeThresholds default_grade_thresholds() {
    return {
        {"F", {{{0.05, 1.0}, {0.1, 2.0}, {0.2, 5.0}}}},
        {"V", {{{0.01, 1.0}, {0.03, 2.0}, {0.05, 5.0}}}},
        {"P", {{{10.0, 1.0}, {25.0, 2.0}, {50.0, 5.0}}}},
        {"Q", {{{10.0, 1.0}, {25.0, 2.0}, {50.0, 5.0}}}},
        {"PE", {{{10.0, 1.0}, {25.0, 2.0}, {50.0, 5.0}}}},
        {"PM", {{{10.0, 1.0}, {25.0, 2.0}, {50.0, 5.0}}}},
        {"ANG", {{{0.02, 1.0}, {0.05, 2.0}, {0.1, 5.0}}}},
        {"SPD", {{{0.001, 1.0}, {0.002, 2.0}, {0.004, 5.0}}}},
    };
}

/// `{"F": [[0.05, 1], [0.1, 2], [0.2, 5]], ...}` merged over the defaults.
inline GradeThresholds parse_grade_thresholds(const std::string& text, const std::string& where = "thresholds.json") {
    auto doc = jsonu::parse(text, where);
    if (!doc.is_object()) throw DataError(where + ": expected an object of channel class -> levels");
    auto out = default_grade_thresholds();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.key() == "notes") continue;
        const auto& v = it.value();
        const std::string w = where + ": " + it.key();
        if (!v.is_array() || v.size() != 3) throw DataError(w + ": expected three [value, time] levels");
        std::array<GradeLevel, 3> levels;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number() || !v[i][1].is_number())
                throw DataError(w + ": level " + std::to_string(i) + " must be [value, time]");
            levels[i] = {v[i][0].get<double>(), v[i][1].get<double>()};
            if (!(levels[i].value >= 0.0) || !(levels[i].time >= 0.0)) throw DataError(w + ": limits must be >= 0");
            if (i > 0 && (levels[i].value < levels[i - 1].value || levels[i].time < levels[i - 1].time))
                throw DataError(w + ": levels must loosen from A to C");
        }
        out[it.key()] = levels;
    }
    return out;
}

/// Limits are inclusive, with a relative allowance for decimal round-off
/// (59.70 - 59.65 is a hair above 0.05 in binary).
inline Grade grade_of(double value_error, double time_error, const std::array<GradeLevel, 3>& levels) {
    auto within = [](double e, double limit) { return std::abs(e) <= limit * (1.0 + 1e-9) + 1e-12; };
    for (int g = 0; g < 3; ++g)
        if (within(value_error, levels[g].value) && within(time_error, levels[g].time)) return static_cast<Grade>(g);
    return Grade::D;
}

/// Channels of a class without thresholds stay ungraded.
inline std::optional<Grade> grade(const ChannelMetrics& m, const GradeThresholds& thr) {
    auto it = thr.find(channel_class(m.channel));
    if (it == thr.end()) return std::nullopt;
    return grade_of(m.extremum_error, m.extremum_time_error, it->second);
}

// ---------------------------------------------------------------------------
// Stage comparison from aligned traces

inline StageComparison compare_stage_aligned(const std::vector<AlignedPair>& pairs, Stage stage, const Window& w) {
    StageComparison out;
    out.stage = stage;
    out.t0 = w.t0;
    out.t1 = w.t1;
    for (const auto& p : pairs) {
        double sm = 0.0, ss = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < p.t.size(); ++k)
            if (detail::in(w, p.t[k])) {
                sm += p.measured[k];
                ss += p.simulated[k];
                ++n;
            }
        if (n == 0) {
            out.no_data.push_back(p.signal);
            continue;
        }
        StageRow row{p.signal, p.channel, sm / n, ss / n, 0.0, 0.0};
        row.abs_error = std::abs(row.simulated - row.measured);
        row.rel_error = row.abs_error / std::max(std::abs(row.measured), 1e-12);
        out.rows.push_back(row);
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const StageRow& a, const StageRow& b) {
        if (a.rel_error != b.rel_error) return a.rel_error > b.rel_error;
        return a.signal < b.signal;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Diagnosis

struct DiagnoseThresholds {
    double pre_v_pu = 0.02;  // (a) voltage error
    double pre_rel = 0.05;  // (a) flow error, relative ...
    double pre_abs_mw = 5.0;  // ... and absolute
    double f_offset_hz = 0.02;  // (b)
    double nadir_time_s = 1.0;  // (b) aligned below, (c) mismatch above
    double nadir_depth_hz = 0.05;  // (c) matching depth
    double boundary_v_pu = 0.02;  // (d)
};

struct DiagnoseInput {
    std::vector<StageComparison> stages;
    std::vector<ChannelMetrics> metrics;
    std::vector<std::string> boundary_buses;
    std::vector<std::string> measured_ras;  // RAS ids seen operating in the field
    std::vector<std::string> simulated_ras;  // RAS ids that acted in the run
};

struct Hint {
    char rule = 'a';
    std::string message;
    std::vector<std::string> signals;
};

inline std::string join(const std::vector<std::string>& v, const std::string& sep = ", ") {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
    return out;
}

/// Fixed-order rule table; each rule adds at most one hint.
inline std::vector<Hint> diagnose(const DiagnoseInput& in, const DiagnoseThresholds& th = {}) {
    std::vector<Hint> hints;

    // (a) pre-event operating point
    for (const auto& st : in.stages) {
        if (st.stage != Stage::pre_event) continue;
        std::vector<std::string> worst;
        for (const auto& row : st.rows) {
            const auto cls = channel_class(row.channel);
            const bool bad = cls == "V" ? row.abs_error > th.pre_v_pu
                             : (cls == "P" || cls == "Q") ? row.rel_error > th.pre_rel && row.abs_error > th.pre_abs_mw
                                                          : false;
            if (bad && worst.size() < 3) worst.push_back(row.signal);
        }
        if (!worst.empty())
            hints.push_back({'a', "pre-event dispatch/topology mismatch; worst signals: " + join(worst), worst});
    }

    std::vector<std::string> b_sig, c_sig;
    for (const auto& m : in.metrics) {
        if (channel_class(m.channel) != "F") continue;
        // (b) offset after the event while the nadir timing agrees
        if (std::abs(m.steady_offset) > th.f_offset_hz && std::abs(m.extremum_time_error) <= th.nadir_time_s)
            b_sig.push_back(m.signal);
        // (c) nadir late or early while its depth agrees
        if (std::abs(m.extremum_time_error) > th.nadir_time_s && std::abs(m.extremum_error) <= th.nadir_depth_hz)
            c_sig.push_back(m.signal);
    }
    if (!b_sig.empty())
        hints.push_back({'b',
                         "governor droop / spinning-reserve mismatch; rerun after adjust_governors_for_reserve (" +
                             join(b_sig) + ")",
                         b_sig});
    if (!c_sig.empty()) hints.push_back({'c', "inertia (H) mismatch (" + join(c_sig) + ")", c_sig});

    // (d) voltage error concentrated at the boundary
    const ChannelMetrics* worst_v = nullptr;
    for (const auto& m : in.metrics)
        if (channel_class(m.channel) == "V" && (!worst_v || std::abs(m.extremum_error) > std::abs(worst_v->extremum_error)))
            worst_v = &m;
    if (worst_v && std::abs(worst_v->extremum_error) > th.boundary_v_pu) {
        const std::string bus = worst_v->channel.substr(2);
        if (std::find(in.boundary_buses.begin(), in.boundary_buses.end(), bus) != in.boundary_buses.end())
            hints.push_back({'d', "external equivalent strength mismatch at " + bus + "; compare smtl vs detailed",
                             {worst_v->signal}});
    }

    // (e) protection that operated on one side only
    std::set<std::string> meas(in.measured_ras.begin(), in.measured_ras.end());
    std::set<std::string> sim(in.simulated_ras.begin(), in.simulated_ras.end());
    std::vector<std::string> odd;
    for (const auto& id : meas)
        if (!sim.count(id)) odd.push_back(id + " (measured only)");
    for (const auto& id : sim)
        if (!meas.count(id)) odd.push_back(id + " (simulated only)");
    if (!odd.empty()) hints.push_back({'e', "protection/RAS model mismatch: " + join(odd), odd});
    return hints;
}

// ---------------------------------------------------------------------------
// Report

struct ValidationReport {
    std::string case_id;
    std::string event_id;
    std::string tool_version = kToolVersion;
    std::map<std::string, std::string> settings;  // every option in effect, for reproducibility
    std::vector<StageComparison> stages;
    std::vector<ChannelMetrics> metrics;
    std::vector<std::optional<Grade>> grades;  // parallel to metrics
    std::vector<Hint> hints;
    std::vector<std::string> unmapped;
    std::vector<std::string> warnings;
};

inline std::string channel_file_name(const std::string& channel) {
    std::string s = channel;
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
    return s + ".csv";
}

inline std::string channel_pair_csv(const AlignedPair& p) {
    std::string out = "t_s,measured,simulated\n";
    for (std::size_t k = 0; k < p.t.size(); ++k)
        out += csv::num(p.t[k]) + "," + csv::num(p.measured[k]) + "," + csv::num(p.simulated[k]) + "\n";
    return out;
}

inline std::string report_text(const ValidationReport& r) {
    std::string o;
    o += "Model validation report\n";
    o += "case: " + r.case_id + "\nevent: " + r.event_id + "\ntool: " + r.tool_version + "\n\nsettings:\n";
    for (const auto& [k, v] : r.settings) o += "  " + k + " = " + v + "\n";
    for (const auto& st : r.stages) {
        o += "\n[" + to_string(st.stage) + "] window " + csv::num(st.t0) + " .. " + csv::num(st.t1) + " s\n";
        for (const auto& row : st.rows)
            o += "  " + row.signal + " (" + row.channel + "): measured " + csv::num(row.measured) + ", simulated " +
                 csv::num(row.simulated) + ", abs err " + csv::num(row.abs_error) + ", rel err " + csv::num(row.rel_error) + "\n";
        if (!st.no_data.empty()) o += "  no samples in window: " + join(st.no_data) + "\n";
        if (!st.unmapped.empty()) o += "  not comparable: " + join(st.unmapped) + "\n";
    }
    o += "\nchannels:\n";
    if (r.metrics.empty()) o += "  (none)\n";
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        const auto& m = r.metrics[i];
        o += "  " + m.signal + " -> " + m.channel + "  grade " + (r.grades[i] ? to_string(*r.grades[i]) : "n/a") + "\n";
        o += "    " + std::string(m.principal_is_min ? "min" : "max") + " error " + csv::num(m.extremum_error) +
             ", time error " + csv::num(m.extremum_time_error) + " s\n";
        o += "    measured min " + csv::num(m.meas_min.value) + " @ " + csv::num(m.meas_min.t) + " s, max " +
             csv::num(m.meas_max.value) + " @ " + csv::num(m.meas_max.t) + " s\n";
        o += "    simulated min " + csv::num(m.sim_min.value) + " @ " + csv::num(m.sim_min.t) + " s, max " +
             csv::num(m.sim_max.value) + " @ " + csv::num(m.sim_max.t) + " s\n";
        o += "    steady offset " + csv::num(m.steady_offset) + ", rmse " + csv::num(m.rmse) + "\n";
    }
    o += "\ndiagnostics:\n";
    if (r.hints.empty()) o += "  (none)\n";
    for (const auto& h : r.hints) o += "  (" + std::string(1, h.rule) + ") " + h.message + "\n";
    if (!r.unmapped.empty()) o += "\nunmapped signals: " + join(r.unmapped) + "\n";
    if (!r.warnings.empty()) {
        o += "\nwarnings:\n";
        for (const auto& w : r.warnings) o += "  " + w + "\n";
    }
    return o;
}

inline jsonu::Json report_json(const ValidationReport& r) {
    using jsonu::Json;
    Json j;
    j["case"] = r.case_id;
    j["event"] = r.event_id;
    j["tool"] = r.tool_version;
    j["settings"] = r.settings;
    j["stages"] = Json::array();
    for (const auto& st : r.stages) {
        Json s{{"stage", to_string(st.stage)}, {"t0_s", st.t0}, {"t1_s", st.t1}, {"rows", Json::array()},
               {"no_data", st.no_data}, {"unmapped", st.unmapped}};
        for (const auto& row : st.rows)
            s["rows"].push_back({{"signal", row.signal}, {"channel", row.channel}, {"measured", row.measured},
                                 {"simulated", row.simulated}, {"abs_error", row.abs_error}, {"rel_error", row.rel_error}});
        j["stages"].push_back(s);
    }
    j["channels"] = Json::array();
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
        const auto& m = r.metrics[i];
        auto smp = [](const Sample& s) { return Json{{"value", s.value}, {"t_s", s.t}}; };
        j["channels"].push_back({{"signal", m.signal},
                                 {"channel", m.channel},
                                 {"grade", r.grades[i] ? Json(to_string(*r.grades[i])) : Json(nullptr)},
                                 {"measured_max", smp(m.meas_max)},
                                 {"measured_min", smp(m.meas_min)},
                                 {"simulated_max", smp(m.sim_max)},
                                 {"simulated_min", smp(m.sim_min)},
                                 {"max_error", m.max_error},
                                 {"max_time_error_s", m.max_time_error},
                                 {"min_error", m.min_error},
                                 {"min_time_error_s", m.min_time_error},
                                 {"principal", m.principal_is_min ? "min" : "max"},
                                 {"extremum_error", m.extremum_error},
                                 {"extremum_time_error_s", m.extremum_time_error},
                                 {"steady_offset", m.steady_offset},
                                 {"rmse", m.rmse},
                                 {"during_s", {m.during.t0, m.during.t1}},
                                 {"post_s", {m.post.t0, m.post.t1}},
                                 {"plot_data", "channels/" + channel_file_name(m.channel)}});
    }
    j["diagnostics"] = Json::array();
    for (const auto& h : r.hints)
        j["diagnostics"].push_back({{"rule", std::string(1, h.rule)}, {"message", h.message}, {"signals", h.signals}});
    j["unmapped"] = r.unmapped;
    j["warnings"] = r.warnings;
    return j;
}

/// report.txt, report.json and channels/<channel>.csv under `dir`.
inline void emit_report(const ValidationReport& r, const std::vector<AlignedPair>& pairs, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "channels", ec);
    if (ec) throw DataError("report: cannot create " + dir + ": " + ec.message());
    jsonu::write_text_file((fs::path(dir) / "report.txt").string(), report_text(r));
    jsonu::write_text_file((fs::path(dir) / "report.json").string(), report_json(r).dump(2) + "\n");
    for (const auto& p : pairs)
        jsonu::write_text_file((fs::path(dir) / "channels" / channel_file_name(p.channel)).string(), channel_pair_csv(p));
}

// ---------------------------------------------------------------------------
// End-to-end event validation

struct ValidateEventOptions {
    SimulationOptions sim;
    double t0_offset = 0.0;
    std::optional<double> reserve_target_mw;
    std::optional<Windows> windows;
    GradeThresholds thresholds = default_grade_thresholds();
    DiagnoseThresholds diagnose;
    std::string event_id = "event";
    double f_nom = 60.0;
};

struct ValidateEventOutput {
    ValidationReport report;
    std::vector<AlignedPair> pairs;
    SimulationResult result;
    std::optional<ReserveAdjustment> reserve;
};

/// solve -> reserve adjustment -> simulate -> align -> metrics -> grade ->
/// stage comparison -> diagnose. The case is taken as already merged.
inline ValidateEventOutput validate_event(const NetworkCase& c, const std::vector<MachineDynamics>& dyn,
                                          const EventSequence& events, const std::vector<RasSpec>& ras,
                                          const MeasurementSet& ms, const ValidateEventOptions& opt = {}) {
    ValidateEventOutput out;
    auto& rep = out.report;
    rep.case_id = c.id;
    rep.event_id = opt.event_id;
    rep.unmapped = ms.unmapped;

    const auto sol = solve_powerflow(c);
    if (!sol.converged) throw DataError("validate: power flow for case '" + c.id + "' did not converge");
    std::vector<MachineDynamics> used = dyn;
    if (opt.reserve_target_mw) {
        out.reserve = adjust_governors_for_reserve(dyn, dispatch_of(c, sol), *opt.reserve_target_mw);
        if (out.reserve->shortfall)
            rep.warnings.push_back("reserve target " + csv::num(*opt.reserve_target_mw) + " MW exceeds available headroom " +
                                   csv::num(out.reserve->headroom_before_mw) + " MW; governors left unchanged");
        used = out.reserve->dyn;
    }
    validate_events(events, c, opt.sim.duration);
    const auto state = init_dynamics(c, sol, used, opt.f_nom);
    std::map<std::string, double> dispatch;
    for (const auto& [id, m] : sol.machines) dispatch[id] = m.p_mw;
    std::vector<RasInstance> instances;
    for (const auto& s : ras) instances.push_back(bind_ras(s, c, dispatch));
    out.result = simulate(state, events, std::move(instances), opt.sim);
    for (const auto& w : out.result.warnings) rep.warnings.push_back(w);

    out.pairs = align(ms, out.result, opt.t0_offset);
    const double t_event = events.empty() ? 0.0 : events.front().t;
    Windows w = opt.windows.value_or(default_windows(t_event, opt.sim.duration));
    if (!opt.windows && !out.pairs.empty()) {
        // clip the defaults to the overlap common to every pair
        double lo = -1e300, hi = 1e300;
        for (const auto& p : out.pairs) lo = std::max(lo, p.t.front()), hi = std::min(hi, p.t.back());
        for (Window* x : {&w.during, &w.post}) x->t0 = std::max(x->t0, lo), x->t1 = std::min(x->t1, hi);
    }

    rep.settings = {
        {"dt_s", csv::num(opt.sim.dt)},
        {"duration_s", csv::num(opt.sim.duration)},
        {"integrator", opt.sim.integrator == Integrator::rk4 ? "rk4" : "trapezoidal"},
        {"washout_s", csv::num(opt.sim.washout_t)},
        {"t0_offset_s", csv::num(opt.t0_offset)},
        {"reserve_target_mw", opt.reserve_target_mw ? csv::num(*opt.reserve_target_mw) : "none"},
        {"during_window_s", csv::num(w.during.t0) + ".." + csv::num(w.during.t1)},
        {"post_window_s", csv::num(w.post.t0) + ".." + csv::num(w.post.t1)},
        {"f_nom_hz", csv::num(opt.f_nom)},
    };
    for (const auto& [cls, lv] : opt.thresholds)
        rep.settings["grade_" + cls] = csv::num(lv[0].value) + "/" + csv::num(lv[0].time) + ", " + csv::num(lv[1].value) +
                                       "/" + csv::num(lv[1].time) + ", " + csv::num(lv[2].value) + "/" + csv::num(lv[2].time);

    if (out.pairs.empty()) {
        rep.warnings.push_back("no measured signal maps onto a simulated channel; stage comparison only");
    } else {
        rep.metrics = compute_metrics(out.pairs, w);
        for (const auto& m : rep.metrics) rep.grades.push_back(grade(m, opt.thresholds));
    }

    // stage comparisons: the solved operating point before the event, the traces after
    double first_meas = 1e300;
    for (const auto& [sig, s] : ms.signals)
        if (!s.t.empty()) first_meas = std::min(first_meas, s.t.front() - opt.t0_offset);
    const double pre_t0 = std::max(0.0, first_meas);
    if (t_event - 1e-9 > pre_t0) {
        MeasurementSet shifted = ms;
        for (auto& [sig, s] : shifted.signals)
            for (auto& t : s.t) t -= opt.t0_offset;
        rep.stages.push_back(compare_stage(sol, shifted, Stage::pre_event, pre_t0, t_event - 1e-9, opt.f_nom));
    } else {
        rep.warnings.push_back("no measurements before the event; pre-event stage skipped");
    }
    if (!out.pairs.empty()) {
        rep.stages.push_back(compare_stage_aligned(out.pairs, Stage::during_event, w.during));
        rep.stages.push_back(compare_stage_aligned(out.pairs, Stage::post_event, w.post));
    }

    DiagnoseInput di;
    di.stages = rep.stages;
    di.metrics = rep.metrics;
    if (c.merge) di.boundary_buses = {c.merge->boundary.host_bus, c.merge->boundary.external_bus};
    di.measured_ras = ms.ras_operations;
    for (const auto& e : out.result.ras_log)
        if (std::find(di.simulated_ras.begin(), di.simulated_ras.end(), e.ras_id) == di.simulated_ras.end())
            di.simulated_ras.push_back(e.ras_id);
    rep.hints = diagnose(di, opt.diagnose);
    return out;
}

}  // namespace gridseam
