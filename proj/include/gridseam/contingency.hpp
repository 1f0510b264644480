#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gridseam/csv.hpp"
#include "gridseam/dynamics.hpp"
#include "gridseam/error.hpp"
#include "gridseam/json_util.hpp"
#include "gridseam/netmodel.hpp"
#include "gridseam/powerflow.hpp"
#include "gridseam/ras.hpp"

namespace gridseam {

struct ContingencyOverrides {
    std::optional<double> duration;
    std::vector<std::string> ras_enable;
    std::vector<std::string> ras_disable;
    bool operator==(const ContingencyOverrides&) const = default;
};

struct ContingencyDef {
    std::string id;
    std::string label;  // grouping tag, e.g. the area
    EventSequence events;
    ContingencyOverrides overrides;
    bool operator==(const ContingencyDef&) const = default;
};

/// Element names are not checked here; they resolve against a case per run.
inline std::vector<ContingencyDef> parse_contingencies(const std::string& text,
                                                       const std::string& where = "contingencies.json") {
    auto doc = jsonu::parse(text, where);
    jsonu::Reader top(doc, where);
    top.only({"contingencies", "notes"});
    std::vector<ContingencyDef> out;
    std::set<std::string> ids;
    const auto& list = top.array("contingencies");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string w = where + ": contingencies[" + std::to_string(i) + "]";
        jsonu::Reader r(list[i], w);
        r.only({"id", "label", "events", "overrides", "notes"});
        ContingencyDef d;
        d.id = r.str("id");
        d.label = r.str_or("label", "");
        if (!ids.insert(d.id).second) throw DataError(w + ": duplicate contingency id '" + d.id + "'");
        d.events = parse_events(r.at("events"), w + ".events");
        if (d.events.empty()) throw DataError(w + ": contingency '" + d.id + "' has no events");
        if (r.has("overrides")) {
            jsonu::Reader o = r.child("overrides");
            o.only({"duration_s", "ras_enable", "ras_disable"});
            if (o.has("duration_s")) {
                d.overrides.duration = o.num("duration_s");
                if (!(*d.overrides.duration > 0.0)) throw DataError(o.where() + ": duration_s must be > 0");
            }
            for (const char* key : {"ras_enable", "ras_disable"})
                for (const auto& s : o.array_or_empty(key)) {
                    if (!s.is_string()) throw DataError(o.where() + "." + key + ": entries must be RAS ids");
                    (std::string(key) == "ras_enable" ? d.overrides.ras_enable : d.overrides.ras_disable)
                        .push_back(s.get<std::string>());
                }
        }
        out.push_back(std::move(d));
    }
    return out;
}

inline std::vector<ContingencyDef> load_contingency_file(const std::string& path) {
    return parse_contingencies(jsonu::read_text_file(path), path);
}

/// Definition count per label, in first-seen order.
inline std::vector<std::pair<std::string, int>> group_by_label(const std::vector<ContingencyDef>& defs) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& d : defs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == d.label; });
        if (it == out.end())
            out.emplace_back(d.label, 1);
        else
            ++it->second;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summaries

enum class RunStatus { stable, unstable, unresolved };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::stable: return "stable";
        case RunStatus::unstable: return "unstable";
        case RunStatus::unresolved: return "unresolved";
    }
    return "stable";
}

struct Extreme {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string where;
    double t = 0.0;
    bool operator==(const Extreme&) const = default;
};

struct BranchLoading {
    std::string branch;
    double rating_mva = 0.0;
    double peak = 0.0;  // fraction of rating, from-end |S|
    double t = 0.0;
    bool operator==(const BranchLoading&) const = default;
};

struct RunSummary {
    std::string id;
    std::string label;
    RunStatus status = RunStatus::stable;
    std::string message;
    double duration = 0.0;
    Extreme f_min, f_max, v_min;
    std::vector<RasLogEntry> ras_actions;
    std::vector<BranchLoading> loading;  // rated branches, case order
    std::vector<std::string> dead_buses;
    std::vector<std::string> warnings;
    bool operator==(const RunSummary&) const = default;
};

/// Extrema of the frequency and voltage channels (buses that lost every
/// source are left out) and peak from-end loading of every rated branch.
inline RunSummary summarize(const SimulationResult& r, const NetworkCase& c) {
    RunSummary s;
    s.duration = r.duration;
    s.status = r.stable ? RunStatus::stable : RunStatus::unstable;
    if (!r.stable) s.message = "loss of synchronism at t=" + csv::fixed(r.instability_time.value_or(0.0), 4) + " s";
    s.ras_actions = r.ras_log;
    s.dead_buses = r.dead_buses;
    s.warnings = r.warnings;
    const std::set<std::string> dead(r.dead_buses.begin(), r.dead_buses.end());
    auto scan = [&](const std::string& prefix, Extreme& ex, bool want_min) {
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            const auto& name = r.names[i];
            if (name.rfind(prefix, 0) != 0) continue;
            const std::string bus = name.substr(prefix.size());
            if (dead.count(bus)) continue;
            const auto& d = r.data[i];
            for (std::size_t k = 0; k < d.size(); ++k) {
                const bool better = std::isnan(ex.value) || (want_min ? d[k] < ex.value : d[k] > ex.value);
                if (better) ex = {d[k], bus, r.time[k]};
            }
        }
    };
    scan("F:", s.f_min, true);
    scan("F:", s.f_max, false);
    scan("V:", s.v_min, true);
    for (const auto& ref : series_elements(c)) {
        const Branch& b = *ref.element;
        if (!(b.rating > 0.0)) continue;
        const auto p = flow_channel('P', b), q = flow_channel('Q', b);
        if (!r.has(p)) continue;
        const auto& pd = r.channel(p);
        const auto& qd = r.channel(q);
        BranchLoading bl{b.id, b.rating, 0.0, 0.0};
        for (std::size_t k = 0; k < pd.size(); ++k) {
            const double l = std::hypot(pd[k], qd[k]) / b.rating;
            if (l > bl.peak) bl = {b.id, b.rating, l, r.time[k]};
        }
        s.loading.push_back(bl);
    }
    return s;
}

inline std::string csv_text_field(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

inline std::string ras_actions_field(const RunSummary& s) {
    std::string out;
    for (const auto& a : s.ras_actions) {
        if (!out.empty()) out += "; ";
        out += a.ras_id + "@" + csv::num(a.t) + " " + a.action;
    }
    return csv_text_field(out);
}

inline std::string summary_header() {
    return "contingency,label,status,f_min_hz,f_min_bus,f_min_t_s,f_max_hz,f_max_bus,f_max_t_s,v_min_pu,v_min_bus,"
           "v_min_t_s,max_loading,max_loading_branch,ras_actions,message\n";
}

inline std::string summary_row(const RunSummary& s) {
    auto ex = [](const Extreme& e) {
        if (std::isnan(e.value)) return std::string(",,");
        return csv::num(e.value) + "," + e.where + "," + csv::num(e.t);
    };
    const BranchLoading* worst = nullptr;
    for (const auto& l : s.loading)
        if (!worst || l.peak > worst->peak) worst = &l;
    return s.id + "," + csv_text_field(s.label) + "," + to_string(s.status) + "," + ex(s.f_min) + "," + ex(s.f_max) +
           "," + ex(s.v_min) + "," + (worst ? csv::num(worst->peak) + "," + worst->branch : std::string(",")) + "," +
           ras_actions_field(s) + "," + csv_text_field(s.message) + "\n";
}

inline std::string summary_csv(const std::vector<RunSummary>& runs) {
    std::string out = summary_header();
    for (const auto& s : runs) out += summary_row(s);
    return out;
}

inline std::string loading_csv(const std::vector<RunSummary>& runs) {
    std::string out = "contingency,branch,rating_mva,peak_loading,peak_t_s\n";
    for (const auto& s : runs)
        for (const auto& l : s.loading)
            out += s.id + "," + l.branch + "," + csv::num(l.rating_mva) + "," + csv::num(l.peak) + "," + csv::num(l.t) + "\n";
    return out;
}

inline std::string ras_log_csv(const std::vector<RasLogEntry>& log) {
    std::string out = "t_s,t_detect_s,ras,action,reason\n";
    for (const auto& e : log)
        out += csv::num(e.t) + "," + csv::num(e.t_detect) + "," + e.ras_id + "," + csv_text_field(e.action) + "," +
               csv_text_field(e.reason) + "\n";
    return out;
}

inline std::string event_log_csv(const SimulationResult& r) {
    std::string out = "t_s,origin,action\n";
    for (const auto& e : r.event_log) out += csv::num(e.t) + "," + e.origin + "," + csv_text_field(describe(e.event)) + "\n";
    for (const auto& w : r.warnings) out += ",warning," + csv_text_field(w) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Batch

struct BatchOptions {
    SimulationOptions sim;  // duration is the default for definitions without an override
    unsigned jobs = 1;
    bool keep_results = false;
};

struct BatchResult {
    std::vector<RunSummary> summaries;  // definition order
    std::vector<std::optional<SimulationResult>> results;  // filled when keep_results
    bool any_flagged() const {
        return std::any_of(summaries.begin(), summaries.end(), [](const RunSummary& s) { return s.status != RunStatus::stable; });
    }
};

/// Called once per finished run, possibly from several worker threads at
/// once; the result is absent for unresolved runs.
using RunSink = std::function<void(std::size_t index, const RunSummary&, const SimulationResult*)>;

/// Fresh scheme instances for one run, honouring per-run enable/disable.
inline std::vector<RasInstance> instantiate_ras(const std::vector<RasSpec>& specs, const ContingencyOverrides& ov,
                                                const NetworkCase& c, const std::map<std::string, double>& dispatch) {
    for (const auto* list : {&ov.ras_enable, &ov.ras_disable})
        for (const auto& id : *list)
            if (std::none_of(specs.begin(), specs.end(), [&](const RasSpec& s) { return s.id == id; }))
                throw DataError("override names unknown RAS '" + id + "'");
    std::vector<RasInstance> out;
    for (auto spec : specs) {
        const auto has = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), spec.id) != v.end(); };
        if (has(ov.ras_enable)) spec.params["armed"] = true;
        if (has(ov.ras_disable)) spec.params["armed"] = false;
        out.push_back(bind_ras(spec, c, dispatch));
    }
    return out;
}

inline RunSummary run_contingency(const NetworkCase& c, const DynamicState& initial, const ContingencyDef& def,
                                  const std::vector<RasSpec>& ras, const SimulationOptions& base,
                                  std::optional<SimulationResult>* keep = nullptr) {
    SimulationOptions opt = base;
    if (def.overrides.duration) opt.duration = *def.overrides.duration;
    RunSummary s;
    std::vector<RasInstance> instances;
    try {
        validate_events(def.events, c, opt.duration);
        instances = instantiate_ras(ras, def.overrides, c, initial.dispatch_mw);
    } catch (const DataError& e) {
        s.status = RunStatus::unresolved;
        s.message = e.what();
        s.duration = opt.duration;
    }
    if (s.status == RunStatus::unresolved) {
        s.id = def.id;
        s.label = def.label;
        return s;
    }
    SimulationResult r;
    try {
        r = simulate(initial, def.events, std::move(instances), opt);
    } catch (const SolveError& e) {
        s.id = def.id;
        s.label = def.label;
        s.status = RunStatus::unresolved;
        s.message = e.what();
        s.duration = opt.duration;
        return s;
    }
    s = summarize(r, c);
    s.id = def.id;
    s.label = def.label;
    if (keep) *keep = std::move(r);
    return s;
}

/// Every definition runs on a private copy of the initial state with fresh
/// RAS instances; summaries come back in definition order whatever `jobs` is.
inline BatchResult run_batch(const NetworkCase& c, const std::vector<MachineDynamics>& dyn,
                             const std::vector<ContingencyDef>& defs, const std::vector<RasSpec>& ras,
                             const BatchOptions& opt = {}, const RunSink& sink = {}) {
    const auto sol = solve_powerflow(c);
    if (!sol.converged) throw DataError("batch: power flow for case '" + c.id + "' did not converge");
    const DynamicState initial = init_dynamics(c, sol, dyn);

    BatchResult out;
    out.summaries.resize(defs.size());
    out.results.resize(defs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < defs.size(); i = next++) {
            std::optional<SimulationResult> r;
            out.summaries[i] = run_contingency(c, initial, defs[i], ras, opt.sim, &r);
            if (sink) sink(i, out.summaries[i], r ? &*r : nullptr);
            if (opt.keep_results) out.results[i] = std::move(r);
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(std::max<std::size_t>(defs.size(), 1))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run comparison

struct ChannelDelta {
    std::string channel;
    double max_abs_diff = 0.0;
    double min_diff = 0.0;  // min(a) - min(b)
    double min_time_diff = 0.0;
    double max_diff = 0.0;
    double max_time_diff = 0.0;
};

struct RunComparison {
    std::string contingency;
    std::vector<ChannelDelta> channels;  // common channels, order of run a
    std::vector<std::string> only_in_a, only_in_b;
    std::size_t common_samples = 0;
    bool truncated = false;  // durations differ; compared over the common prefix
};

inline RunComparison compare_runs(const std::string& contingency, const SimulationResult& a, const SimulationResult& b,
                                  const std::vector<std::string>& channels = {}) {
    if (a.dt != b.dt) throw DataError("compare: runs of '" + contingency + "' use different time steps");
    RunComparison out;
    out.contingency = contingency;
    out.common_samples = std::min(a.samples(), b.samples());
    out.truncated = a.samples() != b.samples();
    auto wanted = [&](const std::string& n) {
        return channels.empty() || std::find(channels.begin(), channels.end(), n) != channels.end();
    };
    for (const auto& n : a.names)
        if (wanted(n) && !b.has(n)) out.only_in_a.push_back(n);
    for (const auto& n : b.names)
        if (wanted(n) && !a.has(n)) out.only_in_b.push_back(n);
    const std::size_t n = out.common_samples;
    if (n == 0) return out;
    for (const auto& name : a.names) {
        if (!wanted(name) || !b.has(name)) continue;
        const auto& x = a.channel(name);
        const auto& y = b.channel(name);
        ChannelDelta d{name};
        std::size_t ia_min = 0, ia_max = 0, ib_min = 0, ib_max = 0;
        for (std::size_t k = 0; k < n; ++k) {
            d.max_abs_diff = std::max(d.max_abs_diff, std::abs(x[k] - y[k]));
            if (x[k] < x[ia_min]) ia_min = k;
            if (x[k] > x[ia_max]) ia_max = k;
            if (y[k] < y[ib_min]) ib_min = k;
            if (y[k] > y[ib_max]) ib_max = k;
        }
        d.min_diff = x[ia_min] - y[ib_min];
        d.min_time_diff = a.time[ia_min] - b.time[ib_min];
        d.max_diff = x[ia_max] - y[ib_max];
        d.max_time_diff = a.time[ia_max] - b.time[ib_max];
        out.channels.push_back(d);
    }
    return out;
}

inline std::string comparison_csv(const std::vector<RunComparison>& cmp) {
    std::string out = "contingency,channel,max_abs_diff,min_diff,min_time_diff_s,max_diff,max_time_diff_s,truncated\n";
    for (const auto& c : cmp)
        for (const auto& d : c.channels)
            out += c.contingency + "," + d.channel + "," + csv::num(d.max_abs_diff) + "," + csv::num(d.min_diff) + "," +
                   csv::num(d.min_time_diff) + "," + csv::num(d.max_diff) + "," + csv::num(d.max_time_diff) + "," +
                   (c.truncated ? "1" : "0") + "\n";
    return out;
}

}  // namespace gridseam
