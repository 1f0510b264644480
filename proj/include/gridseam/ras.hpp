#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gridseam/csv.hpp"
#include "gridseam/error.hpp"
#include "gridseam/json_util.hpp"
#include "gridseam/netmodel.hpp"

namespace gridseam {

// ---------------------------------------------------------------------------
// Actions

enum class ActionKind { trip_branch, trip_machine, shed_load };

inline std::string to_string(ActionKind k) {
    switch (k) {
        case ActionKind::trip_branch: return "trip_branch";
        case ActionKind::trip_machine: return "trip_machine";
        case ActionKind::shed_load: return "shed_load";
    }
    return "trip_branch";
}

struct RasAction {
    ActionKind kind = ActionKind::trip_branch;
    std::string target;
    double mw = 0.0;  // shed_load only
    std::string reason;
    bool operator==(const RasAction&) const = default;
};

using ActionList = std::vector<RasAction>;

/// Signed sum of from-end branch active power, e.g. a corridor or interface.
struct MonitoredFlow {
    std::string branch;
    double sign = 1.0;
    bool operator==(const MonitoredFlow&) const = default;
};

/// Continuous-condition pickup timer: runs while the condition holds,
/// restarts from zero whenever it drops.
class PickupTimer {
public:
    /// True once the condition has held for at least `pickup` seconds.
    bool update(double t, bool condition, double pickup) {
        if (!condition) {
            start_.reset();
            return false;
        }
        if (!start_) start_ = t;
        return t - *start_ + 1e-9 >= pickup;
    }
    std::optional<double> started() const { return start_; }

private:
    std::optional<double> start_;
};

// ---------------------------------------------------------------------------
// Transfer-trip: power above threshold AND voltage below threshold.

struct TransferTripConfig {
    std::string id;
    std::vector<MonitoredFlow> monitored;
    double p_threshold_mw = 0.0;
    std::string voltage_bus;
    double v_threshold_pu = 0.9;
    double pickup_s = 0.0;
    bool armed = true;
    std::vector<std::string> trip_branches;
};

class TransferTripRas {
public:
    explicit TransferTripRas(TransferTripConfig cfg) : cfg_(std::move(cfg)) {
        if (!(cfg_.p_threshold_mw > 0.0)) throw DataError("ras " + cfg_.id + ": p_threshold must be positive");
        if (!(cfg_.v_threshold_pu > 0.0 && cfg_.v_threshold_pu < 1.2))
            throw DataError("ras " + cfg_.id + ": v_threshold must lie in (0, 1.2)");
        if (cfg_.pickup_s < 0.0) throw DataError("ras " + cfg_.id + ": pickup_time must be >= 0");
    }

    std::optional<ActionList> step(double t, double p_mw, double v_pu) {
        if (!cfg_.armed || fired_) return std::nullopt;
        const bool cond = p_mw > cfg_.p_threshold_mw && v_pu < cfg_.v_threshold_pu;
        if (!timer_.update(t, cond, cfg_.pickup_s)) return std::nullopt;
        fired_ = true;
        const std::string why = "P " + csv::fixed(p_mw, 1) + " MW > " + csv::fixed(cfg_.p_threshold_mw, 1) + " and V " +
                                csv::fixed(v_pu, 3) + " pu < " + csv::fixed(cfg_.v_threshold_pu, 3);
        ActionList out;
        for (const auto& b : cfg_.trip_branches) out.push_back({ActionKind::trip_branch, b, 0.0, why});
        return out;
    }

    const TransferTripConfig& config() const { return cfg_; }
    bool fired() const { return fired_; }

private:
    TransferTripConfig cfg_;
    PickupTimer timer_;
    bool fired_ = false;
};

// ---------------------------------------------------------------------------
// Oscillation relay

struct OscillationConfig {
    std::string id;
    std::vector<MonitoredFlow> monitored;
    double amplitude_threshold_mw = 0.0;  // peak-to-peak
    double persist_s = 5.0;
    double window_s = 10.0;
    double undamped_ratio = 0.98;
    bool armed = true;
    std::vector<std::string> trip_branches;
};

struct Extremum {
    double t;
    double value;
};

/// Turning points of a sampled signal: a sample is an extremum when the sign
/// of the last nonzero slope flips; plateaus report their last sample.
class TurningPoints {
public:
    /// Feeds one sample; returns the extremum it confirms, if any.
    std::optional<Extremum> push(double t, double v) {
        std::optional<Extremum> out;
        if (have_prev_) {
            const double d = v - prev_v_;
            const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
            if (s != 0) {
                if (last_sign_ != 0 && s != last_sign_) out = Extremum{prev_t_, prev_v_};
                last_sign_ = s;
            }
        }
        have_prev_ = true;
        prev_t_ = t;
        prev_v_ = v;
        return out;
    }

private:
    bool have_prev_ = false;
    double prev_t_ = 0.0, prev_v_ = 0.0;
    int last_sign_ = 0;
};

/// Detection: over the extrema inside the sliding window, the latest
/// peak-to-peak swing reaches the threshold and is at least `undamped_ratio`
/// of the swing before it. Trips once detection has held for `persist_s`.
class OscillationRas {
public:
    explicit OscillationRas(OscillationConfig cfg) : cfg_(std::move(cfg)) {
        if (!(cfg_.persist_s > 0.0)) throw DataError("ras " + cfg_.id + ": persist_time must be positive");
        if (!(cfg_.window_s > 0.0)) throw DataError("ras " + cfg_.id + ": window must be positive");
        if (!(cfg_.amplitude_threshold_mw > 0.0)) throw DataError("ras " + cfg_.id + ": amplitude threshold must be positive");
    }

    std::optional<ActionList> step(double t, double p_mw) {
        if (auto e = turning_.push(t, p_mw)) extrema_.push_back(*e);
        while (!extrema_.empty() && extrema_.front().t < t - cfg_.window_s - 1e-9) extrema_.pop_front();
        const bool cond = detected();
        if (!cfg_.armed || fired_) return std::nullopt;
        if (!timer_.update(t, cond, cfg_.persist_s)) return std::nullopt;
        fired_ = true;
        const std::size_t m = extrema_.size();
        const double swing = std::abs(extrema_[m - 1].value - extrema_[m - 2].value);
        const std::string why = "undamped oscillation " + csv::fixed(swing, 1) + " MW peak-to-peak for " +
                                csv::fixed(cfg_.persist_s, 2) + " s";
        ActionList out;
        for (const auto& b : cfg_.trip_branches) out.push_back({ActionKind::trip_branch, b, 0.0, why});
        return out;
    }

    bool detected() const {
        const std::size_t m = extrema_.size();
        if (m < 3) return false;
        const double last = std::abs(extrema_[m - 1].value - extrema_[m - 2].value);
        const double before = std::abs(extrema_[m - 2].value - extrema_[m - 3].value);
        return last >= cfg_.amplitude_threshold_mw && last >= cfg_.undamped_ratio * before;
    }

    const OscillationConfig& config() const { return cfg_; }
    bool fired() const { return fired_; }

private:
    OscillationConfig cfg_;
    TurningPoints turning_;
    std::deque<Extremum> extrema_;
    PickupTimer timer_;
    bool fired_ = false;
};

// ---------------------------------------------------------------------------
// Staged overload scheme: shed generation, then open a tie.

struct ShedCandidate {
    std::string machine;
    double mw;
};

struct OverloadShedConfig {
    std::string id;
    std::string branch;
    double rating_mva = 0.0;  // taken from the case when bound
    double overload_factor = 1.0;
    double stage1_delay_s = 1.0;
    std::string shed_area;
    double shed_mw = 0.0;
    std::vector<ShedCandidate> candidates;  // resolved when bound
    double stage2_delay_s = 2.0;
    std::vector<std::string> stage2_trip_branches;
    bool armed = true;
};

/// Largest units first, ties by id, until the block is covered.
inline std::pair<std::vector<ShedCandidate>, double> select_shedding(std::vector<ShedCandidate> candidates, double block_mw) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const ShedCandidate& a, const ShedCandidate& b) {
        if (a.mw != b.mw) return a.mw > b.mw;
        return a.machine < b.machine;
    });
    std::vector<ShedCandidate> chosen;
    double covered = 0.0;
    for (const auto& c : candidates) {
        if (covered >= block_mw - 1e-9) break;
        if (c.mw <= 0.0) continue;
        chosen.push_back(c);
        covered += c.mw;
    }
    return {chosen, std::max(0.0, block_mw - covered)};
}

class OverloadShedRas {
public:
    explicit OverloadShedRas(OverloadShedConfig cfg) : cfg_(std::move(cfg)) {
        if (!(cfg_.rating_mva > 0.0)) throw DataError("ras " + cfg_.id + ": protected branch needs a positive rating");
        if (cfg_.overload_factor < 1.0) throw DataError("ras " + cfg_.id + ": overload_factor must be >= 1");
        if (cfg_.stage1_delay_s < 0.0 || cfg_.stage2_delay_s < 0.0) throw DataError("ras " + cfg_.id + ": delays must be >= 0");
    }

    std::optional<ActionList> step(double t, double s_mva) {
        if (!cfg_.armed || frozen_ || stage_ == 2) return std::nullopt;
        const double limit = cfg_.rating_mva * cfg_.overload_factor;
        const bool over = s_mva > limit;
        const std::string load = "|S| " + csv::fixed(s_mva, 1) + " MVA > " + csv::fixed(limit, 1);
        if (stage_ == 0) {
            if (!stage1_timer_.update(t, over, cfg_.stage1_delay_s)) return std::nullopt;
            stage_ = 1;
            stage1_t_ = t;
            auto [chosen, shortfall] = select_shedding(cfg_.candidates, cfg_.shed_mw);
            shortfall_mw_ = shortfall;
            ActionList out;
            std::string why = "stage 1: " + load + " for " + csv::fixed(cfg_.stage1_delay_s, 2) + " s";
            if (shortfall > 0.0) why += "; shortfall " + csv::fixed(shortfall, 1) + " MW";
            for (const auto& c : chosen) out.push_back({ActionKind::trip_machine, c.machine, c.mw, why});
            return out;
        }
        // stage 1: the overload must persist without a break for stage2_delay
        if (!over) {
            frozen_ = true;
            return std::nullopt;
        }
        if (t - stage1_t_ + 1e-9 < cfg_.stage2_delay_s) return std::nullopt;
        stage_ = 2;
        ActionList out;
        const std::string why = "stage 2: " + load + " persisted " + csv::fixed(cfg_.stage2_delay_s, 2) + " s after shedding";
        for (const auto& b : cfg_.stage2_trip_branches) out.push_back({ActionKind::trip_branch, b, 0.0, why});
        return out;
    }

    int stage() const { return stage_; }
    bool frozen() const { return frozen_; }
    double shortfall_mw() const { return shortfall_mw_; }
    const OverloadShedConfig& config() const { return cfg_; }

private:
    OverloadShedConfig cfg_;
    PickupTimer stage1_timer_;
    int stage_ = 0;
    double stage1_t_ = 0.0;
    bool frozen_ = false;
    double shortfall_mw_ = 0.0;
};

// ---------------------------------------------------------------------------
// Directional interface power

struct DirectionalPowerConfig {
    std::string id;
    std::vector<MonitoredFlow> interface;  // sign makes the protected direction positive
    double p_threshold_mw = 0.0;
    double pickup_s = 0.0;
    ActionList actions;
    bool armed = true;
};

class DirectionalPowerRas {
public:
    explicit DirectionalPowerRas(DirectionalPowerConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.interface.empty()) throw DataError("ras " + cfg_.id + ": interface must list at least one branch");
        if (cfg_.pickup_s < 0.0) throw DataError("ras " + cfg_.id + ": pickup_time must be >= 0");
    }

    std::optional<ActionList> step(double t, double p_mw) {
        if (!cfg_.armed || fired_) return std::nullopt;
        if (!timer_.update(t, p_mw > cfg_.p_threshold_mw, cfg_.pickup_s)) return std::nullopt;
        fired_ = true;
        ActionList out = cfg_.actions;
        const std::string why = "interface P " + csv::fixed(p_mw, 1) + " MW > " + csv::fixed(cfg_.p_threshold_mw, 1);
        for (auto& a : out) a.reason = why;
        return out;
    }

    const DirectionalPowerConfig& config() const { return cfg_; }

private:
    DirectionalPowerConfig cfg_;
    PickupTimer timer_;
    bool fired_ = false;
};

// ---------------------------------------------------------------------------
// Distance relay

struct MhoZone {
    double reach = 0.0;  // pu
    double angle = 0.0;  // rad, maximum-torque angle
    double timer = 0.0;  // s
};

/// Apparent impedance v / i; nullopt when the current is too small to measure.
inline std::optional<Complex> apparent_impedance(Complex v, Complex i) {
    if (std::abs(i) <= 1e-6) return std::nullopt;
    return v / i;
}

/// Mho circle through the origin with diameter `reach` along `angle`;
/// the boundary counts as inside.
inline bool mho_zone_check(Complex z, const MhoZone& zone) {
    const Complex c = std::polar(zone.reach / 2.0, zone.angle);
    return std::abs(z - c) <= std::abs(c) * (1.0 + 1e-12) + 1e-15;
}

struct DistanceRelayConfig {
    std::string id;
    std::string branch;
    bool from_end = true;
    MhoZone zone;
    bool armed = true;
};

class DistanceRelay {
public:
    explicit DistanceRelay(DistanceRelayConfig cfg) : cfg_(std::move(cfg)) {
        if (!(cfg_.zone.reach > 0.0)) throw DataError("ras " + cfg_.id + ": mho reach must be positive");
        if (cfg_.zone.timer < 0.0) throw DataError("ras " + cfg_.id + ": zone timer must be >= 0");
    }

    std::optional<ActionList> step(double t, Complex v, Complex i) {
        if (!cfg_.armed || fired_) return std::nullopt;
        const auto z = apparent_impedance(v, i);
        const bool inside = z && mho_zone_check(*z, cfg_.zone);
        if (!timer_.update(t, inside, cfg_.zone.timer)) return std::nullopt;
        fired_ = true;
        return ActionList{{ActionKind::trip_branch, cfg_.branch, 0.0,
                           "apparent impedance inside mho zone for " + csv::fixed(cfg_.zone.timer, 3) + " s"}};
    }

    const DistanceRelayConfig& config() const { return cfg_; }

private:
    DistanceRelayConfig cfg_;
    PickupTimer timer_;
    bool fired_ = false;
};

// ---------------------------------------------------------------------------
// Binding to a running simulation

/// Per-step quantities a scheme may observe, in engineering units except
/// phasors (pu).
class StepSignals {
public:
    virtual ~StepSignals() = default;
    virtual double branch_p_mw(const std::string& branch) const = 0;  // from end
    virtual double branch_s_mva(const std::string& branch) const = 0;  // from end
    virtual double bus_v_pu(const std::string& bus) const = 0;
    virtual Complex bus_phasor(const std::string& bus) const = 0;
    virtual Complex branch_current(const std::string& branch, bool from_end) const = 0;  // pu, into the branch
    virtual std::string branch_end_bus(const std::string& branch, bool from_end) const = 0;
};

inline double monitored_sum(const std::vector<MonitoredFlow>& flows, const StepSignals& s) {
    double p = 0.0;
    for (const auto& f : flows) p += f.sign * s.branch_p_mw(f.branch);
    return p;
}

using RasLogic = std::variant<TransferTripRas, OscillationRas, OverloadShedRas, DirectionalPowerRas, DistanceRelay>;

/// One scheme instance owned by a single simulation run.
class RasInstance {
public:
    RasInstance(std::string id, std::string kind, RasLogic logic)
        : id_(std::move(id)), kind_(std::move(kind)), logic_(std::move(logic)) {}

    const std::string& id() const { return id_; }
    const std::string& kind() const { return kind_; }
    const RasLogic& logic() const { return logic_; }

    std::optional<ActionList> evaluate(double t, const StepSignals& s) {
        return std::visit(
            [&](auto& l) -> std::optional<ActionList> {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, TransferTripRas>)
                    return l.step(t, monitored_sum(l.config().monitored, s), s.bus_v_pu(l.config().voltage_bus));
                else if constexpr (std::is_same_v<T, OscillationRas>)
                    return l.step(t, monitored_sum(l.config().monitored, s));
                else if constexpr (std::is_same_v<T, OverloadShedRas>)
                    return l.step(t, s.branch_s_mva(l.config().branch));
                else if constexpr (std::is_same_v<T, DirectionalPowerRas>)
                    return l.step(t, monitored_sum(l.config().interface, s));
                else {
                    const auto& c = l.config();
                    return l.step(t, s.bus_phasor(s.branch_end_bus(c.branch, c.from_end)),
                                  s.branch_current(c.branch, c.from_end));
                }
            },
            logic_);
    }

private:
    std::string id_;
    std::string kind_;
    RasLogic logic_;
};

// ---------------------------------------------------------------------------
// Configuration file

/// Parsed but unbound scheme definition; element names are resolved against
/// a case by bind_ras.
struct RasSpec {
    std::string id;
    std::string kind;
    jsonu::Json params;
};

inline std::vector<RasSpec> parse_ras_config(const std::string& text, const std::string& where = "ras.json") {
    auto doc = jsonu::parse(text, where);
    jsonu::Reader top(doc, where);
    top.only({"ras", "notes"});
    std::vector<RasSpec> out;
    const auto& list = top.array("ras");
    for (std::size_t i = 0; i < list.size(); ++i) {
        jsonu::Reader r(list[i], where + ": ras[" + std::to_string(i) + "]");
        RasSpec s{r.str("id"), r.str("kind"), list[i]};
        static const char* kinds[] = {"transfer_trip", "oscillation", "overload_shed", "directional_power", "distance"};
        if (std::find(std::begin(kinds), std::end(kinds), s.kind) == std::end(kinds))
            throw DataError(r.where() + ": unknown kind '" + s.kind + "'");
        for (const auto& prev : out)
            if (prev.id == s.id) throw DataError(r.where() + ": duplicate ras id '" + s.id + "'");
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<RasSpec> load_ras_file(const std::string& path) {
    return parse_ras_config(jsonu::read_text_file(path), path);
}

namespace detail {

inline std::vector<MonitoredFlow> read_flows(const jsonu::Reader& r, const std::string& key, const NetworkCase& c) {
    std::vector<MonitoredFlow> out;
    const auto& arr = r.array(key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        jsonu::Reader e(arr[i], r.where() + "." + key + "[" + std::to_string(i) + "]");
        e.only({"branch", "sign"});
        MonitoredFlow f{e.str("branch"), e.num_or("sign", 1.0)};
        if (!c.find_series(f.branch)) throw DataError(e.where() + ": unknown branch '" + f.branch + "'");
        out.push_back(f);
    }
    return out;
}

inline std::vector<std::string> read_branches(const jsonu::Reader& r, const std::string& key, const NetworkCase& c) {
    std::vector<std::string> out;
    for (const auto& b : r.array(key)) {
        if (!b.is_string()) throw DataError(r.where() + "." + key + ": entries must be branch ids");
        const auto id = b.get<std::string>();
        if (!c.find_series(id)) throw DataError(r.where() + "." + key + ": unknown branch '" + id + "'");
        out.push_back(id);
    }
    return out;
}

inline RasAction read_action(const jsonu::Json& j, const std::string& where, const NetworkCase& c) {
    jsonu::Reader r(j, where);
    r.only({"action", "branch", "machine", "load", "mw"});
    const auto action = r.str("action");
    if (action == "trip_branch") {
        const auto id = r.str("branch");
        if (!c.find_series(id)) throw DataError(where + ": unknown branch '" + id + "'");
        return {ActionKind::trip_branch, id, 0.0, ""};
    }
    if (action == "trip_machine") {
        const auto id = r.str("machine");
        if (!c.find_machine(id)) throw DataError(where + ": unknown machine '" + id + "'");
        return {ActionKind::trip_machine, id, 0.0, ""};
    }
    if (action == "shed_load") {
        const auto id = r.str("load");
        if (!c.find_load(id)) throw DataError(where + ": unknown load '" + id + "'");
        return {ActionKind::shed_load, id, r.num("mw"), ""};
    }
    throw DataError(where + ": unknown action '" + action + "'");
}

}  // namespace detail

/// Builds a fresh instance bound to the element names of `c`. Machine
/// outputs (MW) rank stage-1 shedding candidates.
inline RasInstance bind_ras(const RasSpec& spec, const NetworkCase& c, const std::map<std::string, double>& machine_mw) {
    const std::string where = "ras '" + spec.id + "'";
    jsonu::Reader r(spec.params, where);
    const bool armed = r.flag_or("armed", true);
    if (spec.kind == "transfer_trip") {
        r.only({"id", "kind", "armed", "monitored", "p_threshold_mw", "voltage_bus", "v_threshold_pu", "pickup_s",
                "trip_branches", "notes"});
        TransferTripConfig cfg{spec.id, detail::read_flows(r, "monitored", c), r.num("p_threshold_mw"),
                               r.str("voltage_bus"), r.num("v_threshold_pu"), r.num_or("pickup_s", 0.0), armed,
                               detail::read_branches(r, "trip_branches", c)};
        if (!c.find_bus(cfg.voltage_bus)) throw DataError(where + ": unknown bus '" + cfg.voltage_bus + "'");
        return {spec.id, spec.kind, TransferTripRas(std::move(cfg))};
    }
    if (spec.kind == "oscillation") {
        r.only({"id", "kind", "armed", "monitored", "amplitude_threshold_mw", "persist_s", "window_s", "undamped_ratio",
                "trip_branches", "notes"});
        OscillationConfig cfg{spec.id,
                              detail::read_flows(r, "monitored", c),
                              r.num("amplitude_threshold_mw"),
                              r.num("persist_s"),
                              r.num("window_s"),
                              r.num_or("undamped_ratio", 0.98),
                              armed,
                              detail::read_branches(r, "trip_branches", c)};
        return {spec.id, spec.kind, OscillationRas(std::move(cfg))};
    }
    if (spec.kind == "overload_shed") {
        r.only({"id", "kind", "armed", "branch", "overload_factor", "stage1_delay_s", "shed_area", "shed_mw",
                "stage2_delay_s", "stage2_trip_branches", "notes"});
        OverloadShedConfig cfg;
        cfg.id = spec.id;
        cfg.branch = r.str("branch");
        const Branch* br = c.find_series(cfg.branch);
        if (!br) throw DataError(where + ": unknown branch '" + cfg.branch + "'");
        cfg.rating_mva = br->rating;
        cfg.overload_factor = r.num_or("overload_factor", 1.0);
        cfg.stage1_delay_s = r.num("stage1_delay_s");
        cfg.shed_area = r.str("shed_area");
        cfg.shed_mw = r.num("shed_mw");
        cfg.stage2_delay_s = r.num("stage2_delay_s");
        cfg.stage2_trip_branches = detail::read_branches(r, "stage2_trip_branches", c);
        cfg.armed = armed;
        bool area_known = false;
        for (const auto& a : c.areas) area_known = area_known || a.id == cfg.shed_area;
        if (!area_known) throw DataError(where + ": unknown area '" + cfg.shed_area + "'");
        for (const auto& m : c.machines) {
            if (!m.in_service) continue;
            const Bus* b = c.find_bus(m.bus);
            if (!b || b->area != cfg.shed_area) continue;
            auto it = machine_mw.find(m.id);
            cfg.candidates.push_back({m.id, it != machine_mw.end() ? it->second : m.p_mw});
        }
        return {spec.id, spec.kind, OverloadShedRas(std::move(cfg))};
    }
    if (spec.kind == "directional_power") {
        r.only({"id", "kind", "armed", "interface", "p_threshold_mw", "pickup_s", "actions", "notes"});
        DirectionalPowerConfig cfg{spec.id, detail::read_flows(r, "interface", c), r.num("p_threshold_mw"),
                                   r.num_or("pickup_s", 0.0), {}, armed};
        const auto& acts = r.array("actions");
        for (std::size_t i = 0; i < acts.size(); ++i)
            cfg.actions.push_back(detail::read_action(acts[i], where + ".actions[" + std::to_string(i) + "]", c));
        return {spec.id, spec.kind, DirectionalPowerRas(std::move(cfg))};
    }
    if (spec.kind == "distance") {
        r.only({"id", "kind", "armed", "branch", "end", "reach_pu", "angle_rad", "angle_deg", "timer_s", "notes"});
        DistanceRelayConfig cfg;
        cfg.id = spec.id;
        cfg.branch = r.str("branch");
        if (!c.find_series(cfg.branch)) throw DataError(where + ": unknown branch '" + cfg.branch + "'");
        const auto end = r.str_or("end", "from");
        if (end != "from" && end != "to") throw DataError(where + ": end must be 'from' or 'to'");
        cfg.from_end = end == "from";
        cfg.zone.reach = r.num("reach_pu");
        cfg.zone.angle = r.has("angle_rad") ? r.num("angle_rad") : r.num("angle_deg") * std::numbers::pi / 180.0;
        cfg.zone.timer = r.num_or("timer_s", 0.0);
        cfg.armed = armed;
        return {spec.id, spec.kind, DistanceRelay(std::move(cfg))};
    }
    throw DataError(where + ": unknown kind '" + spec.kind + "'");
}

}  // namespace gridseam
