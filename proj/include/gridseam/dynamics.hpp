#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gridseam/error.hpp"
#include "gridseam/json_util.hpp"
#include "gridseam/netmodel.hpp"
#include "gridseam/powerflow.hpp"
#include "gridseam/ras.hpp"

namespace gridseam {

// ---------------------------------------------------------------------------
// Machine data

struct GovernorParams {
    double r = 0.05;  // pu frequency per pu power, machine base
    double t_g = 0.5;  // s
    double p_max = 1.0;  // pu on mbase
    double p_min = 0.0;
    bool enabled = true;
    bool operator==(const GovernorParams&) const = default;
};

struct MachineDynamics {
    std::string machine;
    double h = 3.0;  // s on mbase
    double d = 0.0;  // pu torque per pu speed
    double xdp = 0.3;  // pu on mbase
    std::optional<GovernorParams> governor;
    bool operator==(const MachineDynamics&) const = default;
};

inline void validate_dynamics(const MachineDynamics& m) {
    const std::string w = "dynamics for machine '" + m.machine + "'";
    if (!(m.h > 0.0)) throw DataError(w + ": h must be > 0");
    if (!(m.xdp > 0.0)) throw DataError(w + ": xdp must be > 0");
    if (!(m.d >= 0.0)) throw DataError(w + ": d must be >= 0");
    if (m.governor) {
        if (!(m.governor->r > 0.0)) throw DataError(w + ": governor r must be > 0");
        if (!(m.governor->t_g > 0.0)) throw DataError(w + ": governor t_g must be > 0");
        if (!(m.governor->p_min <= m.governor->p_max)) throw DataError(w + ": governor p_min must be <= p_max");
    }
}

inline std::vector<MachineDynamics> parse_dynamics(const std::string& text, const std::string& where = "dyn.json") {
    auto doc = jsonu::parse(text, where);
    jsonu::Reader top(doc, where);
    top.only({"machines", "notes"});
    std::vector<MachineDynamics> out;
    std::set<std::string> seen;
    const auto& list = top.array("machines");
    for (std::size_t i = 0; i < list.size(); ++i) {
        jsonu::Reader r(list[i], where + ": machines[" + std::to_string(i) + "]");
        r.only({"machine", "h", "d", "xdp", "governor"});
        MachineDynamics m{r.str("machine"), r.num("h"), r.num_or("d", 0.0), r.num("xdp"), std::nullopt};
        if (r.has("governor")) {
            jsonu::Reader g = r.child("governor");
            g.only({"r", "t_g", "p_max", "p_min", "enabled"});
            m.governor = GovernorParams{g.num("r"), g.num("t_g"), g.num("p_max"), g.num_or("p_min", 0.0),
                                        g.flag_or("enabled", true)};
        }
        if (!seen.insert(m.machine).second) throw DataError(r.where() + ": duplicate machine '" + m.machine + "'");
        validate_dynamics(m);
        out.push_back(std::move(m));
    }
    return out;
}

inline std::vector<MachineDynamics> load_dynamics_file(const std::string& path) {
    return parse_dynamics(jsonu::read_text_file(path), path);
}

inline jsonu::OrderedJson dynamics_to_json(const std::vector<MachineDynamics>& dyn) {
    jsonu::OrderedJson arr = jsonu::OrderedJson::array();
    for (const auto& m : dyn) {
        jsonu::OrderedJson j;
        j["machine"] = m.machine;
        j["h"] = m.h;
        j["d"] = m.d;
        j["xdp"] = m.xdp;
        if (m.governor) {
            j["governor"] = {{"r", m.governor->r},
                             {"t_g", m.governor->t_g},
                             {"p_max", m.governor->p_max},
                             {"p_min", m.governor->p_min},
                             {"enabled", m.governor->enabled}};
        }
        arr.push_back(std::move(j));
    }
    return {{"machines", arr}};
}

// ---------------------------------------------------------------------------
// Events

enum class EventAction { apply_fault, clear_fault, trip_branch, trip_machine, shed_load };

inline std::string to_string(EventAction a) {
    switch (a) {
        case EventAction::apply_fault: return "apply_fault";
        case EventAction::clear_fault: return "clear_fault";
        case EventAction::trip_branch: return "trip_branch";
        case EventAction::trip_machine: return "trip_machine";
        case EventAction::shed_load: return "shed_load";
    }
    return "apply_fault";
}

struct Event {
    double t = 0.0;
    EventAction action = EventAction::trip_branch;
    std::string target;  // bus, branch, machine or load id
    Complex admittance{0.0, -1e4};  // apply_fault only, pu
    double mw = 0.0;  // shed_load only
    bool operator==(const Event&) const = default;
};

using EventSequence = std::vector<Event>;

inline std::string describe(const Event& e) {
    std::string s = to_string(e.action) + " " + e.target;
    if (e.action == EventAction::shed_load) s += " " + csv::num(e.mw) + " MW";
    return s;
}

inline Event parse_event(const jsonu::Json& j, const std::string& where) {
    jsonu::Reader r(j, where);
    r.only({"t", "action", "bus", "branch", "machine", "load", "mw", "admittance"});
    Event e;
    e.t = r.num("t");
    const auto a = r.str("action");
    if (a == "apply_fault") {
        e.action = EventAction::apply_fault;
        e.target = r.str("bus");
        if (r.has("admittance")) {
            const auto& y = r.at("admittance");
            if (!y.is_array() || y.size() != 2 || !y[0].is_number() || !y[1].is_number())
                throw DataError(where + ": admittance must be [g, b] in pu");
            e.admittance = {y[0].get<double>(), y[1].get<double>()};
        }
    } else if (a == "clear_fault") {
        e.action = EventAction::clear_fault;
        e.target = r.str("bus");
    } else if (a == "trip_branch") {
        e.action = EventAction::trip_branch;
        e.target = r.str("branch");
    } else if (a == "trip_machine") {
        e.action = EventAction::trip_machine;
        e.target = r.str("machine");
    } else if (a == "shed_load") {
        e.action = EventAction::shed_load;
        e.target = r.str("load");
        e.mw = r.num("mw");
        if (!(e.mw > 0.0)) throw DataError(where + ": shed_load mw must be > 0");
    } else {
        throw DataError(where + ": unknown action '" + a + "'");
    }
    return e;
}

inline EventSequence parse_events(const jsonu::Json& arr, const std::string& where) {
    if (!arr.is_array()) throw DataError(where + ": events must be an array");
    EventSequence out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_event(arr[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline jsonu::OrderedJson event_to_json(const Event& e) {
    jsonu::OrderedJson j;
    j["t"] = e.t;
    j["action"] = to_string(e.action);
    switch (e.action) {
        case EventAction::apply_fault:
            j["bus"] = e.target;
            j["admittance"] = {e.admittance.real(), e.admittance.imag()};
            break;
        case EventAction::clear_fault: j["bus"] = e.target; break;
        case EventAction::trip_branch: j["branch"] = e.target; break;
        case EventAction::trip_machine: j["machine"] = e.target; break;
        case EventAction::shed_load:
            j["load"] = e.target;
            j["mw"] = e.mw;
            break;
    }
    return j;
}

/// Ordering, time range, fault pairing and element names.
inline void validate_events(const EventSequence& events, const NetworkCase& c, double duration) {
    std::set<std::string> faulted;
    double last = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        const std::string w = "event " + std::to_string(i) + " (" + describe(e) + ")";
        if (!(e.t >= 0.0) || e.t > duration + 1e-9) throw DataError(w + ": time outside [0, duration]");
        if (e.t < last) throw DataError(w + ": event times must be non-decreasing");
        last = e.t;
        switch (e.action) {
            case EventAction::apply_fault:
                if (!c.find_bus(e.target)) throw DataError(w + ": unknown bus");
                faulted.insert(e.target);
                break;
            case EventAction::clear_fault:
                if (!faulted.erase(e.target)) throw DataError(w + ": clear_fault without a matching apply_fault");
                break;
            case EventAction::trip_branch:
                if (!c.find_series(e.target)) throw DataError(w + ": unknown branch");
                break;
            case EventAction::trip_machine:
                if (!c.find_machine(e.target)) throw DataError(w + ": unknown machine");
                break;
            case EventAction::shed_load:
                if (!c.find_load(e.target)) throw DataError(w + ": unknown load");
                break;
        }
    }
}

// ---------------------------------------------------------------------------
// Bus frequency

/// Bilinear-discretised washout s/(1 + T s) on an unwrapped angle; output is
/// the angle's rate of change in rad/s.
class WashoutFrequency {
public:
    WashoutFrequency(double dt, double t_w = 0.1) : a_(1.0 + 2.0 * t_w / dt), b_(1.0 - 2.0 * t_w / dt), g_(2.0 / dt) {}

    double push(double angle) {
        if (!started_) {
            started_ = true;
            last_ = angle;
            return y_;
        }
        double d = std::remainder(angle - last_, 2.0 * std::numbers::pi);
        last_ += d;
        y_ = (g_ * d - b_ * y_) / a_;
        return y_;
    }

private:
    double a_, b_, g_;
    bool started_ = false;
    double last_ = 0.0;
    double y_ = 0.0;
};

inline std::vector<double> bus_frequency(const std::vector<double>& angle, double dt, double f_nom = 60.0,
                                         double t_w = 0.1) {
    if (angle.size() < 2) throw DataError("bus_frequency: need at least 2 samples");
    if (!(dt > 0.0)) throw DataError("bus_frequency: dt must be > 0");
    WashoutFrequency w(dt, t_w);
    std::vector<double> f;
    f.reserve(angle.size());
    for (double a : angle) f.push_back(f_nom + w.push(a) / (2.0 * std::numbers::pi));
    return f;
}

// ---------------------------------------------------------------------------
// State

struct DynMachine {
    std::string id;
    int bus = 0;
    double mbase = 100.0;
    double h = 3.0, d = 0.0;
    Complex y;  // 1 / (j xdp) on system base
    double e = 1.0;  // |E'| pu
    double delta = 0.0, dw = 0.0, pm = 0.0, pref = 0.0;  // pm, pref on mbase
    std::optional<GovernorParams> gov;
    bool in_service = true;
};

struct DynBranch {
    std::string id;
    int from = 0, to = 0;
    std::array<Complex, 4> stamp{};
    bool in_service = true;
    std::string p_channel, q_channel;
};

struct DynLoad {
    std::string id;
    int bus = 0;
    double p_mw = 0.0;
    Complex y;  // pu
    bool in_service = true;
};

/// Everything a run needs, detached from the inputs. Copy it to start
/// several independent runs from one initialisation.
struct DynamicState {
    std::string case_id;
    double base_mva = 100.0;
    double f_nom = 60.0;
    std::vector<std::string> bus_ids;
    std::unordered_map<std::string, int> bus_index;
    std::vector<DynBranch> branches;
    std::unordered_map<std::string, int> branch_index;
    std::vector<DynMachine> machines;
    std::unordered_map<std::string, int> machine_index;
    std::vector<DynLoad> loads;
    std::unordered_map<std::string, int> load_index;
    std::map<std::string, double> dispatch_mw;  // initial machine output, MW
    Eigen::VectorXcd v0;  // initial bus voltages
};

namespace detail {

/// Network algebra for one topology: refactor on every switching event.
class Network {
public:
    explicit Network(const DynamicState& s) : s_(s) {}

    void rebuild(const std::map<int, Complex>& faults) {
        const int n = static_cast<int>(s_.bus_ids.size());
        // islands through in-service branches
        std::vector<int> parent(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
        auto find = [&](int x) {
            while (parent[static_cast<std::size_t>(x)] != x)
                x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            return x;
        };
        for (const auto& b : s_.branches)
            if (b.in_service) parent[static_cast<std::size_t>(find(b.from))] = find(b.to);
        island.assign(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) island[static_cast<std::size_t>(i)] = find(i);
        std::set<int> live;
        for (const auto& m : s_.machines)
            if (m.in_service) live.insert(island[static_cast<std::size_t>(m.bus)]);
        dead.assign(static_cast<std::size_t>(n), false);
        for (int i = 0; i < n; ++i) dead[static_cast<std::size_t>(i)] = !live.count(island[static_cast<std::size_t>(i)]);

        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
        for (const auto& b : s_.branches) {
            if (!b.in_service) continue;
            a(b.from, b.from) += b.stamp[0];
            a(b.from, b.to) += b.stamp[1];
            a(b.to, b.from) += b.stamp[2];
            a(b.to, b.to) += b.stamp[3];
        }
        for (const auto& l : s_.loads)
            if (l.in_service) a(l.bus, l.bus) += l.y;
        for (const auto& m : s_.machines)
            if (m.in_service) a(m.bus, m.bus) += m.y;
        for (const auto& [bus, y] : faults) a(bus, bus) += y;
        for (int i = 0; i < n; ++i) {
            if (!dead[static_cast<std::size_t>(i)]) continue;
            a.row(i).setZero();
            a.col(i).setZero();
            a(i, i) = 1.0;
        }
        lu_.compute(a);
        if (!(lu_.rcond() > 1e-14)) throw SolveError("dynamic network matrix is singular");
    }

    /// Bus voltages for the given machine rotor angles.
    void solve(const std::vector<double>& delta, Eigen::VectorXcd& v) const {
        Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(s_.bus_ids.size()));
        for (std::size_t k = 0; k < s_.machines.size(); ++k) {
            const auto& m = s_.machines[k];
            if (m.in_service) inj(m.bus) += m.y * std::polar(m.e, delta[k]);
        }
        v = lu_.solve(inj);
    }

    std::vector<int> island;
    std::vector<bool> dead;

private:
    const DynamicState& s_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

inline double electrical_power_mbase(const DynMachine& m, double delta, const Eigen::VectorXcd& v, double base) {
    if (!m.in_service) return 0.0;
    const Complex e = std::polar(m.e, delta);
    const Complex i = m.y * (e - v(m.bus));
    return std::real(e * std::conj(i)) * base / m.mbase;
}

}  // namespace detail

/// E' = V + j x I with I = conj(S / V); all quantities pu on one base.
inline Complex internal_emf(Complex v, Complex s, double x) {
    return v + Complex(0.0, x) * std::conj(s / v);
}

/// Classical machines behind xdp with EMFs set so the t = 0 network solve
/// reproduces the power-flow operating point; loads become constant
/// impedances at their solved voltages.
inline DynamicState init_dynamics(const NetworkCase& c, const PowerFlowSolution& sol,
                                  const std::vector<MachineDynamics>& dyn, double f_nom = 60.0) {
    if (!sol.converged) throw DataError("init_dynamics: power flow solution has not converged");
    DynamicState s;
    s.case_id = c.id;
    s.base_mva = c.base_mva;
    s.f_nom = f_nom;
    s.bus_ids = sol.bus_ids;
    for (std::size_t i = 0; i < s.bus_ids.size(); ++i) s.bus_index[s.bus_ids[i]] = static_cast<int>(i);
    const auto n = static_cast<Eigen::Index>(s.bus_ids.size());
    s.v0.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        s.v0(i) = std::polar(sol.v[static_cast<std::size_t>(i)], sol.theta[static_cast<std::size_t>(i)]);

    for (const auto& ref : series_elements(c)) {
        const Branch& br = *ref.element;
        if (!br.in_service) continue;
        auto f = s.bus_index.find(br.from);
        auto t = s.bus_index.find(br.to);
        if (f == s.bus_index.end() || t == s.bus_index.end()) continue;
        DynBranch b{br.id, f->second, t->second, pi_stamp(br, ref.tap), true, flow_channel('P', br), flow_channel('Q', br)};
        s.branch_index[b.id] = static_cast<int>(s.branches.size());
        s.branches.push_back(std::move(b));
    }
    for (const auto& l : c.loads) {
        if (!l.in_service) continue;
        auto it = s.bus_index.find(l.bus);
        if (it == s.bus_index.end()) continue;
        const double vm = std::abs(s.v0(it->second));
        DynLoad d{l.id, it->second, l.p_mw, Complex(l.p_mw, -l.q_mvar) / c.base_mva / (vm * vm), true};
        s.load_index[d.id] = static_cast<int>(s.loads.size());
        s.loads.push_back(std::move(d));
    }
    std::map<std::string, const MachineDynamics*> by_id;
    for (const auto& d : dyn) by_id[d.machine] = &d;
    for (const auto& m : c.machines) {
        if (!m.in_service) continue;
        auto it = s.bus_index.find(m.bus);
        if (it == s.bus_index.end()) continue;
        auto d = by_id.find(m.id);
        if (d == by_id.end()) throw DataError("init_dynamics: missing dynamics record for machine '" + m.id + "'");
        validate_dynamics(*d->second);
        const auto& out = sol.machines.at(m.id);
        DynMachine dm;
        dm.id = m.id;
        dm.bus = it->second;
        dm.mbase = m.mbase;
        dm.h = d->second->h;
        dm.d = d->second->d;
        const double x_sys = d->second->xdp * c.base_mva / m.mbase;
        dm.y = 1.0 / Complex(0.0, x_sys);
        const Complex v = s.v0(it->second);
        const Complex e = internal_emf(v, Complex(out.p_mw, out.q_mvar) / c.base_mva, x_sys);
        dm.e = std::abs(e);
        dm.delta = std::arg(e);
        dm.gov = d->second->governor;
        const double p = out.p_mw / m.mbase;
        if (dm.gov && (p < dm.gov->p_min - 1e-9 || p > dm.gov->p_max + 1e-9))
            throw DataError("init_dynamics: machine '" + m.id + "' initial output " + csv::fixed(out.p_mw, 2) +
                            " MW is outside its governor limits");
        s.dispatch_mw[m.id] = out.p_mw;
        s.machine_index[dm.id] = static_cast<int>(s.machines.size());
        s.machines.push_back(std::move(dm));
    }
    // Mechanical power equals the t = 0 electrical output of the network
    // solve, so the initial state is an exact equilibrium.
    detail::Network net(s);
    net.rebuild({});
    std::vector<double> delta;
    for (const auto& m : s.machines) delta.push_back(m.delta);
    Eigen::VectorXcd v;
    net.solve(delta, v);
    for (auto& m : s.machines) {
        m.pm = detail::electrical_power_mbase(m, m.delta, v, s.base_mva);
        m.pref = m.pm;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Simulation

enum class Integrator { rk4, trapezoidal };

struct SimulationOptions {
    double dt = 1.0 / 240.0;
    double duration = 20.0;
    Integrator integrator = Integrator::rk4;
    double washout_t = 0.1;
};

struct RasLogEntry {
    double t = 0.0;  // when the action takes effect
    double t_detect = 0.0;
    std::string ras_id;
    std::string action;
    std::string reason;
    bool operator==(const RasLogEntry&) const = default;
};

struct AppliedEvent {
    double t = 0.0;
    Event event;
    std::string origin;  // "scheduled" or the RAS id
    bool operator==(const AppliedEvent&) const = default;
};

struct SimulationResult {
    std::string case_id;
    double dt = 0.0;
    double duration = 0.0;
    double f_nom = 60.0;
    std::vector<double> time;
    std::vector<std::string> names;
    std::vector<std::vector<double>> data;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<RasLogEntry> ras_log;
    std::vector<AppliedEvent> event_log;
    std::vector<std::string> warnings;
    std::vector<std::string> dead_buses;  // ever left without a source
    bool stable = true;
    std::optional<double> instability_time;

    bool has(const std::string& name) const { return index.count(name) > 0; }
    const std::vector<double>& channel(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw DataError("simulation result has no channel '" + name + "'");
        return data[it->second];
    }
    std::size_t samples() const { return time.size(); }
    bool operator==(const SimulationResult& o) const {
        return case_id == o.case_id && dt == o.dt && duration == o.duration && time == o.time && names == o.names &&
               data == o.data && ras_log == o.ras_log && event_log == o.event_log && warnings == o.warnings &&
               dead_buses == o.dead_buses && stable == o.stable && instability_time == o.instability_time;
    }
};

namespace detail {

class StateSignals final : public StepSignals {
public:
    StateSignals(const DynamicState& s, const Eigen::VectorXcd& v) : s_(s), v_(v) {}

    double branch_p_mw(const std::string& b) const override { return flow(b).real() * s_.base_mva; }
    double branch_s_mva(const std::string& b) const override { return std::abs(flow(b)) * s_.base_mva; }
    double bus_v_pu(const std::string& bus) const override { return std::abs(v_(s_.bus_index.at(bus))); }
    Complex bus_phasor(const std::string& bus) const override { return v_(s_.bus_index.at(bus)); }
    Complex branch_current(const std::string& id, bool from_end) const override {
        const auto& b = branch(id);
        if (!b.in_service) return {};
        return from_end ? b.stamp[0] * v_(b.from) + b.stamp[1] * v_(b.to) : b.stamp[2] * v_(b.from) + b.stamp[3] * v_(b.to);
    }
    std::string branch_end_bus(const std::string& id, bool from_end) const override {
        const auto& b = branch(id);
        return s_.bus_ids[static_cast<std::size_t>(from_end ? b.from : b.to)];
    }

private:
    const DynBranch& branch(const std::string& id) const {
        auto it = s_.branch_index.find(id);
        if (it == s_.branch_index.end()) throw DataError("ras references branch '" + id + "' not in the simulated network");
        return s_.branches[static_cast<std::size_t>(it->second)];
    }
    Complex flow(const std::string& id) const {
        const auto& b = branch(id);
        return v_(b.from) * std::conj(branch_current(id, true));
    }
    const DynamicState& s_;
    const Eigen::VectorXcd& v_;
};

struct Derivs {
    std::vector<double> ddelta, ddw, dpm;
};

}  // namespace detail

/// Fixed-step run. Per step: apply due events, solve the network, record,
/// consult RAS (actions land one step later), integrate.
inline SimulationResult simulate(DynamicState state, const EventSequence& events, std::vector<RasInstance> ras,
                                 const SimulationOptions& opt = {}) {
    if (!(opt.dt > 0.0)) throw DataError("simulate: dt must be > 0");
    if (!(opt.duration >= 0.0)) throw DataError("simulate: duration must be >= 0");
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].t < events[i - 1].t) throw DataError("simulate: event times must be non-decreasing");
    for (const auto& e : events)
        if (e.t < 0.0 || e.t > opt.duration + 1e-9) throw DataError("simulate: event at t=" + csv::num(e.t) + " outside [0, duration]");

    const double dt = opt.dt;
    const auto steps = static_cast<std::size_t>(std::llround(opt.duration / dt));
    const double ws = 2.0 * std::numbers::pi * state.f_nom;
    const std::size_t nb = state.bus_ids.size();
    const std::size_t nm = state.machines.size();

    SimulationResult res;
    res.case_id = state.case_id;
    res.dt = dt;
    res.duration = opt.duration;
    res.f_nom = state.f_nom;
    auto add = [&](std::string name) {
        res.index[name] = res.names.size();
        res.names.push_back(std::move(name));
    };
    for (const auto& b : state.bus_ids) add("V:" + b);
    for (const auto& b : state.bus_ids) add("F:" + b);
    for (const auto& b : state.branches) add(b.p_channel);
    for (const auto& b : state.branches) add(b.q_channel);
    for (const auto& m : state.machines) add("ANG:" + m.id);
    for (const auto& m : state.machines) add("SPD:" + m.id);
    for (const auto& m : state.machines) add("PE:" + m.id);
    for (const auto& m : state.machines) add("PM:" + m.id);
    res.data.assign(res.names.size(), {});
    for (auto& d : res.data) d.reserve(steps + 1);
    res.time.reserve(steps + 1);

    std::map<int, Complex> faults;
    detail::Network net(state);
    net.rebuild(faults);
    std::set<std::string> dead_seen;
    std::vector<WashoutFrequency> washout(nb, WashoutFrequency(dt, opt.washout_t));
    std::vector<double> last_angle(nb);
    for (std::size_t i = 0; i < nb; ++i) last_angle[i] = std::arg(state.v0(static_cast<Eigen::Index>(i)));

    struct Pending {
        Event event;
        std::string origin;
    };
    std::vector<Pending> ras_queue;
    std::size_t next_event = 0;

    std::vector<double> delta(nm), dw(nm), pm(nm);
    for (std::size_t k = 0; k < nm; ++k) {
        delta[k] = state.machines[k].delta;
        dw[k] = state.machines[k].dw;
        pm[k] = state.machines[k].pm;
    }

    auto apply = [&](const Event& e, double t, const std::string& origin) -> bool {
        auto skip = [&](const std::string& why) {
            res.warnings.push_back("t=" + csv::fixed(t, 4) + " " + describe(e) + " (" + origin + "): " + why + ", skipped");
            return false;
        };
        switch (e.action) {
            case EventAction::apply_fault: {
                auto it = state.bus_index.find(e.target);
                if (it == state.bus_index.end()) return skip("unknown bus");
                if (faults.count(it->second)) return skip("bus already faulted");
                faults[it->second] = e.admittance;
                break;
            }
            case EventAction::clear_fault: {
                auto it = state.bus_index.find(e.target);
                if (it == state.bus_index.end() || !faults.erase(it->second)) return skip("no fault on bus");
                break;
            }
            case EventAction::trip_branch: {
                auto it = state.branch_index.find(e.target);
                if (it == state.branch_index.end()) return skip("unknown or out-of-service branch");
                auto& b = state.branches[static_cast<std::size_t>(it->second)];
                if (!b.in_service) return skip("branch already tripped");
                b.in_service = false;
                break;
            }
            case EventAction::trip_machine: {
                auto it = state.machine_index.find(e.target);
                if (it == state.machine_index.end()) return skip("unknown or out-of-service machine");
                auto& m = state.machines[static_cast<std::size_t>(it->second)];
                if (!m.in_service) return skip("machine already tripped");
                m.in_service = false;
                pm[static_cast<std::size_t>(it->second)] = 0.0;
                dw[static_cast<std::size_t>(it->second)] = 0.0;
                break;
            }
            case EventAction::shed_load: {
                auto it = state.load_index.find(e.target);
                if (it == state.load_index.end()) return skip("unknown or out-of-service load");
                auto& l = state.loads[static_cast<std::size_t>(it->second)];
                if (!l.in_service) return skip("load already disconnected");
                const double remaining = l.p_mw - e.mw;
                if (remaining <= 1e-9) {
                    l.in_service = false;
                    l.p_mw = 0.0;
                } else {
                    l.y *= remaining / l.p_mw;
                    l.p_mw = remaining;
                }
                break;
            }
        }
        res.event_log.push_back({t, e, origin});
        return true;
    };

    auto derivs = [&](const std::vector<double>& d, const std::vector<double>& w, const std::vector<double>& p,
                      detail::Derivs& out) {
        Eigen::VectorXcd v;
        net.solve(d, v);
        out.ddelta.assign(nm, 0.0);
        out.ddw.assign(nm, 0.0);
        out.dpm.assign(nm, 0.0);
        for (std::size_t k = 0; k < nm; ++k) {
            const auto& m = state.machines[k];
            if (!m.in_service) continue;
            const double pe = detail::electrical_power_mbase(m, d[k], v, state.base_mva);
            out.ddelta[k] = ws * w[k];
            out.ddw[k] = (p[k] - pe - m.d * w[k]) / (2.0 * m.h);
            if (m.gov && m.gov->enabled) {
                double g = ((m.pref - w[k] / m.gov->r) - p[k]) / m.gov->t_g;
                if ((p[k] >= m.gov->p_max && g > 0.0) || (p[k] <= m.gov->p_min && g < 0.0)) g = 0.0;
                out.dpm[k] = g;
            }
        }
    };
    auto clamp_pm = [&] {
        for (std::size_t k = 0; k < nm; ++k) {
            const auto& m = state.machines[k];
            if (m.in_service && m.gov && m.gov->enabled) pm[k] = std::clamp(pm[k], m.gov->p_min, m.gov->p_max);
        }
    };

    Eigen::VectorXcd v;
    detail::Derivs k1, k2, k3, k4;
    std::vector<double> td(nm), tw(nm), tp(nm);

    for (std::size_t step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        bool changed = false;
        while (next_event < events.size() && events[next_event].t <= t + 1e-6 * dt) {
            changed = apply(events[next_event], t, "scheduled") || changed;
            ++next_event;
        }
        for (const auto& p : ras_queue) changed = apply(p.event, t, p.origin) || changed;
        ras_queue.clear();
        if (changed) net.rebuild(faults);

        net.solve(delta, v);
        for (std::size_t i = 0; i < nb; ++i)
            if (net.dead[i]) {
                v(static_cast<Eigen::Index>(i)) = 0.0;
                if (dead_seen.insert(state.bus_ids[i]).second) res.dead_buses.push_back(state.bus_ids[i]);
            }

        // record
        res.time.push_back(t);
        std::size_t c = 0;
        for (std::size_t i = 0; i < nb; ++i) res.data[c++].push_back(std::abs(v(static_cast<Eigen::Index>(i))));
        for (std::size_t i = 0; i < nb; ++i) {
            if (!net.dead[i]) last_angle[i] = std::arg(v(static_cast<Eigen::Index>(i)));
            res.data[c++].push_back(state.f_nom + washout[i].push(last_angle[i]) / (2.0 * std::numbers::pi));
        }
        std::vector<Complex> sf(state.branches.size());
        for (std::size_t j = 0; j < state.branches.size(); ++j) {
            const auto& b = state.branches[j];
            if (b.in_service) {
                const Complex i_f = b.stamp[0] * v(b.from) + b.stamp[1] * v(b.to);
                sf[j] = v(b.from) * std::conj(i_f) * state.base_mva;
            }
        }
        for (const auto& s : sf) res.data[c++].push_back(s.real());
        for (const auto& s : sf) res.data[c++].push_back(s.imag());
        for (std::size_t k = 0; k < nm; ++k) res.data[c++].push_back(delta[k]);
        for (std::size_t k = 0; k < nm; ++k) res.data[c++].push_back(1.0 + dw[k]);
        for (std::size_t k = 0; k < nm; ++k)
            res.data[c++].push_back(detail::electrical_power_mbase(state.machines[k], delta[k], v, state.base_mva) *
                                    state.machines[k].mbase);
        for (std::size_t k = 0; k < nm; ++k) res.data[c++].push_back(pm[k] * state.machines[k].mbase);

        // loss of synchronism: rotor-angle spread within an island
        if (res.stable) {
            std::map<int, std::pair<double, double>> span;
            for (std::size_t k = 0; k < nm; ++k) {
                const auto& m = state.machines[k];
                if (!m.in_service) continue;
                auto [it, fresh] = span.try_emplace(net.island[static_cast<std::size_t>(m.bus)], delta[k], delta[k]);
                if (!fresh) {
                    it->second.first = std::min(it->second.first, delta[k]);
                    it->second.second = std::max(it->second.second, delta[k]);
                }
            }
            for (const auto& [isl, mm] : span)
                if (mm.second - mm.first > std::numbers::pi) {
                    res.stable = false;
                    res.instability_time = t;
                    break;
                }
        }

        if (step == steps) break;

        // protection
        detail::StateSignals sig(state, v);
        for (auto& r : ras) {
            auto acts = r.evaluate(t, sig);
            if (!acts) continue;
            for (const auto& a : *acts) {
                Event e;
                e.t = t + dt;
                e.target = a.target;
                e.mw = a.mw;
                e.action = a.kind == ActionKind::trip_branch    ? EventAction::trip_branch
                           : a.kind == ActionKind::trip_machine ? EventAction::trip_machine
                                                                : EventAction::shed_load;
                ras_queue.push_back({e, r.id()});
                res.ras_log.push_back({t + dt, t, r.id(), describe(e), a.reason});
            }
        }

        // integrate
        if (opt.integrator == Integrator::rk4) {
            auto stage = [&](const detail::Derivs& kd, double h) {
                for (std::size_t k = 0; k < nm; ++k) {
                    td[k] = delta[k] + h * kd.ddelta[k];
                    tw[k] = dw[k] + h * kd.ddw[k];
                    tp[k] = pm[k] + h * kd.dpm[k];
                }
            };
            derivs(delta, dw, pm, k1);
            stage(k1, dt / 2);
            derivs(td, tw, tp, k2);
            stage(k2, dt / 2);
            derivs(td, tw, tp, k3);
            stage(k3, dt);
            derivs(td, tw, tp, k4);
            for (std::size_t k = 0; k < nm; ++k) {
                delta[k] += dt / 6.0 * (k1.ddelta[k] + 2 * k2.ddelta[k] + 2 * k3.ddelta[k] + k4.ddelta[k]);
                dw[k] += dt / 6.0 * (k1.ddw[k] + 2 * k2.ddw[k] + 2 * k3.ddw[k] + k4.ddw[k]);
                pm[k] += dt / 6.0 * (k1.dpm[k] + 2 * k2.dpm[k] + 2 * k3.dpm[k] + k4.dpm[k]);
            }
        } else {
            derivs(delta, dw, pm, k1);
            for (std::size_t k = 0; k < nm; ++k) {
                td[k] = delta[k] + dt * k1.ddelta[k];
                tw[k] = dw[k] + dt * k1.ddw[k];
                tp[k] = pm[k] + dt * k1.dpm[k];
            }
            for (int it = 0; it < 50; ++it) {
                derivs(td, tw, tp, k2);
                double change = 0.0;
                for (std::size_t k = 0; k < nm; ++k) {
                    const double nd = delta[k] + dt / 2 * (k1.ddelta[k] + k2.ddelta[k]);
                    const double nw = dw[k] + dt / 2 * (k1.ddw[k] + k2.ddw[k]);
                    const double np = pm[k] + dt / 2 * (k1.dpm[k] + k2.dpm[k]);
                    change = std::max({change, std::abs(nd - td[k]), std::abs(nw - tw[k]), std::abs(np - tp[k])});
                    td[k] = nd;
                    tw[k] = nw;
                    tp[k] = np;
                }
                if (change < 1e-12) break;
            }
            delta = td;
            dw = tw;
            pm = tp;
        }
        clamp_pm();
    }
    return res;
}

/// One CSV per run: `t_s` then every channel in result order.
inline std::string result_csv(const SimulationResult& r) {
    std::string out = "t_s";
    for (const auto& n : r.names) out += "," + n;
    out += "\n";
    for (std::size_t k = 0; k < r.time.size(); ++k) {
        out += csv::num(r.time[k]);
        for (const auto& d : r.data) out += "," + csv::num(d[k]);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spinning-reserve governor adjustment

struct UnitDispatch {
    double p_mw = 0.0;
    double mbase = 100.0;
};

struct ReserveAdjustment {
    std::vector<MachineDynamics> dyn;
    double headroom_before_mw = 0.0;
    double headroom_after_mw = 0.0;
    double scale = 1.0;
    bool shortfall = false;
    double shortfall_mw = 0.0;
};

inline std::map<std::string, UnitDispatch> dispatch_of(const NetworkCase& c, const PowerFlowSolution& s) {
    std::map<std::string, UnitDispatch> out;
    for (const auto& m : c.machines)
        if (m.in_service) {
            auto it = s.machines.find(m.id);
            out[m.id] = {it != s.machines.end() ? it->second.p_mw : m.p_mw, m.mbase};
        }
    return out;
}

/// Upward headroom (MW) of every enabled governor on a dispatched unit.
inline double responsive_headroom_mw(const std::vector<MachineDynamics>& dyn,
                                     const std::map<std::string, UnitDispatch>& dispatch) {
    double h = 0.0;
    for (const auto& m : dyn) {
        if (!m.governor || !m.governor->enabled) continue;
        auto it = dispatch.find(m.machine);
        if (it == dispatch.end()) continue;
        h += (m.governor->p_max - it->second.p_mw / it->second.mbase) * it->second.mbase;
    }
    return h;
}

/// Shrinks every responsive unit's headroom by one common factor so the
/// total equals the target; never raises a limit.
inline ReserveAdjustment adjust_governors_for_reserve(const std::vector<MachineDynamics>& dyn,
                                                      const std::map<std::string, UnitDispatch>& dispatch,
                                                      double target_mw) {
    if (!(target_mw >= 0.0)) throw DataError("reserve target must be >= 0");
    ReserveAdjustment out;
    out.dyn = dyn;
    out.headroom_before_mw = responsive_headroom_mw(dyn, dispatch);
    if (out.headroom_before_mw < 0.0) throw DataError("responsive headroom is negative");
    if (out.headroom_before_mw == 0.0 && target_mw > 0.0)
        throw DataError("no responsive headroom to carry a reserve target");
    if (out.headroom_before_mw < target_mw) {
        out.shortfall = true;
        out.shortfall_mw = target_mw - out.headroom_before_mw;
        out.headroom_after_mw = out.headroom_before_mw;
        return out;
    }
    out.scale = out.headroom_before_mw > 0.0 ? target_mw / out.headroom_before_mw : 1.0;
    if (out.scale < 1.0) {
        for (auto& m : out.dyn) {
            if (!m.governor || !m.governor->enabled) continue;
            auto it = dispatch.find(m.machine);
            if (it == dispatch.end()) continue;
            const double p = it->second.p_mw / it->second.mbase;
            m.governor->p_max = p + out.scale * (m.governor->p_max - p);
        }
    }
    out.headroom_after_mw = responsive_headroom_mw(out.dyn, dispatch);
    return out;
}

}  // namespace gridseam
