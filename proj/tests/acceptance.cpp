// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "gridseam/gridseam.hpp"
#include "ras_reference.hpp"

using namespace gridseam;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

struct Desk {
    NetworkCase smtl = load_case_file(fixtures::data("desk/desk_smtl.json"));
    std::vector<MachineDynamics> dyn = load_dynamics_file(fixtures::data("desk/dyn.json"));
    std::vector<ContingencyDef> defs = load_contingency_file(fixtures::data("desk/contingencies.json"));
    std::vector<RasSpec> ras = load_ras_file(fixtures::data("desk/ras.json"));
    NetworkCase detailed;
    Desk() {
        EquivalentLibrary lib(fixtures::data("equivalents"));
        detailed = swap_equivalent(smtl, "detailed", lib);
    }
    const ContingencyDef& def(const std::string& id) const {
        for (const auto& d : defs)
            if (d.id == id) return d;
        throw DataError("no contingency " + id);
    }
};

const Desk& desk() {
    static const Desk d;
    return d;
}

// The full desk suite, run once and shared by the staging and batch checks.
const BatchResult& desk_batch(unsigned jobs) {
    static std::map<unsigned, BatchResult> cache;
    auto it = cache.find(jobs);
    if (it != cache.end()) return it->second;
    BatchOptions o;
    o.jobs = jobs;
    o.keep_results = true;
    return cache[jobs] = run_batch(desk().smtl, desk().dyn, desk().defs, desk().ras, o);
}

// ---------------------------------------------------------------------------

Verdict two_bus_oracle() {
    // lossless line: P = V2 sin(-th2) / x, Q = 0  =>  V2^2 = (1 + sqrt(1 - 4 (P x)^2)) / 2
    const double px = 1.0 * 0.1;
    const double v2 = std::sqrt((1.0 + std::sqrt(1.0 - 4.0 * px * px)) / 2.0);
    const double th2 = -std::asin(px / v2);
    const auto c = fixtures::two_bus();
    const auto t0 = Clock::now();
    const auto s = solve_powerflow(c);
    const double ms = 1e3 * seconds_since(t0);
    const double ev = std::abs(s.v_of("B2") - v2), et = std::abs(s.theta_of("B2") - th2);
    return {s.converged && ev <= 1e-5 && et <= 1e-5 && ms < 10.0,
            "V2 " + fmt(s.v_of("B2"), 7) + " (oracle " + fmt(v2, 7) + "), th2 " + fmt(s.theta_of("B2"), 7) + " rad (oracle " +
                fmt(th2, 7) + "), " + fmt(ms, 3) + " ms"};
}

Verdict desk_convergence() {
    std::string detail;
    bool ok = true;
    for (const NetworkCase* c : {&desk().smtl, &desk().detailed}) {
        const auto s = solve_powerflow(*c);
        const double residual = std::abs(power_balance(*c, s).residual_mw()) / c->base_mva;
        const bool shape = c->buses.size() >= 18 && c->buses.size() <= 26 && c->areas.size() == 7 && c->merge &&
                           corridor_ids(c->merge->boundary).size() >= 1;
        ok = ok && s.converged && s.iterations <= 10 && s.max_mismatch <= 1e-8 && residual <= 1e-6 && shape;
        detail += c->merge->kind + ": " + std::to_string(s.iterations) + " it, mismatch " + fmt(s.max_mismatch, 3) +
                  " pu, balance " + fmt(residual, 3) + " pu, " + std::to_string(c->buses.size()) + " buses/" +
                  std::to_string(c->areas.size()) + " areas; ";
    }
    return {ok, detail + "1 corridor " + desk().smtl.merge->boundary.external_bus + "-" + desk().smtl.merge->boundary.host_bus};
}

Verdict flat_run() {
    const auto sol = solve_powerflow(desk().smtl);
    const auto st = init_dynamics(desk().smtl, sol, desk().dyn);
    SimulationOptions o;
    o.duration = 75.0;
    const auto t0 = Clock::now();
    const auto r = simulate(st, {}, {}, o);
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string where;
    for (std::size_t i = 0; i < r.names.size(); ++i)
        for (double x : r.data[i])
            if (std::abs(x - r.data[i][0]) > worst) {
                worst = std::abs(x - r.data[i][0]);
                where = r.names[i];
            }
    return {worst <= 1e-6 && secs < 5.0 && r.samples() == 18001,
            std::to_string(r.names.size()) + " channels x " + std::to_string(r.samples()) + " samples, max drift " +
                fmt(worst, 3) + (where.empty() ? "" : " (" + where + ")") + ", " + fmt(secs, 3) + " s"};
}

// Two governed 100 MVA units (R = 0.05) and an ungoverned 10 MW unit; the
// 10 MW unit trips.
struct DroopFixture {
    NetworkCase c;
    std::vector<MachineDynamics> dyn;
    DroopFixture() {
        c.id = "droop";
        c.areas = {{"A", "A"}};
        c.buses = {fixtures::bus("B1", BusKind::slack), fixtures::bus("B2", BusKind::pv), fixtures::bus("B3"),
                   fixtures::bus("B4", BusKind::pv)};
        c.branches = {fixtures::line("L13", "B1", "B3", 0.0, 0.02), fixtures::line("L23", "B2", "B3", 0.0, 0.02),
                      fixtures::line("L43", "B4", "B3", 0.0, 0.02)};
        c.machines = {fixtures::machine("G1", "B1", 0.0), fixtures::machine("G2", "B2", 70.0),
                      fixtures::machine("G3", "B4", 10.0)};
        c.loads = {fixtures::load("LD3", "B3", 150.0)};
        const GovernorParams gov{0.05, 0.5, 1.0, 0.0, true};
        dyn = {{"G1", 3.0, 0.0, 0.01, gov}, {"G2", 3.0, 0.0, 0.01, gov}, {"G3", 3.0, 0.0, 0.01, std::nullopt}};
    }
};

SimulationResult droop_run(double dt, double duration) {
    DroopFixture f;
    SimulationOptions o;
    o.dt = dt;
    o.duration = duration;
    return simulate(init_dynamics(f.c, solve_powerflow(f.c), f.dyn), {{1.0, EventAction::trip_machine, "G3"}}, {}, o);
}

Verdict droop_oracle() {
    const double oracle = -0.1 / (1.0 / 0.05 + 1.0 / 0.05) * 60.0;
    const double df = droop_run(1.0 / 240.0, 31.0).channel("F:B3").back() - 60.0;
    const double nadir = min_of(droop_run(1.0 / 240.0, 10.0).channel("F:B3"));
    const double halved = min_of(droop_run(1.0 / 480.0, 10.0).channel("F:B3"));
    const double rel = std::abs(df - oracle) / std::abs(oracle);
    return {rel <= 0.01 && std::abs(nadir - halved) < 0.005,
            "df " + fmt(df, 6) + " Hz vs " + fmt(oracle, 6) + " (" + fmt(100 * rel, 3) + "%), nadir " + fmt(nadir, 7) +
                " / halved step " + fmt(halved, 7) + " Hz"};
}

// ---------------------------------------------------------------------------
// RAS automata against brute-force references

using namespace ras_reference;

struct Entry {
    std::size_t step;
    std::vector<std::tuple<ActionKind, std::string, double>> actions;
    bool operator==(const Entry&) const = default;
};

std::vector<Entry> strip(const Log& log) {
    std::vector<Entry> out;
    for (const auto& [k, list] : log) {
        Entry e{k, {}};
        for (const auto& a : list) e.actions.emplace_back(a.kind, a.target, a.mw);
        out.push_back(e);
    }
    return out;
}

Entry trips(std::size_t k, const std::vector<std::string>& branches) {
    Entry e{k, {}};
    for (const auto& b : branches) e.actions.emplace_back(ActionKind::trip_branch, b, 0.0);
    return e;
}

struct KindTally {
    int mismatches = 0;
    int fired = 0;
};

KindTally transfer_trip_trials() {
    KindTally k;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = pick(10, 300);
        const auto t = grid(n, random_dt());
        const auto cp = random_runs(n), cv = random_runs(n);
        std::vector<double> p(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = cp[i] ? uniform(301.0, 500.0) : uniform(0.0, 300.0);
            v[i] = cv[i] ? uniform(0.5, 0.899) : uniform(0.9, 1.1);
        }
        const TransferTripConfig cfg{"TT", {}, 300.0, "B", 0.9, uniform(0.0, 0.6), uniform(0, 1) < 0.9, {"A", "B"}};
        TransferTripRas ras(cfg);
        Log got;
        for (std::size_t i = 0; i < n; ++i)
            if (auto a = ras.step(t[i], p[i], v[i])) got.emplace_back(i, *a);
        std::vector<bool> both(n);
        for (std::size_t i = 0; i < n; ++i) both[i] = p[i] > 300.0 && v[i] < 0.9;
        std::vector<Entry> want;
        if (auto hit = first_hold(t, both, cfg.pickup_s); hit && cfg.armed) want.push_back(trips(*hit, cfg.trip_branches));
        k.mismatches += strip(got) != want;
        k.fired += !want.empty();
    }
    return k;
}

KindTally directional_trials() {
    KindTally k;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = pick(10, 300);
        const auto t = grid(n, random_dt());
        const auto c = random_runs(n);
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = c[i] ? uniform(150.001, 400.0) : uniform(-400.0, 150.0);
        const DirectionalPowerConfig cfg{"D", {{"X", 1.0}}, 150.0, uniform(0.0, 0.6),
                                         {{ActionKind::shed_load, "L", 25.0, ""}, {ActionKind::trip_machine, "G", 0.0, ""}}, true};
        DirectionalPowerRas ras(cfg);
        Log got;
        for (std::size_t i = 0; i < n; ++i)
            if (auto a = ras.step(t[i], p[i])) got.emplace_back(i, *a);
        std::vector<bool> cond(n);
        for (std::size_t i = 0; i < n; ++i) cond[i] = p[i] > 150.0;
        std::vector<Entry> want;
        if (auto hit = first_hold(t, cond, cfg.pickup_s))
            want.push_back({*hit, {{ActionKind::shed_load, "L", 25.0}, {ActionKind::trip_machine, "G", 0.0}}});
        k.mismatches += strip(got) != want;
        k.fired += !want.empty();
    }
    return k;
}

KindTally oscillation_trials() {
    KindTally k;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = pick(20, 220);
        const auto t = grid(n, std::vector<double>{0.01, 0.02, 0.05}[pick(0, 2)]);
        const double f = uniform(0.3, 3.0), growth = uniform(-0.4, 0.3), amp = uniform(20.0, 200.0);
        const bool quantize = uniform(0, 1) < 0.3;
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = amp * std::exp(growth * t[i]) * std::sin(2 * std::numbers::pi * f * t[i]) + uniform(-5.0, 5.0);
            if (quantize) v = std::round(v / 25.0) * 25.0;
            p[i] = v;
        }
        const OscillationConfig cfg{"OSC", {}, uniform(30.0, 200.0), uniform(0.2, 1.5), uniform(0.5, 3.0), 0.98, true, {"T"}};
        OscillationRas ras(cfg);
        Log got;
        for (std::size_t i = 0; i < n; ++i)
            if (auto a = ras.step(t[i], p[i])) got.emplace_back(i, *a);
        std::vector<bool> cond(n);
        for (std::size_t i = 0; i < n; ++i) cond[i] = reference_oscillating(t, p, i, cfg);
        std::vector<Entry> want;
        if (auto hit = first_hold(t, cond, cfg.persist_s)) want.push_back(trips(*hit, cfg.trip_branches));
        k.mismatches += strip(got) != want;
        k.fired += !want.empty();
    }
    return k;
}

KindTally overload_trials() {
    KindTally k;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = pick(20, 400);
        const auto t = grid(n, random_dt());
        const auto c = random_runs(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = c[i] ? uniform(300.001, 400.0) : uniform(100.0, 300.0);
        OverloadShedConfig cfg;
        cfg.id = "OVL";
        cfg.branch = "NI";
        cfg.rating_mva = 300.0;
        cfg.stage1_delay_s = uniform(0.0, 0.8);
        cfg.shed_mw = uniform(50.0, 250.0);
        cfg.candidates = {{"G2", 60.0}, {"G1", 80.0}, {"G3", 60.0}};
        cfg.stage2_delay_s = uniform(0.0, 0.8);
        cfg.stage2_trip_branches = {"TIE"};
        OverloadShedRas ras(cfg);
        Log got;
        for (std::size_t i = 0; i < n; ++i)
            if (auto a = ras.step(t[i], s[i])) got.emplace_back(i, *a);

        // largest units first, ties by id, until the block is covered
        std::vector<std::pair<std::string, double>> order{{"G1", 80.0}, {"G2", 60.0}, {"G3", 60.0}};
        Entry shed{0, {}};
        double covered = 0.0;
        for (const auto& [id, mw] : order)
            if (covered < cfg.shed_mw - 1e-9) {
                shed.actions.emplace_back(ActionKind::trip_machine, id, mw);
                covered += mw;
            }
        std::vector<bool> over(n);
        for (std::size_t i = 0; i < n; ++i) over[i] = s[i] > 300.0;
        std::vector<Entry> want;
        if (auto k1 = first_hold(t, over, cfg.stage1_delay_s)) {
            shed.step = *k1;
            want.push_back(shed);
            for (std::size_t i = *k1 + 1; i < n && over[i]; ++i)
                if (t[i] - t[*k1] + 1e-9 >= cfg.stage2_delay_s) {
                    want.push_back(trips(i, {"TIE"}));
                    break;
                }
        }
        k.mismatches += strip(got) != want;
        k.fired += !want.empty();
    }
    return k;
}

KindTally distance_trials() {
    KindTally k;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = pick(10, 200);
        const auto t = grid(n, random_dt());
        const double reach = uniform(0.02, 1.0), angle = uniform(0.5, 1.5);
        const auto c = random_runs(n);
        std::vector<Complex> v(n), i(n);
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = std::polar(uniform(0.0, 1.1), uniform(-3.0, 3.0));
            const Complex z = c[j] ? std::polar(uniform(0.0, 0.95) * reach * 0.9, angle + uniform(-0.3, 0.3))
                                   : std::polar(uniform(1.2, 5.0) * reach, uniform(-3.0, 3.0));
            i[j] = uniform(0, 1) < 0.05 ? Complex(0.0, 0.0) : v[j] / z;
        }
        DistanceRelay relay({"Z", "L", true, {reach, angle, uniform(0.0, 0.4)}, true});
        Log got;
        for (std::size_t j = 0; j < n; ++j)
            if (auto a = relay.step(t[j], v[j], i[j])) got.emplace_back(j, *a);
        std::vector<bool> inside(n);
        for (std::size_t j = 0; j < n; ++j) inside[j] = std::abs(i[j]) > 1e-6 && reference_mho(v[j] / i[j], reach, angle);
        std::vector<Entry> want;
        if (auto hit = first_hold(t, inside, relay.config().zone.timer)) want.push_back(trips(*hit, {"L"}));
        k.mismatches += strip(got) != want;
        k.fired += !want.empty();
    }
    return k;
}

Verdict ras_equivalence() {
    const std::vector<std::pair<std::string, std::function<KindTally()>>> kinds{
        {"transfer_trip", transfer_trip_trials}, {"oscillation", oscillation_trials}, {"overload_shed", overload_trials},
        {"directional_power", directional_trials}, {"distance", distance_trials}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, run] : kinds) {
        const auto tally = run();
        // a reference that never or always fires would prove little
        ok = ok && tally.mismatches == 0 && tally.fired > 50 && tally.fired < 1000;
        detail += name + " " + std::to_string(tally.mismatches) + "/1000 mismatches (" + std::to_string(tally.fired) +
                  " fired); ";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------

Verdict staging_order() {
    const auto& d = desk();
    const auto& b = desk_batch(8);
    const Branch* ni = d.smtl.find_series("NI");
    int acted = 0, cleared = 0, ties = 0;
    bool ok = true;
    for (std::size_t i = 0; i < b.results.size(); ++i) {
        if (!b.results[i]) continue;
        const auto& r = *b.results[i];
        std::vector<const RasLogEntry*> sheds, tie_trips;
        for (const auto& e : r.ras_log) {
            if (e.ras_id != "NI-OVL") continue;
            (e.action.rfind("trip_machine", 0) == 0 ? sheds : tie_trips).push_back(&e);
        }
        if (sheds.empty() && tie_trips.empty()) continue;
        ++acted;
        if (sheds.empty()) {
            ok = false;
            continue;
        }
        for (const auto* tie : tie_trips)
            for (const auto* s : sheds) ok = ok && s->t < tie->t;
        ties += !tie_trips.empty();
        // did the overload drop out after shedding, before the stage-2 delay ran out?
        const auto& p = r.channel(flow_channel('P', *ni));
        const auto& q = r.channel(flow_channel('Q', *ni));
        const auto k1 = static_cast<std::size_t>(std::llround(sheds.front()->t_detect / r.dt));
        const auto k2 = std::min(p.size() - 1, k1 + static_cast<std::size_t>(std::llround(2.0 / r.dt)));
        bool dropped = false;
        for (std::size_t k = k1 + 1; k <= k2 && !dropped; ++k) dropped = std::hypot(p[k], q[k]) <= ni->rating;
        if (dropped) {
            ++cleared;
            ok = ok && tie_trips.empty();
        }
    }
    return {ok && acted > 0, "scheme acted in " + std::to_string(acted) + " of " + std::to_string(b.summaries.size()) +
                                 " runs, overload cleared after stage 1 in " + std::to_string(cleared) + ", tie trips " +
                                 std::to_string(ties)};
}

Verdict suite_structure() {
    const auto& d = desk();
    const auto groups = group_by_label(d.defs);
    std::string g;
    for (const auto& [label, n] : groups) g += label + "=" + std::to_string(n) + " ";
    const std::vector<std::pair<std::string, int>> expected{{"MEX", 4}, {"GUA", 10}, {"PAN", 2}, {"SLV", 1}};
    const auto& serial = desk_batch(1);
    const auto& parallel = desk_batch(8);
    bool same = summary_csv(serial.summaries) == summary_csv(parallel.summaries) &&
                serial.results.size() == parallel.results.size();
    for (std::size_t i = 0; same && i < serial.results.size(); ++i) same = serial.results[i] == parallel.results[i];
    return {d.defs.size() == 17 && groups == expected && same,
            std::to_string(d.defs.size()) + " definitions, " + g + "; jobs 1 vs 8 " + (same ? "identical" : "DIFFERENT")};
}

Verdict equivalent_contrast() {
    const auto& d = desk();
    std::vector<ContingencyDef> faults;
    for (const char* id : {"GUA-F1", "GUA-F2", "GUA-F3", "GUA-F4"}) faults.push_back(d.def(id));
    BatchOptions o;
    o.sim.duration = 10.0;
    o.jobs = 4;
    o.keep_results = true;
    const auto a = run_batch(d.smtl, d.dyn, faults, d.ras, o);
    const auto b = run_batch(d.detailed, d.dyn, faults, d.ras, o);
    const std::string ext = d.smtl.merge->boundary.external_bus, host = d.smtl.merge->boundary.host_bus;
    auto dip = [&](const SimulationResult& r) { return std::abs(1.0 - min_of(r.channel("V:" + ext))); };
    auto dev = [&](const SimulationResult& r) {
        double m = 0.0;
        for (const auto& bus : {ext, host})
            for (double f : r.channel("F:" + bus)) m = std::max(m, std::abs(f - r.f_nom));
        return m;
    };
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < faults.size(); ++i) {
        if (!a.results[i] || !b.results[i]) return {false, faults[i].id + " did not resolve"};
        const double va = dip(*a.results[i]), vb = dip(*b.results[i]);
        const double fa = dev(*a.results[i]), fb = dev(*b.results[i]);
        ok = ok && vb < va && fb <= fa;
        detail += faults[i].id + " dV " + fmt(vb, 3) + "<" + fmt(va, 3) + " dF " + fmt(fb, 3) + "<=" + fmt(fa, 3) + "; ";
    }
    return {ok, "detailed vs smtl at " + ext + "/" + host + ": " + detail};
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Verdict self_consistency() {
    const fs::path tmp = fs::temp_directory_path() / "gridseam_acceptance_replay";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string common = std::string(" --case ") + quote(fixtures::data("desk/desk_smtl.json")) + " --dyn " +
                               quote(fixtures::data("desk/dyn.json")) + " --ras " + quote(fixtures::data("desk/ras.json")) +
                               " --contingencies " + quote(fixtures::data("desk/contingencies.json")) +
                               " --contingency GUA-G1 --duration 12";
    const std::string cli = quote(GRIDSEAM_CLI);
    const std::string quiet = " > " + quote((tmp / "log.txt").string()) + " 2>&1";
    if (std::system((cli + " simulate" + common + " --export-measurements --out " + quote((tmp / "sim").string()) + quiet).c_str()) != 0)
        return {false, "simulate failed"};
    if (std::system((cli + " validate-event" + common + " --measurements " + quote((tmp / "sim" / "measurements.csv").string()) +
                     " --mapping " + quote((tmp / "sim" / "mapping.json").string()) + " --out " +
                     quote((tmp / "val").string()) + quiet)
                        .c_str()) != 0)
        return {false, "validate-event failed"};
    const auto report = jsonu::parse_file((tmp / "val" / "report.json").string());
    std::size_t channels = 0, graded_a = 0, nonzero = 0;
    for (const auto& ch : report["channels"]) {
        ++channels;
        graded_a += ch["grade"] == "A";
        for (const char* key : {"max_error", "max_time_error_s", "min_error", "min_time_error_s", "extremum_error",
                                "extremum_time_error_s", "steady_offset", "rmse"})
            nonzero += ch[key].get<double>() != 0.0;
    }
    const std::size_t hints = report["diagnostics"].size();
    fs::remove_all(tmp);
    return {channels > 0 && graded_a == channels && nonzero == 0 && hints == 0,
            std::to_string(channels) + " channels, " + std::to_string(graded_a) + " grade A, " + std::to_string(nonzero) +
                " nonzero metrics, " + std::to_string(hints) + " diagnostics"};
}

Verdict oscillation_detector() {
    const double dt = 1.0 / 240.0;
    bool ok = true;
    std::string detail;
    double worst_lag = 0.0;
    for (double f : {0.25, 0.5, 1.0, 2.0})
        for (double amp : {120.0, 300.0}) {
            OscillationRas r({"OSC", {}, 200.0, 5.0, 10.0, 0.98, true, {"T"}});
            std::optional<double> t_trip;
            for (std::size_t k = 0; k < 75 * 240 && !t_trip; ++k)
                if (r.step(k * dt, 150.0 + amp * std::sin(2 * std::numbers::pi * f * k * dt))) t_trip = k * dt;
            // time from the first moment the condition could hold to the trip
            ok = ok && t_trip && *t_trip <= 5.0 + 2.0 / f;
            if (t_trip) worst_lag = std::max(worst_lag, (*t_trip - 5.0) * f);
        }
    detail += "undamped: worst trip at persist + " + fmt(worst_lag, 3) + " periods; ";
    int damped_trips = 0;
    for (double f : {0.2, 0.5, 1.0, 2.0})
        for (double ratio : {0.95, 0.9, 0.7, 0.5}) {
            const double sigma = -std::log(ratio) * f;
            OscillationRas r({"OSC", {}, 10.0, 5.0, 10.0, 0.98, true, {"T"}});
            for (std::size_t k = 0; k < 75 * 240; ++k) {
                const double t = k * dt;
                if (r.step(t, 150.0 + 400.0 * std::exp(-sigma * t) * std::sin(2 * std::numbers::pi * f * t))) ++damped_trips;
            }
        }
    ok = ok && damped_trips == 0;
    return {ok, detail + "damped (ratio <= 0.95): " + std::to_string(damped_trips) + " trips over 75 s"};
}

Verdict impedance_replay() {
    const auto& d = desk();
    const auto& def = d.def("GUA-F4");
    BatchOptions o;
    o.sim.duration = 3.0;
    o.keep_results = true;
    // replay the recorded trajectory, not the relay's own decision
    std::vector<RasSpec> none;
    const auto b = run_batch(d.smtl, d.dyn, {def}, none, o);
    if (!b.results[0]) return {false, "GUA-F4 did not resolve"};
    const auto& r = *b.results[0];
    const Branch* line = d.smtl.find_series("GUA1-GUA4");
    const auto& v = r.channel("V:" + line->from);
    const auto& p = r.channel(flow_channel('P', *line));
    const auto& q = r.channel(flow_channel('Q', *line));
    const MhoZone zone{0.065, 84.29 * std::numbers::pi / 180.0, 0.3};
    double t_fault = 0.0, t_clear = 0.0;
    for (const auto& e : def.events) {
        if (e.action == EventAction::apply_fault) t_fault = e.t;
        if (e.action == EventAction::clear_fault) t_clear = e.t;
    }
    std::optional<std::size_t> enter, exit;
    for (std::size_t k = 0; k < r.samples(); ++k) {
        const Complex s(p[k] / d.smtl.base_mva, q[k] / d.smtl.base_mva);
        const bool inside = std::abs(s) > 1e-9 && mho_zone_check(v[k] * v[k] / std::conj(s), zone);
        if (inside && !enter) enter = k;
        if (!inside && enter && !exit) exit = k;
    }
    const auto kf = static_cast<long>(std::llround(t_fault / r.dt)), kc = static_cast<long>(std::llround(t_clear / r.dt));
    const bool ok = enter && exit && std::labs(static_cast<long>(*enter) - kf) <= 2 && std::labs(static_cast<long>(*exit) - kc) <= 2;
    return {ok, "relay GUA1-GUA4 at " + line->from + ": enters at step " + (enter ? std::to_string(*enter) : "never") +
                    " (fault step " + std::to_string(kf) + "), exits at step " + (exit ? std::to_string(*exit) : "never") +
                    " (clear step " + std::to_string(kc) + ")"};
}

// Two governed 1000 MVA units with damping carry 1300 MW; an ungoverned
// 300 MW unit trips. Above 240 MW of reserve the droop response covers the
// loss; below it the governors saturate and damping sets the deviation.
Verdict reserve_adjustment() {
    NetworkCase c;
    c.id = "reserve";
    c.areas = {{"A", "A"}};
    c.buses = {fixtures::bus("B1", BusKind::slack), fixtures::bus("B2", BusKind::pv), fixtures::bus("B3"),
               fixtures::bus("B4", BusKind::pv)};
    c.branches = {fixtures::line("L13", "B1", "B3", 0.0, 0.02), fixtures::line("L23", "B2", "B3", 0.0, 0.02),
                  fixtures::line("L43", "B4", "B3", 0.0, 0.02)};
    c.machines = {fixtures::machine("G1", "B1", 0.0, 1000.0), fixtures::machine("G2", "B2", 500.0, 1000.0),
                  fixtures::machine("G3", "B4", 300.0, 1000.0)};
    c.loads = {fixtures::load("LD3", "B3", 1300.0)};
    const GovernorParams gov{0.05, 0.5, 0.9, 0.0, true};
    const std::vector<MachineDynamics> dyn{{"G1", 4.0, 4.0, 0.002, gov}, {"G2", 4.0, 4.0, 0.002, gov},
                                           {"G3", 4.0, 4.0, 0.002, std::nullopt}};
    const auto sol = solve_powerflow(c);
    const auto dispatch = dispatch_of(c, sol);
    bool ok = true;
    std::string detail = "headroom " + fmt(responsive_headroom_mw(dyn, dispatch), 6) + " MW; ";
    double last = -1.0;
    for (double target : {400.0, 200.0, 100.0}) {
        const auto adj = adjust_governors_for_reserve(dyn, dispatch, target);
        const double miss = std::abs(adj.headroom_after_mw - target);
        SimulationOptions o;
        o.duration = 40.0;
        const auto r = simulate(init_dynamics(c, sol, adj.dyn), {{1.0, EventAction::trip_machine, "G3"}}, {}, o);
        const double df = std::abs(r.channel("F:B3").back() - r.f_nom);
        ok = ok && !adj.shortfall && miss <= 1e-6 && df > last;
        last = df;
        detail += fmt(target, 4) + " MW: miss " + fmt(miss, 2) + ", |df| " + fmt(df, 5) + " Hz; ";
    }
    return {ok, detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"two-bus analytic power flow", two_bus_oracle},
        {"desk case convergence and balance", desk_convergence},
        {"75 s flat run", flat_run},
        {"droop steady state and step halving", droop_oracle},
        {"RAS automata vs references", ras_equivalence},
        {"overload staging order", staging_order},
        {"contingency suite and batch determinism", suite_structure},
        {"equivalent contrast", equivalent_contrast},
        {"self-consistency validation", self_consistency},
        {"oscillation detector", oscillation_detector},
        {"impedance replay", impedance_replay},
        {"reserve adjustment", reserve_adjustment},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += !v.pass;
        while (v.detail.ends_with(' ') || v.detail.ends_with(';')) v.detail.pop_back();
        std::cout << "criterion " << (i + 1) << " " << (v.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
                  << v.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
