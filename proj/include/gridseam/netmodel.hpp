#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gridseam {

using Complex = std::complex<double>;

enum class BusKind { slack, pv, pq };

struct Area {
    std::string id;
    std::string name;
    bool operator==(const Area&) const = default;
};

struct Bus {
    std::string id;
    std::string name;
    std::string area;
    double base_kv = 0.0;
    BusKind kind = BusKind::pq;
    std::optional<double> v_set;  // pu, slack and pv buses only
    bool in_service = true;
    bool operator==(const Bus&) const = default;
};

/// Series element in pi-model form; impedances in pu on the system base.
struct Branch {
    std::string id;
    std::string from;
    std::string to;
    std::string circuit = "1";
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;  // total line charging
    double rating = 0.0;  // MVA, 0 means unrated
    bool in_service = true;
    bool operator==(const Branch&) const = default;
};

/// Two-winding transformer; the off-nominal tap sits on the from side.
struct Transformer : Branch {
    double tap = 1.0;
    bool operator==(const Transformer&) const = default;
};

struct Machine {
    std::string id;
    std::string bus;
    double p_mw = 0.0;
    double q_mvar = 0.0;
    double q_min = -9999.0;
    double q_max = 9999.0;
    double mbase = 100.0;
    bool in_service = true;
    bool operator==(const Machine&) const = default;
};

struct Load {
    std::string id;
    std::string bus;
    double p_mw = 0.0;
    double q_mvar = 0.0;
    bool in_service = true;
    std::optional<double> sheddable_mw;
    bool operator==(const Load&) const = default;
};

/// Corridor joining an external-area equivalent to the host network.
/// Lives here (not in merge.hpp) because a merged case carries it so the
/// equivalent can later be swapped.
struct BoundarySpec {
    std::string host_bus;
    std::string external_bus;
    std::optional<Branch> interconnection;
    std::vector<Transformer> transformers;
    double scheduled_mw = 0.0;  // positive = external -> host
    bool operator==(const BoundarySpec&) const = default;
};

struct MergeInfo {
    std::string external_area;
    std::string kind;  // library key of the equivalent currently merged
    BoundarySpec boundary;
    bool operator==(const MergeInfo&) const = default;
};

struct NetworkCase {
    std::string id;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Transformer> transformers;
    std::vector<Machine> machines;
    std::vector<Load> loads;
    std::vector<Area> areas;
    std::optional<MergeInfo> merge;

    bool operator==(const NetworkCase&) const = default;

    const Bus* find_bus(const std::string& bus_id) const {
        for (const auto& b : buses)
            if (b.id == bus_id) return &b;
        return nullptr;
    }
    Bus* find_bus(const std::string& bus_id) {
        return const_cast<Bus*>(std::as_const(*this).find_bus(bus_id));
    }
    /// Lines first, then transformers; nullptr when absent.
    const Branch* find_series(const std::string& element_id) const {
        for (const auto& b : branches)
            if (b.id == element_id) return &b;
        for (const auto& t : transformers)
            if (t.id == element_id) return &t;
        return nullptr;
    }
    const Machine* find_machine(const std::string& machine_id) const {
        for (const auto& m : machines)
            if (m.id == machine_id) return &m;
        return nullptr;
    }
    const Load* find_load(const std::string& load_id) const {
        for (const auto& l : loads)
            if (l.id == load_id) return &l;
        return nullptr;
    }
};

/// View over every series element with its tap (1 for lines).
struct SeriesRef {
    const Branch* element;
    double tap;
    bool transformer;
};

inline std::vector<SeriesRef> series_elements(const NetworkCase& c) {
    std::vector<SeriesRef> out;
    out.reserve(c.branches.size() + c.transformers.size());
    for (const auto& b : c.branches) out.push_back({&b, 1.0, false});
    for (const auto& t : c.transformers) out.push_back({&t, t.tap, true});
    return out;
}

inline std::string to_string(BusKind k) {
    switch (k) {
        case BusKind::slack: return "slack";
        case BusKind::pv: return "pv";
        case BusKind::pq: return "pq";
    }
    return "pq";
}

// ---------------------------------------------------------------------------
// Connectivity

/// Island label per bus (index into case.buses), -1 for out-of-service buses.
struct Islands {
    std::vector<int> label;
    int count = 0;
};

inline Islands find_islands(const NetworkCase& c) {
    const std::size_t n = c.buses.size();
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx.emplace(c.buses[i].id, i);

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (const auto& s : series_elements(c)) {
        if (!s.element->in_service) continue;
        auto f = idx.find(s.element->from);
        auto t = idx.find(s.element->to);
        if (f == idx.end() || t == idx.end()) continue;
        if (!c.buses[f->second].in_service || !c.buses[t->second].in_service) continue;
        parent[root(f->second)] = root(t->second);
    }
    Islands out;
    out.label.assign(n, -1);
    std::map<std::size_t, int> root_label;
    for (std::size_t i = 0; i < n; ++i) {
        if (!c.buses[i].in_service) continue;
        auto [it, inserted] = root_label.emplace(root(i), out.count);
        if (inserted) ++out.count;
        out.label[i] = it->second;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string code;
    std::string element;
    std::string message;
    bool operator==(const Violation&) const = default;
};

inline std::vector<Violation> validate_case(const NetworkCase& c) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string element, std::string message) {
        out.push_back({std::move(code), std::move(element), std::move(message)});
    };

    if (!(c.base_mva > 0.0)) add("base_mva", "case", "base_mva must be positive");

    std::set<std::string> area_ids;
    for (const auto& a : c.areas)
        if (!area_ids.insert(a.id).second) add("duplicate_id", a.id, "duplicate area id " + a.id);

    std::set<std::string> bus_ids;
    for (const auto& b : c.buses) {
        if (!bus_ids.insert(b.id).second) add("duplicate_id", b.id, "duplicate bus id " + b.id);
        if (!(b.base_kv > 0.0)) add("base_kv", b.id, "bus " + b.id + " base_kv must be positive");
        if (b.v_set && (*b.v_set < 0.5 || *b.v_set > 1.5))
            add("v_set", b.id, "bus " + b.id + " v_set outside [0.5, 1.5]");
        if (b.kind != BusKind::pq && !b.v_set)
            add("v_set", b.id, "bus " + b.id + " is " + to_string(b.kind) + " without v_set");
        if (!area_ids.empty() && !b.area.empty() && !area_ids.count(b.area))
            add("dangling_ref", b.id, "bus " + b.id + " references unknown area " + b.area);
    }

    std::set<std::string> series_ids;
    std::set<std::array<std::string, 3>> parallel_keys;
    for (const auto& s : series_elements(c)) {
        const Branch& br = *s.element;
        if (!series_ids.insert(br.id).second) add("duplicate_id", br.id, "duplicate branch id " + br.id);
        for (const auto* end : {&br.from, &br.to})
            if (!bus_ids.count(*end))
                add("dangling_ref", br.id, "branch " + br.id + " references unknown bus " + *end);
        if (br.from == br.to) add("self_loop", br.id, "branch " + br.id + " has from == to");
        if (br.x == 0.0) add("zero_x", br.id, "branch " + br.id + " has x = 0");
        if (br.rating < 0.0) add("rating", br.id, "branch " + br.id + " has negative rating");
        if (s.transformer && (s.tap < 0.8 || s.tap > 1.2))
            add("tap", br.id, "transformer " + br.id + " tap outside [0.8, 1.2]");
        auto lo = std::min(br.from, br.to), hi = std::max(br.from, br.to);
        if (!parallel_keys.insert({lo, hi, br.circuit}).second)
            add("duplicate_circuit", br.id,
                "branch " + br.id + " repeats circuit " + br.circuit + " between " + lo + " and " + hi);
    }

    std::set<std::string> machine_ids;
    for (const auto& m : c.machines) {
        if (!machine_ids.insert(m.id).second) add("duplicate_id", m.id, "duplicate machine id " + m.id);
        if (!bus_ids.count(m.bus)) add("dangling_ref", m.id, "machine " + m.id + " references unknown bus " + m.bus);
        if (m.q_min > m.q_max) add("q_limits", m.id, "machine " + m.id + " has q_min > q_max");
        if (!(m.mbase > 0.0)) add("mbase", m.id, "machine " + m.id + " mbase must be positive");
    }
    std::set<std::string> load_ids;
    for (const auto& l : c.loads) {
        if (!load_ids.insert(l.id).second) add("duplicate_id", l.id, "duplicate load id " + l.id);
        if (!bus_ids.count(l.bus)) add("dangling_ref", l.id, "load " + l.id + " references unknown bus " + l.bus);
    }

    // Slack count per island only makes sense once bus ids are unique.
    if (bus_ids.size() == c.buses.size()) {
        const Islands isl = find_islands(c);
        std::vector<std::vector<std::string>> slacks(static_cast<std::size_t>(isl.count));
        for (std::size_t i = 0; i < c.buses.size(); ++i)
            if (isl.label[i] >= 0 && c.buses[i].kind == BusKind::slack)
                slacks[static_cast<std::size_t>(isl.label[i])].push_back(c.buses[i].id);
        for (std::size_t k = 0; k < slacks.size(); ++k) {
            if (slacks[k].size() > 1) {
                std::string names;
                for (const auto& s : slacks[k]) names += (names.empty() ? "" : ",") + s;
                add("multiple_slack", names, "multiple slack buses in one island: " + names);
            } else if (slacks[k].empty()) {
                std::string first;
                for (std::size_t i = 0; i < c.buses.size(); ++i)
                    if (isl.label[i] == static_cast<int>(k)) { first = c.buses[i].id; break; }
                add("no_slack", first, "island containing bus " + first + " has no slack bus");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Admittance matrix

/// 2x2 pi-model stamp [[Yff, Yft], [Ytf, Ytt]].
inline std::array<Complex, 4> pi_stamp(const Branch& br, double tap) {
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex ysh(0.0, br.b / 2.0);
    return {(ys + ysh) / (tap * tap), -ys / tap, -ys / tap, ys + ysh};
}

struct AdmittanceMatrix {
    std::vector<std::string> bus_ids;  // in-service buses, case order
    std::unordered_map<std::string, int> index;
    Eigen::SparseMatrix<Complex> y;

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(y); }
    Complex at(const std::string& a, const std::string& b) const {
        return y.coeff(index.at(a), index.at(b));
    }
};

/// Position of every in-service bus in a matrix built from this case.
inline std::pair<std::vector<std::string>, std::unordered_map<std::string, int>> bus_indexing(
    const NetworkCase& c) {
    std::vector<std::string> ids;
    std::unordered_map<std::string, int> index;
    for (const auto& b : c.buses) {
        if (!b.in_service) continue;
        index.emplace(b.id, static_cast<int>(ids.size()));
        ids.push_back(b.id);
    }
    return {std::move(ids), std::move(index)};
}

inline AdmittanceMatrix build_ybus(const NetworkCase& c) {
    AdmittanceMatrix out;
    std::tie(out.bus_ids, out.index) = bus_indexing(c);
    const int n = static_cast<int>(out.bus_ids.size());
    std::vector<Eigen::Triplet<Complex>> trips;
    for (const auto& s : series_elements(c)) {
        const Branch& br = *s.element;
        if (!br.in_service) continue;
        auto f = out.index.find(br.from);
        auto t = out.index.find(br.to);
        if (f == out.index.end() || t == out.index.end()) continue;
        const auto st = pi_stamp(br, s.tap);
        trips.emplace_back(f->second, f->second, st[0]);
        trips.emplace_back(f->second, t->second, st[1]);
        trips.emplace_back(t->second, f->second, st[2]);
        trips.emplace_back(t->second, t->second, st[3]);
    }
    out.y.resize(n, n);
    out.y.setFromTriplets(trips.begin(), trips.end());
    out.y.makeCompressed();
    return out;
}

}  // namespace gridseam
