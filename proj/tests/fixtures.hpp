#pragma once

#include <string>

#include "gridseam/case_io.hpp"
#include "gridseam/netmodel.hpp"

namespace fixtures {

inline std::string data(const std::string& rel) { return std::string(GRIDSEAM_DATA_DIR) + "/" + rel; }

inline gridseam::Bus bus(std::string id, gridseam::BusKind kind = gridseam::BusKind::pq, double v_set = 1.0,
                         std::string area = "A") {
    gridseam::Bus b;
    b.id = id;
    b.name = id;
    b.area = std::move(area);
    b.base_kv = 230.0;
    b.kind = kind;
    if (kind != gridseam::BusKind::pq) b.v_set = v_set;
    return b;
}

inline gridseam::Branch line(std::string id, std::string from, std::string to, double r, double x, double b = 0.0,
                             std::string ckt = "1") {
    gridseam::Branch br;
    br.id = std::move(id);
    br.from = std::move(from);
    br.to = std::move(to);
    br.circuit = std::move(ckt);
    br.r = r;
    br.x = x;
    br.b = b;
    br.rating = 500.0;
    return br;
}

inline gridseam::Machine machine(std::string id, std::string bus, double p_mw, double mbase = 100.0) {
    gridseam::Machine m;
    m.id = std::move(id);
    m.bus = std::move(bus);
    m.p_mw = p_mw;
    m.mbase = mbase;
    return m;
}

inline gridseam::Load load(std::string id, std::string bus, double p_mw, double q_mvar = 0.0) {
    gridseam::Load l;
    l.id = std::move(id);
    l.bus = std::move(bus);
    l.p_mw = p_mw;
    l.q_mvar = q_mvar;
    return l;
}

/// Slack B1 feeding a 100 MW unity-pf load at B2 over a lossless x = 0.1 line.
inline gridseam::NetworkCase two_bus() {
    gridseam::NetworkCase c;
    c.id = "twobus";
    c.base_mva = 100.0;
    c.areas = {{"A", "Area A"}};
    c.buses = {bus("B1", gridseam::BusKind::slack), bus("B2")};
    c.branches = {line("L12", "B1", "B2", 0.0, 0.1)};
    c.machines = {machine("G1", "B1", 0.0)};
    c.loads = {load("LD2", "B2", 100.0)};
    return c;
}

}  // namespace fixtures

#include <random>

namespace fixtures {

/// Connected random case: a spanning chain plus a few extra parallel or
/// meshing elements, one slack, assorted machines and loads.
inline gridseam::NetworkCase random_case(std::mt19937_64& rng, int n_buses) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    gridseam::NetworkCase c;
    c.id = "random";
    c.base_mva = 100.0;
    c.areas = {{"A", "Area A"}, {"B", "Area B"}};
    for (int i = 0; i < n_buses; ++i) {
        auto kind = i == 0 ? gridseam::BusKind::slack : (u(rng) < 0.3 ? gridseam::BusKind::pv : gridseam::BusKind::pq);
        auto b = bus("N" + std::to_string(i), kind, 0.98 + 0.06 * u(rng), u(rng) < 0.5 ? "A" : "B");
        b.base_kv = u(rng) < 0.5 ? 230.0 : 400.0;
        c.buses.push_back(b);
    }
    int k = 0;
    for (int i = 1; i < n_buses; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        c.branches.push_back(line("E" + std::to_string(k++), "N" + std::to_string(pick(rng)), "N" + std::to_string(i),
                                  0.002 + 0.01 * u(rng), 0.02 + 0.1 * u(rng), 0.1 * u(rng)));
    }
    for (int extra = 0; extra < n_buses / 2; ++extra) {
        std::uniform_int_distribution<int> pick(0, n_buses - 1);
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        gridseam::Transformer t;
        const std::string tid = "T" + std::to_string(k++);
        static_cast<gridseam::Branch&>(t) =
            line(tid, "N" + std::to_string(a), "N" + std::to_string(b), 0.001, 0.05 + 0.05 * u(rng), 0.0, tid);
        t.tap = 0.95 + 0.1 * u(rng);
        c.transformers.push_back(t);
    }
    for (int i = 0; i < n_buses; ++i) {
        if (c.buses[static_cast<std::size_t>(i)].kind != gridseam::BusKind::pq)
            c.machines.push_back(machine("G" + std::to_string(i), "N" + std::to_string(i), 50.0 + 100.0 * u(rng), 200.0));
        else if (u(rng) < 0.8)
            c.loads.push_back(load("L" + std::to_string(i), "N" + std::to_string(i), 20.0 + 60.0 * u(rng), 10.0 * u(rng)));
    }
    return c;
}

}  // namespace fixtures
