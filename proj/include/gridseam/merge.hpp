#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridseam/case_io.hpp"
#include "gridseam/error.hpp"
#include "gridseam/netmodel.hpp"
#include "gridseam/powerflow.hpp"

namespace gridseam {

/// Parameters of a Single Machine Two Load equivalent: everything external
/// concentrated at one bus.
struct SmtlParams {
    std::string bus = "MEX-1";
    std::string area = "MEX";
    std::string area_name = "Mexico";
    double base_kv = 400.0;
    double v_set = 1.0;
    std::string machine_id = "MEX-G1";
    double machine_mw = 0.0;
    double machine_mbase = 100.0;
    double q_min = -9999.0;
    double q_max = 9999.0;
    double load_a_mw = 0.0, load_a_mvar = 0.0;
    double load_b_mw = 0.0, load_b_mvar = 0.0;
    double base_mva = 100.0;
};

inline NetworkCase build_smtl_equivalent(const SmtlParams& p) {
    NetworkCase c;
    c.id = "smtl";
    c.base_mva = p.base_mva;
    c.areas = {{p.area, p.area_name}};
    Bus b;
    b.id = p.bus;
    b.name = p.bus;
    b.area = p.area;
    b.base_kv = p.base_kv;
    b.kind = BusKind::slack;
    b.v_set = p.v_set;
    c.buses.push_back(b);
    Machine m;
    m.id = p.machine_id;
    m.bus = p.bus;
    m.p_mw = p.machine_mw;
    m.mbase = p.machine_mbase;
    m.q_min = p.q_min;
    m.q_max = p.q_max;
    c.machines.push_back(m);
    c.loads.push_back(Load{p.bus + "-LA", p.bus, p.load_a_mw, p.load_a_mvar, true, std::nullopt});
    c.loads.push_back(Load{p.bus + "-LB", p.bus, p.load_b_mw, p.load_b_mvar, true, std::nullopt});
    return c;
}

/// Net active export of a stand-alone fragment at its dispatch (MW).
inline double net_export_mw(const NetworkCase& c) {
    double net = 0.0;
    for (const auto& m : c.machines)
        if (m.in_service) net += m.p_mw;
    for (const auto& l : c.loads)
        if (l.in_service) net -= l.p_mw;
    return net;
}

/// Ids of the corridor elements a merge adds, in the order they are appended.
inline std::vector<std::string> corridor_ids(const BoundarySpec& b) {
    std::vector<std::string> ids;
    if (b.interconnection) ids.push_back(b.interconnection->id);
    for (const auto& t : b.transformers) ids.push_back(t.id);
    return ids;
}

namespace detail {

inline void require_valid(const NetworkCase& c, const std::string& what) {
    const auto v = validate_case(c);
    if (v.empty()) return;
    std::string msg = "merge: " + what + " case is invalid:";
    for (const auto& x : v) msg += " [" + x.message + "]";
    throw DataError(msg);
}

}  // namespace detail

/// Joins an external-area equivalent to a host case through the boundary
/// corridor. Neither input is modified. The external slack is demoted to PV
/// with its dispatch taken from a stand-alone solve that exports the
/// scheduled interchange, so the host slack stays the system reference.
inline NetworkCase merge_cases(const NetworkCase& host, const NetworkCase& external, const BoundarySpec& boundary,
                               const std::string& kind = "custom") {
    if (host.merge) throw DataError("merge: host case already contains a merged equivalent");
    detail::require_valid(host, "host");
    detail::require_valid(external, "external");

    if (!host.find_bus(boundary.host_bus)) throw DataError("merge: boundary host bus '" + boundary.host_bus + "' not in host case");
    const Bus* ext_bus = external.find_bus(boundary.external_bus);
    if (!ext_bus) throw DataError("merge: boundary external bus '" + boundary.external_bus + "' not in external case");
    if (!boundary.interconnection && boundary.transformers.empty())
        throw DataError("merge: boundary has no connecting element");

    const std::string area = ext_bus->area;
    if (area.empty()) throw DataError("merge: external bus '" + ext_bus->id + "' has no area tag");
    for (const auto& b : external.buses)
        if (b.area != area)
            throw DataError("merge: external bus '" + b.id + "' is outside external area '" + area + "'");
    for (const auto& a : host.areas)
        if (a.id == area) throw DataError("merge: external area id '" + area + "' already used by the host case");
    for (const auto& b : host.buses)
        if (b.area == area) throw DataError("merge: host bus '" + b.id + "' already tagged with area '" + area + "'");

    const double net = net_export_mw(external);
    if (std::abs(net - boundary.scheduled_mw) > 1e-3)
        throw DataError("merge: external fragment exports " + csv::num(net) + " MW but scheduled interchange is " +
                        csv::num(boundary.scheduled_mw) + " MW");

    // Corridor endpoints must be exactly the two boundary buses.
    std::vector<const Branch*> corridor;
    if (boundary.interconnection) corridor.push_back(&*boundary.interconnection);
    for (const auto& t : boundary.transformers) corridor.push_back(&t);
    for (const auto* e : corridor) {
        const bool ok = (e->from == boundary.external_bus && e->to == boundary.host_bus) ||
                        (e->from == boundary.host_bus && e->to == boundary.external_bus);
        if (!ok)
            throw DataError("merge: corridor element '" + e->id + "' must connect " + boundary.external_bus + " and " +
                            boundary.host_bus);
    }

    // Name-space external ids that collide with host ids.
    std::set<std::string> host_bus_ids, host_series_ids, host_machine_ids, host_load_ids;
    for (const auto& b : host.buses) host_bus_ids.insert(b.id);
    for (const auto& s : series_elements(host)) host_series_ids.insert(s.element->id);
    for (const auto& m : host.machines) host_machine_ids.insert(m.id);
    for (const auto& l : host.loads) host_load_ids.insert(l.id);
    auto rename = [&](const std::string& id, const std::set<std::string>& taken, const char* what) {
        if (!taken.count(id)) return id;
        std::string prefixed = area + ":" + id;
        if (taken.count(prefixed))
            throw DataError("merge: " + std::string(what) + " name collision on '" + id + "' persists after prefixing");
        return prefixed;
    };
    std::map<std::string, std::string> bus_name;
    for (const auto& b : external.buses) bus_name[b.id] = rename(b.id, host_bus_ids, "bus");

    // Stand-alone external solve with the export drawn at the boundary bus.
    NetworkCase probe = external;
    probe.loads.push_back(Load{"__export__", boundary.external_bus, boundary.scheduled_mw, 0.0, true, std::nullopt});
    const auto probe_sol = solve_powerflow(probe);
    if (!probe_sol.converged) throw DataError("merge: external fragment power flow did not converge");

    NetworkCase out = host;
    for (const auto& a : external.areas) out.areas.push_back(a);
    for (auto b : external.buses) {
        b.id = bus_name.at(b.id);
        if (b.kind == BusKind::slack) b.kind = BusKind::pv;
        out.buses.push_back(std::move(b));
    }
    for (auto br : external.branches) {
        br.id = rename(br.id, host_series_ids, "branch");
        br.from = bus_name.at(br.from);
        br.to = bus_name.at(br.to);
        out.branches.push_back(std::move(br));
    }
    for (auto t : external.transformers) {
        t.id = rename(t.id, host_series_ids, "transformer");
        t.from = bus_name.at(t.from);
        t.to = bus_name.at(t.to);
        out.transformers.push_back(std::move(t));
    }
    for (auto m : external.machines) {
        const Bus* mb = external.find_bus(m.bus);
        if (mb->kind == BusKind::slack && m.in_service) m.p_mw = probe_sol.machines.at(m.id).p_mw;
        m.id = rename(m.id, host_machine_ids, "machine");
        m.bus = bus_name.at(m.bus);
        out.machines.push_back(std::move(m));
    }
    for (auto l : external.loads) {
        l.id = rename(l.id, host_load_ids, "load");
        l.bus = bus_name.at(l.bus);
        out.loads.push_back(std::move(l));
    }

    std::set<std::string> all_series;
    for (const auto& s : series_elements(out)) all_series.insert(s.element->id);
    auto place = [&](Branch& e) {
        if (!all_series.insert(e.id).second) throw DataError("merge: corridor element id '" + e.id + "' already in use");
        if (e.from == boundary.external_bus) e.from = bus_name.at(e.from);
        if (e.to == boundary.external_bus) e.to = bus_name.at(e.to);
    };
    if (boundary.interconnection) {
        Branch line = *boundary.interconnection;
        place(line);
        out.branches.push_back(std::move(line));
    }
    for (Transformer t : boundary.transformers) {
        place(t);
        out.transformers.push_back(std::move(t));
    }

    out.merge = MergeInfo{area, kind, boundary};
    detail::require_valid(out, "merged");
    return out;
}

/// Host part of a merged case: everything outside the external area, minus
/// the corridor.
inline NetworkCase strip_equivalent(const NetworkCase& merged) {
    if (!merged.merge) throw DataError("swap: case carries no merged-equivalent tag");
    const std::string& area = merged.merge->external_area;
    std::set<std::string> ext;
    for (const auto& b : merged.buses)
        if (b.area == area) ext.insert(b.id);
    NetworkCase host = merged;
    host.merge.reset();
    std::erase_if(host.areas, [&](const Area& a) { return a.id == area; });
    std::erase_if(host.buses, [&](const Bus& b) { return ext.count(b.id) > 0; });
    auto touches = [&](const Branch& b) { return ext.count(b.from) > 0 || ext.count(b.to) > 0; };
    std::erase_if(host.branches, touches);
    std::erase_if(host.transformers, touches);
    std::erase_if(host.machines, [&](const Machine& m) { return ext.count(m.bus) > 0; });
    std::erase_if(host.loads, [&](const Load& l) { return ext.count(l.bus) > 0; });
    return host;
}

/// Named equivalents, each a case document.
class EquivalentLibrary {
public:
    EquivalentLibrary() = default;
    explicit EquivalentLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, NetworkCase fragment) { entries_[name] = std::move(fragment); }

    /// Resolves a name from memory, then `<dir>/<name>.json`, then as a path.
    const NetworkCase& get(const std::string& name) {
        if (auto it = entries_.find(name); it != entries_.end()) return it->second;
        std::filesystem::path candidate = dir_ / (name + ".json");
        if (!dir_.empty() && std::filesystem::exists(candidate))
            return entries_[name] = load_case_file(candidate.string());
        if (std::filesystem::exists(name) && std::filesystem::is_regular_file(name))
            return entries_[name] = load_case_file(name);
        throw DataError("equivalent library: no entry '" + name + "'" +
                        (dir_.empty() ? std::string() : " in " + dir_.string()));
    }

private:
    std::filesystem::path dir_;
    std::map<std::string, NetworkCase> entries_;
};

/// Replaces the merged external equivalent wholesale, leaving the host and
/// the corridor as they were.
inline NetworkCase swap_equivalent(const NetworkCase& merged, const std::string& kind, EquivalentLibrary& library) {
    if (!merged.merge) throw DataError("swap: case carries no merged-equivalent tag");
    if (merged.merge->kind == kind) return merged;
    const NetworkCase& fragment = library.get(kind);
    return merge_cases(strip_equivalent(merged), fragment, merged.merge->boundary, kind);
}

}  // namespace gridseam
