#pragma once

#include <set>
#include <string>

#include "gridseam/json_util.hpp"
#include "gridseam/netmodel.hpp"

namespace gridseam {

namespace detail {

inline BusKind parse_bus_kind(const std::string& s, const std::string& where) {
    if (s == "slack") return BusKind::slack;
    if (s == "pv") return BusKind::pv;
    if (s == "pq") return BusKind::pq;
    throw DataError(where + ": field 'kind' must be slack, pv or pq (got '" + s + "')");
}

inline Branch read_branch_fields(const jsonu::Reader& r) {
    Branch b;
    b.id = r.str("id");
    b.from = r.str("from");
    b.to = r.str("to");
    b.circuit = r.str_or("circuit", "1");
    b.r = r.num_or("r", 0.0);
    b.x = r.num("x");
    b.b = r.num_or("b", 0.0);
    b.rating = r.num_or("rating", 0.0);
    b.in_service = r.flag_or("in_service", true);
    return b;
}

inline Branch read_branch(const jsonu::Json& j, const std::string& where) {
    jsonu::Reader r(j, where);
    r.only({"id", "from", "to", "circuit", "r", "x", "b", "rating", "in_service"});
    return read_branch_fields(r);
}

inline Transformer read_transformer(const jsonu::Json& j, const std::string& where) {
    jsonu::Reader r(j, where);
    r.only({"id", "from", "to", "circuit", "r", "x", "b", "rating", "in_service", "tap"});
    Transformer t;
    static_cast<Branch&>(t) = read_branch_fields(r);
    t.tap = r.num_or("tap", 1.0);
    return t;
}

inline jsonu::OrderedJson write_branch(const Branch& b) {
    return {{"id", b.id}, {"from", b.from}, {"to", b.to}, {"circuit", b.circuit}, {"r", b.r},
            {"x", b.x},   {"b", b.b},       {"rating", b.rating}, {"in_service", b.in_service}};
}

inline jsonu::OrderedJson write_transformer(const Transformer& t) {
    auto j = write_branch(t);
    j["tap"] = t.tap;
    return j;
}

inline BoundarySpec read_boundary(const jsonu::Json& j, const std::string& where) {
    jsonu::Reader r(j, where);
    r.only({"host_bus", "external_bus", "interconnection", "transformers", "scheduled_mw"});
    BoundarySpec b;
    b.host_bus = r.str("host_bus");
    b.external_bus = r.str("external_bus");
    if (r.has("interconnection")) b.interconnection = read_branch(r.at("interconnection"), where + ".interconnection");
    const auto& xs = r.array_or_empty("transformers");
    for (std::size_t i = 0; i < xs.size(); ++i)
        b.transformers.push_back(read_transformer(xs[i], where + ".transformers[" + std::to_string(i) + "]"));
    b.scheduled_mw = r.num("scheduled_mw");
    return b;
}

inline jsonu::OrderedJson write_boundary(const BoundarySpec& b) {
    jsonu::OrderedJson j;
    j["host_bus"] = b.host_bus;
    j["external_bus"] = b.external_bus;
    if (b.interconnection) j["interconnection"] = write_branch(*b.interconnection);
    j["transformers"] = jsonu::OrderedJson::array();
    for (const auto& t : b.transformers) j["transformers"].push_back(write_transformer(t));
    j["scheduled_mw"] = b.scheduled_mw;
    return j;
}

}  // namespace detail

/// Parses a case document. Throws DataError on schema violations, duplicate
/// ids and dangling references; physical invariants (x = 0, slack count, ...)
/// are left to validate_case.
inline NetworkCase load_case_json(const jsonu::Json& doc, const std::string& source = "case") {
    using detail::read_branch;
    using detail::read_transformer;
    jsonu::Reader top(doc, source);
    top.only({"id", "base_mva", "buses", "branches", "transformers", "machines", "loads", "areas", "merge"});

    NetworkCase c;
    c.id = top.str_or("id", "");
    c.base_mva = top.num("base_mva");

    auto item = [&](const char* list, std::size_t i) { return source + ": " + list + "[" + std::to_string(i) + "]"; };

    const auto& areas = top.array_or_empty("areas");
    for (std::size_t i = 0; i < areas.size(); ++i) {
        jsonu::Reader r(areas[i], item("areas", i));
        r.only({"id", "name"});
        c.areas.push_back({r.str("id"), r.str_or("name", "")});
    }
    const auto& buses = top.array("buses");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        jsonu::Reader r(buses[i], item("buses", i));
        r.only({"id", "name", "area", "base_kv", "kind", "v_set", "in_service"});
        Bus b;
        b.id = r.str("id");
        b.name = r.str_or("name", b.id);
        b.area = r.str_or("area", "");
        b.base_kv = r.num("base_kv");
        b.kind = detail::parse_bus_kind(r.str_or("kind", "pq"), r.where());
        b.v_set = r.opt_num("v_set");
        b.in_service = r.flag_or("in_service", true);
        c.buses.push_back(std::move(b));
    }
    const auto& branches = top.array_or_empty("branches");
    for (std::size_t i = 0; i < branches.size(); ++i) c.branches.push_back(read_branch(branches[i], item("branches", i)));
    const auto& xfmrs = top.array_or_empty("transformers");
    for (std::size_t i = 0; i < xfmrs.size(); ++i)
        c.transformers.push_back(read_transformer(xfmrs[i], item("transformers", i)));
    const auto& machines = top.array_or_empty("machines");
    for (std::size_t i = 0; i < machines.size(); ++i) {
        jsonu::Reader r(machines[i], item("machines", i));
        r.only({"id", "bus", "p_mw", "q_mvar", "q_min", "q_max", "mbase", "in_service"});
        Machine m;
        m.id = r.str("id");
        m.bus = r.str("bus");
        m.p_mw = r.num_or("p_mw", 0.0);
        m.q_mvar = r.num_or("q_mvar", 0.0);
        m.q_min = r.num_or("q_min", -9999.0);
        m.q_max = r.num_or("q_max", 9999.0);
        m.mbase = r.num_or("mbase", c.base_mva);
        m.in_service = r.flag_or("in_service", true);
        c.machines.push_back(std::move(m));
    }
    const auto& loads = top.array_or_empty("loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
        jsonu::Reader r(loads[i], item("loads", i));
        r.only({"id", "bus", "p_mw", "q_mvar", "in_service", "sheddable_mw"});
        Load l;
        l.id = r.str("id");
        l.bus = r.str("bus");
        l.p_mw = r.num_or("p_mw", 0.0);
        l.q_mvar = r.num_or("q_mvar", 0.0);
        l.in_service = r.flag_or("in_service", true);
        l.sheddable_mw = r.opt_num("sheddable_mw");
        c.loads.push_back(std::move(l));
    }
    if (top.has("merge")) {
        jsonu::Reader r(top.at("merge"), source + ": merge");
        r.only({"external_area", "kind", "boundary"});
        c.merge = MergeInfo{r.str("external_area"), r.str("kind"),
                            detail::read_boundary(r.at("boundary"), r.where() + ".boundary")};
    }

    // Identity and referential integrity are load-time errors.
    auto dup = [&](const std::string& what, const std::string& id) {
        throw DataError(source + ": duplicate " + what + " id '" + id + "'");
    };
    std::set<std::string> seen;
    for (const auto& a : c.areas)
        if (!seen.insert(a.id).second) dup("area", a.id);
    std::set<std::string> bus_ids;
    for (const auto& b : c.buses) {
        if (!bus_ids.insert(b.id).second) dup("bus", b.id);
        if (!c.areas.empty() && !b.area.empty() && !seen.count(b.area))
            throw DataError(source + ": bus '" + b.id + "' references unknown area '" + b.area + "'");
    }
    auto need_bus = [&](const std::string& kind, const std::string& id, const std::string& bus) {
        if (!bus_ids.count(bus))
            throw DataError(source + ": " + kind + " '" + id + "' references unknown bus '" + bus + "'");
    };
    seen.clear();
    for (const auto& s : series_elements(c)) {
        if (!seen.insert(s.element->id).second) dup("branch", s.element->id);
        need_bus(s.transformer ? "transformer" : "branch", s.element->id, s.element->from);
        need_bus(s.transformer ? "transformer" : "branch", s.element->id, s.element->to);
    }
    seen.clear();
    for (const auto& m : c.machines) {
        if (!seen.insert(m.id).second) dup("machine", m.id);
        need_bus("machine", m.id, m.bus);
    }
    seen.clear();
    for (const auto& l : c.loads) {
        if (!seen.insert(l.id).second) dup("load", l.id);
        need_bus("load", l.id, l.bus);
    }
    return c;
}

inline NetworkCase load_case(const std::string& text, const std::string& source = "case") {
    return load_case_json(jsonu::parse(text, source), source);
}

inline NetworkCase load_case_file(const std::string& path) {
    return load_case(jsonu::read_text_file(path), path);
}

inline jsonu::OrderedJson case_to_json(const NetworkCase& c) {
    using jsonu::OrderedJson;
    OrderedJson j;
    j["id"] = c.id;
    j["base_mva"] = c.base_mva;
    j["areas"] = OrderedJson::array();
    for (const auto& a : c.areas) j["areas"].push_back({{"id", a.id}, {"name", a.name}});
    j["buses"] = OrderedJson::array();
    for (const auto& b : c.buses) {
        OrderedJson jb{{"id", b.id},           {"name", b.name},           {"area", b.area},
                       {"base_kv", b.base_kv}, {"kind", to_string(b.kind)}};
        if (b.v_set) jb["v_set"] = *b.v_set;
        jb["in_service"] = b.in_service;
        j["buses"].push_back(std::move(jb));
    }
    j["branches"] = OrderedJson::array();
    for (const auto& b : c.branches) j["branches"].push_back(detail::write_branch(b));
    j["transformers"] = OrderedJson::array();
    for (const auto& t : c.transformers) j["transformers"].push_back(detail::write_transformer(t));
    j["machines"] = OrderedJson::array();
    for (const auto& m : c.machines)
        j["machines"].push_back({{"id", m.id},       {"bus", m.bus},     {"p_mw", m.p_mw},
                                 {"q_mvar", m.q_mvar}, {"q_min", m.q_min}, {"q_max", m.q_max},
                                 {"mbase", m.mbase},   {"in_service", m.in_service}});
    j["loads"] = OrderedJson::array();
    for (const auto& l : c.loads) {
        OrderedJson jl{{"id", l.id}, {"bus", l.bus}, {"p_mw", l.p_mw}, {"q_mvar", l.q_mvar}, {"in_service", l.in_service}};
        if (l.sheddable_mw) jl["sheddable_mw"] = *l.sheddable_mw;
        j["loads"].push_back(std::move(jl));
    }
    if (c.merge)
        j["merge"] = {{"external_area", c.merge->external_area},
                      {"kind", c.merge->kind},
                      {"boundary", detail::write_boundary(c.merge->boundary)}};
    return j;
}

inline std::string serialize_case(const NetworkCase& c) { return case_to_json(c).dump(2) + "\n"; }

inline BoundarySpec load_boundary_file(const std::string& path) {
    return detail::read_boundary(jsonu::parse_file(path), path);
}

}  // namespace gridseam
