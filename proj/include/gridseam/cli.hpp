#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridseam/case_io.hpp"
#include "gridseam/contingency.hpp"
#include "gridseam/dynamics.hpp"
#include "gridseam/error.hpp"
#include "gridseam/merge.hpp"
#include "gridseam/powerflow.hpp"
#include "gridseam/ras.hpp"
#include "gridseam/validation.hpp"

namespace gridseam::cli {

namespace fs = std::filesystem;

enum Exit { ok = 0, data_error = 1, flagged = 2 };

struct RunConfig {
    // inputs
    std::string case_path, host_path, boundary_path, library_dir, equivalent;
    std::string dyn_path, events_path, contingencies_path, contingency_id, ras_path;
    std::string measurements_path, mapping_path, thresholds_path;
    // options
    double tolerance = 1e-8;
    int max_iterations = 20;
    double dt = 1.0 / 240.0;
    double duration = 20.0;
    std::string integrator = "rk4";
    unsigned jobs = 1;
    std::optional<double> reserve_mw;
    double t0_offset = 0.0;
    std::vector<double> during, post;
    std::string compare_with;
    bool strip = false;
    bool export_measurements = false;
    std::string event_id;
    // output
    std::string out;
};

namespace detail {

inline unsigned jobs_from_env() {
    const char* v = std::getenv("GRIDSEAM_JOBS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024)
        throw DataError("environment GRIDSEAM_JOBS='" + std::string(v) + "' is not a job count in 1..1024");
    return static_cast<unsigned>(n);
}

inline std::string safe_name(const std::string& id) {
    std::string s = id;
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
    return s;
}

inline void write(const fs::path& p, const std::string& text) { jsonu::write_text_file(p.string(), text); }

/// The output directory must not be, or contain, any input file.
inline fs::path prepare_out_dir(const std::string& out, const std::vector<std::string>& inputs) {
    if (out.empty()) throw DataError("option --out: an output directory is required");
    const fs::path dir = fs::weakly_canonical(fs::path(out));
    for (const auto& in : inputs) {
        if (in.empty()) continue;
        const fs::path p = fs::weakly_canonical(fs::path(in));
        if (p == dir) throw DataError("option --out: '" + out + "' is also the input " + in);
    }
    if (fs::exists(dir) && !fs::is_directory(dir)) throw DataError("option --out: '" + out + "' exists and is not a directory");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("option --out: cannot create '" + out + "': " + ec.message());
    return dir;
}

inline EventSequence load_events_file(const std::string& path) {
    auto doc = jsonu::parse_file(path);
    jsonu::Reader r(doc, path);
    r.only({"events", "notes"});
    return parse_events(r.at("events"), path + ": events");
}

inline Integrator integrator_of(const std::string& s) {
    if (s == "rk4") return Integrator::rk4;
    if (s == "trapezoidal") return Integrator::trapezoidal;
    throw DataError("option --integrator: '" + s + "' is not rk4 or trapezoidal");
}

inline SimulationOptions sim_options(const RunConfig& cfg) {
    SimulationOptions o;
    o.dt = cfg.dt;
    o.duration = cfg.duration;
    o.integrator = integrator_of(cfg.integrator);
    return o;
}

/// --case, optionally swapped to --equivalent from --library.
inline NetworkCase load_study_case(const RunConfig& cfg) {
    NetworkCase c = load_case_file(cfg.case_path);
    if (!cfg.equivalent.empty()) {
        EquivalentLibrary lib(cfg.library_dir);
        c = swap_equivalent(c, cfg.equivalent, lib);
    }
    return c;
}

inline std::vector<RasSpec> load_ras(const RunConfig& cfg) {
    return cfg.ras_path.empty() ? std::vector<RasSpec>{} : load_ras_file(cfg.ras_path);
}

/// Applies --reserve to the dynamic data when given; reports what happened.
inline std::vector<MachineDynamics> reserve_adjusted(const RunConfig& cfg, const NetworkCase& c,
                                                     const PowerFlowSolution& sol, std::vector<MachineDynamics> dyn,
                                                     std::ostream& out) {
    if (!cfg.reserve_mw) return dyn;
    const auto adj = adjust_governors_for_reserve(dyn, dispatch_of(c, sol), *cfg.reserve_mw);
    if (adj.shortfall)
        out << "reserve: target " << csv::num(*cfg.reserve_mw) << " MW exceeds headroom "
            << csv::num(adj.headroom_before_mw) << " MW (short " << csv::num(adj.shortfall_mw)
            << " MW); governors unchanged\n";
    else
        out << "reserve: headroom " << csv::num(adj.headroom_before_mw) << " -> " << csv::num(adj.headroom_after_mw)
            << " MW\n";
    return adj.dyn;
}

inline std::string mapping_for_replay(const SimulationResult& r) {
    jsonu::Json j;
    j["source"] = "SIM";
    j["signals"] = jsonu::Json::object();
    for (const auto& n : r.names) j["signals"][n] = n;
    std::vector<std::string> ops;
    for (const auto& e : r.ras_log)
        if (std::find(ops.begin(), ops.end(), e.ras_id) == ops.end()) ops.push_back(e.ras_id);
    j["ras_operations"] = ops;
    return j.dump(2) + "\n";
}

inline void write_run_dir(const fs::path& dir, const RunSummary& s, const SimulationResult* r) {
    fs::create_directories(dir);
    write(dir / "summary.csv", summary_csv({s}));
    if (!r) return;
    write(dir / "channels.csv", result_csv(*r));
    write(dir / "events.csv", event_log_csv(*r));
    write(dir / "ras_log.csv", ras_log_csv(r->ras_log));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const auto c = load_case_file(cfg.case_path);
    const auto v = validate_case(c);
    for (const auto& x : v) out << cfg.case_path << ": " << x.element << ": " << x.code << ": " << x.message << "\n";
    if (!v.empty()) return data_error;
    out << cfg.case_path << ": ok (" << c.buses.size() << " buses, " << c.areas.size() << " areas, "
        << c.branches.size() + c.transformers.size() << " series elements, " << c.machines.size() << " machines, "
        << c.loads.size() << " loads)\n";
    return ok;
}

inline int cmd_powerflow(const RunConfig& cfg, std::ostream& out) {
    const auto c = detail::load_study_case(cfg);
    PowerFlowOptions po;
    po.tolerance = cfg.tolerance;
    po.max_iterations = cfg.max_iterations;
    const auto s = solve_powerflow(c, po);
    const auto bal = power_balance(c, s);
    std::string summary = "case: " + c.id + "\nconverged: " + (s.converged ? "yes" : "no") +
                          "\niterations: " + std::to_string(s.iterations) + "\nmax_mismatch_pu: " + csv::num(s.max_mismatch) +
                          "\ngeneration_mw: " + csv::num(bal.generation_mw) + "\nload_mw: " + csv::num(bal.load_mw) +
                          "\nlosses_mw: " + csv::num(bal.losses_mw) + "\nbalance_residual_mw: " + csv::num(bal.residual_mw()) +
                          "\n";
    if (cfg.out.empty()) {
        out << summary << solution_bus_csv(c, s);
    } else {
        const auto dir = detail::prepare_out_dir(cfg.out, {cfg.case_path});
        detail::write(dir / "buses.csv", solution_bus_csv(c, s));
        detail::write(dir / "branches.csv", solution_branch_csv(s));
        std::string m = "machine,bus,p_mw,q_mvar\n";
        for (const auto& g : c.machines) {
            auto it = s.machines.find(g.id);
            if (it == s.machines.end()) continue;
            m += g.id + "," + g.bus + "," + csv::num(it->second.p_mw) + "," + csv::num(it->second.q_mvar) + "\n";
        }
        detail::write(dir / "machines.csv", m);
        detail::write(dir / "summary.txt", summary);
        out << summary;
    }
    if (!s.converged) {
        out << "error: " << cfg.case_path << ": power flow did not converge in " << s.iterations << " iterations\n";
        return data_error;
    }
    return ok;
}

inline int cmd_merge(const RunConfig& cfg, std::ostream& out) {
    if (cfg.out.empty()) throw DataError("option --out: an output case file is required");
    EquivalentLibrary lib(cfg.library_dir);
    NetworkCase merged;
    if (!cfg.case_path.empty()) {
        const auto c = load_case_file(cfg.case_path);
        if (cfg.strip)
            merged = strip_equivalent(c);
        else if (!cfg.equivalent.empty())
            merged = swap_equivalent(c, cfg.equivalent, lib);
        else
            throw DataError("merge: with --case give --equivalent NAME to swap or --strip");
    } else {
        if (cfg.host_path.empty() || cfg.boundary_path.empty() || cfg.equivalent.empty())
            throw DataError("merge: --host, --boundary and --equivalent are required (or --case to swap)");
        merged = merge_cases(load_case_file(cfg.host_path), lib.get(cfg.equivalent), load_boundary_file(cfg.boundary_path),
                             cfg.equivalent);
    }
    for (const auto& in : {cfg.case_path, cfg.host_path, cfg.boundary_path})
        if (!in.empty() && fs::weakly_canonical(in) == fs::weakly_canonical(cfg.out))
            throw DataError("option --out: '" + cfg.out + "' would overwrite the input " + in);
    jsonu::write_text_file(cfg.out, serialize_case(merged));
    out << cfg.out << ": " << merged.buses.size() << " buses, " << merged.areas.size() << " areas"
        << (merged.merge ? ", equivalent " + merged.merge->kind : std::string()) << "\n";
    if (merged.merge) {
        const auto s = solve_powerflow(merged);
        if (s.converged) {
            double flow = 0.0;
            for (const auto& id : corridor_ids(merged.merge->boundary))
                if (const auto* f = s.flow(id)) flow += f->p_from;
            out << "corridor flow " << csv::fixed(flow, 2) << " MW (scheduled "
                << csv::fixed(merged.merge->boundary.scheduled_mw, 2) << " MW)\n";
        }
    }
    return ok;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const auto c = detail::load_study_case(cfg);
    EventSequence events;
    std::string label = cfg.event_id.empty() ? "run" : cfg.event_id;
    if (!cfg.events_path.empty() && !cfg.contingency_id.empty())
        throw DataError("simulate: give either --events or --contingency, not both");
    if (!cfg.events_path.empty()) events = detail::load_events_file(cfg.events_path);
    ContingencyOverrides ov;
    auto opt = detail::sim_options(cfg);
    if (!cfg.contingency_id.empty()) {
        if (cfg.contingencies_path.empty()) throw DataError("option --contingency needs --contingencies FILE");
        bool found = false;
        for (const auto& d : load_contingency_file(cfg.contingencies_path))
            if (d.id == cfg.contingency_id) {
                events = d.events;
                ov = d.overrides;
                if (d.overrides.duration) opt.duration = *d.overrides.duration;
                found = true;
            }
        if (!found) throw DataError(cfg.contingencies_path + ": no contingency '" + cfg.contingency_id + "'");
        if (cfg.event_id.empty()) label = cfg.contingency_id;
    }
    const auto dir = detail::prepare_out_dir(
        cfg.out, {cfg.case_path, cfg.dyn_path, cfg.events_path, cfg.ras_path, cfg.contingencies_path});
    const auto sol = solve_powerflow(c);
    if (!sol.converged) throw DataError(cfg.case_path + ": power flow did not converge; no initial state");
    const auto dyn = detail::reserve_adjusted(cfg, c, sol, load_dynamics_file(cfg.dyn_path), out);
    validate_events(events, c, opt.duration);
    const auto state = init_dynamics(c, sol, dyn);
    const auto ras = instantiate_ras(detail::load_ras(cfg), ov, c, state.dispatch_mw);
    const auto r = simulate(state, events, ras, opt);
    auto s = summarize(r, c);
    s.id = label;
    detail::write_run_dir(dir, s, &r);
    if (cfg.export_measurements) {
        detail::write(dir / "measurements.csv", result_measurements_csv(r));
        detail::write(dir / "mapping.json", detail::mapping_for_replay(r));
    }
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
    for (const auto& a : r.ras_log) out << "ras " << a.ras_id << " at " << csv::fixed(a.t, 4) << " s: " << a.action << "\n";
    out << label << ": " << to_string(s.status) << ", f " << csv::fixed(s.f_min.value, 4) << ".." << csv::fixed(s.f_max.value, 4)
        << " Hz, v_min " << csv::fixed(s.v_min.value, 4) << " pu at " << s.v_min.where << "\n";
    return r.stable ? ok : flagged;
}

inline void write_batch(const fs::path& dir, const BatchResult& b) {
    detail::write(dir / "summary.csv", summary_csv(b.summaries));
    detail::write(dir / "loading.csv", loading_csv(b.summaries));
}

inline int cmd_batch(const RunConfig& cfg, std::ostream& out) {
    const auto c = detail::load_study_case(cfg);
    const auto defs = load_contingency_file(cfg.contingencies_path);
    const auto ras = detail::load_ras(cfg);
    const auto dir = detail::prepare_out_dir(cfg.out, {cfg.case_path, cfg.dyn_path, cfg.contingencies_path, cfg.ras_path});
    auto dyn = load_dynamics_file(cfg.dyn_path);
    if (cfg.reserve_mw) {
        const auto sol = solve_powerflow(c);
        if (!sol.converged) throw DataError(cfg.case_path + ": power flow did not converge");
        dyn = detail::reserve_adjusted(cfg, c, sol, dyn, out);
    }
    BatchOptions bo;
    bo.sim = detail::sim_options(cfg);
    bo.jobs = cfg.jobs;
    bo.keep_results = !cfg.compare_with.empty();
    auto sink_into = [](fs::path root) {
        return [root](std::size_t, const RunSummary& s, const SimulationResult* r) {
            detail::write_run_dir(root / detail::safe_name(s.id), s, r);
        };
    };
    const auto a = run_batch(c, dyn, defs, ras, bo, sink_into(dir));
    write_batch(dir, a);
    for (const auto& [label, n] : group_by_label(defs)) out << (label.empty() ? "(no label)" : label) << ": " << n << "\n";
    for (const auto& s : a.summaries)
        out << s.id << ": " << to_string(s.status) << (s.message.empty() ? "" : " (" + s.message + ")") << "\n";
    bool flagged_any = a.any_flagged();

    if (!cfg.compare_with.empty()) {
        if (!c.merge) throw DataError("option --compare-with: " + cfg.case_path + " carries no merged equivalent to swap");
        EquivalentLibrary lib(cfg.library_dir);
        const auto other = swap_equivalent(c, cfg.compare_with, lib);
        const fs::path sub = dir / ("compare-" + detail::safe_name(cfg.compare_with));
        fs::create_directories(sub);
        const auto b = run_batch(other, dyn, defs, ras, bo, sink_into(sub));
        write_batch(sub, b);
        std::vector<RunComparison> cmp;
        for (std::size_t i = 0; i < defs.size(); ++i)
            if (a.results[i] && b.results[i]) cmp.push_back(compare_runs(defs[i].id, *a.results[i], *b.results[i]));
        detail::write(dir / "compare.csv", comparison_csv(cmp));
        out << "compared against " << cfg.compare_with << ": " << cmp.size() << " runs, see compare.csv\n";
        flagged_any = flagged_any || b.any_flagged();
    }
    return flagged_any ? flagged : ok;
}

inline int cmd_validate_event(const RunConfig& cfg, std::ostream& out) {
    NetworkCase c;
    if (!cfg.host_path.empty()) {
        if (cfg.boundary_path.empty() || cfg.equivalent.empty())
            throw DataError("validate-event: --host needs --boundary and --equivalent");
        EquivalentLibrary lib(cfg.library_dir);
        c = merge_cases(load_case_file(cfg.host_path), lib.get(cfg.equivalent), load_boundary_file(cfg.boundary_path),
                        cfg.equivalent);
    } else {
        c = detail::load_study_case(cfg);
    }
    EventSequence events;
    if (!cfg.events_path.empty()) events = detail::load_events_file(cfg.events_path);
    if (!cfg.contingency_id.empty()) {
        if (cfg.contingencies_path.empty()) throw DataError("option --contingency needs --contingencies FILE");
        bool found = false;
        for (const auto& d : load_contingency_file(cfg.contingencies_path))
            if (d.id == cfg.contingency_id) events = d.events, found = true;
        if (!found) throw DataError(cfg.contingencies_path + ": no contingency '" + cfg.contingency_id + "'");
    }
    const auto dir = detail::prepare_out_dir(cfg.out, {cfg.case_path, cfg.host_path, cfg.dyn_path, cfg.events_path,
                                                       cfg.measurements_path, cfg.mapping_path, cfg.ras_path});
    const auto ms = import_measurement_files(cfg.measurements_path,
                                             cfg.mapping_path.empty() ? std::nullopt : std::optional(cfg.mapping_path));
    ValidateEventOptions vo;
    vo.sim = detail::sim_options(cfg);
    vo.t0_offset = cfg.t0_offset;
    vo.reserve_target_mw = cfg.reserve_mw;
    vo.event_id = !cfg.event_id.empty() ? cfg.event_id : !cfg.contingency_id.empty() ? cfg.contingency_id : "event";
    if (!cfg.thresholds_path.empty())
        vo.thresholds = parse_grade_thresholds(jsonu::read_text_file(cfg.thresholds_path), cfg.thresholds_path);
    if (!cfg.during.empty() || !cfg.post.empty()) {
        if (cfg.during.size() != 2 || cfg.post.size() != 2)
            throw DataError("options --during and --post must be given together, each as T0 T1");
        vo.windows = Windows{{cfg.during[0], cfg.during[1]}, {cfg.post[0], cfg.post[1]}};
    }
    const auto res = validate_event(c, load_dynamics_file(cfg.dyn_path), events, detail::load_ras(cfg), ms, vo);
    emit_report(res.report, res.pairs, dir.string());
    for (std::size_t i = 0; i < res.report.metrics.size(); ++i)
        out << res.report.metrics[i].channel << ": " << (res.report.grades[i] ? to_string(*res.report.grades[i]) : "n/a")
            << "\n";
    for (const auto& h : res.report.hints) out << "(" << h.rule << ") " << h.message << "\n";
    for (const auto& w : res.report.warnings) out << "warning: " << w << "\n";
    out << "report written to " << (dir / "report.txt").string() << "\n";
    return res.result.stable ? ok : flagged;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand. Help goes to `out`; errors to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    try {
        cfg.jobs = detail::jobs_from_env();
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    }

    CLI::App app{"gridseam: merged-network power flow, dynamic contingency analysis and event validation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    auto add_case = [&](CLI::App* s, bool required) {
        auto* o = s->add_option("--case", cfg.case_path, "network case JSON")->check(CLI::ExistingFile);
        if (required) o->required();
    };
    auto add_swap = [&](CLI::App* s) {
        s->add_option("--equivalent", cfg.equivalent, "swap the merged external equivalent for this library entry");
        s->add_option("--library", cfg.library_dir, "directory holding <name>.json equivalents")->check(CLI::ExistingDirectory);
    };
    auto add_sim = [&](CLI::App* s) {
        s->add_option("--dyn", cfg.dyn_path, "machine dynamic data JSON")->required()->check(CLI::ExistingFile);
        s->add_option("--ras", cfg.ras_path, "RAS configuration JSON")->check(CLI::ExistingFile);
        s->add_option("--dt", cfg.dt, "integration step, s")->capture_default_str()->check(CLI::PositiveNumber);
        s->add_option("--duration", cfg.duration, "simulated time, s")->capture_default_str()->check(CLI::PositiveNumber);
        s->add_option("--integrator", cfg.integrator, "rk4 or trapezoidal")
            ->capture_default_str()
            ->check(CLI::IsMember({"rk4", "trapezoidal"}));
        s->add_option("--reserve", cfg.reserve_mw, "target responsive headroom, MW (governor limits are scaled down to it)")
            ->check(CLI::NonNegativeNumber);
    };

    auto* check = app.add_subcommand("check", "validate a case file");
    add_case(check, true);

    auto* pf = app.add_subcommand("powerflow", "solve the AC power flow");
    add_case(pf, true);
    add_swap(pf);
    pf->add_option("--tolerance", cfg.tolerance, "mismatch tolerance, pu")->capture_default_str()->check(CLI::PositiveNumber);
    pf->add_option("--max-iter", cfg.max_iterations, "Newton iteration limit")->capture_default_str()->check(CLI::PositiveNumber);
    pf->add_option("--out", cfg.out, "output directory (default: print to stdout)");

    auto* merge = app.add_subcommand("merge", "merge an external equivalent into a host case, or swap/strip one");
    add_case(merge, false);
    merge->add_option("--host", cfg.host_path, "host case JSON")->check(CLI::ExistingFile);
    merge->add_option("--boundary", cfg.boundary_path, "boundary corridor JSON")->check(CLI::ExistingFile);
    add_swap(merge);
    merge->add_flag("--strip", cfg.strip, "remove the merged equivalent from --case");
    merge->add_option("--out", cfg.out, "output case file")->required();

    auto* sim = app.add_subcommand("simulate", "run one event sequence");
    add_case(sim, true);
    add_swap(sim);
    add_sim(sim);
    sim->add_option("--events", cfg.events_path, "event sequence JSON")->check(CLI::ExistingFile);
    sim->add_option("--contingencies", cfg.contingencies_path, "contingency file to take --contingency from")
        ->check(CLI::ExistingFile);
    sim->add_option("--contingency", cfg.contingency_id, "contingency id to run");
    sim->add_option("--label", cfg.event_id, "run label in the summary");
    sim->add_flag("--export-measurements", cfg.export_measurements,
                  "also write the run as measurements.csv + mapping.json for replay");
    sim->add_option("--out", cfg.out, "output directory")->required();

    auto* batch = app.add_subcommand("batch", "run a contingency suite");
    add_case(batch, true);
    add_swap(batch);
    add_sim(batch);
    batch->add_option("--contingencies", cfg.contingencies_path, "contingency suite JSON")->required()->check(CLI::ExistingFile);
    batch->add_option("--jobs", cfg.jobs, "parallel runs (default: GRIDSEAM_JOBS or 1)")->check(CLI::Range(1, 1024));
    batch->add_option("--compare-with", cfg.compare_with, "rerun with this equivalent and write compare.csv");
    batch->add_option("--out", cfg.out, "output directory")->required();

    auto* val = app.add_subcommand("validate-event", "replay an event and compare against measurements");
    add_case(val, false);
    val->add_option("--host", cfg.host_path, "host case JSON (merged with --boundary/--equivalent)")->check(CLI::ExistingFile);
    val->add_option("--boundary", cfg.boundary_path, "boundary corridor JSON")->check(CLI::ExistingFile);
    add_swap(val);
    add_sim(val);
    val->add_option("--events", cfg.events_path, "event sequence JSON")->check(CLI::ExistingFile);
    val->add_option("--contingencies", cfg.contingencies_path, "contingency file to take --contingency from")
        ->check(CLI::ExistingFile);
    val->add_option("--contingency", cfg.contingency_id, "contingency id describing the event");
    val->add_option("--measurements", cfg.measurements_path, "measurement CSV (time_s,signal,value)")
        ->required()
        ->check(CLI::ExistingFile);
    val->add_option("--mapping", cfg.mapping_path, "signal -> channel mapping JSON")->check(CLI::ExistingFile);
    val->add_option("--t0-offset", cfg.t0_offset, "measurement time of simulation t=0, s")->capture_default_str();
    val->add_option("--during", cfg.during, "during-event window T0 T1, s")->expected(2);
    val->add_option("--post", cfg.post, "post-event window T0 T1, s")->expected(2);
    val->add_option("--thresholds", cfg.thresholds_path, "grade thresholds JSON")->check(CLI::ExistingFile);
    val->add_option("--event-id", cfg.event_id, "event name for the report");
    val->add_option("--out", cfg.out, "report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        for (auto* s : app.get_subcommands([](CLI::App*) { return true; })) out << "\n" << s->help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    }

    try {
        if (*check) return cmd_check(cfg, out);
        if (*pf) return cmd_powerflow(cfg, out);
        if (*merge) return cmd_merge(cfg, out);
        if (*sim) return cmd_simulate(cfg, out);
        if (*batch) return cmd_batch(cfg, out);
        if (*val) return cmd_validate_event(cfg, out);
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    } catch (const SolveError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    }
    return data_error;
}

}  // namespace gridseam::cli
