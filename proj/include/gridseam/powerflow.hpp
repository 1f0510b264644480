#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gridseam/csv.hpp"
#include "gridseam/error.hpp"
#include "gridseam/measurements.hpp"
#include "gridseam/netmodel.hpp"

namespace gridseam {

struct BranchFlow {
    std::string id;
    std::string from;
    std::string to;
    std::string circuit;
    bool transformer = false;
    bool in_service = true;
    double p_from = 0.0;  // MW
    double q_from = 0.0;  // MVAr
    double p_to = 0.0;
    double q_to = 0.0;
    double rating = 0.0;

    double loss_mw() const { return p_from + p_to; }
    double s_from() const { return std::hypot(p_from, q_from); }
    /// |S| at the heavier end as a fraction of rating; 0 for unrated elements.
    double loading() const {
        return rating > 0.0 ? std::max(s_from(), std::hypot(p_to, q_to)) / rating : 0.0;
    }
};

/// `P:<from>-<to>:<ckt>` / `Q:...`: the from-end flow of a series element.
inline std::string flow_channel(char kind, const Branch& b) {
    return std::string(1, kind) + ":" + b.from + "-" + b.to + ":" + b.circuit;
}

struct MachineOutput {
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

struct PowerFlowSolution {
    std::vector<std::string> bus_ids;  // in-service buses, case order
    std::unordered_map<std::string, int> index;
    std::vector<double> v;  // pu
    std::vector<double> theta;  // rad
    std::vector<BusKind> final_kind;  // after reactive-limit switching
    std::vector<int> q_limit;  // +1 held at q_max, -1 at q_min, 0 otherwise
    std::vector<BranchFlow> flows;  // lines then transformers, case order
    std::map<std::string, Complex> slack_generation;  // MW + j MVAr per slack bus
    std::map<std::string, MachineOutput> machines;
    int iterations = 0;
    double max_mismatch = std::numeric_limits<double>::infinity();  // pu
    bool converged = false;
    std::vector<double> mismatch_history;
    double base_mva = 100.0;

    double v_of(const std::string& bus) const { return v.at(static_cast<std::size_t>(index.at(bus))); }
    double theta_of(const std::string& bus) const { return theta.at(static_cast<std::size_t>(index.at(bus))); }
    Complex phasor(const std::string& bus) const { return std::polar(v_of(bus), theta_of(bus)); }
    const BranchFlow* flow(const std::string& element_id) const {
        for (const auto& f : flows)
            if (f.id == element_id) return &f;
        return nullptr;
    }
};

struct PowerFlowOptions {
    double tolerance = 1e-8;  // pu
    int max_iterations = 20;
    bool flat_start = true;
    const PowerFlowSolution* initial = nullptr;  // warm start when flat_start is false
};

namespace detail {

struct BusInjection {
    double p_gen = 0.0, q_gen = 0.0, p_load = 0.0, q_load = 0.0;  // pu
    double q_min = 0.0, q_max = 0.0;  // pu, summed over in-service machines
    double mbase_total = 0.0;
    int machines = 0;
};

inline std::vector<BusInjection> bus_injections(const NetworkCase& c, const std::unordered_map<std::string, int>& index) {
    std::vector<BusInjection> inj(index.size());
    for (const auto& m : c.machines) {
        auto it = index.find(m.bus);
        if (!m.in_service || it == index.end()) continue;
        auto& b = inj[static_cast<std::size_t>(it->second)];
        b.p_gen += m.p_mw / c.base_mva;
        b.q_gen += m.q_mvar / c.base_mva;
        b.q_min += m.q_min / c.base_mva;
        b.q_max += m.q_max / c.base_mva;
        b.mbase_total += m.mbase;
        ++b.machines;
    }
    for (const auto& l : c.loads) {
        auto it = index.find(l.bus);
        if (!l.in_service || it == index.end()) continue;
        auto& b = inj[static_cast<std::size_t>(it->second)];
        b.p_load += l.p_mw / c.base_mva;
        b.q_load += l.q_mvar / c.base_mva;
    }
    return inj;
}

inline Eigen::VectorXcd complex_voltages(const std::vector<double>& v, const std::vector<double>& th) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = std::polar(v[i], th[i]);
    return out;
}

}  // namespace detail

/// Pi-model flows for every series element at the given voltages; open
/// elements get a zero record.
inline std::vector<BranchFlow> branch_flows(const NetworkCase& c, const PowerFlowSolution& s) {
    std::vector<BranchFlow> out;
    for (const auto& ref : series_elements(c)) {
        const Branch& br = *ref.element;
        BranchFlow f{br.id, br.from, br.to, br.circuit, ref.transformer, br.in_service};
        f.rating = br.rating;
        auto fi = s.index.find(br.from), ti = s.index.find(br.to);
        if (br.in_service && fi != s.index.end() && ti != s.index.end()) {
            const auto st = pi_stamp(br, ref.tap);
            const Complex vf = std::polar(s.v[static_cast<std::size_t>(fi->second)], s.theta[static_cast<std::size_t>(fi->second)]);
            const Complex vt = std::polar(s.v[static_cast<std::size_t>(ti->second)], s.theta[static_cast<std::size_t>(ti->second)]);
            const Complex sf = vf * std::conj(st[0] * vf + st[1] * vt) * c.base_mva;
            const Complex stt = vt * std::conj(st[2] * vf + st[3] * vt) * c.base_mva;
            f.p_from = sf.real();
            f.q_from = sf.imag();
            f.p_to = stt.real();
            f.q_to = stt.imag();
        } else {
            f.in_service = false;
        }
        out.push_back(std::move(f));
    }
    return out;
}

/// Largest |P| or |Q| mismatch (pu) of the given voltages against the case's
/// scheduled injections, using each bus's final type. Independent of the
/// Newton iteration; used as the convergence certificate.
inline double recompute_mismatch(const NetworkCase& c, const PowerFlowSolution& s) {
    const auto y = build_ybus(c);
    const auto inj = detail::bus_injections(c, y.index);
    const Eigen::VectorXcd vc = detail::complex_voltages(s.v, s.theta);
    const Eigen::VectorXcd sc = vc.cwiseProduct((y.y * vc).conjugate());
    double worst = 0.0;
    for (std::size_t i = 0; i < s.bus_ids.size(); ++i) {
        const auto k = s.final_kind[i];
        if (k == BusKind::slack) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        worst = std::max(worst, std::abs(sc(ii).real() - (inj[i].p_gen - inj[i].p_load)));
        if (k == BusKind::pq) {
            double q_spec = inj[i].q_gen - inj[i].q_load;
            if (s.q_limit[i] > 0) q_spec = inj[i].q_max - inj[i].q_load;
            if (s.q_limit[i] < 0) q_spec = inj[i].q_min - inj[i].q_load;
            worst = std::max(worst, std::abs(sc(ii).imag() - q_spec));
        }
    }
    return worst;
}

/// Full Newton-Raphson in polar coordinates with an analytic Jacobian.
/// Non-convergence is reported through `converged`; a singular Jacobian throws.
inline PowerFlowSolution solve_powerflow(const NetworkCase& c, const PowerFlowOptions& opt = {}) {
    const AdmittanceMatrix ybus = build_ybus(c);
    const Eigen::MatrixXcd Y = ybus.dense();
    const std::size_t n = ybus.bus_ids.size();
    const auto inj = detail::bus_injections(c, ybus.index);

    PowerFlowSolution sol;
    sol.base_mva = c.base_mva;
    sol.bus_ids = ybus.bus_ids;
    sol.index = ybus.index;
    sol.v.assign(n, 1.0);
    sol.theta.assign(n, 0.0);
    sol.final_kind.resize(n);

    std::vector<double> v_set(n, 1.0), q_sched(n, 0.0);
    std::vector<int> at_limit(n, 0);  // +1 at q_max, -1 at q_min
    std::vector<bool> switched_back(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Bus& b = *c.find_bus(ybus.bus_ids[i]);
        BusKind k = b.kind;
        if (k == BusKind::pv && inj[i].machines == 0) k = BusKind::pq;  // no machine to hold voltage
        sol.final_kind[i] = k;
        if (b.v_set) v_set[i] = *b.v_set;
        if (k != BusKind::pq) sol.v[i] = v_set[i];
        q_sched[i] = inj[i].q_gen - inj[i].q_load;
    }

    // Every island needs its own angle reference; flat start puts PQ buses at
    // their island's slack magnitude.
    {
        const Islands isl = find_islands(c);
        std::map<int, int> slack_count;
        std::map<int, std::string> first_bus;
        for (std::size_t ci = 0; ci < c.buses.size(); ++ci) {
            const int lab = isl.label[ci];
            if (lab < 0) continue;
            first_bus.emplace(lab, c.buses[ci].id);
            if (c.buses[ci].kind == BusKind::slack) ++slack_count[lab];
        }
        for (const auto& [lab, bus] : first_bus)
            if (slack_count[lab] != 1)
                throw SolveError("power flow: island containing bus " + bus + " needs exactly one slack bus");
        std::map<int, double> slack_v;
        for (std::size_t ci = 0; ci < c.buses.size(); ++ci)
            if (isl.label[ci] >= 0 && c.buses[ci].kind == BusKind::slack)
                slack_v[isl.label[ci]] = c.buses[ci].v_set.value_or(1.0);
        for (std::size_t ci = 0; ci < c.buses.size(); ++ci) {
            if (isl.label[ci] < 0) continue;
            const auto i = static_cast<std::size_t>(ybus.index.at(c.buses[ci].id));
            if (sol.final_kind[i] == BusKind::pq) sol.v[i] = slack_v[isl.label[ci]];
        }
    }

    if (!opt.flat_start && opt.initial) {
        for (std::size_t i = 0; i < n; ++i) {
            auto it = opt.initial->index.find(sol.bus_ids[i]);
            if (it == opt.initial->index.end()) continue;
            sol.theta[i] = opt.initial->theta[static_cast<std::size_t>(it->second)];
            if (sol.final_kind[i] == BusKind::pq) sol.v[i] = opt.initial->v[static_cast<std::size_t>(it->second)];
        }
    }

    std::vector<int> th_idx(n), v_idx(n);
    for (int iter = 0;; ++iter) {
        Eigen::VectorXcd V = detail::complex_voltages(sol.v, sol.theta);
        Eigen::VectorXcd I = Y * V;
        Eigen::VectorXcd S = V.cwiseProduct(I.conjugate());

        // Reactive limits: PV -> PQ once the first two iterations are done.
        bool switched = false;
        if (iter >= 2) {
            for (std::size_t i = 0; i < n; ++i) {
                const Bus& b = *c.find_bus(sol.bus_ids[i]);
                if (b.kind != BusKind::pv || inj[i].machines == 0) continue;
                const double q_gen = S(static_cast<Eigen::Index>(i)).imag() + inj[i].q_load;
                if (sol.final_kind[i] == BusKind::pv) {
                    if (q_gen > inj[i].q_max + 1e-9) {
                        sol.final_kind[i] = BusKind::pq;
                        at_limit[i] = 1;
                        q_sched[i] = inj[i].q_max - inj[i].q_load;
                        switched = true;
                    } else if (q_gen < inj[i].q_min - 1e-9) {
                        sol.final_kind[i] = BusKind::pq;
                        at_limit[i] = -1;
                        q_sched[i] = inj[i].q_min - inj[i].q_load;
                        switched = true;
                    }
                } else if (!switched_back[i] && at_limit[i] != 0) {
                    const bool back = (at_limit[i] > 0 && sol.v[i] > v_set[i]) || (at_limit[i] < 0 && sol.v[i] < v_set[i]);
                    if (back) {
                        sol.final_kind[i] = BusKind::pv;
                        sol.v[i] = v_set[i];
                        at_limit[i] = 0;
                        switched_back[i] = true;
                        switched = true;
                    }
                }
            }
            if (switched) {
                V = detail::complex_voltages(sol.v, sol.theta);
                I = Y * V;
                S = V.cwiseProduct(I.conjugate());
            }
        }

        int nth = 0, nv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            th_idx[i] = sol.final_kind[i] == BusKind::slack ? -1 : nth++;
        }
        for (std::size_t i = 0; i < n; ++i) {
            v_idx[i] = sol.final_kind[i] == BusKind::pq ? nth + nv++ : -1;
        }
        const int dim = nth + nv;

        Eigen::VectorXd F(dim);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            if (th_idx[i] >= 0) F(th_idx[i]) = S(ii).real() - (inj[i].p_gen - inj[i].p_load);
            if (v_idx[i] >= 0) F(v_idx[i]) = S(ii).imag() - q_sched[i];
        }
        const double mis = dim > 0 ? F.cwiseAbs().maxCoeff() : 0.0;
        sol.mismatch_history.push_back(mis);
        sol.max_mismatch = mis;
        sol.iterations = iter;
        if (mis <= opt.tolerance && !switched) {
            sol.converged = true;
            break;
        }
        if (iter >= opt.max_iterations || !std::isfinite(mis)) break;

        // dS/dtheta = j diag(V) conj(diag(I) - Y diag(V)); dS/d|V| = diag(V) conj(Y diag(Vn)) + conj(diag(I)) diag(Vn)
        const Eigen::VectorXcd Vn = V.cwiseQuotient(V.cwiseAbs().cast<Complex>());
        Eigen::MatrixXcd dS_dth = Y * V.asDiagonal();
        dS_dth = -dS_dth.conjugate();
        dS_dth.diagonal() += I.conjugate();
        dS_dth = (Complex(0, 1) * V).asDiagonal() * dS_dth;
        Eigen::MatrixXcd dS_dv = V.asDiagonal() * (Y * Vn.asDiagonal()).conjugate();
        dS_dv.diagonal() += I.conjugate().cwiseProduct(Vn);

        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t k = 0; k < n; ++k) {
                const auto kk = static_cast<Eigen::Index>(k);
                if (th_idx[i] >= 0) {
                    if (th_idx[k] >= 0) J(th_idx[i], th_idx[k]) = dS_dth(ii, kk).real();
                    if (v_idx[k] >= 0) J(th_idx[i], v_idx[k]) = dS_dv(ii, kk).real();
                }
                if (v_idx[i] >= 0) {
                    if (th_idx[k] >= 0) J(v_idx[i], th_idx[k]) = dS_dth(ii, kk).imag();
                    if (v_idx[k] >= 0) J(v_idx[i], v_idx[k]) = dS_dv(ii, kk).imag();
                }
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            Eigen::Index worst_row = 0;
            J.rowwise().norm().minCoeff(&worst_row);
            std::string worst_bus;
            for (std::size_t i = 0; i < n; ++i)
                if (th_idx[i] == worst_row || v_idx[i] == worst_row) worst_bus = sol.bus_ids[i];
            throw SolveError("power flow: singular Jacobian at iteration " + std::to_string(iter) + ", worst bus " +
                             worst_bus);
        }
        const Eigen::VectorXd dx = lu.solve(-F);
        for (std::size_t i = 0; i < n; ++i) {
            if (th_idx[i] >= 0) sol.theta[i] += dx(th_idx[i]);
            if (v_idx[i] >= 0) sol.v[i] += dx(v_idx[i]);
        }
    }

    sol.q_limit = at_limit;

    // Results in engineering units.
    sol.flows = branch_flows(c, sol);
    const Eigen::VectorXcd V = detail::complex_voltages(sol.v, sol.theta);
    const Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
    for (const auto& m : c.machines) {
        if (!m.in_service) continue;
        auto it = ybus.index.find(m.bus);
        if (it == ybus.index.end()) continue;
        const auto i = static_cast<std::size_t>(it->second);
        const auto ii = static_cast<Eigen::Index>(i);
        const double share = m.mbase / inj[i].mbase_total;
        MachineOutput out{m.p_mw, m.q_mvar};
        if (sol.final_kind[i] == BusKind::slack)
            out.p_mw = (S(ii).real() + inj[i].p_load) * share * c.base_mva;
        if (sol.final_kind[i] != BusKind::pq || at_limit[i] != 0)
            out.q_mvar = (S(ii).imag() + inj[i].q_load) * share * c.base_mva;
        sol.machines[m.id] = out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.final_kind[i] != BusKind::slack) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        sol.slack_generation[sol.bus_ids[i]] =
            Complex(S(ii).real() + inj[i].p_load, S(ii).imag() + inj[i].q_load) * c.base_mva;
    }
    return sol;
}

/// Generation, load and branch losses in MW; generation - load - losses is
/// the residual imbalance.
struct PowerBalance {
    double generation_mw = 0.0;
    double load_mw = 0.0;
    double losses_mw = 0.0;
    double residual_mw() const { return generation_mw - load_mw - losses_mw; }
};

inline PowerBalance power_balance(const NetworkCase& c, const PowerFlowSolution& s) {
    PowerBalance b;
    for (const auto& [id, out] : s.machines) b.generation_mw += out.p_mw;
    for (const auto& l : c.loads)
        if (l.in_service && s.index.count(l.bus)) b.load_mw += l.p_mw;
    for (const auto& f : s.flows)
        if (f.in_service) b.losses_mw += f.loss_mw();
    return b;
}

// ---------------------------------------------------------------------------
// Steady-state stage comparison

enum class Stage { pre_event, during_event, post_event };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::pre_event: return "pre-event";
        case Stage::during_event: return "during-event";
        case Stage::post_event: return "post-event";
    }
    return "pre-event";
}

struct StageRow {
    std::string signal;
    std::string channel;
    double measured = 0.0;
    double simulated = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
};

struct StageComparison {
    Stage stage = Stage::pre_event;
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<StageRow> rows;  // descending relative error
    std::vector<std::string> unmapped;  // no mapping, or mapped to an unknown quantity
    std::vector<std::string> no_data;  // mapped but no samples inside the window
};

/// Steady-state value of a channel in a solution: V in pu, P/Q in MW/MVAr at
/// the from end, F at nominal frequency.
inline std::optional<double> steady_value(const PowerFlowSolution& s, const std::string& channel, double f_nom = 60.0) {
    if (channel.size() < 3 || channel[1] != ':') return std::nullopt;
    const std::string rest = channel.substr(2);
    switch (channel[0]) {
        case 'V':
            if (s.index.count(rest)) return s.v_of(rest);
            return std::nullopt;
        case 'F':
            if (s.index.count(rest)) return f_nom;
            return std::nullopt;
        case 'P':
        case 'Q':
            for (const auto& f : s.flows) {
                if (rest == f.from + "-" + f.to + ":" + f.circuit) return channel[0] == 'P' ? f.p_from : f.q_from;
            }
            return std::nullopt;
        default: return std::nullopt;
    }
}

/// Arithmetic mean of the samples with t in [t0, t1].
inline std::optional<double> window_mean(const Series& s, double t0, double t1) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        if (s.t[i] < t0 || s.t[i] > t1) continue;
        sum += s.v[i];
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

inline StageComparison compare_stage(const PowerFlowSolution& solution, const MeasurementSet& ms, Stage stage,
                                     double t0, double t1, double f_nom = 60.0) {
    if (!(t1 > t0))
        throw DataError("compare_stage: empty window [" + csv::num(t0) + ", " + csv::num(t1) + "] for " + to_string(stage));
    StageComparison out;
    out.stage = stage;
    out.t0 = t0;
    out.t1 = t1;
    for (const auto& [signal, series] : ms.signals) {
        auto channel = ms.channel_of(signal);
        std::optional<double> sim;
        if (channel) sim = steady_value(solution, *channel, f_nom);
        if (!sim) {
            out.unmapped.push_back(signal);
            continue;
        }
        auto meas = window_mean(series, t0, t1);
        if (!meas) {
            out.no_data.push_back(signal);
            continue;
        }
        StageRow row{signal, *channel, *meas, *sim, std::abs(*sim - *meas), 0.0};
        row.rel_error = row.abs_error / std::max(std::abs(*meas), 1e-12);
        out.rows.push_back(std::move(row));
    }
    std::stable_sort(out.rows.begin(), out.rows.end(), [](const StageRow& a, const StageRow& b) {
        if (a.rel_error != b.rel_error) return a.rel_error > b.rel_error;
        return a.signal < b.signal;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Export

inline std::string solution_bus_csv(const NetworkCase& c, const PowerFlowSolution& s) {
    std::ostringstream os;
    os << "bus,area,kind,base_kv,v_pu,theta_rad\n";
    for (std::size_t i = 0; i < s.bus_ids.size(); ++i) {
        const Bus& b = *c.find_bus(s.bus_ids[i]);
        os << b.id << ',' << b.area << ',' << to_string(s.final_kind[i]) << ',' << csv::num(b.base_kv) << ','
           << csv::num(s.v[i]) << ',' << csv::num(s.theta[i]) << '\n';
    }
    return os.str();
}

inline std::string solution_branch_csv(const PowerFlowSolution& s) {
    std::ostringstream os;
    os << "id,from,to,circuit,type,in_service,p_from_mw,q_from_mvar,p_to_mw,q_to_mvar,loss_mw,loading\n";
    for (const auto& f : s.flows) {
        os << f.id << ',' << f.from << ',' << f.to << ',' << f.circuit << ',' << (f.transformer ? "transformer" : "line")
           << ',' << (f.in_service ? 1 : 0) << ',' << csv::num(f.p_from) << ',' << csv::num(f.q_from) << ','
           << csv::num(f.p_to) << ',' << csv::num(f.q_to) << ',' << csv::num(f.loss_mw()) << ','
           << csv::num(f.loading()) << '\n';
    }
    return os.str();
}

}  // namespace gridseam
