#pragma once

// Frequency-domain nodal solver for branched line networks. Each fault or
// guess position splits its segment into two sub-segments joined at a new
// node; per-bin complex nodal systems are assembled from exact PI segment
// models and solved with a dense LU. Results merge deterministically by bin
// index, so spectra are bit-identical for any thread count.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "emtrloc/errors.hpp"
#include "emtrloc/linemath.hpp"
#include "emtrloc/netmodel.hpp"
#include "emtrloc/signals.hpp"

namespace emtrloc {

// Network with split positions materialized as extra nodes. Immutable after
// construction; shared read-only by concurrent per-bin solves.
struct SplitNet {
    struct Piece {
        LineParams params;
        double length = 0.0;
        int a = -1;
        int b = -1;
    };

    std::vector<std::string> node_ids; // declared nodes first, split nodes appended
    std::vector<Piece> pieces;
    std::vector<std::pair<int, double>> terminations; // (node, ohms)
    int port = -1;
    std::vector<int> split_nodes; // node index per requested split, input order
};

inline SplitNet build_split(const NetworkModel& net, const std::vector<GridPosition>& splits) {
    SplitNet sn;
    std::map<std::string, int, std::less<>> index;
    for (const auto& n : net.nodes) {
        index.emplace(n, static_cast<int>(sn.node_ids.size()));
        sn.node_ids.push_back(n);
    }

    // cut points per segment, ascending
    std::map<std::string, std::vector<std::pair<double, int>>, std::less<>> cuts;
    sn.split_nodes.resize(splits.size(), -1);
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const GridPosition& p = splits[i];
        const LineSegment& seg = net.segment(p.segment_id);
        if (!(p.distance_m > 0.0) || !(p.distance_m < seg.length_m))
            throw Error("split position " + position_of(p) + " outside segment interior");
        const std::string name = position_of(p);
        auto [it, fresh] = index.emplace(name, static_cast<int>(sn.node_ids.size()));
        if (fresh) {
            sn.node_ids.push_back(name);
            cuts[seg.id].emplace_back(p.distance_m, it->second);
        }
        sn.split_nodes[i] = it->second;
    }

    for (const auto& seg : net.segments) {
        auto it = cuts.find(seg.id);
        int prev = index.at(seg.from_node);
        double prev_d = 0.0;
        if (it != cuts.end()) {
            std::sort(it->second.begin(), it->second.end());
            for (const auto& [d, node] : it->second) {
                sn.pieces.push_back({seg.params, d - prev_d, prev, node});
                prev = node;
                prev_d = d;
            }
        }
        sn.pieces.push_back({seg.params, seg.length_m - prev_d, prev, index.at(seg.to_node)});
    }

    for (const auto& t : net.terminations) sn.terminations.emplace_back(index.at(t.node), t.ohms);
    sn.port = index.at(net.port_node);
    return sn;
}

// Assembled admittance system at one frequency. Lossless segments have zero
// series impedance at DC; their end nodes are merged instead of receiving an
// infinite admittance, and `rep` maps every split-net node to its compact
// merged row.
struct NodalSystem {
    Eigen::MatrixXcd y;
    std::vector<int> rep;
    std::size_t size() const { return static_cast<std::size_t>(y.rows()); }
};

inline NodalSystem assemble_nodal(const SplitNet& sn, double omega) {
    const std::size_t n = sn.node_ids.size();
    std::vector<SegmentPi> pis;
    pis.reserve(sn.pieces.size());
    for (const auto& piece : sn.pieces) pis.push_back(segment_pi(omega, piece.params, piece.length));

    std::vector<int> root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (root[static_cast<std::size_t>(x)] != x)
            x = root[static_cast<std::size_t>(x)] =
                root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
        return x;
    };
    for (std::size_t i = 0; i < sn.pieces.size(); ++i)
        if (pis[i].series_impedance == cplx(0.0, 0.0))
            root[static_cast<std::size_t>(find(sn.pieces[i].a))] = find(sn.pieces[i].b);

    NodalSystem sys;
    sys.rep.assign(n, -1);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int r = find(static_cast<int>(i));
        if (sys.rep[static_cast<std::size_t>(r)] < 0) sys.rep[static_cast<std::size_t>(r)] = m++;
    }
    for (std::size_t i = 0; i < n; ++i)
        sys.rep[i] = sys.rep[static_cast<std::size_t>(find(static_cast<int>(i)))];

    sys.y = Eigen::MatrixXcd::Zero(m, m);
    for (std::size_t i = 0; i < sn.pieces.size(); ++i) {
        const int a = sys.rep[static_cast<std::size_t>(sn.pieces[i].a)];
        const int b = sys.rep[static_cast<std::size_t>(sn.pieces[i].b)];
        sys.y(a, a) += pis[i].shunt_admittance;
        sys.y(b, b) += pis[i].shunt_admittance;
        if (pis[i].series_impedance != cplx(0.0, 0.0)) {
            const cplx ys = 1.0 / pis[i].series_impedance;
            sys.y(a, a) += ys;
            sys.y(b, b) += ys;
            sys.y(a, b) -= ys;
            sys.y(b, a) -= ys;
        }
    }
    for (const auto& [node, ohms] : sn.terminations)
        sys.y(sys.rep[static_cast<std::size_t>(node)], sys.rep[static_cast<std::size_t>(node)]) +=
            1.0 / ohms;
    return sys;
}

// One frequency bin's excitation: Norton current injections, extra shunt
// admittances, and known node voltages (short-circuit branches are voltage
// constraints of 0; an ideal fault source is a constraint of the source
// value).
struct BinInputs {
    std::vector<std::pair<int, cplx>> injections;
    std::vector<std::pair<int, cplx>> shunts;
    std::vector<std::pair<int, cplx>> constraints;
};

struct BinSolution {
    Eigen::VectorXcd v;                     // voltage per split-net node
    std::vector<cplx> constraint_currents;  // per constraint: current from node into the constraint
};

inline BinSolution solve_bin(const SplitNet& sn, double omega, const BinInputs& in) {
    NodalSystem sys = assemble_nodal(sn, omega);
    const auto m = static_cast<std::size_t>(sys.y.rows());
    auto rep = [&](int node) { return sys.rep[static_cast<std::size_t>(node)]; };

    Eigen::VectorXcd j = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m));
    for (const auto& [node, amps] : in.injections) j(rep(node)) += amps;
    for (const auto& [node, y] : in.shunts) sys.y(rep(node), rep(node)) += y;

    // record pre-constraint rows for branch-current extraction
    std::vector<int> crow;
    std::vector<cplx> cval;
    for (const auto& [node, volts] : in.constraints) {
        const int r = rep(node);
        for (std::size_t i = 0; i < crow.size(); ++i)
            if (crow[i] == r && cval[i] != volts)
                throw SolveError("conflicting voltage constraints on merged node");
        crow.push_back(r);
        cval.push_back(volts);
    }
    Eigen::MatrixXcd saved_rows(static_cast<Eigen::Index>(crow.size()), static_cast<Eigen::Index>(m));
    Eigen::VectorXcd saved_j(static_cast<Eigen::Index>(crow.size()));
    for (std::size_t i = 0; i < crow.size(); ++i) {
        saved_rows.row(static_cast<Eigen::Index>(i)) = sys.y.row(crow[i]);
        saved_j(static_cast<Eigen::Index>(i)) = j(crow[i]);
    }

    for (std::size_t i = 0; i < crow.size(); ++i) {
        const int c = crow[i];
        j -= sys.y.col(c) * cval[i];
        sys.y.row(c).setZero();
        sys.y.col(c).setZero();
        sys.y(c, c) = 1.0;
        j(c) = cval[i];
    }

    if (!sys.y.allFinite())
        throw SolveError("non-finite admittance entries at omega=" + format_double(omega));
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(sys.y);
    if (!lu.isInvertible())
        throw SolveError("singular nodal matrix at omega=" + format_double(omega));
    Eigen::VectorXcd vm = lu.solve(j);
    if (!vm.allFinite())
        throw SolveError("nodal solve produced non-finite voltages at omega=" + format_double(omega));

    BinSolution out;
    out.v.resize(static_cast<Eigen::Index>(sn.node_ids.size()));
    for (std::size_t i = 0; i < sn.node_ids.size(); ++i)
        out.v(static_cast<Eigen::Index>(i)) = vm(sys.rep[i]);
    out.constraint_currents.resize(crow.size());
    for (std::size_t i = 0; i < crow.size(); ++i)
        out.constraint_currents[i] =
            saved_j(static_cast<Eigen::Index>(i)) -
            (saved_rows.row(static_cast<Eigen::Index>(i)) * vm)(0, 0);
    return out;
}

// Runs fn(k) for k in [0, n_bins). Work is chunked over threads; callers
// must write results into per-index slots, which keeps output independent of
// the thread count. The lowest-chunk exception wins deterministically.
template <class F>
void parallel_bins(std::size_t n_bins, F&& fn, unsigned n_threads = 0) {
    unsigned hw = n_threads ? n_threads : std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::size_t nt = std::min<std::size_t>(std::min<unsigned>(hw, 16u), n_bins ? n_bins : 1);
    if (nt <= 1) {
        for (std::size_t k = 0; k < n_bins; ++k) fn(k);
        return;
    }
    std::vector<std::exception_ptr> errs(nt);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_bins + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(n_bins, lo + chunk);
            try {
                for (std::size_t k = lo; k < hi; ++k) fn(k);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

namespace detail {

template <class PerBin>
SpectrumTrace sweep_bins(const FrequencyGrid& fgrid, PerBin&& per_bin) {
    fgrid.validate();
    SpectrumTrace s;
    s.n_samples = fgrid.n_samples;
    s.dt = fgrid.dt;
    s.bins.resize(fgrid.n_bins());
    parallel_bins(fgrid.n_bins(), [&](std::size_t k) {
        try {
            s.bins[k] = per_bin(fgrid.omega(k));
        } catch (const SolveError& e) {
            throw SolveError("bin " + std::to_string(k) + ": " + e.what());
        }
    });
    return s;
}

} // namespace detail

// Port voltage per unit fault source behind fault_ohms at the fault point.
inline SpectrumTrace transfer_forward(const NetworkModel& net, const FaultSpec& fault,
                                      const FrequencyGrid& fgrid) {
    validate_fault(net, fault);
    const SplitNet sn = build_split(net, {{fault.segment_id, fault.distance_m}});
    const int split = sn.split_nodes[0];
    return detail::sweep_bins(fgrid, [&](double omega) {
        BinInputs in;
        if (fault.fault_ohms > 0.0) {
            in.injections.emplace_back(split, 1.0 / fault.fault_ohms);
            in.shunts.emplace_back(split, 1.0 / fault.fault_ohms);
        } else {
            in.constraints.emplace_back(split, 1.0);
        }
        return solve_bin(sn, omega, in).v(sn.port);
    });
}

inline SpectrumTrace forward_response(const NetworkModel& net, const FaultSpec& fault,
                                      const SpectrumTrace& source_spectrum) {
    const SpectrumTrace h =
        transfer_forward(net, fault, {source_spectrum.n_samples, source_spectrum.dt});
    return multiply(h, source_spectrum);
}

// Short-circuit branch current at the guess position per unit voltage
// injected at the port behind source_ohms (Norton current 1/source_ohms;
// the port termination stays in place as the source admittance).
inline SpectrumTrace transfer_reverse(const NetworkModel& net, const GridPosition& guess,
                                      const FrequencyGrid& fgrid, double source_ohms) {
    if (!(source_ohms > 0.0)) throw Error("injection source impedance must be positive");
    const SplitNet sn = build_split(net, {guess});
    const int split = sn.split_nodes[0];
    return detail::sweep_bins(fgrid, [&](double omega) {
        BinInputs in;
        in.injections.emplace_back(sn.port, 1.0 / source_ohms);
        in.constraints.emplace_back(split, 0.0);
        return solve_bin(sn, omega, in).constraint_currents[0];
    });
}

inline SpectrumTrace reverse_response(const NetworkModel& net, const GridPosition& guess,
                                      const SpectrumTrace& injected_spectrum, double source_ohms) {
    const SpectrumTrace h = transfer_reverse(
        net, guess, {injected_spectrum.n_samples, injected_spectrum.dt}, source_ohms);
    return multiply(h, injected_spectrum);
}

enum class FaultInception {
    voltage_peak,   // fault closes at the pre-fault voltage maximum
    zero_crossing,  // fault closes at the pre-fault voltage zero
};

// Port transient by superposition: pre-fault phasor solve gives the voltage
// at the fault point; the negated post-inception waveform is applied there
// through fault_ohms and propagated back to the port.
inline SignalTrace simulate_fault_transient(const NetworkModel& net, const FaultSpec& fault,
                                            const FrequencyGrid& fgrid,
                                            FaultInception inception = FaultInception::voltage_peak,
                                            std::vector<std::string>* warnings = nullptr) {
    fgrid.validate();
    validate_fault(net, fault);
    if (!net.steady_source)
        throw Error("network has no [source] section; cannot simulate a fault transient");
    const SteadySource& src = *net.steady_source;
    const double w0 = 2.0 * std::numbers::pi * src.hz;

    // pre-fault phasor at the fault point (split node is a passive junction)
    const SplitNet sn = build_split(net, {{fault.segment_id, fault.distance_m}});
    const int split = sn.split_nodes[0];
    const int src_node = [&] {
        for (std::size_t i = 0; i < sn.node_ids.size(); ++i)
            if (sn.node_ids[i] == src.node) return static_cast<int>(i);
        throw Error("source node not found");
    }();
    BinInputs pre;
    if (auto z = net.termination_ohms(src.node))
        pre.injections.emplace_back(src_node, src.volts / *z);
    else
        pre.constraints.emplace_back(src_node, src.volts);
    const cplx v_pre = solve_bin(sn, w0, pre).v(split);

    // superimposed fault source, inception at t = 0
    const double amp = std::abs(v_pre);
    const double theta0 = inception == FaultInception::voltage_peak ? std::numbers::pi / 2.0 : 0.0;
    SignalTrace uf;
    uf.dt = fgrid.dt;
    uf.samples.resize(fgrid.n_samples);
    for (std::size_t i = 0; i < fgrid.n_samples; ++i)
        uf.samples[i] = -amp * std::sin(w0 * fgrid.dt * static_cast<double>(i) + theta0);

    const SpectrumTrace h = transfer_forward(net, fault, fgrid);
    SignalTrace u0 = synthesize_time(multiply(h, analyze_time(uf)));

    if (warnings) {
        const double travel = longest_port_to_leaf_path_m(net) / slowest_wave_speed(net);
        if (fgrid.duration() < 20.0 * travel)
            warnings->push_back("window " + format_double(fgrid.duration()) +
                                " s is shorter than 20 one-way travel times (" +
                                format_double(20.0 * travel) + " s); reflections are undersampled");
        double peak = 0.0;
        for (double v : u0.samples) peak = std::max(peak, std::abs(v));
        double tail = 0.0;
        const std::size_t tail_start = u0.samples.size() - std::max<std::size_t>(u0.samples.size() / 100, 1);
        for (std::size_t i = tail_start; i < u0.samples.size(); ++i)
            tail = std::max(tail, std::abs(u0.samples[i]));
        if (peak > 0.0 && tail > 0.01 * peak)
            warnings->push_back("transient has not decayed below 1% of peak by the end of the window");
    }
    return u0;
}

} // namespace emtrloc
