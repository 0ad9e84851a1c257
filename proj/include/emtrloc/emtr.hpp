#pragma once

// The three fault-location methods. Each sweeps the guess grid, computes
// the short-circuit branch-current energy per position, and returns the
// argmax as the located fault. locate_classic re-injects the time-reversed
// port capture, locate_direct injects it unreversed, and locate_convolution
// needs no network solve at all: it convolves the capture against
// precomputed per-position responses from a TransientDB.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "emtrloc/errors.hpp"
#include "emtrloc/netmodel.hpp"
#include "emtrloc/signals.hpp"
#include "emtrloc/solver.hpp"
#include "emtrloc/store.hpp"

namespace emtrloc {

struct EnergyCurve {
    struct Entry {
        GridPosition position;
        double energy = 0.0;
        double normalized = 0.0;
    };
    std::vector<Entry> entries; // ordered by (segment id, distance)
    std::size_t argmax = 0;
    double max_energy = 0.0;
    bool multi_max = false;
};

struct LocationResult {
    std::string method;
    GridPosition located;
    std::string located_key;
    EnergyCurve curve;
    double contrast = 1.0;
    bool degenerate = false;
    std::vector<std::string> warnings;
};

// Peak energy over the median of all non-argmax energies; 1 means the curve
// carries no location information.
inline double contrast_ratio(const EnergyCurve& curve) {
    if (curve.entries.size() < 3)
        throw Error("contrast ratio needs at least 3 grid points");
    std::vector<double> rest;
    rest.reserve(curve.entries.size() - 1);
    for (std::size_t i = 0; i < curve.entries.size(); ++i)
        if (i != curve.argmax) rest.push_back(curve.entries[i].energy);
    std::sort(rest.begin(), rest.end());
    const std::size_t m = rest.size();
    const double median = m % 2 ? rest[m / 2] : 0.5 * (rest[m / 2 - 1] + rest[m / 2]);
    if (median == 0.0) return curve.max_energy == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return curve.max_energy / median;
}

namespace detail {

// Ties resolve to the first (smallest) position key; the grid is already in
// key order.
inline EnergyCurve build_curve(const std::vector<GridPosition>& positions,
                               const std::vector<double>& energies) {
    EnergyCurve curve;
    curve.entries.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        curve.entries[i].position = positions[i];
        curve.entries[i].energy = energies[i];
        if (energies[i] > curve.entries[curve.argmax].energy) curve.argmax = i;
    }
    curve.max_energy = curve.entries.empty() ? 0.0 : curve.entries[curve.argmax].energy;
    for (std::size_t i = 0; i < curve.entries.size(); ++i) {
        if (i != curve.argmax && curve.entries[i].energy == curve.max_energy) curve.multi_max = true;
        curve.entries[i].normalized =
            curve.max_energy > 0.0 ? curve.entries[i].energy / curve.max_energy : 0.0;
    }
    return curve;
}

inline LocationResult finish_result(std::string method, EnergyCurve curve) {
    LocationResult res;
    res.method = std::move(method);
    res.curve = std::move(curve);
    res.located = res.curve.entries[res.curve.argmax].position;
    res.located_key = position_of(res.located);
    res.contrast = res.curve.entries.size() >= 3 ? contrast_ratio(res.curve) : 1.0;
    res.degenerate = res.curve.max_energy == 0.0 || res.contrast < 1.01;
    if (res.degenerate)
        res.warnings.push_back("energy curve is nearly flat (contrast " +
                               format_double(res.contrast) + "); location is not meaningful");
    if (res.curve.multi_max)
        res.warnings.push_back("multiple positions share the maximum energy; smallest key reported");
    return res;
}

} // namespace detail

// Injection source impedance for the reverse process: an explicit value, or
// the port termination when none is given.
inline double resolve_injection_ohms(const NetworkModel& net, double source_ohms) {
    if (source_ohms > 0.0) return source_ohms;
    if (auto z = net.termination_ohms(net.port_node)) return *z;
    throw Error("port node '" + net.port_node +
                "' has no termination; specify the injection source impedance");
}

namespace detail {

inline LocationResult locate_by_injection(const NetworkModel& net, const SignalTrace& injected,
                                          const GuessGrid& grid, const FrequencyGrid& fgrid,
                                          double source_ohms, const char* method) {
    fgrid.validate();
    if (grid.positions.empty()) throw Error("guess grid is empty");
    if (!dt_close(injected.dt, fgrid.dt))
        throw Error("trace sampling interval does not match the frequency grid");
    const double z_src = resolve_injection_ohms(net, source_ohms);
    const SpectrumTrace u = analyze_time(pad_to(injected, fgrid.n_samples));

    std::vector<double> energies(grid.positions.size());
    for (std::size_t i = 0; i < grid.positions.size(); ++i) {
        const SpectrumTrace h = transfer_reverse(net, grid.positions[i], fgrid, z_src);
        energies[i] = spectrum_energy(multiply(h, u));
    }
    return finish_result(method, build_curve(grid.positions, energies));
}

} // namespace detail

// Re-inject the time-reversed capture at the port and pick the guess whose
// short-circuit branch current carries the most energy.
inline LocationResult locate_classic(const NetworkModel& net, const SignalTrace& u0,
                                     const GuessGrid& grid, const FrequencyGrid& fgrid,
                                     double source_ohms = 0.0) {
    return detail::locate_by_injection(net, time_reverse(u0), grid, fgrid, source_ohms, "classic");
}

// Same sweep with the capture injected unreversed.
inline LocationResult locate_direct(const NetworkModel& net, const SignalTrace& u0,
                                    const GuessGrid& grid, const FrequencyGrid& fgrid,
                                    double source_ohms = 0.0) {
    return detail::locate_by_injection(net, u0, grid, fgrid, source_ohms, "direct");
}

// Precompute the short-circuit response of every guess position to one
// excitation injected at the port. Identical inputs give byte-identical
// databases.
inline TransientDB precompute_db(const NetworkModel& net, const GuessGrid& grid,
                                 const SignalTrace& u, const FrequencyGrid& fgrid,
                                 double source_ohms = 0.0, std::string excitation = "custom") {
    fgrid.validate();
    if (grid.positions.empty()) throw Error("guess grid is empty");
    if (!dt_close(u.dt, fgrid.dt))
        throw Error("excitation sampling interval does not match the frequency grid");
    if (energy(u) == 0.0) throw Error("excitation signal is identically zero");
    const double z_src = resolve_injection_ohms(net, source_ohms);
    const SpectrumTrace spec = analyze_time(pad_to(u, fgrid.n_samples));

    TransientDB db;
    db.network_fingerprint = network_fingerprint(net);
    db.excitation = std::move(excitation);
    db.dt = fgrid.dt;
    db.t0 = u.t0;
    db.positions = grid.positions;
    db.traces.resize(grid.positions.size());
    for (std::size_t i = 0; i < grid.positions.size(); ++i) {
        const SpectrumTrace h = transfer_reverse(net, grid.positions[i], fgrid, z_src);
        db.traces[i] = synthesize_time(multiply(h, spec)).samples;
    }
    validate_db(db);
    return db;
}

// Locate from a stored database alone: convolve each per-position response
// with the captured fraction and take the energy argmax. No network solve,
// no time alignment of the fraction required.
inline LocationResult locate_convolution(const TransientDB& db, const SignalTrace& u0_fraction,
                                         std::optional<std::uint64_t> expected_fingerprint = {}) {
    validate_db(db);
    if (u0_fraction.samples.size() < 2) throw Error("captured fraction must span at least 2 samples");
    if (!dt_close(db.dt, u0_fraction.dt))
        throw Error("sampling interval mismatch: database dt " + format_double(db.dt) +
                    ", trace dt " + format_double(u0_fraction.dt));

    std::vector<double> energies(db.positions.size());
    for (std::size_t i = 0; i < db.positions.size(); ++i) {
        SignalTrace response{db.traces[i], db.dt, db.t0};
        energies[i] = energy(convolve(response, u0_fraction));
    }
    LocationResult res = detail::finish_result("convolution", detail::build_curve(db.positions, energies));
    if (expected_fingerprint && *expected_fingerprint != db.network_fingerprint)
        res.warnings.push_back("database fingerprint " + fingerprint_hex(db.network_fingerprint) +
                               " does not match network fingerprint " +
                               fingerprint_hex(*expected_fingerprint) +
                               "; results may belong to a different network");
    return res;
}

// Shortest capture worth feeding the locators: 25 traversals of the longest
// port-to-leaf path at the slowest configured wave speed (the midpoint of
// the 20-30 reflections rule of thumb).
inline double min_signal_length_estimate(const NetworkModel& net) {
    return 25.0 * longest_port_to_leaf_path_m(net) / slowest_wave_speed(net);
}

inline void write_curve_csv(const EnergyCurve& curve, std::ostream& out) {
    out << "segment,distance_m,energy,normalized\n";
    for (const auto& e : curve.entries)
        out << e.position.segment_id << ',' << format_double(e.position.distance_m) << ','
            << format_double(e.energy) << ',' << format_double(e.normalized) << '\n';
    if (!out) throw Error("energy curve CSV write failed");
}

} // namespace emtrloc
