// Command-line front end: simulate fault transients, precompute transient
// databases, locate faults with any of the three methods, and run labeled
// experiment sweeps. All numeric flags accept SI suffixes (us, ms, km).
// Data goes to files, warnings and the effective config to stderr; exit
// code is 0 iff no error.

#include <CLI11.hpp>

#include <emtrloc/emtrloc.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace emtrloc;

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

NetworkModel load_network(const std::string& path) {
    try {
        return parse_network(slurp_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// Flags arrive as strings so "0.1us" and "0.5km" parse uniformly.
double qty(const std::string& text, const char* flag) {
    try {
        return parse_quantity(text);
    } catch (const std::invalid_argument&) {
        throw Error(std::string(flag) + ": cannot parse quantity '" + text + "'");
    }
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

struct ExcitationConfig {
    std::string kind = "impulse"; // impulse | ac | noise
    std::string alpha = "20us";
    std::string beta = "3us";
    double amplitude = 1.0;
    double hz = 50.0;
    double phase = 0.0;
    std::uint64_t seed = 1;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--excitation", kind, "Excitation kind: impulse, ac or noise")
            ->check(CLI::IsMember({"impulse", "ac", "noise"}))
            ->capture_default_str();
        cmd->add_option("--alpha", alpha, "Impulse tail time constant")->capture_default_str();
        cmd->add_option("--beta", beta, "Impulse front time constant")->capture_default_str();
        cmd->add_option("--amplitude", amplitude, "Excitation amplitude")->capture_default_str();
        cmd->add_option("--hz", hz, "AC excitation frequency")->capture_default_str();
        cmd->add_option("--phase", phase, "AC excitation phase (rad)")->capture_default_str();
        cmd->add_option("--seed", seed, "Noise generator seed")->capture_default_str();
    }

    SignalTrace build(const std::string& which, const FrequencyGrid& fgrid,
                      std::string* descriptor) const {
        SignalTrace u;
        std::string desc;
        if (which == "impulse") {
            const double a = qty(alpha, "--alpha");
            const double b = qty(beta, "--beta");
            u = lightning_impulse(fgrid, a, b, amplitude);
            desc = "impulse alpha=" + format_double(a) + " beta=" + format_double(b) +
                   " amplitude=" + format_double(amplitude);
        } else if (which == "ac") {
            u = power_frequency(fgrid, amplitude, hz, phase);
            desc = "ac amplitude=" + format_double(amplitude) + " hz=" + format_double(hz) +
                   " phase=" + format_double(phase);
        } else if (which == "noise") {
            u = white_noise(fgrid, amplitude, seed);
            desc = "noise amplitude=" + format_double(amplitude) + " seed=" + std::to_string(seed);
        } else {
            throw Error("unknown excitation kind '" + which + "'");
        }
        if (descriptor) *descriptor = desc;
        return u;
    }
};

void write_curve_file(const EnergyCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_curve_csv(curve, out);
}

void report_result(const LocationResult& res) {
    print_warnings(res.warnings);
    std::cout << "located " << res.located_key << " energy "
              << format_double(res.curve.max_energy) << " contrast "
              << format_double(res.contrast) << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"Transmission-line transient simulator and fault locator"};
    app.require_subcommand(1);

    // shared option storage
    std::string network_path, out_path, trace_path, db_path;
    std::string dt_text = "0.1us", window_text = "5ms";
    std::string inject_text;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate the port transient of a fault");
    std::string sim_segment, sim_distance, sim_fault_ohms = "0", sim_inception = "peak";
    sim->add_option("--network", network_path, "Network description file")->required();
    sim->add_option("--segment", sim_segment, "Faulted segment id")->required();
    sim->add_option("--distance", sim_distance, "Fault distance from the segment's from node")
        ->required();
    sim->add_option("--fault-ohms", sim_fault_ohms, "Fault impedance (0 = ideal short)")
        ->capture_default_str();
    sim->add_option("--inception", sim_inception, "Fault inception: peak or zero")
        ->check(CLI::IsMember({"peak", "zero"}))
        ->capture_default_str();
    sim->add_option("--dt", dt_text, "Sample interval")->capture_default_str();
    sim->add_option("--window", window_text, "Simulation window")->capture_default_str();
    sim->add_option("--out", out_path, "Output trace CSV")->required();

    // precompute
    auto* pre = app.add_subcommand("precompute", "Build a transient database for a guess grid");
    std::string pre_spacing;
    ExcitationConfig pre_exc;
    pre->add_option("--network", network_path, "Network description file")->required();
    pre->add_option("--spacing", pre_spacing, "Guess grid spacing")->required();
    pre_exc.add_flags(pre);
    pre->add_option("--dt", dt_text, "Sample interval")->capture_default_str();
    pre->add_option("--window", window_text, "Response window")->capture_default_str();
    pre->add_option("--inject-ohms", inject_text,
                    "Injection source impedance (default: port termination)");
    pre->add_option("--out", out_path, "Output database file")->required();

    // locate
    auto* loc = app.add_subcommand("locate", "Locate a fault from a captured port trace");
    std::string loc_method, loc_spacing, loc_fraction_start, loc_fraction_length;
    loc->add_option("--method", loc_method, "classic, direct or convolution")
        ->required()
        ->check(CLI::IsMember({"classic", "direct", "convolution"}));
    loc->add_option("--trace", trace_path, "Captured port trace CSV")->required();
    loc->add_option("--network", network_path,
                    "Network description file (required for classic/direct)");
    loc->add_option("--db", db_path, "Transient database (required for convolution)");
    loc->add_option("--spacing", loc_spacing, "Guess grid spacing (classic/direct)");
    loc->add_option("--window", window_text, "Reverse-process window (classic/direct)");
    loc->add_option("--fraction-start", loc_fraction_start, "Fraction start within the trace");
    loc->add_option("--fraction-length", loc_fraction_length, "Fraction length");
    loc->add_option("--inject-ohms", inject_text,
                    "Injection source impedance (default: port termination)");
    loc->add_option("--out", out_path, "Output energy curve CSV");

    // sweep
    auto* swp = app.add_subcommand("sweep", "Run a labeled experiment sweep");
    std::string swp_lengths, swp_starts, swp_length, swp_excitations, swp_spacing;
    ExcitationConfig swp_exc;
    swp->add_option("--trace", trace_path, "Captured port trace CSV")->required();
    swp->add_option("--network", network_path, "Network description file");
    swp->add_option("--db", db_path, "Transient database (length/start sweeps)");
    swp->add_option("--lengths", swp_lengths, "Comma list of fraction lengths");
    swp->add_option("--starts", swp_starts, "Comma list of fraction start times");
    swp->add_option("--length", swp_length, "Fraction length used with --starts");
    swp->add_option("--excitations", swp_excitations,
                    "Comma list of database excitations to compare (impulse,ac,noise)");
    swp->add_option("--spacing", swp_spacing, "Guess grid spacing (--excitations sweep)");
    swp_exc.add_flags(swp);
    swp->add_option("--dt", dt_text, "Sample interval for built databases")->capture_default_str();
    swp->add_option("--window", window_text, "Window for built databases")->capture_default_str();
    swp->add_option("--inject-ohms", inject_text,
                    "Injection source impedance (default: port termination)");
    swp->add_option("--out", out_path, "Output multi-curve CSV")->required();

    CLI11_PARSE(app, argc, argv);

    const double inject_ohms = inject_text.empty() ? 0.0 : qty(inject_text, "--inject-ohms");

    if (*sim) {
        const double dt = qty(dt_text, "--dt");
        const double window = qty(window_text, "--window");
        std::cerr << "config: simulate network=" << network_path << " segment=" << sim_segment
                  << " distance=" << format_double(qty(sim_distance, "--distance"))
                  << " fault_ohms=" << format_double(qty(sim_fault_ohms, "--fault-ohms"))
                  << " dt=" << format_double(dt) << " window=" << format_double(window)
                  << " inception=" << sim_inception << '\n';
        const NetworkModel net = load_network(network_path);
        const FaultSpec fault{sim_segment, qty(sim_distance, "--distance"),
                              qty(sim_fault_ohms, "--fault-ohms")};
        const FrequencyGrid fgrid = grid_for_window(dt, window);
        std::vector<std::string> warnings;
        const auto inception = sim_inception == "peak" ? FaultInception::voltage_peak
                                                       : FaultInception::zero_crossing;
        const SignalTrace u0 = simulate_fault_transient(net, fault, fgrid, inception, &warnings);
        print_warnings(warnings);
        save_trace_csv(u0, out_path);

        const double c = wave_speed(net.segment(fault.segment_id).params);
        std::cout << "wrote " << out_path << " (" << u0.samples.size() << " samples, dt "
                  << format_double(u0.dt) << " s)\n";
        std::cout << "first arrival ~" << format_double(fault.distance_m / c)
                  << " s, echo spacing ~" << format_double(2.0 * fault.distance_m / c) << " s\n";
        std::cout << "suggested minimum capture length "
                  << format_double(min_signal_length_estimate(net)) << " s\n";
        return 0;
    }

    if (*pre) {
        const double dt = qty(dt_text, "--dt");
        const double window = qty(window_text, "--window");
        const double spacing = qty(pre_spacing, "--spacing");
        std::cerr << "config: precompute network=" << network_path
                  << " spacing=" << format_double(spacing) << " excitation=" << pre_exc.kind
                  << " dt=" << format_double(dt) << " window=" << format_double(window) << '\n';
        const NetworkModel net = load_network(network_path);
        const GuessGrid grid = make_guess_grid(net, spacing);
        const FrequencyGrid fgrid = grid_for_window(dt, window);
        std::string descriptor;
        const SignalTrace u = pre_exc.build(pre_exc.kind, fgrid, &descriptor);
        const TransientDB db = precompute_db(net, grid, u, fgrid, inject_ohms, descriptor);
        save_db_file(db, out_path);
        std::cout << "wrote " << out_path << " (" << db.positions.size() << " positions x "
                  << db.n_samples() << " samples, fingerprint "
                  << fingerprint_hex(db.network_fingerprint) << ")\n";
        return 0;
    }

    if (*loc) {
        const SignalTrace trace = load_trace_csv(trace_path);
        std::cerr << "config: locate method=" << loc_method << " trace=" << trace_path
                  << (network_path.empty() ? "" : " network=" + network_path)
                  << (db_path.empty() ? "" : " db=" + db_path) << '\n';
        LocationResult res;
        if (loc_method == "convolution") {
            if (db_path.empty()) throw Error("locate --method convolution requires --db");
            const TransientDB db = load_db_file(db_path);
            SignalTrace fraction = trace;
            if (!loc_fraction_start.empty() || !loc_fraction_length.empty()) {
                const double start =
                    loc_fraction_start.empty() ? 0.0 : qty(loc_fraction_start, "--fraction-start");
                const double length = loc_fraction_length.empty()
                                          ? trace.duration() - start
                                          : qty(loc_fraction_length, "--fraction-length");
                fraction = extract_fraction(trace, start, length);
            }
            std::optional<std::uint64_t> expect;
            if (!network_path.empty()) expect = network_fingerprint(load_network(network_path));
            res = locate_convolution(db, fraction, expect);
        } else {
            if (network_path.empty())
                throw Error("locate --method " + loc_method + " requires --network");
            if (loc_spacing.empty())
                throw Error("locate --method " + loc_method + " requires --spacing");
            if (!loc_fraction_start.empty() || !loc_fraction_length.empty())
                throw Error("--fraction-start/--fraction-length apply to the convolution method only");
            const NetworkModel net = load_network(network_path);
            const GuessGrid grid = make_guess_grid(net, qty(loc_spacing, "--spacing"));
            std::size_t n = next_pow2(trace.samples.size());
            if (!window_text.empty()) {
                const double window = qty(window_text, "--window");
                const auto want = static_cast<std::size_t>(std::llround(window / trace.dt));
                if (next_pow2(want) > n) n = next_pow2(want);
            }
            const FrequencyGrid fgrid{n, trace.dt};
            res = loc_method == "classic" ? locate_classic(net, trace, grid, fgrid, inject_ohms)
                                          : locate_direct(net, trace, grid, fgrid, inject_ohms);
        }
        report_result(res);
        if (!out_path.empty()) write_curve_file(res.curve, out_path);
        return 0;
    }

    if (*swp) {
        const SignalTrace trace = load_trace_csv(trace_path);
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw Error("cannot open '" + out_path + "' for writing");
        out << "label,segment,distance_m,energy,normalized\n";
        auto emit = [&](const std::string& label, const LocationResult& res) {
            print_warnings(res.warnings);
            for (const auto& e : res.curve.entries)
                out << label << ',' << e.position.segment_id << ','
                    << format_double(e.position.distance_m) << ',' << format_double(e.energy)
                    << ',' << format_double(e.normalized) << '\n';
            std::cout << label << " located " << res.located_key << " contrast "
                      << format_double(res.contrast) << '\n';
        };

        if (!swp_lengths.empty() || !swp_starts.empty()) {
            if (db_path.empty()) throw Error("length/start sweeps require --db");
            const TransientDB db = load_db_file(db_path);
            std::optional<std::uint64_t> expect;
            if (!network_path.empty()) expect = network_fingerprint(load_network(network_path));
            if (!swp_lengths.empty()) {
                const auto items = split_list(swp_lengths);
                if (items.empty()) throw Error("--lengths list is empty");
                std::cerr << "config: sweep lengths=" << swp_lengths << " db=" << db_path << '\n';
                for (const auto& item : items) {
                    const SignalTrace fraction =
                        extract_fraction(trace, 0.0, qty(item, "--lengths"));
                    emit("len=" + item, locate_convolution(db, fraction, expect));
                }
            } else {
                const auto items = split_list(swp_starts);
                if (items.empty()) throw Error("--starts list is empty");
                if (swp_length.empty()) throw Error("--starts requires --length");
                const double length = qty(swp_length, "--length");
                std::cerr << "config: sweep starts=" << swp_starts
                          << " length=" << format_double(length) << " db=" << db_path << '\n';
                for (const auto& item : items) {
                    const SignalTrace fraction =
                        extract_fraction(trace, qty(item, "--starts"), length);
                    emit("start=" + item, locate_convolution(db, fraction, expect));
                }
            }
        } else if (!swp_excitations.empty()) {
            const auto kinds = split_list(swp_excitations);
            if (kinds.empty()) throw Error("--excitations list is empty");
            if (network_path.empty()) throw Error("--excitations sweep requires --network");
            if (swp_spacing.empty()) throw Error("--excitations sweep requires --spacing");
            const NetworkModel net = load_network(network_path);
            const GuessGrid grid = make_guess_grid(net, qty(swp_spacing, "--spacing"));
            const FrequencyGrid fgrid =
                grid_for_window(qty(dt_text, "--dt"), qty(window_text, "--window"));
            std::cerr << "config: sweep excitations=" << swp_excitations
                      << " network=" << network_path << '\n';
            for (const auto& kind : kinds) {
                std::string descriptor;
                const SignalTrace u = swp_exc.build(kind, fgrid, &descriptor);
                const TransientDB db = precompute_db(net, grid, u, fgrid, inject_ohms, descriptor);
                emit(kind, locate_convolution(db, trace, {}));
            }
        } else {
            throw Error("sweep needs one of --lengths, --starts or --excitations");
        }
        if (!out) throw Error("sweep CSV write failed");
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
