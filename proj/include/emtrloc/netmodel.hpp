#pragma once

// Network topology: nodes, distributed-parameter segments, terminations,
// measurement port, optional steady-state source. Parses and validates the
// network description file and generates the guessed-fault grid.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emtrloc/errors.hpp"
#include "emtrloc/units.hpp"

namespace emtrloc {

// Per-unit-length line constants, SI base units (ohm/m, H/m, S/m, F/m).
struct LineParams {
    double r0 = 0.0;
    double l0 = 0.0;
    double g0 = 0.0;
    double c0 = 0.0;

    friend bool operator==(const LineParams&, const LineParams&) = default;
};

// Stand-in overhead-line constants (0.1 ohm/km, 1 mH/km, 11.5 nF/km):
// wave speed ~2.95e8 m/s, characteristic impedance ~295 ohm. Every field is
// configurable per segment in the network file.
inline constexpr LineParams default_line_params() {
    return LineParams{1e-4, 1e-6, 0.0, 1.15e-11};
}

inline double wave_speed(const LineParams& p) {
    return 1.0 / std::sqrt(p.l0 * p.c0);
}

// High-frequency (lossless) characteristic impedance, used to resolve
// "matched" terminations.
inline double surge_impedance(const LineParams& p) {
    return std::sqrt(p.l0 / p.c0);
}

struct LineSegment {
    std::string id;
    std::string from_node;
    std::string to_node;
    double length_m = 0.0;
    LineParams params;

    friend bool operator==(const LineSegment&, const LineSegment&) = default;
};

struct Termination {
    std::string node;
    double ohms = 0.0; // resolved value; for matched, the incident segment's surge impedance
    bool matched = false;

    friend bool operator==(const Termination&, const Termination&) = default;
};

struct SteadySource {
    std::string node;
    double volts = 0.0;
    double hz = 0.0;

    friend bool operator==(const SteadySource&, const SteadySource&) = default;
};

struct NetworkModel {
    std::vector<std::string> nodes;          // declaration order
    std::vector<LineSegment> segments;       // declaration order
    std::vector<Termination> terminations;   // declaration order
    std::string port_node;
    std::optional<SteadySource> steady_source;

    friend bool operator==(const NetworkModel&, const NetworkModel&) = default;

    const LineSegment* find_segment(std::string_view id) const {
        for (const auto& s : segments)
            if (s.id == id) return &s;
        return nullptr;
    }

    const LineSegment& segment(std::string_view id) const {
        const LineSegment* s = find_segment(id);
        if (!s) throw ParseError("unknown segment '" + std::string(id) + "'");
        return *s;
    }

    std::optional<double> termination_ohms(std::string_view node) const {
        for (const auto& t : terminations)
            if (t.node == node) return t.ohms;
        return std::nullopt;
    }

    std::size_t degree(std::string_view node) const {
        std::size_t d = 0;
        for (const auto& s : segments)
            d += (s.from_node == node) + (s.to_node == node);
        return d;
    }
};

// A real or hypothesized short-circuit fault: distance is measured along the
// segment from its from_node.
struct FaultSpec {
    std::string segment_id;
    double distance_m = 0.0;
    double fault_ohms = 0.0; // 0 = ideal short circuit

    friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

// One candidate position on the guess grid. Ordering is (segment id,
// distance), which is also the canonical position-key order.
struct GridPosition {
    std::string segment_id;
    double distance_m = 0.0;

    friend bool operator==(const GridPosition&, const GridPosition&) = default;
    friend auto operator<=>(const GridPosition&, const GridPosition&) = default;
};

struct GuessGrid {
    double spacing_m = 0.0;
    std::vector<GridPosition> positions; // ordered by (segment id, distance)
};

// Canonical position key, e.g. "T1@4000".
inline std::string position_of(std::string_view segment_id, double distance_m) {
    std::string key(segment_id);
    key += '@';
    key += format_double(distance_m);
    return key;
}

inline std::string position_of(const GridPosition& p) {
    return position_of(p.segment_id, p.distance_m);
}

inline std::string position_of(const FaultSpec& f) {
    return position_of(f.segment_id, f.distance_m);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Identifiers may not contain '@' so synthesized split-node names
// ("S1@4000") can never collide with user-declared ids.
inline bool valid_id(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

inline std::string at_line(int line) {
    return "line " + std::to_string(line) + ": ";
}

} // namespace detail

inline void validate_network(const NetworkModel& net) {
    if (net.segments.empty()) throw ParseError("network has no segments");

    std::set<std::string> node_ids;
    for (const auto& n : net.nodes)
        if (!node_ids.insert(n).second) throw ParseError("duplicate node '" + n + "'");

    std::set<std::string> seg_ids;
    for (const auto& s : net.segments) {
        if (!seg_ids.insert(s.id).second) throw ParseError("duplicate segment '" + s.id + "'");
        if (!node_ids.count(s.from_node))
            throw ParseError("segment '" + s.id + "' references unknown node '" + s.from_node + "'");
        if (!node_ids.count(s.to_node))
            throw ParseError("segment '" + s.id + "' references unknown node '" + s.to_node + "'");
        if (s.from_node == s.to_node)
            throw ParseError("segment '" + s.id + "' connects node '" + s.from_node + "' to itself");
        if (!(s.length_m > 0.0))
            throw ParseError("segment '" + s.id + "' length must be positive");
        const LineParams& p = s.params;
        if (!(p.l0 > 0.0) || !(p.c0 > 0.0) || p.r0 < 0.0 || p.g0 < 0.0)
            throw ParseError("segment '" + s.id + "' line parameters invalid (need l0 > 0, c0 > 0, r0 >= 0, g0 >= 0)");
    }

    std::set<std::string> terminated;
    for (const auto& t : net.terminations) {
        if (!node_ids.count(t.node))
            throw ParseError("termination references unknown node '" + t.node + "'");
        if (!terminated.insert(t.node).second)
            throw ParseError("duplicate termination at node '" + t.node + "'");
        if (!t.matched && !(t.ohms > 0.0))
            throw ParseError("termination at node '" + t.node + "' must have positive ohms or be matched");
        if (t.matched && net.degree(t.node) != 1)
            throw ParseError("matched termination at node '" + t.node + "' requires exactly one incident segment");
    }

    if (net.port_node.empty()) throw ParseError("no [port] section");
    if (!node_ids.count(net.port_node))
        throw ParseError("port references unknown node '" + net.port_node + "'");
    if (net.steady_source) {
        if (!node_ids.count(net.steady_source->node))
            throw ParseError("source references unknown node '" + net.steady_source->node + "'");
        if (!(net.steady_source->hz > 0.0)) throw ParseError("source frequency must be positive");
    }

    // connectivity (union-find over segment endpoints)
    std::map<std::string, std::string> parent;
    for (const auto& n : net.nodes) parent[n] = n;
    auto find = [&](std::string x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& s : net.segments) parent[find(s.from_node)] = find(s.to_node);
    const std::string root = find(net.nodes.front());
    for (const auto& n : net.nodes)
        if (find(n) != root) throw ParseError("network graph is disconnected (node '" + n + "' unreachable)");

    for (const auto& n : net.nodes)
        if (net.degree(n) == 1 && !terminated.count(n) && n != net.port_node)
            throw ParseError("unterminated leaf node '" + n + "'");
}

inline void validate_fault(const NetworkModel& net, const FaultSpec& f) {
    const LineSegment& s = net.segment(f.segment_id);
    if (!(f.distance_m > 0.0) || !(f.distance_m < s.length_m))
        throw ParseError("fault distance " + format_double(f.distance_m) +
                         " m outside segment '" + s.id + "' (0, " + format_double(s.length_m) + ")");
    if (f.fault_ohms < 0.0) throw ParseError("fault impedance must be nonnegative");
}

inline NetworkModel parse_network(std::string_view text) {
    NetworkModel net;

    enum class Sec { none, node, segment, termination, port, source };
    Sec sec = Sec::none;
    int sec_line = 0;

    struct PendingSegment {
        std::string id;
        std::optional<std::string> from, to;
        std::optional<double> length;
        LineParams p = default_line_params();
    } seg;
    struct PendingTermination {
        std::optional<std::string> node;
        std::optional<double> ohms;
        bool matched = false;
    } term;
    struct PendingPort {
        std::optional<std::string> node;
    } port;
    struct PendingSource {
        std::optional<std::string> node;
        std::optional<double> volts, hz;
    } src;
    bool have_port = false, have_source = false;
    std::set<std::string> keys_seen;

    auto close_section = [&]() {
        switch (sec) {
        case Sec::none:
        case Sec::node:
            break;
        case Sec::segment: {
            if (!seg.from || !seg.to || !seg.length)
                throw ParseError(detail::at_line(sec_line) + "[segment " + seg.id +
                                 "] missing required key (from, to, length_m)");
            net.segments.push_back({seg.id, *seg.from, *seg.to, *seg.length, seg.p});
            break;
        }
        case Sec::termination: {
            if (!term.node)
                throw ParseError(detail::at_line(sec_line) + "[termination] missing key 'node'");
            if (term.matched == term.ohms.has_value())
                throw ParseError(detail::at_line(sec_line) +
                                 "[termination] needs exactly one of 'ohms' or 'matched'");
            net.terminations.push_back({*term.node, term.ohms.value_or(0.0), term.matched});
            break;
        }
        case Sec::port: {
            if (!port.node) throw ParseError(detail::at_line(sec_line) + "[port] missing key 'node'");
            net.port_node = *port.node;
            break;
        }
        case Sec::source: {
            if (!src.node || !src.volts || !src.hz)
                throw ParseError(detail::at_line(sec_line) + "[source] missing required key (node, volts, hz)");
            net.steady_source = SteadySource{*src.node, *src.volts, *src.hz};
            break;
        }
        }
        keys_seen.clear();
    };

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(detail::at_line(line_no) + "malformed section header");
            close_section();
            sec_line = line_no;
            std::string_view inner = detail::trim(line.substr(1, line.size() - 2));
            std::size_t sp = inner.find_first_of(" \t");
            std::string_view name = sp == std::string_view::npos ? inner : detail::trim(inner.substr(0, sp));
            std::string_view id = sp == std::string_view::npos ? std::string_view{} : detail::trim(inner.substr(sp + 1));

            if (name == "node") {
                if (!detail::valid_id(id))
                    throw ParseError(detail::at_line(line_no) + "[node] needs a valid id");
                net.nodes.emplace_back(id);
                sec = Sec::node;
            } else if (name == "segment") {
                if (!detail::valid_id(id))
                    throw ParseError(detail::at_line(line_no) + "[segment] needs a valid id");
                seg = PendingSegment{};
                seg.id = std::string(id);
                sec = Sec::segment;
            } else if (name == "termination" || name == "port" || name == "source") {
                if (!id.empty())
                    throw ParseError(detail::at_line(line_no) + "[" + std::string(name) + "] takes no id");
                if (name == "termination") {
                    term = PendingTermination{};
                    sec = Sec::termination;
                } else if (name == "port") {
                    if (have_port) throw ParseError(detail::at_line(line_no) + "duplicate [port] section");
                    have_port = true;
                    port = PendingPort{};
                    sec = Sec::port;
                } else {
                    if (have_source) throw ParseError(detail::at_line(line_no) + "duplicate [source] section");
                    have_source = true;
                    src = PendingSource{};
                    sec = Sec::source;
                }
            } else {
                throw ParseError(detail::at_line(line_no) + "unknown section '" + std::string(name) + "'");
            }
            continue;
        }

        // key [= value] inside the current section
        if (sec == Sec::none)
            throw ParseError(detail::at_line(line_no) + "content outside any section");

        std::size_t eq = line.find('=');
        std::string key(detail::trim(eq == std::string_view::npos ? line : line.substr(0, eq)));
        std::string_view value = eq == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(eq + 1));

        if (!keys_seen.insert(key).second)
            throw ParseError(detail::at_line(line_no) + "duplicate key '" + key + "'");

        auto num = [&]() {
            if (value.empty()) throw ParseError(detail::at_line(line_no) + "key '" + key + "' needs a value");
            try {
                return parse_double(value);
            } catch (const std::invalid_argument&) {
                throw ParseError(detail::at_line(line_no) + "invalid number '" + std::string(value) + "'");
            }
        };
        auto id_value = [&]() {
            if (!detail::valid_id(value))
                throw ParseError(detail::at_line(line_no) + "key '" + key + "' needs a valid id");
            return std::string(value);
        };
        auto unknown = [&]() -> ParseError {
            return ParseError(detail::at_line(line_no) + "unknown key '" + key + "'");
        };

        switch (sec) {
        case Sec::node:
            throw ParseError(detail::at_line(line_no) + "[node] sections take no keys");
        case Sec::segment:
            if (key == "from") seg.from = id_value();
            else if (key == "to") seg.to = id_value();
            else if (key == "length_m") seg.length = num();
            else if (key == "r0") seg.p.r0 = num();
            else if (key == "l0") seg.p.l0 = num();
            else if (key == "g0") seg.p.g0 = num();
            else if (key == "c0") seg.p.c0 = num();
            else throw unknown();
            break;
        case Sec::termination:
            if (key == "node") term.node = id_value();
            else if (key == "ohms") term.ohms = num();
            else if (key == "matched" && value.empty()) term.matched = true;
            else throw unknown();
            break;
        case Sec::port:
            if (key == "node") port.node = id_value();
            else throw unknown();
            break;
        case Sec::source:
            if (key == "node") src.node = id_value();
            else if (key == "volts") src.volts = num();
            else if (key == "hz") src.hz = num();
            else throw unknown();
            break;
        case Sec::none:
            break;
        }
    }
    close_section();

    validate_network(net);

    // resolve matched terminations to the incident segment's surge impedance
    for (auto& t : net.terminations) {
        if (!t.matched) continue;
        for (const auto& s : net.segments)
            if (s.from_node == t.node || s.to_node == t.node) t.ohms = surge_impedance(s.params);
    }
    return net;
}

// Plain serialization in declaration order; parse_network(serialize_network(n)) == n.
inline std::string serialize_network(const NetworkModel& net) {
    std::string out;
    for (const auto& n : net.nodes) out += "[node " + n + "]\n";
    for (const auto& s : net.segments) {
        out += "\n[segment " + s.id + "]\n";
        out += "from = " + s.from_node + "\n";
        out += "to = " + s.to_node + "\n";
        out += "length_m = " + format_double(s.length_m) + "\n";
        out += "r0 = " + format_double(s.params.r0) + "\n";
        out += "l0 = " + format_double(s.params.l0) + "\n";
        out += "g0 = " + format_double(s.params.g0) + "\n";
        out += "c0 = " + format_double(s.params.c0) + "\n";
    }
    for (const auto& t : net.terminations) {
        out += "\n[termination]\nnode = " + t.node + "\n";
        if (t.matched) out += "matched\n";
        else out += "ohms = " + format_double(t.ohms) + "\n";
    }
    out += "\n[port]\nnode = " + net.port_node + "\n";
    if (net.steady_source) {
        out += "\n[source]\nnode = " + net.steady_source->node + "\n";
        out += "volts = " + format_double(net.steady_source->volts) + "\n";
        out += "hz = " + format_double(net.steady_source->hz) + "\n";
    }
    return out;
}

// Canonical one-line-per-record form: records sorted, keys sorted, numbers in
// shortest round-trip spelling. Input text layout, comments and declaration
// order do not affect it, so its hash identifies the electrical model.
inline std::string canonical_text(const NetworkModel& net) {
    std::string out;
    std::vector<std::string> lines;

    lines.assign(net.nodes.begin(), net.nodes.end());
    std::sort(lines.begin(), lines.end());
    for (const auto& n : lines) out += "node " + n + "\n";

    lines.clear();
    for (const auto& s : net.segments)
        lines.push_back("segment " + s.id + " c0=" + format_double(s.params.c0) +
                        " from=" + s.from_node + " g0=" + format_double(s.params.g0) +
                        " l0=" + format_double(s.params.l0) +
                        " length_m=" + format_double(s.length_m) +
                        " r0=" + format_double(s.params.r0) + " to=" + s.to_node);
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) out += l + "\n";

    lines.clear();
    for (const auto& t : net.terminations)
        lines.push_back("termination node=" + t.node +
                        (t.matched ? std::string(" matched") : " ohms=" + format_double(t.ohms)));
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) out += l + "\n";

    out += "port node=" + net.port_node + "\n";
    if (net.steady_source)
        out += "source hz=" + format_double(net.steady_source->hz) +
               " node=" + net.steady_source->node +
               " volts=" + format_double(net.steady_source->volts) + "\n";
    return out;
}

inline std::uint64_t network_fingerprint(const NetworkModel& net) {
    return fnv1a64(canonical_text(net));
}

inline GuessGrid make_guess_grid(const NetworkModel& net, double spacing_m) {
    if (!(spacing_m > 0.0)) throw ParseError("guess grid spacing must be positive");
    GuessGrid grid;
    grid.spacing_m = spacing_m;

    std::vector<const LineSegment*> segs;
    for (const auto& s : net.segments) segs.push_back(&s);
    std::sort(segs.begin(), segs.end(),
              [](const LineSegment* a, const LineSegment* b) { return a->id < b->id; });

    for (const LineSegment* s : segs) {
        if (spacing_m >= s->length_m)
            throw ParseError("grid spacing " + format_double(spacing_m) +
                             " m does not fit inside segment '" + s->id + "' (" +
                             format_double(s->length_m) + " m)");
        for (std::size_t k = 1;; ++k) {
            const double d = spacing_m * static_cast<double>(k);
            if (d >= s->length_m * (1.0 - 1e-12)) break;
            grid.positions.push_back({s->id, d});
        }
    }
    return grid;
}

// Index of the grid position nearest to the fault, on the fault's segment.
// Ties resolve toward the smaller distance.
inline std::size_t nearest_grid_index(const GuessGrid& grid, const FaultSpec& fault) {
    std::size_t best = grid.positions.size();
    double best_err = 0.0;
    for (std::size_t i = 0; i < grid.positions.size(); ++i) {
        const GridPosition& p = grid.positions[i];
        if (p.segment_id != fault.segment_id) continue;
        const double err = std::abs(p.distance_m - fault.distance_m);
        if (best == grid.positions.size() || err < best_err) {
            best = i;
            best_err = err;
        }
    }
    if (best == grid.positions.size())
        throw ParseError("grid has no positions on segment '" + fault.segment_id + "'");
    return best;
}

// Longest port-to-leaf path, walking simple segment paths from the port.
inline double longest_port_to_leaf_path_m(const NetworkModel& net) {
    double best = 0.0;
    std::vector<bool> used(net.segments.size(), false);
    auto dfs = [&](auto&& self, const std::string& node, double dist) -> void {
        best = std::max(best, dist);
        for (std::size_t i = 0; i < net.segments.size(); ++i) {
            if (used[i]) continue;
            const LineSegment& s = net.segments[i];
            if (s.from_node != node && s.to_node != node) continue;
            used[i] = true;
            self(self, s.from_node == node ? s.to_node : s.from_node, dist + s.length_m);
            used[i] = false;
        }
    };
    dfs(dfs, net.port_node, 0.0);
    return best;
}

inline double slowest_wave_speed(const NetworkModel& net) {
    double v = 0.0;
    for (const auto& s : net.segments) {
        const double c = wave_speed(s.params);
        if (v == 0.0 || c < v) v = c;
    }
    return v;
}

} // namespace emtrloc
