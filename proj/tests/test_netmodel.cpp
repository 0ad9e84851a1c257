#include <catch2/catch_amalgamated.hpp>

#include <emtrloc/netmodel.hpp>

#include <string>

using namespace emtrloc;

namespace {

const std::string kSingleLine = R"(# two-node line
[node A]
[node B]

[segment S1]
from = A
to = B
length_m = 10000

[termination]
node = A
ohms = 100000

[termination]
node = B
ohms = 100000

[port]
node = A

[source]
node = A
volts = 10000
hz = 50
)";

const std::string kTee = R"(
[node H]
[node J]
[node E2]
[node E3]

[segment T1]
from = H
to = J
length_m = 8000

[segment T2]
from = J
to = E2
length_m = 6000

[segment T3]
from = J
to = E3
length_m = 4000

[termination]
node = H
ohms = 100000

[termination]
node = E2
ohms = 100000

[termination]
node = E3
ohms = 100000

[port]
node = H
)";

} // namespace

TEST_CASE("default line constants") {
    const LineParams p = default_line_params();
    CHECK(wave_speed(p) == Catch::Approx(294883912.30979427).epsilon(1e-14));
    CHECK(surge_impedance(p) == Catch::Approx(294.88391230979427).epsilon(1e-14));
}

TEST_CASE("parse_network extracts every section") {
    const NetworkModel net = parse_network(kSingleLine);
    REQUIRE(net.nodes.size() == 2);
    CHECK(net.nodes[0] == "A");
    REQUIRE(net.segments.size() == 1);
    CHECK(net.segments[0].id == "S1");
    CHECK(net.segments[0].from_node == "A");
    CHECK(net.segments[0].to_node == "B");
    CHECK(net.segments[0].length_m == 10000.0);
    CHECK(net.segments[0].params == default_line_params());
    REQUIRE(net.terminations.size() == 2);
    CHECK(net.termination_ohms("A") == 100000.0);
    CHECK(net.termination_ohms("B") == 100000.0);
    CHECK(!net.termination_ohms("C").has_value());
    CHECK(net.port_node == "A");
    REQUIRE(net.steady_source.has_value());
    CHECK(net.steady_source->volts == 10000.0);
    CHECK(net.steady_source->hz == 50.0);
    CHECK(net.degree("A") == 1);
}

TEST_CASE("explicit line parameters override the defaults") {
    std::string text = kSingleLine;
    text.replace(text.find("length_m = 10000"), 16,
                 "length_m = 5000\nr0 = 0\ng0 = 0\nl0 = 2e-6\nc0 = 1e-11");
    const NetworkModel net = parse_network(text);
    CHECK(net.segments[0].params.r0 == 0.0);
    CHECK(net.segments[0].params.l0 == 2e-6);
    CHECK(net.segments[0].length_m == 5000.0);
}

TEST_CASE("matched termination resolves to the incident surge impedance") {
    std::string text = kSingleLine;
    text.replace(text.find("node = B\nohms = 100000"), 22, "node = B\nmatched");
    const NetworkModel net = parse_network(text);
    REQUIRE(net.terminations[1].matched);
    CHECK(net.terminations[1].ohms == Catch::Approx(294.88391230979427).epsilon(1e-14));
}

TEST_CASE("serialize/parse round trip preserves the model") {
    const NetworkModel net = parse_network(kTee);
    const NetworkModel again = parse_network(serialize_network(net));
    CHECK(again == net);
}

TEST_CASE("canonical text ignores layout, order and comments") {
    const NetworkModel a = parse_network(kSingleLine);
    const std::string reordered = R"(
[termination]
node = B
ohms = 100000
[source]
hz = 50
volts = 10000
node = A
[node B]
[node A]
[segment S1]
c0 = 1.15e-11 # explicit defaults
to = B
from = A
r0 = 1e-4
l0 = 1e-6
g0 = 0
length_m = 10000
[termination]
ohms = 100000
node = A
[port]
node = A
)";
    const NetworkModel b = parse_network(reordered);
    CHECK(canonical_text(a) == canonical_text(b));
    CHECK(network_fingerprint(a) == network_fingerprint(b));

    std::string changed = kSingleLine;
    changed.replace(changed.find("length_m = 10000"), 16, "length_m = 10001");
    CHECK(network_fingerprint(parse_network(changed)) != network_fingerprint(a));
}

TEST_CASE("parse errors carry line numbers and reasons") {
    auto bad = [](const std::string& text) { return parse_network(text); };

    CHECK_THROWS_AS(bad(""), ParseError);
    CHECK_THROWS_WITH(bad("x = 1\n"), Catch::Matchers::ContainsSubstring("outside any section"));
    CHECK_THROWS_WITH(bad("[widget W]\n"), Catch::Matchers::ContainsSubstring("unknown section"));
    CHECK_THROWS_WITH(bad("[segment S]\nbogus = 2\n"),
                      Catch::Matchers::ContainsSubstring("unknown key 'bogus'"));
    CHECK_THROWS_WITH(bad("[segment S]\nfrom = A\nfrom = B\n"),
                      Catch::Matchers::ContainsSubstring("duplicate key 'from'"));
    CHECK_THROWS_WITH(bad("[segment S]\nfrom = A\nto = B\nlength_m = zap\n"),
                      Catch::Matchers::ContainsSubstring("invalid number 'zap'"));
    CHECK_THROWS_WITH(bad("[segment\n"), Catch::Matchers::ContainsSubstring("malformed"));

    std::string dup_node = kSingleLine + "\n[node A]\n";
    CHECK_THROWS_WITH(bad(dup_node), Catch::Matchers::ContainsSubstring("duplicate node"));

    std::string self_loop = kSingleLine;
    self_loop.replace(self_loop.find("to = B"), 6, "to = A");
    CHECK_THROWS_WITH(bad(self_loop), Catch::Matchers::ContainsSubstring("to itself"));

    std::string no_port = kSingleLine;
    no_port.replace(no_port.find("[port]\nnode = A"), 15, "");
    CHECK_THROWS_WITH(bad(no_port), Catch::Matchers::ContainsSubstring("[port]"));

    std::string bad_len = kSingleLine;
    bad_len.replace(bad_len.find("length_m = 10000"), 16, "length_m = 0");
    CHECK_THROWS_WITH(bad(bad_len), Catch::Matchers::ContainsSubstring("length must be positive"));

    std::string both = kSingleLine;
    both.replace(both.find("node = B\nohms = 100000"), 22, "node = B\nohms = 5\nmatched");
    CHECK_THROWS_WITH(bad(both), Catch::Matchers::ContainsSubstring("exactly one of"));

    std::string unknown_node = kSingleLine;
    unknown_node.replace(unknown_node.find("from = A"), 8, "from = Q");
    CHECK_THROWS_WITH(bad(unknown_node), Catch::Matchers::ContainsSubstring("unknown node"));

    // leaf E3 stripped of its termination
    std::string leaf = kTee;
    leaf.replace(leaf.find("[termination]\nnode = E3\nohms = 100000"), 37, "");
    CHECK_THROWS_WITH(bad(leaf), Catch::Matchers::ContainsSubstring("unterminated leaf"));

    // matched termination on a through node
    std::string matched_mid = kTee;
    matched_mid += "\n[termination]\nnode = J\nmatched\n";
    CHECK_THROWS_WITH(bad(matched_mid), Catch::Matchers::ContainsSubstring("exactly one incident"));

    // disconnected island
    std::string island = kTee + "\n[node X]\n[node Y]\n[segment S9]\nfrom = X\nto = Y\nlength_m = 10\n"
                                "[termination]\nnode = X\nohms = 5\n[termination]\nnode = Y\nohms = 5\n";
    CHECK_THROWS_WITH(bad(island), Catch::Matchers::ContainsSubstring("disconnected"));
}

TEST_CASE("position keys use canonical number spelling") {
    CHECK(position_of("T1", 4000.0) == "T1@4000");
    CHECK(position_of(GridPosition{"S1", 500.0}) == "S1@500");
    CHECK(position_of(FaultSpec{"T3", 1000.0, 1.0}) == "T3@1000");
}

TEST_CASE("validate_fault enforces the segment interior") {
    const NetworkModel net = parse_network(kSingleLine);
    CHECK_NOTHROW(validate_fault(net, {"S1", 8000.0, 0.0}));
    CHECK_THROWS_AS(validate_fault(net, {"S1", 0.0, 0.0}), ParseError);
    CHECK_THROWS_AS(validate_fault(net, {"S1", 10000.0, 0.0}), ParseError);
    CHECK_THROWS_AS(validate_fault(net, {"S1", 500.0, -1.0}), ParseError);
    CHECK_THROWS_AS(validate_fault(net, {"S9", 500.0, 0.0}), ParseError);
}

TEST_CASE("guess grid covers segment interiors in key order") {
    const NetworkModel line = parse_network(kSingleLine);
    const GuessGrid g1 = make_guess_grid(line, 500.0);
    REQUIRE(g1.positions.size() == 19);
    CHECK(g1.positions.front() == GridPosition{"S1", 500.0});
    CHECK(g1.positions.back() == GridPosition{"S1", 9500.0});

    const NetworkModel tee = parse_network(kTee);
    const GuessGrid g2 = make_guess_grid(tee, 500.0);
    REQUIRE(g2.positions.size() == 15 + 11 + 7);
    for (std::size_t i = 1; i < g2.positions.size(); ++i)
        CHECK(g2.positions[i - 1] < g2.positions[i]);

    CHECK_THROWS_AS(make_guess_grid(tee, 4000.0), ParseError);
    CHECK_THROWS_AS(make_guess_grid(tee, 0.0), ParseError);
}

TEST_CASE("nearest grid index stays on the fault segment, ties go small") {
    const NetworkModel tee = parse_network(kTee);
    const GuessGrid grid = make_guess_grid(tee, 500.0);
    const std::size_t i = nearest_grid_index(grid, {"T1", 4000.0, 1.0});
    CHECK(grid.positions[i] == GridPosition{"T1", 4000.0});
    const std::size_t j = nearest_grid_index(grid, {"T3", 750.0, 0.0});
    CHECK(grid.positions[j] == GridPosition{"T3", 500.0});
    CHECK_THROWS_AS(nearest_grid_index(GuessGrid{}, FaultSpec{"T1", 1.0, 0.0}), ParseError);
}

TEST_CASE("path and speed summaries") {
    const NetworkModel line = parse_network(kSingleLine);
    CHECK(longest_port_to_leaf_path_m(line) == 10000.0);
    const NetworkModel tee = parse_network(kTee);
    CHECK(longest_port_to_leaf_path_m(tee) == 14000.0);
    CHECK(slowest_wave_speed(tee) == Catch::Approx(294883912.30979427).epsilon(1e-14));
}
