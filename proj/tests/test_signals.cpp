#include <catch2/catch_amalgamated.hpp>

#include <emtrloc/signals.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace emtrloc;

namespace {

SignalTrace random_trace(std::size_t n, double dt, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    SignalTrace x;
    x.dt = dt;
    x.samples.resize(n);
    for (auto& v : x.samples) v = static_cast<double>(eng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    return x;
}

} // namespace

TEST_CASE("frequency grid invariants") {
    CHECK_THROWS_AS((FrequencyGrid{0, 1e-7}.validate()), Error);
    CHECK_THROWS_AS((FrequencyGrid{3, 1e-7}.validate()), Error);
    CHECK_THROWS_AS((FrequencyGrid{4, 0.0}.validate()), Error);
    const FrequencyGrid g{4096, 1e-7};
    CHECK_NOTHROW(g.validate());
    CHECK(g.n_bins() == 2049);
    CHECK(g.duration() == Catch::Approx(409.6e-6));
    CHECK(g.omega(0) == 0.0);
    CHECK(g.omega(1) == Catch::Approx(2.0 * std::numbers::pi / 409.6e-6));
}

TEST_CASE("grid_for_window picks the covering power of two") {
    CHECK(grid_for_window(1e-7, 5e-3).n_samples == 65536);
    CHECK(grid_for_window(1e-7, 204.8e-6).n_samples == 2048);
    CHECK(grid_for_window(1e-7, 2e-3).n_samples == 32768);
    CHECK(grid_for_window(1e-7, 1e-7).n_samples == 2);
    CHECK_THROWS_AS(grid_for_window(0.0, 1e-3), Error);
    CHECK_THROWS_AS(grid_for_window(1e-7, 0.0), Error);
}

TEST_CASE("analyze/synthesize round trip is lossless to 1e-12") {
    const SignalTrace x = random_trace(4096, 1e-7, 11);
    const SpectrumTrace s = analyze_time(x);
    CHECK(s.bins.size() == 2049);
    CHECK(s.bins.front().imag() == 0.0);
    CHECK(s.bins.back().imag() == 0.0);
    const SignalTrace y = synthesize_time(s);
    REQUIRE(y.samples.size() == x.samples.size());
    double err = 0.0;
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        err = std::max(err, std::abs(y.samples[i] - x.samples[i]));
    CHECK(err < 1e-12);

    SignalTrace bad = x;
    bad.samples.resize(4095);
    CHECK_THROWS_AS(analyze_time(bad), Error);
}

TEST_CASE("Parseval ties time and spectrum energies") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const SignalTrace x = random_trace(4096, 1e-7, seed);
        const double et = energy(x);
        const double ef = spectrum_energy(analyze_time(x));
        CHECK(std::abs(et - ef) < 1e-10 * et);
    }
}

TEST_CASE("energy scales exactly under power-of-two gains") {
    const SignalTrace x = random_trace(2048, 1e-7, 5);
    SignalTrace x2 = x, x3 = x;
    for (auto& v : x2.samples) v *= 2.0;
    for (auto& v : x3.samples) v *= 3.0;
    CHECK(energy(x2) == 4.0 * energy(x));
    CHECK(energy(x3) == Catch::Approx(9.0 * energy(x)).epsilon(1e-12));
}

TEST_CASE("lightning impulse peaks where the closed form says") {
    const FrequencyGrid grid{65536, 1e-7};
    const double alpha = 20e-6, beta = 3e-6, peak = 1.0;
    const SignalTrace u = lightning_impulse(grid, alpha, beta, peak);
    REQUIRE(u.samples.size() == grid.n_samples);
    CHECK(u.samples[0] == 0.0);

    const double t_peak = alpha * beta / (alpha - beta) * std::log(alpha / beta);
    CHECK(t_peak == Catch::Approx(6.6957175937148752e-6).epsilon(1e-14));

    double max_v = 0.0;
    for (double v : u.samples) max_v = std::max(max_v, v);
    CHECK(max_v <= peak * (1.0 + 1e-12));
    CHECK(max_v > peak * (1.0 - 1e-3));

    // discrete energy converges to the analytic integral of the squared pulse
    const double k = peak / 0.60816758049264217;
    const double analytic = k * k * (alpha / 2.0 + beta / 2.0 - 2.0 * alpha * beta / (alpha + beta));
    CHECK(energy(u) == Catch::Approx(analytic).epsilon(1e-6));
    CHECK(analytic == Catch::Approx(1.6986092312919456e-5).epsilon(1e-13));

    CHECK_THROWS_AS(lightning_impulse(grid, 3e-6, 20e-6, 1.0), Error);
    CHECK_THROWS_AS(lightning_impulse(grid, 20e-6, 0.0, 1.0), Error);
}

TEST_CASE("power frequency generator") {
    const FrequencyGrid grid{2048, 1e-5};
    const SignalTrace u = power_frequency(grid, 230.0, 50.0, 0.5);
    for (std::size_t i : {0u, 1u, 1000u})
        CHECK(u.samples[i] ==
              230.0 * std::sin(2.0 * std::numbers::pi * 50.0 * 1e-5 * static_cast<double>(i) + 0.5));
    CHECK_THROWS_AS(power_frequency(grid, 1.0, 0.0, 0.0), Error);
}

TEST_CASE("white noise is deterministic per seed and bounded") {
    const FrequencyGrid grid{4096, 1e-7};
    const SignalTrace a = white_noise(grid, 2.0, 42);
    const SignalTrace b = white_noise(grid, 2.0, 42);
    CHECK(a.samples == b.samples);
    const SignalTrace c = white_noise(grid, 2.0, 43);
    CHECK(a.samples != c.samples);
    for (double v : a.samples) {
        CHECK(v >= -2.0);
        CHECK(v < 2.0);
    }
}

TEST_CASE("time reversal is an involution and preserves energy") {
    const SignalTrace x = random_trace(1024, 1e-7, 9);
    const SignalTrace r = time_reverse(x);
    CHECK(r.samples.front() == x.samples.back());
    CHECK(time_reverse(r).samples == x.samples);
    CHECK(std::abs(energy(r) - energy(x)) <= 1e-13 * energy(x));
}

TEST_CASE("pad_to appends zeros without changing content") {
    const SignalTrace x = random_trace(100, 1e-7, 3);
    const SignalTrace p = pad_to(x, 256);
    REQUIRE(p.samples.size() == 256);
    for (std::size_t i = 0; i < 100; ++i) CHECK(p.samples[i] == x.samples[i]);
    for (std::size_t i = 100; i < 256; ++i) CHECK(p.samples[i] == 0.0);
    CHECK(std::abs(energy(p) - energy(x)) <= 1e-15 * energy(x));
    CHECK_THROWS_AS(pad_to(x, 64), Error);
}

TEST_CASE("FFT convolution matches the O(n^2) definition") {
    const SignalTrace a = random_trace(64, 1e-7, 21);
    const SignalTrace b = random_trace(48, 1e-7, 22);
    const SignalTrace c = convolve(a, b);
    REQUIRE(c.samples.size() == 64 + 48 - 1);

    double peak = 0.0;
    std::vector<double> ref(c.samples.size(), 0.0);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        for (std::size_t j = 0; j < b.samples.size(); ++j) ref[i + j] += a.samples[i] * b.samples[j];
    for (double v : ref) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CAPTURE(i);
        CHECK(std::abs(c.samples[i] - ref[i]) < 1e-10 * peak);
    }

    SignalTrace delta{{1.0}, 1e-7, 0.0};
    const SignalTrace d = convolve(a, delta);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(d.samples[i] == Catch::Approx(a.samples[i]).margin(1e-13));

    SignalTrace wrong_dt = b;
    wrong_dt.dt = 2e-7;
    CHECK_THROWS_AS(convolve(a, wrong_dt), Error);
    CHECK_THROWS_AS(convolve(a, SignalTrace{}), Error);
}

TEST_CASE("convolution offsets add") {
    SignalTrace a = random_trace(16, 1e-7, 31);
    SignalTrace b = random_trace(16, 1e-7, 32);
    a.t0 = 3e-6;
    b.t0 = 2e-6;
    CHECK(convolve(a, b).t0 == Catch::Approx(5e-6).epsilon(1e-15));
}

TEST_CASE("extract_fraction slices and snaps to samples") {
    SignalTrace x = random_trace(1000, 1e-7, 4);
    x.t0 = 0.0;
    const SignalTrace f = extract_fraction(x, 20e-7, 100e-7);
    REQUIRE(f.samples.size() == 100);
    CHECK(f.t0 == Catch::Approx(2e-6));
    for (std::size_t i = 0; i < f.samples.size(); ++i) CHECK(f.samples[i] == x.samples[20 + i]);

    // offsets snap to the nearest sample index
    const SignalTrace g = extract_fraction(x, 2.49e-7, 10e-7);
    CHECK(g.samples.front() == x.samples[2]);
    const SignalTrace h = extract_fraction(x, 2.51e-7, 10e-7);
    CHECK(h.samples.front() == x.samples[3]);

    CHECK_THROWS_AS(extract_fraction(x, 0.0, 1e-7), Error);       // < 2 samples
    CHECK_THROWS_AS(extract_fraction(x, 99e-6, 2e-6), Error);     // past the end
    CHECK_THROWS_AS(extract_fraction(x, -1e-6, 10e-7), Error);    // before the start
}

TEST_CASE("spectrum multiply requires a shared grid") {
    const SignalTrace x = random_trace(256, 1e-7, 6);
    const SignalTrace y = random_trace(256, 1e-7, 7);
    const SpectrumTrace s = multiply(analyze_time(x), analyze_time(y));
    CHECK(s.bins.size() == 129);

    const SignalTrace z = random_trace(512, 1e-7, 8);
    CHECK_THROWS_AS(multiply(analyze_time(x), analyze_time(z)), Error);
}

TEST_CASE("trace CSV round trip is exact") {
    SignalTrace x = random_trace(300, 1e-7, 13);
    x.t0 = 5e-6;
    std::ostringstream out;
    write_trace_csv(x, out);
    std::istringstream in(out.str());
    const SignalTrace y = read_trace_csv(in);
    CHECK(y.samples == x.samples);
    CHECK(dt_close(y.dt, x.dt));
    CHECK(y.t0 == x.t0);
}

TEST_CASE("trace CSV rejects malformed input") {
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_trace_csv(in);
    };
    CHECK_THROWS_WITH(read(""), Catch::Matchers::ContainsSubstring("empty"));
    CHECK_THROWS_WITH(read("time,volts\n0,1\n1,2\n"),
                      Catch::Matchers::ContainsSubstring("t_s,value"));
    CHECK_THROWS_WITH(read("t_s,value\n0,1\n"), Catch::Matchers::ContainsSubstring("at least 2"));
    CHECK_THROWS_WITH(read("t_s,value\n0 1\n1 2\n"), Catch::Matchers::ContainsSubstring("comma"));
    CHECK_THROWS_WITH(read("t_s,value\n0,x\n1,2\n"), Catch::Matchers::ContainsSubstring("row 2"));
    CHECK_THROWS_WITH(read("t_s,value\n0,1\n1,2\n5,3\n"),
                      Catch::Matchers::ContainsSubstring("non-uniform"));
    CHECK_THROWS_WITH(read("t_s,value\n1,1\n0,2\n"), Catch::Matchers::ContainsSubstring("increasing"));
    // CRLF line endings are tolerated
    std::istringstream crlf("t_s,value\r\n0,1\r\n1e-07,2\r\n");
    const SignalTrace y = read_trace_csv(crlf);
    CHECK(y.samples.size() == 2);
    CHECK(y.samples[1] == 2.0);
}
