#pragma once

// Signal toolkit: uniformly sampled real traces, half spectra, excitation
// generators, time reversal, linear convolution, energy, fraction
// extraction and CSV interchange.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "emtrloc/errors.hpp"
#include "emtrloc/fft.hpp"
#include "emtrloc/units.hpp"

namespace emtrloc {

// Sampling intervals compare within 1e-9 relative: CSV round trips may
// reconstruct dt one ulp off the original.
inline bool dt_close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

// Uniformly sampled real time series starting at t0.
struct SignalTrace {
    std::vector<double> samples;
    double dt = 0.0;
    double t0 = 0.0;

    std::size_t size() const { return samples.size(); }
    double time_at(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double duration() const { return dt * static_cast<double>(samples.size()); }
};

// Sampling contract shared by generators and the solver: n_samples is a
// power of two; bin k lives at omega_k = 2 pi k / (n_samples * dt).
struct FrequencyGrid {
    std::size_t n_samples = 0;
    double dt = 0.0;

    void validate() const {
        if (!(dt > 0.0)) throw Error("frequency grid: dt must be positive");
        if (n_samples < 2 || !is_pow2(n_samples))
            throw Error("frequency grid: n_samples must be a power of two >= 2");
    }
    std::size_t n_bins() const { return n_samples / 2 + 1; }
    double duration() const { return dt * static_cast<double>(n_samples); }
    double domega() const {
        return 2.0 * std::numbers::pi / (dt * static_cast<double>(n_samples));
    }
    double omega(std::size_t k) const { return domega() * static_cast<double>(k); }
};

// Smallest power-of-two grid that covers the requested window.
inline FrequencyGrid grid_for_window(double dt, double window_s) {
    if (!(dt > 0.0) || !(window_s > 0.0))
        throw Error("window and dt must be positive");
    const auto want = static_cast<std::size_t>(std::llround(window_s / dt));
    FrequencyGrid g{next_pow2(want < 2 ? 2 : want), dt};
    g.validate();
    return g;
}

// Half spectrum of a real signal of n_samples points: bins 0..n/2, DC and
// Nyquist bins real.
struct SpectrumTrace {
    std::vector<cplx> bins;
    std::size_t n_samples = 0;
    double dt = 0.0;
    double t0 = 0.0;

    double domega() const {
        return 2.0 * std::numbers::pi / (dt * static_cast<double>(n_samples));
    }
    double omega(std::size_t k) const { return domega() * static_cast<double>(k); }
};

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

} // namespace detail

inline SpectrumTrace analyze_time(const SignalTrace& x) {
    const std::size_t n = x.samples.size();
    if (n < 2 || !is_pow2(n))
        throw Error("analyze_time: trace length must be a power of two >= 2");
    std::vector<cplx> a(x.samples.begin(), x.samples.end());
    fft_inplace(a, false);
    SpectrumTrace s;
    s.n_samples = n;
    s.dt = x.dt;
    s.t0 = x.t0;
    s.bins.assign(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n / 2 + 1));
    s.bins.front() = cplx(s.bins.front().real(), 0.0);
    s.bins.back() = cplx(s.bins.back().real(), 0.0);
    return s;
}

inline SignalTrace synthesize_time(const SpectrumTrace& s) {
    const std::size_t n = s.n_samples;
    if (n < 2 || !is_pow2(n)) throw Error("synthesize_time: invalid n_samples");
    if (s.bins.size() != n / 2 + 1)
        throw Error("synthesize_time: bin count does not match n_samples");
    std::vector<cplx> a(n);
    a[0] = cplx(s.bins[0].real(), 0.0);
    a[n / 2] = cplx(s.bins[n / 2].real(), 0.0);
    for (std::size_t k = 1; k < n / 2; ++k) {
        a[k] = s.bins[k];
        a[n - k] = std::conj(s.bins[k]);
    }
    fft_inplace(a, true);
    SignalTrace x;
    x.dt = s.dt;
    x.t0 = s.t0;
    x.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) x.samples[i] = a[i].real();
    return x;
}

// Sum of squared samples times dt (compensated summation).
inline double energy(const SignalTrace& x) {
    detail::KahanSum acc;
    for (double v : x.samples) acc.add(v * v);
    return acc.sum * x.dt;
}

// Discrete Parseval form of the same quantity from a half spectrum.
inline double spectrum_energy(const SpectrumTrace& s) {
    detail::KahanSum acc;
    const std::size_t last = s.bins.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        const double w = (k == 0 || k == last) ? 1.0 : 2.0;
        acc.add(w * std::norm(s.bins[k]));
    }
    return acc.sum * s.dt / static_cast<double>(s.n_samples);
}

// Double-exponential surge u(t) = k (e^{-t/alpha} - e^{-t/beta}), alpha the
// tail constant and beta the front constant, scaled to the requested peak.
inline SignalTrace lightning_impulse(const FrequencyGrid& grid, double alpha_s, double beta_s,
                                     double peak = 1.0) {
    grid.validate();
    if (!(beta_s > 0.0) || !(alpha_s > beta_s))
        throw Error("lightning impulse requires alpha_s > beta_s > 0");
    const double t_peak = alpha_s * beta_s / (alpha_s - beta_s) * std::log(alpha_s / beta_s);
    const double unnorm = std::exp(-t_peak / alpha_s) - std::exp(-t_peak / beta_s);
    const double k = peak / unnorm;
    SignalTrace x;
    x.dt = grid.dt;
    x.samples.resize(grid.n_samples);
    for (std::size_t i = 0; i < grid.n_samples; ++i) {
        const double t = grid.dt * static_cast<double>(i);
        x.samples[i] = k * (std::exp(-t / alpha_s) - std::exp(-t / beta_s));
    }
    return x;
}

inline SignalTrace power_frequency(const FrequencyGrid& grid, double amplitude, double hz,
                                   double phase) {
    grid.validate();
    if (!(hz > 0.0)) throw Error("power frequency must be positive");
    SignalTrace x;
    x.dt = grid.dt;
    x.samples.resize(grid.n_samples);
    const double w = 2.0 * std::numbers::pi * hz;
    for (std::size_t i = 0; i < grid.n_samples; ++i)
        x.samples[i] = amplitude * std::sin(w * grid.dt * static_cast<double>(i) + phase);
    return x;
}

// Deterministic white noise in [-amplitude, amplitude). Raw engine output is
// mapped to doubles directly because the standard distributions are not
// bit-portable across library implementations.
inline SignalTrace white_noise(const FrequencyGrid& grid, double amplitude, std::uint64_t seed) {
    grid.validate();
    std::mt19937_64 eng(seed);
    SignalTrace x;
    x.dt = grid.dt;
    x.samples.resize(grid.n_samples);
    for (auto& v : x.samples) {
        const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53; // [0, 1)
        v = (2.0 * u - 1.0) * amplitude;
    }
    return x;
}

inline SignalTrace time_reverse(const SignalTrace& x) {
    SignalTrace r = x;
    std::reverse(r.samples.begin(), r.samples.end());
    return r;
}

inline SignalTrace pad_to(const SignalTrace& x, std::size_t n) {
    if (n < x.samples.size()) throw Error("pad_to: target length shorter than trace");
    SignalTrace r = x;
    r.samples.resize(n, 0.0);
    return r;
}

// Linear (zero-padded) convolution of length len(a) + len(b) - 1, computed
// via the FFT; plain sample-sum convention, no dt weighting.
inline SignalTrace convolve(const SignalTrace& a, const SignalTrace& b) {
    if (!dt_close(a.dt, b.dt)) throw Error("convolve: sampling intervals differ");
    if (a.samples.empty() || b.samples.empty()) throw Error("convolve: empty trace");
    const std::size_t out_len = a.samples.size() + b.samples.size() - 1;
    const std::size_t n = next_pow2(out_len);
    std::vector<cplx> fa(n), fb(n);
    for (std::size_t i = 0; i < a.samples.size(); ++i) fa[i] = a.samples[i];
    for (std::size_t i = 0; i < b.samples.size(); ++i) fb[i] = b.samples[i];
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft_inplace(fa, true);
    SignalTrace c;
    c.dt = a.dt;
    c.t0 = a.t0 + b.t0;
    c.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) c.samples[i] = fa[i].real();
    return c;
}

// Contiguous slice starting start_s after the trace start; offsets snap to
// the nearest sample, no resampling.
inline SignalTrace extract_fraction(const SignalTrace& x, double start_s, double length_s) {
    if (!(x.dt > 0.0)) throw Error("extract_fraction: trace has no sampling interval");
    const auto i0 = std::llround(start_s / x.dt);
    const auto count = std::llround(length_s / x.dt);
    if (i0 < 0 || count < 2)
        throw Error("extract_fraction: window must start inside the trace and span >= 2 samples");
    if (static_cast<std::size_t>(i0 + count) > x.samples.size())
        throw Error("extract_fraction: window extends past the end of the trace");
    SignalTrace r;
    r.dt = x.dt;
    r.t0 = x.t0 + x.dt * static_cast<double>(i0);
    r.samples.assign(x.samples.begin() + i0, x.samples.begin() + i0 + count);
    return r;
}

// Bin-wise product of two half spectra over the same grid; the convolution
// theorem counterpart of convolve for circular (same-window) products.
inline SpectrumTrace multiply(const SpectrumTrace& a, const SpectrumTrace& b) {
    if (a.n_samples != b.n_samples || !dt_close(a.dt, b.dt))
        throw Error("spectrum product: grids differ");
    SpectrumTrace r = a;
    r.t0 = a.t0 + b.t0;
    for (std::size_t k = 0; k < r.bins.size(); ++k) r.bins[k] *= b.bins[k];
    return r;
}

inline void write_trace_csv(const SignalTrace& x, std::ostream& out) {
    out << "t_s,value\n";
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        out << format_double(x.time_at(i)) << ',' << format_double(x.samples[i]) << '\n';
    if (!out) throw Error("trace CSV write failed");
}

inline SignalTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("trace CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_s,value") throw Error("trace CSV: expected header 't_s,value'");

    std::vector<double> t, v;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw Error("trace CSV: row " + std::to_string(row) + " has no comma");
        try {
            t.push_back(parse_double(std::string_view(line).substr(0, comma)));
            v.push_back(parse_double(std::string_view(line).substr(comma + 1)));
        } catch (const std::invalid_argument& e) {
            throw Error("trace CSV: row " + std::to_string(row) + ": " + e.what());
        }
    }
    if (t.size() < 2) throw Error("trace CSV: need at least 2 rows");

    SignalTrace x;
    x.t0 = t.front();
    x.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    if (!(x.dt > 0.0)) throw Error("trace CSV: time column must be increasing");
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - x.time_at(i)) > 1e-6 * x.dt)
            throw Error("trace CSV: non-uniform sampling at row " + std::to_string(i + 2));
    x.samples = std::move(v);
    return x;
}

inline void save_trace_csv(const SignalTrace& x, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_trace_csv(x, out);
}

inline SignalTrace load_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_trace_csv(in);
}

} // namespace emtrloc
