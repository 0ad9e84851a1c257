#pragma once

// Closed-form frequency-domain quantities of a uniform line: propagation
// constant, characteristic impedance, reflection coefficient, the
// single-line transfer functions, and the exact distributed-line two-port
// used by the nodal solver. All pure functions.

#include <cmath>
#include <complex>

#include "emtrloc/errors.hpp"
#include "emtrloc/netmodel.hpp"

namespace emtrloc {

using cplx = std::complex<double>;

// Propagation constant gamma = alpha + j beta, principal root (alpha >= 0).
struct Gamma {
    double alpha = 0.0; // attenuation, 1/m
    double beta = 0.0;  // phase, rad/m

    cplx value() const { return {alpha, beta}; }
};

namespace detail {

inline cplx series_z(double omega, const LineParams& p) {
    return {p.r0, omega * p.l0};
}

inline cplx shunt_y(double omega, const LineParams& p) {
    return {p.g0, omega * p.c0};
}

// sinh(w)/w, regular at w = 0.
inline cplx sinhc(cplx w) {
    if (std::abs(w) < 1e-3) {
        const cplx w2 = w * w;
        return 1.0 + w2 / 6.0 * (1.0 + w2 / 20.0 * (1.0 + w2 / 42.0));
    }
    return std::sinh(w) / w;
}

// tanh(u)/u, regular at u = 0.
inline cplx tanhc(cplx u) {
    if (std::abs(u) < 1e-3) {
        const cplx u2 = u * u;
        return 1.0 - u2 / 3.0 + u2 * u2 * (2.0 / 15.0) - u2 * u2 * u2 * (17.0 / 315.0);
    }
    return std::tanh(u) / u;
}

} // namespace detail

inline Gamma gamma(double omega, const LineParams& p) {
    cplx g = std::sqrt(detail::series_z(omega, p) * detail::shunt_y(omega, p));
    if (g.real() < 0.0) g = -g;
    return {g.real(), g.imag()};
}

// sqrt((r0 + jwl0)/(g0 + jwc0)), principal root (nonnegative real part).
// Undefined at DC when g0 = 0; the nodal solver never needs it there.
inline cplx char_impedance(double omega, const LineParams& p) {
    const cplx y = detail::shunt_y(omega, p);
    if (y == cplx(0.0, 0.0))
        throw Error("characteristic impedance undefined at DC for a line with g0 = 0");
    cplx zc = std::sqrt(detail::series_z(omega, p) / y);
    if (zc.real() < 0.0) zc = -zc;
    return zc;
}

inline cplx reflection_coeff(double z0, cplx zc) {
    const cplx den = z0 + zc;
    if (std::abs(den) == 0.0) throw Error("degenerate termination: z0 = -zc");
    return (z0 - zc) / den;
}

namespace detail {

inline void check_resonance(const cplx& den, const cplx& rho0) {
    if (std::abs(den) < 1e-9 * (1.0 + std::abs(rho0)))
        throw ResonanceError("closed-form transfer function near resonance");
}

} // namespace detail

// Port voltage per unit fault source: a short-circuit fault at distance x_f
// from a port terminated with reflection coefficient rho0 produces
// U0 = (1 + rho0) e^{-g x_f} / (1 + rho0 e^{-2 g x_f}) per unit source.
inline cplx forward_transfer(double x_f, cplx rho0, const Gamma& g) {
    const cplx e1 = std::exp(-g.value() * x_f);
    const cplx den = 1.0 + rho0 * e1 * e1;
    detail::check_resonance(den, rho0);
    return (1.0 + rho0) * e1 / den;
}

// Short-circuit current at guess distance x_g when the time-reversed port
// capture is re-injected, per unit conjugated fault source.
inline cplx reverse_current_classic(double x_f, double x_g, cplx rho0, const Gamma& g, double z0) {
    const cplx gv = g.value();
    const cplx den_g = 1.0 + rho0 * std::exp(-2.0 * gv * x_g);
    const cplx den_f = 1.0 + rho0 * std::exp(2.0 * gv * x_f);
    detail::check_resonance(den_g, rho0);
    detail::check_resonance(den_f, rho0);
    return (1.0 + rho0) * (1.0 + rho0) * std::exp(-gv * (x_g - x_f)) / (z0 * den_g * den_f);
}

// Same with the capture injected unreversed, per unit fault source.
inline cplx reverse_current_direct(double x_f, double x_g, cplx rho0, const Gamma& g, double z0) {
    const cplx gv = g.value();
    const cplx den_g = 1.0 + rho0 * std::exp(-2.0 * gv * x_g);
    const cplx den_f = 1.0 + rho0 * std::exp(-2.0 * gv * x_f);
    detail::check_resonance(den_g, rho0);
    detail::check_resonance(den_f, rho0);
    return (1.0 + rho0) * (1.0 + rho0) * std::exp(-gv * (x_g + x_f)) / (z0 * den_g * den_f);
}

// Short-circuit current at x_g per unit of an arbitrary spectrum injected at
// the port behind z0.
inline cplx injected_current_arbitrary(double x_g, cplx rho0, const Gamma& g, double z0) {
    const cplx gv = g.value();
    const cplx den = 1.0 + rho0 * std::exp(-2.0 * gv * x_g);
    detail::check_resonance(den, rho0);
    return (1.0 + rho0) * std::exp(-gv * x_g) / (z0 * den);
}

// Exact PI equivalent of a uniform segment. Regular at DC: the series
// impedance tends to z*l and each shunt half to y*l/2. A lossless segment at
// DC has series impedance exactly zero; the solver merges its end nodes.
struct SegmentPi {
    cplx series_impedance;
    cplx shunt_admittance; // one half, applied at each end
};

inline SegmentPi segment_pi(double omega, const LineParams& p, double length) {
    const cplx z = detail::series_z(omega, p);
    const cplx y = detail::shunt_y(omega, p);
    const cplx w = std::sqrt(z * y) * length;
    return {
        z * length * detail::sinhc(w),
        y * (length / 2.0) * detail::tanhc(w / 2.0),
    };
}

// Nodal admittance matrix of one segment: Y11 = Y22 = coth(g l)/Zc,
// Y12 = Y21 = -csch(g l)/Zc, expressed through the PI form so the DC limit
// stays finite for lossy lines.
struct TwoPort {
    cplx y11, y12, y21, y22;
};

inline TwoPort segment_two_port(double omega, const LineParams& p, double length) {
    const SegmentPi pi = segment_pi(omega, p, length);
    if (pi.series_impedance == cplx(0.0, 0.0))
        throw Error("segment two-port singular: zero series impedance (lossless line at DC)");
    const cplx ys = 1.0 / pi.series_impedance;
    return {ys + pi.shunt_admittance, -ys, -ys, ys + pi.shunt_admittance};
}

} // namespace emtrloc
