// calibrate.hpp
// Entanglement fidelity of a channel, the average/entanglement fidelity
// relation, and inversion from a reported average gate fidelity to the
// (dephasing p, depolarising q) pair given a depolarising fraction x.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "channels.hpp"
#include "qstate.hpp"

namespace vqd {

struct FidelitySpec {
    double fbar;   // average gate fidelity
    double x;      // depolarising fraction in [0,1]; 1 = fully depolarising
    int arity;     // 1 or 2

    void validate() const {
        if (arity != 1 && arity != 2) throw std::invalid_argument("arity must be 1 or 2");
        double d = arity == 1 ? 2.0 : 4.0;
        if (!(fbar > 1.0 / (d + 1.0) && fbar <= 1.0))
            throw std::invalid_argument("fbar infeasible for arity");
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x out of range");
    }
};

// F_e = <Phi| (E x I)(|Phi><Phi|) |Phi> with |Phi> maximally entangled on
// 2 * arity qubits; computed by direct density-matrix evaluation.
inline double entanglement_fidelity(const Channel& ch) {
    int a = ch.arity();
    if (a < 1 || a > 2) throw std::invalid_argument("arity must be 1 or 2");
    int n = 2 * a;
    std::size_t d = std::size_t(1) << a;
    std::vector<cplx> amps(std::size_t(1) << n, cplx(0));
    double w = 1.0 / std::sqrt(static_cast<double>(d));
    // |Phi> = sum_i |i>_sys |i>_anc / sqrt(d); system = low qubits
    for (std::size_t i = 0; i < d; ++i) amps[i | (i << a)] = w;
    QuantumState st = QuantumState::from_amplitudes(n, amps).to_density();
    Channel local = ch;
    local.targets.clear();
    for (int i = 0; i < a; ++i) local.targets.push_back(i);
    st.apply_channel_unchecked(local);
    // overlap with |Phi>
    Mat rho = st.to_matrix();
    cplx acc = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            acc += rho(static_cast<Eigen::Index>(i | (i << a)),
                       static_cast<Eigen::Index>(j | (j << a)));
    return acc.real() / static_cast<double>(d);
}

inline double average_from_entanglement(double fe, int d) {
    if (d != 2 && d != 4) throw std::invalid_argument("d must be 2 or 4");
    return (d * fe + 1.0) / (d + 1.0);
}

inline double entanglement_from_average(double fbar, int d) {
    if (d != 2 && d != 4) throw std::invalid_argument("d must be 2 or 4");
    return ((d + 1.0) * fbar - 1.0) / d;
}

// Invert average gate fidelity into (p = dephasing, q = depolarising) with
// p = u (1-x), q = u x. The quadratic's root continuous with fbar -> 1 is
// selected. Throws if no root lands in the channels' valid ranges.
inline std::pair<double, double> invert(const FidelitySpec& spec) {
    spec.validate();
    int d = spec.arity == 1 ? 2 : 4;
    double fe = entanglement_from_average(spec.fbar, d);
    double cross = spec.arity == 1 ? 4.0 / 3.0 : 16.0 / 15.0;
    double a = cross * spec.x * (1.0 - spec.x);
    double target = 1.0 - fe;  // u - a u^2 = 1 - fe
    double u;
    if (a < 1e-15) {
        u = target;
    } else {
        double disc = 1.0 - 4.0 * a * target;
        if (disc < 0) throw std::domain_error("no real root for fidelity inversion");
        u = (1.0 - std::sqrt(disc)) / (2.0 * a);
    }
    double p = u * (1.0 - spec.x);
    double q = u * spec.x;
    double pmax = spec.arity == 1 ? 0.5 : 0.75;
    double qmax = spec.arity == 1 ? 0.75 : 15.0 / 16.0;
    double slack = 1e-12;
    if (p < -slack || p > pmax + slack || q < -slack || q > qmax + slack)
        throw std::domain_error("no in-range root for fidelity inversion");
    return {std::clamp(p, 0.0, pmax), std::clamp(q, 0.0, qmax)};
}

// Bell-state fidelity of deph2(p) . depol2(q) applied to a Bell pair,
// closed form: F = (1 - 2p/3)(1 - 4q/5) + 8pq/45.
inline double bell_fidelity_from_pq(double p, double q) {
    return (1.0 - 2.0 * p / 3.0) * (1.0 - 4.0 * q / 5.0) + 8.0 * p * q / 45.0;
}

// Invert a target Bell-state fidelity into (p, q) with p = u(1-x), q = u x.
// Used for calibrating entangled-pair sources whose quoted figure is a state
// fidelity rather than an average gate fidelity.
inline std::pair<double, double> invert_bell_fidelity(double f, double x) {
    if (!(f > 0.25 && f <= 1.0)) throw std::invalid_argument("bell fidelity infeasible");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x out of range");
    // F(u) = (1 - 2u(1-x)/3)(1 - 4ux/5) + 8 u^2 x(1-x)/45
    double b = 2.0 * (1.0 - x) / 3.0 + 4.0 * x / 5.0;
    double a = (2.0 * (1.0 - x) / 3.0) * (4.0 * x / 5.0) + 8.0 * x * (1.0 - x) / 45.0;
    double target = 1.0 - f;  // b u - a u^2 = 1 - F
    double u;
    if (a < 1e-15) {
        u = target / b;
    } else {
        double disc = b * b - 4.0 * a * target;
        if (disc < 0) throw std::domain_error("no real root for Bell fidelity inversion");
        u = (b - std::sqrt(disc)) / (2.0 * a);
    }
    double p = u * (1.0 - x), q = u * x;
    if (p < 0 || p > 0.75 + 1e-12 || q < 0 || q > 15.0 / 16.0 + 1e-12)
        throw std::domain_error("no in-range root for Bell fidelity inversion");
    return {p, q};
}

}  // namespace vqd
