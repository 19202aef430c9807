// channels.hpp
// Kraus-channel constructors: depolarising, dephasing, amplitude damping,
// bit flip, passive decay wrappers, off-resonant drive and crosstalk
// unitaries, generalised amplitude damping, and the CPTN leakage maps.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace vqd {

enum class ChannelTag { CPTP, CPTN };

struct Channel {
    std::vector<Mat> kraus;
    std::vector<int> targets;
    ChannelTag tag = ChannelTag::CPTP;
    std::string label;

    int arity() const { return static_cast<int>(targets.size()); }
    std::size_t dim() const { return std::size_t(1) << targets.size(); }

    bool is_identity(double tol = 1e-14) const {
        bool seen_identity = false;
        for (const Mat& k : kraus) {
            if (k.cwiseAbs().maxCoeff() < tol) continue;  // vanishing branch
            Mat d = k - Mat::Identity(k.rows(), k.cols());
            if (d.cwiseAbs().maxCoeff() >= tol || seen_identity) return false;
            seen_identity = true;
        }
        return seen_identity;
    }

    // max |Sum K^dag K - I| (CPTP residual); for CPTN the sum must be <= I.
    double completeness_residual() const {
        Mat s = Mat::Zero(kraus[0].rows(), kraus[0].cols());
        for (const Mat& k : kraus) s += k.adjoint() * k;
        return (s - Mat::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
    }

    bool check_tag(double tol = 1e-9) const {
        Mat s = Mat::Zero(kraus[0].rows(), kraus[0].cols());
        for (const Mat& k : kraus) s += k.adjoint() * k;
        Mat defect = Mat::Identity(s.rows(), s.cols()) - s;
        if (tag == ChannelTag::CPTP) return defect.cwiseAbs().maxCoeff() < tol;
        // CPTN: I - sum must be PSD
        Eigen::SelfAdjointEigenSolver<Mat> es((defect + defect.adjoint()) / 2.0);
        return es.eigenvalues().minCoeff() > -tol;
    }
};

namespace detail {
inline void check_range(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi))
        throw std::invalid_argument(std::string(name) + " out of range");
}
}  // namespace detail

// ---- Pauli channels ----

inline Channel identity_channel(std::vector<int> targets, std::string label = "id") {
    Channel c;
    c.kraus = {Mat::Identity(std::ptrdiff_t(1) << targets.size(),
                             std::ptrdiff_t(1) << targets.size())};
    c.targets = std::move(targets);
    c.label = std::move(label);
    return c;
}

inline Channel depol1(double p, int q = 0) {
    detail::check_range(p, 0.0, 0.75, "depol1 p");
    Channel c;
    c.targets = {q};
    c.label = "depol1(" + std::to_string(p) + ")";
    c.kraus.push_back(std::sqrt(1 - p) * mat_i());
    for (char s : {'X', 'Y', 'Z'}) c.kraus.push_back(std::sqrt(p / 3) * pauli(s));
    return c;
}

inline Channel depol2(double p, int q0 = 0, int q1 = 1) {
    detail::check_range(p, 0.0, 15.0 / 16.0, "depol2 p");
    Channel c;
    c.targets = {q0, q1};
    c.label = "depol2(" + std::to_string(p) + ")";
    c.kraus.push_back(std::sqrt(1 - p) * Mat::Identity(4, 4));
    const char* letters = "IXYZ";
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            if (a == 0 && b == 0) continue;
            // little endian: first target is the low tensor factor
            c.kraus.push_back(std::sqrt(p / 15) * kron(pauli(letters[b]), pauli(letters[a])));
        }
    return c;
}

inline Channel deph1(double p, int q = 0) {
    detail::check_range(p, 0.0, 0.5, "deph1 p");
    Channel c;
    c.targets = {q};
    c.label = "deph1(" + std::to_string(p) + ")";
    c.kraus = {std::sqrt(1 - p) * mat_i(), std::sqrt(p) * mat_z()};
    return c;
}

inline Channel deph2(double p, int q0 = 0, int q1 = 1) {
    detail::check_range(p, 0.0, 0.75, "deph2 p");
    Channel c;
    c.targets = {q0, q1};
    c.label = "deph2(" + std::to_string(p) + ")";
    Mat zi = kron(mat_i(), mat_z());  // Z on first (low) target
    Mat iz = kron(mat_z(), mat_i());
    Mat zz = kron(mat_z(), mat_z());
    c.kraus = {std::sqrt(1 - p) * Mat::Identity(4, 4), std::sqrt(p / 3) * zi,
               std::sqrt(p / 3) * iz, std::sqrt(p / 3) * zz};
    return c;
}

inline Channel bitflip1(double b, int q = 0) {
    detail::check_range(b, 0.0, 0.5, "bitflip1 b");
    Channel c;
    c.targets = {q};
    c.label = "bitflip1(" + std::to_string(b) + ")";
    c.kraus = {std::sqrt(1 - b) * mat_i(), std::sqrt(b) * mat_x()};
    return c;
}

inline Channel bitflip2(double b, int q0 = 0, int q1 = 1) {
    detail::check_range(b, 0.0, 0.75, "bitflip2 b");
    Channel c;
    c.targets = {q0, q1};
    c.label = "bitflip2(" + std::to_string(b) + ")";
    Mat xi = kron(mat_i(), mat_x());
    Mat ix = kron(mat_x(), mat_i());
    Mat xx = kron(mat_x(), mat_x());
    c.kraus = {std::sqrt(1 - b) * Mat::Identity(4, 4), std::sqrt(b / 3) * xi,
               std::sqrt(b / 3) * ix, std::sqrt(b / 3) * xx};
    return c;
}

// Asymmetric bit flip: |0>->|1> with probability p01, |1>->|0> with p10.
inline Channel asym_bitflip(double p01, double p10, int q = 0) {
    detail::check_range(p01, 0.0, 1.0, "asym_bitflip p01");
    detail::check_range(p10, 0.0, 1.0, "asym_bitflip p10");
    Channel c;
    c.targets = {q};
    c.label = "asym_bitflip(" + std::to_string(p01) + "," + std::to_string(p10) + ")";
    Mat k0(2, 2), k1(2, 2), k2(2, 2);
    k0 << std::sqrt(1 - p01), 0, 0, std::sqrt(1 - p10);
    k1 << 0, 0, std::sqrt(p01), 0;
    k2 << 0, std::sqrt(p10), 0, 0;
    c.kraus = {k0, k1, k2};
    return c;
}

// ---- damping ----

inline Channel amp(double p, int q = 0) {
    detail::check_range(p, 0.0, 1.0, "amp p");
    Channel c;
    c.targets = {q};
    c.label = "amp(" + std::to_string(p) + ")";
    Mat k0(2, 2), k1(2, 2);
    k0 << 1, 0, 0, std::sqrt(1 - p);
    k1 << 0, std::sqrt(p), 0, 0;
    c.kraus = {k0, k1};
    return c;
}

// X . amp(p) . X conjugation: decays toward |1>.
inline Channel inverted_amp(double p, int q = 0) {
    Channel c = amp(p, q);
    for (Mat& k : c.kraus) k = mat_x() * k * mat_x();
    c.label = "inverted_amp(" + std::to_string(p) + ")";
    return c;
}

// Generalised amplitude damping with gamma = 1 - exp(-dt/t1) and ground
// population p_ground; fixed point is the thermal mixture.
inline Channel gamp(double dt, double t1, double p_ground, int q = 0) {
    if (dt < 0 || t1 <= 0) throw std::invalid_argument("gamp time parameters");
    detail::check_range(p_ground, 0.0, 1.0, "gamp p_ground");
    double g = 1.0 - std::exp(-dt / t1);
    Channel c;
    c.targets = {q};
    c.label = "gamp(" + std::to_string(g) + "," + std::to_string(p_ground) + ")";
    double sp = std::sqrt(p_ground), sq = std::sqrt(1 - p_ground);
    Mat k0(2, 2), k1(2, 2), k2(2, 2), k3(2, 2);
    k0 << 1, 0, 0, std::sqrt(1 - g);
    k1 << 0, std::sqrt(g), 0, 0;
    k2 << std::sqrt(1 - g), 0, 0, 1;
    k3 << 0, 0, std::sqrt(g), 0;
    c.kraus = {sp * k0, sp * k1, sq * k2, sq * k3};
    return c;
}

// ---- composition ----

// Composition second . first as a single Kraus list (products K2_j K1_i).
inline Channel compose(const Channel& first, const Channel& second, std::string label = "") {
    if (first.targets != second.targets)
        throw std::invalid_argument("compose: target mismatch");
    Channel c;
    c.targets = first.targets;
    c.tag = (first.tag == ChannelTag::CPTN || second.tag == ChannelTag::CPTN)
                ? ChannelTag::CPTN
                : ChannelTag::CPTP;
    c.label = label.empty() ? second.label + "." + first.label : std::move(label);
    for (const Mat& k2 : second.kraus)
        for (const Mat& k1 : first.kraus) c.kraus.push_back(k2 * k1);
    return c;
}

// deph(p) . depol(q) on one or two qubits (the standard composed error).
inline Channel standard_error(double p, double q, int arity,
                              std::vector<int> targets = {}) {
    if (targets.empty()) {
        targets.resize(arity);
        for (int i = 0; i < arity; ++i) targets[i] = i;
    }
    Channel dep = arity == 1 ? depol1(q, targets[0]) : depol2(q, targets[0], targets[1]);
    Channel dph = arity == 1 ? deph1(p, targets[0]) : deph2(p, targets[0], targets[1]);
    return compose(dep, dph,
                   "std_err(p=" + std::to_string(p) + ",q=" + std::to_string(q) + ")");
}

// ---- passive decay ----

inline Channel passive_t2(double dt, double t2, int q = 0) {
    if (dt < 0 || t2 <= 0) throw std::invalid_argument("passive_t2 parameters");
    return deph1(0.5 * (1.0 - std::exp(-dt / t2)), q);
}

inline Channel passive_t2star(double dt, double t2star, int q = 0) {
    if (dt < 0 || t2star <= 0) throw std::invalid_argument("passive_t2star parameters");
    double r = dt / t2star;
    return deph1(0.5 * (1.0 - std::exp(-r * r)), q);
}

inline Channel passive_t1_depol(double dt, double t1, int q = 0) {
    if (dt < 0 || t1 <= 0) throw std::invalid_argument("passive_t1_depol parameters");
    return depol1(0.75 * (1.0 - std::exp(-dt / t1)), q);
}

inline Channel passive_t1_amp(double dt, double t1, int q = 0) {
    if (dt < 0 || t1 <= 0) throw std::invalid_argument("passive_t1_amp parameters");
    return amp(1.0 - std::exp(-dt / t1), q);
}

// ---- coherent error unitaries ----

// Off-resonant Rabi drive: Rabi frequency omega, detuning delta, duration t.
inline Mat off_resonant(double omega, double delta, double t) {
    if (omega <= 0 || t < 0) throw std::invalid_argument("off_resonant parameters");
    double wr = std::sqrt(omega * omega + delta * delta);
    cplx c = std::cos(wr * t / 2);
    cplx sd = cplx(0, 1) * (delta / wr) * std::sin(wr * t / 2);
    cplx so = cplx(0, 1) * (omega / wr) * std::sin(wr * t / 2);
    Mat u(2, 2);
    u << c - sd, -so, -so, c + sd;
    return u;
}

// |0><0| x I + |1><1| x Rz(alpha); control = first (low) target.
inline Mat cond_phase(double alpha) {
    Mat u = Mat::Identity(4, 4);
    // index = target<<1 | control
    u(1, 1) = std::exp(cplx(0, -alpha / 2));
    u(3, 3) = std::exp(cplx(0, alpha / 2));
    return u;
}

// exp(-i alpha Z x Z)
inline Mat zz_coupling(double alpha) {
    Mat u = Mat::Identity(4, 4);
    cplx em = std::exp(cplx(0, -alpha)), ep = std::exp(cplx(0, alpha));
    u(0, 0) = em;
    u(1, 1) = ep;
    u(2, 2) = ep;
    u(3, 3) = em;
    return u;
}

// exp(-i (XX + YY + ZZ) theta / 4): full swap (up to phase) at theta = m pi.
inline Mat exchange_crosstalk(double theta) {
    Mat xx = kron(mat_x(), mat_x()), yy = kron(mat_y(), mat_y()), zz = kron(mat_z(), mat_z());
    Mat h = (xx + yy + zz) / 4.0;
    // h has eigenvalues 3/4 (triplet) and -3/4... diagonalise explicitly
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    Mat d = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
        d(i, i) = std::exp(cplx(0, -theta) * es.eigenvalues()(i));
    return es.eigenvectors() * d * es.eigenvectors().adjoint();
}

// ---- CPTN leakage maps ----

// Initialisation leakage L = diag(sqrt(1-gamma), 1).
inline Channel leak_init(double gamma, int q = 0) {
    detail::check_range(gamma, 0.0, 1.0, "leak_init gamma");
    Channel c;
    c.targets = {q};
    c.tag = ChannelTag::CPTN;
    c.label = "leak_init(" + std::to_string(gamma) + ")";
    Mat l(2, 2);
    l << std::sqrt(1 - gamma), 0, 0, 1;
    c.kraus = {l};
    return c;
}

// Two-qubit gate leakage K = diag(1, sqrt(1-a), sqrt(1-a), sqrt(1-b)).
inline Channel leak_cz(double alpha, double beta, int q0 = 0, int q1 = 1) {
    detail::check_range(alpha, 0.0, 1.0, "leak_cz alpha");
    detail::check_range(beta, 0.0, 1.0, "leak_cz beta");
    Channel c;
    c.targets = {q0, q1};
    c.tag = ChannelTag::CPTN;
    c.label = "leak_cz(" + std::to_string(alpha) + "," + std::to_string(beta) + ")";
    Mat k = Mat::Identity(4, 4);
    k(1, 1) = std::sqrt(1 - alpha);
    k(2, 2) = std::sqrt(1 - alpha);
    k(3, 3) = std::sqrt(1 - beta);
    c.kraus = {k};
    return c;
}

// Multi-qubit gate leakage M = tensor_j diag(1, sqrt(1-alpha)) over targets.
inline Channel leak_multi(double alpha, std::vector<int> targets) {
    detail::check_range(alpha, 0.0, 1.0, "leak_multi alpha");
    Channel c;
    c.tag = ChannelTag::CPTN;
    c.label = "leak_multi(" + std::to_string(alpha) + ")";
    Mat mj(2, 2);
    mj << 1, 0, 0, std::sqrt(1 - alpha);
    Mat m = mj;
    for (std::size_t i = 1; i < targets.size(); ++i) m = kron(mj, m);
    c.targets = std::move(targets);
    c.kraus = {m};
    return c;
}

// ---- angle scaling (severity eps scaled to eps |theta| / pi, saturating) ----

inline double angle_scaled(double eps, double theta, double max_valid) {
    double s = eps * std::abs(theta) / pi;
    return std::clamp(s, 0.0, max_valid);
}

}  // namespace vqd
