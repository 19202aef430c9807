// Shared test utilities: random states, Haar unitaries, and brute-force
// full-matrix oracles for gate/channel application.

#pragma once

#include <random>

#include "vqd/qstate.hpp"

namespace testutil {

using vqd::cplx;
using vqd::Mat;
using vqd::Vec;

inline std::mt19937_64& rng() {
    static std::mt19937_64 r(0xC0FFEEull);
    return r;
}

inline double urand(double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

inline Mat random_ginibre(int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng()), g(rng()));
    return m;
}

// Random full-rank density matrix.
inline Mat random_density(int d) {
    Mat g = random_ginibre(d);
    Mat rho = g * g.adjoint();
    rho /= rho.trace();
    return rho;
}

// Haar-random unitary via QR of a Ginibre matrix.
inline Mat random_unitary(int d) {
    Mat g = random_ginibre(d);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
        cplx ph = r(i, i) / std::abs(r(i, i));
        q.col(i) *= ph;
    }
    return q;
}

// Haar-random pure state.
inline Vec random_pure(int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx(g(rng()), g(rng()));
    v /= v.norm();
    return v;
}

// Embed an operator acting on `targets` (little endian) into n qubits.
inline Mat embed(const Mat& op, const std::vector<int>& targets, int n) {
    std::size_t d = std::size_t(1) << n;
    std::size_t s = std::size_t(1) << targets.size();
    Mat full = Mat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::size_t restmask = d - 1;
    for (int t : targets) restmask &= ~(std::size_t(1) << t);
    for (std::size_t r = 0; r < d; ++r) {
        std::size_t rest = r & restmask;
        std::size_t rloc = 0;
        for (std::size_t j = 0; j < targets.size(); ++j)
            rloc |= ((r >> targets[j]) & 1u) << j;
        for (std::size_t cloc = 0; cloc < s; ++cloc) {
            cplx v = op(static_cast<Eigen::Index>(rloc), static_cast<Eigen::Index>(cloc));
            if (v == cplx(0)) continue;
            std::size_t c = rest;
            for (std::size_t j = 0; j < targets.size(); ++j)
                if ((cloc >> j) & 1u) c |= std::size_t(1) << targets[j];
            full(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return full;
}

// Brute-force channel application on a full density matrix.
inline Mat apply_channel_oracle(const Mat& rho, const vqd::Channel& ch, int n) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& k : ch.kraus) {
        Mat kf = embed(k, ch.targets, n);
        out += kf * rho * kf.adjoint();
    }
    return out;
}

inline vqd::QuantumState state_from(const Mat& rho, int n) {
    return vqd::QuantumState::from_density(n, rho);
}

inline double maxdiff(const Mat& a, const Mat& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil
