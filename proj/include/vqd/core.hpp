// core.hpp
// Shared numeric types, Pauli/gate matrices, bit utilities and seeded RNG
// substreams used across the emulator.

#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vqd {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;

// ---- bit utilities (little endian: qubit 0 = least significant bit) ----

inline std::size_t bit(std::size_t i, int q) { return (i >> q) & 1u; }

inline int parity(std::size_t v) {
#if defined(__GNUC__)
    return __builtin_parityll(v);
#else
    int p = 0;
    while (v) { p ^= 1; v &= v - 1; }
    return p;
#endif
}

// Insert zero bits at the (sorted ascending) positions, spreading the low
// bits of `i` into the remaining positions. Used to enumerate gate blocks.
inline std::size_t expand_index(std::size_t i, const std::vector<int>& sorted_bits) {
    for (int b : sorted_bits) {
        std::size_t low = i & ((std::size_t(1) << b) - 1);
        i = ((i >> b) << (b + 1)) | low;
    }
    return i;
}

// ---- fixed matrices ----

inline Mat mat_i() { Mat m(2, 2); m << 1, 0, 0, 1; return m; }
inline Mat mat_x() { Mat m(2, 2); m << 0, 1, 1, 0; return m; }
inline Mat mat_y() { Mat m(2, 2); m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Mat mat_z() { Mat m(2, 2); m << 1, 0, 0, -1; return m; }
inline Mat mat_h() {
    Mat m(2, 2);
    double s = 1.0 / std::sqrt(2.0);
    m << s, s, s, -s;
    return m;
}

inline Mat rx(double th) {
    Mat m(2, 2);
    cplx c = std::cos(th / 2), s = cplx(0, -1) * std::sin(th / 2);
    m << c, s, s, c;
    return m;
}
inline Mat ry(double th) {
    Mat m(2, 2);
    double c = std::cos(th / 2), s = std::sin(th / 2);
    m << c, -s, s, c;
    return m;
}
inline Mat rz(double th) {
    Mat m(2, 2);
    m << std::exp(cplx(0, -th / 2)), 0, 0, std::exp(cplx(0, th / 2));
    return m;
}

inline Mat mat_cz() {
    Mat m = Mat::Identity(4, 4);
    m(3, 3) = -1;
    return m;
}

// Control is qubit index 0 of the pair (first target), little endian.
inline Mat mat_cnot() {
    Mat m = Mat::Zero(4, 4);
    // basis index = q_target<<1 | q_control with targets = {control, target}
    m(0, 0) = 1; m(2, 2) = 1;  // control 0: target unchanged
    m(3, 1) = 1; m(1, 3) = 1;  // control 1: target flips
    return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

// Single-qubit Pauli by letter.
inline Mat pauli(char c) {
    switch (c) {
        case 'I': return mat_i();
        case 'X': return mat_x();
        case 'Y': return mat_y();
        case 'Z': return mat_z();
    }
    throw std::invalid_argument("unknown Pauli letter");
}

// n-qubit Pauli product from per-qubit letters, letters[q] for qubit q
// (little endian: full matrix = letters[n-1] x ... x letters[0]).
inline Mat pauli_product(const std::string& letters) {
    Mat m = pauli(letters[0]);
    for (std::size_t q = 1; q < letters.size(); ++q) m = kron(pauli(letters[q]), m);
    return m;
}

inline bool is_unitary(const Mat& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return (u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() < tol;
}

// ---- seeded RNG substreams ----

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic per-index substream seed derived from a master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x2545f4914f6cdd1dull * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace vqd
