// qstate.hpp
// Dense statevector / density-matrix engine: unitary and Kraus application,
// projective measurement, Pauli expectations, fidelity and concurrence.
// Qubit 0 is the least significant amplitude index bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "channels.hpp"
#include "core.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vqd {

enum class Repr { Statevector, Density };

struct PauliString {
    std::map<int, char> terms;  // qubit -> 'X' | 'Y' | 'Z'
    double coeff = 1.0;

    static PauliString parse(const std::string& text, double coeff = 1.0) {
        PauliString p;
        p.coeff = coeff;
        std::size_t i = 0;
        while (i < text.size()) {
            if (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == '*') {
                ++i;
                continue;
            }
            char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
            if (c != 'X' && c != 'Y' && c != 'Z' && c != 'I')
                throw std::invalid_argument("bad Pauli letter in '" + text + "'");
            ++i;
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j == i) throw std::invalid_argument("missing qubit index in '" + text + "'");
            int q = std::stoi(text.substr(i, j - i));
            if (c != 'I') p.terms[q] = c;
            i = j;
        }
        return p;
    }

    std::string str() const {
        if (terms.empty()) return "I";
        std::string s;
        for (auto& [q, c] : terms) {
            if (!s.empty()) s += ' ';
            s += c;
            s += std::to_string(q);
        }
        return s;
    }
};

using PauliSum = std::vector<PauliString>;

namespace detail {

// Apply a dense s x s matrix to bit positions `bits` (matrix index bit j
// corresponds to bits[j]) of the flat amplitude array.
inline void apply_matrix_bits(std::vector<cplx>& a, const Mat& m,
                              const std::vector<int>& bits) {
    const int t = static_cast<int>(bits.size());
    const std::size_t s = std::size_t(1) << t;
    std::vector<int> sorted = bits;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> offs(s);
    for (std::size_t loc = 0; loc < s; ++loc) {
        std::size_t o = 0;
        for (int j = 0; j < t; ++j)
            if ((loc >> j) & 1u) o |= std::size_t(1) << bits[j];
        offs[loc] = o;
    }
    const std::size_t groups = a.size() >> t;
    if (t == 1) {
        const cplx m00 = m(0, 0), m01 = m(0, 1), m10 = m(1, 0), m11 = m(1, 1);
        const std::size_t hb = offs[1];
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (groups > 4096)
#endif
        for (long long gi = 0; gi < static_cast<long long>(groups); ++gi) {
            std::size_t base = expand_index(std::size_t(gi), sorted);
            cplx a0 = a[base], a1 = a[base + hb];
            a[base] = m00 * a0 + m01 * a1;
            a[base + hb] = m10 * a0 + m11 * a1;
        }
        return;
    }
    if (s > 64) {
        std::vector<cplx> in(s), out(s);
        for (std::size_t gi = 0; gi < groups; ++gi) {
            std::size_t base = expand_index(gi, sorted);
            for (std::size_t r = 0; r < s; ++r) in[r] = a[base + offs[r]];
            for (std::size_t r = 0; r < s; ++r) {
                cplx acc = 0;
                for (std::size_t c = 0; c < s; ++c)
                    acc += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * in[c];
                out[r] = acc;
            }
            for (std::size_t r = 0; r < s; ++r) a[base + offs[r]] = out[r];
        }
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (groups > 2048)
#endif
    for (long long gi = 0; gi < static_cast<long long>(groups); ++gi) {
        std::size_t base = expand_index(std::size_t(gi), sorted);
        cplx in[64], out[64];
        for (std::size_t r = 0; r < s; ++r) in[r] = a[base + offs[r]];
        for (std::size_t r = 0; r < s; ++r) {
            cplx acc = 0;
            for (std::size_t c = 0; c < s; ++c) acc += m(static_cast<Eigen::Index>(r),
                                                         static_cast<Eigen::Index>(c)) * in[c];
            out[r] = acc;
        }
        for (std::size_t r = 0; r < s; ++r) a[base + offs[r]] = out[r];
    }
}

// Norm^2 of (M on `bits`) applied to the amplitude array, without mutating it.
inline double kraus_branch_norm(const std::vector<cplx>& a, const Mat& m,
                                const std::vector<int>& bits) {
    const int t = static_cast<int>(bits.size());
    const std::size_t s = std::size_t(1) << t;
    std::vector<int> sorted = bits;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> offs(s);
    for (std::size_t loc = 0; loc < s; ++loc) {
        std::size_t o = 0;
        for (int j = 0; j < t; ++j)
            if ((loc >> j) & 1u) o |= std::size_t(1) << bits[j];
        offs[loc] = o;
    }
    const std::size_t groups = a.size() >> t;
    double total = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : total) if (groups > 4096)
#endif
    for (long long gi = 0; gi < static_cast<long long>(groups); ++gi) {
        std::size_t base = expand_index(std::size_t(gi), sorted);
        double local = 0;
        for (std::size_t r = 0; r < s; ++r) {
            cplx acc = 0;
            for (std::size_t c = 0; c < s; ++c)
                acc += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                       a[base + offs[c]];
            local += std::norm(acc);
        }
        total += local;
    }
    return total;
}

}  // namespace detail

class QuantumState {
public:
    QuantumState() = default;

    static QuantumState statevector(int n, std::size_t basis = 0) {
        QuantumState s;
        s.n_ = n;
        s.repr_ = Repr::Statevector;
        s.a_.assign(std::size_t(1) << n, cplx(0));
        if (basis >= s.a_.size()) throw std::out_of_range("basis state out of range");
        s.a_[basis] = 1.0;
        return s;
    }

    static QuantumState density(int n, std::size_t basis = 0) {
        QuantumState s;
        s.n_ = n;
        s.repr_ = Repr::Density;
        std::size_t d = std::size_t(1) << n;
        s.a_.assign(d * d, cplx(0));
        if (basis >= d) throw std::out_of_range("basis state out of range");
        s.a_[basis * d + basis] = 1.0;
        return s;
    }

    static QuantumState from_amplitudes(int n, std::vector<cplx> amps) {
        if (amps.size() != (std::size_t(1) << n))
            throw std::invalid_argument("amplitude vector size");
        QuantumState s;
        s.n_ = n;
        s.repr_ = Repr::Statevector;
        s.a_ = std::move(amps);
        double nn = 0;
        for (const cplx& v : s.a_) nn += std::norm(v);
        s.survival_ = nn;
        return s;
    }

    static QuantumState from_density(int n, Mat rho) {
        std::size_t d = std::size_t(1) << n;
        if (rho.rows() != static_cast<Eigen::Index>(d) ||
            rho.cols() != static_cast<Eigen::Index>(d))
            throw std::invalid_argument("density matrix size");
        QuantumState s;
        s.n_ = n;
        s.repr_ = Repr::Density;
        s.a_.resize(d * d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c)
                s.a_[r * d + c] = rho(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(c));
        s.survival_ = s.trace().real();
        return s;
    }

    int n_qubits() const { return n_; }
    Repr repr() const { return repr_; }
    std::size_t dim() const { return std::size_t(1) << n_; }
    double survival_probability() const { return survival_; }
    const std::vector<cplx>& data() const { return a_; }
    std::vector<cplx>& data() { return a_; }

    cplx trace() const {
        if (repr_ == Repr::Statevector) {
            double nn = 0;
            for (const cplx& v : a_) nn += std::norm(v);
            return nn;
        }
        std::size_t d = dim();
        cplx t = 0;
        for (std::size_t i = 0; i < d; ++i) t += a_[i * d + i];
        return t;
    }

    Mat to_matrix() const {
        std::size_t d = dim();
        Mat rho(d, d);
        if (repr_ == Repr::Statevector) {
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        a_[r] * std::conj(a_[c]);
        } else {
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        a_[r * d + c];
        }
        return rho;
    }

    Vec to_vector() const {
        if (repr_ != Repr::Statevector) throw std::logic_error("not a statevector");
        Vec v(static_cast<Eigen::Index>(a_.size()));
        for (std::size_t i = 0; i < a_.size(); ++i) v(static_cast<Eigen::Index>(i)) = a_[i];
        return v;
    }

    QuantumState to_density() const {
        if (repr_ == Repr::Density) return *this;
        QuantumState s;
        s.n_ = n_;
        s.repr_ = Repr::Density;
        std::size_t d = dim();
        s.a_.resize(d * d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) s.a_[r * d + c] = a_[r] * std::conj(a_[c]);
        s.survival_ = survival_;
        return s;
    }

    // ---- unitary / Kraus application ----

    void apply_unitary(const Mat& u, const std::vector<int>& targets) {
        check_targets(targets, u.rows());
        if (!is_unitary(u)) throw std::invalid_argument("matrix is not unitary");
        apply_matrix_unchecked(u, targets);
    }

    // Raw operator application without unitarity checks (Kraus branches).
    void apply_matrix_unchecked(const Mat& m, const std::vector<int>& targets) {
        if (repr_ == Repr::Statevector) {
            detail::apply_matrix_bits(a_, m, targets);
        } else {
            std::vector<int> rowbits(targets);
            for (int& b : rowbits) b += n_;
            detail::apply_matrix_bits(a_, m.conjugate(), targets);  // columns
            detail::apply_matrix_bits(a_, m, rowbits);              // rows
        }
    }

    // Density-mode channel application: rho <- sum_k K rho K^dag.
    void apply_channel(const Channel& ch) {
        if (repr_ != Repr::Density)
            throw std::logic_error("apply_channel requires density representation "
                                   "(statevector channels are sampled)");
        check_targets(ch.targets, static_cast<Eigen::Index>(ch.dim()));
        if (!ch.check_tag())
            throw std::invalid_argument("Kraus completeness violated for " + ch.label);
        apply_channel_unchecked(ch);
    }

    void apply_channel_unchecked(const Channel& ch) {
        const int t = ch.arity();
        const std::size_t s = std::size_t(1) << t;
        // combined row/col bit list: col bits then row bits
        std::vector<int> bits;
        for (int q : ch.targets) bits.push_back(q);
        for (int q : ch.targets) bits.push_back(q + n_);
        std::vector<int> sorted = bits;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t d = dim();
        std::vector<std::size_t> roff(s), coff(s);
        for (std::size_t loc = 0; loc < s; ++loc) {
            std::size_t ro = 0, co = 0;
            for (int j = 0; j < t; ++j)
                if ((loc >> j) & 1u) {
                    ro |= (std::size_t(1) << ch.targets[j]) * d;
                    co |= std::size_t(1) << ch.targets[j];
                }
            roff[loc] = ro;
            coff[loc] = co;
        }
        const std::size_t nk = ch.kraus.size();
        if (s > 16) {
            // rare large-arity channels: apply each Kraus operator separately
            std::vector<cplx> saved = a_;
            std::vector<cplx> acc(a_.size(), cplx(0));
            for (const Mat& k : ch.kraus) {
                a_ = saved;
                apply_matrix_unchecked(k, ch.targets);
                for (std::size_t i = 0; i < a_.size(); ++i) acc[i] += a_[i];
            }
            a_ = std::move(acc);
            if (ch.tag == ChannelTag::CPTN) survival_ = trace().real();
            return;
        }
        const std::size_t groups = a_.size() >> (2 * t);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (groups > 1024)
#endif
        for (long long gi = 0; gi < static_cast<long long>(groups); ++gi) {
            std::size_t base = expand_index(std::size_t(gi), sorted);
            cplx blk[256], tmp[256], out[256];
            for (std::size_t r = 0; r < s; ++r)
                for (std::size_t c = 0; c < s; ++c)
                    blk[r * s + c] = a_[base + roff[r] + coff[c]];
            for (std::size_t i = 0; i < s * s; ++i) out[i] = 0;
            for (std::size_t k = 0; k < nk; ++k) {
                const Mat& km = ch.kraus[k];
                // tmp = K * blk
                for (std::size_t r = 0; r < s; ++r)
                    for (std::size_t c = 0; c < s; ++c) {
                        cplx acc = 0;
                        for (std::size_t x = 0; x < s; ++x)
                            acc += km(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(x)) * blk[x * s + c];
                        tmp[r * s + c] = acc;
                    }
                // out += tmp * K^dag
                for (std::size_t r = 0; r < s; ++r)
                    for (std::size_t c = 0; c < s; ++c) {
                        cplx acc = 0;
                        for (std::size_t x = 0; x < s; ++x)
                            acc += tmp[r * s + x] *
                                   std::conj(km(static_cast<Eigen::Index>(c),
                                                static_cast<Eigen::Index>(x)));
                        out[r * s + c] += acc;
                    }
            }
            for (std::size_t r = 0; r < s; ++r)
                for (std::size_t c = 0; c < s; ++c)
                    a_[base + roff[r] + coff[c]] = out[r * s + c];
        }
        if (ch.tag == ChannelTag::CPTN) survival_ = trace().real();
    }

    // ---- statevector Kraus sampling (trajectory engine) ----

    // Draw a Kraus branch with probability ||K_k psi||^2 and apply it,
    // renormalising. Returns the branch index, or -1 when the CPTN leakage
    // deficit was drawn (state left untouched; caller abandons the trajectory).
    int sample_kraus(const std::vector<Mat>& kraus, const std::vector<int>& targets, Rng& rng) {
        if (repr_ != Repr::Statevector)
            throw std::logic_error("sample_kraus requires statevector representation");
        check_targets(targets, kraus.front().rows());
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        const double r = dist(rng);
        double acc = 0;
        for (std::size_t k = 0; k < kraus.size(); ++k) {
            double p = detail::kraus_branch_norm(a_, kraus[k], targets);
            acc += p;
            if (r < acc || (k + 1 == kraus.size() && acc > 1.0 - 1e-9)) {
                if (p <= 0) continue;  // numerically empty branch at the tail
                detail::apply_matrix_bits(a_, kraus[k], targets);
                const double scale = 1.0 / std::sqrt(p);
                for (cplx& v : a_) v *= scale;
                return static_cast<int>(k);
            }
        }
        return -1;  // leaked (trace-nonincreasing deficit)
    }

    // ---- measurement ----

    struct Projector {
        Mat p;
        std::string label;
    };

    // Sampled projective measurement on `targets`; projectors act on the
    // target subspace. Returns (label index, probability of that outcome).
    std::pair<int, double> measure_projective(const std::vector<Projector>& projs,
                                              const std::vector<int>& targets, Rng& rng) {
        std::vector<double> probs = outcome_probabilities(projs, targets);
        double total = std::accumulate(probs.begin(), probs.end(), 0.0);
        if (total <= 0) throw std::runtime_error("all outcome probabilities vanish");
        std::uniform_real_distribution<double> dist(0.0, total);
        double r = dist(rng);
        int pick = static_cast<int>(probs.size()) - 1;
        double acc = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (r <= acc) { pick = static_cast<int>(i); break; }
        }
        project(projs[static_cast<std::size_t>(pick)].p, targets, probs[static_cast<std::size_t>(pick)] / total);
        return {pick, probs[static_cast<std::size_t>(pick)] / total};
    }

    std::vector<double> outcome_probabilities(const std::vector<Projector>& projs,
                                              const std::vector<int>& targets) const {
        double tol = 1e-9;
        Mat sum = Mat::Zero(projs[0].p.rows(), projs[0].p.cols());
        for (const auto& pr : projs) sum += pr.p;
        if ((sum - Mat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("projector set incomplete");
        double tr = trace().real();
        std::vector<double> probs;
        probs.reserve(projs.size());
        for (const auto& pr : projs) probs.push_back(std::max(0.0, op_trace(pr.p, targets) / tr));
        return probs;
    }

    // Project onto P (on targets) and renormalise back to prior survival.
    void project(const Mat& p, const std::vector<int>& targets, double prob) {
        double prior = survival_;
        apply_matrix_unchecked_both(p, targets);
        if (prob <= 0) throw std::runtime_error("projection onto zero-probability outcome");
        double scale = repr_ == Repr::Statevector ? 1.0 / std::sqrt(prob) : 1.0 / prob;
        for (cplx& v : a_) v *= scale;
        survival_ = prior;
    }

    // Deferred measurement: decohere into the projector blocks (density only).
    void defer_measure(const std::vector<Projector>& projs, const std::vector<int>& targets) {
        if (repr_ != Repr::Density) throw std::logic_error("defer_measure requires density mode");
        Channel ch;
        ch.targets = targets;
        for (const auto& pr : projs) ch.kraus.push_back(pr.p);
        ch.label = "defer";
        apply_channel_unchecked(ch);
    }

    // Post-selection filter: rho <- sum_accepted P rho P, renormalised to the
    // prior survival probability. Returns the acceptance probability.
    double filter(const std::vector<Mat>& accepted, const std::vector<int>& targets) {
        if (repr_ != Repr::Density) throw std::logic_error("filter requires density mode");
        double prior = survival_;
        std::vector<cplx> saved = a_;
        std::vector<cplx> acc(a_.size(), cplx(0));
        for (const Mat& p : accepted) {
            a_ = saved;
            apply_matrix_unchecked_both(p, targets);
            for (std::size_t i = 0; i < a_.size(); ++i) acc[i] += a_[i];
        }
        a_ = std::move(acc);
        double tr = trace().real();
        if (tr <= 1e-300) throw std::runtime_error("post-selection filter has zero acceptance");
        double scale = prior / tr;
        for (cplx& v : a_) v *= scale;
        survival_ = prior;
        return tr / prior;
    }

    // ---- observables ----

    // tr(P rho) (unnormalised) for a single Pauli string (with coefficient).
    double pauli_raw(const PauliString& ps) const {
        std::size_t mx = 0, mz = 0;
        int ny = 0;
        for (auto& [q, c] : ps.terms) {
            if (q < 0 || q >= n_) throw std::out_of_range("Pauli qubit out of range");
            if (c == 'X') mx |= std::size_t(1) << q;
            else if (c == 'Z') mz |= std::size_t(1) << q;
            else { mx |= std::size_t(1) << q; mz |= std::size_t(1) << q; ++ny; }
        }
        cplx yph = std::pow(cplx(0, 1), ny);
        cplx total = 0;
        if (repr_ == Repr::Statevector) {
            const std::size_t d = dim();
            double re = 0, im = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : re, im) if (d > 8192)
#endif
            for (long long i = 0; i < static_cast<long long>(d); ++i) {
                std::size_t ii = std::size_t(i);
                double sgn = parity(mz & ii) ? -1.0 : 1.0;
                cplx v = std::conj(a_[ii ^ mx]) * sgn * a_[ii];
                re += v.real();
                im += v.imag();
            }
            total = yph * cplx(re, im);
        } else {
            const std::size_t d = dim();
            double re = 0, im = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : re, im) if (d > 4096)
#endif
            for (long long k = 0; k < static_cast<long long>(d); ++k) {
                std::size_t kk = std::size_t(k);
                double sgn = parity(mz & kk) ? -1.0 : 1.0;
                cplx v = sgn * a_[kk * d + (kk ^ mx)];
                re += v.real();
                im += v.imag();
            }
            total = yph * cplx(re, im);
        }
        if (std::abs(total.imag()) > 1e-9 * std::max(1.0, std::abs(total.real())) &&
            std::abs(total.imag()) > 1e-9)
            throw std::runtime_error("Pauli expectation has imaginary residue");
        return ps.coeff * total.real();
    }

    double expectation_raw(const PauliSum& obs) const {
        double s = 0;
        for (const auto& ps : obs) s += pauli_raw(ps);
        return s;
    }

    double expectation(const PauliSum& obs) const {
        double tr = trace().real();
        if (tr <= 0) throw std::runtime_error("expectation of zero-trace state");
        return expectation_raw(obs) / tr;
    }

    double expectation(const PauliString& ps) const { return expectation(PauliSum{ps}); }

    // tr(O rho) for a dense operator on a target subset (unnormalised).
    double op_trace(const Mat& op, const std::vector<int>& targets) const {
        QuantumState tmp = *this;
        tmp.apply_matrix_unchecked_left(op, targets);
        return tmp.trace().real();
    }

    // ---- reduced states / metrics ----

    QuantumState partial_trace(const std::vector<int>& keep) const {
        QuantumState rho = repr_ == Repr::Density ? *this : to_density();
        int m = static_cast<int>(keep.size());
        std::size_t dk = std::size_t(1) << m;
        std::size_t d = dim();
        QuantumState out = QuantumState::density(m);
        std::fill(out.a_.begin(), out.a_.end(), cplx(0));
        std::vector<int> rest;
        for (int q = 0; q < n_; ++q)
            if (std::find(keep.begin(), keep.end(), q) == keep.end()) rest.push_back(q);
        std::size_t dr = std::size_t(1) << rest.size();
        for (std::size_t r = 0; r < dk; ++r)
            for (std::size_t c = 0; c < dk; ++c) {
                std::size_t rb = 0, cb = 0;
                for (int j = 0; j < m; ++j) {
                    if ((r >> j) & 1u) rb |= std::size_t(1) << keep[j];
                    if ((c >> j) & 1u) cb |= std::size_t(1) << keep[j];
                }
                cplx acc = 0;
                for (std::size_t e = 0; e < dr; ++e) {
                    std::size_t eb = 0;
                    for (std::size_t j = 0; j < rest.size(); ++j)
                        if ((e >> j) & 1u) eb |= std::size_t(1) << rest[j];
                    acc += rho.a_[(rb | eb) * d + (cb | eb)];
                }
                out.a_[r * dk + c] = acc;
            }
        out.survival_ = out.trace().real();
        return out;
    }

    // ---- invariant checks (debug / validation mode) ----

    bool check_invariants(double tol = 1e-9) const {
        if (repr_ == Repr::Statevector) {
            double nn = 0;
            for (const cplx& v : a_) nn += std::norm(v);
            return std::abs(nn - survival_) < 1e-10 * std::max(1.0, survival_);
        }
        std::size_t d = dim();
        Mat rho = to_matrix();
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) return false;
        if (std::abs(rho.trace().real() - survival_) > 1e-10) return false;
        Eigen::SelfAdjointEigenSolver<Mat> es(rho);
        return es.eigenvalues().minCoeff() > -tol && d == d;
    }

private:
    void check_targets(const std::vector<int>& targets, Eigen::Index matdim) const {
        if ((std::ptrdiff_t(1) << targets.size()) != matdim)
            throw std::invalid_argument("operator dimension does not match target count");
        for (std::size_t i = 0; i < targets.size(); ++i) {
            if (targets[i] < 0 || targets[i] >= n_) throw std::out_of_range("target out of range");
            for (std::size_t j = i + 1; j < targets.size(); ++j)
                if (targets[i] == targets[j]) throw std::invalid_argument("duplicate target");
        }
    }

    // Apply op to ket side only (for trace computations).
    void apply_matrix_unchecked_left(const Mat& m, const std::vector<int>& targets) {
        if (repr_ == Repr::Statevector) {
            detail::apply_matrix_bits(a_, m, targets);
        } else {
            std::vector<int> rowbits(targets);
            for (int& b : rowbits) b += n_;
            detail::apply_matrix_bits(a_, m, rowbits);
        }
    }

    // Apply m ... m^dag (both sides for density, plain for statevector).
    void apply_matrix_unchecked_both(const Mat& m, const std::vector<int>& targets) {
        apply_matrix_unchecked(m, targets);
    }

    int n_ = 0;
    Repr repr_ = Repr::Statevector;
    std::vector<cplx> a_;
    double survival_ = 1.0;
};

using Projector = QuantumState::Projector;

// ---- fidelity / concurrence ----

inline double fidelity(const QuantumState& a, const QuantumState& b) {
    if (a.n_qubits() != b.n_qubits()) throw std::invalid_argument("qubit count mismatch");
    bool ap = a.repr() == Repr::Statevector, bp = b.repr() == Repr::Statevector;
    if (ap && bp) {
        Vec va = a.to_vector(), vb = b.to_vector();
        double na = va.norm(), nb = vb.norm();
        return std::norm(va.dot(vb)) / (na * na * nb * nb);
    }
    if (ap || bp) {
        const QuantumState& pure = ap ? a : b;
        const QuantumState& mixed = ap ? b : a;
        Vec v = pure.to_vector();
        v /= v.norm();
        Mat rho = mixed.to_matrix() / mixed.trace().real();
        return (v.adjoint() * rho * v)(0, 0).real();
    }
    Mat ra = a.to_matrix() / a.trace().real();
    Mat rb = b.to_matrix() / b.trace().real();
    Eigen::SelfAdjointEigenSolver<Mat> es((ra + ra.adjoint()) / 2.0);
    Mat d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    Mat sq = es.eigenvectors() * d * es.eigenvectors().adjoint();
    Mat inner = sq * rb * sq;
    Eigen::SelfAdjointEigenSolver<Mat> es2((inner + inner.adjoint()) / 2.0);
    double s = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return s * s;
}

inline double concurrence(const QuantumState& state) {
    if (state.n_qubits() != 2) throw std::invalid_argument("concurrence requires 2 qubits");
    Mat rho = state.to_matrix() / state.trace().real();
    Mat yy = kron(mat_y(), mat_y());
    Mat rt = rho * yy * rho.conjugate() * yy;
    Eigen::ComplexEigenSolver<Mat> es(rt);
    std::vector<double> lam;
    for (int i = 0; i < 4; ++i) lam.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
    std::sort(lam.begin(), lam.end(), std::greater<double>());
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

}  // namespace vqd
