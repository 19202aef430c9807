#pragma once
// Silicon spin-qubit device: 1D chain of single-electron quantum dots with
// nearest-neighbour exchange. Native set: RX / RY pulses (RZ virtual),
// CPHASE on adjacent dots, directed CROT, and a two-qubit parity readout
// restricted to the outermost dot pairs. The parity readout projects onto
// the odd / even subspaces and then decays |01> -> |10| in operand order,
// which enables deterministic QND initialisation by classical feedback.
//
// Times in microseconds, frequencies in MHz.

#include <cmath>
#include <sstream>

#include "vqd/calibrate.hpp"
#include "vqd/devkit.hpp"

namespace vqd {

struct SiliconConfig {
    int n = 6;  // even chain length

    std::vector<double> freq_mhz;  // per-dot ESR frequency offsets
    double rabi_mhz = 2.0;         // shared ESR Rabi frequency
    bool spectators = true;        // off-resonant drive of bystander spins

    std::vector<double> f_1q;   // per-qubit average fidelity, dephasing dominant
    std::vector<double> f_cz;   // per-edge (k, k+1) CPHASE average fidelity
    double f_crot = 0.995;      // CROT average fidelity, depolarising

    // (control, target) pairs allowed for CROT; empty = chain default where
    // the left half points outward to lower indices and the right half to
    // higher indices, leaving the middle edge without a CROT.
    std::vector<std::pair<int, int>> crot_edges;

    double b_parity = 0.0;  // symmetric bit-flip severity around parity readout

    double t1 = 1e9;
    double t2 = 1e5;

    // conditional-Z crosstalk, [control][target]:
    //  - xtalk_cz: radians per radian of an active CPHASE angle
    //  - xtalk_idle: radians per microsecond while no gate couples the pair
    std::vector<std::vector<double>> xtalk_cz;
    std::vector<std::vector<double>> xtalk_idle;

    double t_cz = 0.2;
    double t_crot = 0.6;
    double t_read = 1000.0;

    static SiliconConfig ideal(int n = 6) {
        SiliconConfig c;
        c.n = n;
        c.freq_mhz.assign(n, 0.0);
        c.spectators = false;
        c.f_1q.assign(n, 1.0);
        c.f_cz.assign(n - 1, 1.0);
        c.f_crot = 1.0;
        c.t1 = c.t2 = std::numeric_limits<double>::infinity();
        return c;
    }

    std::vector<std::pair<int, int>> default_crot_edges() const {
        std::vector<std::pair<int, int>> e;
        for (int i = 1; i < n / 2; ++i) e.push_back({i, i - 1});
        for (int i = n / 2; i < n - 1; ++i) e.push_back({i, i + 1});
        return e;
    }
};

class SiliconDevice : public DeviceModel {
  public:
    explicit SiliconDevice(SiliconConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.n < 4 || cfg_.n % 2) throw std::invalid_argument("chain length must be even, >= 4");
        if (cfg_.freq_mhz.empty()) cfg_.freq_mhz.assign(cfg_.n, 0.0);
        if (static_cast<int>(cfg_.freq_mhz.size()) != cfg_.n)
            throw std::invalid_argument("freq_mhz must list every dot");
        if (cfg_.rabi_mhz <= 0) throw std::invalid_argument("rabi_mhz must be positive");
        if (cfg_.f_1q.empty()) cfg_.f_1q.assign(cfg_.n, 1.0);
        if (cfg_.f_cz.empty()) cfg_.f_cz.assign(cfg_.n - 1, 1.0);
        if (static_cast<int>(cfg_.f_1q.size()) != cfg_.n ||
            static_cast<int>(cfg_.f_cz.size()) != cfg_.n - 1)
            throw std::invalid_argument("fidelity lists must match the chain");
        if (cfg_.crot_edges.empty()) cfg_.crot_edges = cfg_.default_crot_edges();
        check_matrix(cfg_.xtalk_cz, "xtalk_cz");
        check_matrix(cfg_.xtalk_idle, "xtalk_idle");

        for (int q = 0; q < cfg_.n; ++q)
            p_1q_.push_back(cfg_.f_1q[q] < 1.0 ? invert({cfg_.f_1q[q], 0.0, 1}).first : 0.0);
        for (int k = 0; k + 1 < cfg_.n; ++k)
            p_cz_.push_back(cfg_.f_cz[k] < 1.0 ? invert({cfg_.f_cz[k], 0.0, 2}).first : 0.0);
        q_crot_ = cfg_.f_crot < 1.0 ? invert({cfg_.f_crot, 1.0, 2}).second : 0.0;
    }

    std::string family() const override { return "silicon"; }
    int n_qubits() const override { return cfg_.n; }
    bool parallel_allowed() const override { return false; }  // serial operation

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= cfg_.n) return "qubit index out of range";
        for (size_t i = 0; i < in.qubits.size(); ++i)
            for (size_t j = i + 1; j < in.qubits.size(); ++j)
                if (in.qubits[i] == in.qubits[j]) return "duplicate operand";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "RX" || op == "RY" || op == "RZ") return need(1, 1);
        if (op == "CPHASE" || op == "CZ") {
            if (auto e = need(2, op == "CPHASE" ? 1 : 0)) return e;
            if (std::abs(in.qubits[0] - in.qubits[1]) != 1)
                return "controlled-phase gates require nearest neighbours";
            return std::nullopt;
        }
        if (op == "CROT") {
            if (auto e = need(2, 0)) return e;
            for (const auto& [c, t] : cfg_.crot_edges)
                if (c == in.qubits[0] && t == in.qubits[1]) return std::nullopt;
            return "CROT direction q" + std::to_string(in.qubits[0]) + " -> q" +
                   std::to_string(in.qubits[1]) + " is not wired";
        }
        if (op == "MPAR") {
            if (auto e = need(2, 0)) return e;
            bool left = in.qubits[0] == 0 && in.qubits[1] == 1;
            bool right = in.qubits[0] == cfg_.n - 1 && in.qubits[1] == cfg_.n - 2;
            if (!left && !right)
                return "parity readout exists only on the outer dot pairs, outer dot first";
            return std::nullopt;
        }
        return "unknown opcode " + op;
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        if (op == "RX" || op == "RY") return std::abs(in.params[0]) / omega_rad();
        if (op == "RZ") return 0;  // virtual
        if (op == "CPHASE" || op == "CZ") return cfg_.t_cz;
        if (op == "CROT") return cfg_.t_crot;
        if (op == "MPAR") return cfg_.t_read;
        return 0;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        if (op == "RZ") {
            ledger_add(in.qubits[0], in.params[0]);
            return;
        }
        if (op == "RX" || op == "RY") {
            int q = in.qubits[0];
            double th = in.params[0];
            prog.steps.push_back(Step::unitary(op == "RX" ? rx(th) : ry(th), {q}, in.str()));
            if (p_1q_[q] > 0)
                prog.steps.push_back(Step::noise(deph1(p_1q_[q], q), in.str() + " [dephasing]"));
            emit_spectators(q, duration(in), in.str(), prog);
            return;
        }
        if (op == "CPHASE" || op == "CZ") {
            double th = op == "CZ" ? pi() : in.params[0];
            int lo = std::min(in.qubits[0], in.qubits[1]);
            Mat u = Mat::Identity(4, 4);
            u(3, 3) = std::exp(cplx(0, th));
            prog.steps.push_back(Step::unitary(u, {in.qubits[0], in.qubits[1]}, in.str()));
            if (p_cz_[lo] > 0)
                prog.steps.push_back(
                    Step::noise(deph2(p_cz_[lo], in.qubits[0], in.qubits[1]),
                                in.str() + " [dephasing]"));
            emit_cond_z(cfg_.xtalk_cz, th, {in.qubits[0], in.qubits[1]},
                        in.str() + " [exchange crosstalk]", prog);
            return;
        }
        if (op == "CROT") {
            Mat u = Mat::Zero(4, 4);  // controlled-X, control = operand 0 = low bit
            u(0, 0) = u(2, 2) = 1;
            u(1, 3) = u(3, 1) = 1;
            prog.steps.push_back(Step::unitary(u, {in.qubits[0], in.qubits[1]}, in.str()));
            if (q_crot_ > 0)
                prog.steps.push_back(Step::noise(depol2(q_crot_, in.qubits[0], in.qubits[1]),
                                                 in.str() + " [depolarising]"));
            return;
        }
        if (op == "MPAR") {
            std::vector<int> tg = {in.qubits[0], in.qubits[1]};
            if (cfg_.b_parity > 0)
                prog.steps.push_back(
                    Step::noise(bitflip2(cfg_.b_parity, tg[0], tg[1]), in.str() + " [bit flip]"));
            prog.steps.push_back(
                Step::measure_custom(tg, parity_projectors(), in.out_label, in.str()));
            prog.steps.push_back(Step::noise(parity_decay(tg), in.str() + " [01 decay]"));
            if (cfg_.b_parity > 0)
                prog.steps.push_back(
                    Step::noise(bitflip2(cfg_.b_parity, tg[0], tg[1]), in.str() + " [bit flip]"));
            return;
        }
        throw std::logic_error("decorate on unvalidated opcode " + op);
    }

    std::vector<Channel> passive(int q, double dt) const override {
        if (dt <= 0) return {};
        std::vector<Channel> out;
        if (std::isfinite(cfg_.t1)) out.push_back(passive_t1_depol(dt, cfg_.t1, q));
        if (std::isfinite(cfg_.t2)) out.push_back(passive_t2(dt, cfg_.t2, q));
        return out;
    }

    // residual off-state exchange: weak conditional-Z at the configured idle
    // rates, suppressed on a pair while that pair runs its own phase gate
    void passive_slot(double dt, const std::vector<Instruction>& slot,
                      NoisyProgram& prog) override {
        if (dt <= 0 || cfg_.xtalk_idle.empty()) return;
        std::vector<int> skip;
        for (const auto& in : slot)
            if (in.opcode == "CPHASE" || in.opcode == "CZ") skip = in.qubits;
        emit_cond_z(cfg_.xtalk_idle, dt, skip, "idle crosstalk", prog);
    }

    std::string snapshot() const override {
        std::ostringstream os;
        os << "{\"family\":\"silicon\",\"n\":" << cfg_.n << ",\"freq_mhz\":[";
        for (int q = 0; q < cfg_.n; ++q) os << (q ? "," : "") << cfg_.freq_mhz[q];
        os << "],\"crot_edges\":[";
        for (size_t k = 0; k < cfg_.crot_edges.size(); ++k)
            os << (k ? "," : "") << "[" << cfg_.crot_edges[k].first << ","
               << cfg_.crot_edges[k].second << "]";
        os << "],\"parity_pairs\":[[0,1],[" << cfg_.n - 1 << "," << cfg_.n - 2 << "]]}";
        return os.str();
    }

    // parity projector pair over {outer, inner}: "0" = odd (tunnelling seen),
    // "1" = even; subspace index = inner << 1 | outer
    static std::vector<Projector> parity_projectors() {
        Mat odd = Mat::Zero(4, 4), even = Mat::Zero(4, 4);
        odd(1, 1) = odd(2, 2) = 1;
        even(0, 0) = even(3, 3) = 1;
        return {{odd, "0"}, {even, "1"}};
    }

    // decay |01> -> |10> in operand order (outer gains the excitation)
    Channel parity_decay(std::vector<int> tg) const {
        Channel c;
        c.targets = std::move(tg);
        Mat k0 = Mat::Zero(4, 4), k1 = Mat::Zero(4, 4), k2 = Mat::Zero(4, 4), k3 = Mat::Zero(4, 4);
        k0(0, 0) = 1;
        k1(3, 3) = 1;
        k2(1, 1) = 1;
        k3(1, 2) = 1;  // |10><01| with outer = low bit
        c.kraus = {k0, k1, k2, k3};
        c.label = "parity decay";
        return c;
    }

    double deph_1q(int q) const { return p_1q_[q]; }
    double deph_cz(int edge) const { return p_cz_[edge]; }
    double depol_crot() const { return q_crot_; }
    double omega_rad() const { return 2 * pi() * cfg_.rabi_mhz; }
    const SiliconConfig& config() const { return cfg_; }

  private:
    static double pi() { return 3.14159265358979323846; }

    void check_matrix(const std::vector<std::vector<double>>& m, const char* name) const {
        if (m.empty()) return;
        if (static_cast<int>(m.size()) != cfg_.n)
            throw std::invalid_argument(std::string(name) + " must be n x n");
        for (const auto& row : m)
            if (static_cast<int>(row.size()) != cfg_.n)
                throw std::invalid_argument(std::string(name) + " must be n x n");
    }

    // off-resonant Rabi rotation of every bystander spin during an ESR pulse
    void emit_spectators(int q, double t, const std::string& prov, NoisyProgram& prog) {
        if (!cfg_.spectators || t <= 0) return;
        for (int s = 0; s < cfg_.n; ++s) {
            if (s == q) continue;
            double delta = 2 * pi() * (cfg_.freq_mhz[s] - cfg_.freq_mhz[q]);
            prog.steps.push_back(Step::unitary(off_resonant(omega_rad(), delta, t), {s},
                                               prov + " [off-resonant q" + std::to_string(s) + "]"));
        }
    }

    // conditional-Z rotations on every configured (control, target) entry,
    // scaled by `scale`; the pair in `skip` is exempt
    void emit_cond_z(const std::vector<std::vector<double>>& m, double scale,
                     const std::vector<int>& skip, const std::string& prov, NoisyProgram& prog) {
        if (m.empty() || scale == 0) return;
        for (int c = 0; c < cfg_.n; ++c)
            for (int t = 0; t < cfg_.n; ++t) {
                if (c == t || m[c][t] == 0) continue;
                if (skip.size() == 2 && ((skip[0] == c && skip[1] == t) ||
                                         (skip[0] == t && skip[1] == c)))
                    continue;
                prog.steps.push_back(Step::unitary(cond_phase(m[c][t] * scale), {c, t}, prov));
            }
    }

    SiliconConfig cfg_;
    std::vector<double> p_1q_, p_cz_;
    double q_crot_ = 0.0;
};

// ---------------------------------------------------------------------------
// composite routines (classical-feedback QND initialisation and readout)

namespace silicon {

// one QND round on the given end of the chain: pin the outer pair to |10>
// (operand order), probe the adjacent dot through a CROT, and flip it down
inline std::string qnd_round(int outer, int inner, int probe, const std::string& tag) {
    std::ostringstream os;
    os << "MPAR q" << outer << " q" << inner << " -> " << tag << "1\n";
    os << "?" << tag << "1==1: RX q" << outer << " 3.141592653589793\n";
    os << "MPAR q" << outer << " q" << inner << " -> " << tag << "2\n";
    os << "CROT q" << probe << " q" << inner << "\n";
    os << "MPAR q" << outer << " q" << inner << " -> " << tag << "3\n";
    os << "?" << tag << "3==1: RX q" << probe << " 3.141592653589793\n";
    return os.str();
}

// deterministic initialisation of one end block (outer, inner, probe) via two
// QND rounds; the end block converges to outer = 1, inner = 0, probe = 0
inline std::string qnd_init_block(int outer, int inner, int probe, const std::string& tag) {
    return qnd_round(outer, inner, probe, tag + "a") + qnd_round(outer, inner, probe, tag + "b");
}

// full-device initialisation: both end blocks; for n = 6 the result is the
// state with the two outer spins up and the rest down
inline std::string init_circuit(int n) {
    return qnd_init_block(0, 1, 2, "L") + qnd_init_block(n - 1, n - 2, n - 3, "R");
}

// QND measurement of a probe dot through an end block; records the outcome
// under `label` ("1" = spin up) without demolishing the probe state
inline std::string qnd_measure(int outer, int inner, int probe, const std::string& label) {
    std::ostringstream os;
    os << "MPAR q" << outer << " q" << inner << " -> " << label << "_pin1\n";
    os << "?" << label << "_pin1==1: RX q" << outer << " 3.141592653589793\n";
    os << "MPAR q" << outer << " q" << inner << " -> " << label << "_pin2\n";
    os << "CROT q" << probe << " q" << inner << "\n";
    os << "MPAR q" << outer << " q" << inner << " -> " << label << "\n";
    return os.str();
}

// native Bell-pair preparation on adjacent dots (i, j): bring both to the
// equator, entangle with CZ, close with the inverse rotation on j
inline std::string bell_circuit(int i, int j) {
    std::ostringstream os;
    os << "RY q" << i << " 1.5707963267948966\n";
    os << "RY q" << j << " 1.5707963267948966\n";
    os << "CZ q" << i << " q" << j << "\n";
    os << "RY q" << j << " -1.5707963267948966\n";
    return os.str();
}

}  // namespace silicon

}  // namespace vqd
