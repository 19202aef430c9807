#pragma once
// Superconducting transmon device: thermal initialisation at the start of the
// circuit, perfect and fully parallel single-qubit pulses (RZ virtual), fixed
// cross-resonance ZX and siZZle ZZ gates along the coupling graph, and passive
// noise only: generalised amplitude damping towards the thermal state, T2
// dephasing, and residual static ZZ crosstalk with strength beta derived from
// the coupling and anharmonicity data. A siZZle slot cancels the static ZZ on
// its own pair.
//
// Times in microseconds, frequencies in MHz.

#include <cmath>
#include <limits>
#include <sstream>

#include "vqd/devkit.hpp"

namespace vqd {

struct SCQubit {
    double freq_mhz;
    double anharm_mhz = -300.0;
    double p_ground = 1.0;
};

struct SCEdge {
    int i, j;
    double j_mhz;
};

struct SCConfig {
    std::vector<SCQubit> qubits;
    std::vector<SCEdge> edges;

    double t_1q = 0.03;   // fixed pulse duration, independent of the angle
    double t_2q = 0.3;
    double t_meas = 3.0;  // roughly 100 gate durations
    double eps_meas = 0.0;
    double t1 = 100.0;
    double t2 = 80.0;

    // the six-qubit 2D layout used throughout: three vertical 4 MHz couplers
    // and four diagonal 1.5 MHz couplers
    static SCConfig grid6() {
        SCConfig c;
        for (double f : {4500, 4900, 4700, 5100, 4900, 5300})
            c.qubits.push_back({f, -300.0, 1.0});
        c.edges = {{1, 0, 4.0}, {3, 2, 4.0}, {5, 4, 4.0},
                   {2, 0, 1.5}, {4, 2, 1.5}, {5, 3, 1.5}, {3, 1, 1.5}};
        return c;
    }

    static SCConfig ideal6() {
        SCConfig c = grid6();
        c.t_1q = c.t_2q = c.t_meas = 0.0;  // zero-duration slots: no passive noise
        c.t1 = c.t2 = std::numeric_limits<double>::infinity();
        return c;
    }
};

class SCDevice : public DeviceModel {
  public:
    explicit SCDevice(SCConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.qubits.empty()) throw std::invalid_argument("transmon device needs qubits");
        for (const auto& q : cfg_.qubits) {
            if (q.p_ground < 0 || q.p_ground > 1)
                throw std::invalid_argument("ground population out of range");
            if (q.anharm_mhz >= 0)
                warnings_.push_back("anharmonicity should be negative for a transmon");
        }
        for (const auto& e : cfg_.edges) {
            if (e.i < 0 || e.i >= n_qubits() || e.j < 0 || e.j >= n_qubits() || e.i == e.j)
                throw std::invalid_argument("coupling edge endpoints invalid");
            if (e.j_mhz < 0) throw std::invalid_argument("coupling strength must be non-negative");
        }
        SCDevice::reset_state();
    }

    std::string family() const override { return "sc"; }
    int n_qubits() const override { return static_cast<int>(cfg_.qubits.size()); }
    bool parallel_allowed() const override { return true; }

    void reset_state() override { started_ = false; }
    void mutate(const Instruction&) override { started_ = true; }

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= n_qubits()) return "qubit index out of range";
        for (size_t i = 0; i < in.qubits.size(); ++i)
            for (size_t j = i + 1; j < in.qubits.size(); ++j)
                if (in.qubits[i] == in.qubits[j]) return "duplicate operand";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "INIT") {
            if (auto e = need(0, 0)) return e;
            if (started_) return "initialisation is only available at the start of the circuit";
            return std::nullopt;
        }
        if (op == "READ") return need(1, 0);
        if (op == "RX" || op == "RY" || op == "RZ") {
            if (auto e = need(1, 1)) return e;
            if (std::abs(in.params[0]) > pi + 1e-12)
                return "rotation angle outside [-pi, pi]";
            return std::nullopt;
        }
        if (op == "ZX") {
            if (auto e = need(2, 0)) return e;
            if (!edge_between(in.qubits[0], in.qubits[1]))
                return "no coupler between the operands";
            if (cfg_.qubits[in.qubits[0]].freq_mhz <= cfg_.qubits[in.qubits[1]].freq_mhz)
                return "cross-resonance control must be the higher-frequency qubit";
            return std::nullopt;
        }
        if (op == "ZZ") {
            if (auto e = need(2, 0)) return e;
            if (!edge_between(in.qubits[0], in.qubits[1]))
                return "no coupler between the operands";
            return std::nullopt;
        }
        return "unknown opcode " + op;
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        if (op == "RX" || op == "RY") return cfg_.t_1q;
        if (op == "RZ" || op == "INIT") return 0;
        if (op == "ZX" || op == "ZZ") return cfg_.t_2q;
        if (op == "READ") return cfg_.t_meas;
        return 0;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        if (op == "INIT") {
            std::vector<int> all(n_qubits());
            for (int q = 0; q < n_qubits(); ++q) all[q] = q;
            prog.steps.push_back(Step::reset(all, in.str()));
            for (int q = 0; q < n_qubits(); ++q)
                if (cfg_.qubits[q].p_ground < 1.0)
                    prog.steps.push_back(Step::noise(
                        bitflip1(1.0 - cfg_.qubits[q].p_ground, q), in.str() + " [thermal]"));
            return;
        }
        if (op == "READ") {
            int q = in.qubits[0];
            if (std::isfinite(cfg_.t1) && cfg_.t_meas > 0)
                prog.steps.push_back(
                    Step::noise(gamp(cfg_.t_meas, cfg_.t1, cfg_.qubits[q].p_ground, q),
                                in.str() + " [T1 during readout]"));
            if (cfg_.eps_meas > 0)
                prog.steps.push_back(
                    Step::noise(depol1(cfg_.eps_meas, q), in.str() + " [classification]"));
            prog.steps.push_back(Step::measure_z(q, in.out_label, in.str()));
            if (cfg_.eps_meas > 0)
                prog.steps.push_back(
                    Step::noise(depol1(cfg_.eps_meas, q), in.str() + " [classification]"));
            return;
        }
        if (op == "RZ") {
            ledger_add(in.qubits[0], in.params[0]);
            return;
        }
        if (op == "RX" || op == "RY") {
            prog.steps.push_back(Step::unitary(op == "RX" ? rx(in.params[0]) : ry(in.params[0]),
                                               {in.qubits[0]}, in.str()));
            return;
        }
        if (op == "ZX" || op == "ZZ") {
            prog.steps.push_back(
                Step::unitary(op == "ZX" ? zx_gate() : zz_gate(),
                              {in.qubits[0], in.qubits[1]}, in.str()));
            return;
        }
        throw std::logic_error("decorate on unvalidated opcode " + op);
    }

    std::vector<Channel> passive(int q, double dt) const override {
        if (dt <= 0) return {};
        std::vector<Channel> out;
        if (std::isfinite(cfg_.t1))
            out.push_back(gamp(dt, cfg_.t1, cfg_.qubits[q].p_ground, q));
        if (std::isfinite(cfg_.t2)) out.push_back(passive_t2(dt, cfg_.t2, q));
        return out;
    }

    // static ZZ drift on every coupled pair; a siZZle slot tunes the coupling
    // of its own pair to cancel the residual term
    void passive_slot(double dt, const std::vector<Instruction>& slot,
                      NoisyProgram& prog) override {
        if (dt <= 0) return;
        for (const auto& e : cfg_.edges) {
            bool suppressed = false;
            for (const auto& in : slot)
                if (in.opcode == "ZZ" &&
                    ((in.qubits[0] == e.i && in.qubits[1] == e.j) ||
                     (in.qubits[0] == e.j && in.qubits[1] == e.i)))
                    suppressed = true;
            if (suppressed || e.j_mhz == 0) continue;
            double angle = 2 * pi * beta_mhz(e) * dt;
            prog.steps.push_back(Step::unitary(zz_coupling(angle), {e.i, e.j},
                                               "static ZZ q" + std::to_string(e.i) + " q" +
                                                   std::to_string(e.j)));
        }
    }

    // residual coupling strength in MHz; control = higher-frequency endpoint
    double beta_mhz(const SCEdge& e) const {
        int c = e.i, t = e.j;
        if (cfg_.qubits[c].freq_mhz < cfg_.qubits[t].freq_mhz) std::swap(c, t);
        double delta = cfg_.qubits[c].freq_mhz - cfg_.qubits[t].freq_mhz;
        double at = cfg_.qubits[t].anharm_mhz, ac = cfg_.qubits[c].anharm_mhz;
        return e.j_mhz * e.j_mhz * (1.0 / (delta - at) - 1.0 / (delta + ac));
    }

    // cross resonance: exp(-i pi/4 Z_c x X_t), control = operand 0 = low bit
    static Mat zx_gate() {
        Mat g = kron(mat_x(), mat_z());  // high bit = target
        double s = std::sqrt(0.5);
        return s * Mat::Identity(4, 4) - cplx(0, s) * g;
    }
    // siZZle: exp(-i pi/4 Z x Z)
    static Mat zz_gate() { return zz_coupling(pi / 4); }

    std::string snapshot() const override {
        std::ostringstream os;
        os << "{\"family\":\"sc\",\"qubits\":[";
        for (int q = 0; q < n_qubits(); ++q) {
            if (q) os << ",";
            os << "{\"freq_mhz\":" << cfg_.qubits[q].freq_mhz
               << ",\"anharm_mhz\":" << cfg_.qubits[q].anharm_mhz
               << ",\"p_ground\":" << cfg_.qubits[q].p_ground << "}";
        }
        os << "],\"edges\":[";
        for (size_t k = 0; k < cfg_.edges.size(); ++k) {
            if (k) os << ",";
            os << "[" << cfg_.edges[k].i << "," << cfg_.edges[k].j << ","
               << cfg_.edges[k].j_mhz << "]";
        }
        os << "]}";
        return os.str();
    }

    const std::vector<std::string>& warnings() const { return warnings_; }
    const SCConfig& config() const { return cfg_; }

  private:
    bool edge_between(int a, int b) const {
        for (const auto& e : cfg_.edges)
            if ((e.i == a && e.j == b) || (e.i == b && e.j == a)) return true;
        return false;
    }

    SCConfig cfg_;
    std::vector<std::string> warnings_;
    bool started_ = false;
};

namespace sc {

// CNOT from the fixed cross-resonance gate:
//   CNOT = e^{i pi/4} Rx_t(pi/2) Rz_c(pi/2) (I x Z) ZX (I x Z)
// with the Z conjugation flipping the generator sign (virtual RZ(pi))
inline std::string cnot_circuit(int c, int t) {
    std::ostringstream os;
    os << "RZ q" << t << " 3.141592653589793\n";
    os << "ZX q" << c << " q" << t << "\n";
    os << "RZ q" << t << " 3.141592653589793\n";
    os << "RZ q" << c << " 1.5707963267948966\n";
    os << "RX q" << t << " 1.5707963267948966\n";
    return os.str();
}

}  // namespace sc

}  // namespace vqd
