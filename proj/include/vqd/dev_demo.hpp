#pragma once
// Small hand-written DeviceModel: the three-qubit pedagogical device (noise
// profile: damping on the bottom qubit, depolarising on the middle and bottom,
// a coherent Y-rotation error on the top, dephasing while idle), generalised
// to n qubits with per-qubit severities so tests can randomise it.

#include "vqd/devkit.hpp"

namespace vqd {

struct DemoConfig {
    int n = 3;
    // per-qubit active noise after any gate touching the qubit
    std::vector<double> amp_gamma;     // amplitude damping
    std::vector<double> depol_p;       // depolarising
    std::vector<double> coherent_ry;   // unitary Ry(eps) over-rotation
    // passive dephasing while idle: deph(0.5(1-exp(-dt/t2)))
    double t2 = 0;                     // <=0 disables
    // readout bit flip
    double b_read = 0;
    double t_1q = 1, t_2q = 2, t_read = 5, t_init = 2;
    bool parallel = true;

    static DemoConfig ideal(int n) {
        DemoConfig c;
        c.n = n;
        c.amp_gamma.assign(n, 0.0);
        c.depol_p.assign(n, 0.0);
        c.coherent_ry.assign(n, 0.0);
        return c;
    }
    // the three-qubit example device: q0 top, q2 bottom
    static DemoConfig pedagogical() {
        DemoConfig c = ideal(3);
        c.coherent_ry[0] = 0.02;  // top: slight Y-rotation error
        c.depol_p[1] = 0.004;     // middle and bottom: depolarising
        c.depol_p[2] = 0.004;
        c.amp_gamma[2] = 0.01;    // bottom: damping
        c.t2 = 200.0;             // idle dephasing
        c.b_read = 0.01;
        return c;
    }
};

class DemoDevice : public DeviceModel {
  public:
    explicit DemoDevice(DemoConfig cfg) : cfg_(std::move(cfg)) {
        if (static_cast<int>(cfg_.amp_gamma.size()) != cfg_.n ||
            static_cast<int>(cfg_.depol_p.size()) != cfg_.n ||
            static_cast<int>(cfg_.coherent_ry.size()) != cfg_.n)
            throw std::invalid_argument("demo config vectors must have length n");
    }

    std::string family() const override { return "demo"; }
    int n_qubits() const override { return cfg_.n; }
    bool parallel_allowed() const override { return cfg_.parallel; }

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= cfg_.n) return "qubit index out of range";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "H" || op == "X" || op == "Y" || op == "Z") return need(1, 0);
        if (op == "RX" || op == "RY" || op == "RZ") return need(1, 1);
        if (op == "CNOT" || op == "CZ") {
            if (auto e = need(2, 0)) return e;
            if (in.qubits[0] == in.qubits[1]) return "two-qubit gate needs distinct operands";
            return std::nullopt;
        }
        if (op == "INIT") return need(1, 0);
        if (op == "READ") return need(1, 0);
        return "unknown opcode " + op;
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        if (op == "RZ") return 0;
        if (op == "CNOT" || op == "CZ") return cfg_.t_2q;
        if (op == "READ") return cfg_.t_read;
        if (op == "INIT") return cfg_.t_init;
        return cfg_.t_1q;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        if (op == "RZ") {
            ledger_add(in.qubits[0], in.params[0]);
            return;
        }
        if (op == "INIT") {
            prog.steps.push_back(Step::reset(in.qubits, in.str()));
            return;
        }
        if (op == "READ") {
            int q = in.qubits[0];
            if (cfg_.b_read > 0)
                prog.steps.push_back(Step::noise(bitflip1(cfg_.b_read, q), in.str() + " [readout flip]"));
            prog.steps.push_back(Step::measure_z(q, in.out_label, in.str()));
            return;
        }
        Mat u;
        if (op == "H") u = mat_h();
        else if (op == "X") u = mat_x();
        else if (op == "Y") u = mat_y();
        else if (op == "Z") u = mat_z();
        else if (op == "RX") u = rx(in.params[0]);
        else if (op == "RY") u = ry(in.params[0]);
        else if (op == "CNOT") u = mat_cnot();
        else if (op == "CZ") u = mat_cz();
        else throw std::logic_error("decorate on unvalidated opcode " + op);
        // convention: first operand is the control (mat_cnot low bit)
        prog.steps.push_back(Step::unitary(u, in.qubits, in.str()));
        for (int q : in.qubits) {
            if (cfg_.coherent_ry[q] > 0)
                prog.steps.push_back(Step::unitary(ry(cfg_.coherent_ry[q]), {q},
                                                   in.str() + " [coherent Ry error]"));
            if (cfg_.depol_p[q] > 0)
                prog.steps.push_back(Step::noise(depol1(cfg_.depol_p[q], q),
                                                 in.str() + " [depol]"));
            if (cfg_.amp_gamma[q] > 0)
                prog.steps.push_back(Step::noise(amp(cfg_.amp_gamma[q], q),
                                                 in.str() + " [damping]"));
        }
    }

    std::vector<Channel> passive(int q, double dt) const override {
        if (cfg_.t2 <= 0 || dt <= 0) return {};
        return {passive_t2(dt, cfg_.t2, q)};
    }

    const DemoConfig& config() const { return cfg_; }

  private:
    DemoConfig cfg_;
};

}  // namespace vqd
