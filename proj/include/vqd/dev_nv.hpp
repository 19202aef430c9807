#pragma once
// NV-centre device: star topology with the electron spin at q0, conditional
// +-rotations as the only two-qubit primitive, electron-mediated init and
// readout (nuclear init/measure are composite routines over the native set),
// forced-serial execution, and always-on nuclear-pair ZZ crosstalk.

#include "vqd/calibrate.hpp"
#include "vqd/devkit.hpp"

namespace vqd {

// Times in seconds (the NV parameter set is quoted in s / Hz, unlike the
// microsecond-based devices).
struct NVDurations {
    double init = 2e-6;
    double meas = 4e-6;
    double rot_e = 1e-6;   // microwave electron rotation
    double rot_n = 1e-3;   // RF nuclear rotation
    double cond = 1.2e-3;  // conditional +-rotation
};

struct NVConfig {
    int n_qubits = 5;  // q0 electron, q1.. nuclear satellites (q1 may be 14N)
    double f_init_e = 0.997;  // electron init fidelity
    double p_meas = 0.012;    // net P("1" | true |0>) readout bias
    double f_1q_e = 0.9995;
    double f_1q_n = 0.999;
    double f_2q = 0.99;
    double x_1q = 0.5;  // depolarising fraction inside the composed error
    double x_2q = 0.5;
    double t1_e = 3600.0, t2_e = 1.0;
    double t1_n = 36000.0, t2_n = 10.0;
    double zz_rate = 5.0;  // Hz, uniform nuclear-pair dipolar coupling
    // optional per-pair override, full n x n symmetric matrix in Hz
    std::vector<std::vector<double>> zz_rates;
    NVDurations durations;

    static NVConfig ideal(int n) {
        NVConfig c;
        c.n_qubits = n;
        c.f_init_e = 1.0;
        c.p_meas = 0.0;
        c.f_1q_e = c.f_1q_n = c.f_2q = 1.0;
        c.t1_e = c.t2_e = c.t1_n = c.t2_n = std::numeric_limits<double>::infinity();
        c.zz_rate = 0.0;
        return c;
    }
};

class NVDevice : public DeviceModel {
  public:
    explicit NVDevice(NVConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.n_qubits < 2) throw std::invalid_argument("NV device needs q0 plus a satellite");
        if (!cfg_.zz_rates.empty()) {
            if (static_cast<int>(cfg_.zz_rates.size()) != cfg_.n_qubits)
                throw std::invalid_argument("zz_rates must be n x n");
            for (const auto& row : cfg_.zz_rates)
                if (static_cast<int>(row.size()) != cfg_.n_qubits)
                    throw std::invalid_argument("zz_rates must be n x n");
        }
        pq_1q_e_ = invert({cfg_.f_1q_e, cfg_.x_1q, 1});
        pq_1q_n_ = invert({cfg_.f_1q_n, cfg_.x_1q, 1});
        pq_2q_ = invert({cfg_.f_2q, cfg_.x_2q, 2});
    }

    std::string family() const override { return "nv"; }
    int n_qubits() const override { return cfg_.n_qubits; }
    bool parallel_allowed() const override { return false; }  // serial, DD in background

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= cfg_.n_qubits) return "qubit index out of range";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "INITE" || op == "ME") {
            if (auto e = need(1, 0)) return e;
            if (in.qubits[0] != 0) return op + " is restricted to the electron q0";
            return std::nullopt;
        }
        if (op == "RX" || op == "RY" || op == "RZ") return need(1, 1);
        if (op == "CRX" || op == "CRY") {
            if (auto e = need(2, 1)) return e;
            if (in.qubits[0] == in.qubits[1]) return "conditional rotation needs distinct operands";
            if (in.qubits[0] != 0)
                return "conditional rotations are controlled by the electron q0 (star topology)";
            if (in.qubits[1] == 0) return "conditional rotation target must be a nuclear spin";
            return std::nullopt;
        }
        if (op == "INITN" || op == "MN") {
            if (auto e = need(1, 0)) return e;
            if (in.qubits[0] == 0) return op + " targets a nuclear spin, not the electron";
            return std::nullopt;
        }
        return "unknown opcode " + op;
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        const auto& d = cfg_.durations;
        if (op == "INITE") return d.init;
        if (op == "ME") return d.meas;
        if (op == "RZ") return 0;  // virtual
        if (op == "RX" || op == "RY") return in.qubits[0] == 0 ? d.rot_e : d.rot_n;
        if (op == "CRX" || op == "CRY") return d.cond;
        if (op == "INITN") return 2 * d.rot_e + 2 * d.cond + d.meas;
        if (op == "MN") return 2 * d.rot_e + d.rot_n + d.cond + d.meas;
        return 0;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        if (op == "INITE") {
            prog.steps.push_back(Step::reset({0}, in.str()));
            if (cfg_.f_init_e < 1.0)
                prog.steps.push_back(Step::noise(inverted_amp(1.0 - cfg_.f_init_e, 0),
                                                 in.str() + " [init infidelity]"));
            return;
        }
        if (op == "ME") {
            // X damp(p) X, meter, damp(1): asymmetric photon-loss bias then a
            // full reset representing the repeated-readout drive to |0>
            if (cfg_.p_meas > 0)
                prog.steps.push_back(Step::noise(inverted_amp(cfg_.p_meas, 0),
                                                 in.str() + " [readout bias]"));
            prog.steps.push_back(Step::measure_z(0, in.out_label, in.str()));
            prog.steps.push_back(Step::reset({0}, in.str() + " [post-readout reset]"));
            return;
        }
        if (op == "RZ") {
            ledger_add(in.qubits[0], in.params[0]);
            return;
        }
        if (op == "RX" || op == "RY") {
            int q = in.qubits[0];
            double th = in.params[0];
            prog.steps.push_back(Step::unitary(op == "RX" ? rx(th) : ry(th), {q}, in.str()));
            emit_1q_error(q, th, in.str(), prog);
            return;
        }
        if (op == "CRX" || op == "CRY") {
            int qn = in.qubits[1];
            double th = in.params[0];
            prog.steps.push_back(Step::unitary(conditional_rot(op == "CRX", th), {0, qn}, in.str()));
            double s = std::abs(th) / pi();
            auto [p, q] = pq_2q_;
            if (scaled(p, s) > 0 || scaled(q, s) > 0)
                prog.steps.push_back(Step::noise(
                    standard_error(scaled(p, s), scaled(q, s), 2, {0, qn}), in.str() + " [2q error]"));
            return;
        }
        if (op == "INITN") {
            for (auto& sub : initn_sequence(in.qubits[0], in.out_label)) decorate_instruction(sub, prog);
            return;
        }
        if (op == "MN") {
            for (auto& sub : mn_sequence(in.qubits[0], in.out_label)) decorate_instruction(sub, prog);
            return;
        }
        throw std::logic_error("decorate on unvalidated opcode " + op);
    }

    std::vector<Channel> passive(int q, double dt) const override {
        if (dt <= 0) return {};
        double t1 = q == 0 ? cfg_.t1_e : cfg_.t1_n;
        double t2 = q == 0 ? cfg_.t2_e : cfg_.t2_n;
        std::vector<Channel> out;
        if (std::isfinite(t1)) out.push_back(passive_t1_depol(dt, t1, q));
        if (std::isfinite(t2)) out.push_back(passive_t2(dt, t2, q));
        return out;
    }

    // Always-on nuclear-pair ZZ: exp(-i pi f dt Z x Z) per slot for every
    // nuclear pair (the electron is excluded). Commutes with the virtual-Z
    // ledger, so the raw unitary is exact.
    void passive_slot(double dt, const std::vector<Instruction>&, NoisyProgram& prog) override {
        if (dt <= 0) return;
        for (int i = 1; i < cfg_.n_qubits; ++i)
            for (int j = i + 1; j < cfg_.n_qubits; ++j) {
                double f = pair_rate(i, j);
                if (f == 0) continue;
                prog.steps.push_back(Step::unitary(zz_coupling(pi() * f * dt), {i, j},
                                                   "passive ZZ q" + std::to_string(i) + " q" +
                                                       std::to_string(j)));
            }
    }

    // |0><0|_e (x) R(theta) + |1><1|_e (x) R(-theta); electron = targets[0] = low bit
    static Mat conditional_rot(bool x_axis, double th) {
        Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
        p0(0, 0) = 1;
        p1(1, 1) = 1;
        Mat rp = x_axis ? rx(th) : ry(th);
        Mat rm = x_axis ? rx(-th) : ry(-th);
        return kron(rp, p0) + kron(rm, p1);
    }

    // Fig.-style nuclear init via swap: transfers the nuclear state onto the
    // electron (nuclear lands exactly in |0>), then reads the electron out.
    std::vector<Instruction> initn_sequence(int q, const std::string& out) const {
        return {ins("RY", {0}, {pi() / 2}),       ins("CRY", {0, q}, {pi() / 2}),
                ins("RX", {0}, {pi() / 2}),       ins("CRX", {0, q}, {pi() / 2}),
                ins("ME", {0}, {}, out)};
    }

    // Nuclear Z-basis readout mapped onto the electron; the surfaced electron
    // bit reproduces the nuclear Z statistics directly.
    std::vector<Instruction> mn_sequence(int q, const std::string& out) const {
        return {ins("RY", {0}, {pi() / 2}),       ins("RX", {q}, {pi() / 2}),
                ins("CRY", {0, q}, {pi() / 2}),   ins("RX", {0}, {-pi() / 2}),
                ins("ME", {0}, {}, out)};
    }

    std::pair<double, double> severities_1q(bool electron) const {
        return electron ? pq_1q_e_ : pq_1q_n_;
    }
    std::pair<double, double> severities_2q() const { return pq_2q_; }
    const NVConfig& config() const { return cfg_; }

  private:
    static double pi() { return 3.14159265358979323846; }
    static double scaled(double v, double s) { return std::min(1.0, v * s); }

    static Instruction ins(const std::string& op, std::vector<int> qs, std::vector<double> ps,
                           std::string out = "") {
        Instruction in;
        in.opcode = op;
        in.qubits = std::move(qs);
        in.params = std::move(ps);
        in.out_label = std::move(out);
        return in;
    }

    void emit_1q_error(int q, double th, const std::string& prov, NoisyProgram& prog) {
        double s = std::abs(th) / pi();
        auto [p, qq] = q == 0 ? pq_1q_e_ : pq_1q_n_;
        if (scaled(p, s) > 0 || scaled(qq, s) > 0)
            prog.steps.push_back(
                Step::noise(standard_error(scaled(p, s), scaled(qq, s), 1, {q}), prov + " [1q error]"));
    }

    double pair_rate(int i, int j) const {
        if (!cfg_.zz_rates.empty()) return cfg_.zz_rates[i][j];
        return cfg_.zz_rate;
    }

    NVConfig cfg_;
    std::pair<double, double> pq_1q_e_, pq_1q_n_, pq_2q_;
};

}  // namespace vqd
