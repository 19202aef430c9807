#pragma once
// Neutral-atom device: atoms at explicit 3D coordinates, Raman single-qubit
// pulses U(phi, delta, t), blockade-gated CZ(phi) and multi-qubit Z operators,
// tweezer moves (SHIFTLOC / SWAPLOC) with heat-enhanced dephasing, CPTN
// leakage on init and Rydberg gates, and classical atom-loss tracking.
//
// Times in microseconds, distances in micrometres.

#include <array>
#include <cmath>
#include <sstream>

#include "vqd/devkit.hpp"

namespace vqd {

struct AtomConfig {
    std::vector<std::array<double, 3>> positions;  // per-atom [x, y, z], um
    std::vector<int> present;                      // optional; default all present

    double blockade_radius = 3.0;  // um; a pair can interact iff dist <= 2 * r_b
    double omega = 1.0;            // rad/us Rabi frequency of the Raman drive

    double t_vac = 4e6;    // us; vacuum-limited lifetime, T1 = t_vac / N_present
    double t2 = 1.5e6;     // us
    double kappa = 1.0;    // >= 1, thermal enhancement of dephasing while moving
    double move_speed = 0.55;  // um/us
    double t_move_min = 0.0;   // floor for move durations (zero-vector moves)

    double gamma_init = 0.0;   // leakage probability during initialisation
    double eps_meas = 0.0;     // readout depolarising severity
    double p_loss_meas = 0.02; // per-readout atom loss probability
    double p_loss_move = 0.0;  // per-move atom loss probability

    double leak_alpha = 0.0;       // CZ(phi) single-excitation decay
    double leak_beta = 0.0;        // CZ(phi) double-excitation decay
    double leak_multi_alpha = 0.0; // per-participant decay of CQZ / CZQ

    double flip01 = 1e-4;  // asymmetric bit-flip pair attached to every pulse
    double flip10 = 5e-5;

    double t_init = 300.0;
    double t_read = 4000.0;
    double t_cz = 0.25;
    double t_multi = 0.5;

    uint64_t loss_seed = 1;  // per-run Bernoulli stream for loss draws

    static AtomConfig ideal(std::vector<std::array<double, 3>> pos) {
        AtomConfig c;
        c.positions = std::move(pos);
        c.t_vac = c.t2 = std::numeric_limits<double>::infinity();
        c.p_loss_meas = c.p_loss_move = 0.0;
        c.flip01 = c.flip10 = 0.0;
        return c;
    }

    // grid helper: n atoms in a row with the given pitch
    static std::vector<std::array<double, 3>> row(int n, double pitch) {
        std::vector<std::array<double, 3>> p;
        for (int i = 0; i < n; ++i) p.push_back({pitch * i, 0.0, 0.0});
        return p;
    }
};

class AtomDevice : public DeviceModel {
  public:
    explicit AtomDevice(AtomConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.positions.empty()) throw std::invalid_argument("atom device needs positions");
        if (cfg_.present.empty()) cfg_.present.assign(cfg_.positions.size(), 1);
        if (cfg_.present.size() != cfg_.positions.size())
            throw std::invalid_argument("present flags must match positions");
        if (cfg_.kappa < 1.0) throw std::invalid_argument("kappa must be >= 1");
        if (cfg_.omega <= 0.0) throw std::invalid_argument("omega must be positive");
        if (cfg_.move_speed <= 0.0) throw std::invalid_argument("move_speed must be positive");
        AtomDevice::reset_state();
    }

    std::string family() const override { return "atom"; }
    int n_qubits() const override { return static_cast<int>(cfg_.positions.size()); }
    bool parallel_allowed() const override { return true; }

    void reset_state() override {
        pos_ = cfg_.positions;
        present_.assign(cfg_.present.begin(), cfg_.present.end());
        acc_loss_.assign(pos_.size(), 0.0);
        for (size_t i = 0; i < present_.size(); ++i)
            if (!present_[i]) acc_loss_[i] = 1.0;
        loss_rng_.seed(cfg_.loss_seed);
    }

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= n_qubits()) return "qubit index out of range";
        for (size_t i = 0; i < in.qubits.size(); ++i)
            for (size_t j = i + 1; j < in.qubits.size(); ++j)
                if (in.qubits[i] == in.qubits[j]) return "duplicate atom operand";
        for (int q : in.qubits)
            if (!present_[q])
                return "atom q" + std::to_string(q) + " has been lost and rejects operations";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "INIT" || op == "READ") return need(1, 0);
        if (op == "H") return need(1, 0);
        if (op == "RX" || op == "RY") return need(1, 1);
        if (op == "U") {
            if (auto e = need(1, 3)) return e;
            if (in.params[2] < 0) return "U duration must be non-negative";
            return std::nullopt;
        }
        if (op == "CZPHI") {
            if (auto e = need(2, 1)) return e;
            return blockade(in.qubits);
        }
        if (op == "CQZ" || op == "CZQ") {
            if (in.qubits.size() < 2) return op + " needs at least two atoms";
            if (!in.params.empty()) return "parameter count mismatch for " + op;
            return blockade(in.qubits);
        }
        if (op == "SHIFTLOC") {
            if (in.qubits.empty()) return "SHIFTLOC needs at least one atom";
            if (in.params.size() != 3) return "SHIFTLOC takes a 3-vector";
            return std::nullopt;
        }
        if (op == "SWAPLOC") return need(2, 0);
        return "unknown opcode " + op;
    }

    void mutate(const Instruction& in) override {
        if (in.opcode == "SHIFTLOC") {
            for (int q : in.qubits)
                for (int k = 0; k < 3; ++k) pos_[q][k] += in.params[k];
            for (int q : in.qubits) roll_loss(q, cfg_.p_loss_move);
        } else if (in.opcode == "SWAPLOC") {
            std::swap(pos_[in.qubits[0]], pos_[in.qubits[1]]);
            for (int q : in.qubits) roll_loss(q, cfg_.p_loss_move);
        } else if (in.opcode == "READ") {
            roll_loss(in.qubits[0], cfg_.p_loss_meas);
        }
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        if (op == "INIT") return cfg_.t_init;
        if (op == "READ") return cfg_.t_read;
        if (op == "U") return in.params[2];
        if (op == "RX" || op == "RY") return std::abs(in.params[0]) / cfg_.omega;
        if (op == "H") return pi() / (std::sqrt(2.0) * cfg_.omega);
        if (op == "CZPHI") return cfg_.t_cz;
        if (op == "CQZ" || op == "CZQ") return cfg_.t_multi;
        if (op == "SHIFTLOC")
            return std::max(norm3(in.params[0], in.params[1], in.params[2]) / cfg_.move_speed,
                            cfg_.t_move_min);
        if (op == "SWAPLOC")
            return std::max(dist(in.qubits[0], in.qubits[1]) / cfg_.move_speed, cfg_.t_move_min);
        return 0;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        if (op == "INIT") {
            prog.steps.push_back(Step::reset({in.qubits[0]}, in.str()));
            if (cfg_.gamma_init > 0)
                prog.steps.push_back(Step::noise(leak_init(cfg_.gamma_init, in.qubits[0]),
                                                 in.str() + " [init leakage]"));
            return;
        }
        if (op == "READ") {
            if (cfg_.eps_meas > 0)
                prog.steps.push_back(
                    Step::noise(depol1(cfg_.eps_meas, in.qubits[0]), in.str() + " [readout]"));
            prog.steps.push_back(Step::measure_z(in.qubits[0], in.out_label, in.str()));
            return;
        }
        if (op == "U" || op == "H" || op == "RX" || op == "RY") {
            auto [phi, delta, t] = pulse_params(in);
            prog.steps.push_back(Step::unitary(raman_unitary(phi, delta, t), {in.qubits[0]},
                                               in.str()));
            emit_pulse_error(in.qubits[0], t, in.str(), prog);
            return;
        }
        if (op == "CZPHI") {
            double phi = in.params[0];
            Mat u = Mat::Identity(4, 4);
            u(1, 1) = std::exp(cplx(0, phi));
            u(2, 2) = std::exp(cplx(0, phi));
            u(3, 3) = std::exp(cplx(0, 2 * phi - pi()));
            prog.steps.push_back(Step::unitary(u, {in.qubits[0], in.qubits[1]}, in.str()));
            if (cfg_.leak_alpha > 0 || cfg_.leak_beta > 0)
                prog.steps.push_back(
                    Step::noise(leak_cz(cfg_.leak_alpha, cfg_.leak_beta, in.qubits[0], in.qubits[1]),
                                in.str() + " [rydberg leakage]"));
            return;
        }
        if (op == "CQZ" || op == "CZQ") {
            prog.steps.push_back(Step::unitary(multi_z(op, in.qubits.size()), in.qubits, in.str()));
            if (cfg_.leak_multi_alpha > 0)
                prog.steps.push_back(Step::noise(leak_multi(cfg_.leak_multi_alpha, in.qubits),
                                                 in.str() + " [rydberg leakage]"));
            return;
        }
        if (op == "SHIFTLOC" || op == "SWAPLOC") {
            double dt = duration(in);
            for (int q : in.qubits) emit_move_error(q, dt, in.str(), prog);
            return;
        }
        throw std::logic_error("decorate on unvalidated opcode " + op);
    }

    std::vector<Channel> passive(int q, double dt) const override {
        if (dt <= 0 || !present_[q]) return {};  // lost atoms receive no channels
        std::vector<Channel> out;
        double t1 = t1_now();
        if (std::isfinite(t1)) out.push_back(passive_t1_depol(dt, t1, q));
        if (std::isfinite(cfg_.t2)) out.push_back(passive_t2(dt, cfg_.t2, q));
        return out;
    }

    std::string snapshot() const override {
        std::ostringstream os;
        os << "{\"family\":\"atom\",\"blockade_radius\":" << cfg_.blockade_radius
           << ",\"atoms\":[";
        for (int q = 0; q < n_qubits(); ++q) {
            if (q) os << ",";
            os << "{\"position\":[" << pos_[q][0] << "," << pos_[q][1] << "," << pos_[q][2]
               << "],\"present\":" << (present_[q] ? "true" : "false")
               << ",\"accumulated_loss_prob\":" << acc_loss_[q] << "}";
        }
        os << "]}";
        return os.str();
    }

    // Eq.-style Raman pulse; targets[0] convention (single qubit).
    Mat raman_unitary(double phi, double delta, double t) const {
        double omr = std::sqrt(cfg_.omega * cfg_.omega + delta * delta);
        Mat u = Mat::Identity(2, 2);
        if (t == 0 || omr == 0) return u;
        double c = std::cos(omr * t / 2), s = std::sin(omr * t / 2);
        u(0, 0) = cplx(c, -delta / omr * s);
        u(0, 1) = cplx(0, -cfg_.omega / omr * s) * std::exp(cplx(0, phi));
        u(1, 0) = cplx(0, -cfg_.omega / omr * s) * std::exp(cplx(0, -phi));
        u(1, 1) = cplx(c, delta / omr * s);
        return u;
    }

    // CQZ: all controls (leading operands) at |1> apply Z to the target (last
    // operand); CZQ: control (first operand) at |1> applies Z to every target.
    // Both carry the global i of the blockade implementation.
    Mat multi_z(const std::string& op, size_t nq) const {
        size_t d = size_t(1) << nq;
        Mat u = Mat::Zero(d, d);
        for (size_t x = 0; x < d; ++x) {
            double sign = 1.0;
            if (op == "CQZ") {
                size_t controls = d / 2 - 1;  // bits 0..nq-2
                if ((x & controls) == controls && (x >> (nq - 1)) & 1) sign = -1.0;
            } else {
                if (x & 1) {  // control is operand 0 = low bit
                    int pop = 0;
                    for (size_t b = 1; b < nq; ++b) pop += (x >> b) & 1;
                    if (pop % 2) sign = -1.0;
                }
            }
            u(x, x) = cplx(0, sign);
        }
        return u;
    }

    double t1_now() const {
        int n_present = 0;
        for (char p : present_) n_present += p;
        if (n_present == 0 || !std::isfinite(cfg_.t_vac)) return cfg_.t_vac;
        return cfg_.t_vac / n_present;
    }

    const std::array<double, 3>& position(int q) const { return pos_[q]; }
    bool is_present(int q) const { return present_[q]; }
    double accumulated_loss(int q) const { return acc_loss_[q]; }
    const AtomConfig& config() const { return cfg_; }

  private:
    static double pi() { return 3.14159265358979323846; }
    static double norm3(double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); }

    double dist(int a, int b) const {
        return norm3(pos_[a][0] - pos_[b][0], pos_[a][1] - pos_[b][1], pos_[a][2] - pos_[b][2]);
    }

    // hard-edged sphere model: every participant pair within overlapping radii
    std::optional<std::string> blockade(const std::vector<int>& qs) const {
        for (size_t i = 0; i < qs.size(); ++i)
            for (size_t j = i + 1; j < qs.size(); ++j)
                if (dist(qs[i], qs[j]) > 2 * cfg_.blockade_radius + 1e-12)
                    return "blockade violation: atoms q" + std::to_string(qs[i]) + " and q" +
                           std::to_string(qs[j]) + " are further apart than 2 x blockade radius";
        return std::nullopt;
    }

    std::array<double, 3> pulse_params(const Instruction& in) const {
        if (in.opcode == "U") return {in.params[0], in.params[1], in.params[2]};
        if (in.opcode == "H") return {0.0, cfg_.omega, pi() / (std::sqrt(2.0) * cfg_.omega)};
        double th = in.params[0];
        double phi = in.opcode == "RX" ? 0.0 : -pi() / 2;
        if (th < 0) phi += pi();  // negative rotations flip the drive phase
        return {phi, 0.0, std::abs(th) / cfg_.omega};
    }

    void emit_pulse_error(int q, double t, const std::string& prov, NoisyProgram& prog) {
        double a = std::isfinite(cfg_.t2) ? 1 - std::exp(-t / (2 * cfg_.t2)) : 0.0;
        a = std::clamp(a, 0.0, 0.5);
        if (a > 0) prog.steps.push_back(Step::noise(deph1(a, q), prov + " [pulse dephasing]"));
        if (cfg_.flip01 > 0 || cfg_.flip10 > 0)
            prog.steps.push_back(
                Step::noise(asym_bitflip(cfg_.flip01, cfg_.flip10, q), prov + " [bit flip]"));
    }

    void emit_move_error(int q, double dt, const std::string& prov, NoisyProgram& prog) {
        if (dt <= 0) return;
        double t1 = t1_now();
        if (std::isfinite(t1))
            prog.steps.push_back(Step::noise(passive_t1_depol(dt, t1, q), prov + " [move T1]"));
        if (std::isfinite(cfg_.t2)) {
            double a = 0.5 * (1 - std::exp(-cfg_.kappa * dt / cfg_.t2));
            if (a > 0)
                prog.steps.push_back(
                    Step::noise(deph1(std::clamp(a, 0.0, 0.5), q), prov + " [move heating]"));
        }
    }

    void roll_loss(int q, double p) {
        if (p <= 0) return;
        acc_loss_[q] = std::min(1.0, acc_loss_[q] + p);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(loss_rng_) < p) present_[q] = 0;
    }

    AtomConfig cfg_;
    std::vector<std::array<double, 3>> pos_;
    std::vector<char> present_;
    std::vector<double> acc_loss_;
    std::mt19937_64 loss_rng_;
};

}  // namespace vqd
