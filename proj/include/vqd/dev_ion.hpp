#pragma once
// Multi-node trapped-ion device: linear traps with four zones each, shuttling
// and split/combine moves, remote entanglement between traps, and the ion
// noise assignments. Also ships the entanglement-distillation fixture.
//
// Zone roles (1-based): init/readout/physical swap in zones 1-3, gates in
// zones 2-3, remote entanglement only in zone 4, split/combine never in 4.
// Ions in a trap sit on a single rail; lane order is preserved by shuttles
// (an ion can only leave its zone from the rail end facing the destination).

#include "vqd/calibrate.hpp"
#include "vqd/devkit.hpp"

namespace vqd {

struct IonDurations {
    double init = 20.0;          // us
    double read = 150.0;
    double rx_per_pi = 10.0;     // Rx/Ry duration for a pi rotation
    double cz = 120.0;
    double swap = 30.0;          // SWAPLOC
    double shuttle_base = 10.0;  // one-zone shuttle; d zones cost base*sqrt(d)
    double split = 40.0;
    double comb = 40.0;
    double ent = 50.0;
};

struct IonFidelities {
    double init = 0.999;
    double read = 0.999;
    double rx = 0.99999;
    double ry = 0.99999;
    double cz = 0.999;
    double ent = 0.95;  // Bell-state fidelity of the raw remote pair
};

struct IonXFractions {
    double cz = 0.1;   // depolarising fraction of the CZ error
    double ent = 0.1;  // depolarising fraction of the raw-pair error
};

struct IonConfig {
    std::vector<std::string> nodes = {"alice", "bob"};
    int ions_per_node = 4;
    IonDurations durations;
    IonFidelities fidelities;
    IonXFractions x_fractions;
    double t1 = 1e7;      // us
    double t2star = 1e6;  // us
};

class IonDevice : public DeviceModel {
  public:
    static constexpr int n_zones = 4;

    explicit IonDevice(IonConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.nodes.size() < 1) throw std::invalid_argument("ion device needs >= 1 node");
        if (cfg_.ions_per_node < 1) throw std::invalid_argument("ions_per_node must be >= 1");
        // calibrate severities once
        eps_rx_ = invert({cfg_.fidelities.rx, 1.0, 1}).second;
        eps_ry_ = invert({cfg_.fidelities.ry, 1.0, 1}).second;
        pq_cz_ = invert({cfg_.fidelities.cz, cfg_.x_fractions.cz, 2});
        pq_ent_ = invert_bell_fidelity(cfg_.fidelities.ent, cfg_.x_fractions.ent);
        reset_state();
    }

    std::string family() const override { return "ion"; }
    int n_qubits() const override {
        return static_cast<int>(cfg_.nodes.size()) * cfg_.ions_per_node;
    }
    bool parallel_allowed() const override { return false; }

    int node_of(int q) const { return q / cfg_.ions_per_node; }
    int zone_of(int q) const { return zone_[q]; }
    int lane_of(int q) const {
        const auto& row = lane_row(q);
        return static_cast<int>(std::find(row.begin(), row.end(), q) - row.begin());
    }
    bool combined(int a, int b) const { return group_[a] >= 0 && group_[a] == group_[b]; }

    void reset_state() override {
        int n = n_qubits();
        zone_.assign(n, 1);
        group_.assign(n, -1);
        next_group_ = 0;
        lanes_.assign(cfg_.nodes.size(), {});
        for (auto& node : lanes_) node.assign(n_zones, {});
        for (int q = 0; q < n; ++q) lanes_[node_of(q)][0].push_back(q);
    }

    std::optional<std::string> validate(const Instruction& in) const override {
        for (int q : in.qubits)
            if (q < 0 || q >= n_qubits()) return "ion index out of range";
        const std::string& op = in.opcode;
        auto need = [&](size_t nq, size_t np) -> std::optional<std::string> {
            if (in.qubits.size() != nq) return "operand count mismatch for " + op;
            if (in.params.size() != np) return "parameter count mismatch for " + op;
            return std::nullopt;
        };
        if (op == "INIT") {
            if (auto e = need(1, 0)) return e;
            if (zone_[in.qubits[0]] == 4) return "INIT not allowed in zone 4";
            return std::nullopt;
        }
        if (op == "READ") {
            if (auto e = need(1, 0)) return e;
            int q = in.qubits[0];
            if (zone_[q] == 4) return "READ not allowed in zone 4";
            if (lane_row(q).size() != 1) return "READ requires the ion to be alone in its zone";
            return std::nullopt;
        }
        if (op == "ENT") {
            if (auto e = need(2, 0)) return e;
            int a = in.qubits[0], b = in.qubits[1];
            if (node_of(a) == node_of(b)) return "ENT requires ions in different nodes";
            if (zone_[a] != 4 || zone_[b] != 4) return "ENT only allowed in zone 4";
            return std::nullopt;
        }
        if (op == "RX" || op == "RY") {
            if (auto e = need(1, 1)) return e;
            int z = zone_[in.qubits[0]];
            if (z != 2 && z != 3) return op + " only allowed in zones 2-3";
            return std::nullopt;
        }
        if (op == "RZ") return need(1, 1);
        if (op == "CZ") {
            if (auto e = need(2, 0)) return e;
            int a = in.qubits[0], b = in.qubits[1];
            if (a == b) return "CZ needs distinct operands";
            if (node_of(a) != node_of(b)) return "CZ operands must share a node";
            int z = zone_[a];
            if (z != zone_[b]) return "CZ operands must share a zone";
            if (z != 2 && z != 3) return "CZ only allowed in zones 2-3";
            if (!combined(a, b)) return "CZ requires combined ions";
            return std::nullopt;
        }
        if (op == "SWAPLOC" || op == "COMB") {
            if (auto e = need(2, 0)) return e;
            int a = in.qubits[0], b = in.qubits[1];
            if (a == b) return op + " needs distinct operands";
            if (node_of(a) != node_of(b)) return op + " operands must share a node";
            if (zone_[a] != zone_[b]) return op + " operands must share a zone";
            if (zone_[a] == 4) return op + " not allowed in zone 4";
            if (group_[a] >= 0 || group_[b] >= 0) return op + " requires separated ions";
            if (std::abs(lane_of(a) - lane_of(b)) != 1) return op + " requires adjacent lanes";
            return std::nullopt;
        }
        if (op == "SPLZ") {
            if (auto e = need(2, 0)) return e;
            int a = in.qubits[0], b = in.qubits[1];
            if (!combined(a, b)) return "SPLZ requires a combined pair";
            if (zone_[a] == 4) return "SPLZ not allowed in zone 4";
            return std::nullopt;
        }
        if (op == "SHUTL") {
            if (auto e = need(1, 1)) return e;
            int q = in.qubits[0];
            int dst = static_cast<int>(in.params[0]);
            if (dst < 1 || dst > n_zones || in.params[0] != dst) return "SHUTL destination must be a zone 1-4";
            int src = zone_[q];
            if (dst == src) return "SHUTL destination equals current zone";
            if (group_[q] >= 0) return "SHUTL requires a separated ion";
            const auto& row = lane_row(q);
            if (dst > src && row.back() != q)
                return "SHUTL blocked: ion not at the rail end facing the destination";
            if (dst < src && row.front() != q)
                return "SHUTL blocked: ion not at the rail end facing the destination";
            int lo = std::min(src, dst), hi = std::max(src, dst);
            for (int z = lo + 1; z < hi; ++z)
                if (!lanes_[node_of(q)][z - 1].empty())
                    return "SHUTL blocked: occupied zone in the path";
            return std::nullopt;
        }
        return "unknown opcode " + op;
    }

    void mutate(const Instruction& in) override {
        const std::string& op = in.opcode;
        if (op == "SHUTL") {
            int q = in.qubits[0];
            int dst = static_cast<int>(in.params[0]);
            auto& src_row = lane_row(q);
            src_row.erase(std::find(src_row.begin(), src_row.end(), q));
            auto& dst_row = lanes_[node_of(q)][dst - 1];
            if (dst > zone_[q])
                dst_row.insert(dst_row.begin(), q);  // arriving from below: near end
            else
                dst_row.push_back(q);  // arriving from above
            zone_[q] = dst;
        } else if (op == "SWAPLOC") {
            auto& row = lane_row(in.qubits[0]);
            std::iter_swap(std::find(row.begin(), row.end(), in.qubits[0]),
                           std::find(row.begin(), row.end(), in.qubits[1]));
        } else if (op == "COMB") {
            group_[in.qubits[0]] = group_[in.qubits[1]] = next_group_++;
        } else if (op == "SPLZ") {
            group_[in.qubits[0]] = group_[in.qubits[1]] = -1;
        }
    }

    double duration(const Instruction& in) const override {
        const std::string& op = in.opcode;
        const auto& d = cfg_.durations;
        if (op == "INIT") return d.init;
        if (op == "READ") return d.read;
        if (op == "ENT") return d.ent;
        if (op == "RX" || op == "RY") return d.rx_per_pi * std::abs(in.params[0]) / pi;
        if (op == "RZ") return 0.0;
        if (op == "CZ") return d.cz;
        if (op == "SWAPLOC") return d.swap;
        if (op == "SPLZ") return d.split;
        if (op == "COMB") return d.comb;
        if (op == "SHUTL") {
            int dist = std::abs(static_cast<int>(in.params[0]) - zone_[in.qubits[0]]);
            return d.shuttle_base * std::sqrt(static_cast<double>(dist));
        }
        return 0.0;
    }

    void decorate_instruction(const Instruction& in, NoisyProgram& prog) override {
        const std::string& op = in.opcode;
        const auto& f = cfg_.fidelities;
        if (op == "INIT") {
            prog.steps.push_back(Step::reset(in.qubits, in.str()));
            if (f.init < 1.0)
                prog.steps.push_back(Step::noise(inverted_amp(1.0 - f.init, in.qubits[0]),
                                                 in.str() + " [init infidelity]"));
            return;
        }
        if (op == "READ") {
            int q = in.qubits[0];
            if (f.read < 1.0)
                prog.steps.push_back(Step::noise(bitflip1(1.0 - f.read, q),
                                                 in.str() + " [readout flip]"));
            prog.steps.push_back(Step::measure_z(q, in.out_label, in.str()));
            return;
        }
        if (op == "ENT") {
            int a = in.qubits[0], b = in.qubits[1];
            prog.steps.push_back(Step::reset({a, b}, in.str() + " [pair reset]"));
            prog.steps.push_back(Step::unitary(bell_psi_plus_unitary(), {a, b}, in.str()));
            auto [p, q] = pq_ent_;
            if (q > 0) prog.steps.push_back(Step::noise(depol2(q, a, b), in.str() + " [depol]"));
            if (p > 0) prog.steps.push_back(Step::noise(deph2(p, a, b), in.str() + " [deph]"));
            return;
        }
        if (op == "RX" || op == "RY") {
            int q = in.qubits[0];
            double th = in.params[0];
            prog.steps.push_back(Step::unitary(op == "RX" ? rx(th) : ry(th), {q}, in.str()));
            double eps = (op == "RX" ? eps_rx_ : eps_ry_) * std::abs(th) / pi;
            eps = std::min(eps, 0.75);
            if (eps > 0) prog.steps.push_back(Step::noise(depol1(eps, q), in.str() + " [depol]"));
            return;
        }
        if (op == "RZ") {
            ledger_add(in.qubits[0], in.params[0]);
            return;
        }
        if (op == "CZ") {
            int a = in.qubits[0], b = in.qubits[1];
            prog.steps.push_back(Step::unitary(mat_cz(), {a, b}, in.str()));
            auto [p, q] = pq_cz_;
            if (q > 0) prog.steps.push_back(Step::noise(depol2(q, a, b), in.str() + " [depol]"));
            if (p > 0) prog.steps.push_back(Step::noise(deph2(p, a, b), in.str() + " [deph]"));
            return;
        }
        // moves: SHUTL, SWAPLOC, SPLZ, COMB carry no intrinsic noise
    }

    std::vector<Channel> passive(int q, double dt) const override {
        std::vector<Channel> out;
        if (dt <= 0) return out;
        if (cfg_.t1 > 0 && std::isfinite(cfg_.t1)) out.push_back(passive_t1_depol(dt, cfg_.t1, q));
        if (cfg_.t2star > 0 && std::isfinite(cfg_.t2star))
            out.push_back(passive_t2star(dt, cfg_.t2star, q));
        return out;
    }

    std::string snapshot() const override {
        std::ostringstream os;
        os << "{\"family\":\"ion\",\"nodes\":[";
        for (size_t nd = 0; nd < lanes_.size(); ++nd) {
            os << (nd ? "," : "") << "{\"name\":\"" << cfg_.nodes[nd] << "\",\"zones\":[";
            for (int z = 0; z < n_zones; ++z) {
                os << (z ? "," : "") << "[";
                for (size_t l = 0; l < lanes_[nd][z].size(); ++l)
                    os << (l ? "," : "") << lanes_[nd][z][l];
                os << "]";
            }
            os << "]}";
        }
        os << "]}";
        return os.str();
    }

    const IonConfig& config() const { return cfg_; }
    std::pair<double, double> ent_severities() const { return pq_ent_; }

    // |00> -> |Psi+>; completed with the remaining Bell states as columns
    static Mat bell_psi_plus_unitary() {
        double s = 1.0 / std::sqrt(2.0);
        Mat u = Mat::Zero(4, 4);
        u(1, 0) = s; u(2, 0) = s;    // Psi+
        u(0, 1) = s; u(3, 1) = s;    // Phi+
        u(1, 2) = s; u(2, 2) = -s;   // Psi-
        u(0, 3) = s; u(3, 3) = -s;   // Phi-
        return u;
    }

  private:
    std::vector<int>& lane_row(int q) { return lanes_[node_of(q)][zone_[q] - 1]; }
    const std::vector<int>& lane_row(int q) const { return lanes_[node_of(q)][zone_[q] - 1]; }

    IonConfig cfg_;
    double eps_rx_ = 0, eps_ry_ = 0;
    std::pair<double, double> pq_cz_{0, 0}, pq_ent_{0, 0};
    std::vector<int> zone_;
    std::vector<int> group_;
    int next_group_ = 0;
    std::vector<std::vector<std::vector<int>>> lanes_;  // [node][zone-1] -> lane order
};

// ---------------------------------------------------------------------------
// Entanglement-distillation fixture: nested (recurrence) distillation over up
// to 8 raw pairs on a 2 x 4-ion device. Per round the keep/sacrifice CNOT is
// compiled to native Ry/CZ; a "ph" round adds the Rx(+-pi/2) basis change
// (+ on the first node, - on the second), a "bf" round omits it. Keep on
// matching readouts. The node-local sequence for ph,ph,ph is 112 operations.

namespace detail {

struct DistillBuilder {
    Circuit c;
    int off;      // second-node qubit offset
    int meas = 0; // measurement label counter
    bool ph = true;

    Instruction ins(std::string op, std::vector<int> qs, std::vector<double> ps = {}) {
        Instruction in;
        in.opcode = std::move(op);
        in.qubits = std::move(qs);
        in.params = std::move(ps);
        return in;
    }
    // emit the same op on both nodes, Alice first
    void both(const std::string& op, std::vector<int> qs, std::vector<double> ps = {}) {
        c.push_back(ins(op, qs, ps));
        for (int& q : qs) q += off;
        c.push_back(ins(op, qs, ps));
    }
    void basis_rx(int q) {  // +pi/2 on node A, -pi/2 on node B
        c.push_back(ins("RX", {q}, {pi / 2}));
        c.push_back(ins("RX", {q + off}, {-pi / 2}));
    }
    void ent(int q) { c.push_back(ins("ENT", {q, q + off})); }
    void acquire(int q) {
        both("INIT", {q});
        both("SHUTL", {q}, {4.0});
        ent(q);
    }
    // gate core of one distill step; keep/sac share a zone and are adjacent
    void gate_core(int keep, int sac) {
        if (ph) {
            basis_rx(keep);
            basis_rx(sac);
        }
        both("COMB", {sac, keep});
        both("RY", {sac}, {-pi / 2});
        both("CZ", {keep, sac});
        both("RY", {sac}, {pi / 2});
        both("SPLZ", {sac, keep});
    }
    void read_filter(int sac) {
        std::string ma = "m" + std::to_string(meas) + "a";
        std::string mb = "m" + std::to_string(meas) + "b";
        ++meas;
        Instruction ra = ins("READ", {sac});
        ra.out_label = ma;
        c.push_back(ra);
        Instruction rb = ins("READ", {sac + off});
        rb.out_label = mb;
        c.push_back(rb);
        Instruction flt;
        flt.opcode = "FILTER";
        flt.labels = {ma, mb};
        c.push_back(flt);
    }
};

}  // namespace detail

// rounds: 0..3 entries from {"ph", "bf"}; rounds[0] is applied to the raw
// pairs, the last entry to the final merge. Returns the full two-node circuit.
inline Circuit build_distillation(const std::vector<std::string>& rounds, int offset = 4) {
    if (rounds.size() > 3) throw std::invalid_argument("at most 3 distillation rounds");
    for (const auto& r : rounds)
        if (r != "ph" && r != "bf") throw std::invalid_argument("round must be ph or bf");
    detail::DistillBuilder b;
    b.off = offset;
    auto set_round = [&](size_t level) { b.ph = rounds[level] == "ph"; };

    // raw pair on ion 3 only
    if (rounds.empty()) {
        b.both("INIT", {3});
        b.both("SHUTL", {3}, {4.0});
        b.ent(3);
        b.both("SHUTL", {3}, {3.0});
        return b.c;
    }

    // B1: pairs on ions 3 and 2, keep 3 (K1) parked in zone 1
    set_round(0);
    b.acquire(3);
    b.acquire(2);
    b.both("SHUTL", {2}, {3.0});
    b.both("SHUTL", {3}, {3.0});
    b.gate_core(3, 2);
    b.both("SWAPLOC", {2, 3});
    b.both("SHUTL", {3}, {1.0});
    b.read_filter(2);
    b.both("SHUTL", {2}, {1.0});
    if (rounds.size() == 1) return b.c;

    // B2: pairs on ions 2 and 1, keep 2 (K2) parked in zone 2
    b.acquire(2);
    b.both("SWAPLOC", {1, 3});
    b.acquire(1);
    b.both("SHUTL", {1}, {3.0});
    b.both("SHUTL", {2}, {3.0});
    b.gate_core(2, 1);
    b.both("SWAPLOC", {1, 2});
    b.both("SHUTL", {2}, {2.0});
    b.read_filter(1);

    // B3: K1 + K2 -> L1 on ion 2, parked in zone 1; sacrifice 3 returns
    set_round(1);
    b.both("SHUTL", {3}, {2.0});
    b.gate_core(2, 3);
    b.both("SWAPLOC", {3, 2});
    b.both("SHUTL", {2}, {1.0});
    b.read_filter(3);
    b.both("SHUTL", {3}, {1.0});
    if (rounds.size() == 2) return b.c;

    // B4: pairs on ions 1 and 3, keep 1 (K3) parked in zone 1; 3 returns
    set_round(0);
    b.acquire(1);
    b.acquire(3);
    b.both("SHUTL", {3}, {3.0});
    b.both("SHUTL", {1}, {3.0});
    b.gate_core(1, 3);
    b.both("SWAPLOC", {3, 1});
    b.both("SHUTL", {1}, {1.0});
    b.read_filter(3);
    b.both("SHUTL", {3}, {1.0});

    // B5: pairs on ions 3 and 0, keep 3 (K4) parked in zone 2
    b.acquire(3);
    b.both("SWAPLOC", {0, 2});
    b.both("SWAPLOC", {0, 1});
    b.acquire(0);
    b.both("SHUTL", {0}, {3.0});
    b.both("SHUTL", {3}, {3.0});
    b.gate_core(3, 0);
    b.both("SWAPLOC", {0, 3});
    b.both("SHUTL", {3}, {2.0});
    b.read_filter(0);

    // B6: K3 + K4 -> L2 on ion 1, parked in zone 1
    set_round(1);
    b.both("SHUTL", {1}, {2.0});
    b.gate_core(1, 3);
    b.both("SHUTL", {1}, {1.0});
    b.read_filter(3);

    // B7: L1 + L2 -> final pair on ion 2, parked in zone 1
    set_round(2);
    b.both("SHUTL", {1}, {2.0});
    b.both("SHUTL", {2}, {2.0});
    b.gate_core(2, 1);
    b.both("SHUTL", {2}, {1.0});
    b.both("SHUTL", {3}, {3.0});
    b.read_filter(1);
    b.both("SHUTL", {1}, {1.0});
    return b.c;
}

// qubit pair holding the distilled state (first node, second node)
inline std::pair<int, int> distill_output_pair(size_t rounds, int offset = 4) {
    int q = rounds >= 2 ? 2 : 3;
    return {q, q + offset};
}

// number of device operations touching one node (ENT counts once per node;
// FILTER is classical and excluded)
inline int node_op_count(const Circuit& c, int node_lo, int node_hi) {
    int n = 0;
    for (const auto& in : c) {
        if (is_meta(in)) continue;
        for (int q : in.qubits)
            if (q >= node_lo && q < node_hi) {
                ++n;
                break;
            }
    }
    return n;
}

// wall-clock profile of one node's operations under serial per-node execution
inline double node_duration(IonDevice& dev, const Circuit& c, int node_lo, int node_hi) {
    dev.reset_state();
    double t = 0;
    for (const auto& in : c) {
        if (is_meta(in)) continue;
        bool mine = false;
        for (int q : in.qubits)
            if (q >= node_lo && q < node_hi) mine = true;
        if (mine) t += dev.duration(in);
        dev.mutate(in);
    }
    dev.reset_state();
    return t;
}

inline std::map<std::string, int> node_op_histogram(const Circuit& c, int node_lo, int node_hi) {
    std::map<std::string, int> h;
    for (const auto& in : c) {
        if (is_meta(in)) continue;
        for (int q : in.qubits)
            if (q >= node_lo && q < node_hi) {
                ++h[in.opcode];
                break;
            }
    }
    return h;
}

}  // namespace vqd
