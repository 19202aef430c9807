#pragma once
// Device-specification layer: circuits in native gate sets, constraint
// validation, duration-aware scheduling, and noise decoration into an
// explicit step program replayable on the density or trajectory engines.

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqd/channels.hpp"
#include "vqd/qstate.hpp"

namespace vqd {

// ---------------------------------------------------------------------------
// circuit representation

struct Instruction {
    std::string opcode;
    std::vector<int> qubits;
    std::vector<double> params;
    std::vector<std::string> labels;  // outcome labels referenced (FILTER)
    std::string out_label;            // "-> m1" binding
    std::string cond_label;           // "?m1==1:" prefix
    int cond_value = -1;
    int line = 0;

    std::string str() const {
        std::ostringstream os;
        if (!cond_label.empty()) os << "?" << cond_label << "==" << cond_value << ": ";
        os << opcode;
        for (int q : qubits) os << " q" << q;
        for (double p : params) os << " " << p;
        for (const auto& l : labels) os << " " << l;
        if (!out_label.empty()) os << " -> " << out_label;
        return os.str();
    }
};

using Circuit = std::vector<Instruction>;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Line-oriented circuit DSL:
//   OPCODE q<i> [q<j> ...] [param ...] [-> m1]
//   ?m1==1: OPCODE ...
//   FILTER m1 == m2
//   # comment
inline Circuit parse_circuit(const std::string& text) {
    Circuit out;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::istringstream ls(raw);
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);
        if (toks.empty()) continue;

        Instruction in;
        in.line = lineno;
        size_t i = 0;
        if (toks[0][0] == '?') {
            std::string c = toks[0];
            if (c.back() != ':') throw ParseError("line " + std::to_string(lineno) + ": conditional prefix must end with ':'");
            c = c.substr(1, c.size() - 2);
            auto eq = c.find("==");
            if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": conditional must use '=='");
            in.cond_label = c.substr(0, eq);
            try {
                in.cond_value = std::stoi(c.substr(eq + 2));
            } catch (...) {
                throw ParseError("line " + std::to_string(lineno) + ": bad conditional value");
            }
            i = 1;
            if (i >= toks.size()) throw ParseError("line " + std::to_string(lineno) + ": conditional with no instruction");
        }
        in.opcode = toks[i++];
        for (char& c : in.opcode) c = std::toupper(static_cast<unsigned char>(c));

        for (; i < toks.size(); ++i) {
            if (toks[i] == "->") {
                if (i + 1 >= toks.size()) throw ParseError("line " + std::to_string(lineno) + ": dangling '->'");
                in.out_label = toks[i + 1];
                if (i + 2 != toks.size()) throw ParseError("line " + std::to_string(lineno) + ": tokens after outcome label");
                break;
            }
            if (toks[i] == "==") continue;  // FILTER m1 == m2
            if (toks[i].size() > 1 && toks[i][0] == 'q' &&
                toks[i].find_first_not_of("0123456789", 1) == std::string::npos) {
                in.qubits.push_back(std::stoi(toks[i].substr(1)));
                continue;
            }
            try {
                size_t pos = 0;
                double v = std::stod(toks[i], &pos);
                if (pos == toks[i].size()) {
                    in.params.push_back(v);
                    continue;
                }
            } catch (...) {
            }
            in.labels.push_back(toks[i]);
        }
        out.push_back(std::move(in));
    }
    return out;
}

inline std::string circuit_to_text(const Circuit& c) {
    std::string s;
    for (const auto& in : c) s += in.str() + "\n";
    return s;
}

// ---------------------------------------------------------------------------
// decorated program

enum class StepKind { Unitary, Noise, Measure, Reset, Filter };

struct Step {
    StepKind kind;
    // Unitary
    Mat u;
    std::vector<int> targets;
    // Noise
    Channel chan{identity_channel({0})};
    // Measure: projector list over `targets`, outcome index recorded under `label`
    std::vector<Projector> projs;
    std::string label;
    // Filter: labels to compare for equality
    std::vector<std::string> filter_labels;
    // conditional execution
    std::string cond_label;
    int cond_value = -1;
    std::string provenance;  // originating instruction + noise tag

    static Step unitary(Mat u, std::vector<int> tg, std::string prov) {
        Step s;
        s.kind = StepKind::Unitary;
        s.u = std::move(u);
        s.targets = std::move(tg);
        s.provenance = std::move(prov);
        return s;
    }
    static Step noise(Channel c, std::string prov) {
        Step s;
        s.kind = StepKind::Noise;
        s.chan = std::move(c);
        s.provenance = std::move(prov);
        return s;
    }
    static Step measure_z(int q, std::string label, std::string prov) {
        Step s;
        s.kind = StepKind::Measure;
        s.targets = {q};
        Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
        p0(0, 0) = 1;
        p1(1, 1) = 1;
        s.projs = {{p0, "0"}, {p1, "1"}};
        s.label = std::move(label);
        s.provenance = std::move(prov);
        return s;
    }
    static Step measure_custom(std::vector<int> tg, std::vector<Projector> pr, std::string label,
                               std::string prov) {
        Step s;
        s.kind = StepKind::Measure;
        s.targets = std::move(tg);
        s.projs = std::move(pr);
        s.label = std::move(label);
        s.provenance = std::move(prov);
        return s;
    }
    static Step reset(std::vector<int> tg, std::string prov) {
        Step s;
        s.kind = StepKind::Reset;
        s.targets = std::move(tg);
        s.provenance = std::move(prov);
        return s;
    }
    static Step filter(std::vector<std::string> labels, std::string prov) {
        Step s;
        s.kind = StepKind::Filter;
        s.filter_labels = std::move(labels);
        s.provenance = std::move(prov);
        return s;
    }
};

struct NoisyProgram {
    int n_qubits = 0;
    std::vector<Step> steps;
    double total_duration = 0;
};

// ---------------------------------------------------------------------------
// device model

struct Violation {
    int index;  // instruction index in circuit
    Instruction instr;
    std::string rule;
};

enum class ScheduleMode { Serial, ParallelAuto };

struct Schedule {
    std::vector<std::vector<Instruction>> slots;
    std::vector<double> slot_durations;
    ScheduleMode mode = ScheduleMode::Serial;
};

class DeviceModel {
  public:
    virtual ~DeviceModel() = default;
    virtual std::string family() const = 0;
    virtual int n_qubits() const = 0;

    // Constraint check against the current hardware state; nullopt = ok.
    virtual std::optional<std::string> validate(const Instruction&) const = 0;
    // Apply the instruction's hardware-state mutation (positions, zones, ...).
    virtual void mutate(const Instruction&) {}
    virtual double duration(const Instruction&) const = 0;
    // Emit the ideal operation plus its active-noise channels.
    // The emitted unitaries are in the physical frame; the virtual-Z ledger
    // conjugation is applied by decorate().
    virtual void decorate_instruction(const Instruction&, NoisyProgram&) = 0;
    // Passive noise on one qubit idling for dt.
    virtual std::vector<Channel> passive(int q, double dt) const = 0;
    // Slot-wide extras (pair ZZ terms etc.); `slot` lists the active instructions.
    virtual void passive_slot(double /*dt*/, const std::vector<Instruction>& /*slot*/,
                              NoisyProgram& /*prog*/) {}
    virtual bool parallel_allowed() const { return false; }
    // Reset mutable hardware state to its configured initial value.
    virtual void reset_state() {}
    virtual std::string snapshot() const { return "{}"; }

    // --- virtual-Z phase ledger -------------------------------------------
    std::vector<double>& zledger() {
        if (static_cast<int>(zph_.size()) != n_qubits()) zph_.assign(n_qubits(), 0.0);
        return zph_;
    }
    void ledger_add(int q, double theta) { zledger()[q] += theta; }
    // Conjugate an emitted unitary on `targets` by the pending Rz phases so the
    // simulated frame stays exact with zero-cost Z rotations.
    Mat ledger_conjugate(const Mat& u, const std::vector<int>& targets) {
        auto& l = zledger();
        bool any = false;
        for (int q : targets)
            if (std::abs(l[q]) > 0) any = true;
        if (!any) return u;
        Mat d = Mat::Identity(1, 1);
        for (int q : targets) d = kron(rz(l[q]), d);  // little endian: later = higher bit
        return d.adjoint() * u * d;
    }
    Channel ledger_conjugate(const Channel& c) {
        auto& l = zledger();
        bool any = false;
        for (int q : c.targets)
            if (std::abs(l[q]) > 0) any = true;
        if (!any) return c;
        Mat d = Mat::Identity(1, 1);
        for (int q : c.targets) d = kron(rz(l[q]), d);
        Channel out = c;
        for (auto& k : out.kraus) k = d.adjoint() * k * d;
        return out;
    }
    // Emit pending phases explicitly (used before final state dumps).
    void ledger_flush(NoisyProgram& prog) {
        auto& l = zledger();
        for (int q = 0; q < n_qubits(); ++q) {
            if (std::abs(l[q]) > 1e-15) {
                prog.steps.push_back(Step::unitary(rz(l[q]), {q}, "virtual-Z flush q" + std::to_string(q)));
                l[q] = 0;
            }
        }
    }

  private:
    std::vector<double> zph_;
};

// ---------------------------------------------------------------------------
// validation / scheduling / decoration

// FILTER is a device-independent meta instruction (classical post-selection).
inline bool is_meta(const Instruction& in) { return in.opcode == "FILTER"; }

inline std::vector<Violation> validate_circuit(DeviceModel& dev, const Circuit& circ) {
    std::vector<Violation> out;
    dev.reset_state();
    for (size_t i = 0; i < circ.size(); ++i) {
        if (is_meta(circ[i])) {
            if (circ[i].labels.size() != 2)
                out.push_back({static_cast<int>(i), circ[i], "FILTER needs two outcome labels"});
            continue;
        }
        auto err = dev.validate(circ[i]);
        if (err) {
            out.push_back({static_cast<int>(i), circ[i], *err});
            continue;  // skip mutation of rejected instructions
        }
        dev.mutate(circ[i]);
    }
    dev.reset_state();
    return out;
}

inline Schedule schedule(DeviceModel& dev, const Circuit& circ, ScheduleMode mode) {
    if (mode == ScheduleMode::ParallelAuto && !dev.parallel_allowed()) mode = ScheduleMode::Serial;
    Schedule sch;
    sch.mode = mode;
    // durations may depend on hardware state (e.g. shuttle distance), so the
    // state mutations are replayed while scheduling
    dev.reset_state();
    if (mode == ScheduleMode::Serial) {
        for (const auto& in : circ) {
            sch.slots.push_back({in});
            double d = 0;
            if (!is_meta(in)) {
                d = dev.duration(in);
                dev.mutate(in);
            }
            sch.slot_durations.push_back(d);
        }
        dev.reset_state();
        return sch;
    }
    // greedy program-order packing: an instruction joins the open slot iff its
    // operand set is disjoint from every member's and it has no classical deps
    // on measurements inside the slot.
    std::vector<Instruction> open;
    std::vector<bool> used(dev.n_qubits(), false);
    std::vector<std::string> open_labels;
    double open_dur = 0;
    auto flush = [&]() {
        if (open.empty()) return;
        sch.slots.push_back(open);
        sch.slot_durations.push_back(open_dur);
        open.clear();
        open_labels.clear();
        open_dur = 0;
        std::fill(used.begin(), used.end(), false);
    };
    for (const auto& in : circ) {
        bool conflict = false;
        for (int q : in.qubits)
            if (q >= 0 && q < static_cast<int>(used.size()) && used[q]) conflict = true;
        if (!in.cond_label.empty() || in.opcode == "FILTER")
            conflict = true;  // classical barriers serialise
        for (const auto& l : open_labels)
            if (l == in.cond_label) conflict = true;
        if (conflict) flush();
        open.push_back(in);
        if (!is_meta(in)) {
            open_dur = std::max(open_dur, dev.duration(in));
            dev.mutate(in);
        }
        for (int q : in.qubits)
            if (q >= 0 && q < static_cast<int>(used.size())) used[q] = true;
        if (!in.out_label.empty()) open_labels.push_back(in.out_label);
        if (!in.cond_label.empty() || in.opcode == "FILTER") flush();
    }
    flush();
    dev.reset_state();
    return sch;
}

inline NoisyProgram decorate(DeviceModel& dev, const Schedule& sch) {
    NoisyProgram prog;
    prog.n_qubits = dev.n_qubits();
    dev.reset_state();
    dev.zledger().assign(dev.n_qubits(), 0.0);
    for (size_t s = 0; s < sch.slots.size(); ++s) {
        const auto& slot = sch.slots[s];
        double slot_dur = sch.slot_durations[s];
        std::vector<double> active(dev.n_qubits(), 0.0);
        for (const auto& in : slot) {
            if (is_meta(in)) {
                prog.steps.push_back(Step::filter(in.labels, in.str()));
                continue;
            }
            size_t first = prog.steps.size();
            dev.decorate_instruction(in, prog);
            // propagate conditional execution and fold the virtual-Z ledger
            for (size_t k = first; k < prog.steps.size(); ++k) {
                auto& st = prog.steps[k];
                if (!in.cond_label.empty() && st.cond_label.empty()) {
                    st.cond_label = in.cond_label;
                    st.cond_value = in.cond_value;
                }
                if (st.kind == StepKind::Unitary)
                    st.u = dev.ledger_conjugate(st.u, st.targets);
                else if (st.kind == StepKind::Noise)
                    st.chan = dev.ledger_conjugate(st.chan);
            }
            double d = dev.duration(in);
            dev.mutate(in);
            for (int q : in.qubits)
                if (q >= 0 && q < dev.n_qubits()) active[q] = std::max(active[q], d);
        }
        for (int q = 0; q < dev.n_qubits(); ++q) {
            double idle = slot_dur - active[q];
            if (idle <= 0) continue;
            for (auto& c : dev.passive(q, idle))
                if (!c.is_identity())
                    prog.steps.push_back(Step::noise(dev.ledger_conjugate(c),
                                                     "passive q" + std::to_string(q)));
        }
        dev.passive_slot(slot_dur, slot, prog);
        prog.total_duration += slot_dur;
    }
    dev.ledger_flush(prog);
    return prog;
}

// ---------------------------------------------------------------------------
// density-mode replay

enum class MeasureMode { Sampled, Deferred };

struct RunOptions {
    MeasureMode measure_mode = MeasureMode::Sampled;
    uint64_t seed = 0;
    int postselect_retries = 1000;  // sampled-mode FILTER retry cap
};

struct RunResult {
    QuantumState state{QuantumState::density(1, 0)};
    std::map<std::string, int> outcomes;
    std::map<std::string, double> outcome_probs;  // probability of recorded branch
    double acceptance = 1.0;                      // deferred filters: joint acceptance
    int retries = 0;
    double total_duration = 0;
};

namespace detail {

// one sampled pass; returns false if a FILTER rejects
inline bool replay_density_once(const NoisyProgram& prog, RunResult& rr, Rng& rng) {
    rr.state = QuantumState::density(prog.n_qubits, 0);
    rr.outcomes.clear();
    rr.outcome_probs.clear();
    rr.acceptance = 1.0;
    // deferred measurements awaiting a filter: label -> (qubit, projectors)
    std::map<std::string, std::pair<int, std::vector<Projector>>> pending;
    for (const auto& st : prog.steps) {
        if (!st.cond_label.empty()) {
            auto it = rr.outcomes.find(st.cond_label);
            if (it == rr.outcomes.end())
                throw std::runtime_error("conditional references unknown label " + st.cond_label);
            if (it->second != st.cond_value) continue;
        }
        switch (st.kind) {
            case StepKind::Unitary:
                rr.state.apply_unitary(st.u, st.targets);
                break;
            case StepKind::Noise:
                rr.state.apply_channel(st.chan);
                break;
            case StepKind::Reset: {
                for (int q : st.targets) {
                    Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
                    k0(0, 0) = 1;
                    k1(0, 1) = 1;
                    Channel reset({k0, k1}, {q}, ChannelTag::CPTP, "reset");
                    rr.state.apply_channel(reset);
                }
                break;
            }
            case StepKind::Measure: {
                auto [idx, p] = rr.state.measure_projective(st.projs, st.targets, rng);
                if (!st.label.empty()) {
                    rr.outcomes[st.label] = idx;
                    rr.outcome_probs[st.label] = p;
                }
                break;
            }
            case StepKind::Filter: {
                if (st.filter_labels.size() < 2)
                    throw std::runtime_error("FILTER needs two labels");
                int v0 = -1;
                bool first = true, ok = true;
                for (const auto& l : st.filter_labels) {
                    auto it = rr.outcomes.find(l);
                    if (it == rr.outcomes.end())
                        throw std::runtime_error("FILTER references unknown label " + l);
                    if (first) {
                        v0 = it->second;
                        first = false;
                    } else if (it->second != v0) {
                        ok = false;
                    }
                }
                if (!ok) return false;
                break;
            }
        }
    }
    return true;
}

// exact deferred pass: measurements dephase, filters project
inline void replay_density_deferred(const NoisyProgram& prog, RunResult& rr) {
    rr.state = QuantumState::density(prog.n_qubits, 0);
    rr.outcomes.clear();
    rr.acceptance = 1.0;
    std::map<std::string, std::pair<std::vector<int>, std::vector<Projector>>> pending;
    for (const auto& st : prog.steps) {
        if (!st.cond_label.empty())
            throw std::runtime_error("deferred mode cannot resolve feed-forward on " + st.cond_label);
        switch (st.kind) {
            case StepKind::Unitary:
                rr.state.apply_unitary(st.u, st.targets);
                break;
            case StepKind::Noise:
                rr.state.apply_channel(st.chan);
                break;
            case StepKind::Reset: {
                for (int q : st.targets) {
                    Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
                    k0(0, 0) = 1;
                    k1(0, 1) = 1;
                    rr.state.apply_channel(Channel({k0, k1}, {q}, ChannelTag::CPTP, "reset"));
                }
                break;
            }
            case StepKind::Measure:
                rr.state.defer_measure(st.projs, st.targets);
                if (!st.label.empty()) pending[st.label] = {st.targets, st.projs};
                break;
            case StepKind::Filter: {
                // accept the branches where all labelled outcomes agree
                if (st.filter_labels.size() != 2)
                    throw std::runtime_error("deferred FILTER supports exactly two labels");
                auto ita = pending.find(st.filter_labels[0]);
                auto itb = pending.find(st.filter_labels[1]);
                if (ita == pending.end() || itb == pending.end())
                    throw std::runtime_error("FILTER references unknown/consumed label");
                const auto& [ta, pa] = ita->second;
                const auto& [tb, pb] = itb->second;
                if (pa.size() != pb.size())
                    throw std::runtime_error("FILTER label outcome counts differ");
                std::vector<Mat> accepted;
                std::vector<int> tg = ta;
                tg.insert(tg.end(), tb.begin(), tb.end());
                for (size_t o = 0; o < pa.size(); ++o)
                    accepted.push_back(kron(pb[o].p, pa[o].p));  // tb bits above ta bits
                double p_acc = rr.state.filter(accepted, tg);
                rr.acceptance *= p_acc;
                pending.erase(st.filter_labels[0]);
                pending.erase(st.filter_labels[1]);
                break;
            }
        }
    }
}

}  // namespace detail

inline RunResult run_density(const NoisyProgram& prog, const RunOptions& opt = {}) {
    RunResult rr;
    rr.total_duration = prog.total_duration;
    if (opt.measure_mode == MeasureMode::Deferred) {
        detail::replay_density_deferred(prog, rr);
        return rr;
    }
    Rng rng(opt.seed);
    for (int attempt = 0; attempt < std::max(1, opt.postselect_retries); ++attempt) {
        rr.retries = attempt;
        if (detail::replay_density_once(prog, rr, rng)) return rr;
    }
    throw std::runtime_error("post-selection retry cap exhausted");
}

}  // namespace vqd
