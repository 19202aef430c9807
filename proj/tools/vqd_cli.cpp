// vqd: command-line surface over the emulator library.
//
//   vqd run <device.json> <circuit> [--repr density|traj] [--obs NAME=PAULI]...
//   vqd decorate <device.json> <circuit> [--out FILE]
//   vqd calibrate --fbar F --x X --arity N
//   vqd repro <distill|cluster12|steane7|bell-si> | --list
//
// Exit codes: 0 ok, 2 parse error, 3 constraint violation, 4 numeric failure.
// Seed resolution: --seed flag, else VQD_SEED env var, else 0.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "vqd/config_io.hpp"
#include "vqd/sampler.hpp"

using nlohmann::json;
using namespace vqd;

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumeric = 4;

#ifndef VQD_DEFAULT_FIXTURE_DIR
#define VQD_DEFAULT_FIXTURE_DIR "configs"
#endif

uint64_t resolve_seed(const CLI::Option* opt, uint64_t flag_value) {
    if (opt->count()) return flag_value;
    if (const char* env = std::getenv("VQD_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out_path);
    if (!f.good()) throw std::runtime_error("cannot write " + out_path);
    f << j.dump(2) << "\n";
}

json mat_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

json channel_json(const Channel& ch) {
    json j;
    j["label"] = ch.label;
    j["targets"] = ch.targets;
    j["tag"] = ch.tag == ChannelTag::CPTP ? "CPTP" : "CPTN";
    json kraus = json::array();
    for (const Mat& k : ch.kraus) kraus.push_back(mat_json(k));
    j["kraus"] = kraus;
    return j;
}

json step_json(const Step& st) {
    json j;
    switch (st.kind) {
        case StepKind::Unitary:
            j["kind"] = "unitary";
            j["targets"] = st.targets;
            j["matrix"] = mat_json(st.u);
            break;
        case StepKind::Noise:
            j["kind"] = "noise";
            j["channel"] = channel_json(st.chan);
            break;
        case StepKind::Measure: {
            j["kind"] = "measure";
            j["targets"] = st.targets;
            j["label"] = st.label;
            json pr = json::array();
            for (const auto& p : st.projs) pr.push_back(p.label);
            j["outcomes"] = pr;
            break;
        }
        case StepKind::Reset:
            j["kind"] = "reset";
            j["targets"] = st.targets;
            break;
        case StepKind::Filter:
            j["kind"] = "filter";
            j["labels"] = st.filter_labels;
            break;
    }
    if (!st.cond_label.empty()) {
        j["cond_label"] = st.cond_label;
        j["cond_value"] = st.cond_value;
    }
    j["provenance"] = st.provenance;
    return j;
}

json program_json(const NoisyProgram& prog) {
    json j;
    j["n_qubits"] = prog.n_qubits;
    j["total_duration"] = prog.total_duration;
    json steps = json::array();
    for (const auto& st : prog.steps) steps.push_back(step_json(st));
    j["steps"] = steps;
    return j;
}

struct Prepared {
    json doc;
    std::unique_ptr<DeviceModel> dev;
    Circuit circuit;
};

// parse stage (exit 2 on failure) then validation stage (exit 3)
Prepared prepare(const std::string& config_path, const std::string& circuit_path,
                 bool check = true) {
    Prepared p;
    try {
        p.doc = load_json(config_path);
        p.dev = make_device(p.doc);
        p.circuit = parse_circuit(slurp_file(circuit_path));
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        std::exit(kExitParse);
    }
    if (check) {
        auto viol = validate_circuit(*p.dev, p.circuit);
        if (!viol.empty()) {
            for (const auto& v : viol)
                std::cerr << "violation at instruction " << v.index << " (" << v.instr.str()
                          << "): " << v.rule << "\n";
            std::exit(kExitValidation);
        }
    }
    return p;
}

std::vector<Observable> parse_observables(const std::vector<std::string>& specs) {
    std::vector<Observable> out;
    for (const auto& s : specs) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--obs expects NAME=PAULI, got " + s);
        out.push_back({s.substr(0, eq), PauliString::parse(s.substr(eq + 1))});
    }
    return out;
}

uint64_t config_hash(const json& doc) { return std::hash<std::string>{}(doc.dump()); }

QuantumState bell_psi_plus() {
    double s = 1.0 / std::sqrt(2.0);
    std::vector<cplx> a(4, 0.0);
    a[1] = s;
    a[2] = s;
    return QuantumState::from_amplitudes(2, a);
}

// --------------------------------------------------------------------------
// subcommand bodies

int cmd_run(const std::string& config_path, const std::string& circuit_path,
            const std::string& repr, const std::vector<std::string>& obs_specs, long shots,
            double tol, uint64_t seed, bool parallel, const std::string& out_path,
            const std::string& state_path) {
    auto p = prepare(config_path, circuit_path);
    std::vector<Observable> obs;
    try {
        obs = parse_observables(obs_specs);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    }

    auto t0 = std::chrono::steady_clock::now();
    json report;
    try {
        auto mode = parallel ? ScheduleMode::ParallelAuto : ScheduleMode::Serial;
        auto prog = decorate(*p.dev, schedule(*p.dev, p.circuit, mode));
        report["device"] = {{"family", p.dev->family()},
                            {"n_qubits", p.dev->n_qubits()},
                            {"config_hash", config_hash(p.doc)}};
        report["seed"] = seed;
        report["repr"] = repr;
        report["n_steps"] = prog.steps.size();
        report["total_duration"] = prog.total_duration;

        json expectations = json::array();
        if (repr == "density") {
            RunOptions opt;
            opt.seed = seed;
            auto rr = run_density(prog, opt);
            report["outcomes"] = rr.outcomes;
            report["outcome_probs"] = rr.outcome_probs;
            report["acceptance"] = rr.acceptance;
            report["retries"] = rr.retries;
            for (const auto& ob : obs)
                expectations.push_back({{"name", ob.name},
                                        {"pauli", ob.pauli.str()},
                                        {"mean", rr.state.expectation(ob.pauli)},
                                        {"stderr", 0.0}});
            if (!state_path.empty()) {
                emit(mat_json(rr.state.to_matrix()), state_path);
                report["state_dump"] = state_path;
            }
        } else {
            SamplerOptions sopt;
            sopt.shots = shots;
            sopt.tol = tol;
            sopt.seed = seed;
            for (const auto& ob : obs) {
                auto est = sample_expec_pauli_sum(prog, {ob.pauli}, sopt);
                expectations.push_back({{"name", ob.name},
                                        {"pauli", ob.pauli.str()},
                                        {"mean", est.mean},
                                        {"stderr", est.stderr_},
                                        {"shots", est.n_samples},
                                        {"rejected", est.rejected}});
            }
        }
        report["expectations"] = expectations;
        report["snapshot"] = json::parse(p.dev->snapshot());
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    report["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(report, out_path);
    return 0;
}

int cmd_decorate(const std::string& config_path, const std::string& circuit_path, bool parallel,
                 const std::string& out_path) {
    auto p = prepare(config_path, circuit_path);
    try {
        auto mode = parallel ? ScheduleMode::ParallelAuto : ScheduleMode::Serial;
        auto prog = decorate(*p.dev, schedule(*p.dev, p.circuit, mode));
        json j = program_json(prog);
        j["device"] = {{"family", p.dev->family()}, {"config_hash", config_hash(p.doc)}};
        emit(j, out_path);
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}

int cmd_calibrate(double fbar, double x, int arity, const std::string& out_path) {
    try {
        auto [pv, qv] = invert({fbar, x, arity});
        emit(json{{"fbar", fbar}, {"x", x}, {"arity", arity}, {"p", pv}, {"q", qv}}, out_path);
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}

// --------------------------------------------------------------------------
// repro harness

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    if (path.empty()) return;
    std::ofstream f(path);
    if (!f.good()) throw std::runtime_error("cannot write " + path);
    f << header << "\n";
    for (const auto& r : rows) f << r << "\n";
}

int repro_distill(int rounds, std::string strategy, uint64_t, const std::string& out_path,
                  const std::string& csv_path) {
    std::vector<std::string> strat;
    if (strategy.empty() && rounds > 0) strategy = "ph";
    std::istringstream ss(strategy);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) strat.push_back(tok);
    while (static_cast<int>(strat.size()) < rounds) strat.push_back(strat.empty() ? "ph" : strat.back());
    if (static_cast<int>(strat.size()) != rounds) {
        std::cerr << "parse error: --strategy length disagrees with --rounds\n";
        return kExitParse;
    }

    IonDevice dev(IonConfig{});
    json report;
    report["experiment"] = "distill";
    report["strategy"] = strat;
    std::vector<std::string> csv;
    try {
        double final_f = 0;
        for (int r = 0; r <= rounds; ++r) {
            std::vector<std::string> prefix(strat.begin(), strat.begin() + r);
            Circuit circ = build_distillation(prefix);
            auto viol = validate_circuit(dev, circ);
            if (!viol.empty()) throw std::runtime_error("fixture rejected: " + viol[0].rule);
            auto prog = decorate(dev, schedule(dev, circ, ScheduleMode::ParallelAuto));
            RunOptions opt;
            opt.measure_mode = MeasureMode::Deferred;
            auto rr = run_density(prog, opt);
            auto [i, j] = distill_output_pair(prefix.size());
            double f = fidelity(rr.state.partial_trace({i, j}), bell_psi_plus());
            csv.push_back(std::to_string(r) + "," + std::to_string(f) + "," +
                          std::to_string(rr.acceptance));
            final_f = f;
            if (r == 0) report["raw_fidelity"] = f;
            if (r == rounds) {
                report["acceptance"] = rr.acceptance;
                report["steps_per_node"] = node_op_count(circ, 0, 4);
                report["duration_us_per_node"] = node_duration(dev, circ, 0, 4);
            }
        }
        report["fidelity"] = final_f;
        write_csv(csv_path, "round,fidelity,acceptance", csv);
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    emit(report, out_path);
    return 0;
}

int repro_atom(const std::string& name, const std::string& fixture_dir, long shots, uint64_t seed,
               const std::string& out_path, const std::string& csv_path) {
    json report;
    std::vector<std::string> csv;
    try {
        auto fx = load_atom_fixture(fixture_dir + "/" + name + ".json");
        AtomDevice dev(fx.device);
        auto viol = validate_circuit(dev, fx.circuit);
        if (!viol.empty()) throw std::runtime_error("fixture rejected: " + viol[0].rule);
        report["experiment"] = name;
        double sum = 0;
        json table = json::array();
        for (size_t i = 0; i < fx.observables.size(); ++i) {
            const auto& ob = fx.observables[i];
            AtomDevice d(fx.device);
            auto prog = decorate(d, schedule(d, fx.circuit, ScheduleMode::ParallelAuto));
            // readout error as depolarising noise on the measured support
            if (fx.device.eps_meas > 0)
                for (const auto& [q, c] : ob.pauli.terms)
                    prog.steps.push_back(Step::noise(depol1(fx.device.eps_meas, q), "readout"));
            SamplerOptions sopt;
            sopt.shots = shots;
            sopt.seed = seed + i;
            auto est = sample_expec_pauli_sum(prog, {ob.pauli}, sopt);
            table.push_back({{"name", ob.name},
                             {"pauli", ob.pauli.str()},
                             {"mean", est.mean},
                             {"stderr", est.stderr_}});
            csv.push_back(ob.name + "," + std::to_string(est.mean) + "," +
                          std::to_string(est.stderr_));
            sum += est.mean;
        }
        report["observables"] = table;
        report["average"] = sum / static_cast<double>(fx.observables.size());
        report["shots"] = shots;
        write_csv(csv_path, "name,mean,stderr", csv);
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    emit(report, out_path);
    return 0;
}

int repro_bell_si(const std::string& fixture_dir, const std::string& out_path,
                  const std::string& csv_path) {
    json report;
    std::vector<std::string> csv;
    try {
        auto fx = load_silicon_bell_fixture(fixture_dir + "/silicon_bell.json");
        report["experiment"] = "bell-si";
        json table = json::array();
        SiliconConfig ideal = SiliconConfig::ideal(fx.device.n);
        for (const auto& pr : fx.pairs) {
            auto run_pair = [&](const SiliconConfig& cfg) {
                SiliconDevice dev(cfg);
                Circuit circ = parse_circuit(silicon::bell_circuit(pr.i, pr.j));
                auto viol = validate_circuit(dev, circ);
                if (!viol.empty()) throw std::runtime_error("fixture rejected: " + viol[0].rule);
                auto prog = decorate(dev, schedule(dev, circ, ScheduleMode::Serial));
                RunOptions opt;
                opt.measure_mode = MeasureMode::Deferred;
                return run_density(prog, opt).state.partial_trace({pr.i, pr.j});
            };
            auto rho = run_pair(fx.device);
            double f = fidelity(rho, run_pair(ideal));
            double c = concurrence(rho);
            table.push_back({{"pair", {pr.i, pr.j}},
                             {"fidelity_pct", 100 * f},
                             {"concurrence_pct", 100 * c},
                             {"target_fidelity_pct", pr.fidelity_pct},
                             {"target_concurrence_pct", pr.concurrence_pct}});
            // density-matrix magnitudes for the Bell-basis plot
            Mat m = rho.to_matrix();
            std::ostringstream row;
            row << pr.i << "," << pr.j << "," << 100 * f << "," << 100 * c;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) row << "," << std::abs(m(a, b));
            csv.push_back(row.str());
        }
        report["pairs"] = table;
        write_csv(csv_path, "i,j,fidelity_pct,concurrence_pct,rho_abs_00..33", csv);
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    emit(report, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual quantum device emulator"};
    app.require_subcommand(1);

    uint64_t seed = 0;
    int threads = 0;
    app.add_option("--threads", threads, "trajectory parallelism degree (default: all cores)");

    // run
    auto* run = app.add_subcommand("run", "validate, decorate and execute a circuit");
    std::string run_config, run_circuit, run_repr = "density", run_out, run_state;
    std::vector<std::string> run_obs;
    long run_shots = 10000;
    double run_tol = 0;
    bool run_serial = false;
    run->add_option("config", run_config, "device config JSON")->required();
    run->add_option("circuit", run_circuit, "circuit file")->required();
    run->add_option("--repr", run_repr, "density | traj")
        ->check(CLI::IsMember({"density", "traj"}));
    run->add_option("--obs", run_obs, "observable NAME=PAULI (repeatable)");
    run->add_option("--shots", run_shots, "trajectory count");
    run->add_option("--tol", run_tol, "target standard error (overrides --shots)");
    auto* run_seed_opt = run->add_option("--seed", seed, "RNG seed (else VQD_SEED, else 0)");
    run->add_flag("--serial", run_serial, "disable automatic parallel scheduling");
    run->add_option("--out", run_out, "write the run report here instead of stdout");
    run->add_option("--dump-state", run_state, "write the final density matrix here");

    // decorate
    auto* dec = app.add_subcommand("decorate", "emit the noise-decorated program listing");
    std::string dec_config, dec_circuit, dec_out;
    bool dec_serial = false;
    dec->add_option("config", dec_config, "device config JSON")->required();
    dec->add_option("circuit", dec_circuit, "circuit file")->required();
    dec->add_flag("--serial", dec_serial, "disable automatic parallel scheduling");
    dec->add_option("--out", dec_out, "output file (default stdout)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "invert an average gate fidelity into (p, q)");
    double cal_fbar = 1.0, cal_x = 0.0;
    int cal_arity = 1;
    std::string cal_out;
    cal->add_option("--fbar", cal_fbar, "average gate fidelity")->required();
    cal->add_option("--x", cal_x, "depolarising fraction")->required();
    cal->add_option("--arity", cal_arity, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
    cal->add_option("--out", cal_out, "output file (default stdout)");

    // repro
    auto* rep = app.add_subcommand("repro", "run a built-in experiment fixture");
    std::string rep_name, rep_out, rep_csv, rep_strategy;
    std::string rep_fixtures = VQD_DEFAULT_FIXTURE_DIR;
    bool rep_list = false;
    int rep_rounds = 3;
    long rep_shots = 2000;
    rep->add_option("experiment", rep_name, "distill | cluster12 | steane7 | bell-si");
    rep->add_flag("--list", rep_list, "list available experiments");
    rep->add_option("--rounds", rep_rounds, "distillation rounds (0-3)");
    rep->add_option("--strategy", rep_strategy, "comma list over {ph, bf}");
    rep->add_option("--shots", rep_shots, "trajectory count for sampled fixtures");
    auto* rep_seed_opt = rep->add_option("--seed", seed, "RNG seed (else VQD_SEED, else 0)");
    rep->add_option("--fixtures", rep_fixtures, "fixture directory");
    rep->add_option("--out", rep_out, "report file (default stdout)");
    rep->add_option("--csv", rep_csv, "plot-data CSV file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitParse;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    if (run->parsed())
        return cmd_run(run_config, run_circuit, run_repr, run_obs, run_shots, run_tol,
                       resolve_seed(run_seed_opt, seed), !run_serial, run_out, run_state);
    if (dec->parsed()) return cmd_decorate(dec_config, dec_circuit, !dec_serial, dec_out);
    if (cal->parsed()) return cmd_calibrate(cal_fbar, cal_x, cal_arity, cal_out);
    if (rep->parsed()) {
        if (rep_list) {
            std::cout << "distill\ncluster12\nsteane7\nbell-si\n";
            return 0;
        }
        uint64_t s = resolve_seed(rep_seed_opt, seed);
        if (rep_name == "distill") return repro_distill(rep_rounds, rep_strategy, s, rep_out, rep_csv);
        if (rep_name == "cluster12" || rep_name == "steane7")
            return repro_atom("atom_" + rep_name, rep_fixtures, rep_shots, s, rep_out, rep_csv);
        if (rep_name == "bell-si") return repro_bell_si(rep_fixtures, rep_out, rep_csv);
        std::cerr << "parse error: unknown experiment " << rep_name << "\n";
        return kExitParse;
    }
    return kExitParse;
}
