#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vqd/config_io.hpp"
#include "vqd/dev_atom.hpp"
#include "vqd/sampler.hpp"

using namespace vqd;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fixture_path(const std::string& name) {
    return std::string(VQD_SOURCE_DIR) + "/configs/" + name;
}

AtomConfig ideal_pair(double separation = 4.0) {
    return AtomConfig::ideal({{0, 0, 0}, {separation, 0, 0}});
}

QuantumState run_deferred(AtomDevice& dev, const Circuit& circ) {
    REQUIRE(validate_circuit(dev, circ).empty());
    auto prog = decorate(dev, schedule(dev, circ, ScheduleMode::ParallelAuto));
    RunOptions opt;
    opt.measure_mode = MeasureMode::Deferred;
    return run_density(prog, opt).state;
}

// trajectory estimate of one observable with the fixture's readout error
// appended as depolarising noise on the measured support
double fixture_expectation(const AtomFixture& fx, const AtomConfig& cfg, const PauliString& ps,
                           long shots, uint64_t seed) {
    AtomDevice dev(cfg);
    REQUIRE(validate_circuit(dev, fx.circuit).empty());
    auto prog = decorate(dev, schedule(dev, fx.circuit, ScheduleMode::ParallelAuto));
    if (cfg.eps_meas > 0)
        for (const auto& [q, c] : ps.terms)
            prog.steps.push_back(Step::noise(depol1(cfg.eps_meas, q), "readout"));
    SamplerOptions opt;
    opt.shots = shots;
    opt.seed = seed;
    return sample_expec_pauli_sum(prog, {ps}, opt).mean;
}

}  // namespace

TEST_CASE("raman pulse algebra", "[atom]") {
    AtomDevice dev(ideal_pair());
    double th = 1.234;
    REQUIRE(testutil::maxdiff(dev.raman_unitary(0, 0, th / dev.config().omega), rx(th)) < 1e-12);
    // Hadamard up to a global phase at delta = omega, t = pi / omega_tilde
    double omt = std::sqrt(2.0) * dev.config().omega;
    Mat u = dev.raman_unitary(0, dev.config().omega, kPi / omt);
    REQUIRE(testutil::maxdiff(cplx(0, 1) * u, mat_h()) < 1e-12);
    REQUIRE(dev.raman_unitary(0.3, 0.7, 0).isIdentity(1e-15));

    // wrappers: RY(theta) and H from |0>
    auto st = run_deferred(dev, parse_circuit("INIT q0\nRY q0 " + std::to_string(th)));
    REQUIRE(st.expectation(PauliString::parse("X0")) == Approx(std::sin(th)).margin(1e-12));
    auto st2 = run_deferred(dev, parse_circuit("INIT q0\nRY q0 -1.570796326794897"));
    REQUIRE(st2.expectation(PauliString::parse("X0")) == Approx(-1.0).margin(1e-12));
    auto st3 = run_deferred(dev, parse_circuit("INIT q0\nH q0"));
    REQUIRE(st3.expectation(PauliString::parse("X0")) == Approx(1.0).margin(1e-12));
}

TEST_CASE("init leakage attenuates survival", "[atom]") {
    AtomConfig cfg = ideal_pair();
    AtomDevice clean(cfg);
    auto st = run_deferred(clean, parse_circuit("INIT q0"));
    REQUIRE(fidelity(st, QuantumState::statevector(2, 0)) == Approx(1.0).margin(1e-12));

    cfg.gamma_init = 0.02;
    AtomDevice noisy(cfg);
    auto st2 = run_deferred(noisy, parse_circuit("INIT q0\nINIT q1"));
    REQUIRE(st2.survival_probability() == Approx(0.98 * 0.98).margin(1e-12));
}

TEST_CASE("czphi matrix and leakage", "[atom]") {
    AtomConfig cfg = ideal_pair();
    AtomDevice dev(cfg);
    // CZ(pi) = CZ . (Z x Z): |++> -> (|00> - |01> - |10> - |11>)/2
    auto st = run_deferred(dev, parse_circuit("INIT q0\nINIT q1\nH q0\nH q1\n"
                                              "CZPHI q0 q1 3.141592653589793"));
    QuantumState ref = QuantumState::statevector(2, 0);
    ref.apply_unitary(mat_h(), {0});
    ref.apply_unitary(mat_h(), {1});
    Mat cz = Mat::Identity(4, 4);
    cz(1, 1) = cz(2, 2) = cz(3, 3) = -1;
    ref.apply_unitary(cz, {0, 1});
    REQUIRE(fidelity(st, ref) == Approx(1.0).margin(1e-12));

    cfg.leak_alpha = 0.1;
    cfg.leak_beta = 0.3;
    AtomDevice leaky(cfg);
    auto st2 = run_deferred(leaky, parse_circuit("RX q0 3.141592653589793\n"
                                                 "RX q1 3.141592653589793\nCZPHI q0 q1 0.4"));
    REQUIRE(st2.survival_probability() == Approx(0.7).margin(1e-12));
}

TEST_CASE("multi-qubit Z operators follow the projector algebra", "[atom]") {
    auto cfg = AtomConfig::ideal({{0, 0, 0}, {3, 0, 0}, {3, 3, 0}});
    AtomDevice dev(cfg);
    // CQZ with controls |11>: Z on the target (global i unobservable)
    auto st = run_deferred(dev, parse_circuit("RX q0 3.141592653589793\nRX q1 3.141592653589793\n"
                                              "H q2\nCQZ q0 q1 q2"));
    REQUIRE(st.expectation(PauliString::parse("X2")) == Approx(-1.0).margin(1e-12));
    // one control off: identity on the target
    auto st2 = run_deferred(dev, parse_circuit("RX q0 3.141592653589793\nH q2\nCQZ q0 q1 q2"));
    REQUIRE(st2.expectation(PauliString::parse("X2")) == Approx(1.0).margin(1e-12));
    // CZQ: control |1> flips the phase of every target
    auto st3 = run_deferred(dev, parse_circuit("RX q0 3.141592653589793\nH q1\nH q2\nCZQ q0 q1 q2"));
    REQUIRE(st3.expectation(PauliString::parse("X1")) == Approx(-1.0).margin(1e-12));
    REQUIRE(st3.expectation(PauliString::parse("X2")) == Approx(-1.0).margin(1e-12));
    auto st4 = run_deferred(dev, parse_circuit("H q1\nH q2\nCZQ q0 q1 q2"));
    REQUIRE(st4.expectation(PauliString::parse("X1")) == Approx(1.0).margin(1e-12));
    // multi-gate leakage acts per participant
    auto leaky_cfg = cfg;
    leaky_cfg.leak_multi_alpha = 0.1;
    AtomDevice leaky(leaky_cfg);
    auto st5 = run_deferred(leaky, parse_circuit("RX q0 3.141592653589793\n"
                                                 "RX q1 3.141592653589793\n"
                                                 "RX q2 3.141592653589793\nCQZ q0 q1 q2"));
    REQUIRE(st5.survival_probability() == Approx(std::pow(0.9, 3)).margin(1e-12));
}

TEST_CASE("blockade constraint matrix", "[atom][constraints]") {
    auto cfg = AtomConfig::ideal({{0, 0, 0}, {4, 0, 0}, {20, 0, 0}});
    AtomDevice dev(cfg);
    auto reject = [&](const std::string& text, const std::string& what) {
        auto v = validate_circuit(dev, parse_circuit(text));
        INFO(text);
        REQUIRE(!v.empty());
        REQUIRE(v[0].rule.find(what) != std::string::npos);
    };
    REQUIRE(validate_circuit(dev, parse_circuit("CZPHI q0 q1 3.1")).empty());
    reject("CZPHI q0 q2 3.1", "blockade violation");
    reject("CQZ q0 q1 q2", "blockade violation");
    reject("CZPHI q0 q0 3.1", "duplicate atom");
    reject("CZPHI q0 q1", "parameter count");
    reject("U q0 1.0 2.0", "parameter count");
    reject("U q0 1.0 2.0 -1.0", "non-negative");
    reject("SHIFTLOC q0 1.0", "3-vector");
    reject("CZPHI q0 q5 3.1", "out of range");
    reject("FOO q0", "unknown opcode");

    // move, then gate: validity follows the updated separation
    REQUIRE(validate_circuit(dev, parse_circuit("SHIFTLOC q2 -14 0 0\nCZPHI q0 q2 3.1")).empty());
    reject("SHIFTLOC q1 0 12 0\nCZPHI q0 q1 3.1", "blockade violation");
}

TEST_CASE("moves mutate geometry and carry heated dephasing", "[atom]") {
    AtomConfig cfg = ideal_pair(10.0);
    cfg.move_speed = 0.5;
    AtomDevice dev(cfg);
    Instruction mv = parse_circuit("SHIFTLOC q1 -6 8 0")[0];
    REQUIRE(dev.duration(mv) == Approx(20.0).margin(1e-12));
    REQUIRE(validate_circuit(dev, {mv}).empty());
    dev.reset_state();
    dev.mutate(mv);
    REQUIRE(dev.position(1)[0] == Approx(4.0));
    REQUIRE(dev.position(1)[1] == Approx(8.0));
    dev.reset_state();

    // swap exchanges coordinates; duration = separation / speed
    Instruction sw = parse_circuit("SWAPLOC q0 q1")[0];
    REQUIRE(dev.duration(sw) == Approx(20.0).margin(1e-12));
    dev.mutate(sw);
    REQUIRE(dev.position(0)[0] == Approx(10.0));
    REQUIRE(dev.position(1)[0] == Approx(0.0));
    dev.reset_state();

    // kappa = 1 reduces to the plain T2 exponent; kappa > 1 intensifies it
    AtomConfig noisy = ideal_pair(10.0);
    noisy.t2 = 100.0;
    noisy.kappa = 1.0;
    noisy.move_speed = 0.5;
    AtomDevice d1(noisy);
    // the H pulse itself dephases too: a = 1 - exp(-t_pulse / 2 T2)
    double t_pulse = kPi / (std::sqrt(2.0) * noisy.omega);
    double pulse = 2 * std::exp(-t_pulse / (2 * noisy.t2)) - 1;
    auto st = run_deferred(d1, parse_circuit("H q1\nSHIFTLOC q1 -6 8 0"));
    double a = 0.5 * (1 - std::exp(-20.0 / 100.0));
    REQUIRE(st.expectation(PauliString::parse("X1")) == Approx(pulse * (1 - 2 * a)).margin(1e-9));
    noisy.kappa = 3.0;
    AtomDevice d3(noisy);
    auto st2 = run_deferred(d3, parse_circuit("H q1\nSHIFTLOC q1 -6 8 0"));
    double a3 = 0.5 * (1 - std::exp(-3.0 * 20.0 / 100.0));
    REQUIRE(st2.expectation(PauliString::parse("X1")) == Approx(pulse * (1 - 2 * a3)).margin(1e-9));
}

TEST_CASE("vacuum-limited T1 scales inversely with the atom count", "[atom]") {
    AtomConfig cfg = AtomConfig::ideal(
        {{0, 0, 0}, {10, 0, 0}, {20, 0, 0}, {30, 0, 0}});
    cfg.t_vac = 4e6;
    AtomDevice dev(cfg);
    REQUIRE(dev.t1_now() == Approx(1e6));
    AtomConfig two = ideal_pair();
    two.t_vac = 4e6;
    AtomDevice d2(two);
    REQUIRE(d2.t1_now() == Approx(2e6));
}

TEST_CASE("loss bookkeeping: accumulation, rejection, Bernoulli draws", "[atom]") {
    AtomConfig cfg = ideal_pair();
    cfg.p_loss_meas = 0.02;
    AtomDevice dev(cfg);
    Circuit two_reads = parse_circuit("READ q0 -> a\nREAD q0 -> b");
    validate_circuit(dev, two_reads);  // replays mutate
    dev.reset_state();
    for (const auto& in : two_reads) dev.mutate(in);
    REQUIRE(dev.accumulated_loss(0) == Approx(0.04).margin(1e-12));
    REQUIRE(dev.accumulated_loss(1) == 0.0);
    dev.reset_state();
    REQUIRE(dev.accumulated_loss(0) == 0.0);

    // an initially-absent atom rejects every operation
    AtomConfig lost = ideal_pair();
    lost.present = {1, 0};
    AtomDevice dl(lost);
    auto v = validate_circuit(dl, parse_circuit("INIT q1"));
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].rule.find("lost") != std::string::npos);
    REQUIRE(validate_circuit(dl, parse_circuit("INIT q0")).empty());

    // presence draws follow the configured loss probability per read
    AtomConfig heavy = ideal_pair();
    heavy.p_loss_meas = 0.4;
    int lost_count = 0;
    const int trials = 400;
    for (int s = 0; s < trials; ++s) {
        heavy.loss_seed = 1000 + s;
        AtomDevice d(heavy);
        d.mutate(parse_circuit("READ q0 -> a")[0]);
        if (!d.is_present(0)) ++lost_count;
    }
    double frac = double(lost_count) / trials;
    REQUIRE(frac == Approx(0.4).margin(0.08));
}

TEST_CASE("geometry snapshot is valid JSON with positions and presence", "[atom]") {
    AtomConfig cfg = ideal_pair();
    cfg.present = {1, 0};
    AtomDevice dev(cfg);
    auto j = nlohmann::json::parse(dev.snapshot());
    REQUIRE(j["family"] == "atom");
    REQUIRE(j["atoms"].size() == 2);
    REQUIRE(j["atoms"][0]["present"] == true);
    REQUIRE(j["atoms"][1]["present"] == false);
    REQUIRE(j["atoms"][1]["position"][0] == Approx(4.0));
}

TEST_CASE("fixture circuits prepare the exact target states when noiseless", "[atom]") {
    for (const char* name : {"atom_cluster12.json", "atom_steane7.json"}) {
        auto fx = load_atom_fixture(fixture_path(name));
        AtomConfig cfg = AtomConfig::ideal(fx.device.positions);
        AtomDevice dev(cfg);
        REQUIRE(validate_circuit(dev, fx.circuit).empty());
        auto prog = decorate(dev, schedule(dev, fx.circuit, ScheduleMode::ParallelAuto));
        SamplerOptions opt;
        opt.shots = 2;  // noiseless: trajectories are deterministic
        for (const auto& ob : fx.observables) {
            double expect = ob.name == "ZL" ? 0.0 : 1.0;
            INFO(name << " " << ob.name);
            REQUIRE(sample_expec_pauli_sum(prog, {ob.pauli}, opt).mean ==
                    Approx(expect).margin(1e-9));
        }
    }
}

TEST_CASE("cluster state stabiliser averages under tuned and SPAM-free noise",
          "[atom][repro][slow]") {
    auto fx = load_atom_fixture(fixture_path("atom_cluster12.json"));
    const long shots = 2000;
    double sum = 0, sum_off = 0;
    AtomConfig off = fx.device;
    off.gamma_init = 0;
    off.eps_meas = 0;
    for (size_t i = 0; i < fx.observables.size(); ++i) {
        sum += fixture_expectation(fx, fx.device, fx.observables[i].pauli, shots, 7 + i);
        sum_off += fixture_expectation(fx, off, fx.observables[i].pauli, shots, 77 + i);
    }
    double avg = sum / fx.observables.size();
    double avg_off = sum_off / fx.observables.size();
    INFO("tuned " << avg << " spam-off " << avg_off);
    REQUIRE(avg == Approx(0.87).margin(0.03));
    REQUIRE(avg_off == Approx(0.97).margin(0.01));
}

TEST_CASE("steane logical state plaquette and logical averages", "[atom][repro][slow]") {
    auto fx = load_atom_fixture(fixture_path("atom_steane7.json"));
    const long shots = 2000;
    std::map<std::string, double> val;
    for (size_t i = 0; i < fx.observables.size(); ++i)
        val[fx.observables[i].name] =
            fixture_expectation(fx, fx.device, fx.observables[i].pauli, shots, 13 + i);
    double sx = (val["SX0"] + val["SX1"] + val["SX2"]) / 3;
    double sz = (val["SZ0"] + val["SZ1"] + val["SZ2"]) / 3;
    INFO("SX " << sx << " SZ " << sz << " XL " << val["XL"] << " ZL " << val["ZL"]);
    REQUIRE(sx == Approx(0.51).margin(0.05));
    REQUIRE(sz == Approx(0.73).margin(0.05));
    REQUIRE(val["XL"] == Approx(0.76).margin(0.05));
    REQUIRE(val["ZL"] == Approx(-0.02).margin(0.05));
}
