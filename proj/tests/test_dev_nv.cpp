#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "vqd/dev_nv.hpp"

using namespace vqd;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

QuantumState run_deferred(NVDevice& dev, const Circuit& circ) {
    REQUIRE(validate_circuit(dev, circ).empty());
    auto prog = decorate(dev, schedule(dev, circ, ScheduleMode::Serial));
    RunOptions opt;
    opt.measure_mode = MeasureMode::Deferred;
    return run_density(prog, opt).state;
}

// single sampled pass; the recorded branch probability makes P(label==1) exact
double prob_outcome_one(NVDevice& dev, const Circuit& circ, const std::string& label) {
    REQUIRE(validate_circuit(dev, circ).empty());
    auto prog = decorate(dev, schedule(dev, circ, ScheduleMode::Serial));
    RunOptions opt;
    opt.seed = 11;
    auto rr = run_density(prog, opt);
    double p = rr.outcome_probs.at(label);
    return rr.outcomes.at(label) == 1 ? p : 1.0 - p;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("electron init produces the configured infidelity profile", "[nv]") {
    NVConfig cfg = NVConfig::ideal(2);
    cfg.f_init_e = 0.997;
    NVDevice dev(cfg);
    auto st = run_deferred(dev, parse_circuit("RX q0 3.141592653589793\nINITE q0"));
    REQUIRE(st.expectation({PauliString::parse("Z0")}) == Approx(0.997 - 0.003).margin(1e-12));
    NVDevice ideal(NVConfig::ideal(2));
    auto st2 = run_deferred(ideal, parse_circuit("RX q0 3.141592653589793\nINITE q0"));
    REQUIRE(fidelity(st2, QuantumState::statevector(2, 0)) == Approx(1.0).margin(1e-12));
}

TEST_CASE("electron readout bias and post-measurement reset", "[nv]") {
    NVConfig cfg = NVConfig::ideal(2);
    cfg.p_meas = 0.02;
    NVDevice dev(cfg);
    // true |0>: incorrect "1" with the net bias probability
    REQUIRE(prob_outcome_one(dev, parse_circuit("INITE q0\nME q0 -> m"), "m") ==
            Approx(0.02).margin(1e-12));
    // true |1>: always read correctly
    REQUIRE(prob_outcome_one(dev, parse_circuit("RX q0 3.141592653589793\nME q0 -> m"), "m") ==
            Approx(1.0).margin(1e-12));
    // the final damping drives the electron back to |0> whatever the outcome
    auto prog = decorate(dev, schedule(dev, parse_circuit("RX q0 1.1\nME q0 -> m"),
                                       ScheduleMode::Serial));
    for (uint64_t seed = 0; seed < 5; ++seed) {
        RunOptions opt;
        opt.seed = seed;
        auto rr = run_density(prog, opt);
        auto e = rr.state.partial_trace({0});
        REQUIRE(fidelity(e, QuantumState::statevector(1, 0)) == Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("star topology constraint matrix", "[nv][constraints]") {
    NVDevice dev(NVConfig{});
    auto reject = [&](const std::string& text, const std::string& what) {
        auto v = validate_circuit(dev, parse_circuit(text));
        INFO(text);
        REQUIRE(v.size() == 1);
        REQUIRE(v[0].rule.find(what) != std::string::npos);
    };
    REQUIRE(validate_circuit(dev, parse_circuit("INITE q0\nRX q1 0.5\nRZ q3 0.1\n"
                                                "CRY q0 q2 1.0\nINITN q1\nMN q4 -> m\nME q0"))
                .empty());
    reject("INITE q1", "restricted to the electron");
    reject("ME q2", "restricted to the electron");
    reject("CRX q1 q2 0.5", "controlled by the electron");
    reject("CRY q2 q0 0.5", "controlled by the electron");
    reject("CRX q0 q0 0.5", "distinct");
    reject("INITN q0", "nuclear spin");
    reject("MN q0", "nuclear spin");
    reject("RX q0", "parameter count");
    reject("CRX q0 q9 0.5", "out of range");
    reject("HADAMARD q0", "unknown opcode");
}

TEST_CASE("conditional rotation direction follows the electron state", "[nv]") {
    NVDevice dev(NVConfig::ideal(2));
    auto st = run_deferred(dev, parse_circuit("CRY q0 q1 0.8"));
    REQUIRE(st.expectation({PauliString::parse("X1")}) == Approx(std::sin(0.8)).margin(1e-12));
    REQUIRE(st.expectation({PauliString::parse("Z1")}) == Approx(std::cos(0.8)).margin(1e-12));
    auto st2 = run_deferred(dev, parse_circuit("RX q0 3.141592653589793\nCRY q0 q1 0.8"));
    REQUIRE(st2.expectation({PauliString::parse("X1")}) == Approx(-std::sin(0.8)).margin(1e-12));
    // zero angle is the identity
    auto st3 = run_deferred(dev, parse_circuit("CRX q0 q1 0.0"));
    REQUIRE(fidelity(st3, QuantumState::statevector(2, 0)) == Approx(1.0).margin(1e-12));
}

TEST_CASE("nuclear init via swap lands the nuclear spin exactly in |0>", "[nv]") {
    NVDevice dev(NVConfig::ideal(3));
    auto st = run_deferred(dev, parse_circuit("RX q1 1.1\nRY q1 0.7\nRZ q1 0.4\nINITN q1 -> m"));
    REQUIRE(fidelity(st.partial_trace({1}), QuantumState::statevector(1, 0)) ==
            Approx(1.0).margin(1e-10));
    // the closing electron measurement resets q0 too
    REQUIRE(fidelity(st.partial_trace({0}), QuantumState::statevector(1, 0)) ==
            Approx(1.0).margin(1e-10));
}

TEST_CASE("nuclear measurement reproduces direct Z statistics", "[nv]") {
    NVDevice dev(NVConfig::ideal(2));
    for (double th : {0.0, 0.9, 2.2, kPi}) {
        std::ostringstream c;
        c << "RX q1 " << th << "\nMN q1 -> m";
        double p1 = prob_outcome_one(dev, parse_circuit(c.str()), "m");
        double direct = std::sin(th / 2) * std::sin(th / 2);
        INFO("theta = " << th);
        REQUIRE(p1 == Approx(direct).margin(1e-10));
    }
}

TEST_CASE("gate error severity scales with the rotation angle", "[nv]") {
    NVConfig cfg = NVConfig::ideal(2);
    cfg.f_1q_n = 0.995;
    cfg.x_1q = 0.5;
    NVDevice dev(cfg);
    auto [p, q] = dev.severities_1q(false);
    REQUIRE(p > 0);
    REQUIRE(q > 0);
    // RX(pi) on |0>: dephasing leaves Z alone, depol(q) contracts it by (1 - 4q/3)
    auto st = run_deferred(dev, parse_circuit("RX q1 3.141592653589793"));
    REQUIRE(st.expectation({PauliString::parse("Z1")}) ==
            Approx(-(1.0 - 4 * q / 3)).margin(1e-12));
    // half angle, half severity; the mid-circuit equatorial state also feels
    // the first gate's dephasing (Y contracts by 1 - 2p)
    auto st2 = run_deferred(dev, parse_circuit("RX q1 1.5707963267948966\n"
                                               "RX q1 1.5707963267948966"));
    double expect =
        -(1.0 - 2 * (p / 2)) * (1.0 - 4 * (q / 2) / 3) * (1.0 - 4 * (q / 2) / 3);
    REQUIRE(st2.expectation({PauliString::parse("Z1")}) == Approx(expect).margin(1e-12));
}

TEST_CASE("nuclear-pair ZZ drift is coherent and excludes the electron", "[nv]") {
    NVConfig cfg = NVConfig::ideal(3);
    cfg.zz_rate = 5.0;
    cfg.durations.rot_n = 0;  // isolate the drift window
    cfg.durations.init = 0.01;
    NVDevice dev(cfg);
    auto st = run_deferred(dev, parse_circuit("RY q1 1.5707963267948966\n"
                                              "RY q2 1.5707963267948966\nINITE q0"));
    double alpha = kPi * 5.0 * 0.01;
    REQUIRE(st.expectation({PauliString::parse("X1")}) == Approx(std::cos(2 * alpha)).margin(1e-12));
    REQUIRE(st.expectation({PauliString::parse("X2")}) == Approx(std::cos(2 * alpha)).margin(1e-12));
    // the pair stays coherent: XX is preserved, not dephased away
    REQUIRE(st.expectation({PauliString::parse("X1 X2")}) == Approx(1.0).margin(1e-12));

    // one nuclear spin only: no pair, no drift
    NVConfig cfg2 = NVConfig::ideal(2);
    cfg2.zz_rate = 5.0;
    cfg2.durations.rot_n = 0;
    cfg2.durations.init = 0.01;
    NVDevice dev2(cfg2);
    auto st2 = run_deferred(dev2, parse_circuit("RY q1 1.5707963267948966\nINITE q0"));
    REQUIRE(st2.expectation({PauliString::parse("X1")}) == Approx(1.0).margin(1e-12));
}

TEST_CASE("scheduling degrades to serial", "[nv]") {
    NVDevice dev(NVConfig::ideal(3));
    auto sch = schedule(dev, parse_circuit("RX q1 0.5\nRX q2 0.5\nRY q1 0.2"),
                        ScheduleMode::ParallelAuto);
    REQUIRE(sch.slots.size() == 3);
}

TEST_CASE("BCS propagator is faithful at 0.99999 fidelity and degrades at realistic noise",
          "[nv][bcs][slow]") {
    Circuit prop = parse_circuit(slurp(std::string(VQD_SOURCE_DIR) + "/configs/nv_bcs_propagator.circ"));
    int phys = 0;
    for (const auto& in : prop)
        if (in.opcode != "RZ") ++phys;
    REQUIRE(phys == 200);

    auto curve = [&](const NVConfig& cfg, int reps) {
        NVDevice dev(cfg);
        std::vector<double> f;
        Circuit acc;
        auto psi0 = QuantumState::statevector(5, 0);
        for (int k = 0; k < reps; ++k) {
            acc.insert(acc.end(), prop.begin(), prop.end());
            auto st = run_deferred(dev, acc);
            f.push_back(fidelity(st, psi0));
        }
        return f;
    };

    const int reps = 4;
    auto ideal = curve(NVConfig::ideal(5), reps);

    NVConfig good = NVConfig::ideal(5);
    good.f_1q_e = good.f_1q_n = good.f_2q = 0.99999;
    auto near = curve(good, reps);
    double dev_near = 0;
    for (int k = 0; k < reps; ++k) dev_near = std::max(dev_near, std::abs(near[k] - ideal[k]));
    REQUIRE(dev_near < 0.05);

    NVConfig real;  // realistic defaults: f_2q = 0.99, finite T2, 5 Hz crosstalk
    real.n_qubits = 5;
    auto rl = curve(real, reps);
    double dev_real = 0;
    for (int k = 0; k < reps; ++k) dev_real = std::max(dev_real, std::abs(rl[k] - ideal[k]));
    REQUIRE(dev_real > 0.2);
    REQUIRE(dev_real > 3 * dev_near);
}
