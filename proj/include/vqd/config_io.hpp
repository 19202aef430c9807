#pragma once
// JSON config / fixture loading (vendored nlohmann single header).

#include <fstream>
#include <sstream>

#include <memory>

#include "json.hpp"
#include "vqd/dev_atom.hpp"
#include "vqd/dev_ion.hpp"
#include "vqd/dev_nv.hpp"
#include "vqd/dev_sc.hpp"
#include "vqd/dev_silicon.hpp"

namespace vqd {

struct Observable {
    std::string name;
    PauliString pauli;
};

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    f >> j;
    return j;
}

inline std::string slurp_file(const std::string& path) {
    std::ifstream f(path);
    if (!f.good()) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline AtomConfig atom_config_from_json(const nlohmann::json& j) {
    AtomConfig c;
    for (const auto& p : j.at("positions"))
        c.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    if (j.contains("present")) c.present = j["present"].get<std::vector<int>>();
    auto get = [&](const char* k, double& field) {
        if (j.contains(k)) field = j[k].get<double>();
    };
    get("blockade_radius", c.blockade_radius);
    get("omega", c.omega);
    get("t_vac", c.t_vac);
    get("t2", c.t2);
    get("kappa", c.kappa);
    get("move_speed", c.move_speed);
    get("t_move_min", c.t_move_min);
    get("gamma_init", c.gamma_init);
    get("eps_meas", c.eps_meas);
    get("p_loss_meas", c.p_loss_meas);
    get("p_loss_move", c.p_loss_move);
    get("leak_alpha", c.leak_alpha);
    get("leak_beta", c.leak_beta);
    get("leak_multi_alpha", c.leak_multi_alpha);
    get("flip01", c.flip01);
    get("flip10", c.flip10);
    get("t_init", c.t_init);
    get("t_read", c.t_read);
    get("t_cz", c.t_cz);
    get("t_multi", c.t_multi);
    if (j.contains("loss_seed")) c.loss_seed = j["loss_seed"].get<uint64_t>();
    return c;
}

struct AtomFixture {
    AtomConfig device;
    Circuit circuit;
    std::vector<Observable> observables;
};

inline AtomFixture load_atom_fixture(const std::string& json_path) {
    auto j = load_json(json_path);
    AtomFixture fx;
    fx.device = atom_config_from_json(j.at("device"));
    std::string dir = json_path.substr(0, json_path.find_last_of('/') + 1);
    fx.circuit = parse_circuit(slurp_file(dir + j.at("circuit").get<std::string>()));
    for (const auto& o : j.at("observables"))
        fx.observables.push_back(
            {o.at("name").get<std::string>(), PauliString::parse(o.at("pauli").get<std::string>())});
    return fx;
}

inline SiliconConfig silicon_config_from_json(const nlohmann::json& j) {
    SiliconConfig c;
    c.n = j.at("n").get<int>();
    if (j.contains("freq_mhz")) c.freq_mhz = j["freq_mhz"].get<std::vector<double>>();
    if (j.contains("rabi_mhz")) c.rabi_mhz = j["rabi_mhz"].get<double>();
    if (j.contains("spectators")) c.spectators = j["spectators"].get<bool>();
    if (j.contains("f_1q")) c.f_1q = j["f_1q"].get<std::vector<double>>();
    if (j.contains("f_cz")) c.f_cz = j["f_cz"].get<std::vector<double>>();
    if (j.contains("f_crot")) c.f_crot = j["f_crot"].get<double>();
    if (j.contains("crot_edges"))
        for (const auto& e : j["crot_edges"])
            c.crot_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    if (j.contains("b_parity")) c.b_parity = j["b_parity"].get<double>();
    if (j.contains("t1")) c.t1 = j["t1"].get<double>();
    if (j.contains("t2")) c.t2 = j["t2"].get<double>();
    if (j.contains("xtalk_cz")) c.xtalk_cz = j["xtalk_cz"].get<std::vector<std::vector<double>>>();
    if (j.contains("xtalk_idle"))
        c.xtalk_idle = j["xtalk_idle"].get<std::vector<std::vector<double>>>();
    if (j.contains("t_cz")) c.t_cz = j["t_cz"].get<double>();
    if (j.contains("t_crot")) c.t_crot = j["t_crot"].get<double>();
    if (j.contains("t_read")) c.t_read = j["t_read"].get<double>();
    return c;
}

struct SiliconBellTarget {
    int i, j;
    double fidelity_pct;
    double concurrence_pct;
};

struct SiliconBellFixture {
    SiliconConfig device;
    std::vector<SiliconBellTarget> pairs;
};

inline SiliconBellFixture load_silicon_bell_fixture(const std::string& json_path) {
    auto j = load_json(json_path);
    SiliconBellFixture fx;
    fx.device = silicon_config_from_json(j.at("device"));
    for (const auto& p : j.at("pairs"))
        fx.pairs.push_back({p.at("qubits").at(0).get<int>(), p.at("qubits").at(1).get<int>(),
                            p.at("fidelity_pct").get<double>(),
                            p.at("concurrence_pct").get<double>()});
    return fx;
}

inline SCConfig sc_config_from_json(const nlohmann::json& j) {
    SCConfig c;
    for (const auto& q : j.at("qubits")) {
        SCQubit sq;
        sq.freq_mhz = q.at("freq_mhz").get<double>();
        if (q.contains("anharm_mhz")) sq.anharm_mhz = q["anharm_mhz"].get<double>();
        if (q.contains("p_ground")) sq.p_ground = q["p_ground"].get<double>();
        c.qubits.push_back(sq);
    }
    for (const auto& e : j.at("edges"))
        c.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    auto get = [&](const char* k, double& field) {
        if (j.contains(k)) field = j[k].get<double>();
    };
    get("t_1q", c.t_1q);
    get("t_2q", c.t_2q);
    get("t_meas", c.t_meas);
    get("eps_meas", c.eps_meas);
    get("t1", c.t1);
    get("t2", c.t2);
    return c;
}

// Hamiltonian files: one term per line, `coeff pauli-string`, e.g.
//   -0.8126 I
//    0.1712 Z0
//   -0.0453 X0 X1 Y2 Y3
// Blank lines and `#` comments are skipped.
inline PauliSum parse_pauli_sum(const std::string& text) {
    PauliSum sum;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double coeff;
        if (!(ls >> coeff)) {
            std::string leftover;
            if (ls.clear(), ls >> leftover)
                throw std::invalid_argument("hamiltonian line " + std::to_string(lineno) +
                                            ": expected a leading coefficient");
            continue;  // blank / comment-only line
        }
        std::string rest, tok;
        while (ls >> tok)
            if (tok != "I") rest += tok + " ";
        sum.push_back(PauliString::parse(rest, coeff));
    }
    return sum;
}

inline PauliSum load_pauli_sum(const std::string& path) { return parse_pauli_sum(slurp_file(path)); }

struct SCVqeFixture {
    SCConfig device;
    Circuit ansatz;
    PauliSum hamiltonian;
};

inline SCVqeFixture load_sc_vqe_fixture(const std::string& json_path) {
    auto j = load_json(json_path);
    SCVqeFixture fx;
    fx.device = sc_config_from_json(j.at("device"));
    std::string dir = json_path.substr(0, json_path.find_last_of('/') + 1);
    fx.ansatz = parse_circuit(slurp_file(dir + j.at("ansatz").get<std::string>()));
    fx.hamiltonian = load_pauli_sum(dir + j.at("hamiltonian").get<std::string>());
    return fx;
}

inline IonConfig ion_config_from_json(const nlohmann::json& j) {
    IonConfig c;
    if (j.contains("nodes")) c.nodes = j["nodes"].get<std::vector<std::string>>();
    if (j.contains("ions_per_node")) c.ions_per_node = j["ions_per_node"].get<int>();
    auto get = [](const nlohmann::json& o, const char* k, double& field) {
        if (o.contains(k)) field = o[k].get<double>();
    };
    if (j.contains("durations")) {
        const auto& d = j["durations"];
        get(d, "init", c.durations.init);
        get(d, "read", c.durations.read);
        get(d, "rx_per_pi", c.durations.rx_per_pi);
        get(d, "cz", c.durations.cz);
        get(d, "swap", c.durations.swap);
        get(d, "shuttle_base", c.durations.shuttle_base);
        get(d, "split", c.durations.split);
        get(d, "comb", c.durations.comb);
        get(d, "ent", c.durations.ent);
    }
    if (j.contains("fidelities")) {
        const auto& f = j["fidelities"];
        get(f, "init", c.fidelities.init);
        get(f, "read", c.fidelities.read);
        get(f, "rx", c.fidelities.rx);
        get(f, "ry", c.fidelities.ry);
        get(f, "cz", c.fidelities.cz);
        get(f, "ent", c.fidelities.ent);
    }
    if (j.contains("x_fractions")) {
        const auto& x = j["x_fractions"];
        get(x, "cz", c.x_fractions.cz);
        get(x, "ent", c.x_fractions.ent);
    }
    get(j, "t1", c.t1);
    get(j, "t2star", c.t2star);
    return c;
}

inline NVConfig nv_config_from_json(const nlohmann::json& j) {
    NVConfig c;
    if (j.contains("n_qubits")) c.n_qubits = j["n_qubits"].get<int>();
    auto get = [&](const char* k, double& field) {
        if (j.contains(k)) field = j[k].get<double>();
    };
    get("f_init_e", c.f_init_e);
    get("p_meas", c.p_meas);
    get("f_1q_e", c.f_1q_e);
    get("f_1q_n", c.f_1q_n);
    get("f_2q", c.f_2q);
    get("x_1q", c.x_1q);
    get("x_2q", c.x_2q);
    get("t1_e", c.t1_e);
    get("t2_e", c.t2_e);
    get("t1_n", c.t1_n);
    get("t2_n", c.t2_n);
    get("zz_rate", c.zz_rate);
    if (j.contains("zz_rates"))
        c.zz_rates = j["zz_rates"].get<std::vector<std::vector<double>>>();
    if (j.contains("durations")) {
        const auto& d = j["durations"];
        auto getd = [&](const char* k, double& field) {
            if (d.contains(k)) field = d[k].get<double>();
        };
        getd("init", c.durations.init);
        getd("meas", c.durations.meas);
        getd("rot_e", c.durations.rot_e);
        getd("rot_n", c.durations.rot_n);
        getd("cond", c.durations.cond);
    }
    return c;
}

// `family` discriminator selects the device module; the device block may sit
// under "device" or at the top level
inline std::unique_ptr<DeviceModel> make_device(const nlohmann::json& doc) {
    std::string family = doc.at("family").get<std::string>();
    const nlohmann::json& j = doc.contains("device") ? doc.at("device") : doc;
    if (family == "ion") return std::make_unique<IonDevice>(ion_config_from_json(j));
    if (family == "nv") return std::make_unique<NVDevice>(nv_config_from_json(j));
    if (family == "atom") return std::make_unique<AtomDevice>(atom_config_from_json(j));
    if (family == "silicon") return std::make_unique<SiliconDevice>(silicon_config_from_json(j));
    if (family == "sc") return std::make_unique<SCDevice>(sc_config_from_json(j));
    throw std::invalid_argument("unknown device family " + family);
}

}  // namespace vqd
