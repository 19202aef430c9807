#pragma once
// Monte-Carlo trajectory estimator: statevector replay of a NoisyProgram with
// Kraus sampling, targeting tr(O rho) of the density engine (CPTN channels
// contribute zero through their leaked branch).

#include <cmath>
#include <cstdint>
#include <vector>

#include "vqd/devkit.hpp"

namespace vqd {

struct TrajectoryEstimate {
    double mean = 0;
    double stderr_ = 0;
    long n_samples = 0;
    long rejected = 0;  // post-selection rejections encountered (retried)
    std::vector<double> term_means;
};

struct SamplerOptions {
    long shots = 10000;
    double tol = 0;       // >0: stop when stderr < tol (checked per batch)
    long max_shots = 1 << 22;
    uint64_t seed = 0;
    int postselect_retries = 1000;
    long batch = 256;     // tolerance-mode check granularity
};

namespace detail {

struct TrajValue {
    double value = 0;
    std::vector<double> terms;
    bool rejected = false;
};

inline TrajValue one_trajectory(const NoisyProgram& prog, const PauliSum& obs, Rng& rng) {
    TrajValue tv;
    auto st = QuantumState::statevector(prog.n_qubits, 0);
    std::map<std::string, int> outcomes;
    bool leaked = false;
    for (const auto& step : prog.steps) {
        if (leaked) break;
        if (!step.cond_label.empty()) {
            auto it = outcomes.find(step.cond_label);
            if (it == outcomes.end())
                throw std::runtime_error("conditional references unknown label " + step.cond_label);
            if (it->second != step.cond_value) continue;
        }
        switch (step.kind) {
            case StepKind::Unitary:
                st.apply_unitary(step.u, step.targets);
                break;
            case StepKind::Reset: {
                for (int q : step.targets) {
                    Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
                    k0(0, 0) = 1;
                    k1(0, 1) = 1;
                    st.sample_kraus({k0, k1}, {q}, rng);
                }
                break;
            }
            case StepKind::Noise:
                if (st.sample_kraus(step.chan.kraus, step.chan.targets, rng) < 0)
                    leaked = true;  // CPTN leaked branch
                break;
            case StepKind::Measure: {
                auto [idx, p] = st.measure_projective(step.projs, step.targets, rng);
                (void)p;
                if (!step.label.empty()) outcomes[step.label] = idx;
                break;
            }
            case StepKind::Filter: {
                int v0 = -1;
                bool first = true;
                for (const auto& l : step.filter_labels) {
                    auto it = outcomes.find(l);
                    if (it == outcomes.end())
                        throw std::runtime_error("FILTER references unknown label " + l);
                    if (first) {
                        v0 = it->second;
                        first = false;
                    } else if (it->second != v0) {
                        tv.rejected = true;
                        return tv;
                    }
                }
                break;
            }
        }
    }
    tv.terms.assign(obs.size(), 0.0);
    if (!leaked) {
        for (size_t t = 0; t < obs.size(); ++t) {
            double v = st.expectation(obs[t]);
            tv.terms[t] = v;
            tv.value += v;
        }
    }
    return tv;
}

}  // namespace detail

inline TrajectoryEstimate sample_expec_pauli_sum(const NoisyProgram& prog, const PauliSum& obs,
                                                 const SamplerOptions& opt = {}) {
    TrajectoryEstimate est;
    est.term_means.assign(obs.size(), 0.0);
    std::vector<double> values;
    std::vector<std::vector<double>> terms;
    long target = opt.tol > 0 ? opt.batch : opt.shots;
    long done = 0;
    long rejected = 0;
    while (true) {
        long n_new = target - done;
        size_t base = values.size();
        values.resize(base + n_new);
        terms.resize(base + n_new);
        std::vector<long> rej(n_new, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
        for (long i = 0; i < n_new; ++i) {
            long shot = done + i;
            detail::TrajValue tv;
            for (int attempt = 0;; ++attempt) {
                if (attempt >= opt.postselect_retries)
                    throw std::runtime_error("post-selection retry cap exhausted in sampler");
                Rng rng(substream_seed(opt.seed, static_cast<uint64_t>(shot) * 1315423911ull + attempt));
                tv = detail::one_trajectory(prog, obs, rng);
                if (!tv.rejected) break;
                ++rej[i];
            }
            values[base + i] = tv.value;
            terms[base + i] = std::move(tv.terms);
        }
        for (long r : rej) rejected += r;
        done = target;
        // deterministic serial reduction (merge order independent of threading)
        double mean = 0;
        for (double v : values) mean += v;
        mean /= done;
        double var = 0;
        for (double v : values) var += (v - mean) * (v - mean);
        double se = done > 1 ? std::sqrt(var / (done - 1.0) / done) : 0.0;
        if (opt.tol <= 0 || se < opt.tol || done >= opt.max_shots) {
            est.mean = mean;
            est.stderr_ = se;
            est.n_samples = done;
            est.rejected = rejected;
            for (size_t t = 0; t < obs.size(); ++t) {
                double m = 0;
                for (const auto& tr : terms) m += tr[t];
                est.term_means[t] = m / done;
            }
            return est;
        }
        target = std::min(opt.max_shots, target * 2);
    }
}

}  // namespace vqd
