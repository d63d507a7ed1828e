// coin.hpp
// Quantum coin scheme: a bank secret psi, minting with an issuance cap,
// and the one-ancilla verification circuit
//
//   ancilla |0> -- H -- controlled-U_psi -- H -- measure
//
// with U_psi = I - 2|psi><psi|.  The ancilla reads 1 on acceptance;
// acceptance probability is |<psi|input>|^2 and an accepted coin collapses
// back to psi (up to global phase).

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"
#include "qcash/rng.hpp"
#include "qcash/serialize.hpp"

namespace qcash {

// Provenance value carried by states that were never minted by the bank.
inline constexpr std::uint64_t kForgedProvenance = ~std::uint64_t{0};

struct Coin {
    QuantumState state;
    // Trace tag for experiment bookkeeping; adversary-facing interfaces
    // accept bare QuantumStates and never see it.
    std::uint64_t provenance = kForgedProvenance;
};

// Black-box handle on U_psi.  Holds psi privately; the public surface is
// reflection application plus a query counter, nothing that reads psi out.
class CoinOracle {
public:
    int coin_qubits() const { return psi_.qubits(); }
    std::uint64_t queries() const { return queries_; }
    void reset_queries() { queries_ = 0; }

    // Controlled-U_psi inside a larger register; one query.
    void apply_controlled(QuantumState& state, int control, QubitRange targets) {
        ++queries_;
        apply_controlled_reflection(state, control, targets, psi_);
    }

    // Bare U_psi on a coin-sized register; one query.
    void apply(QuantumState& state) {
        ++queries_;
        apply_reflection_about(state, psi_);
    }

private:
    friend class CoinScheme;
    explicit CoinOracle(QuantumState psi) : psi_(std::move(psi)) {}

    QuantumState psi_;
    std::uint64_t queries_ = 0;
};

class CoinScheme {
public:
    // Haar-random secret.  cap = 0 selects the default issuance cap n^3.
    static CoinScheme create(int n, RngSeed seed, std::uint64_t cap = 0) {
        Rng rng(derive_stream(seed, 0x5c11));
        return CoinScheme(haar_random_state(n, rng), cap);
    }

    // Explicit secret, for fixtures and cross-checks.
    static CoinScheme with_state(QuantumState psi, std::uint64_t cap = 0) {
        return CoinScheme(std::move(psi), cap);
    }

    CoinScheme(const CoinScheme& other)
        : psi_(other.psi_), cap_(other.cap_), issued_(other.issued_.load()) {}

    CoinScheme& operator=(const CoinScheme& other) {
        psi_ = other.psi_;
        cap_ = other.cap_;
        issued_.store(other.issued_.load());
        return *this;
    }

    int qubits() const { return psi_.qubits(); }
    std::uint64_t issued_count() const { return issued_.load(); }
    std::uint64_t issue_cap() const { return cap_; }

    // Bank-side access.  Adversary code paths must go through oracle().
    const QuantumState& secret_state() const { return psi_; }

    CoinOracle oracle() const { return CoinOracle(psi_); }

    Coin mint() {
        std::uint64_t cur = issued_.load();
        do {
            if (cur >= cap_) {
                throw IssuanceCapError("issuance cap " + std::to_string(cap_) +
                                       " reached");
            }
        } while (!issued_.compare_exchange_weak(cur, cur + 1));
        return Coin{psi_, cur};
    }

private:
    CoinScheme(QuantumState psi, std::uint64_t cap)
        : psi_(std::move(psi)),
          cap_(cap ? cap : default_cap(psi_.qubits())) {}

    static std::uint64_t default_cap(int n) {
        return std::uint64_t(n) * n * n;
    }

    QuantumState psi_;
    std::uint64_t cap_;
    std::atomic<std::uint64_t> issued_{0};
};

struct VerifyResult {
    bool accepted = false;
    QuantumState post_state;
    int ancilla_outcome = 0;
};

// Runs the verification circuit through the black-box oracle.  Costs one
// oracle query; the returned post state is the collapsed coin register.
inline VerifyResult verify(CoinOracle& oracle, const QuantumState& coin_state, Rng& rng) {
    const int n = oracle.coin_qubits();
    if (coin_state.qubits() != n) {
        throw ParameterError("coin register width does not match scheme");
    }
    QuantumState joint = tensor(QuantumState(1), coin_state);
    apply_hadamard(joint, 0);
    oracle.apply_controlled(joint, 0, QubitRange{1, n});
    apply_hadamard(joint, 0);
    const int outcome = measure_qubit(joint, 0, rng);
    QuantumState post = drop_prefix(joint, 1, static_cast<std::uint64_t>(outcome));
    return VerifyResult{outcome == 1, std::move(post), outcome};
}

inline VerifyResult verify(CoinOracle& oracle, const QuantumState& coin_state,
                           RngSeed seed) {
    Rng rng(seed);
    return verify(oracle, coin_state, rng);
}

struct AnalyticVerify {
    double accept_probability = 0.0;
    // A branch is absent when its projection has (numerically) zero weight.
    std::optional<QuantumState> post_accept;
    std::optional<QuantumState> post_reject;
};

// Projector cross-check for the circuit: accept branch projects onto
// |psi><psi|, reject branch onto its complement.
inline AnalyticVerify verify_analytic(const CoinScheme& scheme, const QuantumState& state) {
    const QuantumState& psi = scheme.secret_state();
    if (state.qubits() != psi.qubits()) {
        throw ParameterError("state width does not match scheme");
    }
    Complex amp = inner_product(psi, state);
    AnalyticVerify out;
    out.accept_probability = std::clamp(std::norm(amp), 0.0, 1.0);
    if (out.accept_probability > 1e-12) {
        QuantumState accept = psi;
        auto amps = accept.amplitudes();
        Complex phase = amp / std::abs(amp);
        for (std::uint64_t i = 0; i < accept.dim(); ++i) amps[i] *= phase;
        out.post_accept = std::move(accept);
    }
    if (1.0 - out.accept_probability > 1e-12) {
        QuantumState reject = state;
        auto amps = reject.amplitudes();
        for (std::uint64_t i = 0; i < reject.dim(); ++i) amps[i] -= amp * psi[i];
        reject.renormalize();
        out.post_reject = std::move(reject);
    }
    return out;
}

struct TransferReport {
    std::vector<std::uint8_t> round_accepts;
    std::uint64_t accept_count = 0;
    double final_fidelity = 0.0;
};

// Verifies one coin `rounds` times in sequence, modelling repeated
// spend-and-check hops of the same physical token.
inline TransferReport transfer_chain(const CoinScheme& scheme, const Coin& coin,
                                     int rounds, RngSeed seed) {
    if (rounds < 1) throw ParameterError("rounds must be positive");
    CoinOracle oracle = scheme.oracle();
    Rng rng(derive_stream(seed, 0x7c41));
    TransferReport report;
    report.round_accepts.reserve(static_cast<std::size_t>(rounds));
    QuantumState current = coin.state;
    for (int r = 0; r < rounds; ++r) {
        VerifyResult v = verify(oracle, current, rng);
        report.round_accepts.push_back(v.accepted ? 1 : 0);
        report.accept_count += v.accepted;
        current = std::move(v.post_state);
    }
    report.final_fidelity = fidelity(current, scheme.secret_state());
    return report;
}

struct RobustnessReport {
    std::uint64_t trials = 0;
    std::uint64_t passes = 0;
    double pass_rate = 0.0;
    double mean_post_fidelity_given_pass = 0.0;
};

// Fresh coin per trial, perturbed with amplitude epsilon, verified once.
inline RobustnessReport robustness_experiment(CoinScheme& scheme, double epsilon,
                                              int trials, RngSeed seed) {
    if (trials < 1) throw ParameterError("trials must be positive");
    RobustnessReport report;
    report.trials = static_cast<std::uint64_t>(trials);
    CoinOracle oracle = scheme.oracle();
    double fidelity_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_trial_seed(seed, static_cast<std::uint64_t>(t)));
        QuantumState noisy = perturb(scheme.secret_state(), epsilon, rng);
        VerifyResult v = verify(oracle, noisy, rng);
        if (v.accepted) {
            ++report.passes;
            fidelity_sum += fidelity(v.post_state, scheme.secret_state());
        }
    }
    report.pass_rate = static_cast<double>(report.passes) / trials;
    if (report.passes > 0) {
        report.mean_post_fidelity_given_pass = fidelity_sum / report.passes;
    }
    return report;
}

struct AnonymityReport {
    bool honest = true;
    int users = 0;
    std::uint64_t trials = 0;
    std::uint64_t correct = 0;
    double accuracy = 0.0;
    // The bank always plays the same strategy; recorded for the report.
    std::string strategy = "computational-basis maximum-likelihood, uniform tie-break";
};

// Spender-tracing experiment.  Honest bank: every user holds the same psi,
// so the likelihoods tie and identification is chance.  Cheating bank:
// user u is handed the marked state |u> (all marks pass a relaxed verifier
// that accepts the span of the marks), and the measurement identifies the
// spender outright.
inline AnonymityReport anonymity_experiment(bool honest, int users, int trials,
                                            RngSeed seed, int n = 0) {
    if (users < 2) throw ParameterError("need at least 2 users");
    if (trials < 1) throw ParameterError("trials must be positive");
    if (n == 0) {
        n = 1;
        while ((std::uint64_t{1} << n) < static_cast<std::uint64_t>(users)) ++n;
    }
    if (!honest && (std::uint64_t{1} << n) < static_cast<std::uint64_t>(users)) {
        throw ParameterError("cheating bank needs 2^n >= users for orthogonal marks");
    }
    AnonymityReport report;
    report.honest = honest;
    report.users = users;
    report.trials = static_cast<std::uint64_t>(trials);

    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_trial_seed(seed, static_cast<std::uint64_t>(t)));
        CoinScheme scheme = CoinScheme::create(n, RngSeed{rng.next_u64()});
        const int spender = static_cast<int>(rng.below(static_cast<std::uint64_t>(users)));

        QuantumState spent = honest ? scheme.secret_state()
                                    : QuantumState::basis(n, static_cast<std::uint64_t>(spender));
        std::uint64_t outcome = measure_all(spent, rng);

        // Likelihood of the observed outcome under each user's coin.
        std::vector<int> best;
        double best_likelihood = -1.0;
        for (int u = 0; u < users; ++u) {
            double like;
            if (honest) {
                like = std::norm(scheme.secret_state()[outcome]);
            } else {
                like = (outcome == static_cast<std::uint64_t>(u)) ? 1.0 : 0.0;
            }
            if (like > best_likelihood + 1e-12) {
                best_likelihood = like;
                best.assign(1, u);
            } else if (like > best_likelihood - 1e-12) {
                best.push_back(u);
            }
        }
        const int guess = best[rng.below(best.size())];
        if (guess == spender) ++report.correct;
    }
    report.accuracy = static_cast<double>(report.correct) / trials;
    return report;
}

// Scheme fixture format ("QSC1"): flags byte (bit 0 marks the secret
// payload), qubit count, issued count, cap, then the psi amplitude block.
inline constexpr std::uint8_t kSchemeSecretFlag = 0x01;

inline std::vector<std::uint8_t> scheme_to_bytes(const CoinScheme& scheme) {
    ByteWriter w;
    w.magic("QSC1");
    w.u8(kSchemeSecretFlag);
    w.u32(static_cast<std::uint32_t>(scheme.qubits()));
    w.u64(scheme.issued_count());
    w.u64(scheme.issue_cap());
    put_amplitudes(w, scheme.secret_state());
    return w.bytes();
}

inline CoinScheme scheme_from_bytes(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes));
    r.expect_magic("QSC1");
    std::uint8_t flags = r.u8();
    if (!(flags & kSchemeSecretFlag)) {
        throw IoError("scheme record is missing the secret payload flag");
    }
    std::uint32_t n = r.u32();
    if (n < 1 || n > static_cast<std::uint32_t>(kMaxQubits)) {
        throw IoError("scheme record has invalid qubit count");
    }
    std::uint64_t issued = r.u64();
    std::uint64_t cap = r.u64();
    QuantumState psi = get_amplitudes(r, static_cast<int>(n));
    if (!r.exhausted()) throw IoError("trailing bytes after scheme record");
    if (cap == 0 || issued > cap) throw IoError("scheme record has invalid issuance counters");
    CoinScheme scheme = CoinScheme::with_state(std::move(psi), cap);
    while (scheme.issued_count() < issued) scheme.mint();
    return scheme;
}

inline void write_scheme(const std::string& path, const CoinScheme& scheme) {
    write_file(path, scheme_to_bytes(scheme));
}

inline CoinScheme read_scheme(const std::string& path) {
    return scheme_from_bytes(read_file(path));
}

} // namespace qcash
