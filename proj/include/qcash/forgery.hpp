// forgery.hpp
// Adversaries against the coin scheme.  Every forger sees only the
// black-box oracle handle (reflections plus a query counter) and issued
// coin states; none of them can read the bank secret.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qcash/coin.hpp"
#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"
#include "qcash/rng.hpp"

namespace qcash {

struct ForgerReport {
    int n = 0;
    std::uint64_t k = 0;  // coins held by the forger
    double p = 0.0;       // target overlap parameter
    std::uint64_t queries = 0;
    double achieved_overlap = 0.0;
    std::uint64_t trials = 0;
    bool succeeded = false;
    std::uint64_t seed = 0;
};

inline std::string forger_report_csv_header() {
    return "n,k,p,queries,overlap,succeeded,seed";
}

inline std::string to_csv_row(const ForgerReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << r.n << ',' << r.k << ',' << r.p << ',' << r.queries << ','
        << r.achieved_overlap << ',' << (r.succeeded ? 1 : 0) << ',' << r.seed;
    return out.str();
}

struct RetryForgeResult {
    ForgerReport report;
    // Present on success; certified equal to the secret by the accepting
    // verification, which projects the candidate onto it.
    std::optional<QuantumState> state;
};

// Measure-and-retry forger: sample Haar candidates and submit each to the
// verifier until one is accepted.  Success takes 2^n tries in expectation.
inline RetryForgeResult retry_forger(CoinOracle& oracle, RngSeed seed,
                                     std::uint64_t max_tries) {
    if (max_tries < 1) throw ParameterError("max_tries must be positive");
    const int n = oracle.coin_qubits();
    Rng rng(seed);
    RetryForgeResult result;
    result.report.n = n;
    result.report.p = 1.0;
    result.report.seed = seed.value;
    for (std::uint64_t t = 0; t < max_tries; ++t) {
        QuantumState candidate = haar_random_state(n, rng);
        VerifyResult v = verify(oracle, candidate, rng);
        ++result.report.trials;
        ++result.report.queries;
        if (v.accepted) {
            result.report.succeeded = true;
            result.report.achieved_overlap = 1.0;
            result.state = std::move(v.post_state);
            break;
        }
    }
    return result;
}

// Smallest iteration count whose amplification angle reaches the target,
// with a guard against float error on exact-integer boundaries.
inline std::uint64_t amplification_iterations(int n, double target_p) {
    if (!(target_p > 0.0 && target_p <= 1.0)) {
        throw ParameterError("target overlap must lie in (0, 1]");
    }
    const double theta = std::asin(std::pow(2.0, -0.5 * n));
    const double needed = std::asin(std::sqrt(target_p));
    const double raw = (needed / theta - 1.0) / 2.0;
    const double guarded = std::ceil(raw - 1e-9);
    return guarded <= 0.0 ? 0 : static_cast<std::uint64_t>(guarded);
}

inline double amplification_overlap(int n, std::uint64_t iterations) {
    const double theta = std::asin(std::pow(2.0, -0.5 * n));
    const double s = std::sin((2.0 * static_cast<double>(iterations) + 1.0) * theta);
    return std::min(s * s, 1.0);
}

struct GroverForgeResult {
    ForgerReport report;
    QuantumState state;
};

// Amplitude-amplification forger: from the uniform superposition,
// alternate the secret-state reflection (one query each) with a reflection
// about the start state.  The reported overlap is the closed form
// sin^2((2t+1) theta); it equals the simulated overlap exactly when the
// start overlap is the canonical 2^{-n/2}, e.g. for basis-state secrets.
// When the target needs a half-integer iteration count the achieved
// overlap overshoots past the peak and is reported as is.
inline GroverForgeResult grover_forger(CoinOracle& oracle, double target_p,
                                       RngSeed seed) {
    const int n = oracle.coin_qubits();
    const std::uint64_t t = amplification_iterations(n, target_p);

    QuantumState start(n);
    for (int q = 0; q < n; ++q) apply_hadamard(start, q);
    QuantumState state = start;
    for (std::uint64_t i = 0; i < t; ++i) {
        oracle.apply(state);
        apply_reflection_about(state, start);
    }

    GroverForgeResult result{ForgerReport{}, std::move(state)};
    result.report.n = n;
    result.report.p = target_p;
    result.report.queries = t;
    result.report.trials = 1;
    result.report.achieved_overlap = amplification_overlap(n, t);
    result.report.succeeded = result.report.achieved_overlap >= target_p - 1e-9;
    result.report.seed = seed.value;
    return result;
}

struct ForgeBoundParams {
    int n = 0;
    std::uint64_t k = 0;
    double p = 0.0;
};

// Query lower bound sqrt(2^n p)/(k log2 k) - k, clamped at zero.  The
// k = 0 case is pure search (denominator 1) and k = 1 keeps denominator 1;
// the asymptotic constant is taken as 1, so values are shape-only.
inline double theoretical_bound(const ForgeBoundParams& params) {
    if (params.n < 1) throw ParameterError("n must be positive");
    if (!(params.p > 0.0 && params.p <= 1.0)) {
        throw ParameterError("p must lie in (0, 1]");
    }
    const double root = std::sqrt(std::exp2(static_cast<double>(params.n)) * params.p);
    const double k = static_cast<double>(params.k);
    const double denom = params.k <= 1 ? 1.0 : k * std::max(1.0, std::log2(k));
    return std::max(0.0, root / denom - k);
}

struct ScalingRow {
    int n = 0;
    std::uint64_t queries = 0;
    double sqrt_dim = 0.0;
    double ratio = 0.0;
};

// Runs the amplification forger across a qubit range at fixed target
// overlap and tabulates queries against sqrt(2^n).  Schemes use
// basis-state secrets so the canonical-angle geometry is exact.
inline std::vector<ScalingRow> query_scaling_experiment(int n_lo, int n_hi, double p,
                                                        RngSeed seed) {
    if (n_lo < 1 || n_hi < n_lo) throw ParameterError("bad qubit range");
    std::vector<ScalingRow> rows;
    for (int n = n_lo; n <= n_hi; ++n) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(n)));
        CoinScheme scheme = CoinScheme::with_state(
            QuantumState::basis(n, rng.below(std::uint64_t{1} << n)));
        CoinOracle oracle = scheme.oracle();
        GroverForgeResult res = grover_forger(oracle, p, seed);
        ScalingRow row;
        row.n = n;
        row.queries = res.report.queries;
        row.sqrt_dim = std::exp2(0.5 * n);
        row.ratio = static_cast<double>(row.queries) / row.sqrt_dim;
        rows.push_back(row);
    }
    return rows;
}

// (k+1)-register overlap of a product forgery: the forger holds k genuine
// registers plus one fabricated register, and the joint overlap with the
// secret's (k+1)-fold tensor power factorizes into per-register overlaps.
inline double kfold_overlap(const QuantumState& psi,
                            const std::vector<QuantumState>& registers) {
    if (registers.empty()) throw ParameterError("no registers supplied");
    double product = 1.0;
    for (const QuantumState& r : registers) product *= fidelity(psi, r);
    return product;
}

struct BB84CoinSpec {
    int n = 0;
    std::vector<std::uint8_t> bits;   // encoded bit per qubit
    std::vector<std::uint8_t> bases;  // 0 computational, 1 Hadamard
};

inline BB84CoinSpec random_bb84_spec(int n, Rng& rng) {
    if (n < 1 || n > kMaxQubits) throw ParameterError("qubit count out of range");
    BB84CoinSpec spec;
    spec.n = n;
    for (int q = 0; q < n; ++q) {
        spec.bits.push_back(static_cast<std::uint8_t>(rng.below(2)));
        spec.bases.push_back(static_cast<std::uint8_t>(rng.below(2)));
    }
    return spec;
}

// Product state |b_0..b_{n-1}> with H applied on Hadamard-basis positions.
inline QuantumState bb84_state(const BB84CoinSpec& spec) {
    if (spec.bits.size() != static_cast<std::size_t>(spec.n) ||
        spec.bases.size() != static_cast<std::size_t>(spec.n)) {
        throw ParameterError("spec field lengths do not match n");
    }
    std::uint64_t index = 0;
    for (int q = 0; q < spec.n; ++q) {
        index = (index << 1) | spec.bits[static_cast<std::size_t>(q)];
    }
    QuantumState s = QuantumState::basis(spec.n, index);
    for (int q = 0; q < spec.n; ++q) {
        if (spec.bases[static_cast<std::size_t>(q)]) apply_hadamard(s, q);
    }
    return s;
}

struct BB84AttackReport {
    BB84CoinSpec recovered;
    bool success = false;          // exact recovery of every basis and bit
    double per_qubit_recovery = 0.0;
    double forged_pass_rate = 0.0; // per-qubit honest checks passed by forged coins
    std::uint64_t copies = 0;
};

// Measure-in-both-bases attack on basis-encoded coins.  The adversary
// spends ceil(k/2) copies on computational-basis readout and the rest on
// Hadamard-basis readout.  The true basis always produces a constant
// record; a constant record in the other basis (probability 2^{1-m} for m
// wrong-basis copies) forces a uniform tie-break.  Forged coins are then
// graded per qubit by an honest verifier measuring in the true basis.
inline BB84AttackReport bb84_attack(const BB84CoinSpec& spec, int copies,
                                    RngSeed seed, int forged_coins = 50) {
    if (copies < 2) throw ParameterError("need at least 2 copies");
    if (forged_coins < 1) throw ParameterError("need at least 1 forged coin");
    const int n = spec.n;
    const int comp_copies = (copies + 1) / 2;
    Rng rng(seed);

    // records[q][c]: outcome of copy c at qubit q; copies below comp_copies
    // are read in the computational basis, the rest in the Hadamard basis.
    std::vector<std::vector<std::uint8_t>> records(
        static_cast<std::size_t>(n), std::vector<std::uint8_t>(static_cast<std::size_t>(copies)));
    for (int c = 0; c < copies; ++c) {
        QuantumState coin = bb84_state(spec);
        const bool hadamard_readout = c >= comp_copies;
        if (hadamard_readout) {
            for (int q = 0; q < n; ++q) apply_hadamard(coin, q);
        }
        for (int q = 0; q < n; ++q) {
            records[static_cast<std::size_t>(q)][static_cast<std::size_t>(c)] =
                static_cast<std::uint8_t>(measure_qubit(coin, q, rng));
        }
    }

    BB84AttackReport report;
    report.copies = static_cast<std::uint64_t>(copies);
    report.recovered.n = n;
    int qubits_right = 0;
    for (int q = 0; q < n; ++q) {
        const auto& rec = records[static_cast<std::size_t>(q)];
        bool comp_constant = true, had_constant = true;
        for (int c = 1; c < comp_copies; ++c) {
            if (rec[static_cast<std::size_t>(c)] != rec[0]) comp_constant = false;
        }
        for (int c = comp_copies + 1; c < copies; ++c) {
            if (rec[static_cast<std::size_t>(c)] != rec[static_cast<std::size_t>(comp_copies)]) {
                had_constant = false;
            }
        }
        std::uint8_t basis_guess;
        if (comp_constant && !had_constant) {
            basis_guess = 0;
        } else if (had_constant && !comp_constant) {
            basis_guess = 1;
        } else {
            basis_guess = static_cast<std::uint8_t>(rng.below(2));
        }
        std::uint8_t bit_guess = basis_guess == 0
                                     ? rec[0]
                                     : rec[static_cast<std::size_t>(comp_copies)];
        report.recovered.bases.push_back(basis_guess);
        report.recovered.bits.push_back(bit_guess);
        if (basis_guess == spec.bases[static_cast<std::size_t>(q)] &&
            bit_guess == spec.bits[static_cast<std::size_t>(q)]) {
            ++qubits_right;
        }
    }
    report.per_qubit_recovery = static_cast<double>(qubits_right) / n;
    report.success = qubits_right == n;

    // Honest per-qubit grading of coins forged from the recovered spec.
    std::uint64_t passes = 0;
    for (int f = 0; f < forged_coins; ++f) {
        QuantumState forged = bb84_state(report.recovered);
        for (int q = 0; q < n; ++q) {
            if (spec.bases[static_cast<std::size_t>(q)]) apply_hadamard(forged, q);
        }
        for (int q = 0; q < n; ++q) {
            int outcome = measure_qubit(forged, q, rng);
            if (outcome == spec.bits[static_cast<std::size_t>(q)]) ++passes;
        }
    }
    report.forged_pass_rate =
        static_cast<double>(passes) / (static_cast<double>(forged_coins) * n);
    return report;
}

} // namespace qcash
