// qstate.hpp
// Dense statevector engine: exactly the primitives the money circuits need.
//
// Conventions, fixed once:
//   * Qubit 0 is the MOST significant bit of the amplitude index, so the
//     basis state |b0 b1 ... b_{n-1}> sits at index sum b_q * 2^(n-1-q).
//   * Gates never renormalize; renormalization is an explicit operation.
//     Measurement renormalizes the surviving branch as part of its contract.
//   * Norm tolerances: 1e-12 for single algebraic identities, 1e-9 for
//     accumulated pipelines.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qcash/errors.hpp"
#include "qcash/rng.hpp"

namespace qcash {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-9;

// Largest register the engine will allocate (16M amplitudes, 256 MiB).
inline constexpr int kMaxQubits = 24;
// Documented cap for Haar sampling; desk-scale experiments stay well below.
inline constexpr int kMaxHaarQubits = 20;

// A contiguous run of qubit indices [first, first + count).
struct QubitRange {
    int first = 0;
    int count = 0;
};

class QuantumState {
public:
    // |00...0> on n qubits.
    explicit QuantumState(int n) : n_(checked_qubits(n)), amps_(std::size_t{1} << n) {
        amps_[0] = Complex{1.0, 0.0};
    }

    // Computational basis state |index> on n qubits.
    static QuantumState basis(int n, std::uint64_t index) {
        QuantumState s(n);
        if (index >= s.dim()) {
            throw ParameterError("basis index " + std::to_string(index) +
                                 " out of range for " + std::to_string(n) + " qubits");
        }
        s.amps_[0] = Complex{0.0, 0.0};
        s.amps_[index] = Complex{1.0, 0.0};
        return s;
    }

    // Adopts an amplitude vector; the caller must supply a normalized one.
    static QuantumState from_amplitudes(int n, std::vector<Complex> amps) {
        checked_qubits(n);
        if (amps.size() != (std::size_t{1} << n)) {
            throw ParameterError("amplitude vector length does not match qubit count");
        }
        QuantumState s(n, std::move(amps));
        if (std::abs(s.squared_norm() - 1.0) > kNormTolerance) {
            throw ParameterError("amplitude vector is not normalized");
        }
        return s;
    }

    int qubits() const { return n_; }
    std::uint64_t dim() const { return amps_.size(); }

    std::span<const Complex> amplitudes() const { return amps_; }
    std::span<Complex> amplitudes() { return amps_; }

    const Complex& operator[](std::uint64_t i) const { return amps_[i]; }
    Complex& operator[](std::uint64_t i) { return amps_[i]; }

    double squared_norm() const {
        double total = 0.0;
        for (const Complex& a : amps_) total += std::norm(a);
        return total;
    }

    // Explicit renormalization; throws on a (numerically) zero vector.
    void renormalize() {
        double norm = std::sqrt(squared_norm());
        if (norm < 1e-300) throw ParameterError("cannot renormalize a zero vector");
        for (Complex& a : amps_) a /= norm;
    }

    // Bit mask selecting qubit q in the amplitude index.
    std::uint64_t qubit_mask(int q) const {
        require_qubit(q);
        return std::uint64_t{1} << (n_ - 1 - q);
    }

    void require_qubit(int q) const {
        if (q < 0 || q >= n_) {
            throw ParameterError("qubit index " + std::to_string(q) +
                                 " out of range for " + std::to_string(n_) + " qubits");
        }
    }

private:
    QuantumState(int n, std::vector<Complex> amps) : n_(n), amps_(std::move(amps)) {}

    static int checked_qubits(int n) {
        if (n < 1 || n > kMaxQubits) {
            throw ParameterError("qubit count " + std::to_string(n) +
                                 " outside [1, " + std::to_string(kMaxQubits) + "]");
        }
        return n;
    }

    int n_;
    std::vector<Complex> amps_;
};

// <a|b>.
inline Complex inner_product(const QuantumState& a, const QuantumState& b) {
    if (a.qubits() != b.qubits()) {
        throw ParameterError("inner product requires equal qubit counts");
    }
    Complex sum{0.0, 0.0};
    for (std::uint64_t i = 0; i < a.dim(); ++i) {
        sum += std::conj(a[i]) * b[i];
    }
    return sum;
}

// |<a|b>|^2, clamped into [0, 1] against rounding.
inline double fidelity(const QuantumState& a, const QuantumState& b) {
    double f = std::norm(inner_product(a, b));
    return std::clamp(f, 0.0, 1.0);
}

// |a> (x) |b>; a's qubits become the leading (most significant) block.
inline QuantumState tensor(const QuantumState& a, const QuantumState& b) {
    QuantumState out(a.qubits() + b.qubits());
    auto amps = out.amplitudes();
    std::uint64_t db = b.dim();
    for (std::uint64_t i = 0; i < a.dim(); ++i) {
        for (std::uint64_t j = 0; j < db; ++j) {
            amps[i * db + j] = a[i] * b[j];
        }
    }
    return out;
}

// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes,
// normalized.  Exactly Haar for pure states.
inline QuantumState haar_random_state(int n, Rng& rng) {
    if (n < 1 || n > kMaxHaarQubits) {
        throw ParameterError("Haar sampling supports 1.." +
                             std::to_string(kMaxHaarQubits) + " qubits");
    }
    QuantumState s(n);
    auto amps = s.amplitudes();
    for (Complex& a : amps) {
        a = Complex{rng.normal(), rng.normal()};
    }
    s.renormalize();
    return s;
}

inline QuantumState haar_random_state(int n, RngSeed seed) {
    Rng rng(seed);
    return haar_random_state(n, rng);
}

// In-place Hadamard on one qubit.
inline void apply_hadamard(QuantumState& state, int qubit) {
    const std::uint64_t mask = state.qubit_mask(qubit);
    const double inv_sqrt2 = 0.7071067811865476;
    auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        if (i & mask) continue;
        Complex a = amps[i];
        Complex b = amps[i | mask];
        amps[i] = (a + b) * inv_sqrt2;
        amps[i | mask] = (a - b) * inv_sqrt2;
    }
}

enum class Pauli { X, Z };

// In-place Pauli X or Z on one qubit.
inline void apply_pauli(QuantumState& state, int qubit, Pauli which) {
    const std::uint64_t mask = state.qubit_mask(qubit);
    auto amps = state.amplitudes();
    if (which == Pauli::X) {
        for (std::uint64_t i = 0; i < state.dim(); ++i) {
            if (!(i & mask)) std::swap(amps[i], amps[i | mask]);
        }
    } else {
        for (std::uint64_t i = 0; i < state.dim(); ++i) {
            if (i & mask) amps[i] = -amps[i];
        }
    }
}

// Reflection I - 2|psi><psi| applied to the whole register: a rank-1
// update, never a materialized matrix.
inline void apply_reflection_about(QuantumState& state, const QuantumState& psi) {
    if (state.qubits() != psi.qubits()) {
        throw ParameterError("reflection state dimension mismatch");
    }
    Complex dot = inner_product(psi, state);
    auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        amps[i] -= 2.0 * dot * psi[i];
    }
}

// Controlled reflection |0><0| (x) I + |1><1| (x) (I - 2|psi><psi|) with the
// reflection acting on a contiguous target range.  On every control=1 block
// the target amplitudes are updated as v -> v - 2<psi|v> psi.
inline void apply_controlled_reflection(QuantumState& state, int control,
                                        QubitRange targets, const QuantumState& psi) {
    const int n = state.qubits();
    state.require_qubit(control);
    if (targets.count < 1 || targets.first < 0 || targets.first + targets.count > n) {
        throw ParameterError("target range out of bounds");
    }
    if (psi.qubits() != targets.count) {
        throw ParameterError("reflection state does not match target range width");
    }
    if (control >= targets.first && control < targets.first + targets.count) {
        throw ParameterError("control qubit overlaps target range");
    }
    const int field_shift = n - targets.first - targets.count;
    const std::uint64_t field_mask = ((std::uint64_t{1} << targets.count) - 1)
                                     << field_shift;
    const std::uint64_t control_mask = state.qubit_mask(control);
    const std::uint64_t block = std::uint64_t{1} << targets.count;
    auto amps = state.amplitudes();
    for (std::uint64_t base = 0; base < state.dim(); ++base) {
        if (!(base & control_mask) || (base & field_mask)) continue;
        Complex dot{0.0, 0.0};
        for (std::uint64_t s = 0; s < block; ++s) {
            dot += std::conj(psi[s]) * amps[base | (s << field_shift)];
        }
        dot *= 2.0;
        for (std::uint64_t s = 0; s < block; ++s) {
            amps[base | (s << field_shift)] -= dot * psi[s];
        }
    }
}

// Born-rule measurement of one qubit.  Returns the outcome and leaves the
// state collapsed and renormalized on all n qubits.
inline int measure_qubit(QuantumState& state, int qubit, Rng& rng) {
    const std::uint64_t mask = state.qubit_mask(qubit);
    auto amps = state.amplitudes();
    double p_one = 0.0;
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        if (i & mask) p_one += std::norm(amps[i]);
    }
    p_one = std::clamp(p_one, 0.0, 1.0);
    const int outcome = rng.uniform() < p_one ? 1 : 0;
    const double keep_prob = outcome ? p_one : 1.0 - p_one;
    const double scale = 1.0 / std::sqrt(keep_prob);
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        bool bit = (i & mask) != 0;
        if (bit != static_cast<bool>(outcome)) {
            amps[i] = Complex{0.0, 0.0};
        } else {
            amps[i] *= scale;
        }
    }
    return outcome;
}

inline int measure_qubit(QuantumState& state, int qubit, RngSeed seed) {
    Rng rng(seed);
    return measure_qubit(state, qubit, rng);
}

// Joint computational-basis measurement of the leading `count` qubits.
inline std::uint64_t measure_prefix(QuantumState& state, int count, Rng& rng) {
    if (count < 1 || count > state.qubits()) {
        throw ParameterError("prefix width out of range");
    }
    const int rest = state.qubits() - count;
    const std::uint64_t block = std::uint64_t{1} << rest;
    const std::uint64_t values = std::uint64_t{1} << count;
    auto amps = state.amplitudes();

    double u = rng.uniform();
    std::uint64_t picked = values - 1;
    double cumulative = 0.0;
    double picked_prob = 0.0;
    for (std::uint64_t v = 0; v < values; ++v) {
        double p = 0.0;
        for (std::uint64_t j = 0; j < block; ++j) p += std::norm(amps[v * block + j]);
        cumulative += p;
        if (u < cumulative) {
            picked = v;
            picked_prob = p;
            break;
        }
        picked_prob = p; // falls through to the last value on rounding
    }
    const double scale = 1.0 / std::sqrt(picked_prob);
    for (std::uint64_t v = 0; v < values; ++v) {
        for (std::uint64_t j = 0; j < block; ++j) {
            std::uint64_t i = v * block + j;
            amps[i] = (v == picked) ? amps[i] * scale : Complex{0.0, 0.0};
        }
    }
    return picked;
}

// Full-register measurement; collapses to a basis state.
inline std::uint64_t measure_all(QuantumState& state, Rng& rng) {
    return measure_prefix(state, state.qubits(), rng);
}

// Extracts the trailing register after the leading `count` qubits have
// collapsed to |value>.
inline QuantumState drop_prefix(const QuantumState& state, int count, std::uint64_t value) {
    if (count < 1 || count >= state.qubits()) {
        throw ParameterError("prefix width out of range");
    }
    const int rest = state.qubits() - count;
    const std::uint64_t block = std::uint64_t{1} << rest;
    std::vector<Complex> amps(block);
    for (std::uint64_t j = 0; j < block; ++j) {
        amps[j] = state[value * block + j];
    }
    QuantumState out = QuantumState::basis(rest, 0);
    std::copy(amps.begin(), amps.end(), out.amplitudes().begin());
    out.renormalize();
    return out;
}

// Additive noise channel: (psi + eps * eta)/||psi + eps * eta|| with eta
// Haar-random.  eps = 0 returns the input unchanged.
inline QuantumState perturb(const QuantumState& state, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ParameterError("epsilon outside [0, 1]");
    }
    if (epsilon == 0.0) return state;
    QuantumState eta = haar_random_state(state.qubits(), rng);
    QuantumState out = state;
    auto amps = out.amplitudes();
    for (std::uint64_t i = 0; i < out.dim(); ++i) {
        amps[i] += epsilon * eta[i];
    }
    out.renormalize();
    return out;
}

inline QuantumState perturb(const QuantumState& state, double epsilon, RngSeed seed) {
    Rng rng(seed);
    return perturb(state, epsilon, rng);
}

} // namespace qcash
