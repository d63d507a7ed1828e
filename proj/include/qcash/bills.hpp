// bills.hpp
// Quantum bills over a cyclic group: labels of the orbit {b + x*a mod m'}
// are shifted by a permutation circuit whose eigenstates
//
//   |psi_k> = (1/sqrt m) sum_x e^{-2 pi i k x / m} |r(b + x a)>
//
// carry eigenvalue e^{2 pi i k / m}.  Minting runs phase estimation from
// |r(b)> to draw a random (k, |psi_k>) pair; verification re-estimates and
// checks k against the published list.  In exact mode (m divides 2^t)
// estimation is deterministic.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"
#include "qcash/rng.hpp"
#include "qcash/serialize.hpp"

namespace qcash {

struct BillSchemeParams {
    std::uint64_t modulus = 8;  // m', the ambient cyclic group size
    std::uint64_t a = 1;        // shift generator
    std::uint64_t b = 0;        // orbit base point
    int t = 3;                  // precision-register width
    int slack = 2;              // label width beyond ceil(log2 m)
    bool exact = true;          // require m | 2^t
};

struct Bill {
    std::uint64_t k = 0;
    QuantumState state{1}; // label register, w qubits
};

class BillScheme {
public:
    static BillScheme create(const BillSchemeParams& params, RngSeed key_seed) {
        if (params.modulus < 2) throw ParameterError("group modulus must be at least 2");
        if (params.a == 0 || params.a >= params.modulus || params.b >= params.modulus) {
            throw ParameterError("group elements must lie in [0, modulus), a nonzero");
        }
        if (params.t < 1 || params.slack < 0) {
            throw ParameterError("bad register widths");
        }
        BillScheme s;
        s.params_ = params;
        s.m_ = params.modulus / std::gcd(params.a, params.modulus);
        if (s.m_ < 2) throw ParameterError("shift generator has trivial order");
        if (params.exact && ((std::uint64_t{1} << params.t) % s.m_ != 0)) {
            throw ParameterError("exact mode needs the group order to divide 2^t");
        }
        int w = 0;
        while ((std::uint64_t{1} << w) < s.m_) ++w;
        w += params.slack;
        s.w_ = w;
        if (params.t + w > kMaxQubits) throw ParameterError("registers exceed engine cap");

        // Keyed labeling: the orbit positions get distinct labels drawn by
        // a partial shuffle of the w-bit label space.
        Rng rng(derive_stream(key_seed, 0xb111));
        std::vector<std::uint64_t> pool(std::uint64_t{1} << w);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::uint64_t x = 0; x < s.m_; ++x) {
            std::uint64_t j = x + rng.below(pool.size() - x);
            std::swap(pool[x], pool[j]);
            s.labels_.push_back(pool[x]);
            s.label_to_position_[pool[x]] = x;
        }
        return s;
    }

    BillScheme(const BillScheme& other) { copy_from(other); }
    BillScheme& operator=(const BillScheme& other) {
        if (this != &other) copy_from(other);
        return *this;
    }

    std::uint64_t group_order() const { return m_; }
    std::uint64_t modulus() const { return params_.modulus; }
    int precision_qubits() const { return params_.t; }
    int label_qubits() const { return w_; }
    bool exact_mode() const { return params_.exact; }

    // Label of orbit position x, i.e. of the element b + x*a.  Key-side.
    std::uint64_t label_of(std::uint64_t x) const {
        if (x >= m_) throw ParameterError("orbit position out of range");
        return labels_[x];
    }

    bool is_orbit_label(std::uint64_t label) const {
        return label_to_position_.count(label) != 0;
    }

    std::uint64_t position_of(std::uint64_t label) const {
        auto it = label_to_position_.find(label);
        if (it == label_to_position_.end()) {
            throw UndefinedLabelError("label " + std::to_string(label) +
                                      " is outside the orbit image");
        }
        return it->second;
    }

    // |r(b)>, the estimation start state.
    QuantumState base_label_state() const {
        return QuantumState::basis(w_, labels_[0]);
    }

    // Analytic |psi_k> construction, the mint cross-check.
    QuantumState eigenstate(std::uint64_t k) const {
        if (k >= m_) throw ParameterError("eigenvalue parameter out of range");
        std::vector<Complex> amps(std::uint64_t{1} << w_, Complex{0.0, 0.0});
        const double norm = 1.0 / std::sqrt(static_cast<double>(m_));
        for (std::uint64_t x = 0; x < m_; ++x) {
            double angle = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(x) / static_cast<double>(m_);
            amps[labels_[x]] = norm * Complex{std::cos(angle), std::sin(angle)};
        }
        return QuantumState::from_amplitudes(w_, std::move(amps));
    }

    std::vector<std::uint64_t> valid_list() const {
        std::lock_guard<std::mutex> lock(list_mutex_);
        return valid_list_;
    }

    bool is_valid_parameter(std::uint64_t k) const {
        std::lock_guard<std::mutex> lock(list_mutex_);
        return std::find(valid_list_.begin(), valid_list_.end(), k) != valid_list_.end();
    }

    void publish_parameter(std::uint64_t k) {
        std::lock_guard<std::mutex> lock(list_mutex_);
        if (std::find(valid_list_.begin(), valid_list_.end(), k) == valid_list_.end()) {
            valid_list_.push_back(k);
        }
    }

    void revoke(std::uint64_t k) {
        std::lock_guard<std::mutex> lock(list_mutex_);
        std::erase(valid_list_, k);
    }

    void export_valid_list(const std::string& path) const {
        write_int_list(path, valid_list());
    }

private:
    BillScheme() = default;

    void copy_from(const BillScheme& other) {
        params_ = other.params_;
        m_ = other.m_;
        w_ = other.w_;
        labels_ = other.labels_;
        label_to_position_ = other.label_to_position_;
        valid_list_ = other.valid_list();
    }

    BillSchemeParams params_;
    std::uint64_t m_ = 0;
    int w_ = 0;
    std::vector<std::uint64_t> labels_;
    std::unordered_map<std::uint64_t, std::uint64_t> label_to_position_;
    mutable std::mutex list_mutex_;
    std::vector<std::uint64_t> valid_list_;
};

// Shift every orbit label by y steps: |r(b + x a)> -> |r(b + (x+y) a)>.
// The state must be supported on orbit labels only.
inline QuantumState shift_labels(const BillScheme& scheme, const QuantumState& labels,
                                 std::uint64_t y) {
    if (labels.qubits() != scheme.label_qubits()) {
        throw ParameterError("label register width mismatch");
    }
    std::vector<Complex> out(labels.dim(), Complex{0.0, 0.0});
    const std::uint64_t m = scheme.group_order();
    for (std::uint64_t l = 0; l < labels.dim(); ++l) {
        if (std::abs(labels[l]) < 1e-12) continue;
        std::uint64_t x = scheme.position_of(l); // throws outside the orbit
        std::uint64_t shifted = scheme.label_of((x + y) % m);
        out[shifted] = labels[l];
    }
    return QuantumState::from_amplitudes(labels.qubits(), std::move(out));
}

// The full controlled-power bank |y>|r(g)> -> |y>|r(g + y a)> on a joint
// precision (x) label register.
inline void apply_group_shift(const BillScheme& scheme, QuantumState& joint) {
    const int t = scheme.precision_qubits();
    const int w = scheme.label_qubits();
    if (joint.qubits() != t + w) throw ParameterError("joint register width mismatch");
    const std::uint64_t labels = std::uint64_t{1} << w;
    const std::uint64_t values = std::uint64_t{1} << t;
    const std::uint64_t m = scheme.group_order();
    std::vector<Complex> out(joint.dim(), Complex{0.0, 0.0});
    for (std::uint64_t y = 0; y < values; ++y) {
        for (std::uint64_t l = 0; l < labels; ++l) {
            const Complex amp = joint[y * labels + l];
            if (std::abs(amp) < 1e-12) continue;
            std::uint64_t x = scheme.position_of(l);
            std::uint64_t shifted = scheme.label_of((x + y) % m);
            out[y * labels + shifted] = amp;
        }
    }
    std::copy(out.begin(), out.end(), joint.amplitudes().begin());
}

namespace detail {

// Inverse Fourier transform on the precision register, applied as a direct
// transform per label column (registers are small enough that the fast
// circuit decomposition buys nothing here).
inline void inverse_fourier_prefix(QuantumState& joint, int t) {
    const std::uint64_t values = std::uint64_t{1} << t;
    const std::uint64_t block = joint.dim() >> t;
    const double scale = 1.0 / std::sqrt(static_cast<double>(values));
    std::vector<Complex> column(values);
    auto amps = joint.amplitudes();
    for (std::uint64_t l = 0; l < block; ++l) {
        for (std::uint64_t y = 0; y < values; ++y) column[y] = amps[y * block + l];
        for (std::uint64_t v = 0; v < values; ++v) {
            Complex sum{0.0, 0.0};
            for (std::uint64_t y = 0; y < values; ++y) {
                double angle = -2.0 * std::numbers::pi *
                               static_cast<double>((y * v) % values) /
                               static_cast<double>(values);
                sum += column[y] * Complex{std::cos(angle), std::sin(angle)};
            }
            amps[v * block + l] = scale * sum;
        }
    }
}

// Phase estimation over the group shift: Hadamards, the controlled-power
// bank, inverse Fourier, then a precision-register measurement.  The label
// register is left collapsed on the measured branch.
inline std::uint64_t estimate_phase(const BillScheme& scheme, QuantumState& labels,
                                    Rng& rng) {
    const int t = scheme.precision_qubits();
    QuantumState joint = tensor(QuantumState(t), labels);
    for (int q = 0; q < t; ++q) apply_hadamard(joint, q);
    apply_group_shift(scheme, joint);
    inverse_fourier_prefix(joint, t);
    std::uint64_t v = measure_prefix(joint, t, rng);
    labels = drop_prefix(joint, t, v);
    return v;
}

} // namespace detail

// Projects the label register onto orbit support (or its complement) per
// the Born rule.  Returns true when the state lands inside the orbit.
inline bool measure_orbit_membership(const BillScheme& scheme, QuantumState& labels,
                                     Rng& rng) {
    if (labels.qubits() != scheme.label_qubits()) {
        throw ParameterError("label register width mismatch");
    }
    double inside = 0.0;
    for (std::uint64_t l = 0; l < labels.dim(); ++l) {
        if (scheme.is_orbit_label(l)) inside += std::norm(labels[l]);
    }
    inside = std::clamp(inside, 0.0, 1.0);
    const bool in_orbit = rng.uniform() < inside;
    auto amps = labels.amplitudes();
    for (std::uint64_t l = 0; l < labels.dim(); ++l) {
        if (scheme.is_orbit_label(l) != in_orbit) amps[l] = Complex{0.0, 0.0};
    }
    labels.renormalize();
    return in_orbit;
}

// Draws a fresh bill: estimation from |r(b)> yields a uniformly random k
// whose eigenstate is left in the label register; k joins the valid list.
inline Bill mint_bill(BillScheme& scheme, Rng& rng) {
    QuantumState labels = scheme.base_label_state();
    std::uint64_t v = detail::estimate_phase(scheme, labels, rng);
    const std::uint64_t values = std::uint64_t{1} << scheme.precision_qubits();
    std::uint64_t k;
    if (scheme.exact_mode()) {
        k = v / (values / scheme.group_order());
    } else {
        double frac = static_cast<double>(v) / static_cast<double>(values);
        k = static_cast<std::uint64_t>(std::llround(frac * static_cast<double>(
                                           scheme.group_order()))) % scheme.group_order();
    }
    scheme.publish_parameter(k);
    return Bill{k, std::move(labels)};
}

inline Bill mint_bill(BillScheme& scheme, RngSeed seed) {
    Rng rng(seed);
    return mint_bill(scheme, rng);
}

struct BillVerifyResult {
    bool accepted = false;
    Bill post_bill;
    std::uint64_t measured_value = 0; // raw precision-register outcome
};

// Membership pre-measurement, then re-estimation.  Accepts when the
// estimate reproduces the claimed k exactly (exact mode) or within the
// half-step window (windowed mode), and k is on the valid list.
inline BillVerifyResult verify_bill(const BillScheme& scheme, const Bill& bill,
                                    Rng& rng) {
    if (bill.k >= scheme.group_order()) {
        throw ParameterError("eigenvalue parameter out of range");
    }
    if (bill.state.qubits() != scheme.label_qubits()) {
        throw ParameterError("label register width mismatch");
    }
    BillVerifyResult result;
    result.post_bill.k = bill.k;
    QuantumState labels = bill.state;
    if (!measure_orbit_membership(scheme, labels, rng)) {
        result.post_bill.state = std::move(labels);
        return result;
    }
    std::uint64_t v = detail::estimate_phase(scheme, labels, rng);
    result.measured_value = v;
    const std::uint64_t values = std::uint64_t{1} << scheme.precision_qubits();
    bool parameter_match;
    if (scheme.exact_mode()) {
        parameter_match = v == bill.k * (values / scheme.group_order());
    } else {
        double measured = static_cast<double>(v) / static_cast<double>(values);
        double claimed = static_cast<double>(bill.k) /
                         static_cast<double>(scheme.group_order());
        double delta = std::abs(measured - claimed);
        delta = std::min(delta, 1.0 - delta);
        parameter_match = delta <= 1.0 / static_cast<double>(2 * values) + 1e-12;
    }
    result.accepted = parameter_match && scheme.is_valid_parameter(bill.k);
    result.post_bill.state = std::move(labels);
    return result;
}

inline BillVerifyResult verify_bill(const BillScheme& scheme, const Bill& bill,
                                    RngSeed seed) {
    Rng rng(seed);
    return verify_bill(scheme, bill, rng);
}

struct BillForgeReport {
    std::uint64_t trials = 0;
    std::uint64_t passes = 0;
    double pass_rate = 0.0;
    double haar_reference = 0.0; // expected rate for Haar submissions, 2^-w
};

// Keyless forger: submits Haar-random label-register states under a chosen
// claimed parameter.  Pass probability per submission is the squared
// overlap with |psi_k>, which averages to 2^-w over Haar inputs.
inline BillForgeReport forge_bill_attempt(const BillScheme& scheme,
                                          std::uint64_t target_k, int trials,
                                          RngSeed seed) {
    if (trials < 1) throw ParameterError("trials must be positive");
    if (target_k >= scheme.group_order()) {
        throw ParameterError("eigenvalue parameter out of range");
    }
    BillForgeReport report;
    report.trials = static_cast<std::uint64_t>(trials);
    report.haar_reference = std::exp2(-scheme.label_qubits());
    for (int i = 0; i < trials; ++i) {
        Rng rng(derive_trial_seed(seed, static_cast<std::uint64_t>(i)));
        Bill forged{target_k, haar_random_state(scheme.label_qubits(), rng)};
        report.passes += verify_bill(scheme, forged, rng).accepted;
    }
    report.pass_rate = static_cast<double>(report.passes) / report.trials;
    return report;
}

// Bill fixture format ("QBL1"): the eigenvalue parameter, label width,
// then the amplitude block.
inline std::vector<std::uint8_t> bill_to_bytes(const Bill& bill) {
    ByteWriter w;
    w.magic("QBL1");
    w.u64(bill.k);
    w.u32(static_cast<std::uint32_t>(bill.state.qubits()));
    put_amplitudes(w, bill.state);
    return w.bytes();
}

inline Bill bill_from_bytes(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes));
    r.expect_magic("QBL1");
    std::uint64_t k = r.u64();
    std::uint32_t w = r.u32();
    if (w < 1 || w > static_cast<std::uint32_t>(kMaxQubits)) {
        throw IoError("bill record has invalid register width");
    }
    QuantumState state = get_amplitudes(r, static_cast<int>(w));
    if (!r.exhausted()) throw IoError("trailing bytes after bill record");
    return Bill{k, std::move(state)};
}

inline void write_bill(const std::string& path, const Bill& bill) {
    write_file(path, bill_to_bytes(bill));
}

inline Bill read_bill(const std::string& path) {
    return bill_from_bytes(read_file(path));
}

} // namespace qcash
