// blindverify.hpp
// Bank/merchant verification protocols over an in-memory channel.
//
// Online flow: the merchant ships the coin register to the bank, which
// runs the full verification circuit and ships the result back.
//
// Blind-assisted flow: the merchant one-time-pads the coin, announces the
// pad classically, and sends only the padded register.  The bank checks
// the padded register against its pad-conjugated secret (classical
// bookkeeping on its side of the interaction) and its only counted
// quantum work is the final step: a fresh per-qubit X/Z re-key, at most
// one X and one Z per coin qubit.  The merchant strips both pads and ends
// holding the verified coin.
//
// Every quantum payload leaving the merchant is padded, so a non-key-
// holder's view averages to the maximally mixed state exactly.

#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcash/coin.hpp"
#include "qcash/density.hpp"
#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"
#include "qcash/rng.hpp"
#include "qcash/serialize.hpp"

namespace qcash {

struct PadKeys {
    int n = 0;
    std::uint64_t x_mask = 0;
    std::uint64_t z_mask = 0;

    bool x_bit(int q) const { return (x_mask >> q) & 1; }
    bool z_bit(int q) const { return (z_mask >> q) & 1; }

    static PadKeys random(int n, Rng& rng) {
        if (n < 1 || n > kMaxQubits) throw ParameterError("pad width out of range");
        const std::uint64_t span = std::uint64_t{1} << n;
        return PadKeys{n, rng.below(span), rng.below(span)};
    }
};

namespace detail {

inline void require_pad_match(const QuantumState& state, const PadKeys& keys) {
    if (keys.n != state.qubits()) throw ParameterError("pad width does not match state");
    if ((keys.x_mask | keys.z_mask) >> keys.n) {
        throw ParameterError("pad mask has bits beyond the register");
    }
}

} // namespace detail

// Pad X^x Z^z per qubit.  Decryption applies the exact inverse order, so
// the pair composes to the identity with no residual phase.
inline QuantumState qotp_encrypt(const QuantumState& state, const PadKeys& keys) {
    detail::require_pad_match(state, keys);
    QuantumState out = state;
    for (int q = 0; q < keys.n; ++q) {
        if (keys.z_bit(q)) apply_pauli(out, q, Pauli::Z);
        if (keys.x_bit(q)) apply_pauli(out, q, Pauli::X);
    }
    return out;
}

inline QuantumState qotp_decrypt(const QuantumState& state, const PadKeys& keys) {
    detail::require_pad_match(state, keys);
    QuantumState out = state;
    for (int q = 0; q < keys.n; ++q) {
        if (keys.x_bit(q)) apply_pauli(out, q, Pauli::X);
        if (keys.z_bit(q)) apply_pauli(out, q, Pauli::Z);
    }
    return out;
}

enum class Direction { MerchantToBank, BankToMerchant };
enum class MessageKind { Classical, Quantum };

struct Message {
    Direction direction = Direction::MerchantToBank;
    MessageKind kind = MessageKind::Classical;
    std::string step_label;
    std::vector<std::uint8_t> classical;
    std::optional<QuantumState> quantum;
};

struct BankGateCount {
    std::uint64_t x_gates = 0;
    std::uint64_t z_gates = 0;
    std::uint64_t other_gates = 0;
};

struct Transcript {
    std::vector<Message> messages;
    std::vector<BankGateCount> counters_at; // bank counters when each message left
    BankGateCount bank_gates;
    std::vector<std::uint64_t> seeds;

    void append(Message m) {
        counters_at.push_back(bank_gates);
        messages.push_back(std::move(m));
    }

    // Line-delimited record: label, direction, kind, payload digest, and
    // the bank gate counters at send time.
    std::vector<std::string> to_lines() const {
        std::vector<std::string> lines;
        for (std::size_t i = 0; i < messages.size(); ++i) {
            const Message& m = messages[i];
            const BankGateCount& c = counters_at[i];
            std::vector<std::uint8_t> payload =
                m.kind == MessageKind::Classical ? m.classical
                                                 : state_to_bytes(*m.quantum);
            std::ostringstream line;
            line << m.step_label << '\t'
                 << (m.direction == Direction::MerchantToBank ? "merchant->bank"
                                                              : "bank->merchant")
                 << '\t'
                 << (m.kind == MessageKind::Classical ? "classical" : "quantum")
                 << '\t' << digest_hex(payload) << '\t' << c.x_gates << '\t'
                 << c.z_gates << '\t' << c.other_gates;
            lines.push_back(line.str());
        }
        return lines;
    }
};

inline std::string transcript_text(const Transcript& t) {
    std::string out;
    for (const std::string& line : t.to_lines()) {
        out += line;
        out += '\n';
    }
    return out;
}

struct ChannelOptions {
    // Injected failure: sending the message with this index throws.
    std::optional<std::uint64_t> fail_at_message;
};

// Ordered, lossless, in-memory message channel writing into a transcript.
class Channel {
public:
    Channel(Transcript& transcript, ChannelOptions options)
        : transcript_(transcript), options_(options) {}

    const Message& transmit(Message m) {
        if (options_.fail_at_message &&
            transcript_.messages.size() == *options_.fail_at_message) {
            throw ChannelError("injected channel failure at step " + m.step_label);
        }
        transcript_.append(std::move(m));
        return transcript_.messages.back();
    }

private:
    Transcript& transcript_;
    ChannelOptions options_;
};

struct ProtocolResult {
    bool accepted = false;
    bool aborted = false;
    std::string abort_step;
    QuantumState merchant_state{1};
    Transcript transcript;
};

namespace detail {

// Stream tags for the independent per-run randomness lanes.  The
// measurement lane is shared by both flows so matched seeds face the same
// Born draws.
inline constexpr std::uint64_t kMeasureLane = 0x0b5e;
inline constexpr std::uint64_t kMerchantLane = 0x3a9d;
inline constexpr std::uint64_t kBankLane = 0xba2c;

inline std::vector<std::uint8_t> verdict_bytes(bool accepted) {
    return {static_cast<std::uint8_t>(accepted ? 1 : 0)};
}

// Dense compilation estimate for the bank's reflection oracle in the
// online flow: 2^(n+1) elementary operations, the documented accounting
// convention for "the full quantum circuit".
inline std::uint64_t compiled_oracle_cost(int n) {
    return std::uint64_t{1} << (n + 1);
}

} // namespace detail

// Teleport-to-bank baseline: one quantum round trip, the bank bears the
// whole verification circuit.
inline ProtocolResult run_online_verification(const CoinScheme& bank, const Coin& coin,
                                              RngSeed seed,
                                              const ChannelOptions& channel_options = {}) {
    ProtocolResult result;
    result.transcript.seeds.push_back(seed.value);
    Channel channel(result.transcript, channel_options);
    Rng measure(derive_stream(seed, detail::kMeasureLane));
    const int n = bank.qubits();

    try {
        const Message& transfer = channel.transmit(Message{
            Direction::MerchantToBank, MessageKind::Quantum, "coin-transfer", {},
            coin.state});

        // Bank side: full circuit.
        CoinOracle oracle = bank.oracle();
        VerifyResult v = verify(oracle, *transfer.quantum, measure);
        result.transcript.bank_gates.other_gates +=
            2 + detail::compiled_oracle_cost(n);

        channel.transmit(Message{Direction::BankToMerchant, MessageKind::Classical,
                                 "verdict", detail::verdict_bytes(v.accepted), {}});
        const Message& returned = channel.transmit(Message{
            Direction::BankToMerchant, MessageKind::Quantum, "coin-return", {},
            std::move(v.post_state)});

        result.accepted = v.accepted;
        result.merchant_state = *returned.quantum;
    } catch (const ChannelError&) {
        result.aborted = true;
        result.abort_step = "channel";
        result.merchant_state = coin.state;
    }
    return result;
}

struct BlindOptions {
    ChannelOptions channel;
    // Test hooks.
    std::optional<PadKeys> pad_override;
    bool force_budget_violation = false;
};

// Pad-assisted flow.  The bank never sees a bare coin register; its
// counted quantum work is the final re-key only, budgeted at one X and
// one Z per coin qubit.
inline ProtocolResult run_blind_verification(const CoinScheme& bank, const Coin& coin,
                                             RngSeed seed,
                                             const BlindOptions& options = {}) {
    ProtocolResult result;
    result.transcript.seeds.push_back(seed.value);
    Channel channel(result.transcript, options.channel);
    Rng measure(derive_stream(seed, detail::kMeasureLane));
    Rng merchant_rng(derive_stream(seed, detail::kMerchantLane));
    Rng bank_rng(derive_stream(seed, detail::kBankLane));
    const int n = bank.qubits();
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;

    try {
        // Merchant: pad the coin, announce the pad, send the padded register.
        PadKeys pad = options.pad_override ? *options.pad_override
                                           : PadKeys::random(n, merchant_rng);
        QuantumState padded = qotp_encrypt(coin.state, pad);
        ByteWriter announce;
        announce.u32(static_cast<std::uint32_t>(n));
        announce.u64(pad.x_mask);
        announce.u64(pad.z_mask);
        channel.transmit(Message{Direction::MerchantToBank, MessageKind::Classical,
                                 "pad-announcement", announce.bytes(), {}});
        const Message& sent = channel.transmit(Message{
            Direction::MerchantToBank, MessageKind::Quantum, "padded-coin", {},
            std::move(padded)});

        // Bank: conjugate its secret by the announced pad (classical work on
        // its own description) and check the padded register against it.
        // The interaction is directed over classical messages; none of it
        // counts toward the bank's quantum gate budget.
        QuantumState conjugated_secret = qotp_encrypt(bank.secret_state(), pad);
        CoinOracle conjugated_oracle =
            CoinScheme::with_state(std::move(conjugated_secret)).oracle();
        VerifyResult v = verify(conjugated_oracle, *sent.quantum, measure);

        // Bank final step: fresh re-key, the only counted quantum gates.
        PadKeys rekey = PadKeys::random(n, bank_rng);
        if (options.force_budget_violation) rekey = PadKeys{n, full, full};
        QuantumState outgoing = std::move(v.post_state);
        for (int q = 0; q < n; ++q) {
            if (rekey.x_bit(q)) {
                apply_pauli(outgoing, q, Pauli::X);
                ++result.transcript.bank_gates.x_gates;
            }
            if (rekey.z_bit(q)) {
                apply_pauli(outgoing, q, Pauli::Z);
                ++result.transcript.bank_gates.z_gates;
            }
        }
        if (options.force_budget_violation) {
            apply_pauli(outgoing, 0, Pauli::X);
            ++result.transcript.bank_gates.x_gates;
        }
        if (result.transcript.bank_gates.x_gates > static_cast<std::uint64_t>(n) ||
            result.transcript.bank_gates.z_gates > static_cast<std::uint64_t>(n)) {
            throw BudgetViolationError(
                "final-step corrections exceed one X and one Z per coin qubit");
        }

        ByteWriter verdict;
        verdict.u8(v.accepted ? 1 : 0);
        verdict.u64(rekey.x_mask);
        verdict.u64(rekey.z_mask);
        channel.transmit(Message{Direction::BankToMerchant, MessageKind::Classical,
                                 "verdict-and-rekey", verdict.bytes(), {}});
        const Message& returned = channel.transmit(Message{
            Direction::BankToMerchant, MessageKind::Quantum, "coin-return", {},
            std::move(outgoing)});

        // Merchant: strip the bank re-key, then the original pad.
        QuantumState unpadded = qotp_decrypt(*returned.quantum, rekey);
        result.merchant_state = qotp_decrypt(unpadded, pad);
        result.accepted = v.accepted;
    } catch (const ChannelError&) {
        result.aborted = true;
        result.abort_step = "channel";
        result.merchant_state = coin.state;
    }
    return result;
}

struct BlindnessReport {
    int n = 0;
    bool empty = true;
    std::uint64_t keys_averaged = 0;
    std::uint64_t runs = 0;
    std::vector<std::string> slots;
    double max_distance_to_mixed = 0.0;
    double max_distance_between_schemes = 0.0;
};

// Exhaustive pad-averaging check.  For two candidate secrets, runs the
// blind flow under every one of the 4^n merchant pads and averages each
// quantum payload slot into a density matrix; blindness means every slot
// averages to I/2^n, making the two secrets' views indistinguishable.
inline BlindnessReport blindness_check(const QuantumState& psi_a,
                                       const QuantumState& psi_b, int runs,
                                       RngSeed seed) {
    if (psi_a.qubits() != psi_b.qubits()) {
        throw ParameterError("secrets must have equal qubit counts");
    }
    const int n = psi_a.qubits();
    if (n > 3) throw ParameterError("exhaustive key averaging supports up to 3 qubits");
    BlindnessReport report;
    report.n = n;
    if (runs < 1) return report;
    report.empty = false;
    report.runs = static_cast<std::uint64_t>(runs);
    const std::uint64_t span = std::uint64_t{1} << n;
    report.keys_averaged = span * span;
    report.slots = {"padded-coin", "coin-return"};
    const double weight = 1.0 / static_cast<double>(report.keys_averaged);
    const Eigen::Index dim = Eigen::Index{1} << n;

    for (int run = 0; run < runs; ++run) {
        RngSeed run_seed = derive_stream(seed, static_cast<std::uint64_t>(run));
        for (std::size_t slot = 0; slot < report.slots.size(); ++slot) {
            Eigen::MatrixXcd avg_a = Eigen::MatrixXcd::Zero(dim, dim);
            Eigen::MatrixXcd avg_b = Eigen::MatrixXcd::Zero(dim, dim);
            for (std::uint64_t x = 0; x < span; ++x) {
                for (std::uint64_t z = 0; z < span; ++z) {
                    BlindOptions options;
                    options.pad_override = PadKeys{n, x, z};
                    for (const QuantumState* psi : {&psi_a, &psi_b}) {
                        CoinScheme scheme = CoinScheme::with_state(*psi);
                        Coin coin{*psi, 0};
                        ProtocolResult r =
                            run_blind_verification(scheme, coin, run_seed, options);
                        const Message* found = nullptr;
                        for (const Message& m : r.transcript.messages) {
                            if (m.step_label == report.slots[slot]) found = &m;
                        }
                        if (!found || !found->quantum) {
                            throw ProtocolError("blind flow produced no " +
                                                report.slots[slot] + " payload");
                        }
                        Eigen::VectorXcd v(dim);
                        for (Eigen::Index i = 0; i < dim; ++i) {
                            v(i) = (*found->quantum)[static_cast<std::uint64_t>(i)];
                        }
                        (psi == &psi_a ? avg_a : avg_b).noalias() +=
                            weight * (v * v.adjoint());
                    }
                }
            }
            DensityMatrix rho_a = DensityMatrix::from_matrix(n, avg_a);
            DensityMatrix rho_b = DensityMatrix::from_matrix(n, avg_b);
            DensityMatrix mixed = maximally_mixed(n);
            report.max_distance_to_mixed =
                std::max({report.max_distance_to_mixed, trace_distance(rho_a, mixed),
                          trace_distance(rho_b, mixed)});
            report.max_distance_between_schemes =
                std::max(report.max_distance_between_schemes,
                         trace_distance(rho_a, rho_b));
        }
    }
    return report;
}

struct WorkloadRow {
    std::string flow;
    std::uint64_t x_gates = 0;
    std::uint64_t z_gates = 0;
    std::uint64_t other_gates = 0;
    std::uint64_t total_bank_gates = 0;
    std::uint64_t quantum_messages = 0;
    std::uint64_t classical_messages = 0;
};

inline WorkloadRow workload_row(std::string flow, const Transcript& t) {
    WorkloadRow row;
    row.flow = std::move(flow);
    row.x_gates = t.bank_gates.x_gates;
    row.z_gates = t.bank_gates.z_gates;
    row.other_gates = t.bank_gates.other_gates;
    row.total_bank_gates = row.x_gates + row.z_gates + row.other_gates;
    for (const Message& m : t.messages) {
        if (m.kind == MessageKind::Quantum) {
            ++row.quantum_messages;
        } else {
            ++row.classical_messages;
        }
    }
    return row;
}

// Side-by-side bank accounting for matched online and blind transcripts.
inline std::vector<WorkloadRow> compare_bank_workload(const Transcript& online,
                                                      const Transcript& blind) {
    return {workload_row("online", online), workload_row("blind", blind)};
}

} // namespace qcash
