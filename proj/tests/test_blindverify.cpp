// Protocol tests: pad algebra, online and blind flows, matched-seed
// agreement, exhaustive blindness averaging, and bank workload accounting.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qcash/blindverify.hpp"
#include "qcash/coin.hpp"
#include "qcash/density.hpp"

using namespace qcash;

namespace {

QuantumState orthogonal_to(const QuantumState& psi, std::uint64_t seed) {
    Rng rng(RngSeed{seed});
    QuantumState phi = haar_random_state(psi.qubits(), rng);
    Complex c = inner_product(psi, phi);
    auto amps = phi.amplitudes();
    for (std::uint64_t i = 0; i < phi.dim(); ++i) amps[i] -= c * psi[i];
    phi.renormalize();
    return phi;
}

} // namespace

TEST_CASE("pad encrypt and decrypt are exact inverses") {
    Rng rng(RngSeed{700});
    for (int n = 1; n <= 4; ++n) {
        QuantumState psi = haar_random_state(n, rng);
        for (int rep = 0; rep < 10; ++rep) {
            PadKeys keys = PadKeys::random(n, rng);
            QuantumState back = qotp_decrypt(qotp_encrypt(psi, keys), keys);
            double worst = 0.0;
            for (std::uint64_t i = 0; i < psi.dim(); ++i) {
                worst = std::max(worst, std::abs(back[i] - psi[i]));
            }
            CHECK(worst < 1e-12); // amplitude-exact, not just up to phase
        }
    }

    QuantumState psi = haar_random_state(2, rng);
    QuantumState same = qotp_encrypt(psi, PadKeys{2, 0, 0});
    CHECK(fidelity(same, psi) == Catch::Approx(1.0).margin(1e-15));
    CHECK_THROWS_AS(qotp_encrypt(psi, PadKeys{3, 0, 0}), ParameterError);
    CHECK_THROWS_AS(qotp_encrypt(psi, PadKeys{2, 4, 0}), ParameterError);
}

TEST_CASE("full key average is maximally mixed") {
    Rng rng(RngSeed{701});
    for (int n = 1; n <= 3; ++n) {
        QuantumState psi = haar_random_state(n, rng);
        const std::uint64_t span = std::uint64_t{1} << n;
        std::vector<std::pair<double, QuantumState>> parts;
        const double weight = 1.0 / static_cast<double>(span * span);
        for (std::uint64_t x = 0; x < span; ++x) {
            for (std::uint64_t z = 0; z < span; ++z) {
                parts.emplace_back(weight, qotp_encrypt(psi, PadKeys{n, x, z}));
            }
        }
        CHECK(trace_distance(mix(parts), maximally_mixed(n)) < 1e-10);
    }
}

TEST_CASE("online flow verifies and returns the coin") {
    CoinScheme bank = CoinScheme::create(3, RngSeed{710});
    Coin coin = bank.mint();
    ProtocolResult r = run_online_verification(bank, coin, RngSeed{711});
    CHECK(r.accepted);
    CHECK_FALSE(r.aborted);
    CHECK(fidelity(r.merchant_state, bank.secret_state()) >= 1.0 - 1e-9);

    REQUIRE(r.transcript.messages.size() == 3);
    CHECK(r.transcript.messages[0].step_label == "coin-transfer");
    CHECK(r.transcript.messages[1].step_label == "verdict");
    CHECK(r.transcript.messages[2].step_label == "coin-return");
    CHECK(r.transcript.bank_gates.other_gates == 2 + (std::uint64_t{1} << 4));
    CHECK(r.transcript.bank_gates.x_gates == 0);

    QuantumState phi = orthogonal_to(bank.secret_state(), 712);
    ProtocolResult rejected =
        run_online_verification(bank, Coin{phi, kForgedProvenance}, RngSeed{713});
    CHECK_FALSE(rejected.accepted);
    CHECK(fidelity(rejected.merchant_state, phi) >= 1.0 - 1e-9);
}

TEST_CASE("online accept bit equals a direct local verification") {
    CoinScheme bank = CoinScheme::create(3, RngSeed{715});
    for (std::uint64_t s = 0; s < 40; ++s) {
        Rng prep(derive_trial_seed(RngSeed{716}, s));
        QuantumState input = perturb(bank.secret_state(), 0.5, prep);
        RngSeed seed{717 + s};

        ProtocolResult online =
            run_online_verification(bank, Coin{input, kForgedProvenance}, seed);
        CoinOracle oracle = bank.oracle();
        Rng measure(derive_stream(seed, detail::kMeasureLane));
        VerifyResult local = verify(oracle, input, measure);
        CHECK(online.accepted == local.accepted);
    }
}

TEST_CASE("blind flow verifies, stays budgeted, and unpads cleanly") {
    const int n = 3;
    CoinScheme bank = CoinScheme::create(n, RngSeed{720});
    Coin coin = bank.mint();
    ProtocolResult r = run_blind_verification(bank, coin, RngSeed{721});
    CHECK(r.accepted);
    CHECK_FALSE(r.aborted);
    CHECK(fidelity(r.merchant_state, bank.secret_state()) >= 1.0 - 1e-9);

    REQUIRE(r.transcript.messages.size() == 4);
    CHECK(r.transcript.messages[0].step_label == "pad-announcement");
    CHECK(r.transcript.messages[1].step_label == "padded-coin");
    CHECK(r.transcript.messages[2].step_label == "verdict-and-rekey");
    CHECK(r.transcript.messages[3].step_label == "coin-return");
    CHECK(r.transcript.bank_gates.x_gates <= std::uint64_t(n));
    CHECK(r.transcript.bank_gates.z_gates <= std::uint64_t(n));
    CHECK(r.transcript.bank_gates.other_gates == 0);

    QuantumState phi = orthogonal_to(bank.secret_state(), 722);
    ProtocolResult rejected =
        run_blind_verification(bank, Coin{phi, kForgedProvenance}, RngSeed{723});
    CHECK_FALSE(rejected.accepted);
    CHECK(fidelity(rejected.merchant_state, phi) >= 1.0 - 1e-9);
}

TEST_CASE("blind and online flows agree run for run") {
    const int n = 3;
    CoinScheme bank = CoinScheme::create(n, RngSeed{730});
    int accepts = 0;
    for (std::uint64_t run = 0; run < 500; ++run) {
        Rng prep(derive_trial_seed(RngSeed{731}, run));
        QuantumState input{n};
        switch (run % 3) {
        case 0: input = bank.secret_state(); break;
        case 1: input = orthogonal_to(bank.secret_state(), 7000 + run); break;
        default: input = perturb(bank.secret_state(), 0.1, prep); break;
        }
        RngSeed seed = derive_trial_seed(RngSeed{732}, run);
        Coin carrier{input, kForgedProvenance};
        ProtocolResult online = run_online_verification(bank, carrier, seed);
        ProtocolResult blind = run_blind_verification(bank, carrier, seed);
        REQUIRE(online.accepted == blind.accepted);
        accepts += online.accepted;
        // Matched verdicts imply matched merchant-held states.
        CHECK(fidelity(online.merchant_state, blind.merchant_state) >= 1.0 - 1e-9);
    }
    CHECK(accepts > 150); // the valid third plus most perturbed runs
    CHECK(accepts < 400);
}

TEST_CASE("budget violations are detected") {
    CoinScheme bank = CoinScheme::create(2, RngSeed{740});
    Coin coin = bank.mint();
    BlindOptions options;
    options.force_budget_violation = true;
    CHECK_THROWS_AS(run_blind_verification(bank, coin, RngSeed{741}, options),
                    BudgetViolationError);
}

TEST_CASE("channel failures abort both flows cleanly") {
    CoinScheme bank = CoinScheme::create(2, RngSeed{750});
    Coin coin = bank.mint();
    for (std::uint64_t at = 0; at < 3; ++at) {
        ChannelOptions channel;
        channel.fail_at_message = at;
        ProtocolResult r = run_online_verification(bank, coin, RngSeed{751}, channel);
        CHECK(r.aborted);
        CHECK(r.abort_step == "channel");
        CHECK_FALSE(r.accepted);
        CHECK(r.transcript.messages.size() == at);
    }
    for (std::uint64_t at = 0; at < 4; ++at) {
        BlindOptions options;
        options.channel.fail_at_message = at;
        ProtocolResult r = run_blind_verification(bank, coin, RngSeed{752}, options);
        CHECK(r.aborted);
        CHECK(r.transcript.messages.size() == at);
        // The merchant still holds the (unverified) coin after an abort.
        CHECK(fidelity(r.merchant_state, bank.secret_state()) >= 1.0 - 1e-9);
    }
}

TEST_CASE("transcripts are deterministic per seed") {
    CoinScheme bank = CoinScheme::create(3, RngSeed{760});
    Coin coin = bank.mint();
    ProtocolResult a = run_blind_verification(bank, coin, RngSeed{761});
    ProtocolResult b = run_blind_verification(bank, coin, RngSeed{761});
    ProtocolResult c = run_blind_verification(bank, coin, RngSeed{762});
    CHECK(transcript_text(a.transcript) == transcript_text(b.transcript));
    CHECK(transcript_text(a.transcript) != transcript_text(c.transcript));

    // The serialized form carries one line per message with the counters.
    auto lines = a.transcript.to_lines();
    REQUIRE(lines.size() == 4);
    CHECK(lines[0].find("pad-announcement\tmerchant->bank\tclassical\t") == 0);
    CHECK(lines[3].find("coin-return\tbank->merchant\tquantum\t") == 0);
}

TEST_CASE("padded payloads average to the mixed state for any secret") {
    Rng rng(RngSeed{770});
    for (int n = 1; n <= 3; ++n) {
        QuantumState psi_a = haar_random_state(n, rng);
        QuantumState psi_b = haar_random_state(n, rng);
        BlindnessReport report = blindness_check(psi_a, psi_b, 1, RngSeed{771});
        CHECK_FALSE(report.empty);
        CHECK(report.keys_averaged == (std::uint64_t{1} << (2 * n)));
        CHECK(report.max_distance_to_mixed < 1e-10);
        CHECK(report.max_distance_between_schemes < 1e-10);
    }

    QuantumState a = haar_random_state(2, rng);
    QuantumState b = haar_random_state(2, rng);
    BlindnessReport empty = blindness_check(a, b, 0, RngSeed{772});
    CHECK(empty.empty);
    CHECK_THROWS_AS(blindness_check(a, haar_random_state(3, rng), 1, RngSeed{773}),
                    ParameterError);
    QuantumState big_a = haar_random_state(4, rng);
    QuantumState big_b = haar_random_state(4, rng);
    CHECK_THROWS_AS(blindness_check(big_a, big_b, 1, RngSeed{774}), ParameterError);
}

TEST_CASE("workload table shows the bank relief") {
    for (int n = 1; n <= 5; ++n) {
        CoinScheme bank = CoinScheme::create(n, RngSeed{780 + std::uint64_t(n)});
        Coin coin = bank.mint();
        RngSeed seed{790 + std::uint64_t(n)};
        ProtocolResult online = run_online_verification(bank, coin, seed);
        ProtocolResult blind = run_blind_verification(bank, coin, seed);
        auto rows = compare_bank_workload(online.transcript, blind.transcript);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].flow == "online");
        CHECK(rows[1].flow == "blind");
        CHECK(rows[1].x_gates + rows[1].z_gates <= std::uint64_t(2 * n));
        CHECK(rows[1].other_gates == 0);
        CHECK(rows[0].total_bank_gates > std::uint64_t(2 * n));
        CHECK(rows[0].quantum_messages == rows[1].quantum_messages);
    }
}
