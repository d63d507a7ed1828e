// Density-matrix bookkeeping and the fixture byte formats.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "qcash/density.hpp"
#include "qcash/qstate.hpp"
#include "qcash/serialize.hpp"

using namespace qcash;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("pure state embedding") {
    DensityMatrix rho = state_to_density(QuantumState::basis(1, 0));
    CHECK(std::abs(rho.matrix()(0, 0) - Complex{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(rho.matrix()(1, 1)) < 1e-15);
    CHECK(std::abs(rho.matrix()(0, 1)) < 1e-15);
}

TEST_CASE("mixtures and the maximally mixed state") {
    DensityMatrix half = mix({{0.5, QuantumState::basis(1, 0)},
                              {0.5, QuantumState::basis(1, 1)}});
    CHECK(trace_distance(half, maximally_mixed(1)) < 1e-12);

    CHECK_THROWS_AS(mix({}), ParameterError);
    CHECK_THROWS_AS(mix({{-0.1, QuantumState(1)}, {1.1, QuantumState(1)}}),
                    ParameterError);
    CHECK_THROWS_AS(mix({{0.7, QuantumState(1)}}), ParameterError);
    CHECK_THROWS_AS(mix({{0.5, QuantumState(1)}, {0.5, QuantumState(2)}}),
                    ParameterError);
}

TEST_CASE("four pauli encryptions average to the identity") {
    Rng rng(RngSeed{61});
    QuantumState psi = haar_random_state(1, rng);
    std::vector<std::pair<double, QuantumState>> parts;
    for (int x = 0; x < 2; ++x) {
        for (int z = 0; z < 2; ++z) {
            QuantumState enc = psi;
            if (z) apply_pauli(enc, 0, Pauli::Z);
            if (x) apply_pauli(enc, 0, Pauli::X);
            parts.emplace_back(0.25, std::move(enc));
        }
    }
    CHECK(trace_distance(mix(parts), maximally_mixed(1)) < 1e-12);
}

TEST_CASE("density matrix validation") {
    Eigen::MatrixXcd bad(2, 2);
    bad << Complex{0.5, 0.0}, Complex{0.3, 0.1},
           Complex{0.3, 0.1}, Complex{0.5, 0.0}; // not Hermitian (imag parts equal)
    CHECK_THROWS_AS(DensityMatrix::from_matrix(1, bad), ParameterError);

    Eigen::MatrixXcd scaled = 2.0 * Eigen::MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix::from_matrix(1, scaled), ParameterError);

    Eigen::MatrixXcd indefinite(2, 2);
    indefinite << 1.5, 0.0, 0.0, -0.5;
    CHECK_THROWS_AS(DensityMatrix::from_matrix(1, indefinite), ParameterError);

    Eigen::MatrixXcd good = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
    CHECK(DensityMatrix::from_matrix(1, good).qubits() == 1);
    CHECK_THROWS_AS(DensityMatrix::from_matrix(2, good), ParameterError);
}

TEST_CASE("overlap against pure and mixed states") {
    Rng rng(RngSeed{62});
    QuantumState psi = haar_random_state(2, rng);
    CHECK(overlap(psi, state_to_density(psi)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(overlap(psi, maximally_mixed(2)) == Catch::Approx(0.25).margin(1e-12));
    CHECK_THROWS_AS(overlap(psi, maximally_mixed(1)), ParameterError);
}

TEST_CASE("trace distance extremes") {
    DensityMatrix zero = state_to_density(QuantumState::basis(1, 0));
    DensityMatrix one = state_to_density(QuantumState::basis(1, 1));
    CHECK(trace_distance(zero, zero) < 1e-12);
    CHECK(trace_distance(zero, one) == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(trace_distance(zero, maximally_mixed(2)), ParameterError);
}

TEST_CASE("state bytes round trip exactly") {
    Rng rng(RngSeed{63});
    QuantumState psi = haar_random_state(3, rng);
    auto bytes = state_to_bytes(psi);
    CHECK(bytes.size() == 4 + 4 + 16 * 8); // header + 2^(n+1) doubles
    QuantumState back = state_from_bytes(bytes);
    REQUIRE(back.qubits() == 3);
    for (std::uint64_t i = 0; i < psi.dim(); ++i) {
        CHECK(psi[i].real() == back[i].real());
        CHECK(psi[i].imag() == back[i].imag());
    }
}

TEST_CASE("state files round trip") {
    std::string path = temp_path("qcash_state_fixture.bin");
    Rng rng(RngSeed{64});
    QuantumState psi = haar_random_state(2, rng);
    write_state(path, psi);
    QuantumState back = read_state(path);
    CHECK(fidelity(psi, back) == Catch::Approx(1.0).margin(1e-15));
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_state(path), IoError);
}

TEST_CASE("malformed state records are rejected") {
    Rng rng(RngSeed{65});
    auto bytes = state_to_bytes(haar_random_state(2, rng));

    auto wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(state_from_bytes(wrong_magic), IoError);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(state_from_bytes(truncated), IoError);

    auto padded = bytes;
    padded.push_back(0);
    CHECK_THROWS_AS(state_from_bytes(padded), IoError);

    auto huge_n = bytes;
    huge_n[4] = 200;
    CHECK_THROWS_AS(state_from_bytes(huge_n), IoError);
}

TEST_CASE("digest has the reference fnv1a values") {
    CHECK(fnv1a64({}) == 14695981039346656037ULL);
    CHECK(fnv1a64({'a'}) == 0xaf63dc4c8601ec8cULL);
    CHECK(digest_hex({'a'}) == "af63dc4c8601ec8c");
}

TEST_CASE("integer lists serialize sorted") {
    std::string path = temp_path("qcash_valid_list.txt");
    write_int_list(path, {5, 1, 3});
    auto values = read_int_list(path);
    REQUIRE(values.size() == 3);
    CHECK(values[0] == 1);
    CHECK(values[1] == 3);
    CHECK(values[2] == 5);
    std::remove(path.c_str());
}
