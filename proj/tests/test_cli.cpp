// End-to-end harness tests: each case spawns the real binary and inspects
// its report, exit code, or emitted files.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "qcash/serialize.hpp"

using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

std::string slurp(const std::string& path) {
    auto bytes = qcash::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

CliResult run_cli(const std::string& args) {
    const std::string out_path = "/tmp/qcash_cli_test_stdout.txt";
    const std::string cmd =
        std::string(QCASH_CLI_PATH) + " " + args + " > " + out_path + " 2> /dev/null";
    int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WEXITSTATUS(raw);
    r.out = slurp(out_path);
    return r;
}

json report_of(const CliResult& r) { return json::parse(r.out); }

} // namespace

TEST_CASE("mint-verify accepts honest coins and echoes its config") {
    CliResult r = run_cli("mint-verify --n 4 --trials 100 --seed 7");
    REQUIRE(r.code == 0);
    json doc = report_of(r);
    CHECK(doc["command"] == "qcash_cli mint-verify --n 4 --coins 1 --trials 100 --seed 7 --format json");
    CHECK(doc["config"]["seed"] == 7);
    CHECK(doc["config"]["n"] == 4);
    CHECK(doc["report"]["accept-rate"] == 1.0);
    CHECK(doc["report"]["accepts"].size() == 100);
    CHECK(doc["report"]["min-accepted-fidelity"].get<double>() >= 1.0 - 1e-9);
    CHECK_FALSE(doc["report"].contains("secret-amplitudes"));
}

TEST_CASE("reports re-run byte for byte, including from the embedded command") {
    const std::string path = "/tmp/qcash_cli_test_report.json";
    REQUIRE(run_cli("robustness --n 3 --trials 50 --seed 11 --out " + path).code == 0);
    const std::string first = slurp(path);
    REQUIRE(run_cli("robustness --n 3 --trials 50 --seed 11 --out " + path).code == 0);
    CHECK(first == slurp(path));

    // The embedded command must itself reproduce the bytes.
    json doc = json::parse(first);
    std::string embedded = doc["command"].get<std::string>();
    const std::string prefix = "qcash_cli ";
    REQUIRE(embedded.rfind(prefix, 0) == 0);
    int raw = std::system(
        (std::string(QCASH_CLI_PATH) + " " + embedded.substr(prefix.size()) + " 2> /dev/null")
            .c_str());
    REQUIRE(WEXITSTATUS(raw) == 0);
    CHECK(first == slurp(path));
}

TEST_CASE("forge-retry matches the geometric expectation") {
    CliResult r = run_cli("forge-retry --n 3 --trials 1000 --seed 7");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["tries"].size() == 1000);
    CHECK(rep["forged-count"] == 1000);
    CHECK(rep["expected-mean"] == 8.0);
    // 3 sigma of the sample mean for a geometric law with p = 1/8.
    CHECK(std::abs(rep["mean-tries"].get<double>() - 8.0) < 0.75);
}

TEST_CASE("forge-grover reproduces the closed-form overlap exactly") {
    CliResult r = run_cli("forge-grover --n 4 --p 0.9 --seed 1");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["iterations"] == 2);
    CHECK(rep["achieved-overlap"].get<double>() == 3721.0 / 4096.0);
    CHECK(rep["simulated-overlap"].get<double>() ==
          Catch::Approx(3721.0 / 4096.0).margin(1e-12));
    CHECK(rep["succeeded"] == true);
}

TEST_CASE("bound-table carries the denominator note and the reference row") {
    CliResult r = run_cli("bound-table --n-lo 10 --n-hi 10 --k-pow-hi 1 --seed 1");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# denominator: 1 for k in {0,1}") != std::string::npos);
    CHECK(r.out.find("n,k,p,bound") != std::string::npos);
    CHECK(r.out.find("10,2,1.0,14.0") != std::string::npos);

    CliResult j = run_cli("bound-table --n-lo 10 --n-hi 10 --k-pow-hi 1 --seed 1 --format json");
    REQUIRE(j.code == 0);
    json rows = report_of(j)["report"]["rows"];
    REQUIRE(rows.size() == 3);
    CHECK(rows[2]["bound"] == 14.0);
}

TEST_CASE("scaling emits the query ladder and its spread") {
    CliResult r = run_cli("scaling --n-lo 4 --n-hi 10 --p 0.5 --seed 3 --format json");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    REQUIRE(rep["rows"].size() == 7);
    const std::uint64_t expected[] = {2, 2, 3, 4, 6, 9, 13};
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(rep["rows"][i]["queries"].get<std::uint64_t>() == expected[i]);
    }
    CHECK(rep["ratio-cv"].get<double>() < 0.2);

    CliResult c = run_cli("scaling --n-lo 4 --n-hi 10 --p 0.5 --seed 3");
    REQUIRE(c.code == 0);
    CHECK(c.out.find("# ratio_cv: ") != std::string::npos);
    CHECK(c.out.find("n,queries,sqrt_dim,ratio") != std::string::npos);
}

TEST_CASE("validation problems exit 2, experiment errors exit 3") {
    CHECK(run_cli("nonsense").code == 2);
    CHECK(run_cli("mint-verify --n 0").code == 2);
    CHECK(run_cli("mint-verify --format csv").code == 2);
    CHECK(run_cli("robustness --epsilon 1.5").code == 2);
    CHECK(run_cli("bills-verify").code == 2);
    CHECK(run_cli("bills-verify --load-bill /tmp/qcash_cli_no_such_file.bin").code == 2);
    CHECK(run_cli("mint-verify --n 2 --coins 9 --cap 8").code == 3);
    CHECK(run_cli("--help").code == 0);
}

TEST_CASE("scheme files round-trip and the secret stays gated") {
    const std::string scheme = "/tmp/qcash_cli_test_scheme.bin";
    CliResult r = run_cli("mint-verify --n 3 --trials 20 --seed 9 --save-scheme " + scheme);
    REQUIRE(r.code == 0);
    CHECK_FALSE(report_of(r)["report"].contains("secret-amplitudes"));

    CliResult loaded = run_cli("mint-verify --load-scheme " + scheme +
                               " --trials 20 --seed 1234");
    REQUIRE(loaded.code == 0);
    json rep = report_of(loaded)["report"];
    CHECK(rep["accept-rate"] == 1.0);
    CHECK(rep["n"] == 3);

    CliResult revealed = run_cli("mint-verify --n 3 --trials 1 --seed 9 --reveal-secret");
    REQUIRE(revealed.code == 0);
    json amps = report_of(revealed)["report"]["secret-amplitudes"];
    CHECK(amps.size() == 16); // 2^3 amplitudes, two doubles each
}

TEST_CASE("bills flow through mint, registry, verify, and tamper") {
    const std::string bill = "/tmp/qcash_cli_test_bill.bin";
    const std::string registry = "/tmp/qcash_cli_test_registry.bin";
    CliResult minted = run_cli("bills-mint --count 3 --seed 5 --save-bill " + bill +
                               " --save-registry " + registry);
    REQUIRE(minted.code == 0);
    json rep = report_of(minted)["report"];
    CHECK(rep["all-reverified"] == true);
    CHECK(rep["ks"].size() == 3);

    CliResult ok = run_cli("bills-verify --seed 5 --load-bill " + bill + " --registry " + registry);
    REQUIRE(ok.code == 0);
    CHECK(report_of(ok)["report"]["accepted"] == true);

    CliResult unlisted = run_cli("bills-verify --seed 5 --load-bill " + bill);
    REQUIRE(unlisted.code == 0);
    CHECK(report_of(unlisted)["report"]["accepted"] == false);

    CliResult tampered = run_cli("bills-verify --seed 5 --load-bill " + bill + " --registry " +
                                 registry + " --tamper-k");
    REQUIRE(tampered.code == 0);
    CHECK(report_of(tampered)["report"]["accepted"] == false);
}

TEST_CASE("bills-forge sits at the random-state reference rate") {
    CliResult r = run_cli("bills-forge --k 1 --trials 2000 --seed 5");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["haar-reference"] == 0.03125);
    // 3 sigma around 1/32 at 2000 trials.
    CHECK(rep["pass-rate"].get<double>() > 0.0195);
    CHECK(rep["pass-rate"].get<double>() < 0.0430);
}

TEST_CASE("transfer and robustness report healthy chains") {
    CliResult t = run_cli("transfer-chain --n 3 --rounds 200 --seed 2");
    REQUIRE(t.code == 0);
    json trep = report_of(t)["report"];
    CHECK(trep["accept-count"] == 200);
    CHECK(trep["all-accepted"] == true);
    CHECK(trep["final-fidelity"].get<double>() >= 1.0 - 1e-6);

    CliResult r = run_cli("robustness --n 4 --epsilon 0.1 --trials 300 --seed 3");
    REQUIRE(r.code == 0);
    json rrep = report_of(r)["report"];
    CHECK(rrep["pass-rate"].get<double>() > 0.9);
    CHECK(rrep["mean-post-fidelity-given-pass"].get<double>() >= 1.0 - 1e-9);
}

TEST_CASE("anonymity accuracy lands at chance unless the bank cheats") {
    CliResult honest = run_cli("anonymity --users 4 --trials 3000 --seed 11");
    REQUIRE(honest.code == 0);
    json hrep = report_of(honest)["report"];
    CHECK(hrep["chance-accuracy"] == 0.25);
    CHECK(std::abs(hrep["accuracy"].get<double>() - 0.25) < 0.024); // 3 sigma

    CliResult cheat = run_cli("anonymity --users 4 --trials 500 --seed 11 --cheating");
    REQUIRE(cheat.code == 0);
    CHECK(report_of(cheat)["report"]["accuracy"] == 1.0);
}

TEST_CASE("bb84-attack recovers the encoding at sixteen copies") {
    CliResult r = run_cli("bb84-attack --n 8 --copies 16 --trials 3 --seed 13");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["successes"].size() == 3);
    CHECK(rep["mean-per-qubit-recovery"].get<double>() >= 0.95);
    CHECK(rep["mean-forged-pass-rate"].get<double>() >= 0.97);
    CHECK_FALSE(rep.contains("recovered-spec"));

    CliResult full = run_cli("bb84-attack --n 4 --copies 16 --trials 1 --seed 13 --reveal-secret");
    REQUIRE(full.code == 0);
    json frep = report_of(full)["report"];
    REQUIRE(frep.contains("recovered-spec"));
    REQUIRE(frep.contains("true-spec"));
    CHECK(frep["recovered-spec"]["bases"].size() == 4);
}

TEST_CASE("protocol subcommands agree on the verdict seed by seed") {
    for (int seed = 5; seed <= 16; ++seed) {
        const std::string tail = " --n 3 --forge --seed " + std::to_string(seed);
        CliResult online = run_cli("online-verify" + tail);
        CliResult blind = run_cli("blind-verify" + tail);
        REQUIRE(online.code == 0);
        REQUIRE(blind.code == 0);
        CHECK(report_of(online)["report"]["accepted"] ==
              report_of(blind)["report"]["accepted"]);
    }
}

TEST_CASE("blind flow reports budgeted gates and a full transcript") {
    CliResult r = run_cli("blind-verify --n 3 --seed 9");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["accepted"] == true);
    CHECK(rep["bank-gates"]["x"].get<std::uint64_t>() <= 3);
    CHECK(rep["bank-gates"]["z"].get<std::uint64_t>() <= 3);
    CHECK(rep["bank-gates"]["other"] == 0);
    CHECK(rep["merchant-fidelity-to-secret"].get<double>() >= 1.0 - 1e-9);
    CHECK(rep["quantum-messages"] == 2);
    CHECK(rep["classical-messages"] == 2);
    REQUIRE(rep["transcript"].size() == 4);

    CliResult online = run_cli("online-verify --n 3 --seed 9");
    REQUIRE(online.code == 0);
    json orep = report_of(online)["report"];
    CHECK(orep["bank-gates"]["other"] == 2 + 16);
    CHECK(orep["quantum-messages"] == 2);
    CHECK(orep["classical-messages"] == 1);

    CliResult dropped = run_cli("blind-verify --n 3 --seed 9 --fail-at 1");
    REQUIRE(dropped.code == 0);
    json drep = report_of(dropped)["report"];
    CHECK(drep["aborted"] == true);
    CHECK(drep["abort-step"] == "channel");

    const std::string record = "/tmp/qcash_cli_test_transcript.txt";
    REQUIRE(run_cli("blind-verify --n 3 --seed 9 --record " + record).code == 0);
    CHECK(slurp(record).find("pad-announcement\t") == 0);
}

TEST_CASE("blindness-check certifies the key average") {
    CliResult r = run_cli("blindness-check --n 2 --runs 1 --seed 3");
    REQUIRE(r.code == 0);
    json rep = report_of(r)["report"];
    CHECK(rep["empty"] == false);
    CHECK(rep["keys-averaged"] == 16);
    CHECK(rep["max-distance-to-mixed"].get<double>() < 1e-10);
    CHECK(rep["max-distance-between-schemes"].get<double>() < 1e-10);

    CliResult none = run_cli("blindness-check --n 2 --runs 0 --seed 3");
    REQUIRE(none.code == 0);
    CHECK(report_of(none)["report"]["empty"] == true);
}

TEST_CASE("workload table contrasts the two flows") {
    CliResult r = run_cli("workload --n 3 --seed 9");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("flow,x_gates,z_gates,other_gates") != std::string::npos);
    CHECK(r.out.find("online,0,0,18,18,2,1") != std::string::npos);

    CliResult j = run_cli("workload --n 3 --seed 9 --format json");
    REQUIRE(j.code == 0);
    json rows = report_of(j)["report"]["rows"];
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["flow"] == "online");
    CHECK(rows[1]["flow"] == "blind");
    CHECK(rows[1]["total-bank-gates"].get<std::uint64_t>() <= 6);
    CHECK(rows[1]["other-gates"] == 0);
}
