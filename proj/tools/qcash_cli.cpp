// Experiment harness.  Every subcommand is seeded, validates its ranges
// before dispatch, and emits a machine-readable report that embeds its own
// command line; re-running that line reproduces the report byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qcash/bills.hpp"
#include "qcash/blindverify.hpp"
#include "qcash/coin.hpp"
#include "qcash/forgery.hpp"
#include "qcash/qstate.hpp"
#include "qcash/rng.hpp"
#include "qcash/serialize.hpp"

using nlohmann::json;
using namespace qcash;

namespace {

// Shortest round-trip decimal form; identical on every run, and parsing it
// back recovers the exact double.
std::string num(double v) { return json(v).dump(); }

struct Ctx {
    std::uint64_t seed = 1;
    std::string out = "-";
    std::string format; // empty = subcommand default
    bool reveal_secret = false;
};

// Collects the effective parameter set of one invocation and renders the
// report envelope.  The canonical command string always spells out every
// parameter so the embedded line re-runs without relying on defaults.
class Report {
public:
    Report(const Ctx& ctx, std::string sub, std::initializer_list<const char*> formats)
        : ctx_(ctx), sub_(std::move(sub)) {
        if (ctx.format.empty()) {
            format_ = *formats.begin();
        } else {
            bool ok = false;
            for (const char* f : formats) ok = ok || ctx.format == f;
            if (!ok) {
                throw ParameterError("subcommand " + sub_ + " does not support format '" +
                                     ctx.format + "'");
            }
            format_ = ctx.format;
        }
    }

    void arg(const std::string& name, std::uint64_t v) {
        flags_.emplace_back("--" + name, std::to_string(v));
        params_[name] = v;
    }
    void arg(const std::string& name, int v) {
        flags_.emplace_back("--" + name, std::to_string(v));
        params_[name] = v;
    }
    void arg(const std::string& name, double v) {
        flags_.emplace_back("--" + name, num(v));
        params_[name] = v;
    }
    void arg(const std::string& name, const std::string& v) {
        flags_.emplace_back("--" + name, v);
        params_[name] = v;
    }
    // Optional path arguments appear only when set.
    void path_arg(const std::string& name, const std::string& v) {
        if (!v.empty()) arg(name, v);
    }
    void toggle(const std::string& name, bool set) {
        if (set) flags_.emplace_back("--" + name, "");
        params_[name] = set;
    }

    const std::string& format() const { return format_; }

    std::string command() const {
        std::string c = "qcash_cli " + sub_;
        for (const auto& [flag, value] : flags_) {
            c += " " + flag;
            if (!value.empty()) c += " " + value;
        }
        c += " --seed " + std::to_string(ctx_.seed);
        c += " --format " + format_;
        if (ctx_.out != "-") c += " --out " + ctx_.out;
        if (ctx_.reveal_secret) c += " --reveal-secret";
        return c;
    }

    json config() const {
        json c = params_;
        c["subcommand"] = sub_;
        c["seed"] = ctx_.seed;
        c["format"] = format_;
        c["out"] = ctx_.out;
        c["reveal-secret"] = ctx_.reveal_secret;
        return c;
    }

    void write_json(json body) const {
        json doc;
        doc["command"] = command();
        doc["config"] = config();
        doc["report"] = std::move(body);
        emit(doc.dump(2) + "\n");
    }

    void write_csv(const std::vector<std::string>& comments, const std::string& header,
                   const std::vector<std::string>& rows) const {
        std::string text = "# command: " + command() + "\n";
        text += "# seed: " + std::to_string(ctx_.seed) + "\n";
        for (const std::string& c : comments) text += "# " + c + "\n";
        text += header + "\n";
        for (const std::string& r : rows) text += r + "\n";
        emit(text);
    }

private:
    void emit(const std::string& text) const {
        if (ctx_.out == "-") {
            std::cout << text;
            return;
        }
        write_file(ctx_.out, std::vector<std::uint8_t>(text.begin(), text.end()));
    }

    const Ctx& ctx_;
    std::string sub_;
    std::string format_;
    std::vector<std::pair<std::string, std::string>> flags_;
    json params_ = json::object();
};

json amplitudes_json(const QuantumState& state) {
    json flat = json::array();
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
        flat.push_back(state[i].real());
        flat.push_back(state[i].imag());
    }
    return flat;
}

// ---------------------------------------------------------------- coins ---

struct MintVerifyOpts {
    int n = 4;
    int coins = 1;
    int trials = 100;
    std::uint64_t cap = 0;
    std::string save_scheme;
    std::string load_scheme;
};

void run_mint_verify(const Ctx& ctx, const MintVerifyOpts& o) {
    if (o.coins < 1) throw ParameterError("coins must be positive");
    if (o.trials < 1) throw ParameterError("trials must be positive");
    Report rep(ctx, "mint-verify", {"json"});
    if (o.load_scheme.empty()) {
        rep.arg("n", o.n);
    } else {
        rep.arg("load-scheme", o.load_scheme);
    }
    rep.arg("coins", o.coins);
    rep.arg("trials", o.trials);
    if (o.cap != 0) rep.arg("cap", o.cap);
    rep.path_arg("save-scheme", o.save_scheme);

    CoinScheme scheme = o.load_scheme.empty()
                            ? CoinScheme::create(o.n, RngSeed{ctx.seed}, o.cap)
                            : read_scheme(o.load_scheme);
    std::vector<Coin> coins;
    coins.reserve(static_cast<std::size_t>(o.coins));
    for (int i = 0; i < o.coins; ++i) coins.push_back(scheme.mint());

    CoinOracle oracle = scheme.oracle();
    const RngSeed lane = derive_stream(RngSeed{ctx.seed}, 3);
    json accepts = json::array();
    std::uint64_t accepted = 0;
    double min_fidelity = 1.0;
    for (int t = 0; t < o.trials; ++t) {
        const Coin& coin = coins[static_cast<std::size_t>(t % o.coins)];
        VerifyResult v =
            verify(oracle, coin.state, derive_trial_seed(lane, static_cast<std::uint64_t>(t)));
        accepts.push_back(v.accepted ? 1 : 0);
        if (v.accepted) {
            ++accepted;
            min_fidelity = std::min(min_fidelity, fidelity(v.post_state, scheme.secret_state()));
        }
    }

    if (!o.save_scheme.empty()) write_scheme(o.save_scheme, scheme);

    json body;
    body["n"] = scheme.qubits();
    body["coins"] = o.coins;
    body["trials"] = o.trials;
    body["accept-count"] = accepted;
    body["accept-rate"] = static_cast<double>(accepted) / o.trials;
    body["accepts"] = std::move(accepts);
    body["min-accepted-fidelity"] = accepted ? min_fidelity : 0.0;
    body["issued"] = scheme.issued_count();
    body["issue-cap"] = scheme.issue_cap();
    body["oracle-queries"] = oracle.queries();
    if (ctx.reveal_secret) body["secret-amplitudes"] = amplitudes_json(scheme.secret_state());
    rep.write_json(std::move(body));
}

struct TransferOpts {
    int n = 3;
    int rounds = 1000;
};

void run_transfer_chain(const Ctx& ctx, const TransferOpts& o) {
    Report rep(ctx, "transfer-chain", {"json"});
    rep.arg("n", o.n);
    rep.arg("rounds", o.rounds);

    CoinScheme scheme = CoinScheme::create(o.n, RngSeed{ctx.seed});
    Coin coin = scheme.mint();
    TransferReport r = transfer_chain(scheme, coin, o.rounds, derive_stream(RngSeed{ctx.seed}, 4));

    json body;
    body["n"] = o.n;
    body["rounds"] = o.rounds;
    body["accept-count"] = r.accept_count;
    body["all-accepted"] = r.accept_count == static_cast<std::uint64_t>(o.rounds);
    body["final-fidelity"] = r.final_fidelity;
    json rounds = json::array();
    for (std::uint8_t bit : r.round_accepts) rounds.push_back(static_cast<int>(bit));
    body["round-accepts"] = std::move(rounds);
    rep.write_json(std::move(body));
}

struct RobustnessOpts {
    int n = 4;
    double epsilon = 0.1;
    int trials = 1000;
};

void run_robustness(const Ctx& ctx, const RobustnessOpts& o) {
    if (o.epsilon < 0.0 || o.epsilon > 1.0) {
        throw ParameterError("epsilon must lie in [0, 1]");
    }
    Report rep(ctx, "robustness", {"json"});
    rep.arg("n", o.n);
    rep.arg("epsilon", o.epsilon);
    rep.arg("trials", o.trials);

    CoinScheme scheme = CoinScheme::create(o.n, RngSeed{ctx.seed});
    RobustnessReport r =
        robustness_experiment(scheme, o.epsilon, o.trials, derive_stream(RngSeed{ctx.seed}, 5));

    json body;
    body["n"] = o.n;
    body["epsilon"] = o.epsilon;
    body["trials"] = r.trials;
    body["passes"] = r.passes;
    body["pass-rate"] = r.pass_rate;
    body["mean-post-fidelity-given-pass"] = r.mean_post_fidelity_given_pass;
    rep.write_json(std::move(body));
}

struct AnonymityOpts {
    int users = 4;
    int trials = 1000;
    int n = 0;
    bool cheating = false;
};

void run_anonymity(const Ctx& ctx, const AnonymityOpts& o) {
    Report rep(ctx, "anonymity", {"json"});
    rep.arg("users", o.users);
    rep.arg("trials", o.trials);
    if (o.n != 0) rep.arg("n", o.n);
    rep.toggle("cheating", o.cheating);

    AnonymityReport r =
        anonymity_experiment(!o.cheating, o.users, o.trials, RngSeed{ctx.seed}, o.n);

    json body;
    body["honest-bank"] = r.honest;
    body["users"] = r.users;
    body["trials"] = r.trials;
    body["correct"] = r.correct;
    body["accuracy"] = r.accuracy;
    body["chance-accuracy"] = 1.0 / r.users;
    body["strategy"] = r.strategy;
    rep.write_json(std::move(body));
}

// -------------------------------------------------------------- forgery ---

struct ForgeRetryOpts {
    int n = 3;
    int trials = 1000;
    std::uint64_t max_tries = 0;
};

void run_forge_retry(const Ctx& ctx, const ForgeRetryOpts& o) {
    if (o.trials < 1) throw ParameterError("trials must be positive");
    Report rep(ctx, "forge-retry", {"json"});
    rep.arg("n", o.n);
    rep.arg("trials", o.trials);
    if (o.max_tries != 0) rep.arg("max-tries", o.max_tries);

    // Generous default ceiling: 64x the expected 2^n tries.
    const std::uint64_t cutoff = o.max_tries ? o.max_tries : (std::uint64_t{64} << o.n);
    CoinScheme scheme = CoinScheme::create(o.n, derive_stream(RngSeed{ctx.seed}, 6));
    CoinOracle oracle = scheme.oracle();
    const RngSeed lane = derive_stream(RngSeed{ctx.seed}, 7);

    json tries = json::array();
    std::uint64_t forged = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < o.trials; ++t) {
        oracle.reset_queries();
        RetryForgeResult r =
            retry_forger(oracle, derive_trial_seed(lane, static_cast<std::uint64_t>(t)), cutoff);
        tries.push_back(r.report.queries);
        forged += r.report.succeeded ? 1 : 0;
        const double q = static_cast<double>(r.report.queries);
        sum += q;
        sum_sq += q * q;
    }
    const double mean = sum / o.trials;
    const double var = o.trials > 1 ? (sum_sq - sum * mean) / (o.trials - 1) : 0.0;

    json body;
    body["n"] = o.n;
    body["trials"] = o.trials;
    body["max-tries"] = cutoff;
    body["forged-count"] = forged;
    body["mean-tries"] = mean;
    body["expected-mean"] = std::exp2(o.n);
    body["sample-std"] = std::sqrt(std::max(0.0, var));
    body["tries"] = std::move(tries);
    rep.write_json(std::move(body));
}

struct ForgeGroverOpts {
    int n = 4;
    double p = 0.9;
};

void run_forge_grover(const Ctx& ctx, const ForgeGroverOpts& o) {
    if (o.p <= 0.0 || o.p > 1.0) throw ParameterError("p must lie in (0, 1]");
    Report rep(ctx, "forge-grover", {"json"});
    rep.arg("n", o.n);
    rep.arg("p", o.p);

    // Basis-state secret: the canonical start overlap makes the closed-form
    // overlap exact, so the simulated figure can be checked against it.
    Rng pick(derive_stream(RngSeed{ctx.seed}, 8));
    CoinScheme scheme =
        CoinScheme::with_state(QuantumState::basis(o.n, pick.below(std::uint64_t{1} << o.n)));
    CoinOracle oracle = scheme.oracle();
    GroverForgeResult g = grover_forger(oracle, o.p, RngSeed{ctx.seed});

    json body;
    body["n"] = o.n;
    body["target-p"] = o.p;
    body["iterations"] = g.report.queries;
    body["achieved-overlap"] = g.report.achieved_overlap;
    body["simulated-overlap"] = fidelity(g.state, scheme.secret_state());
    body["succeeded"] = g.report.succeeded;
    body["oracle-queries"] = oracle.queries();
    rep.write_json(std::move(body));
}

struct BoundTableOpts {
    int n_lo = 1;
    int n_hi = 16;
    int k_pow_hi = 20;
    double p = 1.0;
};

void run_bound_table(const Ctx& ctx, const BoundTableOpts& o) {
    if (o.n_lo < 1 || o.n_hi > 64 || o.n_lo > o.n_hi) {
        throw ParameterError("need 1 <= n-lo <= n-hi <= 64");
    }
    if (o.k_pow_hi < 0 || o.k_pow_hi > 20) throw ParameterError("k-pow-hi must lie in [0, 20]");
    if (o.p <= 0.0 || o.p > 1.0) throw ParameterError("p must lie in (0, 1]");
    Report rep(ctx, "bound-table", {"csv", "json"});
    rep.arg("n-lo", o.n_lo);
    rep.arg("n-hi", o.n_hi);
    rep.arg("k-pow-hi", o.k_pow_hi);
    rep.arg("p", o.p);

    std::vector<std::uint64_t> ks = {0, 1};
    for (int j = 1; j <= o.k_pow_hi; ++j) ks.push_back(std::uint64_t{1} << j);

    const std::string convention =
        "denominator: 1 for k in {0,1}; k*max(1,log2(k)) for k >= 2";
    if (rep.format() == "csv") {
        std::vector<std::string> rows;
        for (int n = o.n_lo; n <= o.n_hi; ++n) {
            for (std::uint64_t k : ks) {
                const double bound = theoretical_bound({n, k, o.p});
                rows.push_back(std::to_string(n) + "," + std::to_string(k) + "," + num(o.p) +
                               "," + num(bound));
            }
        }
        rep.write_csv({convention}, "n,k,p,bound", rows);
        return;
    }
    json body;
    body["convention"] = convention;
    json rows = json::array();
    for (int n = o.n_lo; n <= o.n_hi; ++n) {
        for (std::uint64_t k : ks) {
            json row;
            row["n"] = n;
            row["k"] = k;
            row["p"] = o.p;
            row["bound"] = theoretical_bound({n, k, o.p});
            rows.push_back(std::move(row));
        }
    }
    body["rows"] = std::move(rows);
    rep.write_json(std::move(body));
}

struct ScalingOpts {
    int n_lo = 4;
    int n_hi = 10;
    double p = 0.5;
};

void run_scaling(const Ctx& ctx, const ScalingOpts& o) {
    if (o.p <= 0.0 || o.p > 1.0) throw ParameterError("p must lie in (0, 1]");
    Report rep(ctx, "scaling", {"csv", "json"});
    rep.arg("n-lo", o.n_lo);
    rep.arg("n-hi", o.n_hi);
    rep.arg("p", o.p);

    std::vector<ScalingRow> rows = query_scaling_experiment(o.n_lo, o.n_hi, o.p, RngSeed{ctx.seed});
    double sum = 0.0, sum_sq = 0.0;
    for (const ScalingRow& r : rows) {
        sum += r.ratio;
        sum_sq += r.ratio * r.ratio;
    }
    const double mean = sum / rows.size();
    const double cv = std::sqrt(std::max(0.0, sum_sq / rows.size() - mean * mean)) / mean;

    if (rep.format() == "csv") {
        std::vector<std::string> lines;
        for (const ScalingRow& r : rows) {
            lines.push_back(std::to_string(r.n) + "," + std::to_string(r.queries) + "," +
                            num(r.sqrt_dim) + "," + num(r.ratio));
        }
        rep.write_csv({"ratio_mean: " + num(mean), "ratio_cv: " + num(cv)},
                      "n,queries,sqrt_dim,ratio", lines);
        return;
    }
    json body;
    body["ratio-mean"] = mean;
    body["ratio-cv"] = cv;
    json jrows = json::array();
    for (const ScalingRow& r : rows) {
        json row;
        row["n"] = r.n;
        row["queries"] = r.queries;
        row["sqrt-dim"] = r.sqrt_dim;
        row["ratio"] = r.ratio;
        jrows.push_back(std::move(row));
    }
    body["rows"] = std::move(jrows);
    rep.write_json(std::move(body));
}

struct Bb84Opts {
    int n = 8;
    int copies = 16;
    int trials = 1;
    int forged_coins = 50;
};

void run_bb84_attack(const Ctx& ctx, const Bb84Opts& o) {
    if (o.trials < 1) throw ParameterError("trials must be positive");
    Report rep(ctx, "bb84-attack", {"json"});
    rep.arg("n", o.n);
    rep.arg("copies", o.copies);
    rep.arg("trials", o.trials);
    rep.arg("forged-coins", o.forged_coins);

    const RngSeed spec_lane = derive_stream(RngSeed{ctx.seed}, 10);
    const RngSeed attack_lane = derive_stream(RngSeed{ctx.seed}, 11);
    json successes = json::array();
    std::uint64_t exact = 0;
    double recovery_sum = 0.0, pass_sum = 0.0;
    BB84CoinSpec last_true;
    BB84AttackReport last{};
    for (int t = 0; t < o.trials; ++t) {
        Rng spec_rng(derive_trial_seed(spec_lane, static_cast<std::uint64_t>(t)));
        BB84CoinSpec spec = random_bb84_spec(o.n, spec_rng);
        BB84AttackReport r = bb84_attack(
            spec, o.copies, derive_trial_seed(attack_lane, static_cast<std::uint64_t>(t)),
            o.forged_coins);
        successes.push_back(r.success ? 1 : 0);
        exact += r.success ? 1 : 0;
        recovery_sum += r.per_qubit_recovery;
        pass_sum += r.forged_pass_rate;
        last_true = spec;
        last = r;
    }

    json body;
    body["n"] = o.n;
    body["copies"] = o.copies;
    body["trials"] = o.trials;
    body["exact-recoveries"] = exact;
    body["success-rate"] = static_cast<double>(exact) / o.trials;
    body["mean-per-qubit-recovery"] = recovery_sum / o.trials;
    body["mean-forged-pass-rate"] = pass_sum / o.trials;
    body["successes"] = std::move(successes);
    if (ctx.reveal_secret && o.trials == 1) {
        json truth, guess;
        truth["bits"] = last_true.bits;
        truth["bases"] = last_true.bases;
        guess["bits"] = last.recovered.bits;
        guess["bases"] = last.recovered.bases;
        body["true-spec"] = std::move(truth);
        body["recovered-spec"] = std::move(guess);
    }
    rep.write_json(std::move(body));
}

// ---------------------------------------------------------------- bills ---

struct BillCommonOpts {
    std::uint64_t m = 8;
    std::uint64_t a = 1;
    std::uint64_t b = 0;
    int t = 3;
    int slack = 2;
    bool windowed = false;
};

void add_bill_flags(CLI::App* sub, const std::shared_ptr<BillCommonOpts>& o) {
    sub->add_option("--m", o->m, "ambient cyclic group size");
    sub->add_option("--a", o->a, "shift generator");
    sub->add_option("--b", o->b, "orbit base point");
    sub->add_option("--t", o->t, "precision register width")->check(CLI::Range(1, 20));
    sub->add_option("--slack", o->slack, "label width beyond ceil(log2 m)")
        ->check(CLI::Range(0, 16));
    sub->add_flag("--windowed", o->windowed, "accept half-step estimation windows");
}

BillSchemeParams bill_params(const BillCommonOpts& o) {
    BillSchemeParams p;
    p.modulus = o.m;
    p.a = o.a;
    p.b = o.b;
    p.t = o.t;
    p.slack = o.slack;
    p.exact = !o.windowed;
    return p;
}

void echo_bill_flags(Report& rep, const BillCommonOpts& o) {
    rep.arg("m", o.m);
    rep.arg("a", o.a);
    rep.arg("b", o.b);
    rep.arg("t", o.t);
    rep.arg("slack", o.slack);
    rep.toggle("windowed", o.windowed);
}

struct BillsMintOpts {
    BillCommonOpts common;
    int count = 1;
    std::string save_bill;
    std::string save_registry;
};

void run_bills_mint(const Ctx& ctx, const BillsMintOpts& o) {
    if (o.count < 1) throw ParameterError("count must be positive");
    Report rep(ctx, "bills-mint", {"json"});
    echo_bill_flags(rep, o.common);
    rep.arg("count", o.count);
    rep.path_arg("save-bill", o.save_bill);
    rep.path_arg("save-registry", o.save_registry);

    BillScheme scheme = BillScheme::create(bill_params(o.common), RngSeed{ctx.seed});
    const RngSeed mint_lane = derive_stream(RngSeed{ctx.seed}, 20);
    const RngSeed check_lane = derive_stream(RngSeed{ctx.seed}, 21);
    json ks = json::array();
    json reverified = json::array();
    bool all_ok = true;
    std::vector<Bill> bills;
    for (int i = 0; i < o.count; ++i) {
        Bill bill = mint_bill(scheme, derive_trial_seed(mint_lane, static_cast<std::uint64_t>(i)));
        BillVerifyResult check =
            verify_bill(scheme, bill, derive_trial_seed(check_lane, static_cast<std::uint64_t>(i)));
        ks.push_back(bill.k);
        reverified.push_back(check.accepted ? 1 : 0);
        all_ok = all_ok && check.accepted;
        bills.push_back(std::move(bill));
    }
    if (!o.save_bill.empty()) write_bill(o.save_bill, bills.front());
    if (!o.save_registry.empty()) scheme.export_valid_list(o.save_registry);

    json body;
    body["group-order"] = scheme.group_order();
    body["precision-qubits"] = scheme.precision_qubits();
    body["label-qubits"] = scheme.label_qubits();
    body["exact-mode"] = scheme.exact_mode();
    body["count"] = o.count;
    body["ks"] = std::move(ks);
    body["reverified"] = std::move(reverified);
    body["all-reverified"] = all_ok;
    body["registry-size"] = scheme.valid_list().size();
    rep.write_json(std::move(body));
}

struct BillsVerifyOpts {
    BillCommonOpts common;
    std::string load_bill;
    std::string registry;
    bool tamper_k = false;
};

void run_bills_verify(const Ctx& ctx, const BillsVerifyOpts& o) {
    if (o.load_bill.empty()) throw ParameterError("bills-verify requires --load-bill");
    Report rep(ctx, "bills-verify", {"json"});
    echo_bill_flags(rep, o.common);
    rep.arg("load-bill", o.load_bill);
    rep.path_arg("registry", o.registry);
    rep.toggle("tamper-k", o.tamper_k);

    BillScheme scheme = BillScheme::create(bill_params(o.common), RngSeed{ctx.seed});
    std::uint64_t published = 0;
    if (!o.registry.empty()) {
        for (std::uint64_t k : read_int_list(o.registry)) {
            scheme.publish_parameter(k);
            ++published;
        }
    }
    Bill bill = read_bill(o.load_bill);
    if (o.tamper_k) bill.k = (bill.k + 1) % scheme.group_order();
    BillVerifyResult r = verify_bill(scheme, bill, derive_stream(RngSeed{ctx.seed}, 22));

    json body;
    body["claimed-k"] = bill.k;
    body["accepted"] = r.accepted;
    body["measured-value"] = r.measured_value;
    body["registry-size"] = published;
    rep.write_json(std::move(body));
}

struct BillsForgeOpts {
    BillCommonOpts common;
    std::uint64_t k = 0;
    int trials = 2000;
};

void run_bills_forge(const Ctx& ctx, const BillsForgeOpts& o) {
    Report rep(ctx, "bills-forge", {"json"});
    echo_bill_flags(rep, o.common);
    rep.arg("k", o.k);
    rep.arg("trials", o.trials);

    BillScheme scheme = BillScheme::create(bill_params(o.common), RngSeed{ctx.seed});
    // The forger targets a parameter the bank has actually issued.
    scheme.publish_parameter(o.k);
    BillForgeReport r =
        forge_bill_attempt(scheme, o.k, o.trials, derive_stream(RngSeed{ctx.seed}, 23));

    json body;
    body["k"] = o.k;
    body["trials"] = r.trials;
    body["passes"] = r.passes;
    body["pass-rate"] = r.pass_rate;
    body["haar-reference"] = r.haar_reference;
    rep.write_json(std::move(body));
}

// ------------------------------------------------------------ protocols ---

struct ProtocolOpts {
    int n = 3;
    bool forge = false;
    int fail_at = -1;
    std::string record;
};

void add_protocol_flags(CLI::App* sub, const std::shared_ptr<ProtocolOpts>& o) {
    sub->add_option("--n", o->n, "coin width in qubits")->check(CLI::Range(1, 12));
    sub->add_flag("--forge", o->forge, "submit a random forgery instead of the minted coin");
    sub->add_option("--fail-at", o->fail_at, "drop the channel before this message index")
        ->check(CLI::Range(0, 16));
    sub->add_option("--record", o->record, "write the transcript lines to this file");
}

struct ProtocolSetup {
    CoinScheme scheme;
    Coin coin;
    RngSeed run_seed;
};

ProtocolSetup protocol_setup(const Ctx& ctx, const ProtocolOpts& o) {
    CoinScheme scheme = CoinScheme::create(o.n, derive_stream(RngSeed{ctx.seed}, 30));
    Coin coin = o.forge ? Coin{haar_random_state(o.n, derive_stream(RngSeed{ctx.seed}, 31)),
                               kForgedProvenance}
                        : scheme.mint();
    return ProtocolSetup{std::move(scheme), std::move(coin),
                         derive_stream(RngSeed{ctx.seed}, 32)};
}

json protocol_body(const ProtocolSetup& setup, const ProtocolResult& r) {
    json body;
    body["accepted"] = r.accepted;
    body["aborted"] = r.aborted;
    body["abort-step"] = r.abort_step;
    body["merchant-fidelity-to-secret"] =
        fidelity(r.merchant_state, setup.scheme.secret_state());
    json gates;
    gates["x"] = r.transcript.bank_gates.x_gates;
    gates["z"] = r.transcript.bank_gates.z_gates;
    gates["other"] = r.transcript.bank_gates.other_gates;
    body["bank-gates"] = std::move(gates);
    WorkloadRow row = workload_row("flow", r.transcript);
    body["quantum-messages"] = row.quantum_messages;
    body["classical-messages"] = row.classical_messages;
    json lines = json::array();
    for (const std::string& line : r.transcript.to_lines()) lines.push_back(line);
    body["transcript"] = std::move(lines);
    return body;
}

void run_protocol(const Ctx& ctx, const ProtocolOpts& o, bool blind) {
    Report rep(ctx, blind ? "blind-verify" : "online-verify", {"json"});
    rep.arg("n", o.n);
    rep.toggle("forge", o.forge);
    if (o.fail_at >= 0) rep.arg("fail-at", o.fail_at);
    rep.path_arg("record", o.record);

    ProtocolSetup setup = protocol_setup(ctx, o);
    ChannelOptions channel;
    if (o.fail_at >= 0) channel.fail_at_message = static_cast<std::uint64_t>(o.fail_at);
    ProtocolResult r;
    if (blind) {
        BlindOptions options;
        options.channel = channel;
        r = run_blind_verification(setup.scheme, setup.coin, setup.run_seed, options);
    } else {
        r = run_online_verification(setup.scheme, setup.coin, setup.run_seed, channel);
    }
    if (!o.record.empty()) {
        const std::string text = transcript_text(r.transcript);
        write_file(o.record, std::vector<std::uint8_t>(text.begin(), text.end()));
    }
    json body = protocol_body(setup, r);
    body["n"] = o.n;
    body["forged-input"] = o.forge;
    rep.write_json(std::move(body));
}

struct BlindnessOpts {
    int n = 2;
    int runs = 1;
};

void run_blindness_check(const Ctx& ctx, const BlindnessOpts& o) {
    if (o.runs < 0) throw ParameterError("runs must be non-negative");
    Report rep(ctx, "blindness-check", {"json"});
    rep.arg("n", o.n);
    rep.arg("runs", o.runs);

    Rng rng(derive_stream(RngSeed{ctx.seed}, 40));
    QuantumState psi_a = haar_random_state(o.n, rng);
    QuantumState psi_b = haar_random_state(o.n, rng);
    BlindnessReport r =
        blindness_check(psi_a, psi_b, o.runs, derive_stream(RngSeed{ctx.seed}, 41));

    json body;
    body["n"] = r.n;
    body["empty"] = r.empty;
    body["runs"] = r.runs;
    body["keys-averaged"] = r.keys_averaged;
    json slots = json::array();
    for (const std::string& s : r.slots) slots.push_back(s);
    body["slots"] = std::move(slots);
    body["max-distance-to-mixed"] = r.max_distance_to_mixed;
    body["max-distance-between-schemes"] = r.max_distance_between_schemes;
    rep.write_json(std::move(body));
}

struct WorkloadOpts {
    int n = 3;
};

void run_workload(const Ctx& ctx, const WorkloadOpts& o) {
    Report rep(ctx, "workload", {"csv", "json"});
    rep.arg("n", o.n);

    CoinScheme scheme = CoinScheme::create(o.n, derive_stream(RngSeed{ctx.seed}, 30));
    Coin coin = scheme.mint();
    const RngSeed run_seed = derive_stream(RngSeed{ctx.seed}, 32);
    ProtocolResult online = run_online_verification(scheme, coin, run_seed);
    ProtocolResult blind = run_blind_verification(scheme, coin, run_seed);
    std::vector<WorkloadRow> rows = compare_bank_workload(online.transcript, blind.transcript);

    const std::string note = "blind-flow bank budget: at most n X gates and n Z gates";
    if (rep.format() == "csv") {
        std::vector<std::string> lines;
        for (const WorkloadRow& r : rows) {
            lines.push_back(r.flow + "," + std::to_string(r.x_gates) + "," +
                            std::to_string(r.z_gates) + "," + std::to_string(r.other_gates) +
                            "," + std::to_string(r.total_bank_gates) + "," +
                            std::to_string(r.quantum_messages) + "," +
                            std::to_string(r.classical_messages));
        }
        rep.write_csv({note},
                      "flow,x_gates,z_gates,other_gates,total_bank_gates,quantum_messages,"
                      "classical_messages",
                      lines);
        return;
    }
    json body;
    body["note"] = note;
    json jrows = json::array();
    for (const WorkloadRow& r : rows) {
        json row;
        row["flow"] = r.flow;
        row["x-gates"] = r.x_gates;
        row["z-gates"] = r.z_gates;
        row["other-gates"] = r.other_gates;
        row["total-bank-gates"] = r.total_bank_gates;
        row["quantum-messages"] = r.quantum_messages;
        row["classical-messages"] = r.classical_messages;
        jrows.push_back(std::move(row));
    }
    body["rows"] = std::move(jrows);
    rep.write_json(std::move(body));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum cash laboratory: seeded experiments over simulated "
                 "coins, bills, and verification protocols"};
    app.require_subcommand(1);

    Ctx ctx;
    app.add_option("--seed", ctx.seed, "base seed; every derived stream is a function of it");
    app.add_option("--out", ctx.out, "output path, or - for stdout");
    app.add_option("--format", ctx.format, "csv or json where the subcommand supports both");
    app.add_flag("--reveal-secret", ctx.reveal_secret,
                 "include bank-side secrets in the report");

    auto* mint = app.add_subcommand("mint-verify", "mint coins and verify them repeatedly");
    auto mint_opts = std::make_shared<MintVerifyOpts>();
    mint->fallthrough();
    mint->add_option("--n", mint_opts->n, "coin width in qubits")->check(CLI::Range(1, 20));
    mint->add_option("--coins", mint_opts->coins, "coins to mint");
    mint->add_option("--trials", mint_opts->trials, "verifications, cycling over the coins");
    mint->add_option("--cap", mint_opts->cap, "issuance cap; 0 selects n^3");
    mint->add_option("--save-scheme", mint_opts->save_scheme, "write the scheme to this file");
    mint->add_option("--load-scheme", mint_opts->load_scheme,
                     "read the scheme from this file instead of creating one");
    mint->callback([&ctx, mint_opts] { run_mint_verify(ctx, *mint_opts); });

    auto* transfer = app.add_subcommand("transfer-chain", "verify one coin round after round");
    auto transfer_opts = std::make_shared<TransferOpts>();
    transfer->fallthrough();
    transfer->add_option("--n", transfer_opts->n, "coin width in qubits")->check(CLI::Range(1, 20));
    transfer->add_option("--rounds", transfer_opts->rounds, "chain length")
        ->check(CLI::Range(1, 1000000));
    transfer->callback([&ctx, transfer_opts] { run_transfer_chain(ctx, *transfer_opts); });

    auto* robust = app.add_subcommand("robustness", "verify noisy coins and count passes");
    auto robust_opts = std::make_shared<RobustnessOpts>();
    robust->fallthrough();
    robust->add_option("--n", robust_opts->n, "coin width in qubits")->check(CLI::Range(1, 20));
    robust->add_option("--epsilon", robust_opts->epsilon, "perturbation amplitude in [0, 1]");
    robust->add_option("--trials", robust_opts->trials, "noisy coins to test")
        ->check(CLI::Range(1, 1000000));
    robust->callback([&ctx, robust_opts] { run_robustness(ctx, *robust_opts); });

    auto* anon = app.add_subcommand("anonymity", "bank tries to identify the spender");
    auto anon_opts = std::make_shared<AnonymityOpts>();
    anon->fallthrough();
    anon->add_option("--users", anon_opts->users, "user count")->check(CLI::Range(2, 4096));
    anon->add_option("--trials", anon_opts->trials, "identification rounds")
        ->check(CLI::Range(1, 1000000));
    anon->add_option("--n", anon_opts->n, "coin width; 0 selects ceil(log2 users)")
        ->check(CLI::Range(0, 20));
    anon->add_flag("--cheating", anon_opts->cheating, "bank marks coins with user identity");
    anon->callback([&ctx, anon_opts] { run_anonymity(ctx, *anon_opts); });

    auto* retry = app.add_subcommand("forge-retry", "measure-and-retry forging attempts");
    auto retry_opts = std::make_shared<ForgeRetryOpts>();
    retry->fallthrough();
    retry->add_option("--n", retry_opts->n, "coin width in qubits")->check(CLI::Range(1, 16));
    retry->add_option("--trials", retry_opts->trials, "independent forging campaigns");
    retry->add_option("--max-tries", retry_opts->max_tries, "per-campaign ceiling; 0 = 64*2^n");
    retry->callback([&ctx, retry_opts] { run_forge_retry(ctx, *retry_opts); });

    auto* grover = app.add_subcommand("forge-grover", "amplitude-amplification forger");
    auto grover_opts = std::make_shared<ForgeGroverOpts>();
    grover->fallthrough();
    grover->add_option("--n", grover_opts->n, "coin width in qubits")->check(CLI::Range(1, 20));
    grover->add_option("--p", grover_opts->p, "target overlap in (0, 1]");
    grover->callback([&ctx, grover_opts] { run_forge_grover(ctx, *grover_opts); });

    auto* bound = app.add_subcommand("bound-table", "query lower bounds over an (n, k) grid");
    auto bound_opts = std::make_shared<BoundTableOpts>();
    bound->fallthrough();
    bound->add_option("--n-lo", bound_opts->n_lo, "smallest n");
    bound->add_option("--n-hi", bound_opts->n_hi, "largest n");
    bound->add_option("--k-pow-hi", bound_opts->k_pow_hi,
                      "k sweeps {0, 1} and powers of two up to 2^this");
    bound->add_option("--p", bound_opts->p, "success parameter in (0, 1]");
    bound->callback([&ctx, bound_opts] { run_bound_table(ctx, *bound_opts); });

    auto* scaling = app.add_subcommand("scaling", "forger queries against sqrt(2^n)");
    auto scaling_opts = std::make_shared<ScalingOpts>();
    scaling->fallthrough();
    scaling->add_option("--n-lo", scaling_opts->n_lo, "smallest n")->check(CLI::Range(1, 20));
    scaling->add_option("--n-hi", scaling_opts->n_hi, "largest n")->check(CLI::Range(1, 20));
    scaling->add_option("--p", scaling_opts->p, "target overlap in (0, 1]");
    scaling->callback([&ctx, scaling_opts] { run_scaling(ctx, *scaling_opts); });

    auto* bb84 = app.add_subcommand("bb84-attack", "measure basis-encoded coins in both bases");
    auto bb84_opts = std::make_shared<Bb84Opts>();
    bb84->fallthrough();
    bb84->add_option("--n", bb84_opts->n, "qubits per coin")->check(CLI::Range(1, 24));
    bb84->add_option("--copies", bb84_opts->copies, "coin copies granted to the attacker")
        ->check(CLI::Range(1, 4096));
    bb84->add_option("--trials", bb84_opts->trials, "independent attack instances");
    bb84->add_option("--forged-coins", bb84_opts->forged_coins,
                     "forged coins submitted per instance")
        ->check(CLI::Range(1, 100000));
    bb84->callback([&ctx, bb84_opts] { run_bb84_attack(ctx, *bb84_opts); });

    auto* bmint = app.add_subcommand("bills-mint", "draw bills and re-verify them");
    auto bmint_opts = std::make_shared<BillsMintOpts>();
    bmint->fallthrough();
    auto bmint_common = std::shared_ptr<BillCommonOpts>(bmint_opts, &bmint_opts->common);
    add_bill_flags(bmint, bmint_common);
    bmint->add_option("--count", bmint_opts->count, "bills to mint");
    bmint->add_option("--save-bill", bmint_opts->save_bill, "write the first bill to this file");
    bmint->add_option("--save-registry", bmint_opts->save_registry,
                      "write the published parameter list to this file");
    bmint->callback([&ctx, bmint_opts] { run_bills_mint(ctx, *bmint_opts); });

    auto* bverify = app.add_subcommand("bills-verify", "verify a stored bill");
    auto bverify_opts = std::make_shared<BillsVerifyOpts>();
    bverify->fallthrough();
    auto bverify_common = std::shared_ptr<BillCommonOpts>(bverify_opts, &bverify_opts->common);
    add_bill_flags(bverify, bverify_common);
    bverify->add_option("--load-bill", bverify_opts->load_bill, "bill file to verify");
    bverify->add_option("--registry", bverify_opts->registry, "published parameter list file");
    bverify->add_flag("--tamper-k", bverify_opts->tamper_k,
                      "shift the claimed parameter by one before verifying");
    bverify->callback([&ctx, bverify_opts] { run_bills_verify(ctx, *bverify_opts); });

    auto* bforge = app.add_subcommand("bills-forge", "submit random bills under a claimed k");
    auto bforge_opts = std::make_shared<BillsForgeOpts>();
    bforge->fallthrough();
    auto bforge_common = std::shared_ptr<BillCommonOpts>(bforge_opts, &bforge_opts->common);
    add_bill_flags(bforge, bforge_common);
    bforge->add_option("--k", bforge_opts->k, "claimed parameter");
    bforge->add_option("--trials", bforge_opts->trials, "forged submissions")
        ->check(CLI::Range(1, 1000000));
    bforge->callback([&ctx, bforge_opts] { run_bills_forge(ctx, *bforge_opts); });

    auto* online = app.add_subcommand("online-verify", "send the coin to the bank in the clear");
    auto online_opts = std::make_shared<ProtocolOpts>();
    online->fallthrough();
    add_protocol_flags(online, online_opts);
    online->callback([&ctx, online_opts] { run_protocol(ctx, *online_opts, false); });

    auto* blind = app.add_subcommand("blind-verify", "pad the coin before the bank sees it");
    auto blind_opts = std::make_shared<ProtocolOpts>();
    blind->fallthrough();
    add_protocol_flags(blind, blind_opts);
    blind->callback([&ctx, blind_opts] { run_protocol(ctx, *blind_opts, true); });

    auto* blindness = app.add_subcommand("blindness-check",
                                         "average padded payloads over all keys");
    auto blindness_opts = std::make_shared<BlindnessOpts>();
    blindness->fallthrough();
    blindness->add_option("--n", blindness_opts->n, "coin width in qubits")
        ->check(CLI::Range(1, 3));
    blindness->add_option("--runs", blindness_opts->runs, "independent protocol runs")
        ->check(CLI::Range(0, 64));
    blindness->callback([&ctx, blindness_opts] { run_blindness_check(ctx, *blindness_opts); });

    auto* work = app.add_subcommand("workload", "bank gate counts, online against blind");
    auto work_opts = std::make_shared<WorkloadOpts>();
    work->fallthrough();
    work->add_option("--n", work_opts->n, "coin width in qubits")->check(CLI::Range(1, 12));
    work->callback([&ctx, work_opts] { run_workload(ctx, *work_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "experiment failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
