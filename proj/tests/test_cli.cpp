#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aegis/csv.hpp"
#include "support/helpers.hpp"
#include "support/schema_check.hpp"

namespace fs = std::filesystem;
using testsupport::fresh_dir;
using testsupport::read_file;
using testsupport::run;
using testsupport::RunResult;
using testsupport::write_file;

namespace {

const std::string kBin = AEGIS_CLI_BIN;
const std::string kFixtures = AEGIS_FIXTURES_DIR;

// Every invocation pins the seed environment so ambient variables cannot
// leak into the comparisons.
RunResult cli(const std::string& args, const fs::path& scratch,
              const std::string& env = "env -u CRYPTO_AEGIS_SEED ") {
    return run(env + kBin + " " + args, scratch);
}

testsupport::SchemaChecker report_checker() {
    return testsupport::SchemaChecker(
        nlohmann::json::parse(read_file(fs::path(AEGIS_SCHEMAS_DIR) / "report.schema.json")));
}

void expect_schema_valid(const fs::path& report_path) {
    const nlohmann::json doc = nlohmann::json::parse(read_file(report_path));
    const std::vector<std::string> errors = report_checker().validate(doc);
    for (const std::string& e : errors) UNSCOPED_INFO(report_path.string() + " " + e);
    REQUIRE(errors.empty());
}

// Two tiny, well-separated directional classes for end-to-end runs.
void write_test_profiles(const fs::path& path) {
    const nlohmann::json j = {
        {"profiles",
         {{{"name", "Alpha"},
           {"direction", "in"},
           {"median_dt_s", 0.002},
           {"median_sz_b", 1200},
           {"sigma_log_dt", 0.5},
           {"sz_spread_b", 80}},
          {{"name", "Beta"},
           {"direction", "in"},
           {"median_dt_s", 1.3},
           {"median_sz_b", 110},
           {"sigma_log_dt", 0.5},
           {"sz_spread_b", 80}}}}};
    write_file(path, j.dump(2));
}

}  // namespace

TEST_CASE("ingest splits a pcap into per-direction trace CSVs") {
    const fs::path dir = fresh_dir("cli-ingest");
    const RunResult r = cli("ingest " + kFixtures + "/three_packets.pcap"
                            " --local-subnet 192.168.1.0/24 --out-dir " + dir.string(),
                            dir);
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("ingoing: 1 packets") != std::string::npos);
    CHECK(r.out.find("outgoing: 2 packets") != std::string::npos);

    const aegis::CsvParseResult in_trace =
        aegis::load_canonical_csv((dir / "three_packets.in.csv").string());
    REQUIRE(in_trace.records.size() == 1);
    CHECK(in_trace.records[0].size == 1434);

    const aegis::CsvParseResult out_trace =
        aegis::load_canonical_csv((dir / "three_packets.out.csv").string());
    REQUIRE(out_trace.records.size() == 2);
    CHECK(out_trace.records[0].size == 74);
    CHECK(out_trace.records[1].size == 66);
}

TEST_CASE("ingest rejects a pcap with a garbage magic") {
    const fs::path dir = fresh_dir("cli-ingest-bad");
    write_file(dir / "junk.pcap", std::string(64, 'Z'));
    const RunResult r = cli("ingest " + (dir / "junk.pcap").string() +
                            " --local-subnet 10.0.0.0/8 --out-dir " + dir.string(),
                            dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("not a pcap file") != std::string::npos);
}

TEST_CASE("ingest accepts canonical CSV input without a subnet") {
    const fs::path dir = fresh_dir("cli-ingest-csv");
    write_file(dir / "mix.csv",
               "t_rel_s,size_bytes,direction\n"
               "0.000000,100,out\n"
               "0.100000,1400,in\n"
               "0.200000,60,out\n");
    const RunResult r =
        cli("ingest " + (dir / "mix.csv").string() + " --out-dir " + dir.string(), dir);
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir / "mix.in.csv"));
    CHECK(fs::exists(dir / "mix.out.csv"));
    CHECK(aegis::load_canonical_csv((dir / "mix.out.csv").string()).records.size() == 2);
}

TEST_CASE("synth writes one deterministic CSV per profile") {
    const fs::path dir = fresh_dir("cli-synth");
    write_test_profiles(dir / "profiles.json");

    const std::string base = "synth " + (dir / "profiles.json").string() + " -n 60 --seed 7";
    const RunResult a = cli(base + " --out-dir " + (dir / "a").string(), dir);
    CAPTURE(a.out, a.err);
    REQUIRE(a.exit_code == 0);
    REQUIRE(fs::exists(dir / "a" / "alpha.in.csv"));
    REQUIRE(fs::exists(dir / "a" / "beta.in.csv"));

    const RunResult b = cli(base + " --out-dir " + (dir / "b").string(), dir);
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(dir / "a" / "alpha.in.csv") == read_file(dir / "b" / "alpha.in.csv"));
    CHECK(read_file(dir / "a" / "beta.in.csv") == read_file(dir / "b" / "beta.in.csv"));

    const RunResult other = cli("synth " + (dir / "profiles.json").string() +
                                " -n 60 --seed 8 --out-dir " + (dir / "c").string(),
                                dir);
    REQUIRE(other.exit_code == 0);
    CHECK(read_file(dir / "a" / "alpha.in.csv") != read_file(dir / "c" / "alpha.in.csv"));

    const RunResult tiny = cli("synth " + (dir / "profiles.json").string() +
                               " -n 1 --out-dir " + (dir / "d").string(),
                               dir);
    CHECK(tiny.exit_code == 2);
    CHECK(tiny.err.find("at least 2 packets") != std::string::npos);
}

TEST_CASE("seed falls back to CRYPTO_AEGIS_SEED") {
    const fs::path dir = fresh_dir("cli-seed-env");
    write_test_profiles(dir / "profiles.json");
    const std::string tail = "synth " + (dir / "profiles.json").string() + " -n 40";

    const RunResult flag = cli(tail + " --seed 7 --out-dir " + (dir / "flag").string(), dir);
    REQUIRE(flag.exit_code == 0);
    const RunResult env = cli(tail + " --out-dir " + (dir / "env").string(), dir,
                              "env CRYPTO_AEGIS_SEED=7 ");
    REQUIRE(env.exit_code == 0);
    CHECK(read_file(dir / "flag" / "alpha.in.csv") == read_file(dir / "env" / "alpha.in.csv"));

    // The flag wins over the environment.
    const RunResult both = cli(tail + " --seed 7 --out-dir " + (dir / "both").string(), dir,
                               "env CRYPTO_AEGIS_SEED=99 ");
    REQUIRE(both.exit_code == 0);
    CHECK(read_file(dir / "flag" / "alpha.in.csv") == read_file(dir / "both" / "alpha.in.csv"));

    const RunResult bad = cli(tail + " --out-dir " + (dir / "bad").string(), dir,
                              "env CRYPTO_AEGIS_SEED=banana ");
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("CRYPTO_AEGIS_SEED") != std::string::npos);
}

TEST_CASE("cv writes a schema-valid, byte-stable report") {
    const fs::path dir = fresh_dir("cli-cv");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 80 --seed 3 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const std::string traces =
        (dir / "traces" / "alpha.in.csv").string() + " " + (dir / "traces" / "beta.in.csv").string();
    const std::string base = "cv " + traces + " --folds 3 --trees 5 --seed 11 --positive alpha";

    const RunResult a = cli(base + " --out-dir " + (dir / "r1").string(), dir);
    CAPTURE(a.out, a.err);
    REQUIRE(a.exit_code == 0);
    const fs::path report = dir / "r1" / "cv.in.report.json";
    REQUIRE(fs::exists(report));
    expect_schema_valid(report);

    const nlohmann::json j = nlohmann::json::parse(read_file(report));
    CHECK(j["command"] == "cv");
    CHECK(j["direction"] == "in");
    CHECK(j["classes"] == nlohmann::json({"alpha", "beta"}));
    CHECK(j["confusion"]["tp"].is_number_unsigned());
    REQUIRE(j.contains("binary"));
    CHECK(j["binary"]["positive_class"] == "Crypto");
    CHECK(j["binary"]["auc"].is_number());
    CHECK(fs::exists(dir / "r1" / "cv.in.roc.csv"));
    CHECK(read_file(dir / "r1" / "cv.in.roc.csv").rfind("fpr,tpr\n", 0) == 0);

    const RunResult b = cli(base + " --out-dir " + (dir / "r2").string(), dir);
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(report) == read_file(dir / "r2" / "cv.in.report.json"));
    CHECK(read_file(dir / "r1" / "cv.in.roc.csv") == read_file(dir / "r2" / "cv.in.roc.csv"));
}

TEST_CASE("cv refuses a single-class corpus") {
    const fs::path dir = fresh_dir("cli-cv-one");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 40 --seed 3 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const RunResult r = cli("cv " + (dir / "traces" / "alpha.in.csv").string() +
                            " --folds 3 --trees 5 --out-dir " + (dir / "r").string(),
                            dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("need at least 2 classes, have 1") != std::string::npos);
}

TEST_CASE("cv window sweep reports importance per window") {
    const fs::path dir = fresh_dir("cli-sweep");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 60 --seed 5 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const std::string traces =
        (dir / "traces" / "alpha.in.csv").string() + " " + (dir / "traces" / "beta.in.csv").string();
    const RunResult r = cli("cv " + traces + " --window-sweep 2:3 --trees 5 --seed 2 --out-dir " +
                            (dir / "r").string(),
                            dir);
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    const fs::path report = dir / "r" / "sweep.in.report.json";
    REQUIRE(fs::exists(report));
    expect_schema_valid(report);
    const nlohmann::json j = nlohmann::json::parse(read_file(report));
    CHECK(j["command"] == "sweep");
    REQUIRE(j["window_sweep"].size() == 2);
    CHECK(j["window_sweep"][0]["w"] == 2);
    CHECK(j["window_sweep"][1]["w"] == 3);
    CHECK(j["window_sweep"][0]["score"].contains("mm_dt"));

    const RunResult bad = cli("cv " + traces + " --window-sweep 3:2 --out-dir " +
                              (dir / "bad").string(),
                              dir);
    CHECK(bad.exit_code == 2);
}

TEST_CASE("detect --from-confusion reproduces the published miner rates") {
    const fs::path dir = fresh_dir("cli-counts");
    const RunResult r = cli("detect --from-confusion tn=288452 fp=10255 fn=7979 tp=290728"
                            " --out-dir " + dir.string(),
                            dir);
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("precision 0.9659") != std::string::npos);
    CHECK(r.out.find("recall 0.9733") != std::string::npos);
    CHECK(r.out.find("f1 0.9696") != std::string::npos);

    const fs::path report = dir / "detect.counts.report.json";
    REQUIRE(fs::exists(report));
    expect_schema_valid(report);
    const nlohmann::json j = nlohmann::json::parse(read_file(report));
    CHECK(j["counts"]["tp"] == 290728);

    const RunResult bad = cli("detect --from-confusion tn=1 fp=2 fn=3 oops=4 --out-dir " +
                              dir.string(),
                              dir);
    CHECK(bad.exit_code == 2);
}

TEST_CASE("detect evaluates a corpus per direction") {
    const fs::path dir = fresh_dir("cli-detect");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 80 --seed 9 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const std::string traces =
        (dir / "traces" / "alpha.in.csv").string() + " " + (dir / "traces" / "beta.in.csv").string();
    const RunResult r = cli("detect " + traces +
                            " --positive alpha --folds 3 --trees 5 --seed 4 --out-dir " +
                            (dir / "r").string(),
                            dir);
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    const fs::path report = dir / "r" / "detect.in.report.json";
    REQUIRE(fs::exists(report));
    expect_schema_valid(report);
    const nlohmann::json j = nlohmann::json::parse(read_file(report));
    CHECK(j["command"] == "detect");
    CHECK(j["evaluation"]["confusion"]["tp"].is_number_unsigned());
    CHECK(fs::exists(dir / "r" / "detect.in.roc.csv"));

    const RunResult missing = cli("detect " + traces + " --out-dir " + (dir / "x").string(), dir);
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("--positive") != std::string::npos);
}

TEST_CASE("model train and predict round-trip deterministically") {
    const fs::path dir = fresh_dir("cli-model");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 60 --seed 13 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const std::string traces =
        (dir / "traces" / "alpha.in.csv").string() + " " + (dir / "traces" / "beta.in.csv").string();

    const std::string train_cmd = "model train " + traces + " --trees 5 --seed 21 --out ";
    const RunResult t1 = cli(train_cmd + (dir / "m1.json").string(), dir);
    CAPTURE(t1.out, t1.err);
    REQUIRE(t1.exit_code == 0);
    const RunResult t2 = cli(train_cmd + (dir / "m2.json").string(), dir);
    REQUIRE(t2.exit_code == 0);
    CHECK(read_file(dir / "m1.json") == read_file(dir / "m2.json"));

    const std::string predict_cmd = "model predict --model " + (dir / "m1.json").string() +
                                    " --input " + (dir / "traces" / "alpha.in.csv").string() +
                                    " --out ";
    const RunResult p1 = cli(predict_cmd + (dir / "p1.csv").string(), dir);
    CAPTURE(p1.out, p1.err);
    REQUIRE(p1.exit_code == 0);
    const RunResult p2 = cli(predict_cmd + (dir / "p2.csv").string(), dir);
    REQUIRE(p2.exit_code == 0);
    const std::string pred = read_file(dir / "p1.csv");
    CHECK(pred == read_file(dir / "p2.csv"));
    CHECK(pred.rfind("row,label\n", 0) == 0);
    CHECK(pred.find("alpha") != std::string::npos);  // separable: mostly its own class

    // Mixed directions cannot share one model.
    write_file(dir / "other.out.csv",
               "t_rel_s,size_bytes,direction\n"
               "0.000000,100,out\n"
               "0.500000,100,out\n"
               "1.000000,100,out\n");
    const RunResult mixed = cli("model train " + traces + " " + (dir / "other.out.csv").string() +
                                " --trees 5 --out " + (dir / "m3.json").string(),
                                dir);
    CHECK(mixed.exit_code == 2);
    CHECK(mixed.err.find("single direction") != std::string::npos);
}

TEST_CASE("a corrupt model file is refused") {
    const fs::path dir = fresh_dir("cli-model-bad");
    write_file(dir / "trace.in.csv",
               "t_rel_s,size_bytes,direction\n"
               "0.000000,100,in\n"
               "0.500000,100,in\n"
               "1.000000,100,in\n");
    write_file(dir / "broken.json", R"({"format": "crypto-aegis-forest", "version": )");
    const RunResult r = cli("model predict --model " + (dir / "broken.json").string() +
                            " --input " + (dir / "trace.in.csv").string(),
                            dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("invalid JSON") != std::string::npos);

    write_file(dir / "foreign.json", R"({"format": "something-else"})");
    const RunResult f = cli("model predict --model " + (dir / "foreign.json").string() +
                            " --input " + (dir / "trace.in.csv").string(),
                            dir);
    CHECK(f.exit_code == 2);
    CHECK(f.err.find("not a model file") != std::string::npos);
}

TEST_CASE("detect --model raises the alert exit code") {
    const fs::path dir = fresh_dir("cli-alert");
    write_test_profiles(dir / "profiles.json");
    REQUIRE(cli("synth " + (dir / "profiles.json").string() + " -n 60 --seed 17 --out-dir " +
                    (dir / "traces").string(),
                dir)
                .exit_code == 0);
    const std::string traces =
        (dir / "traces" / "alpha.in.csv").string() + " " + (dir / "traces" / "beta.in.csv").string();
    REQUIRE(cli("model train " + traces + " --positive alpha --trees 5 --seed 2 --out " +
                    (dir / "model.json").string(),
                dir)
                .exit_code == 0);

    const std::string detect_cmd = "detect --model " + (dir / "model.json").string() +
                                   " --target " + (dir / "traces" / "alpha.in.csv").string() +
                                   " --out-dir " + dir.string();
    const RunResult alert = cli(detect_cmd + " --alert-threshold 0.0", dir);
    CAPTURE(alert.out, alert.err);
    CHECK(alert.exit_code == 1);
    CHECK(alert.out.find("ALERT") != std::string::npos);
    REQUIRE(fs::exists(dir / "detect.target.report.json"));
    const nlohmann::json j = nlohmann::json::parse(read_file(dir / "detect.target.report.json"));
    CHECK(j["alert"] == true);

    const RunResult calm = cli(detect_cmd + " --alert-threshold 2.0", dir);
    CHECK(calm.exit_code == 0);
    CHECK(calm.out.find("no alert") != std::string::npos);

    const RunResult no_thr = cli(detect_cmd, dir);
    CHECK(no_thr.exit_code == 0);
    CHECK(no_thr.out.find("alert_fraction") != std::string::npos);
}
