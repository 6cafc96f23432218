// crypto-aegis: detect cryptocurrency clients (full nodes, pool miners) from
// encrypted traffic metadata. Subcommands cover the whole pipeline: ingest
// captures, synthesize calibrated traces, cross-validate, train/apply models,
// and run the binary Crypto-vs-Standard detector.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aegis/csv.hpp"
#include "aegis/dataset.hpp"
#include "aegis/features.hpp"
#include "aegis/forest.hpp"
#include "aegis/metrics.hpp"
#include "aegis/pcap.hpp"
#include "aegis/pipeline.hpp"
#include "aegis/rng.hpp"
#include "aegis/synth.hpp"
#include "aegis/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonParams {
    std::size_t window = 5;
    std::size_t trees = 20;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    const CLI::Option* seed_opt = nullptr;
    std::size_t per_class_rows = 0;  // 0 = keep everything
    std::string out_dir = ".";
};

std::uint64_t effective_seed(const CommonParams& p) {
    if (p.seed_opt != nullptr && p.seed_opt->count() > 0) return p.seed;
    if (const char* env = std::getenv("CRYPTO_AEGIS_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') {
            throw aegis::Error("CRYPTO_AEGIS_SEED is not an integer: " + std::string(env));
        }
        return v;
    }
    return 0;
}

std::size_t row_cap(const CommonParams& p) {
    return p.per_class_rows == 0 ? aegis::kAllRows : p.per_class_rows;
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw aegis::Error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string slug(const std::string& name) {
    std::string s;
    for (const char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!s.empty() && s.back() != '-') {
            s += '-';
        }
    }
    while (!s.empty() && s.back() == '-') s.pop_back();
    return s.empty() ? "trace" : s;
}

// "bitcoin.in.csv" -> class "bitcoin"; the direction suffix is optional.
std::string class_from_path(const fs::path& path) {
    std::string stem = path.stem().string();
    for (const char* suffix : {".in", ".out"}) {
        const std::size_t len = std::string(suffix).size();
        if (stem.size() > len && stem.compare(stem.size() - len, len, suffix) == 0) {
            stem.resize(stem.size() - len);
            break;
        }
    }
    return stem;
}

aegis::DirectionalTrace load_trace(const std::string& path) {
    const aegis::CsvParseResult parsed = aegis::load_canonical_csv(path);
    const std::optional<aegis::Direction> dir = aegis::uniform_direction(parsed.records);
    if (!dir) {
        throw aegis::Error(path + ": expected a single-direction trace (run ingest first)");
    }
    aegis::DirectionalTrace trace;
    trace.direction = *dir;
    trace.packets = parsed.records;
    trace.label.application = class_from_path(path);
    return trace;
}

std::map<aegis::Direction, std::vector<aegis::DirectionalTrace>> load_by_direction(
    const std::vector<std::string>& paths) {
    std::map<aegis::Direction, std::vector<aegis::DirectionalTrace>> by_dir;
    for (const std::string& p : paths) by_dir[load_trace(p).direction].push_back(load_trace(p));
    return by_dir;
}

std::set<std::string> split_classes(const std::string& csv) {
    std::set<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.insert(item);
    }
    return out;
}

ordered_json params_json(const CommonParams& p, std::uint64_t seed) {
    return {{"window", p.window},
            {"trees", p.trees},
            {"folds", p.folds},
            {"seed", seed},
            {"per_class_rows", p.per_class_rows}};
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// --- ingest ----------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string local_subnet;
    CommonParams common;
};

bool looks_like_pcap(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".pcap" || ext == ".cap") return true;
    std::ifstream in(path, std::ios::binary);
    unsigned char magic[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(magic), 4);
    const auto is = [&](unsigned a, unsigned b, unsigned c, unsigned d) {
        return magic[0] == a && magic[1] == b && magic[2] == c && magic[3] == d;
    };
    return is(0xD4, 0xC3, 0xB2, 0xA1) || is(0xA1, 0xB2, 0xC3, 0xD4) ||
           is(0x4D, 0x3C, 0xB2, 0xA1) || is(0xA1, 0xB2, 0x3C, 0x4D);
}

int cmd_ingest(const IngestArgs& args) {
    std::vector<aegis::PacketRecord> records;
    aegis::PcapDiagnostics diag;
    bool from_pcap = false;
    if (looks_like_pcap(args.input)) {
        if (args.local_subnet.empty()) {
            throw aegis::Error("pcap input requires --local-subnet");
        }
        records = aegis::load_pcap(args.input, aegis::Subnet::parse(args.local_subnet), &diag);
        from_pcap = true;
    } else {
        records = aegis::load_canonical_csv(args.input).records;
    }

    aegis::TraceLabel label;
    label.application = class_from_path(args.input);
    const auto [ingoing, outgoing] = aegis::split_directions(records, label);

    const fs::path dir(args.common.out_dir);
    fs::create_directories(dir);
    const std::string stem = class_from_path(args.input);
    for (const aegis::DirectionalTrace* t : {&ingoing, &outgoing}) {
        std::ostringstream csv;
        aegis::write_canonical_csv(csv, t->packets);
        const fs::path out = dir / (stem + "." + std::string(aegis::to_token(t->direction)) +
                                    ".csv");
        atomic_write(out, csv.str());
        std::cout << aegis::to_string(t->direction) << ": " << t->packets.size()
                  << " packets -> " << out.string() << "\n";
    }
    if (from_pcap) {
        if (diag.skipped_non_ip > 0) {
            std::cout << "skipped non-IP frames: " << diag.skipped_non_ip << "\n";
        }
        if (diag.skipped_vlan_deep > 0) {
            std::cout << "skipped nested-VLAN frames: " << diag.skipped_vlan_deep << "\n";
        }
        if (diag.local_to_local > 0) {
            std::cout << "local-to-local packets (tagged outgoing): " << diag.local_to_local
                      << "\n";
        }
    }
    return 0;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string profile_file;
    std::size_t n_packets = 0;
    CommonParams common;
};

int cmd_synth(const SynthArgs& args) {
    aegis::SynthConfig cfg;
    cfg.profiles = aegis::load_profiles(args.profile_file);
    cfg.n_packets = args.n_packets;
    cfg.seed = effective_seed(args.common);

    const std::vector<aegis::DirectionalTrace> corpus = aegis::build_corpus(cfg);
    const fs::path dir(args.common.out_dir);
    fs::create_directories(dir);
    for (const aegis::DirectionalTrace& trace : corpus) {
        std::ostringstream csv;
        aegis::write_canonical_csv(csv, trace.packets);
        const fs::path out = dir / (slug(trace.label.application) + "." +
                                    std::string(aegis::to_token(trace.direction)) + ".csv");
        atomic_write(out, csv.str());
        std::cout << out.string() << ": " << trace.packets.size() << " packets\n";
    }
    return 0;
}

// --- cv ---------------------------------------------------------------------

struct CvArgs {
    std::vector<std::string> inputs;
    std::string positive_csv;
    std::string window_sweep;  // "lo:hi"
    CommonParams common;
};

std::pair<std::size_t, std::size_t> parse_sweep_range(const std::string& s) {
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos) throw aegis::Error("--window-sweep expects LO:HI");
    try {
        const std::size_t lo = std::stoul(s.substr(0, colon));
        const std::size_t hi = std::stoul(s.substr(colon + 1));
        if (lo < 1 || hi < lo) throw aegis::Error("--window-sweep expects 1 <= LO <= HI");
        return {lo, hi};
    } catch (const std::invalid_argument&) {
        throw aegis::Error("--window-sweep expects LO:HI");
    } catch (const std::out_of_range&) {
        throw aegis::Error("--window-sweep expects LO:HI");
    }
}

ordered_json importance_json(const aegis::ImportanceReport& imp) {
    ordered_json score, mean_delta, std_delta;
    for (std::size_t f = 0; f < aegis::kNumFeatures; ++f) {
        score[aegis::kFeatureNames[f]] = imp.score[f];
        mean_delta[aegis::kFeatureNames[f]] = imp.mean_delta[f];
        std_delta[aegis::kFeatureNames[f]] = imp.std_delta[f];
    }
    return {{"score", score}, {"mean_delta", mean_delta}, {"std_delta", std_delta}};
}

int cmd_cv(const CvArgs& args) {
    const std::uint64_t seed = effective_seed(args.common);
    const auto by_dir = load_by_direction(args.inputs);
    const std::set<std::string> positive = split_classes(args.positive_csv);
    fs::create_directories(args.common.out_dir);

    for (const auto& [direction, traces] : by_dir) {
        const std::string dir_token(aegis::to_token(direction));

        if (!args.window_sweep.empty()) {
            const auto [lo, hi] = parse_sweep_range(args.window_sweep);
            const std::vector<aegis::ImportanceSweepRow> sweep = aegis::window_sweep(
                traces, lo, hi, args.common.trees, seed, row_cap(args.common));

            ordered_json j;
            j["tool"] = "crypto-aegis";
            j["command"] = "sweep";
            j["direction"] = dir_token;
            j["params"] = params_json(args.common, seed);
            j["window_sweep"] = ordered_json::array();
            std::cout << dir_token << " window sweep (importance score per feature):\n";
            std::cout << "  w  oob_err";
            for (const char* name : aegis::kFeatureNames) std::printf("  %8s", name);
            std::cout << "\n";
            for (const aegis::ImportanceSweepRow& row : sweep) {
                ordered_json rj = importance_json(row.importance);
                rj["w"] = row.window;
                rj["oob_error"] = row.oob;
                j["window_sweep"].push_back(
                    {{"w", row.window}, {"oob_error", row.oob}, {"score", rj["score"]},
                     {"mean_delta", rj["mean_delta"]}, {"std_delta", rj["std_delta"]}});
                std::printf("%3zu  %7.4f", row.window, row.oob);
                for (std::size_t f = 0; f < aegis::kNumFeatures; ++f) {
                    std::printf("  %8.3f", row.importance.score[f]);
                }
                std::cout << "\n";
            }
            atomic_write(fs::path(args.common.out_dir) / ("sweep." + dir_token + ".report.json"),
                         j.dump(2) + "\n");
            continue;
        }

        const aegis::LabeledDataset ds =
            aegis::dataset_from_traces(traces, args.common.window, row_cap(args.common));
        if (ds.class_names.size() < 2) {
            throw aegis::Error(dir_token + ": need at least 2 classes, have " +
                               std::to_string(ds.class_names.size()));
        }
        const aegis::CvMulticlassResult mc =
            aegis::run_cv_multiclass(ds, args.common.folds, args.common.trees, seed);

        ordered_json j;
        j["tool"] = "crypto-aegis";
        j["command"] = "cv";
        j["direction"] = dir_token;
        j["params"] = params_json(args.common, seed);
        j["classes"] = ds.class_names;
        ordered_json matrix = ordered_json::array();
        for (std::size_t a = 0; a < mc.confusion.k(); ++a) {
            ordered_json row = ordered_json::array();
            for (std::size_t p = 0; p < mc.confusion.k(); ++p) row.push_back(mc.confusion.at(a, p));
            matrix.push_back(std::move(row));
        }
        j["confusion"] = {{"tp", mc.confusion.tp()}, {"tn", mc.confusion.tn()},
                          {"fp", mc.confusion.fp()}, {"fn", mc.confusion.fn()},
                          {"classes", ds.class_names}, {"matrix", std::move(matrix)}};
        j["per_class"] = ordered_json::array();
        std::cout << dir_token << " cross validation (" << args.common.folds << " folds, "
                  << ds.n_rows() << " rows):\n";
        for (const aegis::ClassRates& cr : mc.per_class) {
            j["per_class"].push_back({{"class", cr.class_name},
                                      {"tpr", cr.rates.tpr},
                                      {"fpr", cr.rates.fpr},
                                      {"precision", cr.rates.precision},
                                      {"recall", cr.rates.recall},
                                      {"f1", cr.rates.f1}});
            std::cout << "  " << cr.class_name << ": tpr " << fmt4(cr.rates.tpr) << ", fpr "
                      << fmt4(cr.rates.fpr) << ", f1 " << fmt4(cr.rates.f1) << "\n";
        }

        if (!positive.empty()) {
            const aegis::LabeledDataset bds = aegis::binary_relabel(ds, positive);
            const aegis::EvalReport rep =
                aegis::run_cv_binary(bds, args.common.folds, args.common.trees, seed);
            j["binary"] = aegis::report_to_json(rep);
            j["params"]["positive"] = std::vector<std::string>(positive.begin(), positive.end());
            std::ostringstream roc_csv;
            aegis::write_roc_csv(roc_csv, rep.roc);
            atomic_write(fs::path(args.common.out_dir) / ("cv." + dir_token + ".roc.csv"),
                         roc_csv.str());
            std::cout << "  binary Crypto-vs-Standard: auc " << fmt4(rep.auc) << ", f1 "
                      << fmt4(rep.rates.f1) << "\n";
        }

        atomic_write(fs::path(args.common.out_dir) / ("cv." + dir_token + ".report.json"),
                     j.dump(2) + "\n");
    }
    return 0;
}

// --- detect -------------------------------------------------------------------

struct DetectArgs {
    std::vector<std::string> inputs;
    std::string positive_csv;
    std::vector<std::string> from_confusion;
    std::string model_path;
    std::string target_path;
    double alert_threshold = -1.0;
    CommonParams common;
};

int detect_from_confusion(const DetectArgs& args) {
    std::map<std::string, std::uint64_t> counts;
    for (const std::string& tok : args.from_confusion) {
        const std::size_t eq = tok.find('=');
        if (eq == std::string::npos) {
            throw aegis::Error("--from-confusion expects tn=N fp=N fn=N tp=N");
        }
        const std::string key = tok.substr(0, eq);
        char* end = nullptr;
        const unsigned long long v = std::strtoull(tok.c_str() + eq + 1, &end, 10);
        if (*end != '\0' || (key != "tn" && key != "fp" && key != "fn" && key != "tp")) {
            throw aegis::Error("--from-confusion expects tn=N fp=N fn=N tp=N");
        }
        counts[key] = v;
    }
    if (counts.size() != 4) throw aegis::Error("--from-confusion expects tn=N fp=N fn=N tp=N");

    const aegis::ConfusionMatrix cm =
        aegis::confusion_from_counts(counts["tn"], counts["fp"], counts["fn"], counts["tp"]);
    const aegis::Rates r = aegis::rates(cm);
    std::cout << "tpr " << fmt4(r.tpr) << "\nfpr " << fmt4(r.fpr) << "\nprecision "
              << fmt4(r.precision) << "\nrecall " << fmt4(r.recall) << "\nf1 " << fmt4(r.f1)
              << "\n";

    ordered_json j;
    j["tool"] = "crypto-aegis";
    j["command"] = "detect";
    j["params"] = {{"from_confusion", true}};
    j["counts"] = {{"tp", cm.tp()}, {"tn", cm.tn()}, {"fp", cm.fp()}, {"fn", cm.fn()}};
    j["rates"] = {{"tpr", r.tpr},
                  {"fpr", r.fpr},
                  {"precision", r.precision},
                  {"recall", r.recall},
                  {"f1", r.f1}};
    atomic_write(fs::path(args.common.out_dir) / "detect.counts.report.json", j.dump(2) + "\n");
    return 0;
}

int detect_with_model(const DetectArgs& args) {
    std::ifstream in(args.model_path);
    if (!in) throw aegis::Error("cannot open " + args.model_path);
    nlohmann::json mj;
    try {
        in >> mj;
    } catch (const nlohmann::json::exception& e) {
        throw aegis::Error(args.model_path + ": invalid JSON: " + e.what());
    }
    const aegis::RandomForest model = aegis::model_from_json(mj);
    if (model.n_features != aegis::kNumFeatures) {
        throw aegis::Error("model expects " + std::to_string(model.n_features) +
                           " features, traces produce " + std::to_string(aegis::kNumFeatures));
    }

    const aegis::DirectionalTrace trace = load_trace(args.target_path);
    const aegis::FeatureMatrix fm = aegis::featurize(trace, aegis::WindowConfig{args.common.window});

    std::string positive_name = aegis::kPositiveClassName;
    if (!args.positive_csv.empty()) {
        const std::set<std::string> p = split_classes(args.positive_csv);
        if (p.size() != 1) throw aegis::Error("model mode takes exactly one --positive class");
        positive_name = *p.begin();
    }
    const auto it = std::find(model.class_names.begin(), model.class_names.end(), positive_name);
    if (it == model.class_names.end()) {
        throw aegis::Error("model has no class '" + positive_name + "'");
    }
    const std::size_t positive = static_cast<std::size_t>(it - model.class_names.begin());

    std::size_t alerts = 0;
    for (const aegis::FeatureVector& r : fm.rows) {
        const double x[aegis::kNumFeatures] = {r.dt, r.sz, r.mm_dt, r.sd_dt, r.mm_sz, r.sd_sz};
        if (aegis::classify_index(model, x) == positive) ++alerts;
    }
    const double alert_fraction = static_cast<double>(alerts) / static_cast<double>(fm.rows.size());
    const bool alert = args.alert_threshold >= 0.0 && alert_fraction >= args.alert_threshold;
    std::cout << "rows " << fm.rows.size() << "\nalert_fraction " << fmt4(alert_fraction) << "\n";
    if (args.alert_threshold >= 0.0) {
        std::cout << (alert ? "ALERT" : "no alert") << " (threshold "
                  << fmt4(args.alert_threshold) << ")\n";
    }

    ordered_json j;
    j["tool"] = "crypto-aegis";
    j["command"] = "detect";
    j["params"] = {{"model", args.model_path},
                   {"target", args.target_path},
                   {"window", args.common.window},
                   {"positive", positive_name},
                   {"alert_threshold", args.alert_threshold}};
    j["rows"] = fm.rows.size();
    j["alert_fraction"] = alert_fraction;
    j["alert"] = alert;
    atomic_write(fs::path(args.common.out_dir) / "detect.target.report.json", j.dump(2) + "\n");
    return alert ? 1 : 0;
}

int cmd_detect(const DetectArgs& args) {
    if (!args.from_confusion.empty()) return detect_from_confusion(args);
    if (!args.model_path.empty()) {
        if (args.target_path.empty()) throw aegis::Error("--model requires --target");
        return detect_with_model(args);
    }

    if (args.inputs.empty()) throw aegis::Error("detect needs trace files (or --from-confusion)");
    const std::set<std::string> positive = split_classes(args.positive_csv);
    if (positive.empty()) throw aegis::Error("detect needs --positive class names");

    const std::uint64_t seed = effective_seed(args.common);
    const auto by_dir = load_by_direction(args.inputs);
    fs::create_directories(args.common.out_dir);
    for (const auto& [direction, traces] : by_dir) {
        const std::string dir_token(aegis::to_token(direction));
        const aegis::LabeledDataset ds =
            aegis::dataset_from_traces(traces, args.common.window, row_cap(args.common));
        const aegis::LabeledDataset bds = aegis::binary_relabel(ds, positive);
        const aegis::EvalReport rep =
            aegis::run_cv_binary(bds, args.common.folds, args.common.trees, seed);

        ordered_json j;
        j["tool"] = "crypto-aegis";
        j["command"] = "detect";
        j["direction"] = dir_token;
        j["params"] = params_json(args.common, seed);
        j["params"]["positive"] = std::vector<std::string>(positive.begin(), positive.end());
        j["evaluation"] = aegis::report_to_json(rep);
        atomic_write(fs::path(args.common.out_dir) / ("detect." + dir_token + ".report.json"),
                     j.dump(2) + "\n");
        std::ostringstream roc_csv;
        aegis::write_roc_csv(roc_csv, rep.roc);
        atomic_write(fs::path(args.common.out_dir) / ("detect." + dir_token + ".roc.csv"),
                     roc_csv.str());
        std::cout << dir_token << ": tp " << rep.confusion.tp() << ", tn " << rep.confusion.tn()
                  << ", fp " << rep.confusion.fp() << ", fn " << rep.confusion.fn() << ", f1 "
                  << fmt4(rep.rates.f1) << ", auc " << fmt4(rep.auc) << "\n";
    }
    return 0;
}

// --- model -------------------------------------------------------------------

struct ModelTrainArgs {
    std::vector<std::string> inputs;
    std::string positive_csv;
    std::string out_path = "model.json";
    CommonParams common;
};

int cmd_model_train(const ModelTrainArgs& args) {
    const auto by_dir = load_by_direction(args.inputs);
    if (by_dir.size() != 1) {
        throw aegis::Error("model train expects traces of a single direction");
    }
    const std::vector<aegis::DirectionalTrace>& traces = by_dir.begin()->second;
    aegis::LabeledDataset ds =
        aegis::dataset_from_traces(traces, args.common.window, row_cap(args.common));
    const std::set<std::string> positive = split_classes(args.positive_csv);
    if (!positive.empty()) ds = aegis::binary_relabel(ds, positive);

    aegis::TrainConfig cfg;
    cfg.n_trees = args.common.trees;
    cfg.seed = effective_seed(args.common);
    const aegis::RandomForest model = aegis::train(ds, cfg);
    atomic_write(args.out_path, aegis::model_to_json(model).dump() + "\n");

    std::cout << "trained " << model.trees.size() << " trees on " << ds.n_rows()
              << " rows; classes:";
    for (const std::string& c : model.class_names) std::cout << " " << c;
    std::cout << "\nwrote " << args.out_path << "\n";
    return 0;
}

struct ModelPredictArgs {
    std::string model_path;
    std::string input_path;
    std::string out_path;  // empty = stdout
    CommonParams common;
};

int cmd_model_predict(const ModelPredictArgs& args) {
    std::ifstream in(args.model_path);
    if (!in) throw aegis::Error("cannot open " + args.model_path);
    nlohmann::json mj;
    try {
        in >> mj;
    } catch (const nlohmann::json::exception& e) {
        throw aegis::Error(args.model_path + ": invalid JSON: " + e.what());
    }
    const aegis::RandomForest model = aegis::model_from_json(mj);
    if (model.n_features != aegis::kNumFeatures) {
        throw aegis::Error("model expects " + std::to_string(model.n_features) +
                           " features, traces produce " + std::to_string(aegis::kNumFeatures));
    }

    const aegis::DirectionalTrace trace = load_trace(args.input_path);
    const aegis::FeatureMatrix fm = aegis::featurize(trace, aegis::WindowConfig{args.common.window});

    std::ostringstream out;
    out << "row,label\n";
    for (std::size_t i = 0; i < fm.rows.size(); ++i) {
        const aegis::FeatureVector& r = fm.rows[i];
        const double x[aegis::kNumFeatures] = {r.dt, r.sz, r.mm_dt, r.sd_dt, r.mm_sz, r.sd_sz};
        out << i << ',' << aegis::classify(model, x) << '\n';
    }
    if (args.out_path.empty()) {
        std::cout << out.str();
    } else {
        atomic_write(args.out_path, out.str());
        std::cout << "wrote " << args.out_path << " (" << fm.rows.size() << " rows)\n";
    }
    return 0;
}

void add_common(CLI::App* sub, CommonParams& p) {
    sub->add_option("--window", p.window, "moving-window length in packets")->check(CLI::PositiveNumber);
    sub->add_option("--trees", p.trees, "number of trees in the forest")->check(CLI::PositiveNumber);
    sub->add_option("--folds", p.folds, "cross-validation folds");
    p.seed_opt = sub->add_option("--seed", p.seed, "run seed (fallback: CRYPTO_AEGIS_SEED, then 0)");
    sub->add_option("--per-class-rows", p.per_class_rows,
                    "truncate every class to this many feature rows (0 = keep all)");
    sub->add_option("--out-dir", p.out_dir, "directory for output files");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crypto-aegis: cryptocurrency-client detection from traffic metadata"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "split a capture into directional trace CSVs");
    ingest->add_option("input", ingest_args.input, "pcap or canonical trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--local-subnet", ingest_args.local_subnet,
                       "CIDR of the monitored device(s); required for pcap input");
    add_common(ingest, ingest_args.common);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate calibrated synthetic traces");
    synth->add_option("profiles", synth_args.profile_file, "profile JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    synth->add_option("-n,--packets", synth_args.n_packets, "packets per trace")->required();
    add_common(synth, synth_args.common);

    CvArgs cv_args;
    CLI::App* cv = app.add_subcommand("cv", "k-fold cross validation over labeled traces");
    cv->add_option("inputs", cv_args.inputs, "trace CSVs (class = file stem)")
        ->required()
        ->check(CLI::ExistingFile);
    cv->add_option("--positive", cv_args.positive_csv,
                   "comma-separated positive classes; adds a binary Crypto-vs-Standard report");
    cv->add_option("--window-sweep", cv_args.window_sweep,
                   "LO:HI — report feature importance per window length instead of CV");
    add_common(cv, cv_args.common);

    DetectArgs detect_args;
    CLI::App* detect = app.add_subcommand("detect", "binary sponge-attack detection");
    detect->add_option("inputs", detect_args.inputs, "trace CSVs (class = file stem)")
        ->check(CLI::ExistingFile);
    detect->add_option("--positive", detect_args.positive_csv,
                       "comma-separated class names treated as Crypto");
    detect->add_option("--from-confusion", detect_args.from_confusion,
                       "tn=N fp=N fn=N tp=N — compute rates from confusion counts")
        ->expected(4);
    detect->add_option("--model", detect_args.model_path, "trained model JSON")
        ->check(CLI::ExistingFile);
    detect->add_option("--target", detect_args.target_path, "trace CSV to scan with --model")
        ->check(CLI::ExistingFile);
    detect->add_option("--alert-threshold", detect_args.alert_threshold,
                       "exit 1 when the alert fraction reaches this value");
    add_common(detect, detect_args.common);

    CLI::App* model = app.add_subcommand("model", "train or apply a persisted model");
    model->require_subcommand(1);
    ModelTrainArgs mt_args;
    CLI::App* mt = model->add_subcommand("train", "train a forest and save it as JSON");
    mt->add_option("inputs", mt_args.inputs, "trace CSVs of one direction (class = file stem)")
        ->required()
        ->check(CLI::ExistingFile);
    mt->add_option("--positive", mt_args.positive_csv,
                   "comma-separated classes to collapse into Crypto (binary model)");
    mt->add_option("--out", mt_args.out_path, "model output path");
    add_common(mt, mt_args.common);

    ModelPredictArgs mp_args;
    CLI::App* mp = model->add_subcommand("predict", "classify every row of a trace");
    mp->add_option("--model", mp_args.model_path, "trained model JSON")
        ->required()
        ->check(CLI::ExistingFile);
    mp->add_option("--input", mp_args.input_path, "trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    mp->add_option("--out", mp_args.out_path, "prediction CSV (default: stdout)");
    add_common(mp, mp_args.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_args);
        if (*synth) return cmd_synth(synth_args);
        if (*cv) return cmd_cv(cv_args);
        if (*detect) return cmd_detect(detect_args);
        if (*model) {
            if (*mt) return cmd_model_train(mt_args);
            if (*mp) return cmd_model_predict(mp_args);
        }
    } catch (const aegis::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
