// risklab command line front end.
//
// Exit codes: 0 on success, 1 for configuration and usage problems,
// 2 for runtime failures (I/O errors, divergence, checksum mismatches).

#include "CLI11.hpp"

#include "risklab/algebraic.hpp"
#include "risklab/checksum.hpp"
#include "risklab/config.hpp"
#include "risklab/errors.hpp"
#include "risklab/mds.hpp"
#include "risklab/results.hpp"
#include "risklab/runner.hpp"
#include "risklab/snapshot_io.hpp"
#include "risklab/version.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using risklab::UsageError;

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--config", c.config, "path to a JSON experiment config");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "master seed, overrides the config seed")
        ->each([&c](const std::string&) { c.seed_given = true; });
}

int run_config_protocol(const std::string& name, const CommonOpts& c) {
    if (c.config.empty()) {
        throw UsageError("a config file is required (--config)");
    }
    risklab::ExperimentConfig cfg = risklab::load_config(c.config);
    if (cfg.protocol != name) {
        throw UsageError("config declares protocol \"" + cfg.protocol +
                         "\" but the subcommand is \"" + name + "\"");
    }
    if (c.seed_given) risklab::override_seed(cfg, c.seed);
    const std::string out = c.out.empty() ? cfg.out : c.out;
    if (out.empty()) {
        throw UsageError("an output directory is required (--out or config \"out\")");
    }
    risklab::run_protocol(cfg, out);
    std::cout << "written: " << out << "\n";
    return 0;
}

std::vector<int> parse_layer_list(const std::string& s) {
    std::vector<int> layers;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            size_t pos = 0;
            const int v = std::stoi(tok, &pos);
            if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
            layers.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("--layers expects comma separated layer numbers, got \"" +
                             tok + "\"");
        }
    }
    return layers;
}

bool selected_layer(const std::string& array_name, const std::vector<int>& layers) {
    if (layers.empty()) return true;
    for (int l : layers) {
        const std::string prefix = "L" + std::to_string(l) + ".";
        if (array_name.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

int run_mds(const std::string& in_dir, const std::string& layers_arg,
            const std::string& metric_arg, const std::string& out_arg) {
    if (in_dir.empty()) throw UsageError("mds requires --in <snapshot dir>");
    if (!fs::is_directory(in_dir)) {
        throw UsageError("not a directory: " + in_dir);
    }
    const std::vector<int> layers = parse_layer_list(layers_arg);
    const risklab::Metric metric = risklab::metric_from_string(metric_arg);

    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(in_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".snap") {
            files.push_back(e.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2) {
        throw UsageError("mds needs at least two .snap files in " + in_dir);
    }

    std::vector<std::vector<double>> vecs;
    std::vector<std::string> names;
    for (const std::string& f : files) {
        const risklab::WeightSnapshot snap = risklab::load_snapshot(f);
        std::vector<double> v;
        for (const auto& arr : snap.arrays()) {
            if (!arr.trainable || !selected_layer(arr.name, layers)) continue;
            const double* p = arr.value.data();
            v.insert(v.end(), p, p + arr.value.size());
        }
        if (v.empty()) {
            throw UsageError("no arrays match the layer selection in " + f);
        }
        vecs.push_back(std::move(v));
        names.push_back(fs::path(f).filename().string());
    }

    const risklab::DissimilarityMatrix dm = risklab::pairwise_dissimilarity(vecs, metric);
    const risklab::MdsResult res = risklab::classical_mds(dm, 2);

    if (out_arg.empty()) {
        std::cout << "snapshot,x,y\n";
        for (std::size_t i = 0; i < res.n; ++i) {
            std::cout << names[i] << ',' << risklab::CsvWriter::num(res.coords[i * 2])
                      << ',' << risklab::CsvWriter::num(res.coords[i * 2 + 1]) << "\n";
        }
        return 0;
    }

    risklab::OutDir out(out_arg);
    {
        risklab::CsvWriter csv(out.file("embedding.csv"), {"snapshot", "x", "y"});
        for (std::size_t i = 0; i < res.n; ++i) {
            csv.row({names[i], risklab::CsvWriter::num(res.coords[i * 2]),
                     risklab::CsvWriter::num(res.coords[i * 2 + 1])});
        }
    }
    nlohmann::json summary;
    summary["metric"] = to_string(metric);
    summary["inputs"] = names;
    summary["strain"] = res.strain;
    summary["eigenvalues"] = res.eigenvalues;
    std::ofstream js(out.file("summary.json"), std::ios::binary | std::ios::trunc);
    js << summary.dump(2) << '\n';
    js.close();
    const std::string key = "mds|metric=" + to_string(metric) + "|layers=" + layers_arg;
    risklab::write_manifest(out.path(), risklab::fnv1a64_hex(key));
    std::cout << "written: " << out.path() << "\n";
    return 0;
}

long long parse_ll(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("algebra: " + key + " expects an integer, got \"" + value + "\"");
    }
}

int run_algebra(bool summary, const std::vector<std::string>& assignments,
                const std::string& out_arg) {
    if (!summary) {
        throw UsageError("algebra requires --summary (as in: algebra --summary l=2 d=2 n=3 k=10)");
    }
    std::map<std::string, long long> kv;
    for (const std::string& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("algebra expects key=value arguments, got \"" + a + "\"");
        }
        const std::string key = a.substr(0, eq);
        if (key != "l" && key != "d" && key != "n" && key != "k") {
            throw UsageError("algebra: unknown parameter \"" + key +
                             "\" (expected l, d, n, k)");
        }
        kv[key] = parse_ll(key, a.substr(eq + 1));
    }
    for (const char* key : {"l", "d", "n", "k"}) {
        if (!kv.count(key)) {
            throw UsageError(std::string("algebra: missing parameter ") + key);
        }
    }
    const risklab::SystemSummary s = risklab::summarize(
        static_cast<int>(kv["l"]), static_cast<int>(kv["d"]), kv["n"], kv["k"]);

    char buf[64];
    auto g = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    std::ostringstream text;
    text << "l = " << s.l << "\n"
         << "d = " << s.d << "\n"
         << "n = " << s.n << "\n"
         << "k = " << s.k << "\n"
         << "per_equation_degree = " << s.per_equation_degree << "\n"
         << "bezout_log2 = " << g(s.bezout_log2) << "\n"
         << "shub_smale_log2 = " << g(s.shub_smale_log2) << "\n"
         << "solution_dim = " << s.solution_dim << "\n";
    if (s.exact_available) text << "bezout_exact = " << s.bezout_exact << "\n";
    std::cout << text.str();

    if (!out_arg.empty()) {
        risklab::OutDir out(out_arg);
        nlohmann::json j;
        j["l"] = s.l;
        j["d"] = s.d;
        j["n"] = s.n;
        j["k"] = s.k;
        j["per_equation_degree"] = s.per_equation_degree;
        j["bezout_log2"] = s.bezout_log2;
        j["shub_smale_log2"] = s.shub_smale_log2;
        j["solution_dim"] = s.solution_dim;
        if (s.exact_available) j["bezout_exact"] = s.bezout_exact;
        std::ofstream js(out.file("summary.json"), std::ios::binary | std::ios::trunc);
        js << j.dump(2) << '\n';
        js.close();
        std::ostringstream key;
        key << "algebra|l=" << s.l << "|d=" << s.d << "|n=" << s.n << "|k=" << s.k;
        risklab::write_manifest(out.path(), risklab::fnv1a64_hex(key.str()));
    }
    return 0;
}

// splits one line of our own CSV output; cells never contain commas or quotes
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

int run_report(const std::string& in_dir) {
    if (in_dir.empty()) throw UsageError("report requires --in <result dir>");
    const std::vector<std::string> files = risklab::verify_manifest(in_dir);
    std::cout << "verified " << files.size() << " files in " << in_dir << "\n";

    const fs::path traj = fs::path(in_dir) / "trajectory.csv";
    if (fs::exists(traj)) {
        std::ifstream f(traj, std::ios::binary);
        std::string line;
        std::getline(f, line); // header
        // final train/test figures per run, in first-seen order
        std::vector<std::string> order;
        std::map<std::string, std::map<std::string, std::pair<std::string, std::string>>> last;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            if (cells.size() < 7) continue;
            const std::string& run = cells[1];
            if (!last.count(run)) order.push_back(run);
            last[run][cells[4]] = {cells[3], cells[5]};
        }
        for (const std::string& run : order) {
            const auto& splits = last[run];
            std::cout << "run " << run;
            if (splits.count("train")) {
                std::cout << ": epoch " << splits.at("train").first << ", train error "
                          << splits.at("train").second << "%";
            }
            if (splits.count("test")) {
                std::cout << ", test error " << splits.at("test").second << "%";
            }
            std::cout << "\n";
        }
    }
    for (const std::string& name : files) {
        if (name.size() < 4 || name.compare(name.size() - 4, 4, ".csv") != 0) continue;
        if (name == "trajectory.csv") continue;
        std::ifstream f(fs::path(in_dir) / name, std::ios::binary);
        std::string line;
        std::size_t rows = 0;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (!line.empty()) ++rows;
        }
        std::cout << name << ": " << rows << " rows\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"loss landscape experiment runner"};
    app.set_version_flag("--version", std::string(risklab::kVersion));
    app.require_subcommand(1);

    static const char* kProtocols[] = {"train",    "stage-sgd",   "branch-bgd",
                                       "flatness", "interpolate", "sweep"};
    static const char* kProtocolHelp[] = {
        "train one network from a config",
        "staged runs of parallel SGD trainers",
        "full-batch descent with perturbed branches",
        "perturb-and-retrain probe around a trained model",
        "evaluate models interpolated between two snapshots",
        "train error and generalization across widths"};

    std::map<std::string, CommonOpts> common;
    for (std::size_t i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(kProtocols[i], kProtocolHelp[i]);
        add_common(sub, common[kProtocols[i]]);
    }

    CommonOpts mds_common;
    std::string mds_in, mds_layers, mds_metric = "cosine";
    CLI::App* mds = app.add_subcommand("mds", "embed weight snapshots in the plane");
    mds->add_option("--in", mds_in, "directory of .snap files");
    mds->add_option("--layers", mds_layers,
                    "comma separated layer numbers to include (default: all)");
    mds->add_option("--metric", mds_metric, "cosine or euclidean");
    add_common(mds, mds_common);

    CommonOpts alg_common;
    bool alg_summary = false;
    std::vector<std::string> alg_args;
    CLI::App* alg = app.add_subcommand("algebra", "degree and dimension accounting");
    alg->add_flag("--summary", alg_summary, "print the system summary");
    alg->add_option("params", alg_args, "l=.. d=.. n=.. k=..");
    add_common(alg, alg_common);

    CommonOpts rep_common;
    std::string rep_in;
    CLI::App* rep = app.add_subcommand("report", "verify checksums and summarize results");
    rep->add_option("--in", rep_in, "result directory with a manifest");
    add_common(rep, rep_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        for (const char* name : kProtocols) {
            if (app.got_subcommand(name)) {
                return run_config_protocol(name, common[name]);
            }
        }
        if (app.got_subcommand("mds")) {
            return run_mds(mds_in, mds_layers, mds_metric, mds_common.out);
        }
        if (app.got_subcommand("algebra")) {
            return run_algebra(alg_summary, alg_args, alg_common.out);
        }
        if (app.got_subcommand("report")) {
            return run_report(rep_in);
        }
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
