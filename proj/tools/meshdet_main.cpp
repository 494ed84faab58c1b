#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "meshdet/config.hpp"
#include "meshdet/experiment.hpp"
#include "meshdet/report.hpp"

using namespace meshdet;

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> nodes;
    std::optional<std::string> snr_db;
    std::optional<double> duration_hr;
    std::optional<int> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> detectors;
    std::optional<std::string> k_sweep;
    std::optional<std::string> out;
    std::vector<std::string> sets;  // raw key=value
    bool roc = false;
    bool serial = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--nodes", o.nodes, "node counts, e.g. 10 or 10,50");
    cmd->add_option("--snr-db", o.snr_db, "event SNRs in dB, e.g. 18,12");
    cmd->add_option("--duration-hr", o.duration_hr, "simulated hours per replicate");
    cmd->add_option("--replicates", o.replicates, "replicates per configuration");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--detectors", o.detectors, "subset of tsnfa,lipski,ca,os,cusum");
    cmd->add_option("--k-sweep", o.k_sweep, "Lipski k values, e.g. 3,5,8");
    cmd->add_option("--set", o.sets, "extra key=value setting, repeatable");
    cmd->add_flag("--serial", o.serial, "disable the OpenMP node loop");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.nodes) apply_setting(cfg, "nodes", *o.nodes);
    if (o.snr_db) apply_setting(cfg, "snr_db", *o.snr_db);
    if (o.duration_hr) cfg.duration_hr = *o.duration_hr;
    if (o.replicates) cfg.replicates = *o.replicates;
    if (o.seed) cfg.master_seed = *o.seed;
    if (o.detectors) cfg.detectors = parse_detector_list(*o.detectors);
    if (o.k_sweep) cfg.lipski_k_sweep = parse_double_list(*o.k_sweep);
    if (o.out) cfg.output_dir = *o.out;
    if (o.roc) cfg.roc_enabled = true;
    if (o.serial) cfg.parallel = false;
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

int run(const Overrides& o) {
    const auto cfg = resolve(o);
    const auto results = run_experiment(cfg, &std::cerr);
    const auto files = emit_outputs(results, cfg, cfg.output_dir);
    for (const auto& r : results) {
        std::cout << r.entry.name() << '\n';
        for (const auto& row : r.aggregates) {
            std::ostringstream line;
            line.precision(4);
            line << "  " << row.label;
            for (const char* m : {"detection_rate_pct", "event_precision_pct", "far_clusters_per_hr_per_node",
                                  "per_node_load_bytes_per_hr"}) {
                const auto& s = row.at(m);
                line << "  " << m << '=';
                if (s.count) line << s.mean;
                else line << '-';
            }
            std::cout << line.str() << '\n';
        }
    }
    std::cout << files.size() << " files written to " << cfg.output_dir << '\n';
    return 0;
}

int trace(const Overrides& o, int replicate, const std::string& path) {
    auto cfg = resolve(o);
    if (cfg.configurations.size() != 1)
        throw ConfigError("trace needs exactly one configuration; pass --nodes and --snr-db");
    if (replicate < 0) throw ConfigError("replicate must be non-negative");
    if (path == "-") {
        write_conformance_trace(cfg, cfg.configurations.front(), replicate, std::cout);
        return 0;
    }
    std::ofstream out(path);
    if (!out) throw OutputError("cannot write " + path);
    write_conformance_trace(cfg, cfg.configurations.front(), replicate, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mesh seismic event detection simulator"};
    app.require_subcommand(1);

    Overrides run_opts;
    auto* run_cmd = app.add_subcommand("run", "run the experiment matrix and write CSV tables");
    add_common(run_cmd, run_opts);
    run_cmd->add_flag("--roc", run_opts.roc, "record strength traces and sweep the threshold");
    run_cmd->add_option("--out", run_opts.out, "output directory");

    Overrides trace_opts;
    int replicate = 0;
    std::string trace_path = "-";
    auto* trace_cmd = app.add_subcommand("trace", "dump per-frame detector strength as CSV");
    add_common(trace_cmd, trace_opts);
    trace_cmd->add_option("--replicate", replicate, "replicate index");
    trace_cmd->add_option("-o,--output", trace_path, "CSV path, - for stdout");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) return run(run_opts);
        return trace(trace_opts, replicate, trace_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
