#include "meshdet/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace meshdet {

namespace {

namespace fs = std::filesystem;

class CsvFile {
public:
    CsvFile(const fs::path& path, std::vector<fs::path>& written) : out_(path) {
        if (!out_) throw OutputError("cannot write " + path.string());
        out_ << std::setprecision(10);
        written.push_back(path);
    }
    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cells, first = false), ...);
        out_ << '\n';
    }
    std::ofstream& stream() { return out_; }

private:
    std::ofstream out_;
};

std::string opt(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os << std::setprecision(10) << *v;
    return os.str();
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

const AggregateRow* find_row(const ConfigResult& r, const std::string& label) {
    for (const auto& row : r.aggregates)
        if (row.label == label) return &row;
    return nullptr;
}

const ConfigResult* find_config(const std::vector<ConfigResult>& results, int n, double snr) {
    for (const auto& r : results)
        if (r.entry.n_nodes == n && r.entry.snr_db == snr) return &r;
    return nullptr;
}

std::string mean_of(const AggregateRow* row, const std::string& metric) {
    if (!row) return "";
    const auto& s = row->at(metric);
    return s.count ? num(s.mean) : "";
}

// Labels of the headline detectors, in configuration order.
std::vector<std::string> headline_labels(const RunConfig& cfg) {
    std::vector<std::string> out;
    for (auto k : cfg.detectors) out.emplace_back(to_string(k));
    return out;
}

void write_report(const std::vector<ConfigResult>& results, const fs::path& dir,
                  std::vector<fs::path>& written) {
    CsvFile f(dir / "report.csv", written);
    f.row("config", "n_nodes", "snr_db", "replicate", "seed", "detector", "detection_rate_pct",
          "event_precision_pct", "fp_cluster_count", "far_clusters_per_hr_per_node",
          "per_node_load_bytes_per_hr", "mean_latency_s", "events_scheduled", "events_detected",
          "trigger_count", "delivered_count", "scored_hours", "stream_digest");
    for (const auto& r : results)
        for (const auto& rep : r.replicates)
            for (const auto& d : rep.detectors) {
                const auto& m = d.report;
                f.row(r.entry.name(), r.entry.n_nodes, r.entry.snr_db, rep.replicate, rep.seed,
                      d.config.label, opt(m.detection_rate_pct), opt(m.event_precision_pct),
                      m.fp_cluster_count, m.far_clusters_per_hr_per_node, m.per_node_load_bytes_per_hr,
                      opt(m.mean_latency_s), m.events_scheduled, m.events_detected, m.trigger_count,
                      m.delivered_count, m.scored_hours, d.stream_digest);
            }
}

void write_aggregate(const std::vector<ConfigResult>& results, const fs::path& dir,
                     std::vector<fs::path>& written) {
    CsvFile f(dir / "aggregate.csv", written);
    f.row("config", "n_nodes", "snr_db", "detector", "metric", "mean", "std", "replicates");
    for (const auto& r : results)
        for (const auto& row : r.aggregates)
            for (const auto& [metric, s] : row.metrics)
                f.row(r.entry.name(), r.entry.n_nodes, r.entry.snr_db, row.label, metric, s.mean, s.std,
                      s.count);
}

// table4_headline.csv: one block per metric, detectors as rows, configurations as columns.
void write_headline(const std::vector<ConfigResult>& results, const RunConfig& cfg,
                    const fs::path& dir, std::vector<fs::path>& written) {
    CsvFile f(dir / "table4_headline.csv", written);
    auto& os = f.stream();
    os << "metric,detector";
    for (const auto& r : results) os << ',' << r.entry.name();
    os << ",avg\n";
    const std::vector<std::string> metrics{"detection_rate_pct", "event_precision_pct",
                                           "fp_cluster_count", "far_clusters_per_hr_per_node",
                                           "per_node_load_bytes_per_hr"};
    for (const auto& metric : metrics)
        for (const auto& label : headline_labels(cfg)) {
            os << metric << ',' << label;
            double sum = 0.0;
            int n = 0;
            for (const auto& r : results) {
                const auto* row = find_row(r, label);
                os << ',' << mean_of(row, metric);
                if (row && row->at(metric).count) {
                    sum += row->at(metric).mean;
                    ++n;
                }
            }
            os << ',' << (n ? num(sum / n) : "") << '\n';
        }
}

// table5_ksweep.csv: Lipski k-sweep next to the TSNFA reference, per configuration.
void write_ksweep(const std::vector<ConfigResult>& results, const RunConfig& cfg, const fs::path& dir,
                  std::vector<fs::path>& written) {
    const auto lineup = detector_lineup(cfg);
    std::vector<const DetectorConfig*> lipski;
    for (const auto& d : lineup)
        if (d.kind == DetectorKind::Lipski) lipski.push_back(&d);
    if (lipski.empty()) return;
    std::sort(lipski.begin(), lipski.end(),
              [](const DetectorConfig* a, const DetectorConfig* b) { return a->lipski.k < b->lipski.k; });

    CsvFile f(dir / "table5_ksweep.csv", written);
    f.row("config", "detector", "k", "dr_pct", "precision_pct", "far_clusters_per_hr_per_node",
          "fp_clusters", "bw_bytes_per_hr");
    for (const auto& r : results) {
        for (const auto* d : lipski) {
            const auto* row = find_row(r, d->label);
            f.row(r.entry.name(), d->label, d->lipski.k, mean_of(row, "detection_rate_pct"),
                  mean_of(row, "event_precision_pct"), mean_of(row, "far_clusters_per_hr_per_node"),
                  mean_of(row, "fp_cluster_count"), mean_of(row, "per_node_load_bytes_per_hr"));
        }
        if (const auto* row = find_row(r, "tsnfa"))
            f.row(r.entry.name(), "tsnfa", "", mean_of(row, "detection_rate_pct"),
                  mean_of(row, "event_precision_pct"), mean_of(row, "far_clusters_per_hr_per_node"),
                  mean_of(row, "fp_cluster_count"), mean_of(row, "per_node_load_bytes_per_hr"));
    }
}

// table6_bandwidth.csv: bandwidth per detector and its ratio to TSNFA.
void write_bandwidth(const std::vector<ConfigResult>& results, const RunConfig& cfg,
                     const fs::path& dir, std::vector<fs::path>& written) {
    CsvFile f(dir / "table6_bandwidth.csv", written);
    f.row("config", "detector", "per_node_B_per_hr", "total_MB_per_hr", "ratio_vs_tsnfa");
    for (const auto& r : results) {
        const auto* ref = find_row(r, "tsnfa");
        const double ref_load = ref ? ref->at("per_node_load_bytes_per_hr").mean : 0.0;
        for (const auto& label : headline_labels(cfg)) {
            const auto* row = find_row(r, label);
            if (!row) continue;
            const double load = row->at("per_node_load_bytes_per_hr").mean;
            f.row(r.entry.name(), label, load, load * r.entry.n_nodes / 1e6,
                  ref_load > 0.0 ? num(load / ref_load) : std::string());
        }
    }
}

// table7_snr_drop.csv: detection rate at the highest versus lowest SNR per network size.
void write_snr_drop(const std::vector<ConfigResult>& results, const RunConfig& cfg,
                    const fs::path& dir, std::vector<fs::path>& written) {
    std::map<int, std::set<double>> snrs;
    for (const auto& r : results) snrs[r.entry.n_nodes].insert(r.entry.snr_db);
    CsvFile f(dir / "table7_snr_drop.csv", written);
    f.row("n_nodes", "detector", "snr_high_db", "snr_low_db", "dr_high_pct", "dr_low_pct", "drop_pp");
    for (const auto& [n, s] : snrs) {
        if (s.size() < 2) continue;
        const double lo = *s.begin();
        const double hi = *s.rbegin();
        const auto* a = find_config(results, n, hi);
        const auto* b = find_config(results, n, lo);
        for (const auto& label : headline_labels(cfg)) {
            const auto* ra = find_row(*a, label);
            const auto* rb = find_row(*b, label);
            if (!ra || !rb) continue;
            const auto& da = ra->at("detection_rate_pct");
            const auto& db = rb->at("detection_rate_pct");
            f.row(n, label, hi, lo, da.count ? num(da.mean) : "", db.count ? num(db.mean) : "",
                  da.count && db.count ? num(da.mean - db.mean) : "");
        }
    }
}

// table8_scaling.csv: smallest versus largest network at each SNR.
void write_scaling(const std::vector<ConfigResult>& results, const RunConfig& cfg,
                   const fs::path& dir, std::vector<fs::path>& written) {
    std::map<double, std::set<int>> sizes;
    for (const auto& r : results) sizes[r.entry.snr_db].insert(r.entry.n_nodes);
    CsvFile f(dir / "table8_scaling.csv", written);
    f.row("snr_db", "detector", "metric", "n_small", "n_large", "value_small", "value_large", "ratio");
    const std::vector<std::string> metrics{"detection_rate_pct", "event_precision_pct",
                                           "far_clusters_per_hr_per_node", "mean_latency_s",
                                           "fp_cluster_count", "per_node_load_bytes_per_hr"};
    for (const auto& [snr, ns] : sizes) {
        if (ns.size() < 2) continue;
        const int small = *ns.begin();
        const int large = *ns.rbegin();
        const auto* a = find_config(results, small, snr);
        const auto* b = find_config(results, large, snr);
        for (const auto& label : headline_labels(cfg)) {
            const auto* ra = find_row(*a, label);
            const auto* rb = find_row(*b, label);
            if (!ra || !rb) continue;
            for (const auto& m : metrics) {
                const auto& sa = ra->at(m);
                const auto& sb = rb->at(m);
                const bool ok = sa.count && sb.count;
                f.row(snr, label, m, small, large, ok ? num(sa.mean) : "", ok ? num(sb.mean) : "",
                      ok && sa.mean != 0.0 ? num(sb.mean / sa.mean) : "");
            }
        }
    }
}

void write_roc(const std::vector<ConfigResult>& results, const fs::path& dir,
               std::vector<fs::path>& written) {
    const bool any = std::any_of(results.begin(), results.end(), [](const ConfigResult& r) { return !r.roc.empty(); });
    if (!any) return;
    CsvFile f(dir / "roc.csv", written);
    f.row("config", "detector", "multiplier", "dr_pct", "far_per_hr_node");
    for (const auto& r : results)
        for (const auto& [label, points] : r.roc)
            for (const auto& p : points)
                f.row(r.entry.name(), label, p.multiplier, p.detection_rate_pct, p.far_clusters_per_hr_per_node);
}

}  // namespace

std::vector<fs::path> emit_outputs(const std::vector<ConfigResult>& results, const RunConfig& cfg,
                                   const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw OutputError("cannot create output directory " + dir.string());
    std::vector<fs::path> written;
    write_report(results, dir, written);
    write_aggregate(results, dir, written);
    write_headline(results, cfg, dir, written);
    write_ksweep(results, cfg, dir, written);
    write_bandwidth(results, cfg, dir, written);
    write_snr_drop(results, cfg, dir, written);
    write_scaling(results, cfg, dir, written);
    write_roc(results, dir, written);

    for (const auto& r : results)
        for (const auto& rep : r.replicates) {
            const auto path = dir / ("topology_" + r.entry.name() + "_r" + std::to_string(rep.replicate) + ".csv");
            std::ofstream out(path);
            if (!out) throw OutputError("cannot write " + path.string());
            write_topology_csv(out, rep.topology);
            written.push_back(path);
            if (!cfg.delivery_log) continue;
            std::vector<DeliveryLogEntry> log;
            for (const auto& d : rep.detectors) log.insert(log.end(), d.delivery_log.begin(), d.delivery_log.end());
            const auto lpath = dir / ("deliveries_" + r.entry.name() + "_r" + std::to_string(rep.replicate) + ".csv");
            std::ofstream lout(lpath);
            if (!lout) throw OutputError("cannot write " + lpath.string());
            write_delivery_log_csv(lout, log);
            written.push_back(lpath);
        }

    const auto echo = dir / "config_echo.txt";
    std::ofstream out(echo);
    if (!out) throw OutputError("cannot write " + echo.string());
    write_run_config(out, cfg);
    for (const auto& r : results)
        for (const auto& rep : r.replicates)
            out << "# replicate seed " << r.entry.name() << " r" << rep.replicate << " = " << rep.seed << '\n';
    written.push_back(echo);
    return written;
}

}  // namespace meshdet
