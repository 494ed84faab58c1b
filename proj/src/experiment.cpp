#include "meshdet/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace meshdet {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t hash_frame(std::uint64_t h, const Frame& f) {
    h = mix64(h ^ static_cast<std::uint64_t>(f.node_id));
    h = mix64(h ^ static_cast<std::uint64_t>(f.index));
    for (double s : f.samples) h = mix64(h ^ std::bit_cast<std::uint64_t>(s));
    return h;
}

std::string k_label(double k) {
    std::ostringstream os;
    os << "lipski_k" << k;
    return os.str();
}

struct NodeOutput {
    std::vector<std::vector<TriggerRecord>> triggers;  // per detector
    std::vector<std::vector<double>> traces;           // per detector
    std::vector<std::uint64_t> digests;                // per detector
    std::vector<GroundTruthEvent> events;
};

NodeOutput run_node(int node, std::uint64_t seed, const RunConfig& cfg, const SignalParams& sp,
                    const std::vector<DetectorConfig>& lineup, std::int64_t n_frames,
                    std::int64_t first_scored, bool keep_traces) {
    NodeSignal signal(node, cfg.duration_hr * 3600.0, sp, derive_seed(seed, {2, static_cast<std::uint64_t>(node)}));
    std::vector<std::unique_ptr<Detector>> dets;
    for (const auto& d : lineup) dets.push_back(make_detector(d));

    NodeOutput out;
    out.events = signal.events();
    out.triggers.resize(lineup.size());
    out.digests.assign(lineup.size(), 0);
    if (keep_traces) {
        out.traces.resize(lineup.size());
        for (auto& t : out.traces) t.reserve(static_cast<std::size_t>(n_frames));
    }

    Frame frame;
    for (std::int64_t m = 0; m < n_frames; ++m) {
        signal.fill_frame(m, frame);
        const auto features = FrameFeatures::compute(frame);
        for (std::size_t d = 0; d < dets.size(); ++d) {
            out.digests[d] = hash_frame(out.digests[d], *features.frame);
            const auto o = dets[d]->process(features);
            if (keep_traces) out.traces[d].push_back(o.strength);
            if (o.trigger && m >= first_scored) {
                TriggerRecord t;
                t.node_id = node;
                t.frame_index = m;
                t.time_s = trigger_time(m);
                t.strength = o.strength;
                out.triggers[d].push_back(t);
            }
        }
    }
    return out;
}

// Routes every trigger of one detector through the mesh, frame by frame.
std::vector<std::uint64_t> deliver(std::vector<TriggerRecord>& triggers, const Topology& topo,
                                   const MacParams& mac, Routing routing, Rng& rng, const std::string& label,
                                   std::vector<DeliveryLogEntry>* log) {
    std::vector<std::uint64_t> bytes(topo.size(), 0);
    std::sort(triggers.begin(), triggers.end(), [](const TriggerRecord& a, const TriggerRecord& b) {
        return a.frame_index != b.frame_index ? a.frame_index < b.frame_index : a.node_id < b.node_id;
    });
    std::vector<char> in_flight(topo.size(), 0);
    std::size_t i = 0;
    while (i < triggers.size()) {
        std::size_t j = i;
        while (j < triggers.size() && triggers[j].frame_index == triggers[i].frame_index) ++j;
        // Unicast: messages emitted in the same frame occupy every transmitter on
        // their routes. Flood occupies everyone, so only the origins count as
        // competing traffic there.
        for (std::size_t k = i; k < j; ++k) {
            if (routing == Routing::Flood) in_flight[triggers[k].node_id] = 1;
            else
                for (int v : topo.route(triggers[k].node_id)) in_flight[v] = 1;
        }
        for (std::size_t k = i; k < j; ++k) {
            auto& t = triggers[k];
            const auto r = routing == Routing::Flood ? flood(t.node_id, topo, mac, in_flight, rng)
                                                     : transmit(t.node_id, topo, mac, in_flight, rng);
            for (const auto& [v, b] : r.bytes_tx_per_node) bytes[v] += b;
            t.delivered = r.delivered;
            if (r.delivered) t.sink_arrival_s = t.time_s + r.latency_s;
            if (log)
                log->push_back({t.time_s, t.node_id, label, r.delivered, r.delivered ? r.latency_s : 0.0,
                                r.total_bytes()});
        }
        std::fill(in_flight.begin(), in_flight.end(), 0);
        i = j;
    }
    return bytes;
}

}  // namespace

std::vector<DetectorConfig> detector_lineup(const RunConfig& cfg) {
    std::vector<DetectorConfig> out;
    for (auto kind : cfg.detectors) out.push_back(default_detector_config(kind));
    const bool lipski = std::find(cfg.detectors.begin(), cfg.detectors.end(), DetectorKind::Lipski) !=
                        cfg.detectors.end();
    if (lipski) {
        const double canonical = LipskiParams{}.k;
        for (double k : cfg.lipski_k_sweep) {
            if (k == canonical) continue;
            auto c = default_detector_config(DetectorKind::Lipski);
            c.lipski.k = k;
            c.label = k_label(k);
            out.push_back(c);
        }
    }
    return out;
}

const DetectorRun& ReplicateResult::find(const std::string& label) const {
    for (const auto& d : detectors)
        if (d.config.label == label) return d;
    throw std::out_of_range("no detector run labelled " + label);
}

std::uint64_t replicate_seed(std::uint64_t master_seed, const ConfigEntry& entry, int replicate) {
    return derive_seed(master_seed, {static_cast<std::uint64_t>(entry.n_nodes),
                                     static_cast<std::uint64_t>(std::llround(entry.snr_db * 1000.0)),
                                     static_cast<std::uint64_t>(replicate)});
}

ReplicateResult run_configuration(const RunConfig& cfg, const ConfigEntry& entry, int replicate,
                                  const RunOptions& options) {
    cfg.validate();
    ReplicateResult res;
    res.config = entry;
    res.replicate = replicate;
    res.seed = replicate_seed(cfg.master_seed, entry, replicate);

    Rng topo_rng(derive_seed(res.seed, {1}));
    try {
        res.topology = build_topology(entry.n_nodes, default_side_m(entry.n_nodes), cfg.radio_range_m, topo_rng);
    } catch (const TopologyError& e) {
        throw TopologyError(std::string(e.what()) + " (replicate seed " + std::to_string(res.seed) + ")");
    }

    SignalParams sp = cfg.signal;
    sp.snr_db = entry.snr_db;
    const double duration_s = cfg.duration_hr * 3600.0;
    const auto n_frames = static_cast<std::int64_t>(std::floor(duration_s / kFramePeriodS));
    const ScoringWindow window{sp.warmup_s, duration_s};
    const std::int64_t first_scored = window.first_frame();
    const bool keep_traces = options.keep_traces || cfg.roc_enabled;
    const auto lineup = detector_lineup(cfg);

    std::vector<NodeOutput> nodes(entry.n_nodes);
    if (options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int n = 0; n < entry.n_nodes; ++n)
            nodes[n] = run_node(n, res.seed, cfg, sp, lineup, n_frames, first_scored, keep_traces);
    } else {
        for (int n = 0; n < entry.n_nodes; ++n)
            nodes[n] = run_node(n, res.seed, cfg, sp, lineup, n_frames, first_scored, keep_traces);
    }

    for (const auto& n : nodes) res.events.insert(res.events.end(), n.events.begin(), n.events.end());

    for (std::size_t d = 0; d < lineup.size(); ++d) {
        DetectorRun run;
        run.config = lineup[d];
        run.stream_digest = 0;
        for (const auto& n : nodes) {
            run.stream_digest = mix64(run.stream_digest ^ n.digests[d]);
            run.triggers.insert(run.triggers.end(), n.triggers[d].begin(), n.triggers[d].end());
        }
        Rng mac_rng(derive_seed(res.seed, {3, fnv1a(run.config.label)}));
        const auto bytes = deliver(run.triggers, res.topology, cfg.mac, cfg.routing, mac_rng, run.config.label,
                                   cfg.delivery_log ? &run.delivery_log : nullptr);
        run.report = compute_report(run.triggers, res.events, bytes, window, entry.n_nodes);
        if (keep_traces) {
            for (int n = 0; n < entry.n_nodes; ++n)
                run.traces.push_back({n, std::move(nodes[n].traces[d])});
            if (cfg.roc_enabled) {
                const auto mult = roc_multipliers();
                run.roc = roc_sweep(run.traces, res.events, mult, window, entry.n_nodes);
            }
        }
        if (!options.keep_triggers) run.triggers.clear();
        res.detectors.push_back(std::move(run));
    }
    return res;
}

MetricStats summarize(const std::vector<double>& values) {
    MetricStats s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::map<std::string, double> report_fields(const MetricsReport& r) {
    std::map<std::string, double> f;
    if (r.detection_rate_pct) f["detection_rate_pct"] = *r.detection_rate_pct;
    if (r.event_precision_pct) f["event_precision_pct"] = *r.event_precision_pct;
    f["fp_cluster_count"] = static_cast<double>(r.fp_cluster_count);
    f["far_clusters_per_hr_per_node"] = r.far_clusters_per_hr_per_node;
    f["per_node_load_bytes_per_hr"] = r.per_node_load_bytes_per_hr;
    if (r.mean_latency_s) f["mean_latency_s"] = *r.mean_latency_s;
    f["events_scheduled"] = static_cast<double>(r.events_scheduled);
    f["events_detected"] = static_cast<double>(r.events_detected);
    f["trigger_count"] = static_cast<double>(r.trigger_count);
    f["delivered_count"] = static_cast<double>(r.delivered_count);
    return f;
}

const MetricStats& AggregateRow::at(const std::string& metric) const {
    static const MetricStats kEmpty;
    const auto it = metrics.find(metric);
    return it == metrics.end() ? kEmpty : it->second;
}

std::vector<AggregateRow> aggregate(const std::vector<ReplicateResult>& replicates) {
    std::vector<AggregateRow> rows;
    if (replicates.empty()) return rows;
    for (const auto& d : replicates.front().detectors) {
        std::map<std::string, std::vector<double>> values;
        for (const auto& rep : replicates)
            for (const auto& [k, v] : report_fields(rep.find(d.config.label).report)) values[k].push_back(v);
        AggregateRow row;
        row.config = replicates.front().config;
        row.label = d.config.label;
        for (const auto& [k, v] : values) row.metrics[k] = summarize(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::map<std::string, std::vector<RocPoint>> aggregate_roc(const std::vector<ReplicateResult>& replicates) {
    std::map<std::string, std::vector<RocPoint>> out;
    if (replicates.empty()) return out;
    for (const auto& d : replicates.front().detectors) {
        if (d.roc.empty()) continue;
        std::vector<RocPoint> mean(d.roc.size());
        for (const auto& rep : replicates) {
            const auto& roc = rep.find(d.config.label).roc;
            for (std::size_t i = 0; i < roc.size() && i < mean.size(); ++i) {
                mean[i].multiplier = roc[i].multiplier;
                mean[i].detection_rate_pct += roc[i].detection_rate_pct / replicates.size();
                mean[i].far_clusters_per_hr_per_node += roc[i].far_clusters_per_hr_per_node / replicates.size();
            }
        }
        out[d.config.label] = std::move(mean);
    }
    return out;
}

std::vector<ConfigResult> run_experiment(const RunConfig& cfg, std::ostream* log) {
    cfg.validate();
    std::vector<ConfigResult> out;
    for (const auto& entry : cfg.configurations) {
        ConfigResult cr;
        cr.entry = entry;
        for (int r = 0; r < cfg.replicates; ++r) {
            RunOptions opt;
            opt.parallel = cfg.parallel;
            cr.replicates.push_back(run_configuration(cfg, entry, r, opt));
            if (log)
                *log << entry.name() << " replicate " << r << " seed " << cr.replicates.back().seed
                     << " done" << std::endl;
        }
        cr.aggregates = aggregate(cr.replicates);
        cr.roc = aggregate_roc(cr.replicates);
        for (auto& rep : cr.replicates)
            for (auto& d : rep.detectors) std::vector<StrengthTrace>().swap(d.traces);
        out.push_back(std::move(cr));
    }
    return out;
}

void write_conformance_trace(const RunConfig& cfg, const ConfigEntry& entry, int replicate,
                             std::ostream& os) {
    cfg.validate();
    SignalParams sp = cfg.signal;
    sp.snr_db = entry.snr_db;
    const double duration_s = cfg.duration_hr * 3600.0;
    const auto n_frames = static_cast<std::int64_t>(std::floor(duration_s / kFramePeriodS));
    const auto seed = replicate_seed(cfg.master_seed, entry, replicate);
    const auto lineup = detector_lineup(cfg);

    os << "node_id,frame_index,detector,strength,trigger\n";
    os.precision(17);
    for (int node = 0; node < entry.n_nodes; ++node) {
        NodeSignal signal(node, duration_s, sp, derive_seed(seed, {2, static_cast<std::uint64_t>(node)}));
        std::vector<std::unique_ptr<Detector>> dets;
        for (const auto& d : lineup) dets.push_back(make_detector(d));
        Frame frame;
        for (std::int64_t m = 0; m < n_frames; ++m) {
            signal.fill_frame(m, frame);
            const auto features = FrameFeatures::compute(frame);
            for (std::size_t d = 0; d < dets.size(); ++d) {
                const auto o = dets[d]->process(features);
                os << node << ',' << m << ',' << lineup[d].label << ',' << o.strength << ','
                   << (o.trigger ? 1 : 0) << '\n';
            }
        }
    }
}

}  // namespace meshdet
