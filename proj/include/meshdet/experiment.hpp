#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "meshdet/config.hpp"
#include "meshdet/detectors.hpp"
#include "meshdet/mesh.hpp"
#include "meshdet/metrics.hpp"

namespace meshdet {

// Detector instances of a run: the enabled detectors plus one Lipski instance
// per extra k in the sweep (labelled lipski_k5 and so on).
std::vector<DetectorConfig> detector_lineup(const RunConfig& cfg);

struct DetectorRun {
    DetectorConfig config;
    MetricsReport report;
    std::vector<TriggerRecord> triggers;   // scored triggers, with delivery outcome
    std::vector<StrengthTrace> traces;     // per node, only when traces are requested
    std::vector<RocPoint> roc;
    std::vector<DeliveryLogEntry> delivery_log;
    std::uint64_t stream_digest = 0;       // hash of every frame this detector consumed
};

struct ReplicateResult {
    ConfigEntry config;
    int replicate = 0;
    std::uint64_t seed = 0;
    Topology topology;
    std::vector<GroundTruthEvent> events;
    std::vector<DetectorRun> detectors;

    const DetectorRun& find(const std::string& label) const;
};

struct RunOptions {
    bool parallel = true;
    bool keep_traces = false;  // implied by roc_enabled
    bool keep_triggers = true;
};

// Seed of replicate r of a configuration.
std::uint64_t replicate_seed(std::uint64_t master_seed, const ConfigEntry& entry, int replicate);

ReplicateResult run_configuration(const RunConfig& cfg, const ConfigEntry& entry, int replicate,
                                  const RunOptions& options = {});

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;  // sample std, 0 for a single value
    int count = 0;     // replicates where the metric was defined
};

MetricStats summarize(const std::vector<double>& values);

struct AggregateRow {
    ConfigEntry config;
    std::string label;
    std::map<std::string, MetricStats> metrics;  // keyed by MetricsReport field name

    const MetricStats& at(const std::string& metric) const;
};

// Mean and sample std of every metric per detector over the replicates of one
// configuration.
std::vector<AggregateRow> aggregate(const std::vector<ReplicateResult>& replicates);

// Mean ROC curve per detector over replicates of one configuration.
std::map<std::string, std::vector<RocPoint>> aggregate_roc(const std::vector<ReplicateResult>& replicates);

struct ConfigResult {
    ConfigEntry entry;
    std::vector<ReplicateResult> replicates;  // traces are dropped once the ROC is aggregated
    std::vector<AggregateRow> aggregates;
    std::map<std::string, std::vector<RocPoint>> roc;  // mean over replicates
};

// Every configuration and replicate of cfg. Progress lines go to log if given.
std::vector<ConfigResult> run_experiment(const RunConfig& cfg, std::ostream* log = nullptr);

// Per-frame strength and trigger of every detector on every node of one
// replicate, warmup included. Columns: node_id, frame_index, detector,
// strength, trigger.
void write_conformance_trace(const RunConfig& cfg, const ConfigEntry& entry, int replicate,
                             std::ostream& os);

// Numeric view of a report; absent optionals are omitted.
std::map<std::string, double> report_fields(const MetricsReport& r);

}  // namespace meshdet
