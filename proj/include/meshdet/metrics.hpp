#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "meshdet/signal_model.hpp"

namespace meshdet {

inline constexpr double kFpClusterWindowS = 5.0;

struct TriggerRecord {
    int node_id = 0;
    std::int64_t frame_index = 0;
    double time_s = 0.0;  // decision time, end of the frame
    double strength = 0.0;
    bool delivered = false;
    std::optional<double> sink_arrival_s;
};

// Time at which frame m's decision is available.
inline double trigger_time(std::int64_t frame_index) {
    return static_cast<double>(frame_index + 1) * kFramePeriodS;
}

// Scored interval of a run: metrics ignore everything before start_s.
struct ScoringWindow {
    double start_s = kWarmupS;
    double end_s = 86400.0;
    double hours() const { return (end_s - start_s) / 3600.0; }
    std::int64_t first_frame() const;
};

struct Classification {
    std::vector<bool> trigger_is_tp;   // parallel to the trigger list
    std::vector<bool> event_detected;  // parallel to the event list
};

// True when frame m of a node overlaps [onset, onset + duration] of the event.
bool frame_overlaps_event(std::int64_t frame_index, const GroundTruthEvent& event);

// TP iff the trigger frame overlaps an event on the same node.
Classification classify_triggers(std::span<const TriggerRecord> triggers,
                                 std::span<const GroundTruthEvent> events);

// Greedy chaining: a trigger joins the current cluster when it is within
// window_s of the previous trigger of that cluster. Times must be sorted.
std::int64_t cluster_fp(std::span<const double> fp_times, double window_s = kFpClusterWindowS);

struct MetricsReport {
    std::optional<double> detection_rate_pct;
    std::optional<double> event_precision_pct;
    std::int64_t fp_cluster_count = 0;
    double far_clusters_per_hr_per_node = 0.0;
    double per_node_load_bytes_per_hr = 0.0;
    std::optional<double> mean_latency_s;
    std::int64_t events_scheduled = 0;
    std::int64_t events_detected = 0;
    std::int64_t trigger_count = 0;
    std::int64_t fp_trigger_count = 0;
    std::int64_t delivered_count = 0;
    double scored_hours = 0.0;
    int n_nodes = 0;
};

// bytes_per_node: bytes each node transmitted during the scored window.
MetricsReport compute_report(std::span<const TriggerRecord> triggers,
                             std::span<const GroundTruthEvent> events,
                             std::span<const std::uint64_t> bytes_per_node,
                             const ScoringWindow& window, int n_nodes);

struct RocPoint {
    double multiplier = 1.0;
    double detection_rate_pct = 0.0;
    double far_clusters_per_hr_per_node = 0.0;
};

// 25 log-spaced multipliers over [0.25, 4]; the middle one is exactly 1.
std::vector<double> roc_multipliers(std::size_t count = 25, double lo = 0.25, double hi = 4.0);

// Per-frame strength trace of one detector on one node, indexed by frame.
struct StrengthTrace {
    int node_id = 0;
    std::vector<double> strength;
};

// Re-derives triggers as strength >= multiplier and rescoring them.
std::vector<RocPoint> roc_sweep(std::span<const StrengthTrace> traces,
                                std::span<const GroundTruthEvent> events,
                                std::span<const double> multipliers, const ScoringWindow& window,
                                int n_nodes);

}  // namespace meshdet
