#include "meshdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace meshdet {

namespace {

using EventsByNode = std::map<int, std::vector<std::size_t>>;

// Event indices per node, sorted by onset.
EventsByNode index_events(std::span<const GroundTruthEvent> events) {
    EventsByNode by_node;
    for (std::size_t i = 0; i < events.size(); ++i) by_node[events[i].node_id].push_back(i);
    for (auto& [node, idx] : by_node)
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return events[a].onset_s < events[b].onset_s; });
    return by_node;
}

// Index of an event overlapping the frame, or -1. Node events do not overlap
// each other, so at most two can touch one frame; the earlier one wins.
std::int64_t find_overlap(std::int64_t frame_index, const std::vector<std::size_t>& node_events,
                          std::span<const GroundTruthEvent> events) {
    const double frame_end = static_cast<double>(frame_index + 1) * kFramePeriodS;
    // First event whose end is not before the frame start.
    auto it = std::lower_bound(node_events.begin(), node_events.end(), frame_index,
                               [&](std::size_t e, std::int64_t m) {
                                   const double start = static_cast<double>(m) * kFramePeriodS;
                                   return events[e].onset_s + events[e].duration_s < start;
                               });
    for (; it != node_events.end() && events[*it].onset_s < frame_end; ++it)
        if (frame_overlaps_event(frame_index, events[*it])) return static_cast<std::int64_t>(*it);
    return -1;
}

}  // namespace

std::int64_t ScoringWindow::first_frame() const {
    return static_cast<std::int64_t>(std::ceil(start_s / kFramePeriodS - 1e-9));
}

bool frame_overlaps_event(std::int64_t frame_index, const GroundTruthEvent& event) {
    const double start = static_cast<double>(frame_index) * kFramePeriodS;
    const double end = start + kFramePeriodS;
    return start <= event.onset_s + event.duration_s && end > event.onset_s;
}

Classification classify_triggers(std::span<const TriggerRecord> triggers,
                                 std::span<const GroundTruthEvent> events) {
    const auto by_node = index_events(events);
    Classification c;
    c.trigger_is_tp.assign(triggers.size(), false);
    c.event_detected.assign(events.size(), false);
    static const std::vector<std::size_t> kNone;
    for (std::size_t i = 0; i < triggers.size(); ++i) {
        const auto it = by_node.find(triggers[i].node_id);
        const auto& node_events = it == by_node.end() ? kNone : it->second;
        const auto hit = find_overlap(triggers[i].frame_index, node_events, events);
        if (hit >= 0) {
            c.trigger_is_tp[i] = true;
            c.event_detected[static_cast<std::size_t>(hit)] = true;
        }
    }
    return c;
}

std::int64_t cluster_fp(std::span<const double> fp_times, double window_s) {
    std::int64_t clusters = 0;
    double last = 0.0;
    for (std::size_t i = 0; i < fp_times.size(); ++i) {
        if (i > 0 && fp_times[i] < fp_times[i - 1])
            throw std::invalid_argument("cluster_fp: times must be sorted");
        if (i == 0 || fp_times[i] - last > window_s) ++clusters;
        last = fp_times[i];
    }
    return clusters;
}

MetricsReport compute_report(std::span<const TriggerRecord> triggers,
                             std::span<const GroundTruthEvent> events,
                             std::span<const std::uint64_t> bytes_per_node,
                             const ScoringWindow& window, int n_nodes) {
    if (n_nodes <= 0) throw std::invalid_argument("compute_report: n_nodes must be positive");
    const std::int64_t first = window.first_frame();

    std::vector<TriggerRecord> scored;
    scored.reserve(triggers.size());
    for (const auto& t : triggers)
        if (t.frame_index >= first) scored.push_back(t);
    std::vector<GroundTruthEvent> scored_events;
    for (const auto& e : events)
        if (e.onset_s >= window.start_s) scored_events.push_back(e);

    const auto cls = classify_triggers(scored, scored_events);

    MetricsReport r;
    r.n_nodes = n_nodes;
    r.scored_hours = window.hours();
    r.trigger_count = static_cast<std::int64_t>(scored.size());
    r.events_scheduled = static_cast<std::int64_t>(scored_events.size());
    r.events_detected = std::count(cls.event_detected.begin(), cls.event_detected.end(), true);

    std::map<int, std::vector<double>> fp_times;
    double latency_sum = 0.0;
    std::int64_t latency_n = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        const auto& t = scored[i];
        if (t.delivered) ++r.delivered_count;
        if (!cls.trigger_is_tp[i]) {
            fp_times[t.node_id].push_back(t.time_s);
            ++r.fp_trigger_count;
        } else if (t.delivered && t.sink_arrival_s) {
            latency_sum += *t.sink_arrival_s - t.time_s;
            ++latency_n;
        }
    }
    for (auto& [node, times] : fp_times) {
        std::sort(times.begin(), times.end());
        r.fp_cluster_count += cluster_fp(times);
    }

    if (r.events_scheduled > 0)
        r.detection_rate_pct = 100.0 * static_cast<double>(r.events_detected) /
                               static_cast<double>(r.events_scheduled);
    const auto units = r.events_detected + r.fp_cluster_count;
    if (units > 0)
        r.event_precision_pct =
            100.0 * static_cast<double>(r.events_detected) / static_cast<double>(units);
    r.far_clusters_per_hr_per_node =
        static_cast<double>(r.fp_cluster_count) / (r.scored_hours * n_nodes);

    double total_bytes = 0.0;
    for (auto b : bytes_per_node) total_bytes += static_cast<double>(b);
    r.per_node_load_bytes_per_hr = total_bytes / (r.scored_hours * n_nodes);
    if (latency_n > 0) r.mean_latency_s = latency_sum / static_cast<double>(latency_n);
    return r;
}

std::vector<double> roc_multipliers(std::size_t count, double lo, double hi) {
    if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("roc_multipliers");
    std::vector<double> out(count);
    const double a = std::log2(lo);
    const double b = std::log2(hi);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp2(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

std::vector<RocPoint> roc_sweep(std::span<const StrengthTrace> traces,
                                std::span<const GroundTruthEvent> events,
                                std::span<const double> multipliers, const ScoringWindow& window,
                                int n_nodes) {
    if (n_nodes <= 0) throw std::invalid_argument("roc_sweep: n_nodes must be positive");
    const std::int64_t first = window.first_frame();
    std::vector<GroundTruthEvent> scored_events;
    for (const auto& e : events)
        if (e.onset_s >= window.start_s) scored_events.push_back(e);
    const auto by_node = index_events(scored_events);
    static const std::vector<std::size_t> kNone;

    // Overlapping event per frame, resolved once for all multipliers.
    std::vector<std::vector<std::int64_t>> overlap(traces.size());
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const auto it = by_node.find(traces[t].node_id);
        const auto& node_events = it == by_node.end() ? kNone : it->second;
        overlap[t].assign(traces[t].strength.size(), -1);
        for (const auto e : node_events)
            for (std::int64_t m = std::max<std::int64_t>(
                     first, static_cast<std::int64_t>(scored_events[e].onset_s / kFramePeriodS) - 1);
                 m < static_cast<std::int64_t>(traces[t].strength.size()); ++m) {
                if (static_cast<double>(m) * kFramePeriodS >
                    scored_events[e].onset_s + scored_events[e].duration_s)
                    break;
                if (overlap[t][static_cast<std::size_t>(m)] < 0 &&
                    frame_overlaps_event(m, scored_events[e]))
                    overlap[t][static_cast<std::size_t>(m)] = static_cast<std::int64_t>(e);
            }
    }

    std::vector<RocPoint> points;
    points.reserve(multipliers.size());
    std::vector<char> detected(scored_events.size());
    for (const double tau : multipliers) {
        std::fill(detected.begin(), detected.end(), 0);
        std::int64_t clusters = 0;
        for (std::size_t t = 0; t < traces.size(); ++t) {
            const auto& s = traces[t].strength;
            bool have_last = false;
            double last = 0.0;
            for (std::int64_t m = first; m < static_cast<std::int64_t>(s.size()); ++m) {
                if (!(s[static_cast<std::size_t>(m)] >= tau)) continue;
                const auto e = overlap[t][static_cast<std::size_t>(m)];
                if (e >= 0) {
                    detected[static_cast<std::size_t>(e)] = 1;
                    continue;
                }
                const double time = trigger_time(m);
                if (!have_last || time - last > kFpClusterWindowS) ++clusters;
                have_last = true;
                last = time;
            }
        }
        RocPoint p;
        p.multiplier = tau;
        const auto n_det = std::count(detected.begin(), detected.end(), 1);
        p.detection_rate_pct = scored_events.empty()
                                   ? 0.0
                                   : 100.0 * static_cast<double>(n_det) /
                                         static_cast<double>(scored_events.size());
        p.far_clusters_per_hr_per_node =
            static_cast<double>(clusters) / (window.hours() * n_nodes);
        points.push_back(p);
    }
    return points;
}

}  // namespace meshdet
