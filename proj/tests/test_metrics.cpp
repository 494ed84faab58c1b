#include "doctest.h"

#include <cmath>
#include <random>

#include "meshdet/metrics.hpp"

using namespace meshdet;

namespace {

TriggerRecord trig(int node, std::int64_t m, double strength = 2.0) {
    TriggerRecord t;
    t.node_id = node;
    t.frame_index = m;
    t.time_s = trigger_time(m);
    t.strength = strength;
    return t;
}

GroundTruthEvent event(int node, double onset, int index = 0) {
    GroundTruthEvent e;
    e.node_id = node;
    e.onset_s = onset;
    e.duration_s = 5.0;
    e.carrier_hz = 2.0;
    e.event_index = index;
    return e;
}

ScoringWindow window(double hours) { return {0.0, hours * 3600.0}; }

}  // namespace

TEST_CASE("trigger time is the frame end") {
    CHECK(trigger_time(0) == doctest::Approx(1.28));
    CHECK(trigger_time(10) == doctest::Approx(14.08));
    CHECK(ScoringWindow{}.first_frame() == 512);
}

TEST_CASE("classification") {
    // event spans 128.0 .. 133.0 s, i.e. frames 100..103
    const std::vector<GroundTruthEvent> ev{event(0, 128.0)};
    SUBCASE("trigger inside the window is TP") {
        const std::vector<TriggerRecord> t{trig(0, 101)};
        const auto c = classify_triggers(t, ev);
        CHECK(c.trigger_is_tp[0]);
        CHECK(c.event_detected[0]);
    }
    SUBCASE("other node's event is FP") {
        const std::vector<TriggerRecord> t{trig(1, 101)};
        const auto c = classify_triggers(t, ev);
        CHECK_FALSE(c.trigger_is_tp[0]);
        CHECK_FALSE(c.event_detected[0]);
    }
    SUBCASE("a single trigger on the last overlapping frame detects the event") {
        const std::vector<TriggerRecord> t{trig(0, 103)};
        CHECK(classify_triggers(t, ev).event_detected[0]);
    }
    SUBCASE("frames just outside are FP") {
        const std::vector<TriggerRecord> t{trig(0, 99), trig(0, 104)};
        const auto c = classify_triggers(t, ev);
        CHECK_FALSE(c.trigger_is_tp[0]);
        CHECK_FALSE(c.trigger_is_tp[1]);
    }
    CHECK(frame_overlaps_event(100, ev[0]));
    CHECK(frame_overlaps_event(103, ev[0]));
    CHECK_FALSE(frame_overlaps_event(99, ev[0]));
}

TEST_CASE("fp clustering") {
    CHECK(cluster_fp(std::vector<double>{0, 2, 4}) == 1);
    CHECK(cluster_fp(std::vector<double>{0, 10}) == 2);
    CHECK(cluster_fp(std::vector<double>{}) == 0);
    CHECK(cluster_fp(std::vector<double>{0, 4, 8, 12, 16}) == 1);  // chained, not anchored
    CHECK(cluster_fp(std::vector<double>{0, 5, 10.01}) == 2);
    CHECK_THROWS(cluster_fp(std::vector<double>{3, 1}));

    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0, 1000);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t(1 + trial % 40);
        for (auto& x : t) x = u(gen);
        std::sort(t.begin(), t.end());
        const auto c = cluster_fp(t);
        CHECK(c <= static_cast<std::int64_t>(t.size()));
        bool spread = true;
        for (std::size_t i = 1; i < t.size(); ++i) spread &= t[i] - t[i - 1] > 5.0;
        CHECK((c == static_cast<std::int64_t>(t.size())) == spread);
    }
}

TEST_CASE("report arithmetic") {
    SUBCASE("perfect detector") {
        const std::vector<GroundTruthEvent> ev{event(0, 128.0), event(1, 640.0)};
        std::vector<TriggerRecord> t{trig(0, 100), trig(1, 500)};
        const std::vector<std::uint64_t> bytes{64, 32};
        const auto r = compute_report(t, ev, bytes, window(2.0), 2);
        CHECK(*r.detection_rate_pct == 100.0);
        CHECK(*r.event_precision_pct == 100.0);
        CHECK(r.fp_cluster_count == 0);
        CHECK(r.far_clusters_per_hr_per_node == 0.0);
        CHECK(r.per_node_load_bytes_per_hr == doctest::Approx(96.0 / 4.0));
        CHECK_FALSE(r.mean_latency_s.has_value());
    }
    SUBCASE("precision, far and latency") {
        const std::vector<GroundTruthEvent> ev{event(0, 128.0), event(0, 1280.0)};
        std::vector<TriggerRecord> t{trig(0, 100), trig(0, 2000), trig(0, 2001), trig(0, 3000)};
        t[0].delivered = true;
        t[0].sink_arrival_s = t[0].time_s + 0.004;
        t[1].delivered = true;
        t[1].sink_arrival_s = t[1].time_s + 1.0;  // FP: no latency contribution
        const auto r = compute_report(t, ev, std::vector<std::uint64_t>{0}, window(4.0), 1);
        CHECK(*r.detection_rate_pct == 50.0);
        CHECK(r.fp_cluster_count == 2);
        CHECK(r.fp_trigger_count == 3);
        CHECK(*r.event_precision_pct == doctest::Approx(100.0 / 3.0));
        CHECK(r.far_clusters_per_hr_per_node == doctest::Approx(2.0 / 4.0));
        CHECK(*r.mean_latency_s == doctest::Approx(0.004));
        CHECK(r.delivered_count == 2);
    }
    SUBCASE("worked precision example") {
        // 240 detected events against 12,519 FP clusters
        const double p = 100.0 * 240 / (240 + 12519);
        CHECK(p == doctest::Approx(1.88).epsilon(0.01));
    }
    SUBCASE("no events leaves detection rate absent") {
        const auto r = compute_report(std::vector<TriggerRecord>{trig(0, 10)}, {}, std::vector<std::uint64_t>{0},
                                      window(1.0), 1);
        CHECK_FALSE(r.detection_rate_pct.has_value());
        CHECK(*r.event_precision_pct == 0.0);
    }
    SUBCASE("warmup is not scored") {
        ScoringWindow w{kWarmupS, 3600.0};
        const std::vector<GroundTruthEvent> ev{event(0, 100.0), event(0, 1000.0)};
        const std::vector<TriggerRecord> t{trig(0, 10), trig(0, 80), trig(0, 782)};
        const auto r = compute_report(t, ev, std::vector<std::uint64_t>{0}, w, 1);
        CHECK(r.events_scheduled == 1);
        CHECK(r.trigger_count == 1);
        CHECK(*r.detection_rate_pct == 100.0);
        CHECK(r.scored_hours == doctest::Approx((3600.0 - kWarmupS) / 3600.0));
    }
}

TEST_CASE("roc multipliers") {
    const auto m = roc_multipliers();
    REQUIRE(m.size() == 25);
    CHECK(m.front() == doctest::Approx(0.25));
    CHECK(m.back() == doctest::Approx(4.0));
    CHECK(m[12] == 1.0);
    for (std::size_t i = 1; i < m.size(); ++i) CHECK(m[i] / m[i - 1] == doctest::Approx(std::pow(16.0, 1.0 / 24)));
}

TEST_CASE("roc sweep: monotone detection, live threshold reproduced") {
    std::mt19937_64 gen(5);
    std::exponential_distribution<double> e(2.5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int nodes = 4;
    const std::int64_t frames = 6000;
    const ScoringWindow w{kWarmupS, frames * kFramePeriodS};
    std::vector<GroundTruthEvent> events;
    std::vector<StrengthTrace> traces;
    std::vector<StrengthTrace> sparse;  // isolated spikes only, every 8th frame
    std::vector<TriggerRecord> live;
    for (int n = 0; n < nodes; ++n) {
        StrengthTrace tr{n, std::vector<double>(frames)};
        StrengthTrace sp{n, std::vector<double>(frames, 0.0)};
        for (std::size_t m = 0; m < tr.strength.size(); ++m) {
            tr.strength[m] = e(gen);
            if (m % 8 == 0) sp.strength[m] = 8.0 * u(gen);
        }
        for (double onset = 800.0 + 37 * n; onset < frames * kFramePeriodS - 10; onset += 400.0) {
            events.push_back(event(n, onset));
            const auto m = static_cast<std::size_t>(onset / kFramePeriodS) + 1;
            tr.strength[m] += 4.5 * e(gen);
            sp.strength[m] += 4.5 * e(gen);
        }
        for (std::int64_t m = 0; m < frames; ++m)
            if (tr.strength[static_cast<std::size_t>(m)] >= 1.0 && m >= w.first_frame())
                live.push_back(trig(n, m, tr.strength[static_cast<std::size_t>(m)]));
        traces.push_back(std::move(tr));
        sparse.push_back(std::move(sp));
    }
    const auto mult = roc_multipliers();
    const auto roc = roc_sweep(traces, events, mult, w, nodes);
    REQUIRE(roc.size() == 25);
    for (std::size_t i = 1; i < roc.size(); ++i) CHECK(roc[i].detection_rate_pct <= roc[i - 1].detection_rate_pct);
    const auto rep = compute_report(live, events, std::vector<std::uint64_t>(nodes, 0), w, nodes);
    CHECK(roc[12].multiplier == 1.0);
    CHECK(roc[12].detection_rate_pct == *rep.detection_rate_pct);
    CHECK(roc[12].far_clusters_per_hr_per_node == rep.far_clusters_per_hr_per_node);

    // With FP triggers never closer than 5 s, clusters are triggers and FAR is monotone too.
    const auto roc2 = roc_sweep(sparse, events, mult, w, nodes);
    for (std::size_t i = 1; i < roc2.size(); ++i) {
        CHECK(roc2[i].detection_rate_pct <= roc2[i - 1].detection_rate_pct);
        CHECK(roc2[i].far_clusters_per_hr_per_node <= roc2[i - 1].far_clusters_per_hr_per_node);
    }
    CHECK(roc2.front().far_clusters_per_hr_per_node > roc2.back().far_clusters_per_hr_per_node);
}

TEST_CASE("raising the threshold can split an FP chain") {
    // Three FP frames 2 frames apart chain into one cluster; dropping the
    // middle one leaves two triggers 5.12 s apart, which is two clusters.
    const ScoringWindow w{0.0, 3600.0};
    StrengthTrace t{0, std::vector<double>(100, 0.0)};
    t.strength[10] = 3.0;
    t.strength[12] = 1.5;
    t.strength[14] = 3.0;
    const std::vector<double> mult{1.0, 2.0};
    const auto roc = roc_sweep(std::vector<StrengthTrace>{t}, {}, mult, w, 1);
    CHECK(roc[0].far_clusters_per_hr_per_node == doctest::Approx(1.0));
    CHECK(roc[1].far_clusters_per_hr_per_node == doctest::Approx(2.0));
}
