#include "meshdet/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>

namespace meshdet {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Topology::connected() const {
    return std::all_of(hops.begin(), hops.end(), [](int h) { return h >= 1; });
}

double Topology::mean_hops() const {
    if (hops.empty()) return 0.0;
    double sum = 0.0;
    for (int h : hops) sum += h;
    return sum / static_cast<double>(hops.size());
}

std::vector<int> Topology::route(int origin) const {
    std::vector<int> path;
    if (origin < 0 || origin >= size() || hops[origin] < 1)
        throw std::invalid_argument("route: origin has no path to the sink");
    for (int v = origin; v != kSink; v = next_hop[v]) path.push_back(v);
    return path;
}

std::vector<int> route_hops(const Topology& topo) {
    const int n = topo.size();
    std::vector<int> hops(n, -1);
    std::deque<int> queue;
    for (int v = 0; v < n; ++v)
        if (topo.sink_adjacent[v]) {
            hops[v] = 1;
            queue.push_back(v);
        }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w : topo.neighbors[v])
            if (hops[w] < 0) {
                hops[w] = hops[v] + 1;
                queue.push_back(w);
            }
    }
    return hops;
}

Topology make_topology(std::vector<Point> positions, Point sink, double range_m, double side_m) {
    Topology t;
    t.side_m = side_m;
    t.range_m = range_m;
    t.positions = std::move(positions);
    t.sink = sink;
    const int n = t.size();
    t.neighbors.assign(n, {});
    t.sink_adjacent.assign(n, false);
    for (int i = 0; i < n; ++i) {
        t.sink_adjacent[i] = distance(t.positions[i], sink) <= range_m;
        for (int j = i + 1; j < n; ++j)
            if (distance(t.positions[i], t.positions[j]) <= range_m) {
                t.neighbors[i].push_back(j);
                t.neighbors[j].push_back(i);
            }
    }
    for (auto& nb : t.neighbors) std::sort(nb.begin(), nb.end());

    t.hops = route_hops(t);
    t.next_hop.assign(n, Topology::kSink);
    for (int v = 0; v < n; ++v) {
        if (t.hops[v] <= 1) continue;
        // neighbors are sorted, so the first one a level closer is the lowest id
        for (int w : t.neighbors[v])
            if (t.hops[w] == t.hops[v] - 1) {
                t.next_hop[v] = w;
                break;
            }
    }

    t.two_hop.assign(n, {});
    for (int v = 0; v < n; ++v) {
        std::vector<int> set;
        for (int w : t.neighbors[v]) {
            set.push_back(w);
            for (int u : t.neighbors[w])
                if (u != v) set.push_back(u);
        }
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        t.two_hop[v] = std::move(set);
    }
    return t;
}

Topology build_topology(int n_nodes, double side_m, double range_m, Rng& rng, int max_attempts) {
    if (n_nodes < 2) throw std::invalid_argument("build_topology: need at least 2 nodes");
    if (!(side_m > 0.0) || !(range_m > 0.0))
        throw std::invalid_argument("build_topology: side and range must be positive");
    const Point sink{side_m / 2.0, side_m / 2.0};
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<Point> pos(n_nodes);
        for (auto& p : pos) {
            p.x = rng.uniform(0.0, side_m);
            p.y = rng.uniform(0.0, side_m);
        }
        auto topo = make_topology(std::move(pos), sink, range_m, side_m);
        if (topo.connected()) return topo;
    }
    throw TopologyError("build_topology: no connected placement of " + std::to_string(n_nodes) +
                        " nodes in " + std::to_string(max_attempts) + " attempts");
}

double default_side_m(int n_nodes) {
    if (n_nodes == 10) return 350.0;
    if (n_nodes == 50) return 750.0;
    // keep the 10-node density for other sizes
    return 350.0 * std::sqrt(n_nodes / 10.0);
}

int MacParams::contention_window(int attempt) const {
    long cw = cw_min;
    for (int a = 0; a < attempt && cw < cw_max; ++a) cw *= 2;
    return static_cast<int>(std::min<long>(cw, cw_max));
}

void MacParams::validate() const {
    if (cw_min < 1 || cw_max < cw_min) throw std::invalid_argument("mac: need 1 <= cw_min <= cw_max");
    if (!(slot_s >= 0.0)) throw std::invalid_argument("mac: slot_s must be non-negative");
    if (max_retries < 0) throw std::invalid_argument("mac: max_retries must be non-negative");
    if (!(phy_bitrate_bps > 0.0)) throw std::invalid_argument("mac: phy_bitrate_bps must be positive");
    if (payload_bytes < 0 || header_bytes < 0 || message_bytes() == 0)
        throw std::invalid_argument("mac: message size must be positive");
    if (!(max_collision_prob >= 0.0 && max_collision_prob < 1.0))
        throw std::invalid_argument("mac: max_collision_prob must be in [0, 1)");
}

std::uint64_t DeliveryResult::total_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& [node, b] : bytes_tx_per_node) sum += b;
    return sum;
}

double collision_probability(int transmitter, const Topology& topo, const MacParams& mac,
                             std::span<const char> in_flight) {
    const auto& hood = topo.two_hop[transmitter];
    if (hood.empty() || in_flight.empty()) return 0.0;
    int busy = 0;
    for (int w : hood)
        if (in_flight[w]) ++busy;
    const double rho = static_cast<double>(busy) / static_cast<double>(hood.size());
    return std::min(mac.max_collision_prob, rho);
}

namespace {

// Attempts one hop with backoff and retries. Returns false if every attempt collided.
bool send_hop(int v, const Topology& topo, const MacParams& mac, std::span<const char> in_flight,
              Rng& rng, DeliveryResult& r) {
    const double pc = collision_probability(v, topo, mac, in_flight);
    for (int attempt = 0; attempt <= mac.max_retries; ++attempt) {
        const auto cw = static_cast<std::uint64_t>(mac.contention_window(attempt));
        r.latency_s += static_cast<double>(rng.below(cw)) * mac.slot_s + mac.tx_time_s();
        r.bytes_tx_per_node[v] += static_cast<std::uint64_t>(mac.message_bytes());
        ++r.attempts;
        if (!(rng.uniform() < pc)) return true;
    }
    return false;
}

}  // namespace

DeliveryResult transmit(int origin, const Topology& topo, const MacParams& mac,
                        std::span<const char> in_flight, Rng& rng) {
    if (origin < 0 || origin >= topo.size() || topo.hops[origin] < 1)
        throw std::invalid_argument("transmit: origin has no route to the sink");
    DeliveryResult r;
    for (int v = origin; v != Topology::kSink; v = topo.next_hop[v]) {
        if (!send_hop(v, topo, mac, in_flight, rng, r)) {
            r.delivered = false;
            return r;
        }
    }
    r.delivered = true;
    return r;
}

DeliveryResult flood(int origin, const Topology& topo, const MacParams& mac,
                     std::span<const char> in_flight, Rng& rng) {
    DeliveryResult r = transmit(origin, topo, mac, in_flight, rng);
    const double latency = r.latency_s;
    const auto path = topo.route(origin);
    std::vector<char> on_path(topo.size(), 0);
    for (int v : path) on_path[v] = 1;
    for (int v = 0; v < topo.size(); ++v)
        if (!on_path[v] && topo.hops[v] > 0) send_hop(v, topo, mac, in_flight, rng, r);
    r.latency_s = latency;
    return r;
}

void write_topology_csv(std::ostream& os, const Topology& topo) {
    os << "node_id,x,y,hops\n" << std::setprecision(10);
    for (int v = 0; v < topo.size(); ++v)
        os << v << ',' << topo.positions[v].x << ',' << topo.positions[v].y << ',' << topo.hops[v]
           << '\n';
}

void write_delivery_log_csv(std::ostream& os, std::span<const DeliveryLogEntry> log) {
    os << "time_s,origin,detector,delivered,latency_s,bytes\n" << std::setprecision(10);
    for (const auto& e : log)
        os << e.time_s << ',' << e.origin << ',' << e.detector << ',' << (e.delivered ? 1 : 0) << ','
           << e.latency_s << ',' << e.bytes << '\n';
}

}  // namespace meshdet
