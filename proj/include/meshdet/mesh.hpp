#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshdet/rng.hpp"

namespace meshdet {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Point& a, const Point& b);

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unit-disk graph of sensor nodes plus a sink. Nodes are 0..n-1; the sink is
// a separate vertex and does not transmit.
struct Topology {
    static constexpr int kSink = -1;

    double side_m = 0.0;
    double range_m = 200.0;
    std::vector<Point> positions;
    Point sink;
    std::vector<std::vector<int>> neighbors;  // node-to-node, sorted
    std::vector<bool> sink_adjacent;
    std::vector<int> hops;      // hop count to the sink, -1 if unreachable
    std::vector<int> next_hop;  // next node toward the sink, kSink for the last hop
    std::vector<std::vector<int>> two_hop;  // nodes within 2 hops, excluding self

    int size() const { return static_cast<int>(positions.size()); }
    bool connected() const;
    double mean_hops() const;
    // Transmitters along the route, origin first.
    std::vector<int> route(int origin) const;
};

// Builds adjacency, routes and 2-hop sets for fixed positions.
Topology make_topology(std::vector<Point> positions, Point sink, double range_m, double side_m = 0.0);

// Uniform placement in a side x side square, sink at the centre, redrawn until
// connected. Throws TopologyError after max_attempts.
Topology build_topology(int n_nodes, double side_m, double range_m, Rng& rng,
                        int max_attempts = 1000);

// Default deployment side for a node count: 350 m for 10 nodes, 750 m for 50.
double default_side_m(int n_nodes);

// BFS hop counts from the sink; -1 for unreachable nodes.
std::vector<int> route_hops(const Topology& topo);

// Unicast: only the nodes on the shortest path transmit. Flood: every node
// rebroadcasts each message once; the sink still hears the shortest-path copy first.
enum class Routing { Unicast, Flood };

struct MacParams {
    int cw_min = 8;
    int cw_max = 64;
    double slot_s = 320e-6;
    int max_retries = 4;
    double phy_bitrate_bps = 250000.0;
    int payload_bytes = 24;
    int header_bytes = 8;
    double max_collision_prob = 0.3;

    int message_bytes() const { return payload_bytes + header_bytes; }
    double tx_time_s() const { return message_bytes() * 8.0 / phy_bitrate_bps; }
    // Contention window for attempt a (0 = first transmission).
    int contention_window(int attempt) const;
    void validate() const;
};

struct DeliveryResult {
    bool delivered = false;
    double latency_s = 0.0;
    std::map<int, std::uint64_t> bytes_tx_per_node;
    int attempts = 0;

    std::uint64_t total_bytes() const;
};

// Collision probability at transmitter v: min(cap, fraction of v's 2-hop
// neighbourhood currently holding a message in flight).
double collision_probability(int transmitter, const Topology& topo, const MacParams& mac,
                             std::span<const char> in_flight);

// Delivers one message hop by hop. in_flight flags (per node) the transmitters
// busy with messages emitted in the same frame.
DeliveryResult transmit(int origin, const Topology& topo, const MacParams& mac,
                        std::span<const char> in_flight, Rng& rng);

// Same shortest-path delivery as transmit (identical draws, so identical
// latency and outcome), then one rebroadcast by every node off that path, in
// id order. Off-path copies only cost bytes.
DeliveryResult flood(int origin, const Topology& topo, const MacParams& mac,
                     std::span<const char> in_flight, Rng& rng);

struct DeliveryLogEntry {
    double time_s = 0.0;
    int origin = 0;
    std::string detector;
    bool delivered = false;
    double latency_s = 0.0;
    std::uint64_t bytes = 0;
};

void write_topology_csv(std::ostream& os, const Topology& topo);
void write_delivery_log_csv(std::ostream& os, std::span<const DeliveryLogEntry> log);

}  // namespace meshdet
