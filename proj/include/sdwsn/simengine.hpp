#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdwsn/channel.hpp"
#include "sdwsn/protocol.hpp"

namespace sdwsn {

enum class Placement { kUniform, kLine, kPair };

const char* placement_name(Placement p);
Placement placement_from_name(const std::string& name);

// Full description of one simulation run. (seed, config) determines the run
// bit for bit.
struct ScenarioConfig {
    Placement placement = Placement::kUniform;
    double area_w_m = 500.0;
    double area_h_m = 500.0;
    double density = 12e-5;       // nodes per m^2 (uniform placement)
    int node_count = 0;           // 0 -> derived from density * area
    double line_spacing_m = 0.0;  // line placement
    int line_count = 0;
    double pair_distance_m = 0.0;  // pair placement

    ChannelParams channel = ChannelParams::from_threshold(3.0, 4.0, 66.0, 0.0);
    ProtocolConfig protocol;
    std::shared_ptr<const Model> model;  // required when prediction is enabled

    double duration_s = 2000.0;
    std::uint64_t seed = 1;

    double t1_start_s = 100.0;   // first topology collection
    double t1_period_s = 200.0;  // collection repeats
    double t2_delay_s = 10.0;    // collection window before flow tables
    double broadcast_cutoff_factor = 2.0;  // x r0; p(2 r0) < 1.2%

    int resolved_node_count() const;
    void validate() const;
};

struct Deployment {
    std::vector<std::array<double, 2>> positions;
    NodeId controller = 0;

    double distance(NodeId a, NodeId b) const;
};

// Sensors placed uniformly at random (seeded), the controller at the exact
// area center; line/pair placements put node 0 at the origin of the axis.
Deployment build_scenario(const ScenarioConfig& config);

enum class TraceKind {
    kNeighborAdded,
    kNeighborRemoved,
    kWaveStarted,
    kRpReceived,
    kFlowTableInstalled,
};

const char* trace_kind_name(TraceKind k);
TraceKind trace_kind_from_name(const std::string& name);

struct TraceRecord {
    double t = 0.0;
    NodeId node = kInvalidNode;
    TraceKind kind = TraceKind::kNeighborAdded;
    NodeId peer = kInvalidNode;   // peer / reporter, kInvalidNode when n/a
    std::uint64_t seq = 0;        // wave seq when applicable
};

// Per-directed-link HELLO ledger; the e2e metrics use gate_passed/sent (with
// prediction) or received/sent (without) as the measured per-link rate.
struct LinkStats {
    std::uint64_t sent = 0;
    std::uint64_t received = 0;
    std::uint64_t gate_passed = 0;
};

struct RunResult {
    ScenarioConfig config;
    Deployment deployment;
    std::vector<TraceRecord> trace;
    std::vector<LinkStats> ledger;  // indexed src * n + dst
    std::vector<std::set<NodeId>> final_members;
    std::map<NodeId, FlowTable> controller_tables;
    GlobalTopology final_topology;
    std::vector<bool> table_installed;
    std::uint64_t events_processed = 0;
    // TOPOLOGY_RQ transmissions per wave seq (flood-safety observable)
    std::map<std::uint64_t, std::uint64_t> rq_tx_per_wave;
    std::uint64_t causality_violations = 0;
    std::uint64_t exclusivity_violations = 0;
    std::uint64_t undeliverable_flow_tables = 0;
    std::uint64_t dropped_rp_no_parent = 0;

    int node_count() const { return static_cast<int>(deployment.positions.size()); }
    const LinkStats& link(NodeId src, NodeId dst) const;
    // measured per-link delivery rate from the ledger
    double link_rate(NodeId src, NodeId dst, bool gated) const;
};

RunResult run(const ScenarioConfig& config);

// One broadcast's fan-out through the channel: independent draws for every
// node within the cutoff, returning the delivered (receiver, rssi) pairs.
// Keyed by (seed, salt, sender, receiver, counter) so a transmission's
// realization does not depend on event-processing order.
std::vector<std::pair<NodeId, double>> broadcast_deliveries(
    NodeId sender, const Deployment& deployment, const ChannelParams& channel,
    double cutoff_m, std::uint64_t seed, std::uint64_t salt,
    std::uint64_t counter);

// The per-transmission draw underlying broadcast_deliveries, exposed so tests
// can recompute a run's physical receptions offline.
LinkDraw keyed_link_draw(double distance_m, const ChannelParams& channel,
                         std::uint64_t seed, std::uint64_t salt, NodeId sender,
                         NodeId receiver, std::uint64_t counter);

// Initial HELLO phase for a node, uniform in [0, T).
double hello_jitter(std::uint64_t seed, NodeId node, double period_s);

// rng key salts used by the engine (public for offline recomputation)
inline constexpr std::uint64_t kSaltPlacement = 1;
inline constexpr std::uint64_t kSaltJitter = 2;
inline constexpr std::uint64_t kSaltHello = 3;
inline constexpr std::uint64_t kSaltControlBroadcast = 4;
inline constexpr std::uint64_t kSaltUnicast = 5;

// Run directory I/O: positions.csv, trace.csv, ledger.csv, flows.csv,
// members.csv, runmeta.csv. load_run restores everything the metrics need.
void save_run(const std::string& dir, const RunResult& result);
RunResult load_run(const std::string& dir);

}  // namespace sdwsn
