#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "sdwsn/lqpredict.hpp"

namespace sdwsn {

using NodeId = std::uint32_t;
inline constexpr NodeId kInvalidNode = 0xffffffff;

struct ProtocolConfig {
    int m_up = 2;                    // consecutive receptions to admit
    int k_down = 2;                  // consecutive loss periods to evict
    double hello_period_s = 1.0;     // T
    bool prediction_enabled = false;
    bool gate_flow_table = true;     // gate FLOW_TABLE receptions too
    int history_limit = 10;          // >= model k; radio-view log bound

    void validate() const;
};

// Predictor hook for the receive path. Disabled gates and cold starts
// (history shorter than the model's k) always pass.
class PredictionGate {
public:
    PredictionGate() = default;
    PredictionGate(std::shared_ptr<const Model> model, bool enabled)
        : model_(std::move(model)), enabled_(enabled && model_ != nullptr) {}

    bool enabled() const { return enabled_; }
    bool pass(const std::deque<PacketRecord>& history) const;

private:
    std::shared_ptr<const Model> model_;
    bool enabled_ = false;
};

// Per-peer hysteresis state. recv/lost are the Alg-1 counters and are driven
// by *accepted* packets; the history is the radio's per-period view (gated-out
// arrivals still appear as receptions there, silent periods as floor-RSSI
// losses).
struct LinkState {
    int recv = 0;
    int lost = 0;
    double last_recv_time = -1e300;     // last accepted packet
    double last_history_time = -1e300;  // last history append (any arrival/fill)
    std::deque<PacketRecord> history;
};

struct HelloResult {
    bool accepted = false;
    bool neighbor_added = false;
};

class NeighborTable {
public:
    // HELLO_RQ arrival. Appends the arrival to the radio-view history, runs the
    // gate on the k-window preceding the packet, and updates counters /
    // membership only when the gate passes.
    HelloResult on_hello_received(NodeId src, double rssi_dbm, double now,
                                  const PredictionGate& gate,
                                  const ProtocolConfig& config);

    // Periodic maintenance (Alg. 1 timer branch): counts loss periods, fills
    // the radio-view history with floor entries for silent periods, and evicts
    // peers crossing K. Returns the evicted ids.
    std::vector<NodeId> on_hello_timer(double now, double floor_rssi_dbm,
                                       const ProtocolConfig& config);

    const std::set<NodeId>& members() const { return members_; }
    const std::map<NodeId, LinkState>& entries() const { return entries_; }
    const LinkState* find(NodeId peer) const;

    // incremented if recv and lost are ever both nonzero after an update
    std::uint64_t exclusivity_violations() const { return violations_; }

private:
    void check_exclusive(const LinkState& s);

    std::map<NodeId, LinkState> entries_;
    std::set<NodeId> members_;
    std::uint64_t violations_ = 0;
};

enum class MessageKind { kHelloRq, kTopologyRq, kTopologyRp, kFlowTable };

struct WaveId {
    NodeId origin = kInvalidNode;
    std::uint64_t seq = 0;
    auto operator<=>(const WaveId&) const = default;
};

struct FlowTable {
    std::map<NodeId, NodeId> rules;  // destination -> next hop
};

// route_lookup: exact-match next hop; empty when the destination has no rule.
// kInvalidNode is rejected as malformed.
std::optional<NodeId> route_lookup(const FlowTable& table, NodeId dest);

struct Message {
    MessageKind kind = MessageKind::kHelloRq;
    NodeId src = kInvalidNode;       // last-hop sender
    WaveId wave;                     // flood identity (RQ/RP)
    // TOPOLOGY_RP payload
    NodeId reporter = kInvalidNode;
    std::vector<NodeId> neighbor_list;
    bool incremental = false;        // topology-repair report
    // FLOW_TABLE payload: rules for flow_dst, source-routed along `route`
    NodeId flow_dst = kInvalidNode;
    FlowTable flow_rules;
    std::vector<NodeId> route;
};

// Directed adjacency collected from TOPOLOGY_RP reports: an edge i->j exists
// when j's latest report names i as neighbor (i's packets reach j).
struct GlobalTopology {
    std::set<NodeId> nodes;
    std::map<NodeId, std::set<NodeId>> in_edges;  // j -> {i : i->j}
    double collected_at = 0.0;

    void clear();
    // replaces the reporter's in-edges with the reported list (idempotent)
    void apply_report(NodeId reporter, const std::vector<NodeId>& neighbors);
    bool has_edge(NodeId from, NodeId to) const;
    std::size_t edge_count() const;
};

// Minimum-hop next-hop tables over the collected adjacency, lowest node id
// breaking ties. Unreachable destinations get no rule.
std::map<NodeId, FlowTable> build_flow_tables(const GlobalTopology& topology);

// Walks next hops src -> dst; empty when unreachable or a cycle is hit.
std::optional<std::vector<NodeId>> route_path(
    const std::map<NodeId, FlowTable>& tables, NodeId src, NodeId dst);

// True when, for every destination, following next hops from every node
// terminates at the destination without revisiting a node.
bool flow_tables_acyclic(const std::map<NodeId, FlowTable>& tables);

// Sensor-side topology management (Alg. 3 + repair reporting).
class SensorState {
public:
    explicit SensorState(NodeId id) : id_(id) {}

    NodeId id() const { return id_; }
    NeighborTable& neighbors() { return nbrs_; }
    const NeighborTable& neighbors() const { return nbrs_; }

    struct RqActions {
        Message reply;        // TOPOLOGY_RP toward the controller
        Message rebroadcast;  // flood continuation
    };

    // First accepted copy of a wave: respond + rebroadcast and remember the
    // upstream parent. Duplicates of an accepted wave, RQs from non-members,
    // and gate-rejected copies are dropped (only acceptance marks the wave as
    // handled, so a rejected copy does not block later ones).
    std::optional<RqActions> on_topology_rq(const Message& msg,
                                            const PredictionGate& gate,
                                            const ProtocolConfig& config);

    // Neighbor-table change during the stable phase: an incremental
    // TOPOLOGY_RP via the last known parent, or queued until the next wave.
    std::optional<Message> on_neighbor_change();

    // Reverse-path next hop for forwarding someone else's RP.
    std::optional<NodeId> rp_next_hop(const Message& msg) const;

    bool repair_pending() const { return repair_pending_; }
    std::optional<NodeId> parent() const { return latest_parent_; }
    void install_flow_table(const FlowTable& table) { installed_ = table; }
    const std::optional<FlowTable>& installed_table() const { return installed_; }

private:
    NodeId id_;
    NeighborTable nbrs_;
    std::set<WaveId> handled_;
    std::map<WaveId, NodeId> parents_;
    std::optional<WaveId> latest_wave_;
    std::optional<NodeId> latest_parent_;
    bool repair_pending_ = false;
    std::optional<FlowTable> installed_;
};

// Controller-side topology management (Alg. 2).
class ControllerState {
public:
    explicit ControllerState(NodeId id) : id_(id) {}

    NodeId id() const { return id_; }

    // t1 fired: clears the accumulator, advances the wave, returns the RQ.
    Message start_collection(double now);

    // Returns false for stale-wave reports (dropped); incremental repairs are
    // accepted at any time.
    bool on_topology_rp(const Message& msg, double now);

    // t2 fired: snapshots the controller's own neighbor list into the
    // topology and rebuilds all flow tables.
    const std::map<NodeId, FlowTable>& on_t2(
        const std::vector<NodeId>& own_neighbors, double now);

    const GlobalTopology& topology() const { return topo_; }
    const std::map<NodeId, FlowTable>& tables() const { return tables_; }
    WaveId current_wave() const { return current_; }

private:
    NodeId id_;
    std::uint64_t next_seq_ = 1;
    WaveId current_{kInvalidNode, 0};
    GlobalTopology topo_;
    std::map<NodeId, FlowTable> tables_;
};

}  // namespace sdwsn
