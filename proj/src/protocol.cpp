#include "sdwsn/protocol.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace sdwsn {

void ProtocolConfig::validate() const {
    if (m_up < 1) throw std::invalid_argument("protocol: m_up must be >= 1");
    if (k_down < 1) throw std::invalid_argument("protocol: k_down must be >= 1");
    if (!(hello_period_s > 0.0))
        throw std::invalid_argument("protocol: hello_period_s must be > 0");
    if (history_limit < 1)
        throw std::invalid_argument("protocol: history_limit must be >= 1");
}

bool PredictionGate::pass(const std::deque<PacketRecord>& history) const {
    if (!enabled_) return true;
    const int k = model_->k;
    if (history.size() < static_cast<std::size_t>(k)) return true;  // cold start
    const auto window = extract_window(history, history.size(), k);
    return predict(*model_, window).decision == 1;
}

void NeighborTable::check_exclusive(const LinkState& s) {
    if (s.recv != 0 && s.lost != 0) ++violations_;
}

const LinkState* NeighborTable::find(NodeId peer) const {
    const auto it = entries_.find(peer);
    return it == entries_.end() ? nullptr : &it->second;
}

HelloResult NeighborTable::on_hello_received(NodeId src, double rssi_dbm,
                                             double now,
                                             const PredictionGate& gate,
                                             const ProtocolConfig& config) {
    LinkState& s = entries_[src];  // unknown senders get fresh state
    HelloResult result;
    // gate runs on the k periods preceding this packet
    result.accepted = gate.pass(s.history);

    s.history.push_back({rssi_dbm, 1});
    while (s.history.size() > static_cast<std::size_t>(config.history_limit))
        s.history.pop_front();
    s.last_history_time = now;

    if (result.accepted) {
        s.recv += 1;
        s.lost = 0;
        s.last_recv_time = now;
        if (s.recv >= config.m_up && !members_.contains(src)) {
            members_.insert(src);
            result.neighbor_added = true;
        }
    }
    check_exclusive(s);
    return result;
}

std::vector<NodeId> NeighborTable::on_hello_timer(double now,
                                                  double floor_rssi_dbm,
                                                  const ProtocolConfig& config) {
    const double t = config.hello_period_s;
    std::vector<NodeId> removed;
    for (auto& [peer, s] : entries_) {
        // one radio-view entry per silent period (tolerates fp rounding of the
        // tick times)
        if (now - s.last_history_time >= t * (1.0 - 1e-9)) {
            s.history.push_back({floor_rssi_dbm, 0});
            while (s.history.size() >
                   static_cast<std::size_t>(config.history_limit))
                s.history.pop_front();
            s.last_history_time = now;
        }
        if (now > s.last_recv_time + t) {
            s.lost += 1;
            s.recv = 0;
            if (s.lost >= config.k_down && members_.contains(peer)) {
                members_.erase(peer);
                removed.push_back(peer);
            }
            check_exclusive(s);
        }
    }
    return removed;
}

std::optional<NodeId> route_lookup(const FlowTable& table, NodeId dest) {
    if (dest == kInvalidNode)
        throw std::invalid_argument("route_lookup: invalid destination id");
    const auto it = table.rules.find(dest);
    if (it == table.rules.end()) return std::nullopt;
    return it->second;
}

void GlobalTopology::clear() {
    nodes.clear();
    in_edges.clear();
}

void GlobalTopology::apply_report(NodeId reporter,
                                  const std::vector<NodeId>& neighbors) {
    nodes.insert(reporter);
    auto& in = in_edges[reporter];
    in.clear();
    for (NodeId n : neighbors) {
        nodes.insert(n);
        in.insert(n);
    }
}

bool GlobalTopology::has_edge(NodeId from, NodeId to) const {
    const auto it = in_edges.find(to);
    return it != in_edges.end() && it->second.contains(from);
}

std::size_t GlobalTopology::edge_count() const {
    std::size_t n = 0;
    for (const auto& [_, in] : in_edges) n += in.size();
    return n;
}

std::map<NodeId, FlowTable> build_flow_tables(const GlobalTopology& topology) {
    // compact indexing; ids ascend with index, preserving the lowest-id
    // tie-break through ordered adjacency lists
    const std::vector<NodeId> ids(topology.nodes.begin(), topology.nodes.end());
    const int n = static_cast<int>(ids.size());
    const auto index_of = [&](NodeId id) {
        const auto it = std::lower_bound(ids.begin(), ids.end(), id);
        return static_cast<int>(it - ids.begin());
    };
    std::vector<std::vector<int>> in(n), out(n);
    for (const auto& [to, froms] : topology.in_edges) {
        const int t = index_of(to);
        for (NodeId from : froms) {
            const int f = index_of(from);
            in[t].push_back(f);
            out[f].push_back(t);
        }
    }
    for (auto& v : out) std::sort(v.begin(), v.end());

    std::map<NodeId, FlowTable> tables;
    std::vector<int> dist(n);
    std::vector<int> frontier;
    frontier.reserve(n);
    for (int d = 0; d < n; ++d) {
        // BFS toward d over reversed edges gives min-hop distances
        std::fill(dist.begin(), dist.end(), -1);
        frontier.clear();
        dist[d] = 0;
        frontier.push_back(d);
        for (std::size_t head = 0; head < frontier.size(); ++head) {
            const int v = frontier[head];
            for (int u : in[v]) {
                if (dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    frontier.push_back(u);
                }
            }
        }
        for (int u = 0; u < n; ++u) {
            if (u == d || dist[u] < 0) continue;
            for (int w : out[u]) {
                if (dist[w] == dist[u] - 1) {
                    tables[ids[u]].rules[ids[d]] = ids[w];
                    break;
                }
            }
        }
    }
    return tables;
}

std::optional<std::vector<NodeId>> route_path(
    const std::map<NodeId, FlowTable>& tables, NodeId src, NodeId dst) {
    std::vector<NodeId> path{src};
    std::set<NodeId> visited{src};
    NodeId cur = src;
    while (cur != dst) {
        const auto it = tables.find(cur);
        if (it == tables.end()) return std::nullopt;
        const auto next = route_lookup(it->second, dst);
        if (!next) return std::nullopt;
        if (visited.contains(*next)) return std::nullopt;  // cycle
        visited.insert(*next);
        path.push_back(*next);
        cur = *next;
    }
    return path;
}

bool flow_tables_acyclic(const std::map<NodeId, FlowTable>& tables) {
    std::set<NodeId> dests;
    for (const auto& [_, t] : tables)
        for (const auto& [d, __] : t.rules) dests.insert(d);
    for (NodeId d : dests) {
        for (const auto& [src, t] : tables) {
            if (!t.rules.contains(d)) continue;
            if (!route_path(tables, src, d)) return false;
        }
    }
    return true;
}

std::optional<SensorState::RqActions> SensorState::on_topology_rq(
    const Message& msg, const PredictionGate& gate,
    const ProtocolConfig& config) {
    (void)config;
    if (msg.kind != MessageKind::kTopologyRq)
        throw std::invalid_argument("on_topology_rq: wrong message kind");
    if (handled_.contains(msg.wave)) return std::nullopt;  // duplicate
    if (!nbrs_.members().contains(msg.src)) return std::nullopt;
    const LinkState* link = nbrs_.find(msg.src);
    if (link && !gate.pass(link->history)) return std::nullopt;

    handled_.insert(msg.wave);
    parents_[msg.wave] = msg.src;
    latest_wave_ = msg.wave;
    latest_parent_ = msg.src;
    repair_pending_ = false;  // the fresh full report supersedes a queued repair

    RqActions actions;
    actions.reply.kind = MessageKind::kTopologyRp;
    actions.reply.src = id_;
    actions.reply.reporter = id_;
    actions.reply.wave = msg.wave;
    actions.reply.neighbor_list.assign(nbrs_.members().begin(),
                                       nbrs_.members().end());
    actions.rebroadcast.kind = MessageKind::kTopologyRq;
    actions.rebroadcast.src = id_;
    actions.rebroadcast.wave = msg.wave;
    return actions;
}

std::optional<Message> SensorState::on_neighbor_change() {
    if (!latest_parent_) {
        repair_pending_ = true;
        return std::nullopt;
    }
    Message m;
    m.kind = MessageKind::kTopologyRp;
    m.src = id_;
    m.reporter = id_;
    m.wave = *latest_wave_;
    m.neighbor_list.assign(nbrs_.members().begin(), nbrs_.members().end());
    m.incremental = true;
    return m;
}

std::optional<NodeId> SensorState::rp_next_hop(const Message& msg) const {
    const auto it = parents_.find(msg.wave);
    if (it != parents_.end()) return it->second;
    return latest_parent_;
}

Message ControllerState::start_collection(double now) {
    topo_.clear();
    topo_.collected_at = now;
    current_ = WaveId{id_, next_seq_++};
    Message m;
    m.kind = MessageKind::kTopologyRq;
    m.src = id_;
    m.wave = current_;
    return m;
}

bool ControllerState::on_topology_rp(const Message& msg, double now) {
    if (msg.kind != MessageKind::kTopologyRp)
        throw std::invalid_argument("on_topology_rp: wrong message kind");
    if (!msg.incremental && msg.wave != current_) return false;  // stale wave
    topo_.apply_report(msg.reporter, msg.neighbor_list);
    topo_.collected_at = now;
    return true;
}

const std::map<NodeId, FlowTable>& ControllerState::on_t2(
    const std::vector<NodeId>& own_neighbors, double now) {
    topo_.apply_report(id_, own_neighbors);
    topo_.collected_at = now;
    tables_ = build_flow_tables(topo_);
    return tables_;
}

}  // namespace sdwsn
