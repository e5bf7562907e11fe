#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "sdwsn/protocol.hpp"

using namespace sdwsn;

namespace {

// Synthetic k=1 logistic gate that passes iff the previous period's RSSI was
// at least -60 dBm. Cold starts (empty history) always pass.
PredictionGate rssi_gate() {
    auto m = std::make_shared<Model>();
    m->kind = ModelKind::kLogistic;
    m->k = 1;
    m->feature_shift = {0.0, 0.0};
    m->feature_scale = {1.0, 1.0};
    m->bias = 60.0;
    m->weights = {1.0, 0.0};
    return PredictionGate(std::move(m), true);
}

PredictionGate no_gate() { return PredictionGate(); }

ProtocolConfig config(int m, int k, bool prediction = false) {
    ProtocolConfig c;
    c.m_up = m;
    c.k_down = k;
    c.hello_period_s = 1.0;
    c.prediction_enabled = prediction;
    c.history_limit = 10;
    return c;
}

// Admits `peer` at `node` with M accepted hellos.
void admit(SensorState& node, NodeId peer, const ProtocolConfig& cfg,
           double& now) {
    for (int i = 0; i < cfg.m_up; ++i)
        node.neighbors().on_hello_received(peer, -50.0, now += 1.0, no_gate(),
                                           cfg);
    REQUIRE(node.neighbors().members().contains(peer));
}

Message rq_from(NodeId src, WaveId wave) {
    Message m;
    m.kind = MessageKind::kTopologyRq;
    m.src = src;
    m.wave = wave;
    return m;
}

}  // namespace

TEST_CASE("M=1 admits a fresh peer on its first accepted packet") {
    NeighborTable t;
    const auto cfg = config(1, 1);
    const auto r = t.on_hello_received(7, -55.0, 0.5, no_gate(), cfg);
    CHECK(r.accepted);
    CHECK(r.neighbor_added);
    CHECK(t.members().contains(7));
}

TEST_CASE("a gated-out packet breaks the M run") {
    NeighborTable t;
    const auto cfg = config(3, 2, true);
    const auto gate = rssi_gate();
    // two cold-start accepts (history shorter than k bypasses the gate)
    auto r = t.on_hello_received(3, -70.0, 1.0, gate, cfg);
    CHECK(r.accepted);
    // history [-70] -> gate rejects this arrival
    r = t.on_hello_received(3, -50.0, 2.0, gate, cfg);
    CHECK(!r.accepted);
    CHECK(!r.neighbor_added);
    CHECK(!t.members().contains(3));
    CHECK(t.find(3)->recv == 1);
    // history still records the gated-out arrival as a reception
    CHECK(t.find(3)->history.size() == 2);
    CHECK(t.find(3)->history.back().received == 1);
}

TEST_CASE("cold start bypasses the gate") {
    NeighborTable t;
    const auto cfg = config(1, 1, true);
    const auto gate = rssi_gate();
    const auto r = t.on_hello_received(9, -90.0, 1.0, gate, cfg);
    CHECK(r.accepted);  // empty history, gate bypassed despite terrible RSSI
}

TEST_CASE("K consecutive silent periods evict; a heard peer is untouched") {
    NeighborTable t;
    const auto cfg = config(1, 2);
    t.on_hello_received(4, -50.0, 0.2, no_gate(), cfg);
    REQUIRE(t.members().contains(4));

    // heard 0.7s ago: within T, counters untouched
    auto removed = t.on_hello_timer(0.9, -66.0, cfg);
    CHECK(removed.empty());
    CHECK(t.find(4)->recv == 1);
    CHECK(t.find(4)->lost == 0);

    removed = t.on_hello_timer(1.9, -66.0, cfg);  // first silent period
    CHECK(removed.empty());
    CHECK(t.find(4)->lost == 1);
    CHECK(t.find(4)->recv == 0);

    removed = t.on_hello_timer(2.9, -66.0, cfg);  // second -> evicted
    REQUIRE(removed.size() == 1);
    CHECK(removed[0] == 4);
    CHECK(!t.members().contains(4));

    // hysteresis cycle: M fresh receptions re-admit
    t.on_hello_received(4, -50.0, 3.2, no_gate(), cfg);
    CHECK(t.members().contains(4));
}

TEST_CASE("silent periods fill the radio-view history at the floor") {
    NeighborTable t;
    const auto cfg = config(1, 3);
    t.on_hello_received(4, -50.0, 0.2, no_gate(), cfg);
    t.on_hello_timer(1.0, -66.0, cfg);   // heard at 0.2, no fill yet
    t.on_hello_timer(2.0, -66.0, cfg);   // silent period
    t.on_hello_timer(3.0, -66.0, cfg);   // silent period
    const auto& h = t.find(4)->history;
    REQUIRE(h.size() == 3);
    CHECK(h[0].received == 1);
    CHECK(h[1].received == 0);
    CHECK(h[1].rssi_dbm == -66.0);
    CHECK(h[2].received == 0);
}

TEST_CASE("counters stay mutually exclusive under random event mixes") {
    NeighborTable t;
    const auto cfg = config(2, 2, true);
    const auto gate = rssi_gate();
    Rng rng(17);
    double now = 0.0;
    for (int i = 0; i < 5000; ++i) {
        now += 1.0;
        const NodeId peer = static_cast<NodeId>(rng.next_below(5));
        if (rng.bernoulli(0.6)) {
            const double rssi = rng.bernoulli(0.5) ? -50.0 : -70.0;
            t.on_hello_received(peer, rssi, now, gate, cfg);
        }
        t.on_hello_timer(now + 0.5, -66.0, cfg);
        for (const auto& [id, s] : t.entries()) CHECK(s.recv * s.lost == 0);
    }
    CHECK(t.exclusivity_violations() == 0);
}

TEST_CASE("strictly alternating accept/gated with M=K=2 never admits") {
    NeighborTable t;
    const auto cfg = config(2, 2, true);
    const auto gate = rssi_gate();
    // RSSI pattern -70,-50,-70,... makes every second arrival gate-rejected:
    // cold-start accept, then gated (window [-70]), accept (window [-50]), ...
    double now = 0.0;
    int accepted = 0, gated = 0;
    for (int i = 0; i < 100; ++i) {
        now += 1.0;
        const double rssi = (i % 2 == 0) ? -70.0 : -50.0;
        const auto r = t.on_hello_received(8, rssi, now, gate, cfg);
        (r.accepted ? accepted : gated)++;
        CHECK(!r.neighbor_added);
        t.on_hello_timer(now + 0.5, -66.0, cfg);
    }
    CHECK(t.members().empty());
    CHECK(accepted > 10);  // the pattern really does alternate
    CHECK(gated > 10);
}

TEST_CASE("route_lookup") {
    FlowTable t;
    t.rules[5] = 2;
    CHECK(route_lookup(t, 5) == 2);
    CHECK(!route_lookup(t, 9).has_value());
    CHECK_THROWS_AS(route_lookup(t, kInvalidNode), std::invalid_argument);
    CHECK(t.rules.size() == 1);  // lookups never mutate
}

TEST_CASE("controller waves: increasing seq, stale and duplicate RPs") {
    ControllerState ctrl(0);
    const auto rq1 = ctrl.start_collection(10.0);
    const auto rq2 = ctrl.start_collection(20.0);
    CHECK(rq2.wave.seq > rq1.wave.seq);

    Message rp;
    rp.kind = MessageKind::kTopologyRp;
    rp.src = 5;
    rp.reporter = 5;
    rp.wave = rq1.wave;  // stale: wave 2 is current
    rp.neighbor_list = {3, 7};
    CHECK(!ctrl.on_topology_rp(rp, 21.0));
    CHECK(ctrl.topology().edge_count() == 0);

    rp.wave = rq2.wave;
    CHECK(ctrl.on_topology_rp(rp, 21.0));
    CHECK(ctrl.topology().has_edge(3, 5));  // direction: reported reachability
    CHECK(ctrl.topology().has_edge(7, 5));
    CHECK(ctrl.topology().nodes.contains(7));  // unknown nodes are discovered

    const auto edges = ctrl.topology().edge_count();
    CHECK(ctrl.on_topology_rp(rp, 22.0));  // duplicate -> idempotent
    CHECK(ctrl.topology().edge_count() == edges);
}

TEST_CASE("repair reports replace a node's in-edges") {
    GlobalTopology topo;
    topo.apply_report(5, {3, 7});
    CHECK(topo.has_edge(3, 5));
    topo.apply_report(5, {3});  // 7 was evicted
    CHECK(topo.has_edge(3, 5));
    CHECK(!topo.has_edge(7, 5));
}

TEST_CASE("flow tables on a 3-node line and a tie-break diamond") {
    GlobalTopology topo;
    // line: 2 (C) - 0 (A) - 1 (B), symmetric links
    topo.apply_report(2, {0});
    topo.apply_report(0, {1, 2});
    topo.apply_report(1, {0});
    const auto tables = build_flow_tables(topo);
    CHECK(route_lookup(tables.at(1), 2) == 0);  // B routes C via A
    CHECK(route_lookup(tables.at(2), 1) == 0);
    CHECK(flow_tables_acyclic(tables));

    // disconnected node never appears
    GlobalTopology topo2 = topo;
    topo2.nodes.insert(9);
    const auto tables2 = build_flow_tables(topo2);
    for (const auto& [src, t] : tables2) CHECK(!t.rules.contains(9));

    // equal-cost paths resolve to the lowest next-hop id
    GlobalTopology diamond;
    diamond.apply_report(1, {0, 3});
    diamond.apply_report(2, {0, 3});
    diamond.apply_report(3, {1, 2});
    diamond.apply_report(0, {1, 2});
    const auto dt = build_flow_tables(diamond);
    CHECK(route_lookup(dt.at(0), 3) == 1);
    CHECK(route_lookup(dt.at(3), 0) == 1);
}

TEST_CASE("flow tables are acyclic on random topologies") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        GlobalTopology topo;
        const int n = 3 + static_cast<int>(rng.next_below(12));
        for (int j = 0; j < n; ++j) {
            std::vector<NodeId> nbrs;
            for (int i = 0; i < n; ++i)
                if (i != j && rng.bernoulli(0.3))
                    nbrs.push_back(static_cast<NodeId>(i));
            topo.apply_report(static_cast<NodeId>(j), nbrs);
        }
        const auto tables = build_flow_tables(topo);
        CHECK(flow_tables_acyclic(tables));
        // every rule actually leads to its destination
        for (const auto& [src, t] : tables) {
            for (const auto& [dst, _] : t.rules) {
                const auto path = route_path(tables, src, dst);
                REQUIRE(path.has_value());
                CHECK(path->back() == dst);
            }
        }
    }
}

TEST_CASE("sensor topology handling: membership, gating, duplicates") {
    const auto cfg = config(1, 1, false);
    SensorState s(5);
    double now = 0.0;
    admit(s, 1, cfg, now);
    admit(s, 2, cfg, now);

    const WaveId wave{0, 1};

    // RQ from a non-member is dropped
    CHECK(!s.on_topology_rq(rq_from(9, wave), no_gate(), cfg).has_value());

    // first copy from a member: reply + rebroadcast
    const auto actions = s.on_topology_rq(rq_from(1, wave), no_gate(), cfg);
    REQUIRE(actions.has_value());
    CHECK(actions->reply.kind == MessageKind::kTopologyRp);
    CHECK(actions->reply.reporter == 5);
    CHECK(actions->reply.wave == wave);
    CHECK(actions->reply.neighbor_list == std::vector<NodeId>{1, 2});
    CHECK(actions->rebroadcast.kind == MessageKind::kTopologyRq);
    CHECK(actions->rebroadcast.src == 5);
    CHECK(s.parent() == 1);

    // second copy of the same wave via another member: dropped, parent kept
    CHECK(!s.on_topology_rq(rq_from(2, wave), no_gate(), cfg).has_value());
    CHECK(s.parent() == 1);

    // a new wave is handled afresh
    const WaveId wave2{0, 2};
    CHECK(s.on_topology_rq(rq_from(2, wave2), no_gate(), cfg).has_value());
    CHECK(s.parent() == 2);
}

TEST_CASE("a gate-rejected RQ copy does not block a later copy") {
    auto cfg = config(1, 1, true);
    SensorState s(5);
    const auto gate = rssi_gate();
    double now = 0.0;
    // peer 1's history ends on a weak RSSI (gate will reject), peer 2's on a
    // strong one
    s.neighbors().on_hello_received(1, -70.0, now += 1.0, no_gate(), cfg);
    s.neighbors().on_hello_received(2, -50.0, now += 1.0, no_gate(), cfg);
    REQUIRE(s.neighbors().members().contains(1));
    REQUIRE(s.neighbors().members().contains(2));

    const WaveId wave{0, 1};
    CHECK(!s.on_topology_rq(rq_from(1, wave), gate, cfg).has_value());
    const auto second = s.on_topology_rq(rq_from(2, wave), gate, cfg);
    REQUIRE(second.has_value());
    CHECK(s.parent() == 2);
}

TEST_CASE("flood safety: one response per wave even under many copies") {
    const auto cfg = config(1, 1);
    SensorState s(3);
    double now = 0.0;
    admit(s, 1, cfg, now);
    const WaveId wave{0, 4};
    int responses = 0;
    for (int i = 0; i < 10; ++i)
        if (s.on_topology_rq(rq_from(1, wave), no_gate(), cfg)) ++responses;
    CHECK(responses == 1);
}

TEST_CASE("partial topology when t2 beats the flood on a 5-node line") {
    // line 0-1-2-3-4, controller 0; the test delivers the flood hop by hop
    // and fires t2 after only nodes 1 and 2 have answered
    const auto cfg = config(1, 1);
    ControllerState ctrl(0);
    std::vector<SensorState> nodes;
    for (NodeId i = 1; i <= 4; ++i) nodes.emplace_back(i);
    double now = 0.0;
    auto& n1 = nodes[0];
    auto& n2 = nodes[1];
    auto& n3 = nodes[2];
    admit(n1, 0, cfg, now);
    admit(n1, 2, cfg, now);
    admit(n2, 1, cfg, now);
    admit(n2, 3, cfg, now);
    admit(n3, 2, cfg, now);
    admit(n3, 4, cfg, now);

    const auto rq = ctrl.start_collection(now);
    const auto a1 = n1.on_topology_rq(rq, no_gate(), cfg);
    REQUIRE(a1.has_value());
    CHECK(ctrl.on_topology_rp(a1->reply, now));
    const auto a2 = n2.on_topology_rq(a1->rebroadcast, no_gate(), cfg);
    REQUIRE(a2.has_value());
    CHECK(ctrl.on_topology_rp(a2->reply, now));

    // t2 fires before the flood reaches nodes 3 and 4
    const auto& tables = ctrl.on_t2({1}, now + 1.0);
    CHECK(route_lookup(tables.at(0), 2) == 1);
    for (const auto& [src, t] : tables) {
        CHECK(!t.rules.contains(4));  // never reported, absent everywhere
    }
    // the late answer from node 3 still merges into the topology afterwards
    const auto a3 = n3.on_topology_rq(a2->rebroadcast, no_gate(), cfg);
    REQUIRE(a3.has_value());
    CHECK(ctrl.on_topology_rp(a3->reply, now + 2.0));
    CHECK(ctrl.topology().nodes.contains(4));
}

TEST_CASE("repair reporting: queued before a wave, sent after, flap-suppressed") {
    const auto cfg = config(1, 1);
    SensorState s(6);
    double now = 0.0;
    admit(s, 1, cfg, now);

    // change before any wave completed -> queued
    CHECK(!s.on_neighbor_change().has_value());
    CHECK(s.repair_pending());

    // joining a wave flushes the queue into the full report
    const WaveId wave{0, 1};
    const auto actions = s.on_topology_rq(rq_from(1, wave), no_gate(), cfg);
    REQUIRE(actions.has_value());
    CHECK(!s.repair_pending());

    // eviction during the stable phase -> one incremental repair via parent
    const auto repair = s.on_neighbor_change();
    REQUIRE(repair.has_value());
    CHECK(repair->incremental);
    CHECK(repair->reporter == 6);
    CHECK(s.rp_next_hop(*repair) == 1);
}

TEST_CASE("hysteresis suppresses repair traffic on a flapping link") {
    // deterministic alternation reception/loss: with M=K=2 the counters never
    // cross a threshold, so membership never changes and no repair fires
    const auto cfg2 = config(2, 2);
    const auto cfg1 = config(1, 1);
    NeighborTable hyst, plain;
    int hyst_changes = 0, plain_changes = 0;
    double now = 0.0;
    for (int i = 0; i < 200; ++i) {
        now += 1.0;
        if (i % 2 == 0) {
            hyst_changes += hyst.on_hello_received(2, -60.0, now, no_gate(), cfg2)
                                .neighbor_added;
            plain_changes += plain.on_hello_received(2, -60.0, now, no_gate(), cfg1)
                                 .neighbor_added;
        }
        hyst_changes +=
            static_cast<int>(hyst.on_hello_timer(now + 0.5, -66.0, cfg2).size());
        plain_changes +=
            static_cast<int>(plain.on_hello_timer(now + 0.5, -66.0, cfg1).size());
    }
    CHECK(hyst_changes == 0);
    CHECK(plain_changes > 100);
}

TEST_CASE("config validation") {
    ProtocolConfig c;
    c.m_up = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ProtocolConfig{};
    c.hello_period_s = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
