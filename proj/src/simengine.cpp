#include "sdwsn/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace sdwsn {

const char* placement_name(Placement p) {
    switch (p) {
        case Placement::kUniform: return "uniform";
        case Placement::kLine: return "line";
        case Placement::kPair: return "pair";
    }
    return "unknown";
}

Placement placement_from_name(const std::string& name) {
    if (name == "uniform") return Placement::kUniform;
    if (name == "line") return Placement::kLine;
    if (name == "pair") return Placement::kPair;
    throw std::invalid_argument("unknown placement: " + name);
}

int ScenarioConfig::resolved_node_count() const {
    switch (placement) {
        case Placement::kUniform:
            return node_count > 0
                       ? node_count
                       : static_cast<int>(std::llround(density * area_w_m * area_h_m));
        case Placement::kLine:
            return line_count;
        case Placement::kPair:
            return 2;
    }
    return 0;
}

void ScenarioConfig::validate() const {
    channel.validate();
    protocol.validate();
    if (!(duration_s > 0.0))
        throw std::invalid_argument("scenario: duration_s must be > 0");
    if (resolved_node_count() < 2)
        throw std::invalid_argument("scenario: node_count must be >= 2");
    if (placement == Placement::kUniform &&
        !(area_w_m > 0.0 && area_h_m > 0.0))
        throw std::invalid_argument("scenario: area must be positive");
    if (placement == Placement::kLine &&
        (!(line_spacing_m > 0.0) || line_count < 2))
        throw std::invalid_argument("scenario: line placement needs spacing and count");
    if (placement == Placement::kPair && !(pair_distance_m > 0.0))
        throw std::invalid_argument("scenario: pair placement needs a distance");
    if (protocol.prediction_enabled && !model)
        throw std::invalid_argument(
            "scenario: prediction enabled but no model provided");
    if (protocol.prediction_enabled &&
        protocol.history_limit < model->k)
        throw std::invalid_argument(
            "scenario: protocol.history_limit must be >= the model's k");
    if (!(broadcast_cutoff_factor > 0.0))
        throw std::invalid_argument("scenario: broadcast cutoff must be > 0");
}

double Deployment::distance(NodeId a, NodeId b) const {
    const auto& pa = positions[a];
    const auto& pb = positions[b];
    return std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
}

Deployment build_scenario(const ScenarioConfig& config) {
    config.validate();
    const int n = config.resolved_node_count();
    Deployment dep;
    dep.controller = 0;
    dep.positions.resize(n);
    switch (config.placement) {
        case Placement::kUniform: {
            dep.positions[0] = {0.5 * config.area_w_m, 0.5 * config.area_h_m};
            Rng rng(mix64(config.seed, kSaltPlacement));
            for (int i = 1; i < n; ++i)
                dep.positions[i] = {rng.uniform(0.0, config.area_w_m),
                                    rng.uniform(0.0, config.area_h_m)};
            break;
        }
        case Placement::kLine:
            for (int i = 0; i < n; ++i)
                dep.positions[i] = {i * config.line_spacing_m, 0.0};
            break;
        case Placement::kPair:
            dep.positions[0] = {0.0, 0.0};
            dep.positions[1] = {config.pair_distance_m, 0.0};
            break;
    }
    return dep;
}

LinkDraw keyed_link_draw(double distance_m, const ChannelParams& channel,
                         std::uint64_t seed, std::uint64_t salt, NodeId sender,
                         NodeId receiver, std::uint64_t counter) {
    Rng rng(mix64(seed, salt, sender, receiver, counter));
    const double attenuation =
        mean_attenuation_db(distance_m, channel) + rng.normal(0.0, channel.sigma_db);
    return link_draw_from_attenuation(attenuation, channel);
}

std::vector<std::pair<NodeId, double>> broadcast_deliveries(
    NodeId sender, const Deployment& deployment, const ChannelParams& channel,
    double cutoff_m, std::uint64_t seed, std::uint64_t salt,
    std::uint64_t counter) {
    std::vector<std::pair<NodeId, double>> out;
    for (NodeId v = 0; v < deployment.positions.size(); ++v) {
        if (v == sender) continue;
        const double d = deployment.distance(sender, v);
        if (d > cutoff_m) continue;
        const LinkDraw draw =
            keyed_link_draw(d, channel, seed, salt, sender, v, counter);
        if (draw.received) out.emplace_back(v, draw.rssi_dbm);
    }
    return out;
}

double hello_jitter(std::uint64_t seed, NodeId node, double period_s) {
    Rng rng(mix64(seed, kSaltJitter, node));
    return rng.next_double() * period_s;
}

const char* trace_kind_name(TraceKind k) {
    switch (k) {
        case TraceKind::kNeighborAdded: return "neighbor_added";
        case TraceKind::kNeighborRemoved: return "neighbor_removed";
        case TraceKind::kWaveStarted: return "wave_started";
        case TraceKind::kRpReceived: return "rp_received";
        case TraceKind::kFlowTableInstalled: return "flow_table_installed";
    }
    return "unknown";
}

TraceKind trace_kind_from_name(const std::string& name) {
    if (name == "neighbor_added") return TraceKind::kNeighborAdded;
    if (name == "neighbor_removed") return TraceKind::kNeighborRemoved;
    if (name == "wave_started") return TraceKind::kWaveStarted;
    if (name == "rp_received") return TraceKind::kRpReceived;
    if (name == "flow_table_installed") return TraceKind::kFlowTableInstalled;
    throw std::invalid_argument("unknown trace kind: " + name);
}

const LinkStats& RunResult::link(NodeId src, NodeId dst) const {
    return ledger[static_cast<std::size_t>(src) * node_count() + dst];
}

double RunResult::link_rate(NodeId src, NodeId dst, bool gated) const {
    const auto& s = link(src, dst);
    if (s.sent == 0) return 0.0;
    const auto num = gated ? s.gate_passed : s.received;
    return static_cast<double>(num) / static_cast<double>(s.sent);
}

namespace {

struct Event {
    enum Kind { kHelloTimer, kT1, kT2, kDeliverHello, kDeliverControl };
    double t = 0.0;
    std::uint64_t order = 0;
    Kind kind = kHelloTimer;
    NodeId node = kInvalidNode;  // target
    NodeId src = kInvalidNode;   // deliveries: last-hop sender
    double rssi = 0.0;           // hello deliveries
    Message msg;                 // control deliveries
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.order > b.order;
    }
};

class Engine {
public:
    explicit Engine(const ScenarioConfig& config)
        : cfg_(config),
          gate_(config.model, config.protocol.prediction_enabled) {
        cfg_.validate();
        result_.config = cfg_;
        result_.deployment = build_scenario(cfg_);
        n_ = result_.config.resolved_node_count();
        result_.ledger.assign(static_cast<std::size_t>(n_) * n_, LinkStats{});
        result_.table_installed.assign(n_, false);
        cutoff_m_ = cfg_.broadcast_cutoff_factor * cfg_.channel.r0_m;

        sensors_.reserve(n_);
        for (int i = 0; i < n_; ++i) sensors_.emplace_back(static_cast<NodeId>(i));
        reach_.resize(n_);
        for (NodeId u = 0; u < static_cast<NodeId>(n_); ++u) {
            for (NodeId v = 0; v < static_cast<NodeId>(n_); ++v) {
                if (u == v) continue;
                const double d = result_.deployment.distance(u, v);
                if (d <= cutoff_m_)
                    reach_[u].push_back(
                        {v, d, mean_attenuation_db(d, cfg_.channel)});
            }
        }
        hello_tick_.assign(n_, 0);
        bcast_counter_.assign(n_, 0);
        unicast_counter_.assign(n_, 0);
    }

    RunResult run() {
        for (NodeId u = 0; u < static_cast<NodeId>(n_); ++u)
            push({hello_jitter(cfg_.seed, u, cfg_.protocol.hello_period_s), 0,
                  Event::kHelloTimer, u});
        if (cfg_.t1_start_s <= cfg_.duration_s)
            push({cfg_.t1_start_s, 0, Event::kT1, result_.deployment.controller});

        double now = 0.0;
        while (!queue_.empty() && queue_.top().t <= cfg_.duration_s) {
            const Event ev = queue_.top();
            queue_.pop();
            if (ev.t < now) ++result_.causality_violations;
            now = ev.t;
            ++result_.events_processed;
            switch (ev.kind) {
                case Event::kHelloTimer: on_hello_timer(ev); break;
                case Event::kT1: on_t1(ev); break;
                case Event::kT2: on_t2(ev); break;
                case Event::kDeliverHello: on_hello(ev); break;
                case Event::kDeliverControl: on_control(ev); break;
            }
        }

        for (int i = 0; i < n_; ++i) {
            result_.final_members.push_back(sensors_[i].neighbors().members());
            result_.exclusivity_violations +=
                sensors_[i].neighbors().exclusivity_violations();
        }
        result_.controller_tables = ctrl_.tables();
        result_.final_topology = ctrl_.topology();
        return std::move(result_);
    }

private:
    struct Reach {
        NodeId peer;
        double dist;
        double mean_atten;
    };

    void push(Event ev) {
        ev.order = order_seq_++;
        queue_.push(std::move(ev));
    }

    void on_hello_timer(const Event& ev) {
        const NodeId u = ev.node;
        const std::uint64_t tick = hello_tick_[u]++;
        for (const Reach& r : reach_[u]) {
            ledger(u, r.peer).sent++;
            Rng rng(mix64(cfg_.seed, kSaltHello, u, r.peer, tick));
            const double atten =
                r.mean_atten + rng.normal(0.0, cfg_.channel.sigma_db);
            const LinkDraw draw = link_draw_from_attenuation(atten, cfg_.channel);
            if (draw.received) {
                Event d;
                d.t = ev.t;
                d.kind = Event::kDeliverHello;
                d.node = r.peer;
                d.src = u;
                d.rssi = draw.rssi_dbm;
                push(std::move(d));
            }
        }
        const auto removed = sensors_[u].neighbors().on_hello_timer(
            ev.t, cfg_.channel.rssi_floor_dbm(), cfg_.protocol);
        for (NodeId peer : removed) {
            result_.trace.push_back(
                {ev.t, u, TraceKind::kNeighborRemoved, peer, 0});
            repair_hook(u, ev.t);
        }
        if (u == result_.deployment.controller && stable_phase_ &&
            rebuild_pending_) {
            rebuild_pending_ = false;
            const auto old = ctrl_.tables();
            rebuild_and_deliver_tables(u, ev.t, &old);
        }
        push({ev.t + cfg_.protocol.hello_period_s, 0, Event::kHelloTimer, u});
    }

    void on_hello(const Event& ev) {
        const NodeId v = ev.node, u = ev.src;
        ledger(u, v).received++;
        const auto r = sensors_[v].neighbors().on_hello_received(
            u, ev.rssi, ev.t, gate_, cfg_.protocol);
        if (r.accepted) ledger(u, v).gate_passed++;
        if (r.neighbor_added) {
            result_.trace.push_back({ev.t, v, TraceKind::kNeighborAdded, u, 0});
            repair_hook(v, ev.t);
        }
    }

    void repair_hook(NodeId v, double t) {
        if (v == result_.deployment.controller) return;
        const auto repair = sensors_[v].on_neighbor_change();
        if (!repair) return;
        const auto next = sensors_[v].rp_next_hop(*repair);
        if (!next) return;
        unicast(v, *next, *repair, t);
    }

    void on_t1(const Event& ev) {
        const NodeId c = ev.node;
        stable_phase_ = false;  // mid-wave topologies are partial
        rebuild_pending_ = false;
        const Message rq = ctrl_.start_collection(ev.t);
        result_.trace.push_back(
            {ev.t, c, TraceKind::kWaveStarted, kInvalidNode, rq.wave.seq});
        control_broadcast(c, rq, ev.t);
        push({ev.t + cfg_.t2_delay_s, 0, Event::kT2, c});
        push({ev.t + cfg_.t1_period_s, 0, Event::kT1, c});
    }

    void on_t2(const Event& ev) {
        const NodeId c = ev.node;
        rebuild_and_deliver_tables(c, ev.t, nullptr);
        stable_phase_ = true;
    }

    // Rebuilds the flow tables from the current topology and delivers them
    // source-routed; when `old` is given, only changed tables are re-sent.
    void rebuild_and_deliver_tables(NodeId c, double t,
                                    const std::map<NodeId, FlowTable>* old) {
        const auto& members = sensors_[c].neighbors().members();
        const auto& tables = ctrl_.on_t2({members.begin(), members.end()}, t);
        for (const auto& [v, table] : tables) {
            if (v == c) continue;
            if (old) {
                const auto it = old->find(v);
                if (it != old->end() && it->second.rules == table.rules)
                    continue;
            }
            const auto path = route_path(tables, c, v);
            if (!path) {
                ++result_.undeliverable_flow_tables;
                continue;
            }
            Message m;
            m.kind = MessageKind::kFlowTable;
            m.src = c;
            m.flow_dst = v;
            m.flow_rules = table;
            m.route = *path;
            unicast(c, (*path)[1], m, t);
        }
    }

    void on_control(const Event& ev) {
        const NodeId v = ev.node;
        switch (ev.msg.kind) {
            case MessageKind::kTopologyRq: {
                if (v == result_.deployment.controller) return;  // own flood
                const auto actions =
                    sensors_[v].on_topology_rq(ev.msg, gate_, cfg_.protocol);
                if (!actions) return;
                unicast(v, ev.msg.src, actions->reply, ev.t);
                control_broadcast(v, actions->rebroadcast, ev.t);
                return;
            }
            case MessageKind::kTopologyRp: {
                if (v == result_.deployment.controller) {
                    if (ctrl_.on_topology_rp(ev.msg, ev.t)) {
                        result_.trace.push_back({ev.t, v, TraceKind::kRpReceived,
                                                 ev.msg.reporter,
                                                 ev.msg.wave.seq});
                        // topology maintenance: stable-phase repairs mark the
                        // tables dirty; the rebuild is debounced to the next
                        // controller tick so repair bursts coalesce
                        if (ev.msg.incremental && stable_phase_)
                            rebuild_pending_ = true;
                    }
                    return;
                }
                const auto next = sensors_[v].rp_next_hop(ev.msg);
                if (!next) {
                    ++result_.dropped_rp_no_parent;
                    return;
                }
                Message fwd = ev.msg;
                fwd.src = v;
                unicast(v, *next, fwd, ev.t);
                return;
            }
            case MessageKind::kFlowTable: {
                // control commands are predictor-gated at each receiving hop
                if (gate_.enabled() && cfg_.protocol.gate_flow_table) {
                    const LinkState* link = sensors_[v].neighbors().find(ev.msg.src);
                    if (link && !gate_.pass(link->history)) {
                        ++result_.undeliverable_flow_tables;
                        return;
                    }
                }
                if (v == ev.msg.flow_dst) {
                    sensors_[v].install_flow_table(ev.msg.flow_rules);
                    result_.table_installed[v] = true;
                    result_.trace.push_back(
                        {ev.t, v, TraceKind::kFlowTableInstalled, ev.msg.src, 0});
                    return;
                }
                const auto it =
                    std::find(ev.msg.route.begin(), ev.msg.route.end(), v);
                if (it == ev.msg.route.end() || it + 1 == ev.msg.route.end()) {
                    ++result_.undeliverable_flow_tables;
                    return;
                }
                Message fwd = ev.msg;
                fwd.src = v;
                unicast(v, *(it + 1), fwd, ev.t);
                return;
            }
            case MessageKind::kHelloRq:
                return;  // hellos travel through the dedicated path
        }
    }

    void unicast(NodeId u, NodeId w, const Message& msg, double t) {
        const double d = result_.deployment.distance(u, w);
        if (d > cutoff_m_) return;
        const LinkDraw draw = keyed_link_draw(d, cfg_.channel, cfg_.seed,
                                              kSaltUnicast, u, w,
                                              unicast_counter_[u]++);
        if (!draw.received) return;
        Event ev;
        ev.t = t;
        ev.kind = Event::kDeliverControl;
        ev.node = w;
        ev.src = u;
        ev.msg = msg;
        push(std::move(ev));
    }

    void control_broadcast(NodeId u, const Message& msg, double t) {
        if (msg.kind == MessageKind::kTopologyRq)
            ++result_.rq_tx_per_wave[msg.wave.seq];
        const std::uint64_t counter = bcast_counter_[u]++;
        for (const Reach& r : reach_[u]) {
            const LinkDraw draw =
                keyed_link_draw(r.dist, cfg_.channel, cfg_.seed,
                                kSaltControlBroadcast, u, r.peer, counter);
            if (!draw.received) continue;
            Event ev;
            ev.t = t;
            ev.kind = Event::kDeliverControl;
            ev.node = r.peer;
            ev.src = u;
            ev.msg = msg;
            push(std::move(ev));
        }
    }

    LinkStats& ledger(NodeId src, NodeId dst) {
        return result_.ledger[static_cast<std::size_t>(src) * n_ + dst];
    }

    ScenarioConfig cfg_;
    PredictionGate gate_;
    RunResult result_;
    int n_ = 0;
    double cutoff_m_ = 0.0;
    std::vector<SensorState> sensors_;
    ControllerState ctrl_{0};
    std::vector<std::vector<Reach>> reach_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::uint64_t order_seq_ = 0;
    bool stable_phase_ = false;
    bool rebuild_pending_ = false;
    std::vector<std::uint64_t> hello_tick_;
    std::vector<std::uint64_t> bcast_counter_;
    std::vector<std::uint64_t> unicast_counter_;
};

}  // namespace

RunResult run(const ScenarioConfig& config) { return Engine(config).run(); }

namespace {

void write_double_field(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot open for writing: " + p.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot open: " + p.string());
    return f;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

long long id_field(NodeId id) {
    return id == kInvalidNode ? -1 : static_cast<long long>(id);
}

NodeId parse_id(const std::string& s) {
    const long long v = std::stoll(s);
    return v < 0 ? kInvalidNode : static_cast<NodeId>(v);
}

}  // namespace

void save_run(const std::string& dir, const RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int n = result.node_count();

    {
        auto f = open_out(fs::path(dir) / "positions.csv");
        f << "node,x_m,y_m\n";
        for (int i = 0; i < n; ++i) {
            f << i << ',';
            write_double_field(f, result.deployment.positions[i][0]);
            f << ',';
            write_double_field(f, result.deployment.positions[i][1]);
            f << '\n';
        }
    }
    {
        auto f = open_out(fs::path(dir) / "trace.csv");
        f << "t,node,kind,peer,seq\n";
        for (const auto& r : result.trace) {
            write_double_field(f, r.t);
            f << ',' << r.node << ',' << trace_kind_name(r.kind) << ','
              << id_field(r.peer) << ',' << r.seq << '\n';
        }
    }
    {
        auto f = open_out(fs::path(dir) / "ledger.csv");
        f << "src,dst,distance_m,sent,received,gate_passed\n";
        for (NodeId u = 0; u < static_cast<NodeId>(n); ++u) {
            for (NodeId v = 0; v < static_cast<NodeId>(n); ++v) {
                const auto& s = result.link(u, v);
                if (s.sent == 0) continue;
                f << u << ',' << v << ',';
                write_double_field(f, result.deployment.distance(u, v));
                f << ',' << s.sent << ',' << s.received << ',' << s.gate_passed
                  << '\n';
            }
        }
    }
    {
        auto f = open_out(fs::path(dir) / "flows.csv");
        f << "node,dest,next_hop\n";
        for (const auto& [v, table] : result.controller_tables)
            for (const auto& [dest, hop] : table.rules)
                f << v << ',' << dest << ',' << hop << '\n';
    }
    {
        auto f = open_out(fs::path(dir) / "members.csv");
        f << "node,peer\n";
        for (int i = 0; i < n; ++i)
            for (NodeId peer : result.final_members[i]) f << i << ',' << peer << '\n';
    }
    {
        const auto& c = result.config;
        auto f = open_out(fs::path(dir) / "runmeta.csv");
        f << "key,value\n";
        auto kv = [&](const char* key, auto value) { f << key << ',' << value << '\n'; };
        auto kvd = [&](const char* key, double value) {
            f << key << ',';
            write_double_field(f, value);
            f << '\n';
        };
        kv("placement", placement_name(c.placement));
        kv("node_count", n);
        kv("controller", result.deployment.controller);
        kv("seed", c.seed);
        kvd("duration_s", c.duration_s);
        kvd("area_w_m", c.area_w_m);
        kvd("area_h_m", c.area_h_m);
        kvd("density", c.density);
        kvd("line_spacing_m", c.line_spacing_m);
        kv("line_count", c.line_count);
        kvd("pair_distance_m", c.pair_distance_m);
        kvd("alpha", c.channel.alpha);
        kvd("sigma_db", c.channel.sigma_db);
        kvd("beta_th_db", c.channel.beta_th_db);
        kvd("p_t_dbm", c.channel.p_t_dbm);
        kvd("r0_m", c.channel.r0_m);
        kv("m_up", c.protocol.m_up);
        kv("k_down", c.protocol.k_down);
        kvd("hello_period_s", c.protocol.hello_period_s);
        kv("prediction", c.protocol.prediction_enabled ? 1 : 0);
        kv("gate_flow_table", c.protocol.gate_flow_table ? 1 : 0);
        kv("history_limit", c.protocol.history_limit);
        kvd("t1_start_s", c.t1_start_s);
        kvd("t1_period_s", c.t1_period_s);
        kvd("t2_delay_s", c.t2_delay_s);
        kvd("broadcast_cutoff_factor", c.broadcast_cutoff_factor);
        kv("events_processed", result.events_processed);
        kv("undeliverable_flow_tables", result.undeliverable_flow_tables);
    }
}

RunResult load_run(const std::string& dir) {
    namespace fs = std::filesystem;
    RunResult r;

    std::map<std::string, std::string> meta;
    {
        auto f = open_in(fs::path(dir) / "runmeta.csv");
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            if (cells.size() == 2) meta[cells[0]] = cells[1];
        }
    }
    auto& c = r.config;
    c.placement = placement_from_name(meta.at("placement"));
    c.node_count = std::stoi(meta.at("node_count"));
    c.seed = std::stoull(meta.at("seed"));
    c.duration_s = std::stod(meta.at("duration_s"));
    c.area_w_m = std::stod(meta.at("area_w_m"));
    c.area_h_m = std::stod(meta.at("area_h_m"));
    c.density = std::stod(meta.at("density"));
    c.line_spacing_m = std::stod(meta.at("line_spacing_m"));
    c.line_count = std::stoi(meta.at("line_count"));
    c.pair_distance_m = std::stod(meta.at("pair_distance_m"));
    c.channel.alpha = std::stod(meta.at("alpha"));
    c.channel.sigma_db = std::stod(meta.at("sigma_db"));
    c.channel.beta_th_db = std::stod(meta.at("beta_th_db"));
    c.channel.p_t_dbm = std::stod(meta.at("p_t_dbm"));
    c.channel.r0_m = std::stod(meta.at("r0_m"));
    c.protocol.m_up = std::stoi(meta.at("m_up"));
    c.protocol.k_down = std::stoi(meta.at("k_down"));
    c.protocol.hello_period_s = std::stod(meta.at("hello_period_s"));
    c.protocol.prediction_enabled = meta.at("prediction") == "1";
    c.protocol.gate_flow_table = meta.at("gate_flow_table") == "1";
    c.protocol.history_limit = std::stoi(meta.at("history_limit"));
    c.t1_start_s = std::stod(meta.at("t1_start_s"));
    c.t1_period_s = std::stod(meta.at("t1_period_s"));
    c.t2_delay_s = std::stod(meta.at("t2_delay_s"));
    c.broadcast_cutoff_factor = std::stod(meta.at("broadcast_cutoff_factor"));

    {
        auto f = open_in(fs::path(dir) / "positions.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            r.deployment.positions.push_back(
                {std::stod(cells[1]), std::stod(cells[2])});
        }
        r.deployment.controller = parse_id(meta.at("controller"));
    }
    const int n = r.node_count();
    {
        auto f = open_in(fs::path(dir) / "trace.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            TraceRecord rec;
            rec.t = std::stod(cells[0]);
            rec.node = parse_id(cells[1]);
            rec.kind = trace_kind_from_name(cells[2]);
            rec.peer = parse_id(cells[3]);
            rec.seq = std::stoull(cells[4]);
            r.trace.push_back(rec);
        }
    }
    {
        r.ledger.assign(static_cast<std::size_t>(n) * n, LinkStats{});
        auto f = open_in(fs::path(dir) / "ledger.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            const NodeId u = parse_id(cells[0]);
            const NodeId v = parse_id(cells[1]);
            auto& s = r.ledger[static_cast<std::size_t>(u) * n + v];
            s.sent = std::stoull(cells[3]);
            s.received = std::stoull(cells[4]);
            s.gate_passed = std::stoull(cells[5]);
        }
    }
    {
        auto f = open_in(fs::path(dir) / "flows.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            r.controller_tables[parse_id(cells[0])].rules[parse_id(cells[1])] =
                parse_id(cells[2]);
        }
    }
    {
        r.final_members.assign(n, {});
        auto f = open_in(fs::path(dir) / "members.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            r.final_members[std::stoul(cells[0])].insert(parse_id(cells[1]));
        }
    }
    return r;
}

}  // namespace sdwsn
