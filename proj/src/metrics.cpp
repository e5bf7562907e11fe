#include "sdwsn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace sdwsn {

namespace {

void require_node(const RunResult& result, NodeId node) {
    if (node >= static_cast<NodeId>(result.node_count()))
        throw std::invalid_argument("metrics: node id not in trace");
}

DurationStat stat_from_flips(std::size_t flips, double duration) {
    DurationStat s;
    s.segments = flips + 1;
    s.mean_s = duration / static_cast<double>(s.segments);
    s.censored = flips == 0;
    return s;
}

}  // namespace

DurationStat link_stable_duration(const RunResult& result, NodeId observer,
                                  NodeId peer) {
    require_node(result, observer);
    require_node(result, peer);
    if (observer == peer)
        throw std::invalid_argument("metrics: observer == peer");
    // The initial admission starts the clock rather than counting as a flip:
    // a link that comes up once and stays up is stable throughout (censored).
    std::size_t flips = 0;
    double start = 0.0;
    bool first = true;
    for (const auto& r : result.trace) {
        if (r.node != observer || r.peer != peer) continue;
        if (r.kind != TraceKind::kNeighborAdded &&
            r.kind != TraceKind::kNeighborRemoved)
            continue;
        if (first && r.kind == TraceKind::kNeighborAdded) {
            start = r.t;
            first = false;
            continue;
        }
        first = false;
        ++flips;
    }
    return stat_from_flips(flips, result.config.duration_s - start);
}

DurationStat neighbor_stable_duration(const RunResult& result, NodeId node) {
    require_node(result, node);
    std::size_t flips = 0;
    for (const auto& r : result.trace) {
        if (r.node != node) continue;
        if (r.kind == TraceKind::kNeighborAdded ||
            r.kind == TraceKind::kNeighborRemoved)
            ++flips;
    }
    return stat_from_flips(flips, result.config.duration_s);
}

double avg_neighbor_count(const RunResult& result, NodeId node) {
    require_node(result, node);
    double integral = 0.0;
    double prev_t = 0.0;
    int count = 0;
    for (const auto& r : result.trace) {
        if (r.node != node) continue;
        if (r.kind != TraceKind::kNeighborAdded &&
            r.kind != TraceKind::kNeighborRemoved)
            continue;
        integral += count * (r.t - prev_t);
        prev_t = r.t;
        count += r.kind == TraceKind::kNeighborAdded ? 1 : -1;
    }
    integral += count * (result.config.duration_s - prev_t);
    return integral / result.config.duration_s;
}

std::optional<int> route_hop_count(const std::map<NodeId, FlowTable>& tables,
                                   NodeId src, NodeId dst) {
    if (src == dst) return 0;
    const auto path = route_path(tables, src, dst);
    if (!path) return std::nullopt;
    return static_cast<int>(path->size()) - 1;
}

double end_to_end_delivery(const std::vector<double>& per_link_rates) {
    if (per_link_rates.empty())
        throw std::invalid_argument("end_to_end_delivery: empty route");
    double p = 1.0;
    for (double r : per_link_rates) p *= r;
    return p;
}

double route_delivery(const RunResult& result, const std::vector<NodeId>& path,
                      bool gated) {
    if (path.size() < 2)
        throw std::invalid_argument("route_delivery: need at least one hop");
    double p = 1.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        p *= result.link_rate(path[i - 1], path[i], gated);
    return p;
}

double network_radius(const std::vector<CurvePoint>& e2e_curve,
                      double threshold) {
    return curve_crossing(e2e_curve, threshold);
}

std::vector<CurvePoint> bin_curve(
    const std::vector<std::pair<double, double>>& samples, double bin_width,
    std::size_t min_count) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin_curve: bin_width must be > 0");
    // bins centered on multiples of bin_width, so samples sitting exactly on
    // a grid value (line deployments) are not split by fp rounding
    std::map<long long, std::pair<double, std::size_t>> bins;  // sum, count
    for (const auto& [x, v] : samples) {
        const long long b = std::llround(x / bin_width);
        auto& [sum, count] = bins[b];
        sum += v;
        ++count;
    }
    std::vector<CurvePoint> curve;
    for (const auto& [b, sc] : bins) {
        if (sc.second < min_count) continue;
        curve.push_back({b * bin_width, sc.first / sc.second});
    }
    return curve;
}

std::vector<CurvePoint> e2e_curve(const RunResult& result, bool gated,
                                  double bin_width) {
    std::vector<std::pair<double, double>> samples;
    const int n = result.node_count();
    for (NodeId i = 0; i < static_cast<NodeId>(n); ++i) {
        for (NodeId j = 0; j < static_cast<NodeId>(n); ++j) {
            if (i == j) continue;
            const auto path = route_path(result.controller_tables, i, j);
            if (!path) continue;
            samples.emplace_back(result.deployment.distance(i, j),
                                 route_delivery(result, *path, gated));
        }
    }
    return bin_curve(samples, bin_width);
}

std::vector<CurvePoint> hop_curve(const RunResult& result, double bin_width) {
    std::vector<std::pair<double, double>> samples;
    const int n = result.node_count();
    for (NodeId i = 0; i < static_cast<NodeId>(n); ++i) {
        for (NodeId j = 0; j < static_cast<NodeId>(n); ++j) {
            if (i == j) continue;
            const auto hops = route_hop_count(result.controller_tables, i, j);
            if (!hops) continue;
            samples.emplace_back(result.deployment.distance(i, j),
                                 static_cast<double>(*hops));
        }
    }
    return bin_curve(samples, bin_width);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2]
                      : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

StabilityPoint summarize_durations(double x,
                                   const std::vector<DurationStat>& stats) {
    if (stats.empty())
        throw std::invalid_argument("summarize_durations: no samples");
    StabilityPoint p;
    p.x = x;
    p.n = stats.size();
    std::vector<double> means;
    means.reserve(stats.size());
    for (const auto& s : stats) {
        means.push_back(s.mean_s);
        p.mean_s += s.mean_s;
        if (s.censored) ++p.censored;
    }
    p.mean_s /= static_cast<double>(p.n);
    double var = 0.0;
    for (double m : means) var += (m - p.mean_s) * (m - p.mean_s);
    p.stderr_s = p.n > 1 ? std::sqrt(var / (p.n - 1) / p.n) : 0.0;
    p.median_s = median(means);
    return p;
}

void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        f << (i ? "," : "") << header[i];
    f << '\n';
    char buf[40];
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_table_csv: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            f << (i ? "," : "") << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace sdwsn
