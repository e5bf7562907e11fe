#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdwsn/simengine.hpp"

namespace sdwsn {

// A stability measurement over one run's timeline. `censored` marks a
// flip-free horizon: the mean is then the full duration, a lower bound.
struct DurationStat {
    double mean_s = 0.0;
    std::size_t segments = 0;
    bool censored = false;
};

// Mean time between membership flips of the directed link peer -> observer.
DurationStat link_stable_duration(const RunResult& result, NodeId observer,
                                  NodeId peer);

// Mean time between any change of the node's members set.
DurationStat neighbor_stable_duration(const RunResult& result, NodeId node);

// Time-averaged size of the node's members set over the run.
double avg_neighbor_count(const RunResult& result, NodeId node);

// Hops along the flow tables, or nullopt when unreachable.
std::optional<int> route_hop_count(const std::map<NodeId, FlowTable>& tables,
                                   NodeId src, NodeId dst);

// Product of per-hop delivery rates.
double end_to_end_delivery(const std::vector<double>& per_link_rates);

// e2e delivery along a concrete path using the run's measured ledger rates
// (gate-passed/sent with prediction, received/sent without).
double route_delivery(const RunResult& result, const std::vector<NodeId>& path,
                      bool gated);

// Distance where the e2e curve crosses the stability threshold (default 30%),
// by linear interpolation between bins; NaN when it never crosses.
double network_radius(const std::vector<CurvePoint>& e2e_curve,
                      double threshold = 0.3);

// Aggregation over (distance, value) samples into fixed-width bins; bins with
// fewer than min_count samples are dropped. x of each point is the bin center.
std::vector<CurvePoint> bin_curve(
    const std::vector<std::pair<double, double>>& samples, double bin_width,
    std::size_t min_count = 1);

// e2e delivery and hop-count curves over all ordered node pairs of a run,
// binned by euclidean distance.
std::vector<CurvePoint> e2e_curve(const RunResult& result, bool gated,
                                  double bin_width);
std::vector<CurvePoint> hop_curve(const RunResult& result, double bin_width);

// Cross-run aggregate for one sweep point. Censored runs contribute their
// full-duration lower bound to the mean and are counted separately rather
// than silently mixed in.
struct StabilityPoint {
    double x = 0.0;
    double mean_s = 0.0;
    double stderr_s = 0.0;
    double median_s = 0.0;
    std::size_t n = 0;
    std::size_t censored = 0;
};

StabilityPoint summarize_durations(double x, const std::vector<DurationStat>& stats);

double median(std::vector<double> values);

// One CSV per figure: header row then one row per point.
void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace sdwsn
