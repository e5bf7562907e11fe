#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sdwsn/channel.hpp"
#include "sdwsn/rng.hpp"

namespace sdwsn {

// One HELLO period as the receiver's radio saw it. A lost period carries the
// sensitivity-floor RSSI (the receiver observed nothing).
struct PacketRecord {
    double rssi_dbm = 0.0;
    std::uint8_t received = 0;
};

// k periods of link history, oldest first.
struct FeatureWindow {
    std::vector<double> rssi;
    std::vector<std::uint8_t> recv;

    int k() const { return static_cast<int>(rssi.size()); }
};

struct Sample {
    FeatureWindow window;
    std::uint8_t label = 0;     // reception in the period after the window
    double distance_m = 0.0;    // ground truth, metadata only, never a feature
};

using Dataset = std::vector<Sample>;

// Simulates `periods` i.i.d. transmissions on one link at distance x, encoding
// lost periods at the RSSI floor.
std::vector<PacketRecord> simulate_link(double x_m, int periods,
                                        const ChannelParams& params, Rng& rng);

// The k entries preceding end_index, oldest first. Throws on short history.
FeatureWindow extract_window(const std::vector<PacketRecord>& history,
                             std::size_t end_index, int k);
FeatureWindow extract_window(const std::deque<PacketRecord>& history,
                             std::size_t end_index, int k);

// Link distances uniform in (0, 2*r0]; one sample per sliding-window position,
// so periods_per_link - k samples per link. Per-link substreams are derived
// from rng, making the result independent of evaluation order.
Dataset generate_dataset(const ChannelParams& params, int n_links,
                         int periods_per_link, int k, Rng& rng);

enum class ModelKind { kLogistic, kTree, kForest };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);  // throws on unknown

struct TrainOptions {
    ModelKind kind = ModelKind::kLogistic;
    // logistic (IRLS)
    int logistic_max_iters = 40;
    double ridge = 1e-6;
    // tree
    int max_depth = 10;
    int min_leaf = 10;
    int max_thresholds = 64;
    // forest
    int n_trees = 15;
};

struct TreeNode {
    // leaf when feature < 0
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p1 = 0.0;  // leaf: fraction of positive labels
};

// A trained predictor. Feature layout: [rssi_1..rssi_k, recv_1..recv_k], with
// the normalization recorded at training time applied inside predict().
class Model {
public:
    ModelKind kind = ModelKind::kLogistic;
    int k = 0;
    std::vector<double> feature_shift;  // size 2k
    std::vector<double> feature_scale;  // size 2k
    // logistic
    double bias = 0.0;
    std::vector<double> weights;  // size 2k
    // tree / forest
    std::vector<std::vector<TreeNode>> trees;  // one entry for kTree

    std::vector<double> features(const FeatureWindow& window) const;  // normalized
    double score(const FeatureWindow& window) const;  // throws on k mismatch
};

struct Prediction {
    int decision = 0;   // 1 iff score >= 0.5
    double score = 0.0;
};

// Deterministic given (dataset order, options, rng seed). Throws if the
// dataset is empty or single-class.
Model train(const Dataset& dataset, const TrainOptions& options, Rng& rng);

Prediction predict(const Model& model, const FeatureWindow& window);

struct EvalReport {
    double acc = 0.0, f1 = 0.0, precision = 0.0, recall = 0.0;
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

EvalReport evaluate(const Model& model, const Dataset& dataset);

// Label-stratified split; second element holds ~test_fraction of each class.
std::pair<Dataset, Dataset> split_stratified(const Dataset& dataset,
                                             double test_fraction, Rng& rng);

struct CurvePoint {
    double x = 0.0;
    double value = 0.0;
};

// Prediction accuracy on fresh links per distance (Fig.-7-style curve).
std::vector<CurvePoint> accuracy_vs_distance(const Model& model,
                                             const ChannelParams& params,
                                             const std::vector<double>& grid_m,
                                             int trials_per_distance, Rng& rng);

// Fraction of periods whose packet was both physically received and passed by
// the predictor gate (Fig.-8-style modified channel).
std::vector<CurvePoint> effective_delivery_curve(const Model& model,
                                                 const ChannelParams& params,
                                                 const std::vector<double>& grid_m,
                                                 int trials_per_distance,
                                                 Rng& rng);

// Distance at which a monotonically decreasing curve crosses `level`, by
// linear interpolation between grid points; NaN when it never crosses.
double curve_crossing(const std::vector<CurvePoint>& curve, double level);

// Width of the {0.3 <= value <= 0.7} band via the 0.7 and 0.3 crossings.
double instability_band_width(const std::vector<CurvePoint>& curve);

// Dataset CSV: header distance_m,rssi_1..rssi_k,recv_1..recv_k,label.
void write_dataset_csv(std::ostream& out, const Dataset& dataset, int k);
void write_dataset_csv(const std::string& path, const Dataset& dataset, int k);
std::pair<Dataset, int> read_dataset_csv(std::istream& in);
std::pair<Dataset, int> read_dataset_csv(const std::string& path);

// Versioned text format; doubles are serialized as hexfloats so reloading is
// bit-exact.
std::string serialize_model(const Model& model);
Model parse_model(const std::string& text);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace sdwsn
