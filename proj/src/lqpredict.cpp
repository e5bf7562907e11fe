#include "sdwsn/lqpredict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdwsn {

std::vector<PacketRecord> simulate_link(double x_m, int periods,
                                        const ChannelParams& params, Rng& rng) {
    std::vector<PacketRecord> log;
    log.reserve(periods);
    for (int i = 0; i < periods; ++i) {
        const LinkDraw d = sample_link_event(x_m, params, rng);
        if (d.received)
            log.push_back({d.rssi_dbm, 1});
        else
            log.push_back({params.rssi_floor_dbm(), 0});
    }
    return log;
}

namespace {

template <typename Container>
FeatureWindow extract_window_impl(const Container& history, std::size_t end_index,
                                  int k) {
    if (k <= 0) throw std::invalid_argument("extract_window: k must be positive");
    if (end_index > history.size() || end_index < static_cast<std::size_t>(k))
        throw std::out_of_range("extract_window: insufficient history");
    FeatureWindow w;
    w.rssi.reserve(k);
    w.recv.reserve(k);
    for (std::size_t i = end_index - k; i < end_index; ++i) {
        w.rssi.push_back(history[i].rssi_dbm);
        w.recv.push_back(history[i].received);
    }
    return w;
}

}  // namespace

FeatureWindow extract_window(const std::vector<PacketRecord>& history,
                             std::size_t end_index, int k) {
    return extract_window_impl(history, end_index, k);
}

FeatureWindow extract_window(const std::deque<PacketRecord>& history,
                             std::size_t end_index, int k) {
    return extract_window_impl(history, end_index, k);
}

Dataset generate_dataset(const ChannelParams& params, int n_links,
                         int periods_per_link, int k, Rng& rng) {
    if (n_links < 1)
        throw std::invalid_argument("generate_dataset: n_links must be >= 1");
    if (periods_per_link <= k)
        throw std::invalid_argument(
            "generate_dataset: periods_per_link must exceed k");
    const std::uint64_t master = rng.next_u64();
    Dataset out;
    out.reserve(static_cast<std::size_t>(n_links) * (periods_per_link - k));
    for (int l = 0; l < n_links; ++l) {
        Rng link_rng(mix64(master, static_cast<std::uint64_t>(l)));
        // uniform in (0, 2*r0]
        const double x = (1.0 - link_rng.next_double()) * 2.0 * params.r0_m;
        const auto log = simulate_link(x, periods_per_link, params, link_rng);
        for (std::size_t end = k; end < log.size(); ++end) {
            Sample s;
            s.window = extract_window(log, end, k);
            s.label = log[end].received;
            s.distance_m = x;
            out.push_back(std::move(s));
        }
    }
    return out;
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kLogistic: return "logistic";
        case ModelKind::kTree: return "tree";
        case ModelKind::kForest: return "forest";
    }
    return "unknown";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "logistic") return ModelKind::kLogistic;
    if (name == "tree") return ModelKind::kTree;
    if (name == "forest") return ModelKind::kForest;
    throw std::invalid_argument("unknown model kind: " + name);
}

std::vector<double> Model::features(const FeatureWindow& window) const {
    if (window.k() != k)
        throw std::invalid_argument("predict: window length does not match model k");
    std::vector<double> f(2 * static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        f[i] = (window.rssi[i] - feature_shift[i]) / feature_scale[i];
        f[k + i] = (static_cast<double>(window.recv[i]) - feature_shift[k + i]) /
                   feature_scale[k + i];
    }
    return f;
}

Prediction predict(const Model& model, const FeatureWindow& window) {
    Prediction p;
    p.score = model.score(window);
    p.decision = p.score >= 0.5 ? 1 : 0;
    return p;
}

EvalReport evaluate(const Model& model, const Dataset& dataset) {
    if (dataset.empty())
        throw std::invalid_argument("evaluate: empty dataset");
    EvalReport r;
    for (const auto& s : dataset) {
        const int d = predict(model, s.window).decision;
        if (s.label == 1 && d == 1) ++r.tp;
        else if (s.label == 0 && d == 1) ++r.fp;
        else if (s.label == 0 && d == 0) ++r.tn;
        else ++r.fn;
    }
    const double total = static_cast<double>(r.tp + r.fp + r.tn + r.fn);
    r.acc = static_cast<double>(r.tp + r.tn) / total;
    r.precision = (r.tp + r.fp) > 0
                      ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                      : 0.0;
    r.recall = (r.tp + r.fn) > 0
                   ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                   : 0.0;
    r.f1 = (r.precision + r.recall) > 0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& dataset,
                                             double test_fraction, Rng& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (dataset[i].label ? pos : neg).push_back(i);
    auto shuffle = [&rng](std::vector<std::size_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[rng.next_below(i)]);
    };
    shuffle(pos);
    shuffle(neg);
    Dataset train_set, test_set;
    auto take = [&](const std::vector<std::size_t>& idx) {
        const std::size_t n_test =
            static_cast<std::size_t>(std::llround(test_fraction * idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test_set : train_set).push_back(dataset[idx[i]]);
    };
    take(pos);
    take(neg);
    return {std::move(train_set), std::move(test_set)};
}

std::vector<CurvePoint> accuracy_vs_distance(const Model& model,
                                             const ChannelParams& params,
                                             const std::vector<double>& grid_m,
                                             int trials_per_distance, Rng& rng) {
    const std::uint64_t master = rng.next_u64();
    std::vector<CurvePoint> curve;
    curve.reserve(grid_m.size());
    const int windows_per_link = 100;
    for (std::size_t gi = 0; gi < grid_m.size(); ++gi) {
        const double x = grid_m[gi];
        int correct = 0, total = 0;
        int link = 0;
        while (total < trials_per_distance) {
            Rng link_rng(mix64(master, gi, static_cast<std::uint64_t>(link++)));
            const auto log =
                simulate_link(x, model.k + windows_per_link, params, link_rng);
            for (std::size_t end = model.k;
                 end < log.size() && total < trials_per_distance; ++end) {
                const auto w = extract_window(log, end, model.k);
                correct += predict(model, w).decision == log[end].received;
                ++total;
            }
        }
        curve.push_back({x, static_cast<double>(correct) / total});
    }
    return curve;
}

std::vector<CurvePoint> effective_delivery_curve(const Model& model,
                                                 const ChannelParams& params,
                                                 const std::vector<double>& grid_m,
                                                 int trials_per_distance,
                                                 Rng& rng) {
    const std::uint64_t master = rng.next_u64();
    std::vector<CurvePoint> curve;
    curve.reserve(grid_m.size());
    const int windows_per_link = 100;
    for (std::size_t gi = 0; gi < grid_m.size(); ++gi) {
        const double x = grid_m[gi];
        int effective = 0, total = 0;
        int link = 0;
        while (total < trials_per_distance) {
            Rng link_rng(mix64(master, gi, static_cast<std::uint64_t>(link++), 0xEFF));
            const auto log =
                simulate_link(x, model.k + windows_per_link, params, link_rng);
            for (std::size_t end = model.k;
                 end < log.size() && total < trials_per_distance; ++end) {
                // a predicted-1 on a lost packet cannot create a reception
                if (log[end].received) {
                    const auto w = extract_window(log, end, model.k);
                    effective += predict(model, w).decision;
                }
                ++total;
            }
        }
        curve.push_back({x, static_cast<double>(effective) / total});
    }
    return curve;
}

double curve_crossing(const std::vector<CurvePoint>& curve, double level) {
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto& a = curve[i - 1];
        const auto& b = curve[i];
        if ((a.value >= level && b.value < level) ||
            (a.value > level && b.value <= level)) {
            const double t = (a.value - level) / (a.value - b.value);
            return a.x + t * (b.x - a.x);
        }
    }
    return std::nan("");
}

double instability_band_width(const std::vector<CurvePoint>& curve) {
    const double hi = curve_crossing(curve, 0.7);
    const double lo = curve_crossing(curve, 0.3);
    if (std::isnan(hi) || std::isnan(lo)) return std::nan("");
    return lo - hi;
}

namespace {

void write_double(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& dataset, int k) {
    out << "distance_m";
    for (int i = 1; i <= k; ++i) out << ",rssi_" << i;
    for (int i = 1; i <= k; ++i) out << ",recv_" << i;
    out << ",label\n";
    for (const auto& s : dataset) {
        if (s.window.k() != k)
            throw std::invalid_argument("write_dataset_csv: window length mismatch");
        write_double(out, s.distance_m);
        for (double v : s.window.rssi) {
            out << ',';
            write_double(out, v);
        }
        for (auto v : s.window.recv) out << ',' << static_cast<int>(v);
        out << ',' << static_cast<int>(s.label) << '\n';
    }
}

void write_dataset_csv(const std::string& path, const Dataset& dataset, int k) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_dataset_csv(f, dataset, k);
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::pair<Dataset, int> read_dataset_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("dataset csv: missing header");
    int k = 0;
    {
        std::stringstream hs(header);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(hs, col, ',')) cols.push_back(col);
        if (cols.size() < 4 || cols.front() != "distance_m" || cols.back() != "label")
            throw std::runtime_error("dataset csv: unexpected header");
        k = static_cast<int>((cols.size() - 2) / 2);
        if (cols.size() != static_cast<std::size_t>(2 * k + 2))
            throw std::runtime_error("dataset csv: unexpected column count");
    }
    Dataset out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        Sample s;
        auto next_cell = [&]() {
            if (!std::getline(ls, cell, ','))
                throw std::runtime_error("dataset csv: short row");
            return cell;
        };
        s.distance_m = std::stod(next_cell());
        s.window.rssi.reserve(k);
        s.window.recv.reserve(k);
        for (int i = 0; i < k; ++i) s.window.rssi.push_back(std::stod(next_cell()));
        for (int i = 0; i < k; ++i)
            s.window.recv.push_back(static_cast<std::uint8_t>(std::stoi(next_cell())));
        s.label = static_cast<std::uint8_t>(std::stoi(next_cell()));
        out.push_back(std::move(s));
    }
    return {std::move(out), k};
}

std::pair<Dataset, int> read_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_dataset_csv(f);
}

namespace {

std::string hexd(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hexd(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

}  // namespace

std::string serialize_model(const Model& m) {
    std::ostringstream out;
    out << "sdwsnml 1\n";
    out << "kind " << model_kind_name(m.kind) << "\n";
    out << "k " << m.k << "\n";
    out << "shift";
    for (double v : m.feature_shift) out << ' ' << hexd(v);
    out << "\nscale";
    for (double v : m.feature_scale) out << ' ' << hexd(v);
    out << "\n";
    if (m.kind == ModelKind::kLogistic) {
        out << "bias " << hexd(m.bias) << "\nweights";
        for (double v : m.weights) out << ' ' << hexd(v);
        out << "\n";
    } else {
        out << "trees " << m.trees.size() << "\n";
        for (const auto& tree : m.trees) {
            out << "tree " << tree.size() << "\n";
            for (const auto& n : tree) {
                if (n.feature < 0)
                    out << "leaf " << hexd(n.p1) << "\n";
                else
                    out << "split " << n.feature << ' ' << hexd(n.threshold) << ' '
                        << n.left << ' ' << n.right << "\n";
            }
        }
    }
    return out.str();
}

Model parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    auto expect = [&](const char* want) {
        if (!(in >> tok) || tok != want)
            throw std::runtime_error(std::string("model file: expected ") + want);
    };
    expect("sdwsnml");
    int version = 0;
    in >> version;
    if (version != 1) throw std::runtime_error("model file: unsupported version");
    Model m;
    expect("kind");
    in >> tok;
    m.kind = model_kind_from_name(tok);
    expect("k");
    in >> m.k;
    if (m.k <= 0) throw std::runtime_error("model file: bad k");
    const int d = 2 * m.k;
    expect("shift");
    m.feature_shift.resize(d);
    for (auto& v : m.feature_shift) {
        in >> tok;
        v = parse_hexd(tok);
    }
    expect("scale");
    m.feature_scale.resize(d);
    for (auto& v : m.feature_scale) {
        in >> tok;
        v = parse_hexd(tok);
    }
    if (m.kind == ModelKind::kLogistic) {
        expect("bias");
        in >> tok;
        m.bias = parse_hexd(tok);
        expect("weights");
        m.weights.resize(d);
        for (auto& v : m.weights) {
            in >> tok;
            v = parse_hexd(tok);
        }
    } else {
        expect("trees");
        std::size_t n_trees = 0;
        in >> n_trees;
        m.trees.resize(n_trees);
        for (auto& tree : m.trees) {
            expect("tree");
            std::size_t n_nodes = 0;
            in >> n_nodes;
            tree.resize(n_nodes);
            for (auto& node : tree) {
                in >> tok;
                if (tok == "leaf") {
                    in >> tok;
                    node.feature = -1;
                    node.p1 = parse_hexd(tok);
                } else if (tok == "split") {
                    in >> node.feature >> tok >> node.left >> node.right;
                    node.threshold = parse_hexd(tok);
                } else {
                    throw std::runtime_error("model file: bad tree node");
                }
            }
        }
    }
    if (!in) throw std::runtime_error("model file: truncated");
    return m;
}

void save_model(const std::string& path, const Model& model) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << serialize_model(model);
    if (!f) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str());
}

}  // namespace sdwsn
