#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sdwsn/lqpredict.hpp"

namespace sdwsn {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Row-major feature matrix with the model's normalization applied.
Eigen::MatrixXd feature_matrix(const Dataset& data, const Model& m) {
    const int d = 2 * m.k;
    Eigen::MatrixXd x(data.size(), d);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto f = m.features(data[r].window);
        for (int c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r), c) = f[c];
    }
    return x;
}

void fit_normalization(const Dataset& data, Model& m) {
    const int k = m.k;
    const int d = 2 * k;
    m.feature_shift.assign(d, 0.0);
    m.feature_scale.assign(d, 1.0);
    // RSSI features: standardized per position; RECV features used raw.
    for (int i = 0; i < k; ++i) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& s : data) {
            const double v = s.window.rssi[i];
            sum += v;
            sum2 += v * v;
        }
        const double n = static_cast<double>(data.size());
        const double mean = sum / n;
        const double var = std::max(sum2 / n - mean * mean, 0.0);
        const double sd = std::sqrt(var);
        m.feature_shift[i] = mean;
        m.feature_scale[i] = sd > 1e-12 ? sd : 1.0;
    }
}

void train_logistic(const Dataset& data, const TrainOptions& opt, Model& m) {
    const int d = 2 * m.k;
    const Eigen::MatrixXd x = feature_matrix(data, m);
    Eigen::VectorXd y(data.size());
    for (std::size_t r = 0; r < data.size(); ++r)
        y(static_cast<Eigen::Index>(r)) = data[r].label;

    // IRLS on the ridge-penalized log-likelihood; the tiny penalty keeps the
    // Hessian invertible on separable data.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);  // [bias, weights]
    Eigen::MatrixXd xa(x.rows(), d + 1);
    xa.col(0).setOnes();
    xa.rightCols(d) = x;
    for (int it = 0; it < opt.logistic_max_iters; ++it) {
        Eigen::VectorXd z = xa * w;
        Eigen::VectorXd mu = z.unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd wt =
            (mu.array() * (1.0 - mu.array())).cwiseMax(1e-10).matrix();
        Eigen::MatrixXd h = xa.transpose() * wt.asDiagonal() * xa;
        h.diagonal().array() += opt.ridge * static_cast<double>(data.size());
        Eigen::VectorXd g = xa.transpose() * (y - mu);
        g -= opt.ridge * static_cast<double>(data.size()) * w;
        const Eigen::VectorXd step = h.ldlt().solve(g);
        w += step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
    }
    m.bias = w(0);
    m.weights.assign(d, 0.0);
    for (int c = 0; c < d; ++c) m.weights[c] = w(c + 1);
}

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const std::vector<std::uint8_t>& y;
    const TrainOptions& opt;
    std::vector<TreeNode>& nodes;
    Rng* feature_rng = nullptr;  // forest mode: subsample features per split
    int n_sub_features = 0;

    int build(std::vector<int>& idx, int depth) {
        const int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        int positives = 0;
        for (int i : idx) positives += y[i];
        const double p1 = static_cast<double>(positives) / idx.size();
        nodes[node_id].p1 = p1;
        if (depth >= opt.max_depth || positives == 0 ||
            positives == static_cast<int>(idx.size()) ||
            static_cast<int>(idx.size()) < 2 * opt.min_leaf) {
            return node_id;
        }

        const int d = static_cast<int>(x.cols());
        std::vector<int> features(d);
        std::iota(features.begin(), features.end(), 0);
        if (feature_rng && n_sub_features < d) {
            for (int i = 0; i < n_sub_features; ++i) {
                const int j =
                    i + static_cast<int>(feature_rng->next_below(d - i));
                std::swap(features[i], features[j]);
            }
            features.resize(n_sub_features);
            std::sort(features.begin(), features.end());
        }

        const double parent_gini = 2.0 * p1 * (1.0 - p1);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::uint8_t>> vals(idx.size());
        for (int f : features) {
            for (std::size_t i = 0; i < idx.size(); ++i)
                vals[i] = {x(idx[i], f), y[idx[i]]};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;

            // candidate positions: boundaries between distinct values, thinned
            // to at most max_thresholds
            std::vector<std::size_t> cuts;
            for (std::size_t i = 1; i < vals.size(); ++i)
                if (vals[i].first != vals[i - 1].first) cuts.push_back(i);
            if (static_cast<int>(cuts.size()) > opt.max_thresholds) {
                std::vector<std::size_t> thin;
                const double stride =
                    static_cast<double>(cuts.size()) / opt.max_thresholds;
                for (int i = 0; i < opt.max_thresholds; ++i)
                    thin.push_back(cuts[static_cast<std::size_t>(i * stride)]);
                cuts = std::move(thin);
            }

            // prefix positive counts for O(1) gini per cut
            std::vector<int> prefix_pos(vals.size() + 1, 0);
            for (std::size_t i = 0; i < vals.size(); ++i)
                prefix_pos[i + 1] = prefix_pos[i] + vals[i].second;
            const int total_pos = prefix_pos.back();
            const double n = static_cast<double>(vals.size());
            for (std::size_t cut : cuts) {
                const double nl = static_cast<double>(cut);
                const double nr = n - nl;
                if (nl < opt.min_leaf || nr < opt.min_leaf) continue;
                const double pl = prefix_pos[cut] / nl;
                const double pr = (total_pos - prefix_pos[cut]) / nr;
                const double child_gini = (nl / n) * 2.0 * pl * (1.0 - pl) +
                                          (nr / n) * 2.0 * pr * (1.0 - pr);
                const double gain = parent_gini - child_gini;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold =
                        0.5 * (vals[cut - 1].first + vals[cut].first);
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<int> left_idx, right_idx;
        for (int i : idx)
            (x(i, best_feature) <= best_threshold ? left_idx : right_idx)
                .push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;

        nodes[node_id].feature = best_feature;
        nodes[node_id].threshold = best_threshold;
        idx.clear();
        idx.shrink_to_fit();
        nodes[node_id].left = build(left_idx, depth + 1);
        nodes[node_id].right = build(right_idx, depth + 1);
        return node_id;
    }
};

std::vector<TreeNode> train_tree(const Eigen::MatrixXd& x,
                                 const std::vector<std::uint8_t>& y,
                                 std::vector<int> idx, const TrainOptions& opt,
                                 Rng* feature_rng, int n_sub_features) {
    std::vector<TreeNode> nodes;
    TreeBuilder b{x, y, opt, nodes, feature_rng, n_sub_features};
    b.build(idx, 0);
    return nodes;
}

double tree_score(const std::vector<TreeNode>& tree, const std::vector<double>& f) {
    int node = 0;
    while (tree[node].feature >= 0)
        node = f[tree[node].feature] <= tree[node].threshold ? tree[node].left
                                                             : tree[node].right;
    return tree[node].p1;
}

}  // namespace

double Model::score(const FeatureWindow& window) const {
    const auto f = features(window);
    switch (kind) {
        case ModelKind::kLogistic: {
            double z = bias;
            for (std::size_t i = 0; i < f.size(); ++i) z += weights[i] * f[i];
            return sigmoid(z);
        }
        case ModelKind::kTree:
            return tree_score(trees.front(), f);
        case ModelKind::kForest: {
            double sum = 0.0;
            for (const auto& t : trees) sum += tree_score(t, f);
            return sum / static_cast<double>(trees.size());
        }
    }
    throw std::logic_error("model: bad kind");
}

Model train(const Dataset& dataset, const TrainOptions& opt, Rng& rng) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    std::size_t positives = 0;
    for (const auto& s : dataset) positives += s.label;
    if (positives == 0 || positives == dataset.size())
        throw std::invalid_argument(
            "train: dataset contains a single class; model would be degenerate");

    Model m;
    m.kind = opt.kind;
    m.k = dataset.front().window.k();
    for (const auto& s : dataset)
        if (s.window.k() != m.k)
            throw std::invalid_argument("train: inconsistent window lengths");
    fit_normalization(dataset, m);

    if (opt.kind == ModelKind::kLogistic) {
        train_logistic(dataset, opt, m);
        return m;
    }

    const Eigen::MatrixXd x = feature_matrix(dataset, m);
    std::vector<std::uint8_t> y(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) y[i] = dataset[i].label;

    if (opt.kind == ModelKind::kTree) {
        std::vector<int> idx(dataset.size());
        std::iota(idx.begin(), idx.end(), 0);
        m.trees.push_back(train_tree(x, y, std::move(idx), opt, nullptr, 0));
        return m;
    }

    // forest: bootstrap samples + sqrt(d) feature subsampling per split
    const int d = 2 * m.k;
    const int n_sub =
        std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));
    const std::uint64_t master = rng.next_u64();
    m.trees.reserve(opt.n_trees);
    for (int t = 0; t < opt.n_trees; ++t) {
        Rng tree_rng(mix64(master, static_cast<std::uint64_t>(t)));
        std::vector<int> idx(dataset.size());
        for (auto& i : idx)
            i = static_cast<int>(tree_rng.next_below(dataset.size()));
        std::sort(idx.begin(), idx.end());
        m.trees.push_back(
            train_tree(x, y, std::move(idx), opt, &tree_rng, n_sub));
    }
    return m;
}

}  // namespace sdwsn
