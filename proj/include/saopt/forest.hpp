#pragma once

// CART regression trees and a bootstrap random forest used as fitness
// surrogates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "saopt/parallel.hpp"
#include "saopt/rng.hpp"
#include "saopt/types.hpp"

namespace saopt {

/// Input/target pairs for one surrogate.
struct TrainingSet {
    std::vector<Genome> inputs;
    std::vector<double> targets;

    [[nodiscard]] std::size_t size() const noexcept { return inputs.size(); }
    [[nodiscard]] bool empty() const noexcept { return inputs.empty(); }

    void add(Genome x, double y) {
        inputs.push_back(std::move(x));
        targets.push_back(y);
    }

    void append(const TrainingSet& other) {
        inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
        targets.insert(targets.end(), other.targets.begin(), other.targets.end());
    }

    void validate() const {
        require(inputs.size() == targets.size(), "training set: inputs and targets differ in length");
        for (const auto& x : inputs)
            require(x.size() == inputs.front().size(), "training set: inconsistent input dimension");
    }
};

enum class SplitCriterion { MeanSquaredError };

struct ForestHyperparams {
    std::size_t n_trees = 100;
    SplitCriterion criterion = SplitCriterion::MeanSquaredError;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 5;
    bool bootstrap = true;

    void validate() const {
        require(n_trees >= 1, "forest: n_trees must be positive");
        require(min_samples_split >= 1, "forest: min_samples_split must be positive");
        require(min_samples_leaf >= 1, "forest: min_samples_leaf must be positive");
        require(max_features >= 1, "forest: max_features must be positive");
    }
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;         // leaf prediction (mean of resident targets)
    std::uint32_t left = 0;
    std::uint32_t right = 0;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
public:
    RegressionTree() = default;
    RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features)
        : nodes_(std::move(nodes)), n_features_(n_features) {}

    [[nodiscard]] double predict(std::span<const double> x) const {
        if (nodes_.empty()) throw contract_violation("predict_tree: tree is empty");
        if (x.size() != n_features_) throw invalid_argument("predict_tree: genome length mismatch");
        std::uint32_t at = 0;
        while (!nodes_[at].is_leaf()) {
            const auto& n = nodes_[at];
            at = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        }
        return nodes_[at].value;
    }

    [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
    [[nodiscard]] std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0u, 0u}};
        while (!stack.empty()) {
            auto [at, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes_[at].is_leaf()) {
                stack.emplace_back(nodes_[at].left, d + 1);
                stack.emplace_back(nodes_[at].right, d + 1);
            }
        }
        return best;
    }
    [[nodiscard]] std::size_t leaf_count() const {
        return static_cast<std::size_t>(
            std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
};

inline double predict_tree(const RegressionTree& tree, std::span<const double> genome) {
    return tree.predict(genome);
}

namespace detail {

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double sse = 0.0;
};

// Grows a tree over data.inputs[samples[i]] (samples may repeat, as with a
// bootstrap resample). Nodes are stored in pre-order.
class TreeBuilder {
public:
    TreeBuilder(const TrainingSet& data, const ForestHyperparams& hp, Rng& rng)
        : data_(data), hp_(hp), rng_(rng), n_features_(data.inputs.front().size()) {}

    RegressionTree build(std::vector<std::size_t> samples) {
        nodes_.clear();
        grow(std::move(samples));
        return RegressionTree(std::move(nodes_), n_features_);
    }

private:
    std::uint32_t grow(std::vector<std::size_t> samples) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();

        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s : samples) {
            const double y = data_.targets[s];
            sum += y;
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        const double mean = sum / static_cast<double>(samples.size());
        nodes_[id].value = mean;

        // Feature sampling consumes the stream even for nodes that end up as
        // leaves, so the layout does not depend on target values.
        const auto candidates = sample_features();
        if (samples.size() < hp_.min_samples_split || samples.size() < 2 * hp_.min_samples_leaf || lo == hi)
            return id;

        double parent_sse = 0.0;
        for (std::size_t s : samples) {
            const double d = data_.targets[s] - mean;
            parent_sse += d * d;
        }
        const SplitChoice split = best_split(samples, candidates, mean, parent_sse);
        if (!split.found) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t s : samples)
            (data_.inputs[s][split.feature] < split.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        nodes_[id].feature = static_cast<std::int32_t>(split.feature);
        nodes_[id].threshold = split.threshold;
        const std::uint32_t l = grow(std::move(left));
        const std::uint32_t r = grow(std::move(right));
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    std::vector<std::size_t> sample_features() {
        std::vector<std::size_t> all(n_features_);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const std::size_t k = std::min(hp_.max_features, n_features_);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.below(n_features_ - i));
            std::swap(all[i], all[j]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
        return all;
    }

    SplitChoice best_split(const std::vector<std::size_t>& samples, const std::vector<std::size_t>& features,
                           double mean, double parent_sse) const {
        const std::size_t n = samples.size();
        const std::size_t min_leaf = hp_.min_samples_leaf;
        SplitChoice best;
        best.sse = parent_sse * (1.0 - 1e-12);  // a split must strictly reduce the error
        std::vector<std::pair<double, double>> column(n);
        for (std::size_t f : features) {
            for (std::size_t i = 0; i < n; ++i)
                column[i] = {data_.inputs[samples[i]][f], data_.targets[samples[i]] - mean};
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (column.front().first == column.back().first) continue;

            double total_sum = 0.0;
            double total_sq = 0.0;
            for (const auto& [x, y] : column) {
                total_sum += y;
                total_sq += y * y;
            }
            double left_sum = 0.0;
            double left_sq = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                left_sum += column[i - 1].second;
                left_sq += column[i - 1].second * column[i - 1].second;
                if (i < min_leaf || n - i < min_leaf) continue;
                if (!(column[i - 1].first < column[i].first)) continue;
                const auto nl = static_cast<double>(i);
                const auto nr = static_cast<double>(n - i);
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse =
                    std::max(0.0, left_sq - left_sum * left_sum / nl) + std::max(0.0, right_sq - right_sum * right_sum / nr);
                if (sse < best.sse) {
                    double threshold = 0.5 * (column[i - 1].first + column[i].first);
                    if (!(threshold > column[i - 1].first)) threshold = column[i].first;
                    best = {true, f, threshold, sse};
                }
            }
        }
        return best;
    }

    const TrainingSet& data_;
    const ForestHyperparams& hp_;
    Rng& rng_;
    std::size_t n_features_;
    std::vector<TreeNode> nodes_;
};

}  // namespace detail

/// Fits one CART tree on every sample of `data` (no resampling).
inline RegressionTree fit_tree(const TrainingSet& data, const ForestHyperparams& hp, Rng& rng) {
    require(!data.empty(), "fit_tree: empty training set");
    data.validate();
    hp.validate();
    std::vector<std::size_t> samples(data.size());
    std::iota(samples.begin(), samples.end(), std::size_t{0});
    return detail::TreeBuilder(data, hp, rng).build(std::move(samples));
}

inline double sample_stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

struct TrainingSummary {
    std::size_t n_samples = 0;
    double sigma_train = 0.0;

    friend bool operator==(const TrainingSummary&, const TrainingSummary&) = default;
};

class RandomForestModel {
public:
    RandomForestModel() = default;

    [[nodiscard]] bool fitted() const noexcept { return !trees_.empty(); }
    [[nodiscard]] const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    [[nodiscard]] const ForestHyperparams& hyperparams() const noexcept { return hp_; }
    [[nodiscard]] const TrainingSummary& summary() const noexcept { return summary_; }
    [[nodiscard]] const TrainingSet& training_data() const noexcept { return data_; }
    [[nodiscard]] double sigma_train() const noexcept { return summary_.sigma_train; }

    [[nodiscard]] double predict(std::span<const double> genome) const {
        if (!fitted()) throw contract_violation("predict_forest: model is not fitted");
        double sum = 0.0;
        for (const auto& t : trees_) sum += t.predict(genome);
        return sum / static_cast<double>(trees_.size());
    }

    friend RandomForestModel fit_forest(const TrainingSet& data, const ForestHyperparams& hp, Rng rng,
                                        std::size_t workers);
    friend RandomForestModel make_forest(std::vector<RegressionTree> trees, ForestHyperparams hp,
                                         TrainingSet data);
    friend void save_forest(const RandomForestModel& model, std::ostream& out);
    friend RandomForestModel load_forest(std::istream& in);

    friend bool operator==(const RandomForestModel& a, const RandomForestModel& b) {
        return a.trees_ == b.trees_ && a.summary_ == b.summary_ && a.data_.inputs == b.data_.inputs &&
               a.data_.targets == b.data_.targets && a.hp_.n_trees == b.hp_.n_trees &&
               a.hp_.min_samples_split == b.hp_.min_samples_split &&
               a.hp_.min_samples_leaf == b.hp_.min_samples_leaf && a.hp_.max_features == b.hp_.max_features &&
               a.hp_.bootstrap == b.hp_.bootstrap;
    }

private:
    std::vector<RegressionTree> trees_;
    ForestHyperparams hp_;
    TrainingSummary summary_;
    TrainingSet data_;
};

/// Tree t is grown from rng.derive(t), so the result does not depend on the
/// number of workers.
inline RandomForestModel fit_forest(const TrainingSet& data, const ForestHyperparams& hp, Rng rng,
                                    std::size_t workers = 1) {
    require(data.size() >= 2, "fit_forest: need at least two samples");
    data.validate();
    hp.validate();
    RandomForestModel model;
    model.hp_ = hp;
    model.data_ = data;
    model.summary_ = {data.size(), sample_stddev(data.targets)};
    model.trees_.resize(hp.n_trees);
    const std::size_t n = data.size();
    parallel_for(
        hp.n_trees,
        [&](std::size_t t) {
            Rng tree_rng = rng.derive(t);
            std::vector<std::size_t> samples(n);
            if (hp.bootstrap) {
                for (auto& s : samples) s = static_cast<std::size_t>(tree_rng.below(n));
            } else {
                std::iota(samples.begin(), samples.end(), std::size_t{0});
            }
            model.trees_[t] = detail::TreeBuilder(model.data_, hp, tree_rng).build(std::move(samples));
        },
        workers);
    return model;
}

/// Assembles a forest from already-built trees (used by tests and loaders).
inline RandomForestModel make_forest(std::vector<RegressionTree> trees, ForestHyperparams hp, TrainingSet data) {
    RandomForestModel model;
    model.hp_ = hp;
    model.hp_.n_trees = trees.size();
    model.summary_ = {data.size(), sample_stddev(data.targets)};
    model.data_ = std::move(data);
    model.trees_ = std::move(trees);
    return model;
}

inline double predict_forest(const RandomForestModel& model, std::span<const double> genome) {
    return model.predict(genome);
}

// ---------------------------------------------------------------------------
// Serialization.
//
// Line-oriented text; every real is written as a C99 hex-float so a
// save/load cycle is bit-exact.
//
//   saopt-forest 1
//   hyperparams <n_trees> <min_samples_split> <min_samples_leaf> <max_features> <bootstrap:0|1>
//   summary <n_samples> <sigma_train>
//   training <n_rows> <n_features>
//   <x_1> ... <x_d> <y>                      (n_rows lines)
//   trees <count>
//   tree <node_count>
//   <feature> <threshold> <value> <left> <right>   (node_count lines, pre-order; feature -1 = leaf)
//   end

inline constexpr int kForestFormatVersion = 1;

namespace detail {
inline std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}
inline double parse_real(const std::string& token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw io_error("forest file: bad real '" + token + "'");
    return v;
}
inline void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw io_error("forest file: expected '" + word + "', got '" + got + "'");
}
template <typename T>
T read_value(std::istream& in, const char* what) {
    T v{};
    if (!(in >> v)) throw io_error(std::string("forest file: cannot read ") + what);
    return v;
}
inline double read_real(std::istream& in) { return parse_real(read_value<std::string>(in, "real")); }
}  // namespace detail

inline void save_forest(const RandomForestModel& model, std::ostream& out) {
    using detail::hex;
    const auto& hp = model.hp_;
    const std::size_t d = model.data_.empty() ? 0 : model.data_.inputs.front().size();
    out << "saopt-forest " << kForestFormatVersion << '\n';
    out << "hyperparams " << hp.n_trees << ' ' << hp.min_samples_split << ' ' << hp.min_samples_leaf << ' '
        << hp.max_features << ' ' << (hp.bootstrap ? 1 : 0) << '\n';
    out << "summary " << model.summary_.n_samples << ' ' << hex(model.summary_.sigma_train) << '\n';
    out << "training " << model.data_.size() << ' ' << d << '\n';
    for (std::size_t i = 0; i < model.data_.size(); ++i) {
        for (double x : model.data_.inputs[i]) out << hex(x) << ' ';
        out << hex(model.data_.targets[i]) << '\n';
    }
    out << "trees " << model.trees_.size() << '\n';
    for (const auto& t : model.trees_) {
        out << "tree " << t.nodes().size() << ' ' << t.n_features() << '\n';
        for (const auto& n : t.nodes())
            out << n.feature << ' ' << hex(n.threshold) << ' ' << hex(n.value) << ' ' << n.left << ' ' << n.right
                << '\n';
    }
    out << "end\n";
    if (!out) throw io_error("forest file: write failed");
}

inline RandomForestModel load_forest(std::istream& in) {
    using namespace detail;
    expect(in, "saopt-forest");
    const int version = read_value<int>(in, "version");
    if (version != kForestFormatVersion)
        throw io_error("forest file: unsupported version " + std::to_string(version));
    RandomForestModel model;
    expect(in, "hyperparams");
    model.hp_.n_trees = read_value<std::size_t>(in, "n_trees");
    model.hp_.min_samples_split = read_value<std::size_t>(in, "min_samples_split");
    model.hp_.min_samples_leaf = read_value<std::size_t>(in, "min_samples_leaf");
    model.hp_.max_features = read_value<std::size_t>(in, "max_features");
    model.hp_.bootstrap = read_value<int>(in, "bootstrap") != 0;
    expect(in, "summary");
    model.summary_.n_samples = read_value<std::size_t>(in, "n_samples");
    model.summary_.sigma_train = read_real(in);
    expect(in, "training");
    const auto rows = read_value<std::size_t>(in, "rows");
    const auto d = read_value<std::size_t>(in, "features");
    for (std::size_t i = 0; i < rows; ++i) {
        Genome x(d);
        for (auto& v : x) v = read_real(in);
        model.data_.add(std::move(x), read_real(in));
    }
    expect(in, "trees");
    const auto count = read_value<std::size_t>(in, "tree count");
    model.trees_.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        expect(in, "tree");
        const auto n_nodes = read_value<std::size_t>(in, "node count");
        const auto n_features = read_value<std::size_t>(in, "tree features");
        std::vector<TreeNode> nodes(n_nodes);
        for (auto& n : nodes) {
            n.feature = read_value<std::int32_t>(in, "feature");
            n.threshold = read_real(in);
            n.value = read_real(in);
            n.left = read_value<std::uint32_t>(in, "left");
            n.right = read_value<std::uint32_t>(in, "right");
            if (!n.is_leaf() && (n.left >= n_nodes || n.right >= n_nodes ||
                                 static_cast<std::size_t>(n.feature) >= n_features))
                throw io_error("forest file: node references out of range");
        }
        model.trees_.emplace_back(std::move(nodes), n_features);
    }
    expect(in, "end");
    if (model.trees_.size() != model.hp_.n_trees) throw io_error("forest file: tree count mismatch");
    return model;
}

}  // namespace saopt
