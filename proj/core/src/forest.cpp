#include "eileen/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "eileen/error.hpp"
#include "eileen/rng.hpp"

namespace eileen {

using nlohmann::json;

FeatureMatrix::FeatureMatrix(std::size_t cols, std::vector<double> values)
    : cols_(cols), values_(std::move(values)) {
    if (cols_ == 0 ? !values_.empty() : values_.size() % cols_ != 0) {
        throw ValidationError("feature matrix values do not fill whole rows");
    }
}

void FeatureMatrix::add_row(std::span<double const> row) {
    if (row.size() != cols_) {
        throw ValidationError("row has " + std::to_string(row.size()) + " features, expected " +
                              std::to_string(cols_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
}

TreeNode const& Tree::leaf_for(std::span<double const> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        auto const& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
}

std::size_t Tree::depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (!nodes[i].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return best;
}

namespace {

double gini(double n0, double n1) {
    double const n = n0 + n1;
    if (n <= 0.0) return 0.0;
    double const p0 = n0 / n;
    double const p1 = n1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct Builder {
    FeatureMatrix const& x;
    std::span<int const> y;
    ForestConfig const& config;
    std::size_t mtry;
    Rng rng;
    Tree tree;
    std::vector<double> importance;

    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    Split best_split(std::vector<std::size_t> const& samples, double n0, double n1) {
        std::size_t const d = x.cols();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), std::size_t{0});
        // Partial Fisher-Yates: the first mtry entries are the candidates.
        for (std::size_t i = 0; i < mtry; ++i) {
            std::size_t const j = i + rng.below(d - i);
            std::swap(features[i], features[j]);
        }
        features.resize(mtry);
        std::sort(features.begin(), features.end());

        double const n = n0 + n1;
        double const parent = n * gini(n0, n1);
        Split best;
        std::vector<std::pair<double, int>> column(samples.size());
        for (std::size_t f : features) {
            for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {x(samples[i], f), y[samples[i]]};
            std::sort(column.begin(), column.end());
            double l0 = 0.0;
            double l1 = 0.0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                (column[i].second == 1 ? l1 : l0) += 1.0;
                if (column[i].first == column[i + 1].first) continue;
                double const nl = static_cast<double>(i + 1);
                double const nr = n - nl;
                if (nl < static_cast<double>(config.min_samples_leaf) ||
                    nr < static_cast<double>(config.min_samples_leaf)) {
                    continue;
                }
                double const gain = parent - nl * gini(l0, l1) - nr * gini(n0 - l0, n1 - l1);
                double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
                if (!(threshold < column[i + 1].first)) threshold = column[i].first;
                // Features are visited in ascending order and thresholds
                // ascend, so strict improvement keeps the lowest tie.
                if (gain > best.gain) best = Split{true, f, threshold, gain};
            }
        }
        if (best.found && !(best.gain > 1e-12 * std::max(1.0, parent))) best.found = false;
        return best;
    }

    std::int32_t grow(std::vector<std::size_t> samples, std::size_t depth) {
        double n1 = 0.0;
        for (std::size_t s : samples) n1 += y[s];
        double const n0 = static_cast<double>(samples.size()) - n1;
        auto const index = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, n1 / static_cast<double>(samples.size())});

        bool const depth_ok = config.max_depth == 0 || depth < config.max_depth;
        if (n0 == 0.0 || n1 == 0.0 || !depth_ok || samples.size() < 2 * config.min_samples_leaf) {
            return index;
        }
        Split const split = best_split(samples, n0, n1);
        if (!split.found) return index;

        importance[split.feature] += split.gain;
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t s : samples) (x(s, split.feature) <= split.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        std::int32_t const l = grow(std::move(left), depth + 1);
        std::int32_t const r = grow(std::move(right), depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<std::int32_t>(split.feature);
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        node.p1 = 0.0;
        return index;
    }
};

void validate_training(FeatureMatrix const& x, std::span<int const> y) {
    if (x.rows() == 0 || x.cols() == 0) throw DomainError("cannot train a forest on an empty dataset");
    if (y.size() != x.rows()) {
        throw ValidationError("label count " + std::to_string(y.size()) + " differs from row count " +
                              std::to_string(x.rows()));
    }
    for (std::size_t i = 0; i < x.values().size(); ++i) {
        if (!std::isfinite(x.values()[i])) {
            throw ValidationError("non-finite feature at row " + std::to_string(i / x.cols()) +
                                  ", column " + std::to_string(i % x.cols()));
        }
    }
    for (int label : y) {
        if (label != 0 && label != 1) throw ValidationError("labels must be 0 or 1");
    }
}

}  // namespace

ForestModel train_forest(FeatureMatrix const& x, std::span<int const> y, ForestConfig const& config,
                         std::uint64_t seed) {
    validate_training(x, y);
    if (config.n_trees == 0) throw DomainError("forest needs at least one tree");
    if (config.min_samples_leaf == 0) throw DomainError("min_samples_leaf must be positive");

    ForestModel model;
    model.config = config;
    model.seed = seed;
    model.n_features = x.cols();
    model.feature_importances.assign(x.cols(), 0.0);
    model.trees.resize(config.n_trees);

    auto const positives = std::count(y.begin(), y.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == y.size()) {
        double const p1 = positives == 0 ? 0.0 : 1.0;
        for (auto& t : model.trees) t.nodes = {TreeNode{-1, 0.0, -1, -1, p1}};
        model.warning = "training labels contain a single class; model is degenerate";
        return model;
    }

    std::size_t const d = x.cols();
    std::size_t mtry = config.features_per_split;
    if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    mtry = std::clamp<std::size_t>(mtry, 1, d);

    std::vector<std::vector<double>> importances(config.n_trees);
    auto const train_one = [&](std::size_t t) {
        Builder b{x, y, config, mtry, Rng(Rng::derive(seed, t)), {}, std::vector<double>(d, 0.0)};
        std::size_t const n = x.rows();
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = static_cast<std::size_t>(b.rng.below(n));
        b.grow(std::move(sample), 0);
        model.trees[t] = std::move(b.tree);
        importances[t] = std::move(b.importance);
    };

    unsigned workers = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, config.n_trees));
    if (workers <= 1) {
        for (std::size_t t = 0; t < config.n_trees; ++t) train_one(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t t = next++; t < config.n_trees; t = next++) train_one(t);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    failure = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    // Summed in tree order so the result is independent of scheduling.
    for (auto const& imp : importances) {
        for (std::size_t f = 0; f < d; ++f) model.feature_importances[f] += imp[f];
    }
    double const total = std::accumulate(model.feature_importances.begin(), model.feature_importances.end(), 0.0);
    if (total > 0.0) {
        for (double& v : model.feature_importances) v /= total;
    }
    return model;
}

std::array<double, 2> predict_proba(ForestModel const& model, std::span<double const> x) {
    if (x.size() != model.n_features) {
        throw ValidationError("input has " + std::to_string(x.size()) + " features, model expects " +
                              std::to_string(model.n_features));
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    }
    if (model.trees.empty()) throw PreconditionError("forest has no trees");
    double p1 = 0.0;
    for (auto const& t : model.trees) p1 += t.leaf_for(x).p1;
    p1 /= static_cast<double>(model.trees.size());
    return {1.0 - p1, p1};
}

std::vector<double> predict_p1(ForestModel const& model, FeatureMatrix const& x) {
    std::vector<double> out;
    out.reserve(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(predict_proba(model, x.row(i))[1]);
    return out;
}

// ---------------------------------------------------------------------------

std::string ForestModel::serialize() const {
    json j;
    j["format"] = "eileen-forest";
    j["version"] = 1;
    j["seed"] = seed;
    j["n_features"] = n_features;
    j["config"] = {{"n_trees", config.n_trees},
                   {"max_depth", config.max_depth},
                   {"min_samples_leaf", config.min_samples_leaf},
                   {"features_per_split", config.features_per_split}};
    j["feature_importances"] = feature_importances;
    if (warning) j["warning"] = *warning;
    json jtrees = json::array();
    for (auto const& t : trees) {
        json nodes = json::array();
        for (auto const& n : t.nodes) {
            json node = json::array();
            if (n.is_leaf()) {
                node.push_back(n.p1);
            } else {
                node.push_back(n.feature);
                node.push_back(n.threshold);
                node.push_back(n.left);
                node.push_back(n.right);
            }
            nodes.push_back(std::move(node));
        }
        jtrees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(jtrees);
    return j.dump();
}

ForestModel ForestModel::deserialize(std::string const& text) {
    ForestModel m;
    try {
        json const j = json::parse(text);
        if (j.value("format", "") != "eileen-forest" || j.value("version", 0) != 1) {
            throw FormatError("not a version 1 forest artifact");
        }
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_features = j.at("n_features").get<std::size_t>();
        auto const& c = j.at("config");
        m.config.n_trees = c.at("n_trees").get<std::size_t>();
        m.config.max_depth = c.at("max_depth").get<std::size_t>();
        m.config.min_samples_leaf = c.at("min_samples_leaf").get<std::size_t>();
        m.config.features_per_split = c.at("features_per_split").get<std::size_t>();
        m.feature_importances = j.at("feature_importances").get<std::vector<double>>();
        if (j.contains("warning")) m.warning = j.at("warning").get<std::string>();
        for (auto const& jt : j.at("trees")) {
            Tree t;
            for (auto const& jn : jt) {
                if (jn.size() == 1) {
                    t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, jn.at(0).get<double>()});
                } else {
                    t.nodes.push_back(TreeNode{jn.at(0).get<std::int32_t>(), jn.at(1).get<double>(),
                                               jn.at(2).get<std::int32_t>(), jn.at(3).get<std::int32_t>(), 0.0});
                }
            }
            m.trees.push_back(std::move(t));
        }
    } catch (json::exception const& e) {
        throw FormatError(std::string("malformed forest artifact: ") + e.what());
    }
    if (m.feature_importances.size() != m.n_features || m.trees.size() != m.config.n_trees) {
        throw FormatError("forest artifact is inconsistent");
    }
    for (auto const& t : m.trees) {
        auto const n = static_cast<std::int32_t>(t.nodes.size());
        if (n == 0) throw FormatError("forest artifact has an empty tree");
        for (auto const& node : t.nodes) {
            if (!node.is_leaf() && (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n ||
                                    node.feature >= static_cast<std::int32_t>(m.n_features))) {
                throw FormatError("forest artifact has a dangling node reference");
            }
        }
    }
    return m;
}

void ForestModel::save(std::filesystem::path const& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write forest " + path.string());
    out << serialize() << '\n';
}

ForestModel ForestModel::load(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read forest " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str());
}

// ---------------------------------------------------------------------------

namespace {

void check_scores(std::span<double const> scores, std::span<int const> labels) {
    if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
    for (double s : scores) {
        if (std::isnan(s)) throw ValidationError("NaN score");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
    }
}

}  // namespace

double auc(std::span<double const> scores, std::span<int const> labels) {
    check_scores(scores, labels);
    std::size_t const n = scores.size();
    auto const pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    std::size_t const neg = n - pos;
    if (pos == 0 || neg == 0) throw DomainError("AUC needs both positive and negative labels");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Twice the midrank sum keeps everything integral.
    std::uint64_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        std::uint64_t const twice_midrank = (i + 1) + j;  // ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) twice_rank_sum += twice_midrank;
        }
        i = j;
    }
    // U = rank_sum - pos (pos + 1) / 2 counts wins plus half ties.
    std::uint64_t const twice_u = twice_rank_sum - static_cast<std::uint64_t>(pos) * (pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<double const> scores, std::span<int const> labels) {
    check_scores(scores, labels);
    auto const pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    double const neg = static_cast<double>(labels.size()) - pos;
    if (pos == 0 || neg == 0) throw DomainError("ROC needs both positive and negative labels");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? tp : fp) += 1.0;
            ++j;
        }
        out.push_back(RocPoint{fp / neg, tp / pos, scores[order[i]]});
        i = j;
    }
    return out;
}

}  // namespace eileen
