#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eileen {

/// Dense row-major feature matrix.
class FeatureMatrix {
  public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
    FeatureMatrix(std::size_t cols, std::vector<double> values);

    void add_row(std::span<double const> row);

    [[nodiscard]] std::size_t rows() const noexcept { return cols_ == 0 ? 0 : values_.size() / cols_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::span<double const> row(std::size_t i) const {
        return {values_.data() + i * cols_, cols_};
    }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    [[nodiscard]] std::span<double const> values() const noexcept { return values_; }

  private:
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

struct ForestConfig {
    std::size_t n_trees = 500;
    /// 0 means unlimited.
    std::size_t max_depth = 0;
    std::size_t min_samples_leaf = 1;
    /// 0 means ceil(sqrt(n_features)).
    std::size_t features_per_split = 0;
    /// Worker threads for training; 0 uses the hardware concurrency. Output
    /// does not depend on this value.
    unsigned threads = 0;

    friend bool operator==(ForestConfig const&, ForestConfig const&) = default;
};

/// Internal node when feature >= 0 (x[feature] <= threshold goes left),
/// leaf otherwise with class distribution (1 - p1, p1).
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double p1 = 0.0;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }

    friend bool operator==(TreeNode const&, TreeNode const&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] TreeNode const& leaf_for(std::span<double const> x) const;
    [[nodiscard]] std::size_t depth() const;

    friend bool operator==(Tree const&, Tree const&) = default;
};

struct ForestModel {
    ForestConfig config;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::vector<Tree> trees;
    std::vector<double> feature_importances;
    /// Set when training saw a single class.
    std::optional<std::string> warning;

    [[nodiscard]] std::string serialize() const;
    static ForestModel deserialize(std::string const& text);
    void save(std::filesystem::path const& path) const;
    static ForestModel load(std::filesystem::path const& path);

    friend bool operator==(ForestModel const&, ForestModel const&) = default;
};

/// Bootstrap-bagged Gini trees, one derived RNG stream per tree. Split ties go
/// to the lowest feature index, then the lowest threshold. A single-class y
/// gives a degenerate model whose importances are all zero.
/// Throws DomainError on empty input, ValidationError on non-finite features
/// or labels other than 0/1.
ForestModel train_forest(FeatureMatrix const& x, std::span<int const> y, ForestConfig const& config,
                         std::uint64_t seed);

/// (p0, p1) averaged over the trees' leaves. Throws ValidationError on a
/// dimension mismatch or non-finite input.
std::array<double, 2> predict_proba(ForestModel const& model, std::span<double const> x);
std::vector<double> predict_p1(ForestModel const& model, FeatureMatrix const& x);

/// Probability that a random positive outscores a random negative, ties
/// counted one half (midrank form). Throws DomainError when a class is absent.
double auc(std::span<double const> scores, std::span<int const> labels);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

/// ROC points from (0, 0) to (1, 1), one per distinct score.
std::vector<RocPoint> roc_curve(std::span<double const> scores, std::span<int const> labels);

}  // namespace eileen
