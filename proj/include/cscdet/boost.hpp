#pragma once

#include "cscdet/pyramid.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cscdet {

/// Row-major samples x features matrix.
class FeatureMatrix
{
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

    std::size_t rows() const { return cols_ ? data_.size() / cols_ : 0; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    float at(std::size_t i, std::size_t f) const { return data_[i * cols_ + f]; }

    /// ShapeError if the vector length differs from cols().
    void append(std::span<const float> values);
    void append(const FeatureMatrix &other);
    void reserve_rows(std::size_t n) { data_.reserve(n * cols_); }

private:
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

/// Split node: samples with feature value <= threshold go left.
struct SplitNode
{
    std::uint32_t feature = 0;
    float threshold = 0.f;

    bool operator==(const SplitNode &) const = default;
};

/// Depth-2 decision tree: root, left child, right child; leaves ordered
/// (left-left, left-right, right-left, right-right). A depth-1 stump repeats
/// the root split in both children and duplicates its leaves.
struct WeakTree
{
    std::array<SplitNode, 3> nodes{};
    std::array<float, 4> leaves{};

    template <typename FeatureAt>
    float evaluate(FeatureAt &&feature_at) const
    {
        const bool left = feature_at(nodes[0].feature) <= nodes[0].threshold;
        const SplitNode &child = nodes[left ? 1 : 2];
        const bool child_left = feature_at(child.feature) <= child.threshold;
        return leaves[(left ? 0 : 2) + (child_left ? 0 : 1)];
    }

    float evaluate(std::span<const float> features) const
    {
        return evaluate([&](std::uint32_t f) { return features[f]; });
    }

    /// Magnitude of the tree's vote (the AdaBoost alpha).
    float weight() const;

    bool operator==(const WeakTree &) const = default;
};

inline constexpr int kMaxTrees = 4096;

class StrongClassifier
{
public:
    StrongClassifier() = default;
    StrongClassifier(FeatureLayout layout, std::vector<WeakTree> trees, double score_offset = 0.0);

    const FeatureLayout &layout() const { return layout_; }
    const std::vector<WeakTree> &trees() const { return trees_; }
    double score_offset() const { return score_offset_; }

    /// Sum of tree votes plus the offset.
    double score(std::span<const float> features) const;

    template <typename FeatureAt>
    double score_with(FeatureAt &&feature_at) const
    {
        double s = score_offset_;
        for (const WeakTree &t : trees_)
            s += t.evaluate(feature_at);
        return s;
    }

    bool operator==(const StrongClassifier &) const = default;

private:
    FeatureLayout layout_;
    std::vector<WeakTree> trees_;
    double score_offset_ = 0.0;
};

struct BoostConfig
{
    int trees = kMaxTrees;
    /// 1 (stumps) or 2.
    int depth = 2;
    /// Quantile threshold candidates per feature.
    int threshold_bins = 256;
};

struct TrainingReport
{
    /// Weighted error of each accepted tree (all < 0.5).
    std::vector<double> weighted_errors;
    /// Unweighted 0-1 training error after each accepted tree.
    std::vector<double> training_errors;
    /// Exponential loss sum_i w0_i exp(-y_i F(x_i)) after each accepted tree.
    std::vector<double> exp_losses;
    std::string stop_reason;
};

/// Discrete AdaBoost with depth-1/2 trees. Class weights start balanced (half the
/// mass on each class). Stops after `trees` rounds, when the best tree reaches
/// weighted error >= 0.5, or after a perfect tree.
/// Throws TrainingError on empty classes or inconsistent sample lengths.
StrongClassifier train_adaboost(const FeatureMatrix &positives, const FeatureMatrix &negatives,
                                const FeatureLayout &layout, const BoostConfig &config,
                                TrainingReport *report = nullptr);

/// Per-feature quantile thresholds: sorted, unique, at most bins - 1 values.
std::vector<float> quantile_thresholds(std::vector<float> values, int bins);

/// Weight-map introspection of a trained classifier.
struct WeightMaps
{
    /// Model-sized plane; each of the top features adds its weight over every pixel of the cells it covers.
    PlaneD cell_weights;
    /// Accumulated top-feature weight per channel.
    std::array<double, kNumChannels> channel_totals{};
    /// (feature index, accumulated weight) of the selected features, weight-descending.
    std::vector<std::pair<std::uint32_t, double>> top_features;
};

/// Feature weight = sum of |vote| of every tree node that splits on it; the
/// `top` heaviest features (ties by index) are accumulated.
WeightMaps emit_weight_maps(const StrongClassifier &clf, std::size_t top = 100);

void write_weight_maps_csv(const WeightMaps &maps, const std::filesystem::path &cell_csv,
                           const std::filesystem::path &channel_csv, std::string_view header = {});

/// Model persistence: versioned JSON holding the layout header, trees and any extra
/// metadata (e.g. the resolved pipeline config) the caller passes in `meta`.
nlohmann::json classifier_to_json(const StrongClassifier &clf, const nlohmann::json &meta = {});
StrongClassifier classifier_from_json(const nlohmann::json &j);

void save_classifier(const StrongClassifier &clf, const std::filesystem::path &path, const nlohmann::json &meta = {});
StrongClassifier load_classifier(const std::filesystem::path &path, nlohmann::json *meta = nullptr);

} // namespace cscdet
