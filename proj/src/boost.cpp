#include "cscdet/boost.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace cscdet {

void FeatureMatrix::append(std::span<const float> values)
{
    if (cols_ == 0)
        cols_ = values.size();
    if (values.size() != cols_)
        throw ShapeError("feature vector has " + std::to_string(values.size()) + " values, matrix has " +
                         std::to_string(cols_) + " columns");
    data_.insert(data_.end(), values.begin(), values.end());
}

void FeatureMatrix::append(const FeatureMatrix &other)
{
    if (other.empty())
        return;
    if (cols_ == 0)
        cols_ = other.cols_;
    if (other.cols_ != cols_)
        throw ShapeError("cannot append a matrix with " + std::to_string(other.cols_) + " columns to one with " +
                         std::to_string(cols_));
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

float WeakTree::weight() const
{
    float w = 0.f;
    for (float l : leaves)
        w = std::max(w, std::abs(l));
    return w;
}

StrongClassifier::StrongClassifier(FeatureLayout layout, std::vector<WeakTree> trees, double score_offset)
    : layout_(std::move(layout)), trees_(std::move(trees)), score_offset_(score_offset)
{
    if (trees_.size() > static_cast<std::size_t>(kMaxTrees))
        throw ConfigError("classifier holds " + std::to_string(trees_.size()) + " trees, limit is " +
                          std::to_string(kMaxTrees));
    for (const WeakTree &t : trees_) {
        for (const SplitNode &n : t.nodes)
            if (n.feature >= layout_.feature_count())
                throw FormatError("tree splits on feature " + std::to_string(n.feature) + ", layout has " +
                                  std::to_string(layout_.feature_count()));
        for (float l : t.leaves)
            if (!std::isfinite(l))
                throw FormatError("tree has a non-finite leaf score");
    }
}

double StrongClassifier::score(std::span<const float> features) const
{
    if (features.size() != layout_.feature_count())
        throw ShapeError("feature vector has " + std::to_string(features.size()) + " values, classifier expects " +
                         std::to_string(layout_.feature_count()));
    return score_with([&](std::uint32_t f) { return features[f]; });
}

std::vector<float> quantile_thresholds(std::vector<float> values, int bins)
{
    std::vector<float> edges;
    if (values.empty())
        return edges;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    edges.reserve(static_cast<std::size_t>(bins));
    for (int k = 1; k < bins; ++k) {
        const std::size_t idx = std::min(n - 1, static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins));
        if (edges.empty() || values[idx] > edges.back())
            edges.push_back(values[idx]);
    }
    return edges;
}

namespace {

// Per-feature threshold codes: code(x) = number of thresholds < x, so
// "x <= thresholds[j]" is exactly "code <= j".
struct QuantizedSamples
{
    std::size_t samples = 0;
    std::size_t features = 0;
    std::vector<std::vector<float>> thresholds;
    std::vector<std::uint8_t> codes; // feature-major

    const std::uint8_t *column(std::size_t f) const { return codes.data() + f * samples; }
};

QuantizedSamples quantize(const FeatureMatrix &pos, const FeatureMatrix &neg, int bins)
{
    QuantizedSamples q;
    q.samples = pos.rows() + neg.rows();
    q.features = pos.cols();
    q.thresholds.resize(q.features);
    q.codes.resize(q.features * q.samples);

    const auto nf = static_cast<std::int64_t>(q.features);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t fi = 0; fi < nf; ++fi) {
        const auto f = static_cast<std::size_t>(fi);
        std::vector<float> column(q.samples);
        for (std::size_t i = 0; i < pos.rows(); ++i)
            column[i] = pos.at(i, f);
        for (std::size_t i = 0; i < neg.rows(); ++i)
            column[pos.rows() + i] = neg.at(i, f);
        std::vector<float> edges = quantile_thresholds(column, bins);
        std::uint8_t *codes = q.codes.data() + f * q.samples;
        for (std::size_t i = 0; i < q.samples; ++i)
            codes[i] = static_cast<std::uint8_t>(std::lower_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
        q.thresholds[f] = std::move(edges);
    }
    return q;
}

struct Split
{
    double error = std::numeric_limits<double>::infinity();
    double balance = -1.0; // lighter side's weight
    std::uint32_t feature = 0;
    int code = 0;
    bool valid = false;
};

bool better(const Split &a, const Split &b, double tol)
{
    if (!b.valid)
        return a.valid;
    if (a.error < b.error - tol)
        return true;
    if (a.error > b.error + tol)
        return false;
    // Equal error: prefer the split that divides the weight more evenly.
    return a.balance > b.balance + tol;
}

Split best_split(const QuantizedSamples &q, std::span<const std::uint32_t> idx, const std::vector<double> &w,
                 const std::vector<std::int8_t> &y)
{
    double total_pos = 0.0, total_neg = 0.0;
    for (std::uint32_t i : idx)
        (y[i] > 0 ? total_pos : total_neg) += w[i];
    const double tol = 1e-12 * (total_pos + total_neg);

    std::vector<Split> per_feature(q.features);
    const auto nf = static_cast<std::int64_t>(q.features);
#pragma omp parallel
    {
        std::array<double, 256> hp{}, hn{};
#pragma omp for schedule(dynamic, 256)
        for (std::int64_t fi = 0; fi < nf; ++fi) {
            const auto f = static_cast<std::size_t>(fi);
            const std::size_t edges = q.thresholds[f].size();
            if (edges == 0)
                continue;
            std::fill_n(hp.begin(), edges + 1, 0.0);
            std::fill_n(hn.begin(), edges + 1, 0.0);
            const std::uint8_t *codes = q.column(f);
            for (std::uint32_t i : idx)
                (y[i] > 0 ? hp : hn)[codes[i]] += w[i];

            Split best;
            double lp = 0.0, ln = 0.0;
            for (std::size_t j = 0; j < edges; ++j) {
                lp += hp[j];
                ln += hn[j];
                const double rp = total_pos - lp, rn = total_neg - ln;
                Split s;
                s.error = std::min(lp, ln) + std::min(rp, rn);
                s.balance = std::min(lp + ln, rp + rn);
                s.feature = static_cast<std::uint32_t>(f);
                s.code = static_cast<int>(j);
                s.valid = true;
                if (better(s, best, tol))
                    best = s;
            }
            per_feature[f] = best;
        }
    }

    Split best;
    for (const Split &s : per_feature)
        if (better(s, best, tol))
            best = s;
    return best;
}

SplitNode to_node(const QuantizedSamples &q, const Split &s)
{
    return {s.feature, q.thresholds[s.feature][static_cast<std::size_t>(s.code)]};
}

bool goes_left(const QuantizedSamples &q, const Split &s, std::uint32_t i)
{
    return q.column(s.feature)[i] <= s.code;
}

struct FittedTree
{
    WeakTree tree;           // leaves hold +-1 until scaled by alpha
    std::vector<int> leaf;   // per sample
    double error = 0.0;
};

int sign_of(double p, double n, int fallback)
{
    if (p > n)
        return 1;
    if (n > p)
        return -1;
    return fallback;
}

FittedTree fit_tree(const QuantizedSamples &q, const std::vector<double> &w, const std::vector<std::int8_t> &y,
                    int depth)
{
    std::vector<std::uint32_t> all(q.samples);
    std::iota(all.begin(), all.end(), 0u);
    const Split root = best_split(q, all, w, y);
    if (!root.valid)
        throw TrainingError("no splittable feature (all features constant across samples?)");

    std::vector<std::uint32_t> left, right;
    for (std::uint32_t i : all)
        (goes_left(q, root, i) ? left : right).push_back(i);

    FittedTree ft;
    ft.tree.nodes = {to_node(q, root), to_node(q, root), to_node(q, root)};
    std::array<Split, 2> child{root, root};
    if (depth >= 2) {
        if (!left.empty()) {
            const Split s = best_split(q, left, w, y);
            if (s.valid)
                child[0] = s;
        }
        if (!right.empty()) {
            const Split s = best_split(q, right, w, y);
            if (s.valid)
                child[1] = s;
        }
        ft.tree.nodes[1] = to_node(q, child[0]);
        ft.tree.nodes[2] = to_node(q, child[1]);
    }

    ft.leaf.assign(q.samples, 0);
    std::array<double, 4> lp{}, ln{};
    std::array<double, 2> side_p{}, side_n{};
    for (std::uint32_t i = 0; i < q.samples; ++i) {
        const bool l = goes_left(q, root, i);
        int leaf = l ? 0 : 2;
        if (depth >= 2)
            leaf += goes_left(q, child[l ? 0 : 1], i) ? 0 : 1;
        ft.leaf[i] = leaf;
        (y[i] > 0 ? lp : ln)[static_cast<std::size_t>(leaf)] += w[i];
        (y[i] > 0 ? side_p : side_n)[l ? 0 : 1] += w[i];
    }
    double tp = 0.0, tn = 0.0;
    for (std::size_t i = 0; i < q.samples; ++i)
        (y[i] > 0 ? tp : tn) += w[i];
    const int root_sign = sign_of(tp, tn, -1);

    if (depth >= 2) {
        for (std::size_t l = 0; l < 4; ++l) {
            const int parent = sign_of(side_p[l / 2], side_n[l / 2], root_sign);
            ft.tree.leaves[l] = static_cast<float>(sign_of(lp[l], ln[l], parent));
            ft.error += std::min(lp[l], ln[l]);
        }
    } else {
        for (std::size_t s = 0; s < 2; ++s) {
            const float v = static_cast<float>(sign_of(side_p[s], side_n[s], root_sign));
            ft.tree.leaves[2 * s] = ft.tree.leaves[2 * s + 1] = v;
            ft.error += std::min(side_p[s], side_n[s]);
        }
        for (int &l : ft.leaf)
            l = l < 2 ? 0 : 2;
    }
    ft.error /= tp + tn;
    return ft;
}

} // namespace

StrongClassifier train_adaboost(const FeatureMatrix &positives, const FeatureMatrix &negatives,
                                const FeatureLayout &layout, const BoostConfig &config, TrainingReport *report)
{
    if (positives.rows() == 0 || negatives.rows() == 0)
        throw TrainingError("AdaBoost needs samples of both classes (got " + std::to_string(positives.rows()) +
                            " positives, " + std::to_string(negatives.rows()) + " negatives)");
    if (positives.cols() != layout.feature_count() || negatives.cols() != layout.feature_count())
        throw TrainingError("sample length (" + std::to_string(positives.cols()) + "/" +
                            std::to_string(negatives.cols()) + ") differs from layout feature count " +
                            std::to_string(layout.feature_count()));
    if (config.trees < 1 || config.trees > kMaxTrees)
        throw ConfigError("tree count must lie in [1, " + std::to_string(kMaxTrees) + "]");
    if (config.depth != 1 && config.depth != 2)
        throw ConfigError("tree depth must be 1 or 2");
    if (config.threshold_bins < 2 || config.threshold_bins > 256)
        throw ConfigError("threshold bins must lie in [2, 256]");
    if (positives.rows() + negatives.rows() > std::numeric_limits<std::uint32_t>::max())
        throw TrainingError("too many samples");

    const QuantizedSamples q = quantize(positives, negatives, config.threshold_bins);
    const std::size_t n = q.samples;
    std::vector<std::int8_t> y(n, -1);
    std::fill_n(y.begin(), positives.rows(), std::int8_t{1});

    std::vector<double> w0(n);
    for (std::size_t i = 0; i < n; ++i)
        w0[i] = y[i] > 0 ? 0.5 / static_cast<double>(positives.rows()) : 0.5 / static_cast<double>(negatives.rows());
    std::vector<double> w = w0;
    std::vector<double> margin(n, 0.0);

    TrainingReport local;
    TrainingReport &rep = report ? *report : local;
    rep = {};
    std::vector<WeakTree> trees;

    constexpr double kMinError = 1e-10;
    for (int t = 0; t < config.trees; ++t) {
        FittedTree ft = fit_tree(q, w, y, config.depth);
        if (ft.error >= 0.5 - 1e-12) {
            rep.stop_reason = "best weak learner has weighted error >= 0.5";
            break;
        }
        const double eps = std::max(ft.error, kMinError);
        const double alpha = 0.5 * std::log((1.0 - eps) / eps);
        for (float &l : ft.tree.leaves)
            l = static_cast<float>(l * alpha);

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double h = ft.tree.leaves[static_cast<std::size_t>(ft.leaf[i])];
            margin[i] += h;
            w[i] *= std::exp(-y[i] * h);
            z += w[i];
        }
        for (double &wi : w)
            wi /= z;

        std::size_t wrong = 0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((margin[i] > 0.0) != (y[i] > 0))
                ++wrong;
            loss += w0[i] * std::exp(-y[i] * margin[i]);
        }
        rep.weighted_errors.push_back(ft.error);
        rep.training_errors.push_back(static_cast<double>(wrong) / static_cast<double>(n));
        rep.exp_losses.push_back(loss);
        trees.push_back(ft.tree);

        if (ft.error <= kMinError) {
            rep.stop_reason = "perfect weak learner";
            break;
        }
    }
    if (rep.stop_reason.empty())
        rep.stop_reason = "reached tree limit";
    if (trees.empty())
        throw TrainingError("no weak learner beat chance on the training set");
    return StrongClassifier(layout, std::move(trees));
}

WeightMaps emit_weight_maps(const StrongClassifier &clf, std::size_t top)
{
    const FeatureLayout &layout = clf.layout();
    std::vector<double> weight(layout.feature_count(), 0.0);
    for (const WeakTree &t : clf.trees()) {
        const double w = t.weight();
        for (const SplitNode &n : t.nodes)
            weight[n.feature] += w;
    }

    std::vector<std::uint32_t> order;
    for (std::uint32_t f = 0; f < weight.size(); ++f)
        if (weight[f] > 0.0)
            order.push_back(f);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return weight[a] > weight[b]; });
    if (order.size() > top)
        order.resize(top);

    WeightMaps maps;
    maps.cell_weights = PlaneD(layout.config().model_width, layout.config().model_height, 0.0);
    auto paint = [&](const Cell &c, double w) {
        for (int y = c.y; y < c.y + c.size; ++y)
            for (int x = c.x; x < c.x + c.size; ++x)
                maps.cell_weights.at(x, y) += w;
    };
    for (std::uint32_t f : order) {
        const LayoutEntry &e = layout.entries()[layout.locate(f).entry];
        const double w = weight[f];
        paint(e.center, w);
        if (e.direction == Direction::Pooled) {
            for (const Cell &c : FeatureLayout::surround(e.center))
                paint(c, w);
        } else {
            paint(FeatureLayout::neighbor(e), w);
        }
        maps.channel_totals[static_cast<std::size_t>(e.channel)] += w;
        maps.top_features.emplace_back(f, w);
    }
    return maps;
}

void write_weight_maps_csv(const WeightMaps &maps, const std::filesystem::path &cell_csv,
                           const std::filesystem::path &channel_csv, std::string_view header)
{
    write_plane_csv(maps.cell_weights, cell_csv, header);
    std::ofstream out(channel_csv);
    if (!out)
        throw IoError("cannot write " + channel_csv.string());
    if (!header.empty())
        out << header << '\n';
    out << "channel,weight\n";
    out.precision(12);
    for (std::size_t c = 0; c < maps.channel_totals.size(); ++c)
        out << channel_name(static_cast<ChannelId>(c)) << ',' << maps.channel_totals[c] << '\n';
}

namespace {

constexpr int kModelMajor = 1;
constexpr int kModelMinor = 0;

} // namespace

nlohmann::json classifier_to_json(const StrongClassifier &clf, const nlohmann::json &meta)
{
    nlohmann::json trees = nlohmann::json::array();
    for (const WeakTree &t : clf.trees()) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const SplitNode &n : t.nodes)
            nodes.push_back({n.feature, n.threshold});
        trees.push_back({{"nodes", nodes}, {"leaves", t.leaves}});
    }
    nlohmann::json j = {
        {"schema", "cscdet-model"},
        {"version", std::to_string(kModelMajor) + "." + std::to_string(kModelMinor)},
        {"layout", layout_to_json(clf.layout())},
        {"score_offset", clf.score_offset()},
        {"trees", trees},
    };
    if (!meta.is_null())
        j["meta"] = meta;
    return j;
}

StrongClassifier classifier_from_json(const nlohmann::json &j)
{
    try {
        if (j.at("schema").get<std::string>() != "cscdet-model")
            throw FormatError("not a cscdet model");
        const std::string version = j.at("version").get<std::string>();
        const int major = std::stoi(version.substr(0, version.find('.')));
        if (major != kModelMajor)
            throw FormatError("unsupported model major version " + version);

        FeatureLayout layout = layout_from_json(j.at("layout"));
        std::vector<WeakTree> trees;
        for (const auto &jt : j.at("trees")) {
            WeakTree t;
            const auto &nodes = jt.at("nodes");
            if (nodes.size() != 3)
                throw FormatError("tree must have 3 split nodes");
            for (std::size_t k = 0; k < 3; ++k)
                t.nodes[k] = {nodes[k].at(0).get<std::uint32_t>(), nodes[k].at(1).get<float>()};
            t.leaves = jt.at("leaves").get<std::array<float, 4>>();
            trees.push_back(t);
        }
        return StrongClassifier(std::move(layout), std::move(trees), j.value("score_offset", 0.0));
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("malformed model: ") + e.what());
    } catch (const std::invalid_argument &e) {
        if (dynamic_cast<const ConfigError *>(&e))
            throw;
        throw FormatError(std::string("malformed model version: ") + e.what());
    }
}

void save_classifier(const StrongClassifier &clf, const std::filesystem::path &path, const nlohmann::json &meta)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write model " + path.string());
    out << classifier_to_json(clf, meta).dump(1) << '\n';
}

StrongClassifier load_classifier(const std::filesystem::path &path, nlohmann::json *meta)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read model " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw FormatError("model " + path.string() + " is not valid JSON: " + e.what());
    }
    if (meta)
        *meta = j.value("meta", nlohmann::json());
    return classifier_from_json(j);
}

} // namespace cscdet
