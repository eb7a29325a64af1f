#include "cscdet/pyramid.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

namespace cscdet {

namespace {

constexpr std::array<std::array<int, 2>, kNumDirections> kOffsets{{
    {0, -1}, // N
    {1, -1}, // NE
    {1, 0},  // E
    {1, 1},  // SE
    {0, 1},  // S
    {-1, 1}, // SW
    {-1, 0}, // W
    {-1, -1} // NW
}};

constexpr int kLayoutSchemaVersion = 1;

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

struct Fnv1a
{
    std::uint64_t h = 1469598103934665603ull;

    void add(std::int64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<std::uint64_t>((v >> (8 * i)) & 0xff);
            h *= 1099511628211ull;
        }
    }
};

} // namespace

std::string_view pattern_name(Pattern p)
{
    return p == Pattern::C1S8 ? "C1S8" : "C1S1";
}

Pattern parse_pattern(std::string_view name)
{
    const std::string lower = to_lower(name);
    if (lower == "c1s8")
        return Pattern::C1S8;
    if (lower == "c1s1")
        return Pattern::C1S1;
    throw ConfigError("unknown pattern '" + std::string(name) + "' (expected C1S8 or C1S1)");
}

std::array<int, 2> direction_offset(Direction d)
{
    if (d == Direction::Pooled)
        throw ConfigError("pooled entries have no single direction");
    return kOffsets[static_cast<std::size_t>(d)];
}

int sparse_center_count(int grid_cells)
{
    const int interior = grid_cells - 2;
    return interior > 0 ? (interior + 1) / 2 : 0;
}

FeatureRef FeatureLayout::locate(std::size_t feature_index) const
{
    if (feature_index >= feature_count())
        throw BoundsError("feature index " + std::to_string(feature_index) + " >= " + std::to_string(feature_count()));
    const auto dim = static_cast<std::size_t>(dimension());
    return {feature_index / dim, static_cast<int>(feature_index % dim)};
}

Cell FeatureLayout::neighbor(const LayoutEntry &e)
{
    const auto [dx, dy] = direction_offset(e.direction);
    return {e.center.x + dx * e.center.size, e.center.y + dy * e.center.size, e.center.size};
}

std::array<Cell, kNumDirections> FeatureLayout::surround(const Cell &center)
{
    std::array<Cell, kNumDirections> cells;
    for (std::size_t d = 0; d < kNumDirections; ++d)
        cells[d] = {center.x + kOffsets[d][0] * center.size, center.y + kOffsets[d][1] * center.size, center.size};
    return cells;
}

std::uint64_t FeatureLayout::fingerprint() const
{
    Fnv1a f;
    f.add(config_.model_width);
    f.add(config_.model_height);
    for (int s : config_.scales)
        f.add(s);
    f.add(static_cast<int>(config_.pattern));
    f.add(static_cast<int>(config_.measure));
    f.add(config_.required_histogram_bins());
    for (const LayoutEntry &e : entries_) {
        f.add(e.scale);
        f.add(e.layer);
        f.add(e.center.x);
        f.add(e.center.y);
        f.add(static_cast<int>(e.direction));
        f.add(e.channel);
    }
    return f.h;
}

FeatureLayout build_layout(const LayoutConfig &config)
{
    if (config.scales.empty())
        throw ConfigError("layout needs at least one cell scale");
    if (config.model_width < 1 || config.model_height < 1)
        throw ConfigError("model size must be positive");
    std::set<int> seen;
    for (int s : config.scales) {
        if (s < 2 || s > std::min(config.model_width, config.model_height))
            throw ConfigError("cell scale " + std::to_string(s) + " outside [2, " +
                              std::to_string(std::min(config.model_width, config.model_height)) + "]");
        if (!seen.insert(s).second)
            throw ConfigError("duplicate cell scale " + std::to_string(s));
    }
    if (config.descriptor() == DescriptorKind::Histogram &&
        (config.histogram_bins < 2 || config.histogram_bins > kMaxHistogramBins))
        throw ConfigError("histogram bins must lie in [2, " + std::to_string(kMaxHistogramBins) + "], got " +
                          std::to_string(config.histogram_bins));

    FeatureLayout layout;
    layout.config_ = config;
    auto &entries = layout.entries_;

    for (int scale : config.scales) {
        for (int layer = 0; layer < 2; ++layer) {
            const int offset = layer == 0 ? 0 : scale / 2;
            const int cols = (config.model_width - offset) / scale;
            const int rows = (config.model_height - offset) / scale;
            // Interior cells only, every second one starting from the first interior cell.
            for (int r = 1; r <= rows - 2; r += 2) {
                for (int c = 1; c <= cols - 2; c += 2) {
                    const Cell center{offset + c * scale, offset + r * scale, scale};
                    if (config.pattern == Pattern::C1S8) {
                        for (int d = 0; d < kNumDirections; ++d)
                            for (int ch = 0; ch < kNumChannels; ++ch)
                                entries.push_back({scale, layer, center, static_cast<Direction>(d), ch});
                    } else {
                        for (int ch = 0; ch < kNumChannels; ++ch)
                            entries.push_back({scale, layer, center, Direction::Pooled, ch});
                    }
                }
            }
        }
    }
    return layout;
}

FeatureEvaluator::FeatureEvaluator(const FeatureLayout &layout, const IntegralStack &stack)
    : layout_(&layout), stack_(&stack)
{
    const int need = layout.config().required_histogram_bins();
    if (need > 0 && stack.histogram_bins() != need)
        throw ConfigError("layout needs " + std::to_string(need) + "-bin integral histograms, stack has " +
                          std::to_string(stack.histogram_bins()));
}

bool FeatureEvaluator::window_fits(int x, int y) const
{
    const auto &cfg = layout_->config();
    return x >= 0 && y >= 0 && x + cfg.model_width <= stack_->width() && y + cfg.model_height <= stack_->height();
}

void FeatureEvaluator::entry_contrast(const LayoutEntry &e, int x, int y, ContrastVector &out) const
{
    const Measure measure = layout_->config().measure;
    const int cx = x + e.center.x;
    const int cy = y + e.center.y;
    const int s = e.center.size;

    if (descriptor_for(measure) == DescriptorKind::Gaussian) {
        const GaussianDescriptor center = detail::gaussian_unchecked(*stack_, e.channel, cx, cy, s);
        GaussianDescriptor other;
        if (e.direction == Direction::Pooled) {
            double sum = 0.0, sq = 0.0;
            for (const auto &[dx, dy] : kOffsets) {
                sum += stack_->sum(e.channel).rect_sum_unchecked(cx + dx * s, cy + dy * s, s, s);
                sq += stack_->squared_sum(e.channel).rect_sum_unchecked(cx + dx * s, cy + dy * s, s, s);
            }
            other = detail::gaussian_from_sums(sum, sq, 8.0 * s * s);
        } else {
            const auto &[dx, dy] = kOffsets[static_cast<std::size_t>(e.direction)];
            other = detail::gaussian_unchecked(*stack_, e.channel, cx + dx * s, cy + dy * s, s);
        }
        out = gaussian_contrast(center, other, measure);
        return;
    }

    const IntegralHistogram &hist = stack_->histogram(e.channel);
    const HistogramDescriptor center = detail::histogram_unchecked(hist, cx, cy, s);
    HistogramDescriptor other;
    if (e.direction == Direction::Pooled) {
        const auto bins = static_cast<std::size_t>(hist.bins());
        std::array<double, kMaxHistogramBins> total{}, part{};
        for (const auto &[dx, dy] : kOffsets) {
            hist.rect_masses_unchecked(cx + dx * s, cy + dy * s, s, s, std::span(part.data(), bins));
            for (std::size_t k = 0; k < bins; ++k)
                total[k] += part[k];
        }
        other = HistogramDescriptor::from_masses(std::span<const double>(total.data(), bins));
    } else {
        const auto &[dx, dy] = kOffsets[static_cast<std::size_t>(e.direction)];
        other = detail::histogram_unchecked(hist, cx + dx * s, cy + dy * s, s);
    }
    out = histogram_contrast(center, other, measure);
}

float FeatureEvaluator::feature(std::size_t feature_index, int x, int y) const
{
    const FeatureRef ref = layout_->locate(feature_index);
    ContrastVector cv;
    entry_contrast(layout_->entries()[ref.entry], x, y, cv);
    return static_cast<float>(cv[ref.component]);
}

void FeatureEvaluator::extract(int x, int y, std::span<float> out) const
{
    if (!window_fits(x, y))
        throw BoundsError("model window at (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                          std::to_string(stack_->width()) + "x" + std::to_string(stack_->height()) + " stack");
    if (out.size() != layout_->feature_count())
        throw ShapeError("feature buffer has " + std::to_string(out.size()) + " slots, layout needs " +
                         std::to_string(layout_->feature_count()));
    const int dim = layout_->dimension();
    ContrastVector cv;
    std::size_t k = 0;
    for (const LayoutEntry &e : layout_->entries()) {
        entry_contrast(e, x, y, cv);
        for (int c = 0; c < dim; ++c)
            out[k++] = static_cast<float>(cv[c]);
    }
}

FeatureVector extract_features(const IntegralStack &window_stack, const FeatureLayout &layout)
{
    const auto &cfg = layout.config();
    if (window_stack.width() != cfg.model_width || window_stack.height() != cfg.model_height)
        throw ShapeError("window is " + std::to_string(window_stack.width()) + "x" +
                         std::to_string(window_stack.height()) + ", model is " + std::to_string(cfg.model_width) +
                         "x" + std::to_string(cfg.model_height));
    return extract_features_at(window_stack, layout, 0, 0);
}

FeatureVector extract_features_at(const IntegralStack &stack, const FeatureLayout &layout, int x, int y)
{
    FeatureEvaluator eval(layout, stack);
    FeatureVector v(layout.feature_count());
    eval.extract(x, y, v);
    return v;
}

PlaneD contrast_map(const PlaneF &gray, int cell_size)
{
    if (cell_size < 1)
        throw ConfigError("contrast_map: cell size must be positive");
    PlaneD out(gray.width(), gray.height(), 0.0);
    const int cols = gray.width() / cell_size;
    const int rows = gray.height() / cell_size;
    if (cols < 3 || rows < 3)
        return out;

    const IntegralPlane integral = build_integral(gray);
    const double area = static_cast<double>(cell_size) * cell_size;
    for (int r = 1; r < rows - 1; ++r)
        for (int c = 1; c < cols - 1; ++c) {
            const int x = c * cell_size;
            const int y = r * cell_size;
            const double center = integral.rect_sum_unchecked(x, y, cell_size, cell_size) / area;
            const double block =
                integral.rect_sum_unchecked(x - cell_size, y - cell_size, 3 * cell_size, 3 * cell_size);
            const double surround = (block - center * area) / (8.0 * area);
            const double contrast = std::abs(center - surround);
            for (int yy = y; yy < y + cell_size; ++yy)
                for (int xx = x; xx < x + cell_size; ++xx)
                    out.at(xx, yy) = contrast;
        }
    return out;
}

nlohmann::json layout_to_json(const FeatureLayout &layout)
{
    const auto &cfg = layout.config();
    char fp[17];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(layout.fingerprint()));
    return {
        {"schema", "cscdet-layout"},
        {"version", kLayoutSchemaVersion},
        {"model_width", cfg.model_width},
        {"model_height", cfg.model_height},
        {"scales", cfg.scales},
        {"pattern", std::string(pattern_name(cfg.pattern))},
        {"descriptor", cfg.descriptor() == DescriptorKind::Gaussian ? "gaussian" : "histogram"},
        {"histogram_bins", cfg.histogram_bins},
        {"measure", std::string(measure_name(cfg.measure))},
        {"entry_count", layout.entry_count()},
        {"fingerprint", fp},
    };
}

FeatureLayout layout_from_json(const nlohmann::json &j)
{
    try {
        if (j.at("schema").get<std::string>() != "cscdet-layout")
            throw FormatError("not a layout record");
        const int version = j.at("version").get<int>();
        if (version != kLayoutSchemaVersion)
            throw FormatError("unsupported layout schema version " + std::to_string(version));

        LayoutConfig cfg;
        cfg.model_width = j.at("model_width").get<int>();
        cfg.model_height = j.at("model_height").get<int>();
        cfg.scales = j.at("scales").get<std::vector<int>>();
        cfg.pattern = parse_pattern(j.at("pattern").get<std::string>());
        cfg.measure = parse_measure(j.at("measure").get<std::string>());
        cfg.histogram_bins = j.at("histogram_bins").get<int>();
        FeatureLayout layout = build_layout(cfg);

        const auto count = j.at("entry_count").get<std::size_t>();
        char fp[17];
        std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(layout.fingerprint()));
        if (count != layout.entry_count() || j.at("fingerprint").get<std::string>() != fp)
            throw LayoutMismatchError("stored layout (" + std::to_string(count) + " entries, fingerprint " +
                                      j.at("fingerprint").get<std::string>() + ") does not match rebuilt layout (" +
                                      std::to_string(layout.entry_count()) + " entries, fingerprint " + fp + ")");
        return layout;
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("malformed layout record: ") + e.what());
    }
}

} // namespace cscdet
