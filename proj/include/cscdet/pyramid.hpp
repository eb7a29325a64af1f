#pragma once

#include "cscdet/contrasts.hpp"
#include "cscdet/descriptors.hpp"
#include "cscdet/integrals.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cscdet {

inline constexpr int kModelWidth = 60;
inline constexpr int kModelHeight = 120;

enum class Pattern { C1S8, C1S1 };

std::string_view pattern_name(Pattern p);
Pattern parse_pattern(std::string_view name);

/// Neighbour directions in frozen order, clockwise from north. Pooled marks a C1S1 entry.
enum class Direction : int { N = 0, NE, E, SE, S, SW, W, NW, Pooled };

inline constexpr int kNumDirections = 8;

/// Cell-unit offset of a direction (x right, y down).
std::array<int, 2> direction_offset(Direction d);

struct LayoutConfig
{
    std::vector<int> scales{4, 6, 8, 10};
    Pattern pattern = Pattern::C1S8;
    Measure measure = Measure::W2;
    /// Only used by histogram measures.
    int histogram_bins = 15;
    int model_width = kModelWidth;
    int model_height = kModelHeight;

    DescriptorKind descriptor() const { return descriptor_for(measure); }
    /// Bins the integral stack must carry: histogram_bins for histogram measures, else 0.
    int required_histogram_bins() const { return descriptor() == DescriptorKind::Histogram ? histogram_bins : 0; }

    bool operator==(const LayoutConfig &) const = default;
};

/// One center-surround pair on one channel. Cells are in model-window coordinates.
struct LayoutEntry
{
    int scale = 0;
    /// 0 = base grid anchored at (0,0), 1 = grid shifted by half a cell.
    int layer = 0;
    Cell center;
    Direction direction = Direction::N;
    int channel = 0;

    bool operator==(const LayoutEntry &) const = default;
};

/// Flat feature index -> (entry, component) with components contiguous per entry.
struct FeatureRef
{
    std::size_t entry = 0;
    int component = 0;
};

class FeatureLayout
{
public:
    const LayoutConfig &config() const { return config_; }
    const std::vector<LayoutEntry> &entries() const { return entries_; }
    std::size_t entry_count() const { return entries_.size(); }
    /// Contrast components per entry.
    int dimension() const { return measure_dimension(config_.measure); }
    std::size_t feature_count() const { return entries_.size() * static_cast<std::size_t>(dimension()); }

    FeatureRef locate(std::size_t feature_index) const;
    std::size_t feature_index(std::size_t entry, int component) const
    {
        return entry * static_cast<std::size_t>(dimension()) + static_cast<std::size_t>(component);
    }

    /// The cell an entry contrasts against (the single directed neighbour). Not valid for Pooled.
    static Cell neighbor(const LayoutEntry &e);
    /// The 8 neighbours of a center cell in direction order.
    static std::array<Cell, kNumDirections> surround(const Cell &center);

    /// FNV-1a over the config and every entry; equal layouts have equal fingerprints.
    std::uint64_t fingerprint() const;

    bool operator==(const FeatureLayout &) const = default;

private:
    friend FeatureLayout build_layout(const LayoutConfig &);

    LayoutConfig config_;
    std::vector<LayoutEntry> entries_;
};

/// Enumerates scale -> layer -> row-major center -> direction -> channel.
/// Throws ConfigError for empty/oversized scales or incompatible histogram settings.
FeatureLayout build_layout(const LayoutConfig &config);

/// Number of center cells along one axis of a layer grid: interior cells stepped by 2.
int sparse_center_count(int grid_cells);

using FeatureVector = std::vector<float>;

/// Computes layout features for model-sized windows anywhere inside an integral stack.
class FeatureEvaluator
{
public:
    /// Throws ConfigError if the stack lacks histograms the layout needs.
    FeatureEvaluator(const FeatureLayout &layout, const IntegralStack &stack);

    const FeatureLayout &layout() const { return *layout_; }
    const IntegralStack &stack() const { return *stack_; }

    /// True if a model window with top-left (x, y) lies inside the stack.
    bool window_fits(int x, int y) const;

    /// Unchecked single feature for the window at (x, y).
    float feature(std::size_t feature_index, int x, int y) const;

    /// Every feature of the window at (x, y); throws BoundsError if it does not fit.
    void extract(int x, int y, std::span<float> out) const;

private:
    void entry_contrast(const LayoutEntry &e, int x, int y, ContrastVector &out) const;

    const FeatureLayout *layout_;
    const IntegralStack *stack_;
};

/// Features of a stack that is exactly model-sized (ShapeError otherwise).
FeatureVector extract_features(const IntegralStack &window_stack, const FeatureLayout &layout);

/// Features of the model window at (x, y) inside a larger stack.
FeatureVector extract_features_at(const IntegralStack &stack, const FeatureLayout &layout, int x, int y);

/// Center-surround mean contrast over a grid of cell_size cells anchored at (0,0):
/// |mean(center) - mean(8-cell surround)| written into the center cell's pixels;
/// cells without a full surround (and pixels outside the grid) stay 0.
PlaneD contrast_map(const PlaneF &gray, int cell_size);

/// Versioned layout header (stored inside model files).
nlohmann::json layout_to_json(const FeatureLayout &layout);
/// Rebuilds from the stored config; LayoutMismatchError if entry count or fingerprint differ.
FeatureLayout layout_from_json(const nlohmann::json &j);

} // namespace cscdet
