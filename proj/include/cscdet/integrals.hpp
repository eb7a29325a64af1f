#pragma once

#include "cscdet/imaging.hpp"

#include <span>
#include <vector>

namespace cscdet {

/// Axis-aligned pixel rectangle, half-open: covers [x, x+w) x [y, y+h).
struct Rect
{
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Rect &) const = default;
};

/// Summed-area table with a zero first row and column, accumulated in double.
class IntegralPlane
{
public:
    IntegralPlane() = default;

    /// Source plane dimensions (the table itself is one larger in each axis).
    int width() const { return width_; }
    int height() const { return height_; }

    /// cumsum[i][j] = sum of source rows < i, columns < j.
    double cumsum(int row, int col) const { return table_[index(col, row)]; }

    /// Throws BoundsError if the rectangle leaves the source plane.
    double rect_sum(const Rect &r) const;

    /// No bounds check; callers validate the enclosing window once.
    double rect_sum_unchecked(int x, int y, int w, int h) const
    {
        return table_[index(x + w, y + h)] - table_[index(x, y + h)] - table_[index(x + w, y)] + table_[index(x, y)];
    }

    bool contains(const Rect &r) const
    {
        return r.x >= 0 && r.y >= 0 && r.w >= 0 && r.h >= 0 && r.x + r.w <= width_ && r.y + r.h <= height_;
    }

    /// Builds the table from value_at(x, y) over a width x height source.
    template <typename F>
    static IntegralPlane accumulate(int width, int height, F &&value_at)
    {
        IntegralPlane ip;
        ip.width_ = width;
        ip.height_ = height;
        ip.table_.assign(static_cast<std::size_t>(width + 1) * static_cast<std::size_t>(height + 1), 0.0);
        for (int y = 0; y < height; ++y) {
            double row_sum = 0.0;
            for (int x = 0; x < width; ++x) {
                row_sum += static_cast<double>(value_at(x, y));
                ip.table_[ip.index(x + 1, y + 1)] = ip.table_[ip.index(x + 1, y)] + row_sum;
            }
        }
        return ip;
    }

private:
    std::size_t index(int col, int row) const
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_ + 1) + static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> table_;
};

IntegralPlane build_integral(const PlaneF &plane);
IntegralPlane build_integral(const PlaneD &plane);

/// Integral of the squared plane, for one-pass variance.
IntegralPlane build_integral_squared(const PlaneF &plane);

/// Value-to-bin assignment with linear interpolation between the two nearest
/// bin centres. Centres sit at lo + (k + 0.5)(hi - lo)/bins; values at or
/// beyond the outer centres go entirely into the end bins.
struct BinSplit
{
    int lower = 0;
    int upper = 0;
    double lower_weight = 1.0;
    double upper_weight = 0.0;
};

class HistogramBinning
{
public:
    HistogramBinning(int bins, double lo, double hi);

    int bins() const { return bins_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double center(int k) const { return lo_ + (k + 0.5) * (hi_ - lo_) / bins_; }

    BinSplit split(double value) const;

private:
    int bins_;
    double lo_;
    double hi_;
};

/// One integral plane per bin; plane k integrates each pixel's interpolated mass in bin k.
class IntegralHistogram
{
public:
    IntegralHistogram() = default;

    int bins() const { return static_cast<int>(planes_.size()); }
    const HistogramBinning &binning() const { return binning_; }
    const IntegralPlane &bin_plane(int k) const { return planes_.at(static_cast<std::size_t>(k)); }

    /// Mass of bin k inside the rectangle.
    double bin_sum(int k, const Rect &r) const;

    /// Per-bin masses of the rectangle into `out` (size == bins()).
    void rect_masses(const Rect &r, std::span<double> out) const;
    void rect_masses_unchecked(int x, int y, int w, int h, std::span<double> out) const;

private:
    friend IntegralHistogram build_integral_histogram(const PlaneF &, int, double, double);

    HistogramBinning binning_{2, 0.0, 1.0};
    std::vector<IntegralPlane> planes_;
};

/// Throws ConfigError unless bins >= 2 and hi > lo.
IntegralHistogram build_integral_histogram(const PlaneF &plane, int bins, double lo, double hi);

/// Integral structures for all 10 channels of an image: plain and squared
/// integrals always, integral histograms over [0,1] when histogram_bins > 0.
class IntegralStack
{
public:
    IntegralStack() = default;

    int width() const { return width_; }
    int height() const { return height_; }
    int histogram_bins() const { return histogram_bins_; }
    bool has_histograms() const { return histogram_bins_ > 0; }

    const IntegralPlane &sum(int channel) const { return sums_.at(static_cast<std::size_t>(channel)); }
    const IntegralPlane &squared_sum(int channel) const { return squares_.at(static_cast<std::size_t>(channel)); }
    const IntegralHistogram &histogram(int channel) const;

private:
    friend IntegralStack build_integral_stack(const ChannelStack &, int);

    int width_ = 0;
    int height_ = 0;
    int histogram_bins_ = 0;
    std::vector<IntegralPlane> sums_;
    std::vector<IntegralPlane> squares_;
    std::vector<IntegralHistogram> histograms_;
};

IntegralStack build_integral_stack(const ChannelStack &channels, int histogram_bins = 0);

} // namespace cscdet
