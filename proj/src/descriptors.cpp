#include "cscdet/descriptors.hpp"

#include "cscdet/errors.hpp"

#include <string>

namespace cscdet {

namespace {

void check_cell(const IntegralPlane &plane, const Cell &cell)
{
    if (cell.size < 1 || !plane.contains(cell.rect()))
        throw BoundsError("cell (" + std::to_string(cell.x) + "," + std::to_string(cell.y) + ") size " +
                          std::to_string(cell.size) + " outside " + std::to_string(plane.width()) + "x" +
                          std::to_string(plane.height()) + " image");
}

void check_pool(std::span<const Cell> cells)
{
    if (cells.empty())
        throw ShapeError("pooled descriptor needs at least one cell");
    for (const Cell &c : cells)
        if (c.size != cells.front().size)
            throw ShapeError("pooled descriptor cells must share one size");
}

} // namespace

HistogramDescriptor::HistogramDescriptor(int bins) : bins_(bins)
{
    if (bins < 1 || bins > kMaxHistogramBins)
        throw ShapeError("histogram bin count " + std::to_string(bins) + " outside [1," +
                         std::to_string(kMaxHistogramBins) + "]");
}

HistogramDescriptor HistogramDescriptor::from_masses(std::span<const double> masses)
{
    HistogramDescriptor h(static_cast<int>(masses.size()));
    // Integral-table cancellation can leave masses a few ulps below zero.
    double total = 0.0;
    for (int k = 0; k < h.bins_; ++k) {
        const double m = masses[static_cast<std::size_t>(k)];
        h[k] = m > 0.0 ? m : 0.0;
        total += h[k];
    }
    for (int k = 0; k < h.bins_; ++k)
        h[k] = total > 0.0 ? h[k] / total : 1.0 / h.bins_;
    return h;
}

GaussianDescriptor gaussian_descriptor(const IntegralStack &stack, int channel, const Cell &cell)
{
    check_cell(stack.sum(channel), cell);
    return detail::gaussian_unchecked(stack, channel, cell.x, cell.y, cell.size);
}

HistogramDescriptor histogram_descriptor(const IntegralHistogram &hist, const Cell &cell)
{
    check_cell(hist.bin_plane(0), cell);
    return detail::histogram_unchecked(hist, cell.x, cell.y, cell.size);
}

GaussianDescriptor pooled_gaussian_descriptor(const IntegralStack &stack, int channel, std::span<const Cell> cells)
{
    check_pool(cells);
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const Cell &c : cells) {
        check_cell(stack.sum(channel), c);
        sum += stack.sum(channel).rect_sum_unchecked(c.x, c.y, c.size, c.size);
        sq += stack.squared_sum(channel).rect_sum_unchecked(c.x, c.y, c.size, c.size);
        count += static_cast<double>(c.size) * c.size;
    }
    return detail::gaussian_from_sums(sum, sq, count);
}

HistogramDescriptor pooled_histogram_descriptor(const IntegralHistogram &hist, std::span<const Cell> cells)
{
    check_pool(cells);
    std::array<double, kMaxHistogramBins> total{}, part{};
    const auto bins = static_cast<std::size_t>(hist.bins());
    for (const Cell &c : cells) {
        check_cell(hist.bin_plane(0), c);
        hist.rect_masses_unchecked(c.x, c.y, c.size, c.size, std::span(part.data(), bins));
        for (std::size_t k = 0; k < bins; ++k)
            total[k] += part[k];
    }
    return HistogramDescriptor::from_masses(std::span<const double>(total.data(), bins));
}

namespace detail {

HistogramDescriptor histogram_unchecked(const IntegralHistogram &hist, int x, int y, int size)
{
    std::array<double, kMaxHistogramBins> masses{};
    const auto bins = static_cast<std::size_t>(hist.bins());
    hist.rect_masses_unchecked(x, y, size, size, std::span(masses.data(), bins));
    return HistogramDescriptor::from_masses(std::span<const double>(masses.data(), bins));
}

} // namespace detail

} // namespace cscdet
