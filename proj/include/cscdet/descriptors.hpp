#pragma once

#include "cscdet/integrals.hpp"

#include <array>
#include <span>

namespace cscdet {

/// Square cell with top-left corner (x, y).
struct Cell
{
    int x = 0;
    int y = 0;
    int size = 0;

    Rect rect() const { return {x, y, size, size}; }
    bool operator==(const Cell &) const = default;
};

/// Maximum-likelihood Gaussian of a cell's channel values (population variance).
struct GaussianDescriptor
{
    double mu = 0.0;
    double sigma2 = 0.0;
};

inline constexpr int kMaxHistogramBins = 64;

/// Normalised histogram with inline storage; bins sum to 1.
class HistogramDescriptor
{
public:
    HistogramDescriptor() = default;
    explicit HistogramDescriptor(int bins);

    /// Normalises raw masses; zero total mass yields the uniform histogram.
    static HistogramDescriptor from_masses(std::span<const double> masses);

    int bins() const { return bins_; }
    double operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
    double &operator[](int k) { return values_[static_cast<std::size_t>(k)]; }
    std::span<const double> values() const { return {values_.data(), static_cast<std::size_t>(bins_)}; }

private:
    int bins_ = 0;
    std::array<double, kMaxHistogramBins> values_{};
};

/// mu = S/p, sigma2 = max(0, Q/p - mu^2) from the plain and squared integrals.
GaussianDescriptor gaussian_descriptor(const IntegralStack &stack, int channel, const Cell &cell);

HistogramDescriptor histogram_descriptor(const IntegralHistogram &hist, const Cell &cell);

/// Descriptor of the union of equally sized, non-overlapping cells (the pooled surround).
GaussianDescriptor pooled_gaussian_descriptor(const IntegralStack &stack, int channel, std::span<const Cell> cells);
HistogramDescriptor pooled_histogram_descriptor(const IntegralHistogram &hist, std::span<const Cell> cells);

namespace detail {

inline GaussianDescriptor gaussian_from_sums(double sum, double sq_sum, double count)
{
    const double mu = sum / count;
    const double var = sq_sum / count - mu * mu;
    return {mu, var > 0.0 ? var : 0.0};
}

inline GaussianDescriptor gaussian_unchecked(const IntegralStack &stack, int channel, int x, int y, int size)
{
    return gaussian_from_sums(stack.sum(channel).rect_sum_unchecked(x, y, size, size),
                              stack.squared_sum(channel).rect_sum_unchecked(x, y, size, size),
                              static_cast<double>(size) * size);
}

HistogramDescriptor histogram_unchecked(const IntegralHistogram &hist, int x, int y, int size);

} // namespace detail

} // namespace cscdet
