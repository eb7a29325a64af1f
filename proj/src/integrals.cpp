#include "cscdet/integrals.hpp"

#include "cscdet/errors.hpp"

#include <cmath>
#include <string>

namespace cscdet {

namespace {

std::string describe(const Rect &r)
{
    return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
           std::to_string(r.h) + ")";
}

} // namespace

double IntegralPlane::rect_sum(const Rect &r) const
{
    if (!contains(r))
        throw BoundsError("rect_sum: rectangle " + describe(r) + " outside " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " plane");
    return rect_sum_unchecked(r.x, r.y, r.w, r.h);
}

IntegralPlane build_integral(const PlaneF &plane)
{
    return IntegralPlane::accumulate(plane.width(), plane.height(), [&](int x, int y) { return plane.at(x, y); });
}

IntegralPlane build_integral(const PlaneD &plane)
{
    return IntegralPlane::accumulate(plane.width(), plane.height(), [&](int x, int y) { return plane.at(x, y); });
}

IntegralPlane build_integral_squared(const PlaneF &plane)
{
    return IntegralPlane::accumulate(plane.width(), plane.height(), [&](int x, int y) {
        const double v = plane.at(x, y);
        return v * v;
    });
}

HistogramBinning::HistogramBinning(int bins, double lo, double hi) : bins_(bins), lo_(lo), hi_(hi)
{
    if (bins < 2)
        throw ConfigError("histogram needs at least 2 bins, got " + std::to_string(bins));
    if (!(hi > lo))
        throw ConfigError("histogram range must satisfy hi > lo");
}

BinSplit HistogramBinning::split(double value) const
{
    const double pos = (value - lo_) / (hi_ - lo_) * bins_ - 0.5;
    if (!(pos > 0.0))
        return {0, 0, 1.0, 0.0};
    if (pos >= bins_ - 1)
        return {bins_ - 1, bins_ - 1, 1.0, 0.0};
    const double lower = std::floor(pos);
    const double frac = pos - lower;
    const int k = static_cast<int>(lower);
    return {k, k + 1, 1.0 - frac, frac};
}

double IntegralHistogram::bin_sum(int k, const Rect &r) const
{
    if (k < 0 || k >= bins())
        throw BoundsError("bin index " + std::to_string(k) + " out of range");
    return planes_[static_cast<std::size_t>(k)].rect_sum(r);
}

void IntegralHistogram::rect_masses(const Rect &r, std::span<double> out) const
{
    if (static_cast<int>(out.size()) != bins())
        throw ShapeError("rect_masses: output span has " + std::to_string(out.size()) + " bins, expected " +
                         std::to_string(bins()));
    if (planes_.empty() || !planes_.front().contains(r))
        throw BoundsError("rect_masses: rectangle " + describe(r) + " outside histogram");
    rect_masses_unchecked(r.x, r.y, r.w, r.h, out);
}

void IntegralHistogram::rect_masses_unchecked(int x, int y, int w, int h, std::span<double> out) const
{
    for (std::size_t k = 0; k < planes_.size(); ++k)
        out[k] = planes_[k].rect_sum_unchecked(x, y, w, h);
}

IntegralHistogram build_integral_histogram(const PlaneF &plane, int bins, double lo, double hi)
{
    IntegralHistogram ih;
    ih.binning_ = HistogramBinning(bins, lo, hi);

    std::vector<PlaneD> mass(static_cast<std::size_t>(bins), PlaneD(plane.width(), plane.height(), 0.0));
    for (int y = 0; y < plane.height(); ++y)
        for (int x = 0; x < plane.width(); ++x) {
            const BinSplit s = ih.binning_.split(plane.at(x, y));
            mass[static_cast<std::size_t>(s.lower)].at(x, y) += s.lower_weight;
            mass[static_cast<std::size_t>(s.upper)].at(x, y) += s.upper_weight;
        }

    ih.planes_.reserve(mass.size());
    for (const PlaneD &m : mass)
        ih.planes_.push_back(build_integral(m));
    return ih;
}

const IntegralHistogram &IntegralStack::histogram(int channel) const
{
    if (!has_histograms())
        throw ConfigError("integral stack was built without histograms");
    return histograms_.at(static_cast<std::size_t>(channel));
}

IntegralStack build_integral_stack(const ChannelStack &channels, int histogram_bins)
{
    IntegralStack st;
    st.width_ = channels.width();
    st.height_ = channels.height();
    st.histogram_bins_ = histogram_bins;
    st.sums_.resize(kNumChannels);
    st.squares_.resize(kNumChannels);
    if (histogram_bins > 0) {
        HistogramBinning validate(histogram_bins, 0.0, 1.0);
        st.histograms_.resize(kNumChannels);
    }

#pragma omp parallel for schedule(static)
    for (int c = 0; c < kNumChannels; ++c) {
        const PlaneF &p = channels.plane(c);
        st.sums_[static_cast<std::size_t>(c)] = build_integral(p);
        st.squares_[static_cast<std::size_t>(c)] = build_integral_squared(p);
        if (histogram_bins > 0)
            st.histograms_[static_cast<std::size_t>(c)] = build_integral_histogram(p, histogram_bins, 0.0, 1.0);
    }
    return st;
}

} // namespace cscdet
