#pragma once

#include "cscdet/descriptors.hpp"

#include <array>
#include <string>
#include <string_view>

namespace cscdet {

enum class Measure { W2, L2, SGrd, KLD, Hellinger, HI };

enum class DescriptorKind { Gaussian, Histogram };

/// Gaussian measures: W2, L2, SGrd. Histogram measures: KLD, Hellinger, HI.
DescriptorKind descriptor_for(Measure m);

/// Components per contrast: 2 for SGrd, 1 otherwise.
int measure_dimension(Measure m);

std::string_view measure_name(Measure m);
/// Case-insensitive; throws ConfigError on unknown names.
Measure parse_measure(std::string_view name);

/// 1 or 2 contrast components (2 only for SGrd: mean difference, variance difference).
struct ContrastVector
{
    std::array<double, 2> components{};
    int size = 1;

    double operator[](int i) const { return components[static_cast<std::size_t>(i)]; }
};

inline constexpr double kKldFloor = 1e-6;

/// sqrt(dmu^2 + s_c + s_s - 2 sqrt(s_c s_s)), radicand clamped at 0.
double wasserstein2(const GaussianDescriptor &c, const GaussianDescriptor &s);
/// Euclidean distance between (mu, sigma2) points.
double gaussian_l2(const GaussianDescriptor &c, const GaussianDescriptor &s);

/// D(center || surround) after flooring both histograms at kKldFloor and renormalising.
double kl_divergence(const HistogramDescriptor &c, const HistogramDescriptor &s);
/// (1/sqrt 2) * sqrt(sum (sqrt h_c - sqrt h_s)^2), in [0,1].
double hellinger(const HistogramDescriptor &c, const HistogramDescriptor &s);
/// sum min(h_c, h_s) for normalised histograms.
double histogram_intersection(const HistogramDescriptor &c, const HistogramDescriptor &s);

/// Throws ConfigError if `m` is not a Gaussian measure.
ContrastVector gaussian_contrast(const GaussianDescriptor &c, const GaussianDescriptor &s, Measure m);

/// Throws ShapeError on a bin-count mismatch, ConfigError if `m` is not a histogram measure.
ContrastVector histogram_contrast(const HistogramDescriptor &c, const HistogramDescriptor &s, Measure m);

} // namespace cscdet
