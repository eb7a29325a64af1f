#include "cscdet/contrasts.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace cscdet {

DescriptorKind descriptor_for(Measure m)
{
    switch (m) {
    case Measure::W2:
    case Measure::L2:
    case Measure::SGrd: return DescriptorKind::Gaussian;
    case Measure::KLD:
    case Measure::Hellinger:
    case Measure::HI: return DescriptorKind::Histogram;
    }
    return DescriptorKind::Gaussian;
}

int measure_dimension(Measure m)
{
    return m == Measure::SGrd ? 2 : 1;
}

std::string_view measure_name(Measure m)
{
    switch (m) {
    case Measure::W2: return "W2";
    case Measure::L2: return "L2";
    case Measure::SGrd: return "SGrd";
    case Measure::KLD: return "KLD";
    case Measure::Hellinger: return "Hellinger";
    case Measure::HI: return "HI";
    }
    return "?";
}

Measure parse_measure(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Measure m : {Measure::W2, Measure::L2, Measure::SGrd, Measure::KLD, Measure::Hellinger, Measure::HI}) {
        std::string candidate(measure_name(m));
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (candidate == lower)
            return m;
    }
    throw ConfigError("unknown contrast measure '" + std::string(name) + "' (expected W2, L2, SGrd, KLD, Hellinger, HI)");
}

double wasserstein2(const GaussianDescriptor &c, const GaussianDescriptor &s)
{
    const double dmu = c.mu - s.mu;
    const double radicand = dmu * dmu + c.sigma2 + s.sigma2 - 2.0 * std::sqrt(c.sigma2 * s.sigma2);
    return std::sqrt(std::max(radicand, 0.0));
}

double gaussian_l2(const GaussianDescriptor &c, const GaussianDescriptor &s)
{
    return std::hypot(c.mu - s.mu, c.sigma2 - s.sigma2);
}

namespace {

void check_bins(const HistogramDescriptor &c, const HistogramDescriptor &s)
{
    if (c.bins() != s.bins())
        throw ShapeError("histogram contrast: bin counts differ (" + std::to_string(c.bins()) + " vs " +
                         std::to_string(s.bins()) + ")");
}

} // namespace

double kl_divergence(const HistogramDescriptor &c, const HistogramDescriptor &s)
{
    check_bins(c, s);
    double zc = 0.0, zs = 0.0;
    for (int k = 0; k < c.bins(); ++k) {
        zc += std::max(c[k], kKldFloor);
        zs += std::max(s[k], kKldFloor);
    }
    double d = 0.0;
    for (int k = 0; k < c.bins(); ++k) {
        const double pc = std::max(c[k], kKldFloor) / zc;
        const double ps = std::max(s[k], kKldFloor) / zs;
        d += pc * std::log(pc / ps);
    }
    // Gibbs: D >= 0; rounding can undershoot by an ulp or so.
    return std::max(d, 0.0);
}

double hellinger(const HistogramDescriptor &c, const HistogramDescriptor &s)
{
    check_bins(c, s);
    double sum = 0.0;
    for (int k = 0; k < c.bins(); ++k) {
        const double d = std::sqrt(c[k]) - std::sqrt(s[k]);
        sum += d * d;
    }
    return std::min(std::sqrt(sum) / std::numbers::sqrt2, 1.0);
}

double histogram_intersection(const HistogramDescriptor &c, const HistogramDescriptor &s)
{
    check_bins(c, s);
    double sum = 0.0;
    for (int k = 0; k < c.bins(); ++k)
        sum += std::min(c[k], s[k]);
    return std::min(sum, 1.0);
}

ContrastVector gaussian_contrast(const GaussianDescriptor &c, const GaussianDescriptor &s, Measure m)
{
    switch (m) {
    case Measure::W2: return {{wasserstein2(c, s), 0.0}, 1};
    case Measure::L2: return {{gaussian_l2(c, s), 0.0}, 1};
    case Measure::SGrd: return {{c.mu - s.mu, c.sigma2 - s.sigma2}, 2};
    default: break;
    }
    throw ConfigError("measure " + std::string(measure_name(m)) + " does not apply to Gaussian descriptors");
}

ContrastVector histogram_contrast(const HistogramDescriptor &c, const HistogramDescriptor &s, Measure m)
{
    switch (m) {
    case Measure::KLD: return {{kl_divergence(c, s), 0.0}, 1};
    case Measure::Hellinger: return {{hellinger(c, s), 0.0}, 1};
    case Measure::HI: return {{histogram_intersection(c, s), 0.0}, 1};
    default: break;
    }
    throw ConfigError("measure " + std::string(measure_name(m)) + " does not apply to histogram descriptors");
}

} // namespace cscdet
