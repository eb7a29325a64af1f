#include "testing/oracles.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace cscdet::testing {

double brute_rect_sum(const PlaneF &plane, const Rect &r)
{
    double s = 0.0;
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x)
            s += plane.at(x, y);
    return s;
}

GaussianDescriptor brute_gaussian(const PlaneF &plane, std::span<const Cell> cells)
{
    std::vector<double> v;
    for (const Cell &c : cells)
        for (int y = c.y; y < c.y + c.size; ++y)
            for (int x = c.x; x < c.x + c.size; ++x)
                v.push_back(plane.at(x, y));
    double mean = 0.0;
    for (double a : v)
        mean += a;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double a : v)
        var += (a - mean) * (a - mean);
    return {mean, var / static_cast<double>(v.size())};
}

std::vector<double> brute_histogram_masses(const PlaneF &plane, std::span<const Cell> cells, int bins, double lo,
                                           double hi)
{
    const double width = (hi - lo) / bins;
    std::vector<double> m(static_cast<std::size_t>(bins), 0.0);
    for (const Cell &c : cells)
        for (int y = c.y; y < c.y + c.size; ++y)
            for (int x = c.x; x < c.x + c.size; ++x) {
                const double v = plane.at(x, y);
                const double first = lo + 0.5 * width;
                const double last = lo + (bins - 0.5) * width;
                if (v <= first) {
                    m.front() += 1.0;
                    continue;
                }
                if (v >= last) {
                    m.back() += 1.0;
                    continue;
                }
                for (int k = 0; k < bins; ++k) {
                    const double centre = lo + (k + 0.5) * width;
                    const double w = 1.0 - std::abs(v - centre) / width;
                    if (w > 0.0)
                        m[static_cast<std::size_t>(k)] += w;
                }
            }
    return m;
}

std::vector<double> brute_histogram(const PlaneF &plane, std::span<const Cell> cells, int bins, double lo, double hi)
{
    std::vector<double> m = brute_histogram_masses(plane, cells, bins, lo, hi);
    double total = 0.0;
    for (double a : m)
        total += a;
    for (double &a : m)
        a = total > 0.0 ? a / total : 1.0 / bins;
    return m;
}

double w2_quantile_oracle(double mu1, double var1, double mu2, double var2, int nodes)
{
    const boost::math::normal unit;
    const double s1 = std::sqrt(var1);
    const double s2 = std::sqrt(var2);
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double t = (i + 0.5) / nodes;
        const double z = boost::math::quantile(unit, t);
        const double d = (mu1 + s1 * z) - (mu2 + s2 * z);
        acc += d * d;
    }
    return std::sqrt(acc / nodes);
}

namespace {

// Clockwise from north, x right / y down.
constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

} // namespace

FeatureVector naive_extract(const ChannelStack &channels, const FeatureLayout &layout, int x, int y)
{
    const LayoutConfig &cfg = layout.config();
    const bool gaussian = cfg.descriptor() == DescriptorKind::Gaussian;
    FeatureVector out;
    out.reserve(layout.feature_count());

    for (const LayoutEntry &e : layout.entries()) {
        const PlaneF &plane = channels.plane(e.channel);
        const int s = e.center.size;
        const Cell center{x + e.center.x, y + e.center.y, s};
        std::vector<Cell> other;
        if (e.direction == Direction::Pooled) {
            for (int d = 0; d < 8; ++d)
                other.push_back({center.x + kDx[d] * s, center.y + kDy[d] * s, s});
        } else {
            const int d = static_cast<int>(e.direction);
            other.push_back({center.x + kDx[d] * s, center.y + kDy[d] * s, s});
        }

        ContrastVector cv;
        if (gaussian) {
            const Cell c1[1] = {center};
            cv = gaussian_contrast(brute_gaussian(plane, c1), brute_gaussian(plane, other), cfg.measure);
        } else {
            const Cell c1[1] = {center};
            const auto hc = brute_histogram(plane, c1, cfg.histogram_bins, 0.0, 1.0);
            const auto hs = brute_histogram(plane, other, cfg.histogram_bins, 0.0, 1.0);
            HistogramDescriptor dc(cfg.histogram_bins), ds(cfg.histogram_bins);
            for (int k = 0; k < cfg.histogram_bins; ++k) {
                dc[k] = hc[static_cast<std::size_t>(k)];
                ds[k] = hs[static_cast<std::size_t>(k)];
            }
            cv = histogram_contrast(dc, ds, cfg.measure);
        }
        for (int c = 0; c < cv.size; ++c)
            out.push_back(static_cast<float>(cv[c]));
    }
    return out;
}

std::size_t combinatorial_entry_count(int scale, int model_w, int model_h, bool pooled)
{
    std::size_t centers = 0;
    for (int shift : {0, scale / 2}) {
        const int nx = (model_w - shift) / scale;
        const int ny = (model_h - shift) / scale;
        // Odd grid indices strictly inside [1, n-2].
        const int cx = nx >= 3 ? (nx - 1) / 2 : 0;
        const int cy = ny >= 3 ? (ny - 1) / 2 : 0;
        centers += static_cast<std::size_t>(cx) * static_cast<std::size_t>(cy);
    }
    return centers * (pooled ? 1 : 8) * 10;
}

RasterImage random_image(int width, int height, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<float> u(0.f, 1.f);
    RasterImage img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img.at(x, y) = {u(rng), u(rng), u(rng)};
    return img;
}

PlaneF random_plane(int width, int height, std::mt19937_64 &rng, float lo, float hi)
{
    std::uniform_real_distribution<float> u(lo, hi);
    PlaneF p(width, height);
    for (float &v : p.values())
        v = u(rng);
    return p;
}

double brute_best_stump_error(const FeatureMatrix &pos, const FeatureMatrix &neg)
{
    const double wp = 0.5 / static_cast<double>(pos.rows());
    const double wn = 0.5 / static_cast<double>(neg.rows());
    double best = 1.0;
    for (std::size_t f = 0; f < pos.cols(); ++f) {
        std::vector<float> candidates;
        for (std::size_t i = 0; i < pos.rows(); ++i)
            candidates.push_back(pos.at(i, f));
        for (std::size_t i = 0; i < neg.rows(); ++i)
            candidates.push_back(neg.at(i, f));
        for (float t : candidates) {
            // Error of "x <= t means positive"; the flipped polarity errs on the rest.
            double err = 0.0;
            for (std::size_t i = 0; i < pos.rows(); ++i)
                if (!(pos.at(i, f) <= t))
                    err += wp;
            for (std::size_t i = 0; i < neg.rows(); ++i)
                if (neg.at(i, f) <= t)
                    err += wn;
            best = std::min({best, err, 1.0 - err});
        }
    }
    return best;
}

namespace {

double box_iou(const Box &a, const Box &b)
{
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

} // namespace

SweepOracle brute_sweep(const std::vector<std::vector<Detection>> &dets,
                        const std::vector<std::vector<Annotation>> &annos, double iou_threshold)
{
    std::set<double, std::greater<>> thresholds;
    for (const auto &img : dets)
        for (const Detection &d : img)
            thresholds.insert(d.score);

    std::size_t required = 0;
    for (const auto &img : annos)
        for (const Annotation &a : img)
            required += !a.ignore;

    SweepOracle out;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            // Selection-sort order: repeatedly the highest remaining score, earliest on ties.
            std::vector<Detection> pool;
            for (const Detection &d : dets[i])
                if (d.score >= t)
                    pool.push_back(d);
            std::vector<bool> used(pool.size(), false), claimed(annos[i].size(), false);
            for (std::size_t step = 0; step < pool.size(); ++step) {
                std::size_t pick = pool.size();
                for (std::size_t k = 0; k < pool.size(); ++k)
                    if (!used[k] && (pick == pool.size() || pool[k].score > pool[pick].score))
                        pick = k;
                used[pick] = true;
                int best = -1;
                double best_iou = 0.0;
                for (std::size_t a = 0; a < annos[i].size(); ++a) {
                    const double iou = box_iou(pool[pick].box, annos[i][a].box);
                    if (!annos[i][a].ignore && !claimed[a] && iou > iou_threshold && iou > best_iou) {
                        best = static_cast<int>(a);
                        best_iou = iou;
                    }
                }
                if (best >= 0) {
                    claimed[static_cast<std::size_t>(best)] = true;
                    ++tp;
                    continue;
                }
                bool on_ignore = false;
                for (const Annotation &a : annos[i])
                    on_ignore = on_ignore || (a.ignore && box_iou(pool[pick].box, a.box) > iou_threshold);
                if (!on_ignore)
                    ++fp;
            }
        }
        out.points.push_back({t, static_cast<double>(fp) / static_cast<double>(dets.size()),
                              1.0 - static_cast<double>(tp) / static_cast<double>(required)});
    }

    double log_sum = 0.0;
    for (int k = 0; k < 9; ++k) {
        const double ref = std::pow(10.0, (k - 8) / 4.0);
        double mr = out.points.empty() ? 1.0 : out.points.front().miss_rate;
        double best_fppi = -1.0;
        for (const CurvePoint &p : out.points)
            if (p.fppi <= ref * (1.0 + 1e-12) && (p.fppi > best_fppi || (p.fppi == best_fppi && p.miss_rate < mr))) {
                best_fppi = p.fppi;
                mr = p.miss_rate;
            }
        log_sum += std::log(std::max(mr, 1e-10));
    }
    out.lamr = std::exp(log_sum / 9.0);
    return out;
}

} // namespace cscdet::testing
