#include "cscdet/detect.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace cscdet {

double intersection_area(const Box &a, const Box &b)
{
    const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

double intersection_over_union(const Box &a, const Box &b)
{
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double intersection_over_min_area(const Box &a, const Box &b)
{
    const double m = std::min(a.area(), b.area());
    return m > 0.0 ? intersection_area(a, b) / m : 0.0;
}

std::vector<PyramidLevel> build_scale_pyramid(int image_width, int image_height, int model_width,
                                              int model_height, const DetectConfig &cfg)
{
    if (!(cfg.scale_step > 1.0))
        throw ConfigError("scale step must be > 1");
    if (!(cfg.max_scale > 0.0))
        throw ConfigError("max scale must be positive");
    if (cfg.min_scale < 0.0 || cfg.min_scale > cfg.max_scale)
        throw ConfigError("min scale must lie in [0, max scale]");
    std::vector<PyramidLevel> levels;
    for (int k = 0;; ++k) {
        const double s = cfg.max_scale * std::pow(cfg.scale_step, -k);
        if (s < cfg.min_scale * (1.0 - 1e-12))
            break;
        const int w = static_cast<int>(std::lround(image_width * s));
        const int h = static_cast<int>(std::lround(image_height * s));
        if (w < model_width || h < model_height)
            break;
        levels.push_back({s, w, h});
    }
    return levels;
}

std::vector<std::array<int, 2>> window_positions(int level_width, int level_height, int model_width,
                                                 int model_height, int stride)
{
    if (stride < 1)
        throw ConfigError("stride must be positive");
    std::vector<std::array<int, 2>> out;
    for (int y = 0; y + model_height <= level_height; y += stride)
        for (int x = 0; x + model_width <= level_width; x += stride)
            out.push_back({x, y});
    return out;
}

Box level_to_image(const PyramidLevel &level, int image_width, int image_height, double x, double y, double w,
                   double h)
{
    const double rx = static_cast<double>(image_width) / level.width;
    const double ry = static_cast<double>(image_height) / level.height;
    return {x * rx, y * ry, w * rx, h * ry};
}

IntegralStack level_stack(const RasterImage &img, const PyramidLevel &level, int histogram_bins)
{
    if (level.width == img.width() && level.height == img.height())
        return build_integral_stack(compute_channels_smoothed(img), histogram_bins);
    return build_integral_stack(compute_channels_smoothed(resize_bilinear(img, level.width, level.height)),
                                histogram_bins);
}

namespace {

struct Hit
{
    Detection det;
    std::size_t level = 0;
    int x = 0, y = 0;
};

std::vector<Hit> scan(const RasterImage &img, const StrongClassifier &clf, const DetectConfig &cfg,
                      DetectStats *stats)
{
    const FeatureLayout &layout = clf.layout();
    const int mw = layout.config().model_width;
    const int mh = layout.config().model_height;
    const std::vector<PyramidLevel> levels = build_scale_pyramid(img.width(), img.height(), mw, mh, cfg);

    DetectStats local;
    std::vector<Hit> hits;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const PyramidLevel &level = levels[li];
        const IntegralStack stack = level_stack(img, level, layout.config().required_histogram_bins());
        const FeatureEvaluator eval(layout, stack);
        const auto positions = window_positions(level.width, level.height, mw, mh, cfg.stride);

        std::vector<double> scores(positions.size());
        const auto n = static_cast<std::int64_t>(positions.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < n; ++i) {
            const auto [x, y] = positions[static_cast<std::size_t>(i)];
            scores[static_cast<std::size_t>(i)] =
                clf.score_with([&](std::uint32_t f) { return eval.feature(f, x, y); });
        }

        local.windows += positions.size();
        for (std::size_t i = 0; i < positions.size(); ++i) {
            if (!(scores[i] > cfg.threshold))
                continue;
            const auto [x, y] = positions[i];
            Hit h;
            h.det.box = level_to_image(level, img.width(), img.height(), x, y, mw, mh);
            h.det.score = scores[i];
            h.det.scale = level.scale;
            h.level = li;
            h.x = x;
            h.y = y;
            hits.push_back(h);
        }
    }
    local.levels = levels.size();
    local.above_threshold = hits.size();
    if (stats)
        *stats = local;
    return hits;
}

std::vector<std::size_t> nms_order(const std::vector<Detection> &dets, double overlap)
{
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool suppressed = false;
        for (std::size_t k : kept)
            if (intersection_over_min_area(dets[i].box, dets[k].box) > overlap) {
                suppressed = true;
                break;
            }
        if (!suppressed)
            kept.push_back(i);
    }
    return kept;
}

std::vector<Detection> hits_to_detections(const std::vector<Hit> &hits)
{
    std::vector<Detection> d;
    d.reserve(hits.size());
    for (const Hit &h : hits)
        d.push_back(h.det);
    return d;
}

// Bilinear sample of the region (x0, y0, w, h) into an out_w x out_h image, clamping at the border.
RasterImage resample_region(const RasterImage &img, double x0, double y0, double w, double h, int out_w, int out_h)
{
    RasterImage out(out_w, out_h);
    const double sx = w / out_w, sy = h / out_h;
    for (int j = 0; j < out_h; ++j) {
        const double fy = std::clamp(y0 + (j + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y_lo = static_cast<int>(fy);
        const int y_hi = std::min(y_lo + 1, img.height() - 1);
        const double ty = fy - y_lo;
        for (int i = 0; i < out_w; ++i) {
            const double fx = std::clamp(x0 + (i + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x_lo = static_cast<int>(fx);
            const int x_hi = std::min(x_lo + 1, img.width() - 1);
            const double tx = fx - x_lo;
            auto mix = [&](float Rgb::*c) {
                const double top = (1 - tx) * (img.at(x_lo, y_lo).*c) + tx * (img.at(x_hi, y_lo).*c);
                const double bot = (1 - tx) * (img.at(x_lo, y_hi).*c) + tx * (img.at(x_hi, y_hi).*c);
                return static_cast<float>((1 - ty) * top + ty * bot);
            };
            out.at(i, j) = {mix(&Rgb::r), mix(&Rgb::g), mix(&Rgb::b)};
        }
    }
    return out;
}

} // namespace

std::vector<Detection> detect_raw(const RasterImage &img, const StrongClassifier &clf, const DetectConfig &cfg,
                                  DetectStats *stats)
{
    return hits_to_detections(scan(img, clf, cfg, stats));
}

std::vector<Detection> detect(const RasterImage &img, const StrongClassifier &clf, const DetectConfig &cfg,
                              DetectStats *stats)
{
    return nms(detect_raw(img, clf, cfg, stats), cfg.nms_overlap);
}

std::vector<Detection> nms(std::vector<Detection> dets, double overlap)
{
    std::vector<Detection> out;
    for (std::size_t i : nms_order(dets, overlap))
        out.push_back(dets[i]);
    return out;
}

FeatureVector sample_features(const RasterImage &sample, const FeatureLayout &layout)
{
    const int mw = layout.config().model_width;
    const int mh = layout.config().model_height;
    if (sample.width() < mw || sample.height() < mh)
        throw ShapeError("sample is " + std::to_string(sample.width()) + "x" + std::to_string(sample.height()) +
                         ", smaller than the " + std::to_string(mw) + "x" + std::to_string(mh) + " model");
    const IntegralStack stack =
        build_integral_stack(compute_channels_smoothed(sample), layout.config().required_histogram_bins());
    return extract_features_at(stack, layout, (sample.width() - mw) / 2, (sample.height() - mh) / 2);
}

std::vector<RasterImage> random_negative_crops(const std::vector<RasterImage> &images, std::size_t count,
                                               int model_width, int model_height, int padding,
                                               std::mt19937_64 &rng)
{
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < images.size(); ++i)
        if (images[i].height() >= model_height &&
            images[i].width() * static_cast<long>(model_height) >= static_cast<long>(model_width) * model_height)
            usable.push_back(i);
    if (usable.empty())
        throw ConfigError("no negative image is large enough for a model-sized crop");

    std::vector<RasterImage> crops;
    crops.reserve(count);
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (crops.size() < count) {
        const RasterImage &img = images[usable[pick(rng)]];
        // Largest model-aspect crop that fits, then a height uniformly in [model, largest].
        const double max_h = std::min<double>(img.height(), img.width() * static_cast<double>(model_height) / model_width);
        if (max_h < model_height)
            continue;
        const double h = model_height + unit(rng) * (max_h - model_height);
        const double w = h * model_width / model_height;
        const double x = unit(rng) * (img.width() - w);
        const double y = unit(rng) * (img.height() - h);
        const double pad = padding * h / model_height;
        crops.push_back(resample_region(img, x - pad, y - pad, w + 2 * pad, h + 2 * pad, model_width + 2 * padding,
                                        model_height + 2 * padding));
    }
    return crops;
}

MiningResult mine_hard_negatives(const StrongClassifier &clf, const std::vector<RasterImage> &images,
                                 std::size_t quota, const DetectConfig &cfg)
{
    if (images.empty())
        throw ConfigError("hard-negative mining needs at least one negative image");

    struct Candidate
    {
        std::size_t image;
        Hit hit;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::vector<Hit> hits = scan(images[i], clf, cfg, nullptr);
        const std::vector<Detection> dets = hits_to_detections(hits);
        for (std::size_t k : nms_order(dets, cfg.nms_overlap))
            candidates.push_back({i, hits[k]});
    }

    MiningResult result;
    result.candidates = candidates.size();
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate &a, const Candidate &b) { return a.hit.det.score > b.hit.det.score; });
    if (candidates.size() > quota)
        candidates.resize(quota);

    const FeatureLayout &layout = clf.layout();
    const int mw = layout.config().model_width;
    const int mh = layout.config().model_height;
    std::vector<FeatureVector> features(candidates.size());
    // Group by (image, level) so each level stack is rebuilt once.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
    for (std::size_t c = 0; c < candidates.size(); ++c)
        groups[{candidates[c].image, candidates[c].hit.level}].push_back(c);
    std::size_t cached_image = images.size();
    std::vector<PyramidLevel> levels;
    for (const auto &[key, members] : groups) {
        const RasterImage &img = images[key.first];
        if (key.first != cached_image) {
            levels = build_scale_pyramid(img.width(), img.height(), mw, mh, cfg);
            cached_image = key.first;
        }
        const IntegralStack stack = level_stack(img, levels[key.second], layout.config().required_histogram_bins());
        for (std::size_t c : members)
            features[c] = extract_features_at(stack, layout, candidates[c].hit.x, candidates[c].hit.y);
    }

    result.features = FeatureMatrix(layout.feature_count());
    result.features.reserve_rows(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        result.features.append(features[c]);
        result.windows.push_back({candidates[c].image, candidates[c].hit.det});
    }
    return result;
}

void write_detections(const std::vector<ImageDetections> &all, const std::filesystem::path &path,
                      std::string_view header)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write detections to " + path.string());
    if (!header.empty())
        out << header << '\n';
    out << "# image_id x y w h score\n";
    char buf[256];
    for (const ImageDetections &img : all) {
        if (img.image_id.find_first_of(" \t\n") != std::string::npos)
            throw ConfigError("image id '" + img.image_id + "' contains whitespace");
        for (const Detection &d : img.detections) {
            std::snprintf(buf, sizeof buf, " %.2f %.2f %.2f %.2f %.2f\n", d.box.x, d.box.y, d.box.w, d.box.h,
                          d.score);
            out << img.image_id << buf;
        }
    }
}

std::vector<ImageDetections> read_detections(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read detections from " + path.string());
    std::vector<ImageDetections> all;
    std::map<std::string, std::size_t> index;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream ss(line);
        std::string id;
        Detection d;
        std::string extra;
        if (!(ss >> id >> d.box.x >> d.box.y >> d.box.w >> d.box.h >> d.score) || (ss >> extra))
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'image_id x y w h score'");
        if (!(d.box.w > 0.0 && d.box.h > 0.0) || !std::isfinite(d.score))
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": non-positive box size or bad score");
        auto [it, inserted] = index.try_emplace(id, all.size());
        if (inserted)
            all.push_back({id, {}});
        all[it->second].detections.push_back(d);
    }
    return all;
}

} // namespace cscdet
