#include "cscdet/evaluation.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace cscdet {

double Annotation::visibility() const
{
    if (!visible)
        return 1.0;
    const double a = box.area();
    return a > 0.0 ? std::clamp(intersection_area(box, *visible) / a, 0.0, 1.0) : 0.0;
}

std::vector<Annotation> read_annotations(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read annotations from " + path.string());
    std::vector<Annotation> out;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        std::istringstream ss(line);
        Annotation a;
        Box v;
        int flag = 0;
        std::string extra;
        if (!(ss >> a.image_id >> a.label >> a.box.x >> a.box.y >> a.box.w >> a.box.h >> v.x >> v.y >> v.w >> v.h >>
              flag) ||
            (ss >> extra))
            throw FormatError(where + "expected 'image_id label x y w h vx vy vw vh ignore_flag'");
        if (!(a.box.w > 0.0 && a.box.h > 0.0))
            throw FormatError(where + "box width and height must be positive");
        if (flag != 0 && flag != 1)
            throw FormatError(where + "ignore_flag must be 0 or 1");
        a.ignore = flag == 1;
        if (!(v.x == -1 && v.y == -1 && v.w == -1 && v.h == -1)) {
            if (!(v.w > 0.0 && v.h > 0.0))
                throw FormatError(where + "visible box must be positive or -1 -1 -1 -1");
            a.visible = v;
        }
        out.push_back(std::move(a));
    }
    return out;
}

void write_annotations(const std::vector<Annotation> &annos, const std::filesystem::path &path,
                       std::string_view header)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write annotations to " + path.string());
    if (!header.empty())
        out << header << '\n';
    out << "# image_id label x y w h vx vy vw vh ignore_flag\n";
    char buf[256];
    for (const Annotation &a : annos) {
        const Box v = a.visible.value_or(Box{-1, -1, -1, -1});
        std::snprintf(buf, sizeof buf, " %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %d\n", a.box.x, a.box.y, a.box.w,
                      a.box.h, v.x, v.y, v.w, v.h, a.ignore ? 1 : 0);
        out << a.image_id << ' ' << a.label << buf;
    }
}

std::vector<Annotation> filter_ground_truth(std::vector<Annotation> annos, const EvalConfig &cfg)
{
    for (Annotation &a : annos)
        if (a.label != cfg.label || !(a.height() > cfg.min_height) || !(a.visibility() > cfg.min_visibility))
            a.ignore = true;
    return annos;
}

std::vector<Detection> filter_detections(std::vector<Detection> dets, const EvalConfig &cfg)
{
    const double lo = cfg.min_height / cfg.xi;
    std::erase_if(dets, [&](const Detection &d) { return !(d.box.h >= lo); });
    return dets;
}

ImageMatch match(const std::vector<Detection> &dets, const std::vector<Annotation> &annos, double iou_threshold)
{
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    ImageMatch m;
    std::vector<bool> taken(annos.size(), false);
    for (const Annotation &a : annos)
        m.required += !a.ignore;

    for (std::size_t di : order) {
        const Box &box = dets[di].box;
        MatchedDetection md{dets[di].score, MatchKind::FalsePositive, -1};
        double best = iou_threshold;
        for (std::size_t ai = 0; ai < annos.size(); ++ai) {
            if (annos[ai].ignore || taken[ai])
                continue;
            const double iou = intersection_over_union(box, annos[ai].box);
            if (iou > best) {
                best = iou;
                md.kind = MatchKind::TruePositive;
                md.annotation = static_cast<int>(ai);
            }
        }
        if (md.kind == MatchKind::TruePositive) {
            taken[static_cast<std::size_t>(md.annotation)] = true;
        } else {
            best = iou_threshold;
            for (std::size_t ai = 0; ai < annos.size(); ++ai) {
                if (!annos[ai].ignore)
                    continue;
                const double iou = intersection_over_union(box, annos[ai].box);
                if (iou > best) {
                    best = iou;
                    md.kind = MatchKind::Ignored;
                    md.annotation = static_cast<int>(ai);
                }
            }
        }
        m.detections.push_back(md);
    }
    m.missed = m.required - static_cast<std::size_t>(std::count(taken.begin(), taken.end(), true));
    return m;
}

std::array<double, 9> reference_fppi_points()
{
    std::array<double, 9> r{};
    for (int k = 0; k < 9; ++k)
        r[static_cast<std::size_t>(k)] = std::pow(10.0, -2.0 + 0.25 * k);
    return r;
}

EvalCurve curve_and_lamr(std::span<const ImageMatch> matches, std::size_t image_count)
{
    if (image_count == 0)
        throw EvaluationError("cannot evaluate over zero images");
    EvalCurve curve;
    curve.images = image_count;
    for (const ImageMatch &m : matches)
        curve.required += m.required;
    if (curve.required == 0)
        throw EvaluationError("no required (non-ignored) annotations; miss rate is undefined");

    std::vector<MatchedDetection> all;
    for (const ImageMatch &m : matches)
        all.insert(all.end(), m.detections.begin(), m.detections.end());
    std::stable_sort(all.begin(), all.end(),
                     [](const MatchedDetection &a, const MatchedDetection &b) { return a.score > b.score; });

    const double n = static_cast<double>(image_count);
    const double r = static_cast<double>(curve.required);
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        tp += all[i].kind == MatchKind::TruePositive;
        fp += all[i].kind == MatchKind::FalsePositive;
        if (i + 1 < all.size() && all[i + 1].score == all[i].score)
            continue;
        curve.points.push_back({all[i].score, static_cast<double>(fp) / n, 1.0 - static_cast<double>(tp) / r});
    }

    curve.reference_fppi = reference_fppi_points();
    double log_sum = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
        const double ref = curve.reference_fppi[k];
        // Highest-threshold miss rate when no point reaches down to this FPPI; 1 with no detections at all.
        double mr = curve.points.empty() ? 1.0 : curve.points.front().miss_rate;
        for (const CurvePoint &p : curve.points) {
            if (p.fppi <= ref * (1.0 + 1e-12))
                mr = p.miss_rate;
            else
                break;
        }
        curve.reference_miss_rate[k] = mr;
        log_sum += std::log(std::max(mr, kMissRateFloor));
    }
    curve.lamr = std::exp(log_sum / 9.0);
    return curve;
}

EvalCurve evaluate(const std::vector<std::string> &image_ids, const std::map<std::string, std::vector<Detection>> &dets,
                   const std::map<std::string, std::vector<Annotation>> &annos, const EvalConfig &cfg)
{
    const std::set<std::string> known(image_ids.begin(), image_ids.end());
    if (known.size() != image_ids.size())
        throw EvaluationError("image list contains duplicate ids");
    for (const auto &[id, _] : dets)
        if (!known.count(id))
            throw EvaluationError("detections reference unknown image '" + id + "'");
    for (const auto &[id, _] : annos)
        if (!known.count(id))
            throw EvaluationError("annotations reference unknown image '" + id + "'");

    std::vector<ImageMatch> matches(image_ids.size());
    const auto n = static_cast<std::int64_t>(image_ids.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::string &id = image_ids[static_cast<std::size_t>(i)];
        const auto d = dets.find(id);
        const auto a = annos.find(id);
        matches[static_cast<std::size_t>(i)] =
            match(d == dets.end() ? std::vector<Detection>{} : filter_detections(d->second, cfg),
                  a == annos.end() ? std::vector<Annotation>{} : filter_ground_truth(a->second, cfg),
                  cfg.iou_threshold);
    }
    return curve_and_lamr(matches, image_ids.size());
}

void write_curve_csv(const EvalCurve &curve, const std::filesystem::path &path, std::string_view header)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write curve to " + path.string());
    if (!header.empty())
        out << header << '\n';
    out << "threshold,fppi,miss_rate\n";
    char buf[128];
    for (const CurvePoint &p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fppi, p.miss_rate);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "# lamr=%.17g images=%zu required=%zu\n", curve.lamr, curve.images,
                  curve.required);
    out << buf;
}

} // namespace cscdet
