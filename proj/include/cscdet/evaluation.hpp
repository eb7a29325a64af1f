#pragma once

#include "cscdet/detect.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cscdet {

struct Annotation
{
    std::string image_id;
    std::string label = "person";
    Box box;
    std::optional<Box> visible;
    bool ignore = false;

    double height() const { return box.h; }
    /// Fraction of the full box covered by the visible box; 1 when no visible box is given.
    double visibility() const;
};

struct EvalConfig
{
    /// Required annotations must be strictly taller than this.
    double min_height = 50.0;
    /// ... and strictly more visible than this.
    double min_visibility = 0.65;
    /// Detections shorter than min_height / xi are dropped.
    double xi = 1.25;
    double iou_threshold = 0.5;
    std::string label = "person";
};

/// `image_id label x y w h vx vy vw vh ignore_flag`; the visible box is `-1 -1 -1 -1` when absent.
/// Blank lines and `#` comments are skipped. FormatError names the offending line.
std::vector<Annotation> read_annotations(const std::filesystem::path &path);
void write_annotations(const std::vector<Annotation> &annos, const std::filesystem::path &path,
                       std::string_view header = {});

/// Flags as ignore everything that is too short, too occluded or not of the evaluated label.
std::vector<Annotation> filter_ground_truth(std::vector<Annotation> annos, const EvalConfig &cfg = {});

/// Keeps detections with height >= min_height / xi.
std::vector<Detection> filter_detections(std::vector<Detection> dets, const EvalConfig &cfg = {});

enum class MatchKind { TruePositive, FalsePositive, Ignored };

struct MatchedDetection
{
    double score = 0.0;
    MatchKind kind = MatchKind::FalsePositive;
    /// Index into the image's annotations, or -1 for false positives.
    int annotation = -1;
};

struct ImageMatch
{
    /// In processing order (score-descending, ties by input order).
    std::vector<MatchedDetection> detections;
    std::size_t required = 0;
    std::size_t missed = 0;
};

/// Greedy matching of one image's (filtered) detections against its annotations.
ImageMatch match(const std::vector<Detection> &dets, const std::vector<Annotation> &annos, double iou_threshold = 0.5);

struct CurvePoint
{
    double threshold = 0.0;
    double fppi = 0.0;
    double miss_rate = 1.0;
};

inline constexpr double kMissRateFloor = 1e-10;

struct EvalCurve
{
    /// One point per distinct detection score, threshold-descending (so FPPI ascending).
    std::vector<CurvePoint> points;
    /// Reference FPPI values and the miss rate taken at each.
    std::array<double, 9> reference_fppi{};
    std::array<double, 9> reference_miss_rate{};
    double lamr = 1.0;
    std::size_t images = 0;
    std::size_t required = 0;
};

/// The 9 log-spaced FPPI values in [1e-2, 1].
std::array<double, 9> reference_fppi_points();

/// Threshold sweep over all distinct scores plus log-average miss rate.
/// EvaluationError when there are no required annotations or no images.
EvalCurve curve_and_lamr(std::span<const ImageMatch> matches, std::size_t image_count);

/// Whole protocol over a set of images: filters, per-image matching, curve.
/// Images absent from `dets` or `annos` count as having none.
EvalCurve evaluate(const std::vector<std::string> &image_ids, const std::map<std::string, std::vector<Detection>> &dets,
                   const std::map<std::string, std::vector<Annotation>> &annos, const EvalConfig &cfg = {});

/// `threshold,fppi,miss_rate` rows followed by a `# lamr=` summary line.
void write_curve_csv(const EvalCurve &curve, const std::filesystem::path &path, std::string_view header = {});

} // namespace cscdet
