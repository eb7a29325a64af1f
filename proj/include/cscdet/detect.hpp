#pragma once

#include "cscdet/boost.hpp"
#include "cscdet/imaging.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace cscdet {

struct Box
{
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;

    double area() const { return w * h; }
    bool operator==(const Box &) const = default;
};

double intersection_area(const Box &a, const Box &b);
double intersection_over_union(const Box &a, const Box &b);
double intersection_over_min_area(const Box &a, const Box &b);

struct Detection
{
    Box box;
    double score = 0.0;
    /// Nominal resize factor of the pyramid level the window came from.
    double scale = 1.0;

    bool operator==(const Detection &) const = default;
};

struct DetectConfig
{
    double scale_step = 1.09;
    /// Largest resize factor (values > 1 upsample to find smaller people).
    double max_scale = 1.0;
    /// Smallest resize factor; 0 means keep shrinking while a model window fits.
    double min_scale = 0.0;
    /// Window stride in level pixels.
    int stride = 4;
    /// Windows scoring strictly above this are reported.
    double threshold = 0.0;
    double nms_overlap = 0.65;
};

struct PyramidLevel
{
    /// Nominal factor max_scale * step^-k.
    double scale = 1.0;
    int width = 0;
    int height = 0;
};

/// Levels from max_scale downwards by scale_step while the resized image still holds a
/// model window and the factor stays >= min_scale. Dimensions are rounded to nearest.
std::vector<PyramidLevel> build_scale_pyramid(int image_width, int image_height, int model_width,
                                              int model_height, const DetectConfig &cfg);

/// Top-left corners of every model window on a level, row-major.
std::vector<std::array<int, 2>> window_positions(int level_width, int level_height, int model_width,
                                                 int model_height, int stride);

/// Level pixel box mapped back to the original image via the level's actual per-axis ratio.
Box level_to_image(const PyramidLevel &level, int image_width, int image_height, double x, double y, double w,
                   double h);

/// Resize, smooth, compute channels and integrals for one level.
IntegralStack level_stack(const RasterImage &img, const PyramidLevel &level, int histogram_bins);

struct DetectStats
{
    std::size_t levels = 0;
    std::size_t windows = 0;
    std::size_t above_threshold = 0;
};

/// Multi-scale sliding-window detection followed by NMS. Images too small for the model
/// give an empty result.
std::vector<Detection> detect(const RasterImage &img, const StrongClassifier &clf, const DetectConfig &cfg,
                              DetectStats *stats = nullptr);

/// Same as detect() without the final NMS.
std::vector<Detection> detect_raw(const RasterImage &img, const StrongClassifier &clf, const DetectConfig &cfg,
                                  DetectStats *stats = nullptr);

/// Greedy suppression in score order (ties keep input order): a detection is dropped if its
/// intersection over the smaller area exceeds `overlap` with any kept one.
std::vector<Detection> nms(std::vector<Detection> dets, double overlap);

/// Features of the model window centred in a (padded) sample image. Channels are computed on
/// the whole sample so borders behave like in full-image detection.
FeatureVector sample_features(const RasterImage &sample, const FeatureLayout &layout);

/// `count` random model-aspect crops with height >= model height, resized to the model size
/// plus the given padding on every side (padding is sampled from the image, edge-clamped).
std::vector<RasterImage> random_negative_crops(const std::vector<RasterImage> &images, std::size_t count,
                                               int model_width, int model_height, int padding,
                                               std::mt19937_64 &rng);

struct MinedWindow
{
    std::size_t image = 0;
    Detection detection;
};

struct MiningResult
{
    FeatureMatrix features;
    std::vector<MinedWindow> windows;
    /// False positives found before the quota was applied.
    std::size_t candidates = 0;
};

/// Full detection (with NMS) over pedestrian-free images; keeps the `quota` highest-scoring
/// false positives (ties by image, then detection order) and extracts their features.
/// Throws ConfigError on an empty image set.
MiningResult mine_hard_negatives(const StrongClassifier &clf, const std::vector<RasterImage> &images,
                                 std::size_t quota, const DetectConfig &cfg);

/// `image_id x y w h score` per line, two decimals, after `#` header lines.
struct ImageDetections
{
    std::string image_id;
    std::vector<Detection> detections;
};

void write_detections(const std::vector<ImageDetections> &all, const std::filesystem::path &path,
                      std::string_view header = {});
std::vector<ImageDetections> read_detections(const std::filesystem::path &path);

} // namespace cscdet
