#pragma once

#include "cscdet/boost.hpp"
#include "cscdet/detect.hpp"
#include "cscdet/evaluation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cscdet {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Every hyperparameter of a run. Defaults are the full-scale setting: Gaussian + W2,
/// scales 4-6-8-10, C1S8, 4096 depth-2 trees, 4 rounds x 5000 negatives, step 1.09.
struct PipelineConfig
{
    LayoutConfig layout;
    BoostConfig boost;
    int rounds = 4;
    std::size_t negatives_per_round = 5000;
    bool mirror_positives = true;
    /// Context kept around random negative crops so their channels see real borders.
    int crop_padding = 8;
    DetectConfig detect;
    /// Mining keeps windows scoring above this.
    double mining_threshold = 0.0;
    EvalConfig eval;
    std::uint64_t seed = 1;

    /// Canonical (key, value) pairs in a fixed order.
    std::vector<std::pair<std::string, std::string>> entries() const;
    /// Throws ConfigError for an unknown key or an unparsable value.
    void set(std::string_view key, std::string_view value);
    /// Throws ConfigError for out-of-range values.
    void validate() const;

    /// `key = value` lines.
    std::string to_text() const;
    /// FNV-1a of to_text().
    std::uint64_t hash() const;
    /// One-line `# cscdet <version> config=<hash> seed=<seed>` file header.
    std::string file_header() const;
};

/// Flat `key = value` file; `#` starts a comment. Later keys override earlier ones.
PipelineConfig load_config_file(const std::filesystem::path &path, PipelineConfig base = {});

/// Image files (png/jpg/jpeg/ppm/pgm/bmp) in a directory, sorted by name. IoError if missing.
std::vector<std::filesystem::path> list_images(const std::filesystem::path &dir);
std::vector<RasterImage> load_images(const std::vector<std::filesystem::path> &paths);

/// Positive features (each sample plus its mirror when enabled), in input order.
FeatureMatrix positive_features(const std::vector<RasterImage> &samples, const FeatureLayout &layout, bool mirror);
FeatureMatrix crop_features(const std::vector<RasterImage> &crops, const FeatureLayout &layout);

struct RoundSummary
{
    int round = 0;
    std::size_t negatives_added = 0;
    std::size_t negative_pool = 0;
    /// Post-NMS false positives the previous round's detector produced on the mining set.
    std::size_t mined_candidates = 0;
    TrainingReport report;
    std::size_t trees = 0;
};

struct TrainResult
{
    StrongClassifier classifier;
    std::vector<RoundSummary> rounds;
    FeatureMatrix positives;
    FeatureMatrix negatives;
};

/// Round 0 trains on random crops; each later round mines hard negatives with the current
/// detector, adds them to the pool and retrains. Stops early when mining finds nothing.
TrainResult train_detector(const PipelineConfig &cfg, const std::vector<RasterImage> &positive_samples,
                           const std::vector<RasterImage> &negative_images, std::ostream *log = nullptr);

/// Post-NMS windows above the mining threshold over a negative image set.
std::size_t count_hard_negatives(const StrongClassifier &clf, const std::vector<RasterImage> &images,
                                 const PipelineConfig &cfg);

/// Binary feature matrix with a text header (tool version, config hash, shape, layout fingerprint).
void write_feature_matrix(const FeatureMatrix &m, const FeatureLayout &layout, const std::filesystem::path &path,
                          std::string_view header);
FeatureMatrix read_feature_matrix(const std::filesystem::path &path, const FeatureLayout *expect = nullptr);

// Commands. Each logs the resolved config and writes only the named outputs.

void run_extract(const PipelineConfig &cfg, const std::filesystem::path &images_dir, const std::filesystem::path &out,
                 std::ostream &log);

/// Writes model.json, weights_cells.csv, weights_channels.csv and rounds.csv into out_dir.
TrainResult run_train(const PipelineConfig &cfg, const std::filesystem::path &pos_dir,
                      const std::filesystem::path &neg_dir, const std::filesystem::path &out_dir, std::ostream &log);

/// LayoutMismatchError if the model was trained with a different layout than cfg describes.
std::vector<ImageDetections> run_detect(const PipelineConfig &cfg, const std::filesystem::path &model_path,
                                        const std::filesystem::path &images_dir, const std::filesystem::path &out,
                                        std::ostream &log);

/// Images are the files in images_dir (ids = file stems). Writes the curve CSV.
EvalCurve run_eval(const PipelineConfig &cfg, const std::filesystem::path &detections,
                   const std::filesystem::path &annotations, const std::filesystem::path &images_dir,
                   const std::filesystem::path &out, std::ostream &log);

struct AverageMaps
{
    PlaneD positive;
    PlaneD negative;
};

/// Mean over model-sized samples (larger ones are centre-cropped) of the summed contrast
/// maps at each scale, per class.
AverageMaps average_contrast_maps(const std::vector<RasterImage> &pos, const std::vector<RasterImage> &neg,
                                  const std::vector<int> &scales, int model_width = kModelWidth,
                                  int model_height = kModelHeight);

/// Share of a map's mass inside the central vertical band [x0, x1).
double band_mass_fraction(const PlaneD &map, int x0, int x1);

/// Writes avgmap_pos.csv and avgmap_neg.csv.
AverageMaps run_avgmap(const PipelineConfig &cfg, const std::filesystem::path &pos_dir,
                       const std::filesystem::path &neg_dir, const std::vector<int> &scales,
                       const std::filesystem::path &out_dir, std::ostream &log);

} // namespace cscdet
