#include "cscdet/pipeline.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace cscdet {

namespace {

std::string fmt_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value)
{
    T out{};
    const auto v = trim(value);
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value)
{
    const auto v = trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(value) + "'");
}

std::vector<int> parse_scales(std::string_view key, std::string_view value)
{
    std::vector<int> out;
    std::string token;
    for (char c : std::string(value) + ",") {
        if (c == ',' || c == '-' || c == ' ') {
            if (!token.empty())
                out.push_back(parse_number<int>(key, token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (out.empty())
        throw ConfigError("config key '" + std::string(key) + "': empty scale list");
    return out;
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const
{
    std::string scales;
    for (int s : layout.scales)
        scales += (scales.empty() ? "" : "-") + std::to_string(s);
    return {
        {"scales", scales},
        {"pattern", std::string(pattern_name(layout.pattern))},
        {"measure", std::string(measure_name(layout.measure))},
        {"histogram_bins", std::to_string(layout.histogram_bins)},
        {"model_width", std::to_string(layout.model_width)},
        {"model_height", std::to_string(layout.model_height)},
        {"trees", std::to_string(boost.trees)},
        {"depth", std::to_string(boost.depth)},
        {"threshold_bins", std::to_string(boost.threshold_bins)},
        {"rounds", std::to_string(rounds)},
        {"negatives_per_round", std::to_string(negatives_per_round)},
        {"mirror_positives", mirror_positives ? "true" : "false"},
        {"crop_padding", std::to_string(crop_padding)},
        {"scale_step", fmt_double(detect.scale_step)},
        {"max_scale", fmt_double(detect.max_scale)},
        {"min_scale", fmt_double(detect.min_scale)},
        {"stride", std::to_string(detect.stride)},
        {"detect_threshold", fmt_double(detect.threshold)},
        {"nms_overlap", fmt_double(detect.nms_overlap)},
        {"mining_threshold", fmt_double(mining_threshold)},
        {"eval_min_height", fmt_double(eval.min_height)},
        {"eval_min_visibility", fmt_double(eval.min_visibility)},
        {"eval_xi", fmt_double(eval.xi)},
        {"eval_iou", fmt_double(eval.iou_threshold)},
        {"eval_label", eval.label},
        {"seed", std::to_string(seed)},
    };
}

void PipelineConfig::set(std::string_view key_in, std::string_view value_in)
{
    const std::string key(trim(key_in));
    const std::string value(trim(value_in));
    if (key == "scales")
        layout.scales = parse_scales(key, value);
    else if (key == "pattern")
        layout.pattern = parse_pattern(value);
    else if (key == "measure")
        layout.measure = parse_measure(value);
    else if (key == "histogram_bins")
        layout.histogram_bins = parse_number<int>(key, value);
    else if (key == "model_width")
        layout.model_width = parse_number<int>(key, value);
    else if (key == "model_height")
        layout.model_height = parse_number<int>(key, value);
    else if (key == "trees")
        boost.trees = parse_number<int>(key, value);
    else if (key == "depth")
        boost.depth = parse_number<int>(key, value);
    else if (key == "threshold_bins")
        boost.threshold_bins = parse_number<int>(key, value);
    else if (key == "rounds")
        rounds = parse_number<int>(key, value);
    else if (key == "negatives_per_round")
        negatives_per_round = parse_number<std::size_t>(key, value);
    else if (key == "mirror_positives")
        mirror_positives = parse_bool(key, value);
    else if (key == "crop_padding")
        crop_padding = parse_number<int>(key, value);
    else if (key == "scale_step")
        detect.scale_step = parse_number<double>(key, value);
    else if (key == "max_scale")
        detect.max_scale = parse_number<double>(key, value);
    else if (key == "min_scale")
        detect.min_scale = parse_number<double>(key, value);
    else if (key == "stride")
        detect.stride = parse_number<int>(key, value);
    else if (key == "detect_threshold")
        detect.threshold = parse_number<double>(key, value);
    else if (key == "nms_overlap")
        detect.nms_overlap = parse_number<double>(key, value);
    else if (key == "mining_threshold")
        mining_threshold = parse_number<double>(key, value);
    else if (key == "eval_min_height")
        eval.min_height = parse_number<double>(key, value);
    else if (key == "eval_min_visibility")
        eval.min_visibility = parse_number<double>(key, value);
    else if (key == "eval_xi")
        eval.xi = parse_number<double>(key, value);
    else if (key == "eval_iou")
        eval.iou_threshold = parse_number<double>(key, value);
    else if (key == "eval_label")
        eval.label = value;
    else if (key == "seed")
        seed = parse_number<std::uint64_t>(key, value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void PipelineConfig::validate() const
{
    build_layout(layout); // throws on a bad layout
    if (boost.trees < 1 || boost.trees > kMaxTrees)
        throw ConfigError("trees must lie in [1, " + std::to_string(kMaxTrees) + "]");
    if (boost.depth != 1 && boost.depth != 2)
        throw ConfigError("depth must be 1 or 2");
    if (boost.threshold_bins < 2 || boost.threshold_bins > 256)
        throw ConfigError("threshold_bins must lie in [2, 256]");
    if (rounds < 1)
        throw ConfigError("rounds must be >= 1");
    if (negatives_per_round < 1)
        throw ConfigError("negatives_per_round must be >= 1");
    if (crop_padding < 0)
        throw ConfigError("crop_padding must be >= 0");
    if (!(detect.scale_step > 1.0))
        throw ConfigError("scale_step must be > 1");
    if (!(detect.max_scale > 0.0) || detect.min_scale < 0.0 || detect.min_scale > detect.max_scale)
        throw ConfigError("need 0 <= min_scale <= max_scale and max_scale > 0");
    if (detect.stride < 1)
        throw ConfigError("stride must be >= 1");
    if (!(detect.nms_overlap > 0.0 && detect.nms_overlap <= 1.0))
        throw ConfigError("nms_overlap must lie in (0, 1]");
    if (!(eval.xi > 0.0))
        throw ConfigError("eval_xi must be positive");
    if (!(eval.iou_threshold >= 0.0 && eval.iou_threshold < 1.0))
        throw ConfigError("eval_iou must lie in [0, 1)");
}

std::string PipelineConfig::to_text() const
{
    std::string out;
    for (const auto &[k, v] : entries())
        out += k + " = " + v + "\n";
    return out;
}

std::uint64_t PipelineConfig::hash() const
{
    return fnv1a(to_text());
}

std::string PipelineConfig::file_header() const
{
    return "# cscdet " + std::string(kToolVersion) + " config=" + hex64(hash()) + " seed=" + std::to_string(seed);
}

PipelineConfig load_config_file(const std::filesystem::path &path, PipelineConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file " + path.string());
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        std::string_view l = line;
        if (const auto hash = l.find('#'); hash != std::string_view::npos)
            l = l.substr(0, hash);
        l = trim(l);
        if (l.empty())
            continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            base.set(l.substr(0, eq), l.substr(eq + 1));
        } catch (const ConfigError &e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path &dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw IoError("image directory not found: " + dir.string());
    static const std::set<std::string> exts = {".png", ".jpg", ".jpeg", ".ppm", ".pgm", ".bmp"};
    std::vector<fs::path> out;
    for (const auto &e : fs::directory_iterator(dir)) {
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (e.is_regular_file() && exts.count(ext))
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RasterImage> load_images(const std::vector<std::filesystem::path> &paths)
{
    std::vector<RasterImage> out;
    out.reserve(paths.size());
    for (const auto &p : paths)
        out.push_back(load_image(p));
    return out;
}

FeatureMatrix positive_features(const std::vector<RasterImage> &samples, const FeatureLayout &layout, bool mirror)
{
    const std::size_t per = mirror ? 2 : 1;
    std::vector<FeatureVector> rows(samples.size() * per);
    const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const RasterImage &s = samples[k / per];
        rows[k] = k % per ? sample_features(mirror_horizontal(s), layout) : sample_features(s, layout);
    }
    FeatureMatrix m(layout.feature_count());
    m.reserve_rows(rows.size());
    for (const auto &r : rows)
        m.append(r);
    return m;
}

FeatureMatrix crop_features(const std::vector<RasterImage> &crops, const FeatureLayout &layout)
{
    return positive_features(crops, layout, false);
}

TrainResult train_detector(const PipelineConfig &cfg, const std::vector<RasterImage> &positive_samples,
                           const std::vector<RasterImage> &negative_images, std::ostream *log)
{
    cfg.validate();
    if (positive_samples.empty())
        throw TrainingError("no positive samples");
    if (negative_images.empty())
        throw TrainingError("no negative images");
    const FeatureLayout layout = build_layout(cfg.layout);
    const int mw = layout.config().model_width, mh = layout.config().model_height;

    TrainResult res;
    res.positives = positive_features(positive_samples, layout, cfg.mirror_positives);
    if (log)
        *log << "positives: " << res.positives.rows() << " samples x " << layout.feature_count() << " features\n";

    // Crops are drawn and featurised in chunks to bound memory; the RNG stream is the same.
    std::mt19937_64 rng(cfg.seed);
    res.negatives = FeatureMatrix(layout.feature_count());
    res.negatives.reserve_rows(cfg.negatives_per_round);
    for (std::size_t done = 0; done < cfg.negatives_per_round;) {
        const std::size_t chunk = std::min<std::size_t>(256, cfg.negatives_per_round - done);
        res.negatives.append(crop_features(
            random_negative_crops(negative_images, chunk, mw, mh, cfg.crop_padding, rng), layout));
        done += chunk;
    }

    DetectConfig mining = cfg.detect;
    mining.threshold = cfg.mining_threshold;
    for (int r = 0; r < cfg.rounds; ++r) {
        RoundSummary summary;
        summary.round = r;
        if (r == 0) {
            summary.negatives_added = res.negatives.rows();
        } else {
            MiningResult mined = mine_hard_negatives(res.classifier, negative_images, cfg.negatives_per_round, mining);
            summary.mined_candidates = mined.candidates;
            summary.negatives_added = mined.features.rows();
            if (log)
                *log << "round " << r << ": " << mined.candidates << " false positives, keeping "
                     << mined.features.rows() << "\n";
            if (mined.features.rows() == 0) {
                if (log)
                    *log << "round " << r << ": no hard negatives left, stopping\n";
                break;
            }
            res.negatives.append(mined.features);
        }
        summary.negative_pool = res.negatives.rows();
        res.classifier = train_adaboost(res.positives, res.negatives, layout, cfg.boost, &summary.report);
        summary.trees = res.classifier.trees().size();
        if (log)
            *log << "round " << r << ": trained " << summary.trees << " trees on " << res.positives.rows() << " pos / "
                 << summary.negative_pool << " neg (" << summary.report.stop_reason << "), training error "
                 << summary.report.training_errors.back() << "\n";
        res.rounds.push_back(std::move(summary));
    }
    return res;
}

std::size_t count_hard_negatives(const StrongClassifier &clf, const std::vector<RasterImage> &images,
                                 const PipelineConfig &cfg)
{
    DetectConfig mining = cfg.detect;
    mining.threshold = cfg.mining_threshold;
    std::size_t n = 0;
    for (const RasterImage &img : images)
        n += detect(img, clf, mining).size();
    return n;
}

void write_feature_matrix(const FeatureMatrix &m, const FeatureLayout &layout, const std::filesystem::path &path,
                          std::string_view header)
{
    if (!m.empty() && m.cols() != layout.feature_count())
        throw ShapeError("feature matrix does not match the layout");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write feature matrix " + path.string());
    out << "CSCDET-FMAT 1\n" << header << "\n";
    out << "rows " << m.rows() << " cols " << layout.feature_count() << " layout " << hex64(layout.fingerprint())
        << " float32-le\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

FeatureMatrix read_feature_matrix(const std::filesystem::path &path, const FeatureLayout *expect)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read feature matrix " + path.string());
    std::string magic, header, shape;
    std::getline(in, magic);
    std::getline(in, header);
    std::getline(in, shape);
    if (magic != "CSCDET-FMAT 1")
        throw FormatError(path.string() + ": not a feature matrix file");
    std::istringstream ss(shape);
    std::string w1, w2, w3, fp, enc;
    std::size_t rows = 0, cols = 0;
    if (!(ss >> w1 >> rows >> w2 >> cols >> w3 >> fp >> enc) || w1 != "rows" || w2 != "cols" || w3 != "layout")
        throw FormatError(path.string() + ": malformed shape line");
    if (expect && (cols != expect->feature_count() || fp != hex64(expect->fingerprint())))
        throw LayoutMismatchError(path.string() + ": features were extracted with a different layout");
    FeatureMatrix m(cols);
    m.reserve_rows(rows);
    std::vector<float> row(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!in.read(reinterpret_cast<char *>(row.data()), static_cast<std::streamsize>(cols * sizeof(float))))
            throw FormatError(path.string() + ": truncated after " + std::to_string(i) + " rows");
        m.append(row);
    }
    return m;
}

namespace {

void log_config(const PipelineConfig &cfg, std::string_view command, std::ostream &log)
{
    log << "cscdet " << kToolVersion << " " << command << "\n" << cfg.file_header() << "\n" << cfg.to_text();
}

nlohmann::json config_json(const PipelineConfig &cfg)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[k, v] : cfg.entries())
        j[k] = v;
    return j;
}

} // namespace

void run_extract(const PipelineConfig &cfg, const std::filesystem::path &images_dir, const std::filesystem::path &out,
                 std::ostream &log)
{
    cfg.validate();
    log_config(cfg, "extract", log);
    const FeatureLayout layout = build_layout(cfg.layout);
    const auto paths = list_images(images_dir);
    const FeatureMatrix m = positive_features(load_images(paths), layout, false);
    write_feature_matrix(m, layout, out, cfg.file_header());
    log << "extracted " << m.rows() << " x " << layout.feature_count() << " -> " << out.string() << "\n";
}

TrainResult run_train(const PipelineConfig &cfg, const std::filesystem::path &pos_dir,
                      const std::filesystem::path &neg_dir, const std::filesystem::path &out_dir, std::ostream &log)
{
    cfg.validate();
    log_config(cfg, "train", log);
    const auto pos_paths = list_images(pos_dir);
    const auto neg_paths = list_images(neg_dir);
    if (pos_paths.empty())
        throw IoError("no images in " + pos_dir.string());
    if (neg_paths.empty())
        throw IoError("no images in " + neg_dir.string());
    TrainResult res = train_detector(cfg, load_images(pos_paths), load_images(neg_paths), &log);

    std::filesystem::create_directories(out_dir);
    nlohmann::json meta = {{"tool_version", kToolVersion},
                           {"header", cfg.file_header()},
                           {"config", config_json(cfg)}};
    save_classifier(res.classifier, out_dir / "model.json", meta);

    const WeightMaps maps = emit_weight_maps(res.classifier);
    write_weight_maps_csv(maps, out_dir / "weights_cells.csv", out_dir / "weights_channels.csv", cfg.file_header());

    std::ofstream rounds(out_dir / "rounds.csv");
    if (!rounds)
        throw IoError("cannot write " + (out_dir / "rounds.csv").string());
    rounds << cfg.file_header() << "\nround,negatives_added,negative_pool,mined_candidates,trees,final_training_error\n";
    for (const RoundSummary &r : res.rounds)
        rounds << r.round << ',' << r.negatives_added << ',' << r.negative_pool << ',' << r.mined_candidates << ','
               << r.trees << ',' << fmt_double(r.report.training_errors.back()) << '\n';
    log << "model -> " << (out_dir / "model.json").string() << "\n";
    return res;
}

std::vector<ImageDetections> run_detect(const PipelineConfig &cfg, const std::filesystem::path &model_path,
                                        const std::filesystem::path &images_dir, const std::filesystem::path &out,
                                        std::ostream &log)
{
    cfg.validate();
    log_config(cfg, "detect", log);
    const StrongClassifier clf = load_classifier(model_path);
    if (!(clf.layout().config() == cfg.layout)) {
        const FeatureLayout want = build_layout(cfg.layout);
        throw LayoutMismatchError("model " + model_path.string() + " uses layout " +
                                  layout_to_json(clf.layout()).dump() + " but the config describes " +
                                  layout_to_json(want).dump());
    }
    std::vector<ImageDetections> all;
    std::size_t total = 0;
    for (const auto &p : list_images(images_dir)) {
        all.push_back({p.stem().string(), detect(load_image(p), clf, cfg.detect)});
        total += all.back().detections.size();
    }
    write_detections(all, out, cfg.file_header());
    log << all.size() << " images, " << total << " detections -> " << out.string() << "\n";
    return all;
}

EvalCurve run_eval(const PipelineConfig &cfg, const std::filesystem::path &detections,
                   const std::filesystem::path &annotations, const std::filesystem::path &images_dir,
                   const std::filesystem::path &out, std::ostream &log)
{
    cfg.validate();
    log_config(cfg, "eval", log);
    std::vector<std::string> ids;
    for (const auto &p : list_images(images_dir))
        ids.push_back(p.stem().string());
    std::map<std::string, std::vector<Detection>> dets;
    for (auto &d : read_detections(detections))
        dets[d.image_id] = std::move(d.detections);
    std::map<std::string, std::vector<Annotation>> annos;
    for (auto &a : read_annotations(annotations))
        annos[a.image_id].push_back(std::move(a));
    const EvalCurve curve = evaluate(ids, dets, annos, cfg.eval);
    write_curve_csv(curve, out, cfg.file_header());
    log << "lamr " << fmt_double(curve.lamr) << " over " << curve.images << " images, " << curve.required
        << " required annotations -> " << out.string() << "\n";
    return curve;
}

AverageMaps average_contrast_maps(const std::vector<RasterImage> &pos, const std::vector<RasterImage> &neg,
                                  const std::vector<int> &scales, int model_width, int model_height)
{
    auto mean_map = [&](const std::vector<RasterImage> &samples) {
        PlaneD acc(model_width, model_height, 0.0);
        if (samples.empty())
            return acc;
        for (const RasterImage &s : samples) {
            if (s.width() < model_width || s.height() < model_height)
                throw ShapeError("avgmap sample smaller than the model window");
            const PlaneF gray = to_gray(crop(s, (s.width() - model_width) / 2, (s.height() - model_height) / 2,
                                             model_width, model_height));
            for (int scale : scales) {
                const PlaneD m = contrast_map(gray, scale);
                for (std::size_t i = 0; i < acc.values().size(); ++i)
                    acc.values()[i] += m.values()[i];
            }
        }
        for (double &v : acc.values())
            v /= static_cast<double>(samples.size());
        return acc;
    };
    return {mean_map(pos), mean_map(neg)};
}

double band_mass_fraction(const PlaneD &map, int x0, int x1)
{
    double band = 0.0, total = 0.0;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            total += map.at(x, y);
            if (x >= x0 && x < x1)
                band += map.at(x, y);
        }
    return total > 0.0 ? band / total : 0.0;
}

AverageMaps run_avgmap(const PipelineConfig &cfg, const std::filesystem::path &pos_dir,
                       const std::filesystem::path &neg_dir, const std::vector<int> &scales,
                       const std::filesystem::path &out_dir, std::ostream &log)
{
    log_config(cfg, "avgmap", log);
    const AverageMaps maps = average_contrast_maps(load_images(list_images(pos_dir)), load_images(list_images(neg_dir)),
                                                   scales, cfg.layout.model_width, cfg.layout.model_height);
    std::filesystem::create_directories(out_dir);
    write_plane_csv(maps.positive, out_dir / "avgmap_pos.csv", cfg.file_header());
    write_plane_csv(maps.negative, out_dir / "avgmap_neg.csv", cfg.file_header());
    const int w = cfg.layout.model_width;
    log << "central-band mass share: pos " << band_mass_fraction(maps.positive, w / 3, w - w / 3) << ", neg "
        << band_mass_fraction(maps.negative, w / 3, w - w / 3) << "\n";
    return maps;
}

} // namespace cscdet
