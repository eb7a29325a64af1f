// Command-line front end: avgmap, extract, train, detect, eval, plus config and synth helpers.

#include "cscdet/errors.hpp"
#include "cscdet/pipeline.hpp"
#include "cscdet/synthetic.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>
#include <optional>

using namespace cscdet;

namespace {

enum ExitCode {
    kOk = 0,
    kOther = 1,
    kIo = 3,
    kFormat = 4,
    kLayout = 5,
    kConfig = 6,
    kTraining = 7,
    kEvaluation = 8,
};

std::string flag_name(std::string key)
{
    for (char &c : key)
        if (c == '_')
            c = '-';
    return "--" + key;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Center-surround contrast pedestrian detector"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "Flat key = value config file; flags override it")
        ->check(CLI::ExistingFile);

    // One flag per config key.
    const PipelineConfig defaults;
    std::map<std::string, std::optional<std::string>> overrides;
    for (const auto &[key, value] : defaults.entries()) {
        overrides[key];
        app.add_option(flag_name(key), overrides[key], "config: " + key + " (default " + value + ")")
            ->type_name("VALUE")->group("Config");
    }

    std::string pos_dir, neg_dir, images_dir, out, model, detections, annotations;
    std::vector<int> avg_scales{4, 6};

    auto *avgmap = app.add_subcommand("avgmap", "Average contrast maps of positive and negative samples");
    avgmap->add_option("--pos", pos_dir, "Positive sample directory")->required();
    avgmap->add_option("--neg", neg_dir, "Negative sample directory")->required();
    avgmap->add_option("--out", out, "Output directory")->required();
    avgmap->add_option("--avg-scales", avg_scales, "Cell sizes summed into the map")->delimiter(',');

    auto *extract = app.add_subcommand("extract", "Feature matrix of the centred window of every sample image");
    extract->add_option("--images", images_dir, "Sample directory")->required();
    extract->add_option("--out", out, "Output feature matrix file")->required();

    auto *train = app.add_subcommand("train", "Boosted training with hard-negative mining");
    train->add_option("--pos", pos_dir, "Positive samples (model window centred)")->required();
    train->add_option("--neg", neg_dir, "Pedestrian-free images")->required();
    train->add_option("--out", out, "Output directory")->required();

    auto *det = app.add_subcommand("detect", "Multi-scale detection over a directory of images");
    det->add_option("--model", model, "Model file")->required();
    det->add_option("--images", images_dir, "Image directory")->required();
    det->add_option("--out", out, "Output detection file")->required();

    auto *eval = app.add_subcommand("eval", "Miss rate vs FPPI curve and log-average miss rate");
    eval->add_option("--detections", detections, "Detection file")->required();
    eval->add_option("--annotations", annotations, "Annotation file")->required();
    eval->add_option("--images", images_dir, "Image directory defining the evaluated image set")->required();
    eval->add_option("--out", out, "Output curve CSV")->required();

    auto *show = app.add_subcommand("config", "Print the resolved config");

    SyntheticCorpusSpec synth_spec;
    auto *synth = app.add_subcommand("synth", "Write a procedural pedestrian corpus");
    synth->add_option("--out", out, "Corpus root")->required();
    synth->add_option("--positives", synth_spec.positives);
    synth->add_option("--negative-images", synth_spec.negative_images);
    synth->add_option("--test-images", synth_spec.test_images);
    synth->add_option("--corpus-seed", synth_spec.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg;
        if (!config_file.empty())
            cfg = load_config_file(config_file);
        for (const auto &[key, value] : overrides)
            if (value)
                cfg.set(key, *value);
        cfg.validate();

        if (*show) {
            std::cout << cfg.file_header() << "\n" << cfg.to_text();
        } else if (*avgmap) {
            run_avgmap(cfg, pos_dir, neg_dir, avg_scales, out, std::cerr);
        } else if (*extract) {
            run_extract(cfg, images_dir, out, std::cerr);
        } else if (*train) {
            run_train(cfg, pos_dir, neg_dir, out, std::cerr);
        } else if (*det) {
            run_detect(cfg, model, images_dir, out, std::cerr);
        } else if (*eval) {
            const EvalCurve curve = run_eval(cfg, detections, annotations, images_dir, out, std::cerr);
            std::cout << "lamr " << curve.lamr << "\n";
        } else if (*synth) {
            write_synthetic_corpus(synth_spec, out);
            std::cerr << "synthetic corpus -> " << out << "\n";
        }
    } catch (const IoError &e) {
        std::cerr << "error [io]: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError &e) {
        std::cerr << "error [format]: " << e.what() << "\n";
        return kFormat;
    } catch (const LayoutMismatchError &e) {
        std::cerr << "error [layout mismatch]: " << e.what() << "\n";
        return kLayout;
    } catch (const ConfigError &e) {
        std::cerr << "error [config]: " << e.what() << "\n";
        return kConfig;
    } catch (const TrainingError &e) {
        std::cerr << "error [training]: " << e.what() << "\n";
        return kTraining;
    } catch (const EvaluationError &e) {
        std::cerr << "error [evaluation]: " << e.what() << "\n";
        return kEvaluation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
    return kOk;
}
