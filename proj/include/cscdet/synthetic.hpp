#pragma once

// Procedural pedestrian corpus: cluttered backgrounds and simple articulated
// figures. Stands in for a real dataset in tests and desk-scale runs.

#include "cscdet/evaluation.hpp"
#include "cscdet/imaging.hpp"

#include <filesystem>
#include <random>
#include <vector>

namespace cscdet {

/// Gradient base, rectangles, blobs, poles, stripes and upright props. Noise-free.
RasterImage synth_background(int width, int height, std::mt19937_64 &rng);

/// Per-pixel Gaussian noise (sigma 0.02), applied last so drawn figures are not flat.
void add_sensor_noise(RasterImage &img, std::mt19937_64 &rng);

/// Draws a figure whose body spans the window the way a person spans a model window
/// (head near 10 % of the height, feet near 90 %).
void draw_pedestrian(RasterImage &img, const Box &window, std::mt19937_64 &rng);

/// Model-sized figure on a fresh background, padded on every side.
RasterImage synth_positive(int model_width, int model_height, int padding, std::mt19937_64 &rng);

struct SyntheticScene
{
    RasterImage image;
    /// Window boxes of the planted figures.
    std::vector<Box> people;
};

/// Background with up to `count` non-overlapping figures of height in [min_h, max_h].
SyntheticScene synth_scene(int width, int height, int count, double min_h, double max_h, std::mt19937_64 &rng);

struct SyntheticCorpusSpec
{
    int positives = 200;
    int negative_images = 60;
    int test_images = 50;
    int negative_width = 320;
    int negative_height = 240;
    int scene_width = 320;
    int scene_height = 240;
    int max_people = 2;
    double min_person_height = 120.0;
    double max_person_height = 220.0;
    int padding = 8;
    std::uint64_t seed = 7;
};

/// Writes pos/, neg/, test/images/ (PNG) and test/annotations.txt under `root`.
void write_synthetic_corpus(const SyntheticCorpusSpec &spec, const std::filesystem::path &root);

} // namespace cscdet
