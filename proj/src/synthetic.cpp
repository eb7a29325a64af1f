#include "cscdet/synthetic.hpp"

#include "cscdet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cscdet {

namespace {

double uniform(std::mt19937_64 &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64 &rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Rgb random_color(std::mt19937_64 &rng, float lo = 0.f, float hi = 1.f)
{
    std::uniform_real_distribution<float> c(lo, hi);
    return {c(rng), c(rng), c(rng)};
}

void blend(RasterImage &img, int x, int y, const Rgb &c, double alpha)
{
    if (alpha <= 0.0 || x < 0 || y < 0 || x >= img.width() || y >= img.height())
        return;
    const auto a = static_cast<float>(std::min(alpha, 1.0));
    Rgb &p = img.at(x, y);
    p = {p.r + a * (c.r - p.r), p.g + a * (c.g - p.g), p.b + a * (c.b - p.b)};
}

void fill_rect(RasterImage &img, double x0, double y0, double x1, double y1, const Rgb &c)
{
    for (int y = std::max(0, static_cast<int>(std::floor(y0))); y < std::min(img.height(), static_cast<int>(std::ceil(y1))); ++y)
        for (int x = std::max(0, static_cast<int>(std::floor(x0))); x < std::min(img.width(), static_cast<int>(std::ceil(x1))); ++x) {
            // Fractional coverage along each axis keeps edges soft.
            const double cx = std::min(x + 1.0, x1) - std::max<double>(x, x0);
            const double cy = std::min(y + 1.0, y1) - std::max<double>(y, y0);
            blend(img, x, y, c, cx * cy);
        }
}

void fill_ellipse(RasterImage &img, double cx, double cy, double rx, double ry, const Rgb &c)
{
    for (int y = static_cast<int>(std::floor(cy - ry - 1)); y <= static_cast<int>(std::ceil(cy + ry + 1)); ++y)
        for (int x = static_cast<int>(std::floor(cx - rx - 1)); x <= static_cast<int>(std::ceil(cx + rx + 1)); ++x) {
            const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
            const double d = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
            blend(img, x, y, c, 0.5 - d);
        }
}

void thick_line(RasterImage &img, double x0, double y0, double x1, double y1, double radius, const Rgb &c)
{
    const double vx = x1 - x0, vy = y1 - y0;
    const double len2 = std::max(vx * vx + vy * vy, 1e-12);
    for (int y = static_cast<int>(std::floor(std::min(y0, y1) - radius - 1));
         y <= static_cast<int>(std::ceil(std::max(y0, y1) + radius + 1)); ++y)
        for (int x = static_cast<int>(std::floor(std::min(x0, x1) - radius - 1));
             x <= static_cast<int>(std::ceil(std::max(x0, x1) + radius + 1)); ++x) {
            const double px = x + 0.5 - x0, py = y + 0.5 - y0;
            const double t = std::clamp((px * vx + py * vy) / len2, 0.0, 1.0);
            const double d = std::hypot(px - t * vx, py - t * vy) - radius;
            blend(img, x, y, c, 0.5 - d);
        }
}

const Rgb kSkin[] = {{0.95f, 0.80f, 0.69f}, {0.87f, 0.67f, 0.53f}, {0.71f, 0.50f, 0.37f},
                     {0.55f, 0.38f, 0.26f}, {0.36f, 0.24f, 0.17f}};

} // namespace

RasterImage synth_background(int width, int height, std::mt19937_64 &rng)
{
    if (width < 1 || height < 1)
        throw ShapeError("synthetic background needs a positive size");
    RasterImage img(width, height);
    const Rgb top = random_color(rng, 0.2f, 0.9f), bottom = random_color(rng, 0.1f, 0.7f);
    for (int y = 0; y < height; ++y) {
        const float t = height > 1 ? static_cast<float>(y) / static_cast<float>(height - 1) : 0.f;
        const Rgb c{top.r + t * (bottom.r - top.r), top.g + t * (bottom.g - top.g), top.b + t * (bottom.b - top.b)};
        for (int x = 0; x < width; ++x)
            img.at(x, y) = c;
    }

    const double area = static_cast<double>(width) * height;
    const int rects = 3 + static_cast<int>(area / 8000.0) + uniform_int(rng, 0, 4);
    for (int i = 0; i < rects; ++i) {
        const double w = uniform(rng, 8, width * 0.5), h = uniform(rng, 8, height * 0.6);
        const double x = uniform(rng, -w / 2, width - w / 2), y = uniform(rng, -h / 2, height - h / 2);
        fill_rect(img, x, y, x + w, y + h, random_color(rng));
        if (uniform(rng, 0, 1) < 0.4) { // windows
            const Rgb wc = random_color(rng);
            for (double yy = y + 4; yy + 6 < y + h; yy += 12)
                for (double xx = x + 4; xx + 5 < x + w; xx += 10)
                    fill_rect(img, xx, yy, xx + 5, yy + 6, wc);
        }
    }
    const int blobs = 2 + static_cast<int>(area / 15000.0);
    for (int i = 0; i < blobs; ++i)
        fill_ellipse(img, uniform(rng, 0, width), uniform(rng, 0, height), uniform(rng, 4, 40), uniform(rng, 4, 30),
                     random_color(rng));
    const int poles = uniform_int(rng, 0, 3);
    for (int i = 0; i < poles; ++i) {
        const double x = uniform(rng, 0, width), y = uniform(rng, 0, height * 0.5);
        fill_rect(img, x, y, x + uniform(rng, 2, 7), y + uniform(rng, 40, height), random_color(rng, 0.f, 0.6f));
    }
    const int lines = uniform_int(rng, 1, 5);
    for (int i = 0; i < lines; ++i)
        thick_line(img, uniform(rng, 0, width), uniform(rng, 0, height), uniform(rng, 0, width),
                   uniform(rng, 0, height), uniform(rng, 0.5, 3), random_color(rng));
    if (uniform(rng, 0, 1) < 0.5) { // stripes
        const double x = uniform(rng, 0, width * 0.7), y = uniform(rng, 0, height * 0.7);
        const double w = uniform(rng, 20, width * 0.4), h = uniform(rng, 20, height * 0.4);
        const Rgb sc = random_color(rng);
        const double period = uniform(rng, 3, 10);
        const bool vertical = uniform(rng, 0, 1) < 0.5;
        for (double s = 0; s < (vertical ? w : h); s += period)
            if (vertical)
                fill_rect(img, x + s, y, x + s + period / 2, y + h, sc);
            else
                fill_rect(img, x, y + s, x + w, y + s + period / 2, sc);
    }

    // Figure-like clutter: bollards, lamps, trees and head-over-body "snowmen".
    const int props = uniform_int(rng, 0, 2 + static_cast<int>(area / 30000.0));
    for (int i = 0; i < props; ++i) {
        const double h = uniform(rng, 25, height * 0.9);
        const double x = uniform(rng, 0, width), y = uniform(rng, -h * 0.2, height - h * 0.5);
        const Rgb c = random_color(rng);
        switch (uniform_int(rng, 0, 3)) {
        case 0:
            thick_line(img, x, y + h * 0.15, x, y + h, h * uniform(rng, 0.06, 0.15), c);
            fill_ellipse(img, x, y + h * 0.15, h * 0.12, h * 0.12, random_color(rng));
            break;
        case 1:
            fill_rect(img, x - 1.5, y + h * 0.2, x + 1.5, y + h, c);
            fill_ellipse(img, x, y + h * 0.12, h * uniform(rng, 0.06, 0.2), h * 0.1, random_color(rng));
            break;
        case 2:
            fill_rect(img, x - h * 0.04, y + h * 0.5, x + h * 0.04, y + h, random_color(rng, 0.f, 0.5f));
            fill_ellipse(img, x, y + h * 0.3, h * uniform(rng, 0.15, 0.35), h * 0.3, c);
            break;
        default:
            fill_ellipse(img, x, y + h * 0.55, h * uniform(rng, 0.1, 0.2), h * 0.35, c);
            fill_ellipse(img, x, y + h * 0.12, h * 0.08, h * 0.1, kSkin[uniform_int(rng, 0, 4)]);
            break;
        }
    }
    return img;
}

void add_sensor_noise(RasterImage &img, std::mt19937_64 &rng)
{
    std::normal_distribution<float> noise(0.f, 0.02f);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            Rgb &p = img.at(x, y);
            p = {std::clamp(p.r + noise(rng), 0.f, 1.f), std::clamp(p.g + noise(rng), 0.f, 1.f),
                 std::clamp(p.b + noise(rng), 0.f, 1.f)};
        }
}

void draw_pedestrian(RasterImage &img, const Box &window, std::mt19937_64 &rng)
{
    // Model coordinates: a 60x120 window, scaled to the target box.
    const double s = window.h / 120.0 * uniform(rng, 0.94, 1.04);
    const double ox = window.x + window.w / 2 + uniform(rng, -1.5, 1.5) * s;
    const double oy = window.y + window.h * 0.5 + uniform(rng, -1.5, 1.5) * s;
    auto X = [&](double mx) { return ox + (mx - 30.0) * s; };
    auto Y = [&](double my) { return oy + (my - 60.0) * s; };

    const Rgb skin = kSkin[uniform_int(rng, 0, 4)];
    const Rgb shirt = random_color(rng);
    const Rgb pants = random_color(rng, 0.f, 0.6f);
    const Rgb hair = random_color(rng, 0.f, 0.35f);
    const Rgb shoes = random_color(rng, 0.f, 0.3f);
    const double stride = uniform(rng, 0.0, 9.0);
    const double arm_swing = uniform(rng, -6.0, 6.0);
    const double torso_w = uniform(rng, 8.0, 10.5);

    // Legs (behind the torso), then the torso, arms and head.
    for (int side : {-1, 1}) {
        const double hip_x = 30 + side * 4.0;
        const double foot_x = 30 + side * (3.0 + stride * (side > 0 ? 1.0 : 0.6));
        thick_line(img, X(hip_x), Y(64), X(foot_x), Y(104), 3.6 * s, pants);
        thick_line(img, X(foot_x - 1), Y(106), X(foot_x + side * 3), Y(106), 2.2 * s, shoes);
    }
    fill_ellipse(img, X(30), Y(48), torso_w * s, 18.5 * s, shirt);
    fill_rect(img, X(30 - torso_w), Y(34), X(30 + torso_w), Y(64), shirt);
    for (int side : {-1, 1}) {
        const double sx = 30 + side * (torso_w + 1.0);
        const double hx = sx + side * 3.0 + (side > 0 ? arm_swing : -arm_swing) * 0.5;
        thick_line(img, X(sx), Y(34), X(hx), Y(62), 2.4 * s, shirt);
        fill_ellipse(img, X(hx), Y(64), 2.4 * s, 2.6 * s, skin);
    }
    thick_line(img, X(30), Y(26), X(30), Y(33), 2.5 * s, skin);
    fill_ellipse(img, X(30), Y(20), 6.2 * s, 8.0 * s, skin);
    fill_ellipse(img, X(30), Y(15), 6.6 * s, 4.5 * s, hair);
}

RasterImage synth_positive(int model_width, int model_height, int padding, std::mt19937_64 &rng)
{
    RasterImage img = synth_background(model_width + 2 * padding, model_height + 2 * padding, rng);
    draw_pedestrian(img, {static_cast<double>(padding), static_cast<double>(padding),
                          static_cast<double>(model_width), static_cast<double>(model_height)},
                    rng);
    add_sensor_noise(img, rng);
    return img;
}

SyntheticScene synth_scene(int width, int height, int count, double min_h, double max_h, std::mt19937_64 &rng)
{
    SyntheticScene scene{synth_background(width, height, rng), {}};
    max_h = std::min(max_h, static_cast<double>(height));
    for (int i = 0, attempts = 0; i < count && attempts < 50 * count; ++attempts) {
        const double h = uniform(rng, min_h, max_h);
        const double w = h / 2;
        if (w > width)
            continue;
        const Box b{uniform(rng, 0, width - w), uniform(rng, 0, height - h), w, h};
        bool clear = true;
        for (const Box &o : scene.people)
            clear = clear && intersection_area(b, o) == 0.0;
        if (!clear)
            continue;
        draw_pedestrian(scene.image, b, rng);
        scene.people.push_back(b);
        ++i;
    }
    add_sensor_noise(scene.image, rng);
    return scene;
}

void write_synthetic_corpus(const SyntheticCorpusSpec &spec, const std::filesystem::path &root)
{
    namespace fs = std::filesystem;
    fs::create_directories(root / "pos");
    fs::create_directories(root / "neg");
    fs::create_directories(root / "test" / "images");
    std::mt19937_64 rng(spec.seed);
    char name[64];
    for (int i = 0; i < spec.positives; ++i) {
        std::snprintf(name, sizeof name, "pos_%05d.png", i);
        save_image(synth_positive(kModelWidth, kModelHeight, spec.padding, rng), root / "pos" / name);
    }
    for (int i = 0; i < spec.negative_images; ++i) {
        std::snprintf(name, sizeof name, "neg_%05d.png", i);
        RasterImage neg = synth_background(spec.negative_width, spec.negative_height, rng);
        add_sensor_noise(neg, rng);
        save_image(neg, root / "neg" / name);
    }
    std::vector<Annotation> annos;
    for (int i = 0; i < spec.test_images; ++i) {
        const int people = uniform_int(rng, 1, std::max(1, spec.max_people));
        const SyntheticScene scene = synth_scene(spec.scene_width, spec.scene_height, people, spec.min_person_height,
                                                 spec.max_person_height, rng);
        std::snprintf(name, sizeof name, "test_%05d", i);
        save_image(scene.image, root / "test" / "images" / (std::string(name) + ".png"));
        for (const Box &b : scene.people) {
            Annotation a;
            a.image_id = name;
            a.box = b;
            annos.push_back(a);
        }
    }
    write_annotations(annos, root / "test" / "annotations.txt", "# synthetic corpus seed " + std::to_string(spec.seed));
}

} // namespace cscdet
