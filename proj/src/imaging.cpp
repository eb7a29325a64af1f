#include "cscdet/imaging.hpp"

#include "cscdet/errors.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace cscdet {

namespace {

// D65 reference white.
constexpr double kXn = 0.950456;
constexpr double kYn = 1.0;
constexpr double kZn = 1.088754;
constexpr double kUn = 4.0 * kXn / (kXn + 15.0 * kYn + 3.0 * kZn);
constexpr double kVn = 9.0 * kYn / (kXn + 15.0 * kYn + 3.0 * kZn);

// CIE constants: (6/29)^3 and (29/3)^3.
constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

float clamp01(double v)
{
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

// (1,2,1)/4 along one axis of a single float plane with replicated borders.
void smooth_rows(const std::vector<float> &in, std::vector<float> &out, int w, int h)
{
    for (int y = 0; y < h; ++y) {
        const float *r = in.data() + static_cast<std::size_t>(y) * w;
        float *o = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const float left = r[std::max(x - 1, 0)];
            const float right = r[std::min(x + 1, w - 1)];
            o[x] = 0.25f * left + 0.5f * r[x] + 0.25f * right;
        }
    }
}

void smooth_cols(const std::vector<float> &in, std::vector<float> &out, int w, int h)
{
    for (int y = 0; y < h; ++y) {
        const float *up = in.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
        const float *mid = in.data() + static_cast<std::size_t>(y) * w;
        const float *down = in.data() + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
        float *o = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            o[x] = 0.25f * up[x] + 0.5f * mid[x] + 0.25f * down[x];
    }
}

} // namespace

std::string_view channel_name(ChannelId id)
{
    switch (id) {
    case ChannelId::L: return "L";
    case ChannelId::U: return "U";
    case ChannelId::V: return "V";
    case ChannelId::GradMag: return "GradMag";
    case ChannelId::Orient0: return "Orient0";
    case ChannelId::Orient1: return "Orient1";
    case ChannelId::Orient2: return "Orient2";
    case ChannelId::Orient3: return "Orient3";
    case ChannelId::Orient4: return "Orient4";
    case ChannelId::Orient5: return "Orient5";
    }
    return "?";
}

RasterImage::RasterImage(int width, int height, Rgb fill)
{
    if (width < 1 || height < 1)
        throw ShapeError("RasterImage: dimensions must be at least 1x1");
    pixels_ = Plane<Rgb>(width, height, fill);
}

ChannelStack::ChannelStack(int width, int height) : width_(width), height_(height)
{
    for (auto &p : planes_)
        p = PlaneF(width, height, 0.f);
}

RasterImage smooth_binomial(const RasterImage &img)
{
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;

    RasterImage out(w, h);
    std::vector<float> plane(n), tmp(n), result(n);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const Rgb &p = img.pixels().values()[i];
            plane[i] = c == 0 ? p.r : (c == 1 ? p.g : p.b);
        }
        smooth_rows(plane, tmp, w, h);
        smooth_cols(tmp, result, w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                Rgb &p = out.at(x, y);
                const float v = result[static_cast<std::size_t>(y) * w + x];
                (c == 0 ? p.r : (c == 1 ? p.g : p.b)) = v;
            }
    }
    return out;
}

std::array<float, 3> rgb_to_luv_scaled(const Rgb &rgb)
{
    const double r = rgb.r, g = rgb.g, b = rgb.b;
    const double x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
    const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
    const double z = 0.019334 * r + 0.119193 * g + 0.950227 * b;

    const double yr = y / kYn;
    const double l = yr > kEpsilon ? 116.0 * std::cbrt(yr) - 16.0 : kKappa * yr;

    const double denom = x + 15.0 * y + 3.0 * z;
    double u = 0.0, v = 0.0;
    if (denom > 1e-12) {
        u = 13.0 * l * (4.0 * x / denom - kUn);
        v = 13.0 * l * (9.0 * y / denom - kVn);
    }
    return {clamp01(l / 100.0), clamp01((u + 134.0) / 354.0), clamp01((v + 140.0) / 262.0)};
}

ChannelStack compute_channels(const RasterImage &img)
{
    const int w = img.width();
    const int h = img.height();
    ChannelStack stack(w, h);

    PlaneF &lp = stack.plane(ChannelId::L);
    PlaneF &up = stack.plane(ChannelId::U);
    PlaneF &vp = stack.plane(ChannelId::V);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto luv = rgb_to_luv_scaled(img.at(x, y));
            lp.at(x, y) = luv[0];
            up.at(x, y) = luv[1];
            vp.at(x, y) = luv[2];
        }

    const std::array<const PlaneF *, 3> colour{&lp, &up, &vp};
    PlaneF &mag = stack.plane(ChannelId::GradMag);
    constexpr double kBinWidth = std::numbers::pi / kNumOrientations;

    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);

            // Strongest colour gradient wins; ties keep the earlier plane.
            double best_sq = -1.0, gx = 0.0, gy = 0.0;
            for (const PlaneF *p : colour) {
                const double dx = 0.5 * (static_cast<double>(p->at(xp, y)) - p->at(xm, y));
                const double dy = 0.5 * (static_cast<double>(p->at(x, yp)) - p->at(x, ym));
                const double sq = dx * dx + dy * dy;
                if (sq > best_sq) {
                    best_sq = sq;
                    gx = dx;
                    gy = dy;
                }
            }
            const float m = static_cast<float>(std::sqrt(best_sq));
            mag.at(x, y) = m;
            if (m == 0.f)
                continue;

            double theta = std::atan2(gy, gx);
            if (theta < 0.0)
                theta += std::numbers::pi;
            if (theta >= std::numbers::pi)
                theta -= std::numbers::pi;

            // Bin k is centred at (k + 0.5) * pi/6; interpolate between the two nearest, wrapping 5 <-> 0.
            const double pos = theta / kBinWidth - 0.5;
            const double lower = std::floor(pos);
            const float frac = static_cast<float>(pos - lower);
            const int b0 = (static_cast<int>(lower) + kNumOrientations) % kNumOrientations;
            const int b1 = (b0 + 1) % kNumOrientations;
            const float upper_mass = m * frac;
            stack.plane(static_cast<ChannelId>(static_cast<int>(ChannelId::Orient0) + b0)).at(x, y) += m - upper_mass;
            stack.plane(static_cast<ChannelId>(static_cast<int>(ChannelId::Orient0) + b1)).at(x, y) += upper_mass;
        }
    }
    return stack;
}

ChannelStack compute_channels_smoothed(const RasterImage &img)
{
    return compute_channels(smooth_binomial(img));
}

RasterImage resize_bilinear(const RasterImage &img, int width, int height)
{
    if (width < 1 || height < 1)
        throw ShapeError("resize_bilinear: target must be at least 1x1");
    if (width == img.width() && height == img.height())
        return img;

    RasterImage out(width, height);
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    const int max_x = img.width() - 1;
    const int max_y = img.height() - 1;

    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, max_y);
        const float wy = static_cast<float>(fy - y0);
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, max_x);
            const float wx = static_cast<float>(fx - x0);

            const Rgb &a = img.at(x0, y0), &b = img.at(x1, y0), &c = img.at(x0, y1), &d = img.at(x1, y1);
            auto lerp2 = [&](float Rgb::*f) {
                const float top = a.*f + wx * (b.*f - a.*f);
                const float bottom = c.*f + wx * (d.*f - c.*f);
                return top + wy * (bottom - top);
            };
            out.at(x, y) = {lerp2(&Rgb::r), lerp2(&Rgb::g), lerp2(&Rgb::b)};
        }
    }
    return out;
}

RasterImage crop(const RasterImage &img, int x, int y, int width, int height)
{
    if (x < 0 || y < 0 || width < 1 || height < 1 || x + width > img.width() || y + height > img.height())
        throw BoundsError("crop: rectangle outside image");
    RasterImage out(width, height);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out.at(c, r) = img.at(x + c, y + r);
    return out;
}

RasterImage mirror_horizontal(const RasterImage &img)
{
    RasterImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(img.width() - 1 - x, y) = img.at(x, y);
    return out;
}

PlaneF to_gray(const RasterImage &img)
{
    PlaneF out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Rgb &p = img.at(x, y);
            out.at(x, y) = 0.299f * p.r + 0.587f * p.g + 0.114f * p.b;
        }
    return out;
}

RasterImage load_image(const std::filesystem::path &path)
{
    if (!std::filesystem::exists(path))
        throw IoError("image not found: " + path.string());
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty())
        throw IoError("cannot decode image: " + path.string());

    RasterImage img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto *row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x)
            img.at(x, y) = {row[x][2] / 255.f, row[x][1] / 255.f, row[x][0] / 255.f};
    }
    return img;
}

void save_image(const RasterImage &img, const std::filesystem::path &path)
{
    cv::Mat bgr(img.height(), img.width(), CV_8UC3);
    auto to_byte = [](float v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f)); };
    for (int y = 0; y < img.height(); ++y) {
        auto *row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x) {
            const Rgb &p = img.at(x, y);
            row[x] = {to_byte(p.b), to_byte(p.g), to_byte(p.r)};
        }
    }
    if (!cv::imwrite(path.string(), bgr))
        throw IoError("cannot write image: " + path.string());
}

void write_plane_pgm(const PlaneF &plane, const std::filesystem::path &path, float lo, float hi)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "P5\n" << plane.width() << ' ' << plane.height() << "\n255\n";
    const float span = hi > lo ? hi - lo : 1.f;
    for (float v : plane.values()) {
        const float t = std::clamp((v - lo) / span, 0.f, 1.f);
        out.put(static_cast<char>(std::lround(t * 255.f)));
    }
}

namespace {

template <typename T>
void write_csv_impl(const Plane<T> &plane, const std::filesystem::path &path, std::string_view header)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    if (!header.empty())
        out << header << '\n';
    out.precision(9);
    for (int y = 0; y < plane.height(); ++y) {
        for (int x = 0; x < plane.width(); ++x) {
            if (x)
                out << ',';
            out << plane.at(x, y);
        }
        out << '\n';
    }
}

} // namespace

void write_plane_csv(const PlaneD &plane, const std::filesystem::path &path, std::string_view header)
{
    write_csv_impl(plane, path, header);
}

void write_plane_csv(const PlaneF &plane, const std::filesystem::path &path, std::string_view header)
{
    write_csv_impl(plane, path, header);
}

} // namespace cscdet
