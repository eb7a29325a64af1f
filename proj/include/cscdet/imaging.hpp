#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string_view>
#include <vector>

namespace cscdet {

/// Dense row-major scalar grid.
template <typename T>
class Plane
{
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
    {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    T &at(int x, int y) { return data_[index(x, y)]; }
    const T &at(int x, int y) const { return data_[index(x, y)]; }

    T *row(int y) { return data_.data() + index(0, y); }
    const T *row(int y) const { return data_.data() + index(0, y); }

    std::vector<T> &values() { return data_; }
    const std::vector<T> &values() const { return data_; }

    bool operator==(const Plane &) const = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using PlaneF = Plane<float>;
using PlaneD = Plane<double>;

struct Rgb
{
    float r = 0.f;
    float g = 0.f;
    float b = 0.f;

    bool operator==(const Rgb &) const = default;
};

/// RGB image with components in [0,1].
class RasterImage
{
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {});

    int width() const { return pixels_.width(); }
    int height() const { return pixels_.height(); }

    Rgb &at(int x, int y) { return pixels_.at(x, y); }
    const Rgb &at(int x, int y) const { return pixels_.at(x, y); }

    const Plane<Rgb> &pixels() const { return pixels_; }

    bool operator==(const RasterImage &) const = default;

private:
    Plane<Rgb> pixels_;
};

enum class ChannelId : int {
    L = 0,
    U,
    V,
    GradMag,
    Orient0,
    Orient1,
    Orient2,
    Orient3,
    Orient4,
    Orient5,
};

inline constexpr int kNumChannels = 10;
inline constexpr int kNumOrientations = 6;

std::string_view channel_name(ChannelId id);

/// The 10 per-pixel planes: LUV, gradient magnitude, 6 unsigned orientation bins.
/// Every channel lies in [0,1].
class ChannelStack
{
public:
    ChannelStack() = default;
    ChannelStack(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    PlaneF &plane(ChannelId id) { return planes_[static_cast<std::size_t>(id)]; }
    const PlaneF &plane(ChannelId id) const { return planes_[static_cast<std::size_t>(id)]; }
    const PlaneF &plane(int index) const { return planes_.at(static_cast<std::size_t>(index)); }

    static constexpr std::array<ChannelId, kNumChannels> channel_ids()
    {
        return {ChannelId::L,       ChannelId::U,       ChannelId::V,       ChannelId::GradMag,
                ChannelId::Orient0, ChannelId::Orient1, ChannelId::Orient2, ChannelId::Orient3,
                ChannelId::Orient4, ChannelId::Orient5};
    }

    bool operator==(const ChannelStack &) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::array<PlaneF, kNumChannels> planes_;
};

/// Separable (1,2,1)/4 smoothing of each colour plane with edge replication.
RasterImage smooth_binomial(const RasterImage &img);

/// Expects an already smoothed image (see smooth_binomial).
ChannelStack compute_channels(const RasterImage &img);

/// smooth_binomial followed by compute_channels.
ChannelStack compute_channels_smoothed(const RasterImage &img);

/// CIE L*u*v* of a D65 RGB triple, each component rescaled into [0,1]:
/// L/100, (u+134)/354, (v+140)/262.
std::array<float, 3> rgb_to_luv_scaled(const Rgb &rgb);

/// Bilinear resampling (pixel-centre aligned) to the requested size.
RasterImage resize_bilinear(const RasterImage &img, int width, int height);

/// Copy of the given rectangle; it must lie inside the image.
RasterImage crop(const RasterImage &img, int x, int y, int width, int height);

RasterImage mirror_horizontal(const RasterImage &img);

/// Rec. 601 luma.
PlaneF to_gray(const RasterImage &img);

RasterImage load_image(const std::filesystem::path &path);

/// Format chosen by extension (png, jpg, ppm, pgm, ...).
void save_image(const RasterImage &img, const std::filesystem::path &path);

/// Debug dumps of a single plane. The PGM is linearly stretched from [lo,hi] to [0,255].
void write_plane_pgm(const PlaneF &plane, const std::filesystem::path &path, float lo = 0.f, float hi = 1.f);
void write_plane_csv(const PlaneD &plane, const std::filesystem::path &path, std::string_view header = {});
void write_plane_csv(const PlaneF &plane, const std::filesystem::path &path, std::string_view header = {});

} // namespace cscdet
