#pragma once

#include <agarseg/error.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace agarseg {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kWhite{255, 255, 255};

/// Largest Euclidean distance between two RGB8 colours, sqrt(3 * 255^2).
inline constexpr double kMaxRgbDistance = 441.6729559300637;

double rgb_distance(const Rgb& a, const Rgb& b);

/// Row-major 2-D grid. Base for the colour, grey and boolean rasters below.
template <typename T>
class Grid {
  public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_size(width, height), fill) {}
    Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_size(width, height))
            throw Error(ErrorCode::DimensionMismatch, "pixel count does not match width x height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

  private:
    static std::size_t checked_size(int width, int height) {
        if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative raster dimensions");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RasterImage = Grid<Rgb>;
using GrayImage = Grid<std::uint8_t>;

/// true = foreground / retained.
class BinaryMask : public Grid<std::uint8_t> {
  public:
    using Grid::Grid;

    bool test(int x, int y) const { return at(x, y) != 0; }
    void set(int x, int y, bool v = true) { at(x, y) = v ? 1 : 0; }
    std::size_t count() const;

    BinaryMask& operator|=(const BinaryMask& other);
    BinaryMask& operator&=(const BinaryMask& other);
    /// Clears every bit that is set in `other`.
    BinaryMask& subtract(const BinaryMask& other);
    /// Every set bit of *this is also set in `other`.
    bool subset_of(const BinaryMask& other) const;
};

void require_same_shape(const auto& a, const auto& b, std::string_view what) {
    if (!a.same_shape(b))
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                        " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

// ---------------------------------------------------------------------------
// PNG I/O

RasterImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RasterImage& img);

RasterImage load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const RasterImage& img);

/// Mask PNGs hold exactly (0,0,0) and (255,255,255); reading accepts any
/// image and thresholds at luma 128 (white = retained).
BinaryMask mask_from_image(const RasterImage& img);
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

// ---------------------------------------------------------------------------
// Colour and background

/// ITU-601 luma, rounded half away from zero.
std::uint8_t luma(const Rgb& px);
GrayImage to_grayscale(const RasterImage& img);

struct BackgroundModel {
    enum class Mode { ChromaKey, CornerSample };

    Mode mode = Mode::CornerSample;
    Rgb key_color{};
    double tolerance = 30.0;

    void validate() const;
};

/// Pixel is background iff its RGB distance to the model colour is <= tolerance.
BinaryMask remove_background(const RasterImage& img, const BackgroundModel& model);

/// Colour actually used for keying: key_color, or the per-channel mean of
/// the four corner pixels.
std::array<double, 3> background_key(const RasterImage& img, const BackgroundModel& model);

// ---------------------------------------------------------------------------
// Dataset manifest

struct ManifestEntry {
    std::string id;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
    int width = 0;
    int height = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    const ManifestEntry* find(std::string_view id) const;
};

/// Parses {"entries":[{"id","image","mask"}]}; paths resolve against the
/// manifest's directory. All entry problems are collected into one Error.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);

} // namespace agarseg
