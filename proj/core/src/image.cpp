#include <agarseg/image.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agarseg {

double rgb_distance(const Rgb& a, const Rgb& b) {
    const double dr = double(a.r) - double(b.r);
    const double dg = double(a.g) - double(b.g);
    const double db = double(a.b) - double(b.b);
    return std::sqrt(dr * dr + dg * dg + db * db);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count_if(pixels().begin(), pixels().end(), [](auto v) { return v != 0; }));
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
    require_same_shape(*this, other, "mask union");
    auto dst = pixels();
    auto src = other.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (dst[i] | src[i]) ? 1 : 0;
    return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& other) {
    require_same_shape(*this, other, "mask intersection");
    auto dst = pixels();
    auto src = other.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (dst[i] && src[i]) ? 1 : 0;
    return *this;
}

BinaryMask& BinaryMask::subtract(const BinaryMask& other) {
    require_same_shape(*this, other, "mask subtraction");
    auto dst = pixels();
    auto src = other.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i)
        if (src[i]) dst[i] = 0;
    return *this;
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
    require_same_shape(*this, other, "mask subset");
    auto a = pixels();
    auto b = other.pixels();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

std::uint8_t luma(const Rgb& px) {
    // Integer form of 0.299 R + 0.587 G + 0.114 B; the sum is non-negative,
    // so adding half the divisor rounds half away from zero exactly.
    const int weighted = 299 * px.r + 587 * px.g + 114 * px.b;
    return static_cast<std::uint8_t>(std::min((weighted + 500) / 1000, 255));
}

GrayImage to_grayscale(const RasterImage& img) {
    GrayImage out(img.width(), img.height());
    std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(), luma);
    return out;
}

BinaryMask mask_from_image(const RasterImage& img) {
    BinaryMask mask(img.width(), img.height());
    std::transform(img.pixels().begin(), img.pixels().end(), mask.pixels().begin(),
                   [](const Rgb& px) -> std::uint8_t { return luma(px) >= 128 ? 1 : 0; });
    return mask;
}

void BackgroundModel::validate() const {
    if (!(tolerance >= 0.0) || tolerance > kMaxRgbDistance)
        throw Error(ErrorCode::InvalidArgument, "background tolerance must lie in [0, 441.68]");
}

std::array<double, 3> background_key(const RasterImage& img, const BackgroundModel& model) {
    if (model.mode == BackgroundModel::Mode::ChromaKey)
        return {double(model.key_color.r), double(model.key_color.g), double(model.key_color.b)};
    if (img.width() < 2 || img.height() < 2)
        throw Error(ErrorCode::InvalidArgument, "corner-sample background needs an image of at least 2x2");
    const int w = img.width() - 1;
    const int h = img.height() - 1;
    std::array<double, 3> key{};
    for (const Rgb& c : {img.at(0, 0), img.at(w, 0), img.at(0, h), img.at(w, h)}) {
        key[0] += c.r / 4.0;
        key[1] += c.g / 4.0;
        key[2] += c.b / 4.0;
    }
    return key;
}

BinaryMask remove_background(const RasterImage& img, const BackgroundModel& model) {
    model.validate();
    const auto key = background_key(img, model);
    const double tol2 = model.tolerance * model.tolerance;
    BinaryMask fg(img.width(), img.height());
    std::transform(img.pixels().begin(), img.pixels().end(), fg.pixels().begin(), [&](const Rgb& px) -> std::uint8_t {
        const double dr = px.r - key[0];
        const double dg = px.g - key[1];
        const double db = px.b - key[2];
        return dr * dr + dg * dg + db * db <= tol2 ? 0 : 1;
    });
    return fg;
}

} // namespace agarseg
