#include <agarseg/image.hpp>

#include <png.h>

#include <fstream>
#include <iterator>

namespace agarseg {
namespace {

struct PngImage {
    png_image image{};

    PngImage() { image.version = PNG_IMAGE_VERSION; }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;

    std::string message() const { return image.message[0] ? std::string(image.message) : "unknown libpng error"; }
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw Error(ErrorCode::FileNotFound, "file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size()))
        throw Error(ErrorCode::DecodeFailure, "PNG decode failed: " + png.message());
    if (png.image.format & PNG_FORMAT_FLAG_LINEAR)
        throw Error(ErrorCode::UnsupportedFormat, "unsupported PNG bit depth (only 8-bit channels are accepted)");
    if (png.image.width == 0 || png.image.height == 0)
        throw Error(ErrorCode::DecodeFailure, "PNG has zero area");

    // Decode as RGBA so any alpha channel is discarded rather than composited.
    png.image.format = PNG_FORMAT_RGBA;
    const std::size_t stride = PNG_IMAGE_ROW_STRIDE(png.image);
    std::vector<std::uint8_t> rgba(PNG_IMAGE_BUFFER_SIZE(png.image, stride));
    if (!png_image_finish_read(&png.image, nullptr, rgba.data(), static_cast<png_int_32>(stride), nullptr))
        throw Error(ErrorCode::DecodeFailure, "PNG decode failed: " + png.message());

    const int width = static_cast<int>(png.image.width);
    const int height = static_cast<int>(png.image.height);
    RasterImage img(width, height);
    auto out = img.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {rgba[4 * i], rgba[4 * i + 1], rgba[4 * i + 2]};
    return img;
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty image");
    PngImage png;
    png.image.width = static_cast<png_uint_32>(img.width());
    png.image.height = static_cast<png_uint_32>(img.height());
    png.image.format = PNG_FORMAT_RGB;

    std::vector<std::uint8_t> rgb;
    rgb.reserve(img.size() * 3);
    for (const Rgb& px : img.pixels()) {
        rgb.push_back(px.r);
        rgb.push_back(px.g);
        rgb.push_back(px.b);
    }

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, rgb.data(), 0, nullptr))
        throw Error(ErrorCode::IoError, "PNG encode failed: " + png.message());
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, rgb.data(), 0, nullptr))
        throw Error(ErrorCode::IoError, "PNG encode failed: " + png.message());
    out.resize(size);
    return out;
}

RasterImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_png(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_image(const std::filesystem::path& path, const RasterImage& img) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

BinaryMask load_mask(const std::filesystem::path& path) { return mask_from_image(load_image(path)); }

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    RasterImage img(mask.width(), mask.height());
    auto out = img.pixels();
    auto bits = mask.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[i] ? kWhite : kBlack;
    save_image(path, img);
}

} // namespace agarseg
