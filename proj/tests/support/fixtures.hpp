#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing in
// here calls the library routine it is used to check.

#include <agarseg/gcode.hpp>
#include <agarseg/image.hpp>
#include <agarseg/prompts.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

using namespace agarseg;

struct Rect {
    int x, y, w, h;
    bool contains(int px, int py) const { return px >= x && py >= y && px < x + w && py < y + h; }
};

inline RasterImage uniform(int w, int h, Rgb c) { return RasterImage(w, h, c); }

/// `ground` everywhere except `blob` painted with `ink`.
inline RasterImage with_blob(int w, int h, Rgb ground, Rect blob, Rgb ink) {
    RasterImage img(w, h, ground);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (blob.contains(x, y)) img.at(x, y) = ink;
    return img;
}

inline BinaryMask rect_mask(int w, int h, Rect r) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (r.contains(x, y)) m.set(x, y);
    return m;
}

inline BinaryMask full_mask(int w, int h) { return BinaryMask(w, h, 1); }

inline BinaryMask random_mask(std::mt19937& rng, int w, int h, double density) {
    std::bernoulli_distribution bit(density);
    BinaryMask m(w, h);
    for (auto& v : m.pixels()) v = bit(rng) ? 1 : 0;
    return m;
}

/// Two-colour image; black marks material to remove.
inline RasterImage random_binary(std::mt19937& rng, int w, int h, double black_density) {
    std::bernoulli_distribution bit(black_density);
    RasterImage img(w, h, kWhite);
    for (auto& px : img.pixels()) px = bit(rng) ? kBlack : kWhite;
    return img;
}

inline RasterImage random_image(std::mt19937& rng, int w, int h) {
    std::uniform_int_distribution<int> ch(0, 255);
    RasterImage img(w, h);
    for (auto& px : img.pixels())
        px = {static_cast<std::uint8_t>(ch(rng)), static_cast<std::uint8_t>(ch(rng)), static_cast<std::uint8_t>(ch(rng))};
    return img;
}

// ---------------------------------------------------------------------------
// Oracles

struct Counts {
    long long overlap = 0;
    long long uni = 0;
};

/// Pixel-by-pixel overlap / union counting through coordinates.
inline Counts brute_iou_counts(const BinaryMask& a, const BinaryMask& b) {
    Counts c;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            const bool pa = a.at(x, y) != 0;
            const bool pb = b.at(x, y) != 0;
            if (pa && pb) ++c.overlap;
            if (pa || pb) ++c.uni;
        }
    return c;
}

/// Between-class variance for threshold t from raw samples (class 0 = v < t),
/// or -1 if a class is empty.
inline double between_class_variance(const std::vector<int>& values, int t) {
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (int v : values) {
        if (v < t) {
            n0 += 1;
            s0 += v;
        } else {
            n1 += 1;
            s1 += v;
        }
    }
    if (n0 == 0 || n1 == 0) return -1;
    const double m0 = s0 / n0;
    const double m1 = s1 / n1;
    const double n = n0 + n1;
    return (n0 / n) * (n1 / n) * (m0 - m1) * (m0 - m1);
}

/// Exhaustive search over all 256 thresholds; -1 if no split exists.
inline int brute_otsu(const std::vector<int>& values, double* best_out = nullptr) {
    int best_t = -1;
    double best = -1;
    for (int t = 0; t <= 255; ++t) {
        const double v = between_class_variance(values, t);
        if (v > best * (1 + 1e-12) + 1e-12) {
            best = v;
            best_t = t;
        }
    }
    if (best_out) *best_out = best;
    return best_t;
}

inline double dist3(const Descriptor& a, const Descriptor& b) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Checks the greedy dedup certificate: each kept prompt is farther than
/// thresh from every earlier kept prompt; each dropped prompt is within
/// thresh of some kept prompt that precedes it in scan order.
inline bool greedy_certificate(const std::vector<PromptPoint>& input, const std::vector<std::size_t>& kept_idx,
                               double thresh, std::string* why = nullptr) {
    std::vector<bool> kept(input.size(), false);
    for (std::size_t k = 0; k < kept_idx.size(); ++k) {
        if (kept_idx[k] >= input.size() || (k > 0 && kept_idx[k] <= kept_idx[k - 1])) {
            if (why) *why = "kept indices not an ordered subsequence";
            return false;
        }
        kept[kept_idx[k]] = true;
    }
    if (!input.empty() && !kept[0]) {
        if (why) *why = "first prompt not kept";
        return false;
    }
    for (std::size_t i = 0; i < input.size(); ++i) {
        double nearest = INFINITY;
        for (std::size_t j = 0; j < i; ++j)
            if (kept[j]) nearest = std::min(nearest, dist3(input[i].descriptor, input[j].descriptor));
        const bool should_keep = nearest > thresh;
        if (should_keep != kept[i]) {
            if (why) *why = "prompt " + std::to_string(i) + " violates the certificate";
            return false;
        }
    }
    return true;
}

/// Black pixels of a two-colour image, read directly.
inline BinaryMask black_set(const RasterImage& img) {
    BinaryMask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (img.at(x, y).r == 0 && img.at(x, y).g == 0 && img.at(x, y).b == 0) m.set(x, y);
    return m;
}

// ---------------------------------------------------------------------------
// Filesystem helpers

class TempDir {
  public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("agarseg-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string base64_decode(const std::string& in) {
    static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    int val = 0;
    int bits = -8;
    for (char c : in) {
        const auto pos = alphabet.find(c);
        if (pos == std::string::npos) break;
        val = (val << 6) + static_cast<int>(pos);
        bits += 6;
        if (bits >= 0) {
            out.push_back(static_cast<char>((val >> bits) & 0xFF));
            bits -= 8;
        }
    }
    return out;
}

inline std::span<const std::uint8_t> bytes_of(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Image sizes of the twelve cropped cross-sections, ids a..l.
struct DatasetShape {
    const char* id;
    int width;
    int height;
};

inline constexpr std::array<DatasetShape, 12> kDatasetShapes = {{{"a", 288, 302},
                                                                 {"b", 268, 342},
                                                                 {"c", 266, 308},
                                                                 {"d", 306, 290},
                                                                 {"e", 402, 424},
                                                                 {"f", 274, 288},
                                                                 {"g", 232, 264},
                                                                 {"h", 250, 264},
                                                                 {"i", 292, 308},
                                                                 {"j", 230, 242},
                                                                 {"k", 334, 326},
                                                                 {"l", 254, 374}}};

/// Per-image IoU percentages reported for the default 16x16 grid run.
inline constexpr std::array<double, 12> kReportedIoU = {54.1, 97.5, 37.4, 11.8, 99.3, 98.5,
                                                        53.3, 97.2, 5.4,  16.7, 98.1, 97.4};

/// Truth/prediction pair on a w x h canvas whose IoU is exactly tenths/1000:
/// a 1000-pixel truth region and a prediction covering `tenths` of it.
inline std::pair<BinaryMask, BinaryMask> masks_with_iou_tenths(int w, int h, int tenths) {
    BinaryMask truth(w, h);
    BinaryMask pred(w, h);
    int placed = 0;
    for (int y = 0; y < h && placed < 1000; ++y)
        for (int x = 0; x < w && placed < 1000; ++x) {
            truth.set(x, y);
            if (placed < tenths) pred.set(x, y);
            ++placed;
        }
    return {truth, pred};
}

} // namespace fixtures
