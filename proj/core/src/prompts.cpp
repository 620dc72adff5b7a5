#include <agarseg/prompts.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace agarseg {

using nlohmann::json;

std::string_view to_string(PromptLabel label) { return label == PromptLabel::Foreground ? "fg" : "bg"; }

PromptLabel parse_prompt_label(std::string_view text) {
    if (text == "fg") return PromptLabel::Foreground;
    if (text == "bg") return PromptLabel::Background;
    throw Error(ErrorCode::InvalidArgument, "prompt label must be \"fg\" or \"bg\", got \"" + std::string(text) + "\"");
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    const double d0 = a[0] - b[0];
    const double d1 = a[1] - b[1];
    const double d2 = a[2] - b[2];
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

void PromptGridConfig::validate() const {
    if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "prompt grid needs at least one row and column");
    if (patch_size < 1 || patch_size % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "patch size must be odd and >= 1");
    if (!(dedup_threshold >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dedup threshold must be >= 0");
}

Descriptor compute_descriptor(const RasterImage& img, int x, int y, int k) {
    if (!img.contains(x, y)) throw Error(ErrorCode::OutOfBounds, "descriptor centre outside image");
    if (k < 1 || k % 2 == 0) throw Error(ErrorCode::InvalidArgument, "patch size must be odd and >= 1");
    const int r = k / 2;
    const int x0 = std::max(0, x - r);
    const int x1 = std::min(img.width() - 1, x + r);
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(img.height() - 1, y + r);

    std::uint64_t sum[3] = {0, 0, 0};
    for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
            const Rgb& px = img.at(xx, yy);
            sum[0] += px.r;
            sum[1] += px.g;
            sum[2] += px.b;
        }
    }
    const double n = double(x1 - x0 + 1) * double(y1 - y0 + 1);
    return {double(sum[0]) / n, double(sum[1]) / n, double(sum[2]) / n};
}

std::vector<PromptPoint> generate_grid(const RasterImage& img, const PromptGridConfig& cfg, const BinaryMask& fg_mask) {
    cfg.validate();
    if (img.empty()) throw Error(ErrorCode::EmptyInput, "prompt grid over an empty image");
    require_same_shape(img, fg_mask, "prompt grid foreground mask");

    std::vector<PromptPoint> prompts;
    prompts.reserve(static_cast<std::size_t>(cfg.rows) * static_cast<std::size_t>(cfg.cols));
    for (int i = 0; i < cfg.rows; ++i) {
        // floor((i + 0.5) * height / rows) in exact integer arithmetic
        const int y = static_cast<int>((2LL * i + 1) * img.height() / (2LL * cfg.rows));
        for (int j = 0; j < cfg.cols; ++j) {
            const int x = static_cast<int>((2LL * j + 1) * img.width() / (2LL * cfg.cols));
            if (!fg_mask.test(x, y)) continue;
            prompts.push_back({x, y, PromptLabel::Foreground, compute_descriptor(img, x, y, cfg.patch_size)});
        }
    }
    return prompts;
}

PromptSet dedup_prompts(const std::vector<PromptPoint>& prompts, double thresh) {
    if (!(thresh >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dedup threshold must be >= 0");
    PromptSet set;
    set.generated_count = prompts.size();
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& kept : set.kept)
            nearest = std::min(nearest, descriptor_distance(prompts[i].descriptor, kept.descriptor));
        // An empty KEEP set has infinite distance, so the first prompt always seeds it.
        if (nearest > thresh) {
            set.kept.push_back(prompts[i]);
            set.source_index.push_back(i);
        }
    }
    return set;
}

PromptSet dedup_prompts_centroid(const std::vector<PromptPoint>& prompts, double thresh) {
    if (!(thresh >= 0.0)) throw Error(ErrorCode::InvalidArgument, "dedup threshold must be >= 0");
    const std::size_t n = prompts.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (descriptor_distance(prompts[i].descriptor, prompts[j].descriptor) <= thresh) {
                const auto a = root(i);
                const auto b = root(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    std::vector<std::vector<std::size_t>> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[root(i)].push_back(i);

    std::vector<std::size_t> representatives;
    for (const auto& members : clusters) {
        if (members.empty()) continue;
        Descriptor mean{};
        for (auto m : members)
            for (int c = 0; c < 3; ++c) mean[c] += prompts[m].descriptor[c] / double(members.size());
        std::size_t best = members.front();
        double best_d = descriptor_distance(prompts[best].descriptor, mean);
        for (auto m : members) {
            const double d = descriptor_distance(prompts[m].descriptor, mean);
            if (d < best_d) {
                best = m;
                best_d = d;
            }
        }
        representatives.push_back(best);
    }
    std::sort(representatives.begin(), representatives.end());

    PromptSet set;
    set.generated_count = n;
    for (auto idx : representatives) {
        set.kept.push_back(prompts[idx]);
        set.source_index.push_back(idx);
    }
    return set;
}

PromptSet dedup_prompts(const std::vector<PromptPoint>& prompts, const PromptGridConfig& cfg) {
    return cfg.mode == DedupMode::Greedy ? dedup_prompts(prompts, cfg.dedup_threshold)
                                         : dedup_prompts_centroid(prompts, cfg.dedup_threshold);
}

PromptSet merge_custom_prompts(const PromptSet& base, const std::vector<PromptPoint>& custom, int width, int height) {
    for (const auto& p : custom)
        if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
            throw Error(ErrorCode::OutOfBounds, "prompt (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                                    ") lies outside the " + std::to_string(width) + "x" +
                                                    std::to_string(height) + " image");
    PromptSet merged = base;
    merged.kept.insert(merged.kept.end(), custom.begin(), custom.end());
    return merged;
}

PromptPoint make_prompt(const RasterImage& img, int x, int y, PromptLabel label, int patch_size) {
    if (!img.contains(x, y))
        throw Error(ErrorCode::OutOfBounds, "prompt (" + std::to_string(x) + ", " + std::to_string(y) +
                                                ") lies outside the image");
    return {x, y, label, compute_descriptor(img, x, y, patch_size)};
}

std::string prompts_to_json(const std::vector<PromptPoint>& prompts) {
    json arr = json::array();
    for (const auto& p : prompts) arr.push_back({{"x", p.x}, {"y", p.y}, {"label", to_string(p.label)}});
    return arr.dump();
}

std::vector<PromptPoint> prompts_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("prompts: ") + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::ParseError, "prompts: expected a JSON array");
    std::vector<PromptPoint> out;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("x") || !item["x"].is_number_integer() || !item.contains("y") ||
            !item["y"].is_number_integer() || !item.contains("label") || !item["label"].is_string())
            throw Error(ErrorCode::ParseError, "prompts: each item needs integer x, y and a label");
        PromptPoint p;
        p.x = item["x"].get<int>();
        p.y = item["y"].get<int>();
        try {
            p.label = parse_prompt_label(item["label"].get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, std::string("prompts: ") + e.what());
        }
        out.push_back(p);
    }
    return out;
}

} // namespace agarseg
