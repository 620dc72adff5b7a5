#include <agarseg/segmentation.hpp>

#include <algorithm>
#include <deque>
#include <numeric>

namespace agarseg {

std::string_view backend_name(const BackendConfig& cfg) {
    struct Visitor {
        std::string_view operator()(const ThresholdBackend&) const { return "threshold"; }
        std::string_view operator()(const RegionGrowBackend&) const { return "region_grow"; }
        std::string_view operator()(const ExternalBackend&) const { return "external"; }
    };
    return std::visit(Visitor{}, cfg);
}

void sort_proposals(std::vector<RegionProposal>& proposals) {
    std::stable_sort(proposals.begin(), proposals.end(),
                     [](const RegionProposal& a, const RegionProposal& b) { return a.confidence > b.confidence; });
}

int otsu_threshold(const std::array<std::size_t, 256>& histogram) {
    const auto levels = std::count_if(histogram.begin(), histogram.end(), [](auto n) { return n > 0; });
    if (levels < 2) return -1;

    long double total = 0;
    long double weighted_total = 0;
    for (int v = 0; v < 256; ++v) {
        total += histogram[v];
        weighted_total += static_cast<long double>(v) * histogram[v];
    }

    int best_t = -1;
    long double best_var = -1;
    long double w0 = 0;
    long double sum0 = 0;
    for (int t = 1; t < 256; ++t) {
        w0 += histogram[t - 1];
        sum0 += static_cast<long double>(t - 1) * histogram[t - 1];
        const long double w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const long double mu0 = sum0 / w0;
        const long double mu1 = (weighted_total - sum0) / w1;
        const long double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_t = t;
        }
    }
    return best_t;
}

SegmentationResult segment_threshold(const RasterImage& img, const BinaryMask& fg, const ThresholdBackend& cfg) {
    require_same_shape(img, fg, "threshold backend foreground mask");
    const GrayImage gray = to_grayscale(img);

    SegmentationResult result;
    result.width = img.width();
    result.height = img.height();

    int t = cfg.threshold;
    if (cfg.mode == ThresholdBackend::Mode::Fixed) {
        if (t < 0 || t > 255) throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 255]");
    } else {
        std::array<std::size_t, 256> hist{};
        for (std::size_t i = 0; i < gray.size(); ++i)
            if (fg.pixels()[i]) ++hist[gray.pixels()[i]];
        t = otsu_threshold(hist);
        if (t < 0) {
            t = kFallbackThreshold;
            result.threshold_fallback = true;
            result.warnings.push_back("otsu: foreground histogram has fewer than two levels; using T=128");
        }
    }
    result.threshold_used = t;

    RegionProposal proposal;
    proposal.mask = BinaryMask(img.width(), img.height());
    proposal.confidence = 1.0;
    proposal.backend_id = "threshold";
    for (std::size_t i = 0; i < gray.size(); ++i)
        proposal.mask.pixels()[i] = (fg.pixels()[i] && gray.pixels()[i] < t) ? 1 : 0;
    result.proposals.push_back(std::move(proposal));
    result.final_mask = select_final_mask(result, SelectionConfig{});
    return result;
}

namespace {

/// Flood fill from (x, y) over fg pixels within `tol` of `reference`. The
/// seed itself is always part of the fill.
std::vector<std::size_t> grow(const RasterImage& img, const BinaryMask& fg, int x, int y, const Descriptor& reference,
                              const RegionGrowBackend& cfg) {
    const int w = img.width();
    const double tol2 = cfg.color_tol * cfg.color_tol;
    auto similar = [&](int px, int py) {
        const Rgb& c = img.at(px, py);
        const double d0 = c.r - reference[0];
        const double d1 = c.g - reference[1];
        const double d2 = c.b - reference[2];
        return d0 * d0 + d1 * d1 + d2 * d2 <= tol2;
    };

    std::vector<std::uint8_t> visited(img.size(), 0);
    std::vector<std::size_t> filled;
    std::deque<std::pair<int, int>> queue{{x, y}};
    visited[static_cast<std::size_t>(y) * w + x] = 1;

    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int neighbours = cfg.connectivity == Connectivity::Four ? 4 : 8;

    while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        filled.push_back(static_cast<std::size_t>(cy) * w + cx);
        for (int k = 0; k < neighbours; ++k) {
            const int nx = cx + kDx[k];
            const int ny = cy + kDy[k];
            if (!img.contains(nx, ny)) continue;
            const std::size_t idx = static_cast<std::size_t>(ny) * w + nx;
            if (visited[idx] || !fg.pixels()[idx] || !similar(nx, ny)) continue;
            visited[idx] = 1;
            queue.emplace_back(nx, ny);
        }
    }
    return filled;
}

} // namespace

SegmentationResult segment_region_grow(const RasterImage& img, const BinaryMask& fg, const PromptSet& prompts,
                                       const RegionGrowBackend& cfg) {
    require_same_shape(img, fg, "region-grow foreground mask");
    if (!(cfg.color_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "colour tolerance must be >= 0");

    SegmentationResult result;
    result.width = img.width();
    result.height = img.height();

    std::vector<std::size_t> fg_prompts;
    BinaryMask background_region(img.width(), img.height());

    // owner[pixel] = index into fg_prompts of the first fill covering it.
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(img.size(), kNone);
    std::vector<std::vector<std::size_t>> fills;
    std::vector<std::size_t> parent;
    auto root = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };

    for (std::size_t i = 0; i < prompts.kept.size(); ++i) {
        const PromptPoint& p = prompts.kept[i];
        const bool inside = img.contains(p.x, p.y) && fg.test(p.x, p.y);
        if (!inside)
            result.warnings.push_back("prompt " + std::to_string(i) + " at (" + std::to_string(p.x) + ", " +
                                      std::to_string(p.y) + ") lies outside the foreground; ignored");

        if (p.label == PromptLabel::Background) {
            if (inside)
                for (auto idx : grow(img, fg, p.x, p.y, p.descriptor, cfg)) background_region.pixels()[idx] = 1;
            continue;
        }

        const std::size_t slot = fg_prompts.size();
        fg_prompts.push_back(i);
        parent.push_back(slot);
        fills.emplace_back();
        if (!inside) continue;
        fills[slot] = grow(img, fg, p.x, p.y, p.descriptor, cfg);
        for (auto idx : fills[slot]) {
            if (owner[idx] == kNone) {
                owner[idx] = slot;
            } else {
                const auto a = root(owner[idx]);
                const auto b = root(slot);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }

    const double total = static_cast<double>(fg_prompts.size());
    for (std::size_t slot = 0; slot < fg_prompts.size(); ++slot) {
        if (root(slot) != slot) continue;
        RegionProposal proposal;
        proposal.mask = BinaryMask(img.width(), img.height());
        proposal.backend_id = "region_grow";
        for (std::size_t member = slot; member < fg_prompts.size(); ++member) {
            if (fills[member].empty() || root(member) != slot) continue;
            proposal.seed_prompts.push_back(fg_prompts[member]);
            for (auto idx : fills[member]) proposal.mask.pixels()[idx] = 1;
        }
        if (proposal.seed_prompts.empty()) continue;
        proposal.confidence = static_cast<double>(proposal.seed_prompts.size()) / total;
        proposal.mask.subtract(background_region);
        if (proposal.mask.count() == 0) continue;
        result.proposals.push_back(std::move(proposal));
    }

    sort_proposals(result.proposals);
    result.final_mask = select_final_mask(result, SelectionConfig{});
    return result;
}

SegmentationResult segment(const RasterImage& img, const BinaryMask& fg, const PromptSet& prompts,
                           const BackendConfig& backend, const SelectionConfig& selection) {
    require_same_shape(img, fg, "segmentation foreground mask");
    SegmentationResult result;
    if (const auto* t = std::get_if<ThresholdBackend>(&backend)) {
        result = segment_threshold(img, fg, *t);
    } else if (const auto* g = std::get_if<RegionGrowBackend>(&backend)) {
        result = segment_region_grow(img, fg, prompts, *g);
    } else {
        result = segment_external(img, prompts, std::get<ExternalBackend>(backend));
        for (auto& p : result.proposals) p.mask &= fg;
    }
    result.final_mask = select_final_mask(result, selection);
    return result;
}

BinaryMask select_final_mask(const SegmentationResult& result, double accept_threshold) {
    return select_final_mask(result, SelectionConfig{accept_threshold, MergeRule::Union});
}

BinaryMask select_final_mask(const SegmentationResult& result, const SelectionConfig& selection) {
    if (!(selection.accept_threshold >= 0.0 && selection.accept_threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "accept threshold must lie in [0, 1]");
    BinaryMask out(result.width, result.height);
    for (const auto& p : result.proposals) {
        if (p.confidence < selection.accept_threshold) continue;
        out |= p.mask;
        if (selection.rule == MergeRule::Top1) break;
    }
    return out;
}

RasterImage binarize(const BinaryMask& mask) {
    RasterImage img(mask.width(), mask.height());
    std::transform(mask.pixels().begin(), mask.pixels().end(), img.pixels().begin(),
                   [](std::uint8_t bit) { return bit ? kWhite : kBlack; });
    return img;
}

} // namespace agarseg
