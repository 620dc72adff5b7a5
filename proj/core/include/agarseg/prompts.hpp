#pragma once

#include <agarseg/image.hpp>

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace agarseg {

enum class PromptLabel { Foreground, Background };

std::string_view to_string(PromptLabel label); // "fg" / "bg"
PromptLabel parse_prompt_label(std::string_view text);

/// Mean R, G, B over a square patch.
using Descriptor = std::array<double, 3>;

double descriptor_distance(const Descriptor& a, const Descriptor& b);

struct PromptPoint {
    int x = 0;
    int y = 0;
    PromptLabel label = PromptLabel::Foreground;
    Descriptor descriptor{};

    friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

enum class DedupMode {
    Greedy,   // first prompt of each similar run is kept, in scan order
    Centroid, // single-linkage clusters; member nearest the cluster mean is kept
};

struct PromptGridConfig {
    int rows = 16;
    int cols = 16;
    int patch_size = 7;
    double dedup_threshold = 12.0;
    DedupMode mode = DedupMode::Greedy;

    void validate() const;
};

struct PromptSet {
    /// KEEP set followed by any operator prompts.
    std::vector<PromptPoint> kept;
    /// For each grid prompt in `kept`, its position in the generated list.
    std::vector<std::size_t> source_index;
    std::size_t generated_count = 0;

    std::size_t grid_count() const noexcept { return source_index.size(); }
    std::size_t custom_count() const noexcept { return kept.size() - source_index.size(); }
};

/// Per-channel mean over the k x k window centred on (x, y); the window is
/// clipped to the image, so it shrinks at the borders.
Descriptor compute_descriptor(const RasterImage& img, int x, int y, int k);

/// Row-major cell-centre prompts, dropping centres outside `fg_mask`.
std::vector<PromptPoint> generate_grid(const RasterImage& img, const PromptGridConfig& cfg, const BinaryMask& fg_mask);

PromptSet dedup_prompts(const std::vector<PromptPoint>& prompts, double thresh);
PromptSet dedup_prompts_centroid(const std::vector<PromptPoint>& prompts, double thresh);
PromptSet dedup_prompts(const std::vector<PromptPoint>& prompts, const PromptGridConfig& cfg);

/// Operator prompts are appended after the grid prompts and bypass dedup.
PromptSet merge_custom_prompts(const PromptSet& base, const std::vector<PromptPoint>& custom, int width, int height);

/// Builds an operator prompt with its descriptor filled in.
PromptPoint make_prompt(const RasterImage& img, int x, int y, PromptLabel label, int patch_size);

/// Exchange format: [{"x":int,"y":int,"label":"fg"|"bg"}].
std::string prompts_to_json(const std::vector<PromptPoint>& prompts);
std::vector<PromptPoint> prompts_from_json(std::string_view json_text);

} // namespace agarseg
