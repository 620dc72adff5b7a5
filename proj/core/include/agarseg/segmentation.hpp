#pragma once

#include <agarseg/image.hpp>
#include <agarseg/prompts.hpp>

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace agarseg {

struct RegionProposal {
    BinaryMask mask;
    double confidence = 0.0;
    std::string backend_id;
    std::vector<std::size_t> seed_prompts;
};

struct SegmentationResult {
    int width = 0;
    int height = 0;
    /// Sorted by confidence, descending.
    std::vector<RegionProposal> proposals;
    BinaryMask final_mask;
    std::vector<std::string> warnings;
    /// Otsu could not split the histogram and T = 128 was used instead.
    bool threshold_fallback = false;
    int threshold_used = -1;
};

struct ThresholdBackend {
    enum class Mode { Fixed, Otsu };
    Mode mode = Mode::Otsu;
    int threshold = 128;
};

enum class Connectivity { Four, Eight };

struct RegionGrowBackend {
    double color_tol = 30.0;
    Connectivity connectivity = Connectivity::Four;
};

struct ExternalBackend {
    std::filesystem::path exchange_dir;
    /// Executable invoked with exchange_dir as its only argument.
    std::filesystem::path command;
    std::chrono::milliseconds timeout{60000};
};

using BackendConfig = std::variant<ThresholdBackend, RegionGrowBackend, ExternalBackend>;

std::string_view backend_name(const BackendConfig& cfg);

enum class MergeRule { Union, Top1 };

struct SelectionConfig {
    double accept_threshold = 0.5;
    MergeRule rule = MergeRule::Union;
};

inline constexpr int kFallbackThreshold = 128;

/// Between-class-variance maximiser over a 256-bin histogram, with pixels
/// below T forming the first class. Returns -1 when fewer than two levels
/// are populated. Ties resolve to the smallest T.
int otsu_threshold(const std::array<std::size_t, 256>& histogram);

SegmentationResult segment_threshold(const RasterImage& img, const BinaryMask& fg, const ThresholdBackend& cfg);
SegmentationResult segment_region_grow(const RasterImage& img, const BinaryMask& fg, const PromptSet& prompts,
                                       const RegionGrowBackend& cfg);
SegmentationResult segment_external(const RasterImage& img, const PromptSet& prompts, const ExternalBackend& cfg);

/// Runs the configured backend, clips every proposal to `fg` and selects
/// the final mask.
SegmentationResult segment(const RasterImage& img, const BinaryMask& fg, const PromptSet& prompts,
                           const BackendConfig& backend, const SelectionConfig& selection = {});

/// Union of proposals with confidence >= accept_threshold.
BinaryMask select_final_mask(const SegmentationResult& result, double accept_threshold);
BinaryMask select_final_mask(const SegmentationResult& result, const SelectionConfig& selection);

/// Retained -> (255,255,255), removed -> (0,0,0).
RasterImage binarize(const BinaryMask& mask);

void sort_proposals(std::vector<RegionProposal>& proposals);

} // namespace agarseg
