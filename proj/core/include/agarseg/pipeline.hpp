#pragma once

#include <agarseg/evaluation.hpp>
#include <agarseg/gcode.hpp>
#include <agarseg/image.hpp>
#include <agarseg/prompts.hpp>
#include <agarseg/segmentation.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace agarseg {

struct PipelineConfig {
    BackgroundModel background;
    PromptGridConfig grid;
    BackendConfig backend = ThresholdBackend{};
    SelectionConfig selection;
    MachineConfig machine;
    bool optimize_travel = false;
    GradeConfig grade;

    void validate() const;
};

/// Overlays the keys present in `json_text` onto `base`; absent keys keep
/// their value from `base`.
PipelineConfig config_from_json(std::string_view json_text, const PipelineConfig& base = {});
std::string config_to_json(const PipelineConfig& cfg);
MachineConfig machine_from_json(std::string_view json_text, const MachineConfig& base = {});

/// An Error raised while running a named pipeline stage.
class StageError : public Error {
  public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), cause.what(), cause.line()), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

  private:
    std::string stage_;
};

struct SegmentStage {
    BinaryMask foreground;
    std::size_t generated_prompts = 0;
    PromptSet prompts;
    SegmentationResult result;
};

/// Background removal, prompt grid, dedup, operator prompts, backend, selection.
SegmentStage run_segmentation(const RasterImage& img, const PipelineConfig& cfg,
                              const std::vector<PromptPoint>& custom = {});

struct GcodeStage {
    RasterImage binary;
    Toolpath toolpath;
    std::string gcode;
    SimulationResult simulation;
    std::size_t target_cells = 0;
    std::size_t removed_cells = 0;
    /// Simulated removal equals the binary image's black pixels.
    bool verified = false;
};

/// Pixels the machine must leave alone: the retained region plus everything
/// outside the foreground, since backdrop is not material.
BinaryMask keep_mask(const BinaryMask& retained, const BinaryMask& foreground);

/// binarize -> plan -> optional optimize -> emit -> parse -> simulate.
GcodeStage run_gcode(const BinaryMask& keep, const MachineConfig& machine, bool optimize);

struct PipelineOutputs {
    SegmentStage segmentation;
    GcodeStage gcode;
    std::optional<Grade> grade;
};

PipelineOutputs run_pipeline(const RasterImage& img, const PipelineConfig& cfg);

/// report.json content; contains no timestamps or absolute paths.
std::string pipeline_report_json(const PipelineOutputs& out, const PipelineConfig& cfg);

/// Writes mask.png, binary.png, out.gcode and report.json into `dir`.
void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineOutputs& out, const PipelineConfig& cfg);

} // namespace agarseg
