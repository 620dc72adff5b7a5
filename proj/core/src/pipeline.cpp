#include <agarseg/pipeline.hpp>

#include <json.hpp>

#include <fstream>

namespace agarseg {

using nlohmann::ordered_json;

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

} // namespace

SegmentStage run_segmentation(const RasterImage& img, const PipelineConfig& cfg, const std::vector<PromptPoint>& custom) {
    stage("config", [&] { cfg.validate(); });
    SegmentStage out;
    out.foreground = stage("background", [&] { return remove_background(img, cfg.background); });
    out.prompts = stage("prompts", [&] {
        const auto grid = generate_grid(img, cfg.grid, out.foreground);
        out.generated_prompts = grid.size();
        return merge_custom_prompts(dedup_prompts(grid, cfg.grid), custom, img.width(), img.height());
    });
    out.result = stage("segment", [&] { return segment(img, out.foreground, out.prompts, cfg.backend, cfg.selection); });
    return out;
}

BinaryMask keep_mask(const BinaryMask& retained, const BinaryMask& foreground) {
    require_same_shape(retained, foreground, "keep mask");
    BinaryMask keep(foreground.width(), foreground.height(), 1);
    keep.subtract(foreground);
    keep |= retained;
    return keep;
}

GcodeStage run_gcode(const BinaryMask& keep, const MachineConfig& machine, bool optimize) {
    stage("config", [&] { machine.validate(); });
    GcodeStage out;
    out.binary = stage("binarize", [&] { return binarize(keep); });
    out.toolpath = stage("plan", [&] { return plan_toolpath(out.binary, machine); });
    if (optimize) out.toolpath = stage("optimize", [&] { return optimize_travel(out.toolpath); });
    out.gcode = stage("emit", [&] { return emit_gcode(out.toolpath).to_text(); });
    out.simulation = stage("simulate", [&] {
        return simulate_toolpath(parse_gcode(out.gcode), machine, out.binary.width(), out.binary.height());
    });
    const BinaryMask target = removal_target(out.binary);
    out.target_cells = target.count();
    out.removed_cells = out.simulation.removed.count();
    out.verified = static_cast<const BinaryMask&>(out.simulation.removed) == target;
    return out;
}

PipelineOutputs run_pipeline(const RasterImage& img, const PipelineConfig& cfg) {
    PipelineOutputs out;
    out.segmentation = run_segmentation(img, cfg);
    const BinaryMask& retained = out.segmentation.result.final_mask;
    out.gcode = run_gcode(keep_mask(retained, out.segmentation.foreground), cfg.machine, cfg.optimize_travel);
    if (retained.count() > 0) out.grade = stage("grade", [&] { return grade_region(img, retained, cfg.grade); });
    return out;
}

std::string pipeline_report_json(const PipelineOutputs& out, const PipelineConfig& cfg) {
    const auto& seg = out.segmentation;
    const auto& res = seg.result;
    ordered_json j;
    j["image"] = {{"width", seg.foreground.width()}, {"height", seg.foreground.height()}};
    j["foreground_pixels"] = seg.foreground.count();
    j["prompts"] = {{"generated", seg.generated_prompts},
                    {"kept", seg.prompts.grid_count()},
                    {"custom", seg.prompts.custom_count()}};

    ordered_json proposals = ordered_json::array();
    for (const auto& p : res.proposals)
        proposals.push_back({{"confidence", p.confidence},
                             {"backend", p.backend_id},
                             {"pixels", p.mask.count()},
                             {"seed_prompts", p.seed_prompts}});
    j["segmentation"] = {{"backend", backend_name(cfg.backend)},
                         {"proposals", proposals},
                         {"retained_pixels", res.final_mask.count()},
                         {"warnings", res.warnings}};
    if (res.threshold_used >= 0) {
        j["segmentation"]["threshold"] = res.threshold_used;
        j["segmentation"]["threshold_fallback"] = res.threshold_fallback;
    }

    const auto& g = out.gcode;
    j["gcode"] = {{"segments", g.toolpath.segments.size()},
                  {"cuts", g.toolpath.cut_count()},
                  {"cut_mm", g.toolpath.cut_length()},
                  {"rapid_mm", g.toolpath.rapid_xy_length()},
                  {"target_cells", g.target_cells},
                  {"removed_cells", g.removed_cells},
                  {"verified", g.verified},
                  {"warnings", g.simulation.warnings}};
    j["grade"] = out.grade ? ordered_json(std::string(to_string(*out.grade))) : ordered_json(nullptr);
    j["config"] = ordered_json::parse(config_to_json(cfg));
    return j.dump(2) + "\n";
}

void write_pipeline_outputs(const std::filesystem::path& dir, const PipelineOutputs& out, const PipelineConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StageError("write", Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message()));
    stage("write", [&] {
        save_mask(dir / "mask.png", out.segmentation.result.final_mask);
        save_image(dir / "binary.png", out.gcode.binary);
        for (const auto& [name, text] : {std::pair<const char*, std::string>{"out.gcode", out.gcode.gcode},
                                         {"report.json", pipeline_report_json(out, cfg)}}) {
            std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
            if (!f) throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
            f << text;
        }
    });
}

} // namespace agarseg
