// agarseg: command-line front end, one subcommand per pipeline stage.
//
// Exit codes: 0 ok, 1 stage failure, 2 usage or I/O error.

#include <agarseg/evaluation.hpp>
#include <agarseg/gcode.hpp>
#include <agarseg/pipeline.hpp>
#include <agarseg/service.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace agarseg;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitUsage = 2;

/// Failure that maps straight to an exit code.
struct CliFailure {
    int exit_code;
    std::string stage;
    Error error;
};

[[noreturn]] void fail(int exit_code, const std::string& stage, const Error& e) { throw CliFailure{exit_code, stage, e}; }

template <typename F>
auto in_stage(const std::string& stage, int exit_code, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError& e) {
        fail(exit_code, e.stage(), e);
    } catch (const Error& e) {
        fail(exit_code, stage, e);
    }
}

std::string read_file(const fs::path& path, const std::string& stage) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(kExitUsage, stage, Error(ErrorCode::FileNotFound, "cannot read " + path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text))
        fail(kExitUsage, "write", Error(ErrorCode::IoError, "cannot write " + path.string()));
}

RasterImage load_input(const fs::path& path) {
    return in_stage("load", kExitUsage, [&] { return load_image(path); });
}

// ---------------------------------------------------------------------------
// Shared options. Values left unset on the command line do not override the
// config file, which in turn overlays the built-in defaults.

struct ConfigOptions {
    std::string config_path;
    std::optional<std::string> bg_mode;
    std::optional<std::string> key_color;
    std::optional<double> bg_tolerance;
    std::optional<int> grid;
    std::optional<int> patch_size;
    std::optional<double> dedup_threshold;
    std::optional<std::string> dedup_mode;
    std::optional<std::string> backend;
    std::optional<int> threshold;
    std::optional<double> color_tol;
    std::optional<int> connectivity;
    std::optional<std::string> worker;
    std::optional<std::string> exchange_dir;
    std::optional<long long> timeout_ms;
    std::optional<double> accept;
    std::optional<std::string> rule;
};

struct MachineOptions {
    std::optional<double> mm_per_pixel;
    std::optional<double> safe_z;
    std::optional<double> cut_z;
    std::optional<double> feed;
    std::optional<double> plunge;
    std::optional<int> rpm;
    std::optional<double> tool_diameter;
    bool optimize = false;
};

void add_config_options(CLI::App* cmd, ConfigOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--bg-mode", o.bg_mode, "Background model")->check(CLI::IsMember({"chroma-key", "corner-sample"}));
    cmd->add_option("--key-color", o.key_color, "Chroma key colour as R,G,B");
    cmd->add_option("--bg-tolerance", o.bg_tolerance, "Background RGB distance tolerance");
    cmd->add_option("--grid", o.grid, "Prompt grid size N (N x N)")->check(CLI::PositiveNumber);
    cmd->add_option("--patch-size", o.patch_size, "Descriptor patch size (odd)");
    cmd->add_option("--dedup-threshold", o.dedup_threshold, "Prompt dedup distance");
    cmd->add_option("--dedup-mode", o.dedup_mode, "Prompt dedup mode")->check(CLI::IsMember({"greedy", "centroid"}));
    cmd->add_option("--backend", o.backend, "Segmentation backend")
        ->check(CLI::IsMember({"threshold", "region-grow", "external"}));
    cmd->add_option("--threshold", o.threshold, "Fixed luma threshold (threshold backend; default is Otsu)");
    cmd->add_option("--color-tol", o.color_tol, "Region-grow colour tolerance");
    cmd->add_option("--connectivity", o.connectivity, "Region-grow connectivity")->check(CLI::IsMember({4, 8}));
    cmd->add_option("--worker", o.worker, "External backend worker executable");
    cmd->add_option("--exchange-dir", o.exchange_dir, "External backend exchange directory");
    cmd->add_option("--timeout-ms", o.timeout_ms, "External backend timeout");
    cmd->add_option("--accept", o.accept, "Proposal acceptance threshold in [0, 1]");
    cmd->add_option("--rule", o.rule, "Proposal merge rule")->check(CLI::IsMember({"union", "top1"}));
}

void add_machine_options(CLI::App* cmd, MachineOptions& o, bool with_optimize) {
    cmd->add_option("--mm-per-pixel", o.mm_per_pixel, "Physical pixel pitch in mm (required unless in config)");
    cmd->add_option("--safe-z", o.safe_z, "Travel height in mm");
    cmd->add_option("--cut-z", o.cut_z, "Cut depth in mm (negative)");
    cmd->add_option("--feed", o.feed, "Cutting feed rate, mm/min");
    cmd->add_option("--plunge", o.plunge, "Plunge feed rate, mm/min");
    cmd->add_option("--rpm", o.rpm, "Spindle speed");
    cmd->add_option("--tool-diameter", o.tool_diameter, "Tool diameter in mm (default: mm-per-pixel)");
    if (with_optimize) cmd->add_flag("--optimize", o.optimize, "Reorder cuts to shorten rapid travel");
}

Rgb parse_rgb(const std::string& text) {
    std::array<int, 3> c{};
    char sep1 = 0, sep2 = 0;
    std::istringstream in(text);
    if (!(in >> c[0] >> sep1 >> c[1] >> sep2 >> c[2]) || sep1 != ',' || sep2 != ',' || !(in >> std::ws).eof() ||
        std::any_of(c.begin(), c.end(), [](int v) { return v < 0 || v > 255; }))
        fail(kExitUsage, "config", Error(ErrorCode::InvalidArgument, "--key-color expects R,G,B with 0..255 values"));
    return {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]), static_cast<std::uint8_t>(c[2])};
}

struct LoadedConfig {
    PipelineConfig cfg;
    bool scale_given = false;
};

LoadedConfig load_config(const ConfigOptions& o, const MachineOptions* m) {
    LoadedConfig out;
    PipelineConfig& cfg = out.cfg;
    if (!o.config_path.empty()) {
        const std::string text = read_file(o.config_path, "config");
        cfg = in_stage("config", kExitUsage, [&] { return config_from_json(text); });
        const auto doc = nlohmann::json::parse(text);
        out.scale_given = doc.contains("machine") && doc["machine"].contains("mm_per_pixel");
    }

    if (o.bg_mode) cfg.background.mode = *o.bg_mode == "chroma-key" ? BackgroundModel::Mode::ChromaKey
                                                                     : BackgroundModel::Mode::CornerSample;
    if (o.key_color) cfg.background.key_color = parse_rgb(*o.key_color);
    if (o.bg_tolerance) cfg.background.tolerance = *o.bg_tolerance;
    if (o.grid) cfg.grid.rows = cfg.grid.cols = *o.grid;
    if (o.patch_size) cfg.grid.patch_size = *o.patch_size;
    if (o.dedup_threshold) cfg.grid.dedup_threshold = *o.dedup_threshold;
    if (o.dedup_mode) cfg.grid.mode = *o.dedup_mode == "greedy" ? DedupMode::Greedy : DedupMode::Centroid;

    if (o.backend) {
        if (*o.backend == "threshold" && !std::holds_alternative<ThresholdBackend>(cfg.backend))
            cfg.backend = ThresholdBackend{};
        else if (*o.backend == "region-grow" && !std::holds_alternative<RegionGrowBackend>(cfg.backend))
            cfg.backend = RegionGrowBackend{};
        else if (*o.backend == "external" && !std::holds_alternative<ExternalBackend>(cfg.backend))
            cfg.backend = ExternalBackend{};
    }
    if (auto* t = std::get_if<ThresholdBackend>(&cfg.backend); t && o.threshold) {
        t->mode = ThresholdBackend::Mode::Fixed;
        t->threshold = *o.threshold;
    }
    if (auto* g = std::get_if<RegionGrowBackend>(&cfg.backend)) {
        if (o.color_tol) g->color_tol = *o.color_tol;
        if (o.connectivity) g->connectivity = *o.connectivity == 8 ? Connectivity::Eight : Connectivity::Four;
    }
    if (auto* e = std::get_if<ExternalBackend>(&cfg.backend)) {
        if (o.worker) e->command = *o.worker;
        if (o.exchange_dir) e->exchange_dir = *o.exchange_dir;
        if (o.timeout_ms) e->timeout = std::chrono::milliseconds(*o.timeout_ms);
        if (e->command.empty())
            fail(kExitUsage, "config", Error(ErrorCode::InvalidArgument, "external backend needs --worker"));
        if (e->exchange_dir.empty()) e->exchange_dir = fs::temp_directory_path() / "agarseg-exchange";
    }
    if (o.accept) cfg.selection.accept_threshold = *o.accept;
    if (o.rule) cfg.selection.rule = *o.rule == "union" ? MergeRule::Union : MergeRule::Top1;

    if (m) {
        MachineConfig& mc = cfg.machine;
        if (m->mm_per_pixel) {
            mc.mm_per_pixel = *m->mm_per_pixel;
            out.scale_given = true;
        }
        if (m->safe_z) mc.safe_z = *m->safe_z;
        if (m->cut_z) mc.cut_z = *m->cut_z;
        if (m->feed) mc.feed_rate = *m->feed;
        if (m->plunge) mc.plunge_rate = *m->plunge;
        if (m->rpm) mc.spindle_rpm = *m->rpm;
        if (m->tool_diameter) mc.tool_diameter = *m->tool_diameter;
        if (m->optimize) cfg.optimize_travel = true;
    }
    in_stage("config", kExitUsage, [&] { cfg.validate(); });
    return out;
}

/// The dataset carries no physical scale, so machine output refuses to guess.
void require_scale(const LoadedConfig& loaded) {
    if (!loaded.scale_given)
        fail(kExitUsage, "config",
             Error(ErrorCode::InvalidArgument, "pixel scale unknown: pass --mm-per-pixel or set machine.mm_per_pixel"));
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

ordered_json proposals_json(const SegmentationResult& r) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : r.proposals)
        arr.push_back({{"confidence", p.confidence}, {"pixels", p.mask.count()}, {"backend", p.backend_id}});
    return arr;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SegmentArgs {
    std::string image;
    std::string output = "mask.png";
    std::string foreground_output;
    std::string prompts;
    ConfigOptions cfg;
};

int cmd_segment(const SegmentArgs& a, bool json) {
    const LoadedConfig loaded = load_config(a.cfg, nullptr);
    const RasterImage img = load_input(a.image);
    std::vector<PromptPoint> custom;
    if (!a.prompts.empty()) {
        const std::string text = read_file(a.prompts, "load");
        custom = in_stage("prompts", kExitStage, [&] {
            std::vector<PromptPoint> pts = prompts_from_json(text);
            for (auto& p : pts) p = make_prompt(img, p.x, p.y, p.label, loaded.cfg.grid.patch_size);
            return pts;
        });
    }
    const SegmentStage seg = in_stage("segment", kExitStage, [&] { return run_segmentation(img, loaded.cfg, custom); });
    in_stage("write", kExitUsage, [&] {
        save_mask(a.output, seg.result.final_mask);
        if (!a.foreground_output.empty()) save_mask(a.foreground_output, seg.foreground);
    });

    const auto& r = seg.result;
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    if (json) {
        print_json({{"mask", a.output},
                    {"width", img.width()},
                    {"height", img.height()},
                    {"foreground_pixels", seg.foreground.count()},
                    {"prompts", {{"generated", seg.generated_prompts},
                                 {"kept", seg.prompts.grid_count()},
                                 {"custom", seg.prompts.custom_count()}}},
                    {"retained_pixels", r.final_mask.count()},
                    {"proposals", proposals_json(r)},
                    {"warnings", r.warnings}});
    } else {
        std::cout << "retained " << r.final_mask.count() << " of " << img.size() << " pixels, " << r.proposals.size()
                  << " proposal(s), " << seg.prompts.kept.size() << " prompt(s) -> " << a.output << "\n";
    }
    return kExitOk;
}

struct BinarizeArgs {
    std::string mask;
    std::string foreground;
    std::string output = "binary.png";
};

int cmd_binarize(const BinarizeArgs& a, bool json) {
    BinaryMask keep = in_stage("load", kExitUsage, [&] { return load_mask(a.mask); });
    if (!a.foreground.empty()) {
        const BinaryMask fg = in_stage("load", kExitUsage, [&] { return load_mask(a.foreground); });
        keep = in_stage("binarize", kExitStage, [&] { return keep_mask(keep, fg); });
    }
    const RasterImage binary = binarize(keep);
    in_stage("write", kExitUsage, [&] { save_image(a.output, binary); });
    const std::size_t removed = keep.size() - keep.count();
    if (json)
        print_json({{"binary", a.output}, {"removed_pixels", removed}});
    else
        std::cout << "removed " << removed << " pixel(s) -> " << a.output << "\n";
    return kExitOk;
}

struct GcodeArgs {
    std::string binary;
    std::string output = "out.gcode";
    ConfigOptions cfg;
    MachineOptions machine;
};

int cmd_gcode(const GcodeArgs& a, bool json) {
    const LoadedConfig loaded = load_config(a.cfg, &a.machine);
    require_scale(loaded);
    const RasterImage binary = load_input(a.binary);
    const MachineConfig& m = loaded.cfg.machine;
    Toolpath path = in_stage("plan", kExitStage, [&] { return plan_toolpath(binary, m); });
    const double zigzag_rapid = path.rapid_xy_length();
    if (loaded.cfg.optimize_travel) path = optimize_travel(path);
    const std::string text = emit_gcode(path).to_text();
    write_file(a.output, text);
    if (json)
        print_json({{"gcode", a.output},
                    {"segments", path.segments.size()},
                    {"cuts", path.cut_count()},
                    {"cut_mm", path.cut_length()},
                    {"rapid_mm", path.rapid_xy_length()},
                    {"rapid_mm_unoptimized", zigzag_rapid}});
    else
        std::cout << path.segments.size() << " segments, cut " << path.cut_length() << " mm, rapid "
                  << path.rapid_xy_length() << " mm -> " << a.output << "\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string gcode;
    std::string reference;
    std::string output;
    int width = 0;
    int height = 0;
    ConfigOptions cfg;
    MachineOptions machine;
};

int cmd_simulate(const SimulateArgs& a, bool json) {
    const LoadedConfig loaded = load_config(a.cfg, &a.machine);
    require_scale(loaded);
    std::optional<BinaryMask> target;
    int w = a.width;
    int h = a.height;
    if (!a.reference.empty()) {
        const RasterImage ref = load_input(a.reference);
        target = in_stage("load", kExitUsage, [&] { return removal_target(ref); });
        w = ref.width();
        h = ref.height();
    }
    if (w <= 0 || h <= 0)
        fail(kExitUsage, "config", Error(ErrorCode::InvalidArgument, "pass --reference or both --width and --height"));

    const std::string text = read_file(a.gcode, "load");
    const GcodeProgram prog = in_stage("parse", kExitStage, [&] { return parse_gcode(text); });
    const SimulationResult sim =
        in_stage("simulate", kExitStage, [&] { return simulate_toolpath(prog, loaded.cfg.machine, w, h); });
    for (const auto& warning : sim.warnings) std::cerr << "warning: " << warning << "\n";

    if (!a.output.empty()) {
        // Same convention as binary.png: removed cells are black.
        BinaryMask kept(w, h, 1);
        kept.subtract(sim.removed);
        in_stage("write", kExitUsage, [&] { save_image(a.output, binarize(kept)); });
    }

    std::optional<bool> matches;
    if (target) matches = static_cast<const BinaryMask&>(sim.removed) == *target;
    if (json) {
        ordered_json j = {{"width", w}, {"height", h}, {"removed_cells", sim.removed.count()}, {"warnings", sim.warnings}};
        if (target) {
            j["target_cells"] = target->count();
            j["matches_reference"] = *matches;
        }
        print_json(j);
    } else {
        std::cout << "removed " << sim.removed.count() << " cell(s)";
        if (target) std::cout << "; reference has " << target->count() << (*matches ? ", match" : ", MISMATCH");
        std::cout << "\n";
    }
    if (matches == false)
        fail(kExitStage, "simulate", Error(ErrorCode::InvalidArgument, "simulated removal differs from the reference"));
    return kExitOk;
}

struct ParseArgs {
    std::string gcode;
    std::string output;
};

int cmd_parse(const ParseArgs& a, bool json) {
    const std::string text = read_file(a.gcode, "load");
    const GcodeProgram prog = in_stage("parse", kExitStage, [&] { return parse_gcode(text); });
    const std::string canonical = prog.to_text();
    if (!a.output.empty()) write_file(a.output, canonical);
    if (json) {
        std::size_t words = 0;
        for (const auto& l : prog.lines) words += l.words.size();
        print_json({{"lines", prog.lines.size()}, {"words", words}, {"canonical", canonical == text}});
    } else if (a.output.empty()) {
        std::cout << canonical;
    }
    return kExitOk;
}

struct EvaluateArgs {
    std::string manifest;
    std::string predictions;
};

int cmd_evaluate(const EvaluateArgs& a, bool json) {
    const DatasetManifest manifest = in_stage("load", kExitUsage, [&] { return load_manifest(a.manifest); });
    std::map<std::string, BinaryMask> predictions;
    for (const auto& e : manifest.entries) {
        const fs::path p = fs::path(a.predictions) / (e.id + ".png");
        if (fs::exists(p)) predictions[e.id] = in_stage("load", kExitUsage, [&] { return load_mask(p); });
    }
    const EvalReport report = in_stage("evaluate", kExitStage, [&] { return run_evaluation(manifest, predictions); });
    std::cout << (json ? report_to_json(report) : report_to_table(report));
    return kExitOk;
}

struct GradeArgs {
    std::string image;
    std::string mask;
    ConfigOptions cfg;
};

int cmd_grade(const GradeArgs& a, bool json) {
    const LoadedConfig loaded = load_config(a.cfg, nullptr);
    const RasterImage img = load_input(a.image);
    const BinaryMask mask = in_stage("load", kExitUsage, [&] { return load_mask(a.mask); });
    const Grade g = in_stage("grade", kExitStage, [&] { return grade_region(img, mask, loaded.cfg.grade); });
    if (json)
        print_json({{"grade", to_string(g)}, {"region_pixels", mask.count()}});
    else
        std::cout << to_string(g) << "\n";
    return kExitOk;
}

struct PipelineArgs {
    std::string image;
    std::string batch;
    std::string output = "out";
    unsigned jobs = 0;
    ConfigOptions cfg;
    MachineOptions machine;
};

ordered_json pipeline_summary(const PipelineOutputs& out) {
    return {{"retained_pixels", out.segmentation.result.final_mask.count()},
            {"removed_cells", out.gcode.removed_cells},
            {"verified", out.gcode.verified},
            {"grade", out.grade ? ordered_json(std::string(to_string(*out.grade))) : ordered_json(nullptr)}};
}

int run_single(const PipelineArgs& a, const PipelineConfig& cfg, bool json) {
    const RasterImage img = load_input(a.image);
    const PipelineOutputs out = in_stage("pipeline", kExitStage, [&] { return run_pipeline(img, cfg); });
    in_stage("write", kExitUsage, [&] { write_pipeline_outputs(a.output, out, cfg); });
    if (!out.gcode.verified)
        fail(kExitStage, "simulate", Error(ErrorCode::InvalidArgument, "simulated removal differs from binary.png"));
    if (json) {
        ordered_json j = pipeline_summary(out);
        j["output"] = a.output;
        print_json(j);
    } else {
        std::cout << "retained " << out.segmentation.result.final_mask.count() << " pixels, removed "
                  << out.gcode.removed_cells << " cells (verified)"
                  << (out.grade ? ", grade " + std::string(to_string(*out.grade)) : std::string()) << " -> "
                  << a.output << "\n";
    }
    return kExitOk;
}

/// Runs every manifest entry into <output>/<id>/ and scores the masks
/// against the manifest's ground truth.
int run_batch(const PipelineArgs& a, const PipelineConfig& cfg, bool json) {
    const DatasetManifest manifest = in_stage("load", kExitUsage, [&] { return load_manifest(a.batch); });
    const std::size_t n = manifest.entries.size();
    std::vector<std::optional<PipelineOutputs>> results(n);
    std::vector<std::optional<CliFailure>> failures(n);

    const unsigned jobs = std::max(1u, a.jobs ? a.jobs : std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& e = manifest.entries[i];
            try {
                const RasterImage img = load_input(e.image_path);
                results[i] = in_stage("pipeline", kExitStage, [&] { return run_pipeline(img, cfg); });
                in_stage("write", kExitUsage, [&] { write_pipeline_outputs(fs::path(a.output) / e.id, *results[i], cfg); });
            } catch (const CliFailure& f) {
                failures[i] = CliFailure{f.exit_code, e.id + ": " + f.stage, f.error};
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < std::min<std::size_t>(jobs, n); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    for (const auto& f : failures)
        if (f) throw *f;

    std::map<std::string, BinaryMask> predictions;
    ordered_json images = ordered_json::object();
    for (std::size_t i = 0; i < n; ++i) {
        predictions[manifest.entries[i].id] = results[i]->segmentation.result.final_mask;
        images[manifest.entries[i].id] = pipeline_summary(*results[i]);
    }
    const EvalReport report = in_stage("evaluate", kExitStage, [&] { return run_evaluation(manifest, predictions); });
    write_file(fs::path(a.output) / "evaluation.json", report_to_json(report));
    if (json) {
        ordered_json j = {{"output", a.output}, {"images", images}};
        j["evaluation"] = ordered_json::parse(report_to_json(report));
        print_json(j);
    } else {
        std::cout << report_to_table(report);
    }
    return kExitOk;
}

int cmd_pipeline(const PipelineArgs& a, bool json) {
    const LoadedConfig loaded = load_config(a.cfg, &a.machine);
    require_scale(loaded);
    if (a.image.empty() == a.batch.empty())
        fail(kExitUsage, "config", Error(ErrorCode::InvalidArgument, "give either an image or --batch MANIFEST"));
    return a.batch.empty() ? run_single(a, loaded.cfg, json) : run_batch(a, loaded.cfg, json);
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string persist;
    std::string static_dir;
};

Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const ServeArgs& a, bool json) {
    std::optional<fs::path> persist;
    if (!a.persist.empty()) persist = a.persist;
    auto store = in_stage("serve", kExitUsage, [&] { return std::make_unique<SessionStore>(persist); });
    ServerOptions options;
    if (!a.static_dir.empty()) options.static_dir = a.static_dir;
    auto server = in_stage("serve", kExitUsage, [&] { return std::make_unique<Server>(*store, options); });

    g_server = server.get();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (json)
        print_json({{"host", a.host}, {"port", a.port}, {"sessions", store->size()}});
    else
        std::cout << "listening on http://" << a.host << ":" << a.port << " (" << store->size()
                  << " restored session(s))" << std::endl;
    const bool ok = server->listen(a.host, a.port);
    g_server = nullptr;
    if (!ok) fail(kExitUsage, "serve", Error(ErrorCode::IoError, "cannot listen on " + a.host + ":" + std::to_string(a.port)));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Agarwood resin segmentation and CNC toolpath toolchain"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "Machine-readable JSON output")->configurable(false);

    auto with_json = [&](CLI::App* cmd) {
        cmd->add_flag("--json", json, "Machine-readable JSON output");
        return cmd;
    };

    SegmentArgs seg;
    auto* segment = with_json(app.add_subcommand("segment", "Segment retained (resinous) regions of an image"));
    segment->add_option("image", seg.image, "Cross-section image (PNG)")->required();
    segment->add_option("-o,--output", seg.output, "Mask output path")->capture_default_str();
    segment->add_option("--foreground-output", seg.foreground_output, "Also write the background-removed region");
    segment->add_option("--prompts", seg.prompts, "Operator prompts JSON: [{x, y, label}]");
    add_config_options(segment, seg.cfg);

    BinarizeArgs bin;
    auto* binarize_cmd = with_json(app.add_subcommand("binarize", "Turn a mask into a removal image"));
    binarize_cmd->add_option("mask", bin.mask, "Mask PNG (white = retained)")->required();
    binarize_cmd->add_option("--foreground", bin.foreground, "Foreground mask; pixels outside it are never cut");
    binarize_cmd->add_option("-o,--output", bin.output, "Binary image output path")->capture_default_str();

    GcodeArgs gc;
    auto* gcode = with_json(app.add_subcommand("gcode", "Plan and emit G-code for a binary removal image"));
    gcode->add_option("binary", gc.binary, "Binary image; black pixels are removed")->required();
    gcode->add_option("-o,--output", gc.output, "G-code output path")->capture_default_str();
    add_config_options(gcode, gc.cfg);
    add_machine_options(gcode, gc.machine, true);

    SimulateArgs sim;
    auto* simulate = with_json(app.add_subcommand("simulate", "Replay G-code and report the removed cells"));
    simulate->add_option("gcode", sim.gcode, "G-code program")->required();
    simulate->add_option("--reference", sim.reference, "Binary image to compare the removal against");
    simulate->add_option("--width", sim.width, "Grid width in cells");
    simulate->add_option("--height", sim.height, "Grid height in cells");
    simulate->add_option("-o,--output", sim.output, "Write the removal map as a binary image");
    add_config_options(simulate, sim.cfg);
    add_machine_options(simulate, sim.machine, false);

    ParseArgs par;
    auto* parse = with_json(app.add_subcommand("parse", "Validate G-code and print its canonical form"));
    parse->add_option("gcode", par.gcode, "G-code program")->required();
    parse->add_option("-o,--output", par.output, "Write the canonical text here instead of stdout");

    EvaluateArgs ev;
    auto* evaluate = with_json(app.add_subcommand("evaluate", "Score predicted masks against a dataset manifest"));
    evaluate->add_option("manifest", ev.manifest, "Dataset manifest (JSON)")->required();
    evaluate->add_option("predictions", ev.predictions, "Directory holding <id>.png masks")->required();

    GradeArgs gr;
    auto* grade = with_json(app.add_subcommand("grade", "Grade a resin region by colour"));
    grade->add_option("image", gr.image, "Cross-section image")->required();
    grade->add_option("mask", gr.mask, "Region mask (white = region)")->required();
    add_config_options(grade, gr.cfg);

    PipelineArgs pl;
    auto* pipeline = with_json(app.add_subcommand("pipeline", "Image to verified G-code in one run"));
    pipeline->add_option("image", pl.image, "Cross-section image");
    pipeline->add_option("--batch", pl.batch, "Run every entry of a dataset manifest");
    pipeline->add_option("-o,--output", pl.output, "Output directory")->capture_default_str();
    pipeline->add_option("-j,--jobs", pl.jobs, "Parallel images in batch mode (default: all cores)");
    add_config_options(pipeline, pl.cfg);
    add_machine_options(pipeline, pl.machine, true);

    ServeArgs sv;
    auto* serve = with_json(app.add_subcommand("serve", "Run the HTTP refinement service"));
    serve->add_option("--host", sv.host, "Bind address")->capture_default_str();
    serve->add_option("--port", sv.port, "Port")->capture_default_str();
    serve->add_option("--persist", sv.persist, "Directory for session persistence");
    serve->add_option("--static", sv.static_dir, "Directory of static files served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*segment) return cmd_segment(seg, json);
        if (*binarize_cmd) return cmd_binarize(bin, json);
        if (*gcode) return cmd_gcode(gc, json);
        if (*simulate) return cmd_simulate(sim, json);
        if (*parse) return cmd_parse(par, json);
        if (*evaluate) return cmd_evaluate(ev, json);
        if (*grade) return cmd_grade(gr, json);
        if (*pipeline) return cmd_pipeline(pl, json);
        if (*serve) return cmd_serve(sv, json);
    } catch (const CliFailure& f) {
        std::cerr << "error [" << f.stage << "]: " << f.error.what() << "\n";
        if (json) {
            ordered_json err = {{"stage", f.stage}, {"code", to_string(f.error.code())}, {"message", f.error.what()}};
            if (f.error.line()) err["line"] = *f.error.line();
            std::cout << ordered_json{{"error", err}}.dump(2) << "\n";
        }
        return f.exit_code;
    }
    return kExitUsage;
}
