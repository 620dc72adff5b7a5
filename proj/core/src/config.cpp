#include <agarseg/pipeline.hpp>

#include <json.hpp>

#include <algorithm>

namespace agarseg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw Error(ErrorCode::ParseError, "config: unknown key \"" + key + "\" in " + std::string(where));
    }
}

const json& object_at(const json& parent, const char* key) {
    const json& v = parent.at(key);
    if (!v.is_object()) throw Error(ErrorCode::ParseError, std::string("config: \"") + key + "\" must be an object");
    return v;
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_background(const json& j, BackgroundModel& bg) {
    reject_unknown(j, {"mode", "key_color", "tolerance"}, "background");
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "chroma-key") bg.mode = BackgroundModel::Mode::ChromaKey;
        else if (mode == "corner-sample") bg.mode = BackgroundModel::Mode::CornerSample;
        else throw Error(ErrorCode::ParseError, "config: background.mode must be chroma-key or corner-sample");
    }
    if (j.contains("key_color")) {
        const auto c = j.at("key_color").get<std::vector<int>>();
        if (c.size() != 3 || std::any_of(c.begin(), c.end(), [](int v) { return v < 0 || v > 255; }))
            throw Error(ErrorCode::ParseError, "config: background.key_color must be [r, g, b] in 0..255");
        bg.key_color = {std::uint8_t(c[0]), std::uint8_t(c[1]), std::uint8_t(c[2])};
    }
    read(j, "tolerance", bg.tolerance);
}

void read_grid(const json& j, PromptGridConfig& g) {
    reject_unknown(j, {"rows", "cols", "patch_size", "dedup_threshold", "dedup_mode"}, "grid");
    read(j, "rows", g.rows);
    read(j, "cols", g.cols);
    read(j, "patch_size", g.patch_size);
    read(j, "dedup_threshold", g.dedup_threshold);
    if (j.contains("dedup_mode")) {
        const auto mode = j.at("dedup_mode").get<std::string>();
        if (mode == "greedy") g.mode = DedupMode::Greedy;
        else if (mode == "centroid") g.mode = DedupMode::Centroid;
        else throw Error(ErrorCode::ParseError, "config: grid.dedup_mode must be greedy or centroid");
    }
}

void read_backend(const json& j, BackendConfig& backend) {
    std::string type(backend_name(backend));
    read(j, "type", type);
    if (type == "threshold") {
        reject_unknown(j, {"type", "mode", "threshold"}, "backend");
        ThresholdBackend t = std::holds_alternative<ThresholdBackend>(backend) ? std::get<ThresholdBackend>(backend)
                                                                               : ThresholdBackend{};
        if (j.contains("mode")) {
            const auto mode = j.at("mode").get<std::string>();
            if (mode == "otsu") t.mode = ThresholdBackend::Mode::Otsu;
            else if (mode == "fixed") t.mode = ThresholdBackend::Mode::Fixed;
            else throw Error(ErrorCode::ParseError, "config: backend.mode must be otsu or fixed");
        }
        read(j, "threshold", t.threshold);
        backend = t;
    } else if (type == "region_grow") {
        reject_unknown(j, {"type", "color_tol", "connectivity"}, "backend");
        RegionGrowBackend g = std::holds_alternative<RegionGrowBackend>(backend)
                                  ? std::get<RegionGrowBackend>(backend)
                                  : RegionGrowBackend{};
        read(j, "color_tol", g.color_tol);
        if (j.contains("connectivity")) {
            const int c = j.at("connectivity").get<int>();
            if (c != 4 && c != 8) throw Error(ErrorCode::ParseError, "config: backend.connectivity must be 4 or 8");
            g.connectivity = c == 4 ? Connectivity::Four : Connectivity::Eight;
        }
        backend = g;
    } else if (type == "external") {
        reject_unknown(j, {"type", "exchange_dir", "command", "timeout_ms"}, "backend");
        ExternalBackend e =
            std::holds_alternative<ExternalBackend>(backend) ? std::get<ExternalBackend>(backend) : ExternalBackend{};
        if (j.contains("exchange_dir")) e.exchange_dir = j.at("exchange_dir").get<std::string>();
        if (j.contains("command")) e.command = j.at("command").get<std::string>();
        if (j.contains("timeout_ms")) e.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long long>());
        backend = e;
    } else {
        throw Error(ErrorCode::ParseError, "config: backend.type must be threshold, region_grow or external");
    }
}

void read_machine(const json& j, MachineConfig& m) {
    reject_unknown(j,
                   {"mm_per_pixel", "safe_z", "cut_z", "feed_rate", "plunge_rate", "spindle_rpm", "tool_diameter"},
                   "machine");
    read(j, "mm_per_pixel", m.mm_per_pixel);
    read(j, "safe_z", m.safe_z);
    read(j, "cut_z", m.cut_z);
    read(j, "feed_rate", m.feed_rate);
    read(j, "plunge_rate", m.plunge_rate);
    read(j, "spindle_rpm", m.spindle_rpm);
    if (j.contains("tool_diameter")) {
        if (j.at("tool_diameter").is_null()) m.tool_diameter.reset();
        else m.tool_diameter = j.at("tool_diameter").get<double>();
    }
}

json parse_object(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::ParseError, "config: expected a JSON object");
    return doc;
}

template <typename F>
void guarded(F&& f) {
    try {
        f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
}

ordered_json machine_json(const MachineConfig& m) {
    ordered_json j = {{"mm_per_pixel", m.mm_per_pixel}, {"safe_z", m.safe_z},           {"cut_z", m.cut_z},
                      {"feed_rate", m.feed_rate},       {"plunge_rate", m.plunge_rate}, {"spindle_rpm", m.spindle_rpm}};
    j["tool_diameter"] = m.tool_diameter ? ordered_json(*m.tool_diameter) : ordered_json(nullptr);
    return j;
}

} // namespace

void PipelineConfig::validate() const {
    background.validate();
    grid.validate();
    if (const auto* t = std::get_if<ThresholdBackend>(&backend); t && (t->threshold < 0 || t->threshold > 255))
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0, 255]");
    if (const auto* g = std::get_if<RegionGrowBackend>(&backend); g && !(g->color_tol >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "colour tolerance must be >= 0");
    if (const auto* e = std::get_if<ExternalBackend>(&backend); e && e->timeout.count() <= 0)
        throw Error(ErrorCode::InvalidArgument, "external worker timeout must be positive");
    if (!(selection.accept_threshold >= 0.0 && selection.accept_threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "accept threshold must lie in [0, 1]");
    machine.validate();
}

PipelineConfig config_from_json(std::string_view json_text, const PipelineConfig& base) {
    const json doc = parse_object(json_text);
    PipelineConfig cfg = base;
    guarded([&] {
        reject_unknown(doc, {"background", "grid", "backend", "selection", "machine", "optimize_travel", "grade"},
                       "config");
        if (doc.contains("background")) read_background(object_at(doc, "background"), cfg.background);
        if (doc.contains("grid")) read_grid(object_at(doc, "grid"), cfg.grid);
        if (doc.contains("backend")) read_backend(object_at(doc, "backend"), cfg.backend);
        if (doc.contains("selection")) {
            const json& s = object_at(doc, "selection");
            reject_unknown(s, {"accept_threshold", "rule"}, "selection");
            read(s, "accept_threshold", cfg.selection.accept_threshold);
            if (s.contains("rule")) {
                const auto rule = s.at("rule").get<std::string>();
                if (rule == "union") cfg.selection.rule = MergeRule::Union;
                else if (rule == "top1") cfg.selection.rule = MergeRule::Top1;
                else throw Error(ErrorCode::ParseError, "config: selection.rule must be union or top1");
            }
        }
        if (doc.contains("machine")) read_machine(object_at(doc, "machine"), cfg.machine);
        read(doc, "optimize_travel", cfg.optimize_travel);
        if (doc.contains("grade")) {
            const json& g = object_at(doc, "grade");
            reject_unknown(g, {"dark_luma", "light_luma", "spread"}, "grade");
            read(g, "dark_luma", cfg.grade.dark_luma);
            read(g, "light_luma", cfg.grade.light_luma);
            read(g, "spread", cfg.grade.spread);
        }
    });
    return cfg;
}

MachineConfig machine_from_json(std::string_view json_text, const MachineConfig& base) {
    const json doc = parse_object(json_text);
    MachineConfig m = base;
    guarded([&] { read_machine(doc, m); });
    return m;
}

std::string config_to_json(const PipelineConfig& cfg) {
    ordered_json j;
    const auto& bg = cfg.background;
    j["background"] = {{"mode", bg.mode == BackgroundModel::Mode::ChromaKey ? "chroma-key" : "corner-sample"},
                       {"key_color", {bg.key_color.r, bg.key_color.g, bg.key_color.b}},
                       {"tolerance", bg.tolerance}};
    j["grid"] = {{"rows", cfg.grid.rows},
                 {"cols", cfg.grid.cols},
                 {"patch_size", cfg.grid.patch_size},
                 {"dedup_threshold", cfg.grid.dedup_threshold},
                 {"dedup_mode", cfg.grid.mode == DedupMode::Greedy ? "greedy" : "centroid"}};
    if (const auto* t = std::get_if<ThresholdBackend>(&cfg.backend)) {
        j["backend"] = {{"type", "threshold"},
                        {"mode", t->mode == ThresholdBackend::Mode::Otsu ? "otsu" : "fixed"},
                        {"threshold", t->threshold}};
    } else if (const auto* g = std::get_if<RegionGrowBackend>(&cfg.backend)) {
        j["backend"] = {{"type", "region_grow"},
                        {"color_tol", g->color_tol},
                        {"connectivity", g->connectivity == Connectivity::Four ? 4 : 8}};
    } else {
        const auto& e = std::get<ExternalBackend>(cfg.backend);
        j["backend"] = {{"type", "external"},
                        {"exchange_dir", e.exchange_dir.string()},
                        {"command", e.command.string()},
                        {"timeout_ms", e.timeout.count()}};
    }
    j["selection"] = {{"accept_threshold", cfg.selection.accept_threshold},
                      {"rule", cfg.selection.rule == MergeRule::Union ? "union" : "top1"}};
    j["machine"] = machine_json(cfg.machine);
    j["optimize_travel"] = cfg.optimize_travel;
    j["grade"] = {{"dark_luma", cfg.grade.dark_luma},
                  {"light_luma", cfg.grade.light_luma},
                  {"spread", cfg.grade.spread}};
    return j.dump(2) + "\n";
}

} // namespace agarseg
