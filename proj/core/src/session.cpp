#include <agarseg/service.hpp>

#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

namespace agarseg {

using nlohmann::json;

struct SessionStore::Session {
    std::mutex mutex;
    std::string id;
    std::vector<std::uint8_t> png;
    RasterImage image;
    PipelineConfig config;
    std::vector<PromptPoint> history;
    SegmentationResult latest;
    BinaryMask foreground;
    std::optional<BinaryMask> truth;

    void recompute() {
        SegmentStage stage = run_segmentation(image, config, history);
        latest = std::move(stage.result);
        foreground = std::move(stage.foreground);
    }
};

namespace {

std::string new_session_id() {
    static std::mutex mutex;
    static std::random_device device;
    static std::mt19937_64 rng(device());
    std::lock_guard lock(mutex);
    std::ostringstream out;
    out << std::hex;
    for (int i = 0; i < 2; ++i) {
        out.width(16);
        out.fill('0');
        out << rng();
    }
    return out.str();
}

long long signed_delta(std::size_t after, std::size_t before) {
    return static_cast<long long>(after) - static_cast<long long>(before);
}

} // namespace

SessionStore::SessionStore(std::optional<std::filesystem::path> persist_dir) : persist_dir_(std::move(persist_dir)) {
    if (persist_dir_) reload();
}

SessionStore::~SessionStore() = default;

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + id);
    return it->second;
}

bool SessionStore::contains(const std::string& id) const {
    std::lock_guard lock(mutex_);
    return sessions_.contains(id);
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

SessionStore::Created SessionStore::create(std::span<const std::uint8_t> png, const PipelineConfig& cfg) {
    auto s = std::make_shared<Session>();
    s->png.assign(png.begin(), png.end());
    s->image = decode_png(png);
    s->config = cfg;
    s->recompute();
    s->id = new_session_id();
    persist(*s);

    Created out{s->id, s->latest};
    std::lock_guard lock(mutex_);
    sessions_.emplace(s->id, std::move(s));
    return out;
}

SessionStore::Update SessionStore::apply_prompt(const std::string& id, int x, int y, PromptLabel label) {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    const PromptPoint p = make_prompt(s->image, x, y, label, s->config.grid.patch_size);
    const std::size_t before = s->latest.final_mask.count();
    s->history.push_back(p);
    try {
        s->recompute();
    } catch (...) {
        s->history.pop_back();
        throw;
    }
    persist(*s);
    return {s->latest, signed_delta(s->latest.final_mask.count(), before), s->history.size() - 1};
}

SessionStore::Update SessionStore::delete_prompt(const std::string& id, std::size_t index) {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (index >= s->history.size())
        throw Error(ErrorCode::OutOfBounds, "prompt index " + std::to_string(index) + " out of range (history has " +
                                                std::to_string(s->history.size()) + ")");
    const std::size_t before = s->latest.final_mask.count();
    const PromptPoint removed = s->history[index];
    s->history.erase(s->history.begin() + static_cast<std::ptrdiff_t>(index));
    try {
        s->recompute();
    } catch (...) {
        s->history.insert(s->history.begin() + static_cast<std::ptrdiff_t>(index), removed);
        throw;
    }
    persist(*s);
    return {s->latest, signed_delta(s->latest.final_mask.count(), before), index};
}

SessionStore::Export SessionStore::export_gcode(const std::string& id, const MachineConfig& machine, bool optimize) {
    const auto s = find(id);
    BinaryMask keep;
    {
        std::lock_guard lock(s->mutex);
        keep = keep_mask(s->latest.final_mask, s->foreground);
    }
    GcodeStage g = run_gcode(keep, machine, optimize);
    Export out;
    out.gcode = std::move(g.gcode);
    out.cut_mm = g.toolpath.cut_length();
    out.rapid_mm = g.toolpath.rapid_xy_length();
    out.removed_cells = g.removed_cells;
    out.verified = g.verified;
    out.toolpath = std::move(g.toolpath);
    return out;
}

void SessionStore::set_truth(const std::string& id, BinaryMask truth) {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    require_same_shape(truth, s->image, "ground truth");
    s->truth = std::move(truth);
}

EvalReport SessionStore::evaluate(const std::string& id, const std::optional<BinaryMask>& truth) {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    const std::optional<BinaryMask>& gt = truth ? truth : s->truth;
    if (!gt) throw Error(ErrorCode::InvalidArgument, "no ground truth supplied for session " + id);
    EvalReport report = evaluate_cases({EvalCase{id, *gt, s->latest.final_mask}});
    if (s->latest.final_mask.count() > 0) report.grade = grade_region(s->image, s->latest.final_mask, s->config.grade);
    return report;
}

BinaryMask SessionStore::final_mask(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->latest.final_mask;
}

SegmentationResult SessionStore::latest_result(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->latest;
}

std::vector<PromptPoint> SessionStore::prompt_history(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->history;
}

RasterImage SessionStore::image(const std::string& id) const {
    const auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->image;
}

void SessionStore::persist(const Session& s) const {
    if (!persist_dir_) return;
    const auto dir = *persist_dir_ / s.id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());

    std::ofstream img(dir / "image.png", std::ios::binary | std::ios::trunc);
    img.write(reinterpret_cast<const char*>(s.png.data()), static_cast<std::streamsize>(s.png.size()));

    json doc;
    doc["id"] = s.id;
    doc["config"] = json::parse(config_to_json(s.config));
    doc["prompts"] = json::parse(prompts_to_json(s.history));
    std::ofstream meta(dir / "session.json", std::ios::trunc);
    meta << doc.dump(2) << "\n";
    if (!img || !meta) throw Error(ErrorCode::IoError, "cannot persist session " + s.id);
}

void SessionStore::reload() {
    std::error_code ec;
    std::filesystem::create_directories(*persist_dir_, ec);
    for (const auto& entry : std::filesystem::directory_iterator(*persist_dir_, ec)) {
        if (!entry.is_directory()) continue;
        const auto meta_path = entry.path() / "session.json";
        const auto image_path = entry.path() / "image.png";
        if (!std::filesystem::exists(meta_path) || !std::filesystem::exists(image_path)) continue;

        std::ifstream meta(meta_path);
        std::stringstream buf;
        buf << meta.rdbuf();
        const json doc = json::parse(buf.str(), nullptr, false);
        if (doc.is_discarded() || !doc.contains("id") || !doc.contains("config") || !doc.contains("prompts")) continue;

        // A session that no longer replays (corrupt files, worker gone) is
        // left on disk but not served.
        try {
            auto s = std::make_shared<Session>();
            s->id = doc["id"].get<std::string>();
            std::ifstream img(image_path, std::ios::binary);
            s->png.assign(std::istreambuf_iterator<char>(img), std::istreambuf_iterator<char>());
            s->image = decode_png(s->png);
            s->config = config_from_json(doc["config"].dump());
            for (const auto& p : prompts_from_json(doc["prompts"].dump()))
                s->history.push_back(make_prompt(s->image, p.x, p.y, p.label, s->config.grid.patch_size));
            s->recompute();
            sessions_.emplace(s->id, std::move(s));
        } catch (const Error&) {
        } catch (const json::exception&) {
        }
    }
}

} // namespace agarseg
