#include <agarseg/image.hpp>

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace agarseg {

using nlohmann::json;

const ManifestEntry* DatasetManifest::find(std::string_view id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

DatasetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw Error(ErrorCode::ParseError, "manifest: expected an object with an \"entries\" array");

    DatasetManifest manifest;
    std::set<std::string> seen;
    std::vector<std::pair<ErrorCode, std::string>> problems;

    for (const auto& item : doc["entries"]) {
        if (!item.is_object() || !item.contains("id") || !item["id"].is_string() || !item.contains("image") ||
            !item["image"].is_string() || !item.contains("mask") || !item["mask"].is_string())
            throw Error(ErrorCode::ParseError, "manifest: each entry needs string fields id, image and mask");

        ManifestEntry entry;
        entry.id = item["id"].get<std::string>();
        entry.image_path = base_dir / item["image"].get<std::string>();
        entry.mask_path = base_dir / item["mask"].get<std::string>();

        if (!seen.insert(entry.id).second) {
            problems.emplace_back(ErrorCode::DuplicateId, entry.id + ": duplicate id");
            continue;
        }

        try {
            const RasterImage image = load_image(entry.image_path);
            const RasterImage mask = load_image(entry.mask_path);
            if (!image.same_shape(mask)) {
                std::ostringstream msg;
                msg << entry.id << ": dimension mismatch, image " << image.width() << "x" << image.height()
                    << " vs mask " << mask.width() << "x" << mask.height();
                problems.emplace_back(ErrorCode::DimensionMismatch, msg.str());
                continue;
            }
            entry.width = image.width();
            entry.height = image.height();
        } catch (const Error& e) {
            const ErrorCode code = e.code() == ErrorCode::FileNotFound ? ErrorCode::MissingFile : e.code();
            problems.emplace_back(code, entry.id + ": " + e.what());
            continue;
        }
        manifest.entries.push_back(std::move(entry));
    }

    if (!problems.empty()) {
        std::string msg = "manifest has " + std::to_string(problems.size()) + " invalid entr" +
                          (problems.size() == 1 ? "y" : "ies");
        for (const auto& [code, text] : problems) msg += "\n  " + text;
        throw Error(problems.front().first, msg);
    }
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::FileNotFound, "manifest not found: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str(), path.parent_path());
}

} // namespace agarseg
