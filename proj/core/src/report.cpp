#include <agarseg/evaluation.hpp>

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace agarseg {

using nlohmann::ordered_json;

EvalReport run_evaluation(const DatasetManifest& manifest, const std::map<std::string, BinaryMask>& predictions) {
    std::string missing;
    for (const auto& entry : manifest.entries)
        if (!predictions.contains(entry.id)) missing += (missing.empty() ? "" : ", ") + entry.id;
    if (!missing.empty()) throw Error(ErrorCode::MissingPrediction, "missing prediction for id(s): " + missing);

    std::vector<EvalCase> cases;
    for (const auto& entry : manifest.entries) {
        EvalCase c;
        c.id = entry.id;
        c.truth = load_mask(entry.mask_path);
        c.prediction = predictions.at(entry.id);
        cases.push_back(std::move(c));
    }
    return evaluate_cases(std::move(cases));
}

namespace {

std::string fixed1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

constexpr QualityClass kTableOrder[] = {QualityClass::Good, QualityClass::Moderate, QualityClass::Poor};

} // namespace

std::string report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["images"] = ordered_json::array();
    for (const auto& row : report.rows) {
        doc["images"].push_back({{"id", row.id},
                                 {"width", row.width},
                                 {"height", row.height},
                                 {"overlap", row.iou.overlap},
                                 {"union", row.iou.union_area},
                                 {"iou", row.iou.ratio},
                                 {"iou_percent", row.iou.percent_1dp()},
                                 {"class", to_string(row.quality)}});
    }
    doc["summary"] = ordered_json::object();
    for (auto q : kTableOrder) {
        const auto it = report.summaries.find(q);
        if (it == report.summaries.end()) continue;
        const auto& s = it->second;
        doc["summary"][std::string(to_string(q))] = {
            {"count", s.count}, {"min", s.min}, {"median", s.median}, {"average", s.average}, {"max", s.max}};
    }
    if (report.grade) doc["grade"] = to_string(*report.grade);
    return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %-20s %8s  %s\n", "Image", "Resolution (w x h)", "IoU (%)", "Class");
    out << line;
    for (const auto& row : report.rows) {
        const std::string res = std::to_string(row.width) + " x " + std::to_string(row.height);
        std::snprintf(line, sizeof line, "%-8s %-20s %8s  %s\n", row.id.c_str(), res.c_str(),
                      fixed1(row.iou.percent_1dp()).c_str(), std::string(to_string(row.quality)).c_str());
        out << line;
    }
    out << "\n";
    std::snprintf(line, sizeof line, "%-10s %8s %8s %12s %8s\n", "Quality", "Min (%)", "Med (%)", "Average (%)",
                  "Max (%)");
    out << line;
    for (auto q : kTableOrder) {
        const auto it = report.summaries.find(q);
        if (it == report.summaries.end()) continue;
        const auto& s = it->second;
        std::snprintf(line, sizeof line, "%-10s %8s %8s %12s %8s\n", std::string(to_string(q)).c_str(),
                      fixed1(s.min).c_str(), fixed1(s.median).c_str(), fixed1(s.average).c_str(),
                      fixed1(s.max).c_str());
        out << line;
    }
    if (report.grade) out << "\nGrade: " << to_string(*report.grade) << "\n";
    return out.str();
}

} // namespace agarseg
