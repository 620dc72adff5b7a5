#pragma once

#include <agarseg/image.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agarseg {

/// Round to one decimal place, halves away from zero.
double round_1dp(double value);

struct IoUScore {
    double ratio = 0.0;
    std::size_t overlap = 0;
    std::size_t union_area = 0;

    double percent_1dp() const { return round_1dp(ratio * 100.0); }
};

/// |pred & truth| / |pred | truth|; two empty masks score 1.0.
IoUScore iou(const BinaryMask& pred, const BinaryMask& truth);

enum class QualityClass { Poor, Moderate, Good };

std::string_view to_string(QualityClass q);

/// Poor below 40.0 %, Good above 60.0 %, Moderate on the closed interval between.
QualityClass classify_quality(double percent);
inline QualityClass classify_quality(const IoUScore& score) { return classify_quality(score.percent_1dp()); }

struct SummaryStats {
    double min = 0.0;
    double median = 0.0;
    double average = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

/// Min / median / mean / max of percents, each rounded to one decimal.
SummaryStats summarize(const std::vector<double>& percents);

enum class Grade { SuperA, A, B, C };

std::string_view to_string(Grade g);

struct GradeConfig {
    double dark_luma = 60.0;   // below -> A
    double light_luma = 170.0; // at or above, with R >= G > B -> C
    double spread = 55.0;      // mean per-channel std-dev above -> Super A
};

Grade grade_region(const RasterImage& img, const BinaryMask& region, const GradeConfig& cfg = {});

struct EvalRow {
    std::string id;
    int width = 0;
    int height = 0;
    IoUScore iou;
    QualityClass quality = QualityClass::Poor;
};

struct EvalReport {
    std::vector<EvalRow> rows; // ordered by id
    std::map<QualityClass, SummaryStats> summaries;
    std::optional<Grade> grade;

    std::size_t class_count(QualityClass q) const;
};

struct EvalCase {
    std::string id;
    BinaryMask truth;
    BinaryMask prediction;
};

EvalReport evaluate_cases(std::vector<EvalCase> cases);


/// Loads each ground-truth mask from the manifest and scores the matching prediction.
EvalReport run_evaluation(const DatasetManifest& manifest, const std::map<std::string, BinaryMask>& predictions);

std::string report_to_json(const EvalReport& report);
/// Per-image rows (id, resolution, IoU %, class) then per-class min/med/avg/max.
std::string report_to_table(const EvalReport& report);

} // namespace agarseg
