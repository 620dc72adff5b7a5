#include <agarseg/evaluation.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agarseg {

double round_1dp(double value) {
    // The nudge absorbs binary representation error so decimal halves such
    // as 14.25 round up as they would by hand.
    const double scaled = std::floor(std::fabs(value) * 10.0 + 0.5 + 1e-9) / 10.0;
    return std::copysign(scaled, value);
}

IoUScore iou(const BinaryMask& pred, const BinaryMask& truth) {
    require_same_shape(pred, truth, "iou");
    IoUScore score;
    const auto a = pred.pixels();
    const auto b = truth.pixels();
    for (std::size_t i = 0; i < a.size(); ++i) {
        score.overlap += (a[i] && b[i]) ? 1 : 0;
        score.union_area += (a[i] || b[i]) ? 1 : 0;
    }
    score.ratio = score.union_area == 0 ? 1.0 : double(score.overlap) / double(score.union_area);
    return score;
}

std::string_view to_string(QualityClass q) {
    switch (q) {
    case QualityClass::Poor: return "Poor";
    case QualityClass::Moderate: return "Moderate";
    case QualityClass::Good: return "Good";
    }
    return "?";
}

QualityClass classify_quality(double percent) {
    const long long tenths = std::llround(round_1dp(percent) * 10.0);
    if (tenths < 400) return QualityClass::Poor;
    if (tenths > 600) return QualityClass::Good;
    return QualityClass::Moderate;
}

SummaryStats summarize(const std::vector<double>& percents) {
    if (percents.empty()) throw Error(ErrorCode::EmptyInput, "summary over an empty score list");
    std::vector<double> sorted = percents;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    const double median = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    const long double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0L);

    SummaryStats stats;
    stats.count = n;
    stats.min = round_1dp(sorted.front());
    stats.max = round_1dp(sorted.back());
    stats.median = round_1dp(median);
    stats.average = round_1dp(static_cast<double>(sum / static_cast<long double>(n)));
    return stats;
}

std::string_view to_string(Grade g) {
    switch (g) {
    case Grade::SuperA: return "Super A";
    case Grade::A: return "A";
    case Grade::B: return "B";
    case Grade::C: return "C";
    }
    return "?";
}

Grade grade_region(const RasterImage& img, const BinaryMask& region, const GradeConfig& cfg) {
    require_same_shape(img, region, "grade region");
    double sum[3] = {0, 0, 0};
    double sq[3] = {0, 0, 0};
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!region.pixels()[i]) continue;
        const Rgb& px = img.pixels()[i];
        const double c[3] = {double(px.r), double(px.g), double(px.b)};
        for (int k = 0; k < 3; ++k) {
            sum[k] += c[k];
            sq[k] += c[k] * c[k];
        }
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot grade an empty region");

    double mean[3];
    double spread = 0;
    for (int k = 0; k < 3; ++k) {
        mean[k] = sum[k] / double(n);
        spread += std::sqrt(std::max(0.0, sq[k] / double(n) - mean[k] * mean[k])) / 3.0;
    }
    const double mean_luma = 0.299 * mean[0] + 0.587 * mean[1] + 0.114 * mean[2];

    if (mean_luma < cfg.dark_luma) return Grade::A;
    if (mean_luma >= cfg.light_luma && mean[0] >= mean[1] && mean[1] > mean[2]) return Grade::C;
    if (spread > cfg.spread) return Grade::SuperA;
    return Grade::B;
}

std::size_t EvalReport::class_count(QualityClass q) const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [q](const EvalRow& r) { return r.quality == q; }));
}

EvalReport evaluate_cases(std::vector<EvalCase> cases) {
    std::sort(cases.begin(), cases.end(), [](const EvalCase& a, const EvalCase& b) { return a.id < b.id; });
    EvalReport report;
    std::map<QualityClass, std::vector<double>> by_class;
    for (const auto& c : cases) {
        EvalRow row;
        row.id = c.id;
        row.width = c.truth.width();
        row.height = c.truth.height();
        try {
            row.iou = iou(c.prediction, c.truth);
        } catch (const Error& e) {
            throw Error(e.code(), c.id + ": " + e.what());
        }
        row.quality = classify_quality(row.iou);
        by_class[row.quality].push_back(row.iou.percent_1dp());
        report.rows.push_back(std::move(row));
    }
    for (const auto& [q, scores] : by_class) report.summaries[q] = summarize(scores);
    return report;
}

} // namespace agarseg
