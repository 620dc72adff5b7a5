#include <agarseg/gcode.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace agarseg {

void MachineConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(mm_per_pixel)) throw Error(ErrorCode::InvalidArgument, "mm_per_pixel must be > 0");
    if (!positive(safe_z)) throw Error(ErrorCode::InvalidArgument, "safe_z must be > 0");
    if (!(std::isfinite(cut_z) && cut_z < 0.0)) throw Error(ErrorCode::InvalidArgument, "cut_z must be < 0");
    if (!positive(feed_rate)) throw Error(ErrorCode::InvalidArgument, "feed_rate must be > 0");
    if (!positive(plunge_rate)) throw Error(ErrorCode::InvalidArgument, "plunge_rate must be > 0");
    if (spindle_rpm <= 0) throw Error(ErrorCode::InvalidArgument, "spindle_rpm must be > 0");
    if (tool_diameter && !positive(*tool_diameter))
        throw Error(ErrorCode::InvalidArgument, "tool_diameter must be > 0");
}

namespace {

double xy_distance(const Point3& a, const Point3& b) { return std::hypot(a.x - b.x, a.y - b.y); }
double xy_distance(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

} // namespace

double Toolpath::rapid_xy_length() const {
    double total = 0.0;
    for (const auto& s : segments)
        if (s.kind == SegmentKind::Rapid) total += xy_distance(s.from, s.to);
    return total;
}

double Toolpath::cut_length() const {
    double total = 0.0;
    for (const auto& s : segments)
        if (s.kind == SegmentKind::Cut) total += xy_distance(s.from, s.to);
    return total;
}

std::size_t Toolpath::cut_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.kind == SegmentKind::Cut ? 1 : 0;
    return n;
}

BinaryMask removal_target(const RasterImage& binary) {
    BinaryMask target(binary.width(), binary.height());
    for (std::size_t i = 0; i < binary.size(); ++i) {
        const Rgb& px = binary.pixels()[i];
        if (px == kBlack) {
            target.pixels()[i] = 1;
        } else if (px != kWhite) {
            const int x = static_cast<int>(i % static_cast<std::size_t>(binary.width()));
            const int y = static_cast<int>(i / static_cast<std::size_t>(binary.width()));
            throw Error(ErrorCode::NonBinaryPixel, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                                       ") is neither (0,0,0) nor (255,255,255)");
        }
    }
    return target;
}

Toolpath toolpath_from_runs(const std::vector<CutRun>& runs, const MachineConfig& cfg) {
    Toolpath path;
    path.config = cfg;
    Point3 pos{0.0, 0.0, cfg.safe_z};
    auto move = [&](SegmentKind kind, Point3 to) {
        path.segments.push_back({kind, pos, to});
        pos = to;
    };
    for (const auto& run : runs) {
        if (pos.x != run.x_start || pos.y != run.y) move(SegmentKind::Rapid, {run.x_start, run.y, cfg.safe_z});
        move(SegmentKind::Plunge, {run.x_start, run.y, cfg.cut_z});
        if (run.x_end != run.x_start) move(SegmentKind::Cut, {run.x_end, run.y, cfg.cut_z});
        move(SegmentKind::Retract, {run.x_end, run.y, cfg.safe_z});
    }
    if (pos.x != 0.0 || pos.y != 0.0) move(SegmentKind::Rapid, {0.0, 0.0, cfg.safe_z});
    return path;
}

std::vector<CutRun> extract_runs(const Toolpath& path) {
    std::vector<CutRun> runs;
    for (const auto& s : path.segments) {
        if (s.kind == SegmentKind::Plunge) {
            runs.push_back({s.to.y, s.to.x, s.to.x});
        } else if (s.kind == SegmentKind::Cut) {
            if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "cut segment before any plunge");
            runs.back().x_end = s.to.x;
        }
    }
    return runs;
}

Toolpath plan_toolpath(const RasterImage& binary, const MachineConfig& cfg) {
    cfg.validate();
    const BinaryMask target = removal_target(binary);
    const double step = cfg.mm_per_pixel;

    std::vector<CutRun> runs;
    bool left_to_right = true;
    for (int row = 0; row < target.height(); ++row) {
        std::vector<CutRun> row_runs;
        const double y = (target.height() - 1 - row) * step;
        for (int col = 0; col < target.width();) {
            if (!target.test(col, row)) {
                ++col;
                continue;
            }
            const int first = col;
            while (col < target.width() && target.test(col, row)) ++col;
            row_runs.push_back({y, first * step, (col - 1) * step});
        }
        if (row_runs.empty()) continue;
        if (!left_to_right) {
            std::reverse(row_runs.begin(), row_runs.end());
            for (auto& r : row_runs) std::swap(r.x_start, r.x_end);
        }
        runs.insert(runs.end(), row_runs.begin(), row_runs.end());
        left_to_right = !left_to_right;
    }
    return toolpath_from_runs(runs, cfg);
}

Toolpath optimize_travel(const Toolpath& path) {
    std::vector<CutRun> remaining = extract_runs(path);
    if (remaining.size() < 2) return path;

    std::vector<CutRun> ordered;
    ordered.reserve(remaining.size());
    std::vector<bool> used(remaining.size(), false);
    double px = 0.0;
    double py = 0.0;
    for (std::size_t step = 0; step < remaining.size(); ++step) {
        std::size_t best = 0;
        bool flip = false;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            if (used[i]) continue;
            const auto& r = remaining[i];
            const double ds = xy_distance(px, py, r.x_start, r.y);
            const double de = xy_distance(px, py, r.x_end, r.y);
            if (ds < best_d) {
                best_d = ds;
                best = i;
                flip = false;
            }
            if (de < best_d) {
                best_d = de;
                best = i;
                flip = true;
            }
        }
        used[best] = true;
        CutRun r = remaining[best];
        if (flip) std::swap(r.x_start, r.x_end);
        ordered.push_back(r);
        px = r.x_end;
        py = r.y;
    }

    Toolpath candidate = toolpath_from_runs(ordered, path.config);
    return candidate.rapid_xy_length() <= path.rapid_xy_length() ? candidate : path;
}

} // namespace agarseg
