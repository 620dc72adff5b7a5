#include <agarseg/gcode.hpp>

#include <algorithm>
#include <cmath>

namespace agarseg {
namespace {

constexpr double kDepthTolerance = 1e-6;
constexpr double kCoverageSlack = 1e-9;

double distance_to_segment(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

void sweep(RemovalMap& map, const MachineConfig& cfg, double ax, double ay, double bx, double by) {
    const double step = cfg.mm_per_pixel;
    const double radius = cfg.effective_tool_diameter() / 2.0;
    const int h = map.height();

    const int col0 = std::max(0, static_cast<int>(std::floor((std::min(ax, bx) - radius) / step)));
    const int col1 = std::min(map.width() - 1, static_cast<int>(std::ceil((std::max(ax, bx) + radius) / step)));
    // y_mm = (h - 1 - row) * step  <=>  row = h - 1 - y_mm / step
    const int row0 = std::max(0, static_cast<int>(std::floor(h - 1 - (std::max(ay, by) + radius) / step)));
    const int row1 = std::min(h - 1, static_cast<int>(std::ceil(h - 1 - (std::min(ay, by) - radius) / step)));

    for (int row = row0; row <= row1; ++row) {
        const double cy = (h - 1 - row) * step;
        for (int col = col0; col <= col1; ++col) {
            const double cx = col * step;
            if (distance_to_segment(cx, cy, ax, ay, bx, by) <= radius + kCoverageSlack) map.set(col, row);
        }
    }
}

} // namespace

SimulationResult simulate_toolpath(const GcodeProgram& program, const MachineConfig& cfg, int width, int height) {
    cfg.validate();
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "simulation grid must be at least 1x1");

    SimulationResult result{RemovalMap(width, height), {}};
    Point3 pos{0.0, 0.0, cfg.safe_z};
    bool motion_known = false;
    const double depth = cfg.cut_z + kDepthTolerance;

    for (const auto& line : program.lines) {
        for (const auto& w : line.words)
            if (w.letter == 'G' && (w.value == 0 || w.value == 1)) motion_known = true;

        const auto x = line.get('X');
        const auto y = line.get('Y');
        const auto z = line.get('Z');
        if (!x && !y && !z) continue;
        if (!motion_known)
            throw Error(ErrorCode::MissingWord,
                        "line " + std::to_string(line.source_line) + ": motion without an active G0/G1 mode",
                        line.source_line);

        const Point3 target{x.value_or(pos.x), y.value_or(pos.y), z.value_or(pos.z)};
        if (target.z < cfg.cut_z - kDepthTolerance)
            throw Error(ErrorCode::MotionBelowCutDepth,
                        "line " + std::to_string(line.source_line) + ": Z" + std::to_string(target.z) +
                            " is below cut depth " + std::to_string(cfg.cut_z),
                        line.source_line);

        const bool moves_xy = target.x != pos.x || target.y != pos.y;
        auto partially_engaged = [&](double zz) { return zz > depth && zz < -kDepthTolerance; };
        if (moves_xy && (partially_engaged(pos.z) || partially_engaged(target.z)))
            result.warnings.push_back("line " + std::to_string(line.source_line) +
                                      ": XY move with the tool partly engaged above cut depth (gouge)");

        // Portion of the move, in path parameter t, spent at or below cut depth.
        double t0 = 0.0;
        double t1 = 1.0;
        const bool start_deep = pos.z <= depth;
        const bool end_deep = target.z <= depth;
        bool engaged = start_deep || end_deep;
        if (engaged && start_deep != end_deep) {
            const double t_cross = (depth - pos.z) / (target.z - pos.z);
            if (start_deep) t1 = t_cross;
            else t0 = t_cross;
        }
        if (engaged) {
            auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
            sweep(result.removed, cfg, lerp(pos.x, target.x, t0), lerp(pos.y, target.y, t0),
                  lerp(pos.x, target.x, t1), lerp(pos.y, target.y, t1));
        }
        pos = target;
    }
    return result;
}

} // namespace agarseg
