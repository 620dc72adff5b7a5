#pragma once

#include <agarseg/image.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agarseg {

struct MachineConfig {
    double mm_per_pixel = 1.0;
    double safe_z = 2.0;
    double cut_z = -1.0;
    double feed_rate = 300.0;
    double plunge_rate = 100.0;
    int spindle_rpm = 10000;
    /// Defaults to mm_per_pixel.
    std::optional<double> tool_diameter;

    double effective_tool_diameter() const { return tool_diameter.value_or(mm_per_pixel); }
    void validate() const;
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

enum class SegmentKind { Rapid, Cut, Plunge, Retract };

struct ToolpathSegment {
    SegmentKind kind = SegmentKind::Rapid;
    Point3 from;
    Point3 to;
};

struct Toolpath {
    std::vector<ToolpathSegment> segments;
    MachineConfig config;

    double rapid_xy_length() const;
    double cut_length() const;
    std::size_t cut_count() const;
};

/// One horizontal cut at cut depth, in cutting order.
struct CutRun {
    double y = 0.0;
    double x_start = 0.0;
    double x_end = 0.0;
};

/// Zig-zag raster over the black (0,0,0) pixels of a two-colour image.
/// x_mm = col * mm_per_pixel, y_mm = (height - 1 - row) * mm_per_pixel.
Toolpath plan_toolpath(const RasterImage& binary, const MachineConfig& cfg);

/// Builds the canonical segment chain for runs cut in the given order,
/// starting and ending at (0, 0, safe_z).
Toolpath toolpath_from_runs(const std::vector<CutRun>& runs, const MachineConfig& cfg);
std::vector<CutRun> extract_runs(const Toolpath& path);

/// Greedy nearest-endpoint reordering of cut runs; never returns a path
/// with more rapid travel than its input.
Toolpath optimize_travel(const Toolpath& path);

// ---------------------------------------------------------------------------
// G-code text

struct GcodeWord {
    char letter = 'G';
    double value = 0.0;

    friend bool operator==(const GcodeWord&, const GcodeWord&) = default;
};

struct GcodeLine {
    std::vector<GcodeWord> words;
    int source_line = 0;

    std::optional<double> get(char letter) const;
    bool has(char letter, double value) const;
};

struct GcodeProgram {
    std::vector<GcodeLine> lines;

    /// Canonical form: uppercase words, single spaces, X/Y/Z with 3
    /// decimals, F with at most 3 decimals, integer G/M/S, LF endings.
    std::string to_text() const;
};

std::string format_word(const GcodeWord& word);

GcodeProgram emit_gcode(const Toolpath& path);
GcodeProgram parse_gcode(std::string_view text);

// ---------------------------------------------------------------------------
// Simulation

struct RemovalMap : BinaryMask {
    using BinaryMask::BinaryMask;
};

struct SimulationResult {
    RemovalMap removed;
    std::vector<std::string> warnings;
};

/// Replays the program and marks every cell whose centre lies within
/// tool_diameter / 2 of the tool path while the tool is at or below cut_z.
SimulationResult simulate_toolpath(const GcodeProgram& program, const MachineConfig& cfg, int width, int height);

/// Black pixels of a two-colour image as a mask (true = to be removed).
BinaryMask removal_target(const RasterImage& binary);

} // namespace agarseg
