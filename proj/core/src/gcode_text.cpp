#include <agarseg/gcode.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>

namespace agarseg {

std::optional<double> GcodeLine::get(char letter) const {
    for (const auto& w : words)
        if (w.letter == letter) return w.value;
    return std::nullopt;
}

bool GcodeLine::has(char letter, double value) const {
    for (const auto& w : words)
        if (w.letter == letter && w.value == value) return true;
    return false;
}

std::string format_word(const GcodeWord& word) {
    char buf[400];
    switch (word.letter) {
    case 'G':
    case 'M':
    case 'S':
        std::snprintf(buf, sizeof buf, "%c%lld", word.letter, std::llround(word.value));
        return buf;
    case 'F': {
        std::snprintf(buf, sizeof buf, "%.3f", word.value);
        std::string num = buf;
        while (num.back() == '0') num.pop_back();
        if (num.back() == '.') num.pop_back();
        return "F" + num;
    }
    default: {
        std::snprintf(buf, sizeof buf, "%.3f", word.value);
        std::string num = buf;
        if (num == "-0.000") num = "0.000";
        return std::string(1, word.letter) + num;
    }
    }
}

std::string GcodeProgram::to_text() const {
    std::string out;
    for (const auto& line : lines) {
        for (std::size_t i = 0; i < line.words.size(); ++i) {
            if (i) out += ' ';
            out += format_word(line.words[i]);
        }
        out += '\n';
    }
    return out;
}

GcodeProgram emit_gcode(const Toolpath& path) {
    const MachineConfig& cfg = path.config;
    GcodeProgram prog;
    auto line = [&](std::initializer_list<GcodeWord> words) {
        prog.lines.push_back({words, static_cast<int>(prog.lines.size()) + 1});
    };

    line({{'G', 21}});
    line({{'G', 90}});
    line({{'M', 3}, {'S', double(cfg.spindle_rpm)}});
    line({{'G', 0}, {'Z', cfg.safe_z}});

    std::optional<double> feed;
    auto with_feed = [&](std::vector<GcodeWord> words, double rate) {
        if (feed != rate) {
            words.push_back({'F', rate});
            feed = rate;
        }
        prog.lines.push_back({std::move(words), static_cast<int>(prog.lines.size()) + 1});
    };

    std::size_t count = path.segments.size();
    // The closing rapid home is spelled by the footer.
    if (count > 0) {
        const auto& last = path.segments.back();
        if (last.kind == SegmentKind::Rapid && last.to.x == 0.0 && last.to.y == 0.0) --count;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const auto& s = path.segments[i];
        switch (s.kind) {
        case SegmentKind::Rapid: line({{'G', 0}, {'X', s.to.x}, {'Y', s.to.y}}); break;
        case SegmentKind::Plunge: with_feed({{'G', 1}, {'Z', s.to.z}}, cfg.plunge_rate); break;
        case SegmentKind::Cut: with_feed({{'G', 1}, {'X', s.to.x}, {'Y', s.to.y}}, cfg.feed_rate); break;
        case SegmentKind::Retract: line({{'G', 0}, {'Z', s.to.z}}); break;
        }
    }

    line({{'G', 0}, {'X', 0.0}, {'Y', 0.0}});
    line({{'M', 5}});
    return prog;
}

namespace {

constexpr double kMaxSpindle = 2147483647.0;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

/// [+-]? (digits [. digits*] | . digits)
std::optional<double> parse_number(std::string_view text, std::size_t& pos) {
    const std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos, ++digits;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos, ++digits;
    }
    if (digits == 0) return std::nullopt;

    std::string_view token = text.substr(start, pos - start);
    if (token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || end != token.data() + token.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

std::string word_text(char letter, double value) {
    return format_word({letter, value});
}

} // namespace

GcodeProgram parse_gcode(std::string_view text) {
    GcodeProgram prog;
    bool motion_active = false;

    int line_no = 0;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        const std::string_view raw = text.substr(line_start, line_end - line_start);
        ++line_no;
        const bool last = line_end == text.size();
        line_start = line_end + 1;
        if (last && raw.empty()) break;

        auto fail = [&](ErrorCode code, const std::string& msg) -> Error {
            return Error(code, "line " + std::to_string(line_no) + ": " + msg, line_no);
        };

        GcodeLine line;
        line.source_line = line_no;
        std::size_t pos = 0;
        while (pos < raw.size()) {
            const char c = raw[pos];
            if (is_space(c)) {
                ++pos;
                continue;
            }
            if (c == ';') break;
            if (c == '(') {
                const auto close = raw.find(')', pos);
                if (close == std::string_view::npos) throw fail(ErrorCode::ParseError, "unterminated comment");
                pos = close + 1;
                continue;
            }
            const char letter = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
            if (letter < 'A' || letter > 'Z') {
                char buf[8];
                std::snprintf(buf, sizeof buf, "0x%02X", static_cast<unsigned char>(c));
                throw fail(ErrorCode::ParseError, std::string("unexpected character ") + buf);
            }
            ++pos;
            const auto value = parse_number(raw, pos);
            if (!value) throw fail(ErrorCode::MalformedNumber, std::string("malformed number after '") + letter + "'");
            if (pos < raw.size() && !is_space(raw[pos]) && raw[pos] != ';' && raw[pos] != '(' &&
                !((raw[pos] >= 'A' && raw[pos] <= 'Z') || (raw[pos] >= 'a' && raw[pos] <= 'z')))
                throw fail(ErrorCode::MalformedNumber, std::string("malformed number after '") + letter + "'");

            switch (letter) {
            case 'G':
                if (*value != 0 && *value != 1 && *value != 21 && *value != 90)
                    throw fail(ErrorCode::UnsupportedCommand, "unsupported command " + word_text('G', *value));
                break;
            case 'M':
                if (*value != 3 && *value != 5)
                    throw fail(ErrorCode::UnsupportedCommand, "unsupported command " + word_text('M', *value));
                break;
            case 'S':
                if (*value < 0 || *value > kMaxSpindle || *value != std::floor(*value))
                    throw fail(ErrorCode::MalformedNumber, "spindle speed must be an integer in [0, 2147483647]");
                break;
            case 'X':
            case 'Y':
            case 'Z':
            case 'F': break;
            default:
                throw fail(ErrorCode::UnsupportedCommand, std::string("unsupported word '") + letter + "'");
            }
            if (letter != 'G' && letter != 'M' && line.get(letter))
                throw fail(ErrorCode::ParseError, std::string("duplicate '") + letter + "' word");
            line.words.push_back({letter, *value});
        }
        if (line.words.empty()) continue;

        int motions = 0;
        for (const auto& w : line.words) motions += (w.letter == 'G' && (w.value == 0 || w.value == 1)) ? 1 : 0;
        if (motions > 1) throw fail(ErrorCode::ParseError, "more than one motion command");
        if (motions == 1) motion_active = true;
        if (line.has('M', 3) && !line.get('S')) throw fail(ErrorCode::MissingWord, "M3 requires an S word");
        if ((line.get('X') || line.get('Y') || line.get('Z')) && !motion_active)
            throw fail(ErrorCode::MissingWord, "axis words with no active G0/G1 motion mode");
        // Anything below 0.001 would print as F0.
        if (const auto f = line.get('F'); f && *f < 0.001)
            throw fail(ErrorCode::MalformedNumber, "feed must be >= 0.001");

        prog.lines.push_back(std::move(line));
    }
    return prog;
}

} // namespace agarseg
