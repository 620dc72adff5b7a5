#include <agarseg/segmentation.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

extern char** environ;

namespace agarseg {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

/// Runs `command exchange_dir`, killing it once `timeout` elapses.
void run_worker(const ExternalBackend& cfg) {
    const std::string program = cfg.command.string();
    const std::string arg = cfg.exchange_dir.string();
    std::vector<char*> argv = {const_cast<char*>(program.c_str()), const_cast<char*>(arg.c_str()), nullptr};

    pid_t pid = 0;
    if (const int rc = posix_spawn(&pid, program.c_str(), nullptr, nullptr, argv.data(), environ); rc != 0)
        throw Error(ErrorCode::WorkerFailure, "cannot start worker " + program + ": " + std::strerror(rc));

    const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
    int status = 0;
    for (;;) {
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw Error(ErrorCode::WorkerFailure, "waitpid failed for worker " + program);
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            throw Error(ErrorCode::WorkerTimeout,
                        "worker " + program + " timed out after " + std::to_string(cfg.timeout.count()) + " ms");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        const std::string how = WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status))
                                                  : "signal " + std::to_string(WTERMSIG(status));
        throw Error(ErrorCode::WorkerFailure, "worker " + program + " failed with " + how);
    }
}

} // namespace

SegmentationResult segment_external(const RasterImage& img, const PromptSet& prompts, const ExternalBackend& cfg) {
    if (cfg.exchange_dir.empty()) throw Error(ErrorCode::InvalidArgument, "external backend needs an exchange_dir");
    if (cfg.command.empty()) throw Error(ErrorCode::InvalidArgument, "external backend needs a worker command");

    std::error_code ec;
    std::filesystem::create_directories(cfg.exchange_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create exchange_dir " + cfg.exchange_dir.string());
    const auto response_path = cfg.exchange_dir / "proposals.json";
    std::filesystem::remove(response_path, ec);

    save_image(cfg.exchange_dir / "input.png", img);
    write_text(cfg.exchange_dir / "prompts.json", prompts_to_json(prompts.kept));

    run_worker(cfg);

    std::ifstream in(response_path);
    if (!in) throw Error(ErrorCode::MalformedResponse, "worker produced no proposals.json");
    std::stringstream buf;
    buf << in.rdbuf();

    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedResponse, std::string("proposals.json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("proposals") || !doc["proposals"].is_array())
        throw Error(ErrorCode::MalformedResponse, "proposals.json: expected {\"proposals\": [...]}");

    SegmentationResult result;
    result.width = img.width();
    result.height = img.height();
    for (const auto& item : doc["proposals"]) {
        if (!item.is_object() || !item.contains("mask") || !item["mask"].is_string() || !item.contains("score") ||
            !item["score"].is_number())
            throw Error(ErrorCode::MalformedResponse, "proposals.json: each proposal needs a mask path and a score");
        const double score = item["score"].get<double>();
        if (!std::isfinite(score)) throw Error(ErrorCode::MalformedResponse, "proposals.json: non-finite score");

        BinaryMask mask;
        try {
            mask = load_mask(cfg.exchange_dir / item["mask"].get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedResponse, std::string("proposals.json: ") + e.what());
        }
        if (!mask.same_shape(img))
            throw Error(ErrorCode::DimensionMismatch,
                        "worker mask " + item["mask"].get<std::string>() + " is " + std::to_string(mask.width()) +
                            "x" + std::to_string(mask.height()) + ", image is " + std::to_string(img.width()) + "x" +
                            std::to_string(img.height()));

        RegionProposal proposal;
        proposal.mask = std::move(mask);
        proposal.confidence = std::clamp(score, 0.0, 1.0);
        proposal.backend_id = "external";
        result.proposals.push_back(std::move(proposal));
    }

    sort_proposals(result.proposals);
    result.final_mask = select_final_mask(result, SelectionConfig{});
    return result;
}

} // namespace agarseg
