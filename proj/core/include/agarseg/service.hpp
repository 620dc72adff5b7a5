#pragma once

#include <agarseg/evaluation.hpp>
#include <agarseg/gcode.hpp>
#include <agarseg/pipeline.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agarseg {

/// In-memory refinement sessions, optionally mirrored to a directory
/// (image.png + session.json per session) and reloaded on construction.
class SessionStore {
  public:
    explicit SessionStore(std::optional<std::filesystem::path> persist_dir = std::nullopt);
    ~SessionStore();

    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    struct Created {
        std::string id;
        SegmentationResult result;
    };

    struct Update {
        SegmentationResult result;
        /// Retained pixel count after minus before.
        long long delta = 0;
        /// Position of the affected operator prompt in the history.
        std::size_t index = 0;
    };

    struct Export {
        std::string gcode;
        double cut_mm = 0.0;
        double rapid_mm = 0.0;
        /// Counted by the simulator, not the planner.
        std::size_t removed_cells = 0;
        bool verified = false;
        Toolpath toolpath;
    };

    Created create(std::span<const std::uint8_t> png, const PipelineConfig& cfg);
    Update apply_prompt(const std::string& id, int x, int y, PromptLabel label);
    Update delete_prompt(const std::string& id, std::size_t index);
    Export export_gcode(const std::string& id, const MachineConfig& machine, bool optimize);

    void set_truth(const std::string& id, BinaryMask truth);
    EvalReport evaluate(const std::string& id, const std::optional<BinaryMask>& truth = std::nullopt);

    BinaryMask final_mask(const std::string& id) const;
    SegmentationResult latest_result(const std::string& id) const;
    std::vector<PromptPoint> prompt_history(const std::string& id) const;
    RasterImage image(const std::string& id) const;
    bool contains(const std::string& id) const;
    std::size_t size() const;

  private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    void persist(const Session& s) const;
    void reload();

    std::optional<std::filesystem::path> persist_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct ServerOptions {
    std::optional<std::filesystem::path> static_dir;
};

/// HTTP+JSON facade over a SessionStore.
class Server {
  public:
    Server(SessionStore& store, ServerOptions options = {});
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Blocks until stop().
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it; follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace agarseg
