#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "mudseg/image_io.hpp"
#include "mudseg/pipeline.hpp"

namespace mudseg {

struct ServiceConfig {
    std::size_t max_sessions = 8;
    std::size_t revisions_kept = 2;
    int preview_max_side = 1024;
};

/// Transport-neutral reply; the HTTP layer copies it verbatim.
struct ServiceResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

inline constexpr const char* kRevisionHeader = "X-Mudseg-Revision";

/// Session store behind the tuning API. Sessions are independent; calls on one session are
/// serialized by its own mutex, so a params update and a stage fetch never interleave.
class TuningService {
public:
    explicit TuningService(ServiceConfig config = {});

    ServiceResponse create_session(std::span<const std::uint8_t> image_bytes, const std::string& meta_json);
    ServiceResponse update_params(const std::string& id, const std::string& params_json);
    /// `scale` selects the per-scale trace for smoothed/enhanced/thresholded (default 0).
    ServiceResponse get_stage(const std::string& id, const std::string& revision, const std::string& stage,
                              std::optional<std::string> scale, bool full);
    ServiceResponse export_session(const std::string& id);
    ServiceResponse delete_session(const std::string& id);

    [[nodiscard]] std::size_t session_count() const;

private:
    struct Revision {
        std::uint64_t number = 0;
        PipelineParams params;
        PipelineResult result;
    };
    struct Session {
        std::mutex mutex;
        std::string id;
        GrayImage image;
        ImageMeta meta;
        std::uint64_t revision = 0;
        std::list<std::shared_ptr<const Revision>> revisions;  ///< newest last
    };

    std::shared_ptr<Session> find(const std::string& id);
    std::string new_id();

    ServiceConfig config_;
    mutable std::mutex mutex_;
    std::list<std::string> lru_;  ///< most recent first
    std::unordered_map<std::string, std::pair<std::shared_ptr<Session>, std::list<std::string>::iterator>> sessions_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_;
};

/// HTTP front end (cpp-httplib). Routes:
///   POST   /sessions                                  multipart: image, meta
///   PUT    /sessions/{id}/params
///   GET    /sessions/{id}/stages/{rev}/{stage}?scale=k&full=bool
///   GET    /sessions/{id}/export                      ustar: mask.png, params.json, stats.csv
///   DELETE /sessions/{id}
class HttpServer {
public:
    HttpServer(TuningService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Returns the bound port; port 0 picks a free one. Throws on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Parses "host:port" or ":port"; throws InvalidArgument.
std::pair<std::string, int> parse_address(const std::string& addr);

}  // namespace mudseg
