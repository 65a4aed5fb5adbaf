#include "mudseg/service.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "mudseg/archive.hpp"
#include "mudseg/error.hpp"
#include "mudseg/overlay.hpp"
#include "mudseg/resample.hpp"

namespace mudseg {

using json = nlohmann::ordered_json;

namespace {

ServiceResponse json_reply(int status, const json& body) {
    ServiceResponse r;
    r.status = status;
    r.body = body.dump();
    return r;
}

ServiceResponse error_reply(int status, const std::string& message) { return json_reply(status, {{"error", message}}); }

ServiceResponse png_reply(Bytes png, std::uint64_t revision) {
    ServiceResponse r;
    r.content_type = "image/png";
    r.body.assign(png.begin(), png.end());
    r.headers[kRevisionHeader] = std::to_string(revision);
    return r;
}

std::optional<std::uint64_t> parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
    return v;
}

std::pair<int, int> preview_dims(int w, int h, int max_side) {
    const int side = std::max(w, h);
    if (side <= max_side) return {w, h};
    const double f = static_cast<double>(max_side) / side;
    return {std::max(1, static_cast<int>(std::lround(w * f))), std::max(1, static_cast<int>(std::lround(h * f)))};
}

RgbaImage resize_nearest(const RgbaImage& img, int out_w, int out_h) {
    RgbaImage out{out_w, out_h, std::vector<std::uint8_t>(static_cast<std::size_t>(out_w) * out_h * 4)};
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const int iy = std::min(img.height - 1, static_cast<int>(std::floor((y + 0.5) * sy)));
        for (int x = 0; x < out_w; ++x) {
            const int ix = std::min(img.width - 1, static_cast<int>(std::floor((x + 0.5) * sx)));
            const auto* src = &img.samples[(static_cast<std::size_t>(iy) * img.width + ix) * 4];
            std::copy(src, src + 4, &out.samples[(static_cast<std::size_t>(y) * out_w + x) * 4]);
        }
    }
    return out;
}

json stats_json(const PipelineResult& result) {
    const double total = static_cast<double>(result.mask.size());
    std::array<std::uint64_t, kNumClasses> pixels{};
    for (auto v : result.mask.samples()) ++pixels[v];
    json fractions = json::object();
    json counts = json::object();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const char* name = class_name(static_cast<ClassCode>(c));
        fractions[name] = static_cast<double>(pixels[c]) / total;
    }
    json ecd = json::array();
    for (const auto& cs : result.stats) {
        counts[class_name(cs.cls)] = cs.components.size();
        if (cs.cls == ClassCode::Silt) {
            for (const auto& comp : cs.components) ecd.push_back(comp.ecd_um);
        }
    }
    return {{"fractions", fractions}, {"component_counts", counts}, {"silt_ecd_um", ecd}};
}

const std::array<std::string, 7> kStages{"smoothed", "enhanced", "thresholded", "pores", "silt", "overlay", "mask"};

}  // namespace

TuningService::TuningService(ServiceConfig config) : config_(config) {
    if (config_.max_sessions < 1 || config_.revisions_kept < 1 || config_.preview_max_side < 1) {
        throw InvalidArgument("service limits must be >= 1");
    }
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string TuningService::new_id() {
    // Opaque token: counter mixed with a per-process salt through splitmix.
    std::uint64_t z = id_salt_ + 0x9e3779b97f4a7c15ULL * ++id_counter_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << z;
    return os.str();
}

std::shared_ptr<TuningService::Session> TuningService::find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    lru_.splice(lru_.begin(), lru_, it->second.second);
    return it->second.first;
}

std::size_t TuningService::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

ServiceResponse TuningService::create_session(std::span<const std::uint8_t> image_bytes, const std::string& meta_json) {
    auto session = std::make_shared<Session>();
    try {
        session->meta = parse_meta(meta_json);
        if (session->meta.source_id.empty()) session->meta.source_id = "session";
        auto raster = decode_gray8(image_bytes);
        session->image = GrayImage(raster.width(), raster.height(), std::vector<std::uint8_t>(raster.vector()),
                                   session->meta.hfw_um / raster.width());
    } catch (const Error& e) {
        return error_reply(400, e.what());
    }

    std::array<std::uint64_t, 256> histogram{};
    for (auto v : session->image.samples()) ++histogram[v];

    {
        std::lock_guard lock(mutex_);
        session->id = new_id();
        lru_.push_front(session->id);
        sessions_.emplace(session->id, std::make_pair(session, lru_.begin()));
        while (sessions_.size() > config_.max_sessions) {
            sessions_.erase(lru_.back());
            lru_.pop_back();
        }
    }
    json body{{"id", session->id},
              {"source_id", session->meta.source_id},
              {"width", session->image.width()},
              {"height", session->image.height()},
              {"pitch_um", *session->image.pitch_um()},
              {"histogram", histogram}};
    return json_reply(201, body);
}

ServiceResponse TuningService::update_params(const std::string& id, const std::string& params_json) {
    auto session = find(id);
    if (!session) return error_reply(404, "unknown session");
    PipelineParams params;
    try {
        params = params_from_json(params_json);
    } catch (const Error& e) {
        return error_reply(422, e.what());
    }

    std::lock_guard lock(session->mutex);
    auto rev = std::make_shared<Revision>();
    rev->params = params;
    try {
        rev->result = run_pipeline(session->image, session->meta, params);
    } catch (const Error& e) {
        return error_reply(422, e.what());
    }
    rev->number = ++session->revision;
    session->revisions.push_back(rev);
    while (session->revisions.size() > config_.revisions_kept) session->revisions.pop_front();

    const std::string base = "/sessions/" + id + "/stages/" + std::to_string(rev->number) + "/";
    json stage_urls = json::object();
    for (const char* stage : {"smoothed", "enhanced", "thresholded"}) {
        json per_scale = json::array();
        for (std::size_t k = 0; k < params.scales.size(); ++k) {
            per_scale.push_back(base + stage + "?scale=" + std::to_string(k));
        }
        stage_urls[stage] = per_scale;
    }
    for (const char* stage : {"pores", "silt", "overlay", "mask"}) stage_urls[stage] = base + stage;

    json body{{"revision", rev->number},
              {"params", json::parse(params_to_json(params))},
              {"stats", stats_json(rev->result)},
              {"overlay_url", base + "overlay"},
              {"stage_urls", stage_urls}};
    auto reply = json_reply(200, body);
    reply.headers[kRevisionHeader] = std::to_string(rev->number);
    return reply;
}

ServiceResponse TuningService::get_stage(const std::string& id, const std::string& revision, const std::string& stage,
                                         std::optional<std::string> scale, bool full) {
    auto session = find(id);
    if (!session) return error_reply(404, "unknown session");
    if (std::find(kStages.begin(), kStages.end(), stage) == kStages.end()) {
        return error_reply(404, "unknown stage '" + stage + "'");
    }
    const auto number = parse_u64(revision);
    if (!number) return error_reply(404, "unknown revision '" + revision + "'");

    std::shared_ptr<const Revision> rev;
    {
        std::lock_guard lock(session->mutex);
        if (*number < 1 || *number > session->revision) return error_reply(404, "unknown revision " + revision);
        for (const auto& r : session->revisions) {
            if (r->number == *number) rev = r;
        }
        if (!rev) return error_reply(409, "revision " + revision + " has been superseded and evicted");
    }

    const auto& trace = rev->result.trace;
    std::size_t k = 0;
    if (scale) {
        const auto parsed = parse_u64(*scale);
        if (!parsed) return error_reply(404, "bad scale index '" + *scale + "'");
        k = *parsed;
    }
    const bool per_scale = stage == "smoothed" || stage == "enhanced" || stage == "thresholded";
    if (per_scale && k >= trace.scales.size()) return error_reply(404, "scale index out of range");

    const int w = session->image.width();
    const int h = session->image.height();
    const auto [pw, ph] = full ? std::pair{w, h} : preview_dims(w, h, config_.preview_max_side);
    const bool shrink = pw != w || ph != h;

    if (stage == "overlay") {
        auto rgba = overlay(session->image, rev->result.mask);
        if (shrink) rgba = resize_nearest(rgba, pw, ph);
        return png_reply(encode_png(rgba), rev->number);
    }
    Raster<std::uint8_t> img;
    if (stage == "smoothed") {
        img = trace.scales[k].smoothed;
    } else if (stage == "enhanced") {
        img = trace.scales[k].enhanced;
    } else if (stage == "thresholded") {
        img = binary_to_gray(trace.scales[k].thresholded);
    } else if (stage == "pores") {
        img = binary_to_gray(trace.pores);
    } else if (stage == "silt") {
        img = binary_to_gray(trace.silt);
    } else {
        img = rev->result.mask;
    }
    if (shrink) img = mudseg::resize_nearest(img, pw, ph);
    return png_reply(encode_png(img), rev->number);
}

ServiceResponse TuningService::export_session(const std::string& id) {
    auto session = find(id);
    if (!session) return error_reply(404, "unknown session");
    std::shared_ptr<const Revision> rev;
    {
        std::lock_guard lock(session->mutex);
        if (session->revisions.empty()) return error_reply(409, "no parameters applied yet");
        rev = session->revisions.back();
    }
    const std::string params = params_to_json(rev->params);
    const std::string stats = stats_to_csv(rev->result.stats);
    std::vector<ArchiveEntry> entries{
        {"mask.png", encode_png(rev->result.mask)},
        {"params.json", Bytes(params.begin(), params.end())},
        {"stats.csv", Bytes(stats.begin(), stats.end())},
    };
    const auto tar = write_tar(entries);
    ServiceResponse r;
    r.content_type = "application/x-tar";
    r.body.assign(tar.begin(), tar.end());
    r.headers[kRevisionHeader] = std::to_string(rev->number);
    r.headers["Content-Disposition"] = "attachment; filename=\"" + session->meta.source_id + "_r" +
                                       std::to_string(rev->number) + ".tar\"";
    return r;
}

ServiceResponse TuningService::delete_session(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return error_reply(404, "unknown session");
    lru_.erase(it->second.second);
    sessions_.erase(it);
    ServiceResponse r;
    r.status = 204;
    r.content_type.clear();
    return r;
}

// --- HTTP layer ---

struct HttpServer::Impl {
    TuningService& service;
    httplib::Server server;
    explicit Impl(TuningService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    if (!r.content_type.empty()) res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(TuningService& service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;
    srv.set_payload_max_length(256u << 20);
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Expose-Headers", std::string(kRevisionHeader) + ", Content-Disposition"}});
    srv.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    srv.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("image") || !req.has_file("meta")) {
            send(res, error_reply(400, "multipart fields 'image' and 'meta' are required"));
            return;
        }
        const auto image = req.get_file_value("image").content;
        const auto meta = req.get_file_value("meta").content;
        send(res, svc.create_session(std::span(reinterpret_cast<const std::uint8_t*>(image.data()), image.size()), meta));
    });
    srv.Put(R"(/sessions/([^/]+)/params)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.update_params(req.matches[1], req.body));
    });
    srv.Get(R"(/sessions/([^/]+)/stages/([^/]+)/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> scale;
        if (req.has_param("scale")) scale = req.get_param_value("scale");
        const auto full = req.has_param("full") && req.get_param_value("full") == "true";
        send(res, svc.get_stage(req.matches[1], req.matches[2], req.matches[3], scale, full));
    });
    srv.Get(R"(/sessions/([^/]+)/export)", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.export_session(req.matches[1]));
    });
    srv.Delete(R"(/sessions/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc.delete_session(req.matches[1]));
    });
    if (static_dir && !srv.set_mount_point("/", static_dir->string())) {
        throw InvalidArgument("static directory not found: " + static_dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw IoError("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::pair<std::string, int> parse_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("address must be host:port, got '" + addr + "'");
    std::string host = addr.substr(0, colon);
    if (host.empty()) host = "127.0.0.1";
    const auto port = parse_u64(addr.substr(colon + 1));
    if (!port || *port > 65535) throw InvalidArgument("invalid port in '" + addr + "'");
    return {host, static_cast<int>(*port)};
}

}  // namespace mudseg
