#include <agarseg/service.hpp>

#include <httplib.h>
#include <json.hpp>

namespace agarseg {

using nlohmann::json;
using nlohmann::ordered_json;

struct Server::Impl {
    SessionStore& store;
    httplib::Server http;

    explicit Impl(SessionStore& s) : store(s) {}
};

namespace {

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::WorkerTimeout: return 504;
    case ErrorCode::WorkerFailure:
    case ErrorCode::MalformedResponse: return 502;
    case ErrorCode::IoError: return 500;
    default: return 400;
    }
}

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
    ordered_json body = {{"code", to_string(e.code())}, {"message", e.what()}};
    if (e.line()) body["line"] = *e.line();
    send_json(res, body, status_for(e.code()));
}

std::string mask_png(const BinaryMask& mask) {
    const auto bytes = encode_png(binarize(mask));
    return std::string(bytes.begin(), bytes.end());
}

ordered_json result_json(const SegmentationResult& r) {
    ordered_json proposals = ordered_json::array();
    for (const auto& p : r.proposals)
        proposals.push_back({{"confidence", p.confidence},
                             {"backend", p.backend_id},
                             {"pixels", p.mask.count()},
                             {"seed_prompts", p.seed_prompts}});
    return {{"mask_png_b64", httplib::detail::base64_encode(mask_png(r.final_mask))},
            {"retained_pixels", r.final_mask.count()},
            {"proposals", proposals},
            {"warnings", r.warnings}};
}

json parse_body(const httplib::Request& req) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object())
        throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    return body;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// PNG payload from a multipart field or, failing that, the raw body.
std::string png_payload(const httplib::Request& req, const char* field) {
    if (req.is_multipart_form_data()) {
        if (!req.has_file(field))
            throw Error(ErrorCode::InvalidArgument, std::string("multipart field \"") + field + "\" is missing");
        return req.get_file_value(field).content;
    }
    return req.body;
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const json::exception& e) {
            send_error(res, Error(ErrorCode::ParseError, e.what()));
        } catch (const std::exception& e) {
            send_json(res, {{"code", "internal"}, {"message", e.what()}}, 500);
        }
    };
}

const char* kind_name(SegmentKind k) {
    switch (k) {
    case SegmentKind::Rapid: return "rapid";
    case SegmentKind::Cut: return "cut";
    case SegmentKind::Plunge: return "plunge";
    case SegmentKind::Retract: return "retract";
    }
    return "?";
}

void install_routes(httplib::Server& http, SessionStore& store) {
    http.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, {{"status", "ok"}});
    }));

    http.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        PipelineConfig cfg;
        if (req.is_multipart_form_data() && req.has_file("config"))
            cfg = config_from_json(req.get_file_value("config").content);
        else if (req.has_param("config"))
            cfg = config_from_json(req.get_param_value("config"));
        const std::string png = png_payload(req, "image");
        const auto created = store.create(as_bytes(png), cfg);
        const RasterImage img = store.image(created.id);
        ordered_json body = {{"id", created.id}, {"width", img.width()}, {"height", img.height()}};
        body.update(result_json(created.result));
        send_json(res, body, 201);
    }));

    http.Get(R"(/sessions/([0-9a-f]+)/prompts)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send_json(res, ordered_json::parse(prompts_to_json(store.prompt_history(req.matches[1]))));
    }));

    http.Post(R"(/sessions/([0-9a-f]+)/prompts)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const auto update = store.apply_prompt(req.matches[1], body.at("x").get<int>(), body.at("y").get<int>(),
                                               parse_prompt_label(body.at("label").get<std::string>()));
        ordered_json out = {{"delta", update.delta}, {"index", update.index}};
        out.update(result_json(update.result));
        send_json(res, out);
    }));

    http.Delete(R"(/sessions/([0-9a-f]+)/prompts/(\d+))",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const auto update = store.delete_prompt(req.matches[1], std::stoul(req.matches[2]));
                    ordered_json out = {{"delta", update.delta}, {"index", update.index}};
                    out.update(result_json(update.result));
                    send_json(res, out);
                }));

    http.Get(R"(/sessions/([0-9a-f]+)/mask.png)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        res.set_content(mask_png(store.final_mask(req.matches[1])), "image/png");
    }));

    http.Post(R"(/sessions/([0-9a-f]+)/gcode)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        json body = req.body.empty() ? json::object() : parse_body(req);
        bool optimize = false;
        if (body.contains("optimize")) {
            optimize = body.at("optimize").get<bool>();
            body.erase("optimize");
        }
        const MachineConfig machine = machine_from_json(body.dump());
        const auto exp = store.export_gcode(req.matches[1], machine, optimize);
        ordered_json segments = ordered_json::array();
        for (const auto& s : exp.toolpath.segments)
            segments.push_back({{"kind", kind_name(s.kind)},
                                {"from", {s.from.x, s.from.y, s.from.z}},
                                {"to", {s.to.x, s.to.y, s.to.z}}});
        send_json(res, {{"gcode", exp.gcode},
                        {"cut_mm", exp.cut_mm},
                        {"rapid_mm", exp.rapid_mm},
                        {"removed_cells", exp.removed_cells},
                        {"verified", exp.verified},
                        {"segments", segments}});
    }));

    http.Post(R"(/sessions/([0-9a-f]+)/truth)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        const std::string png = png_payload(req, "truth");
        store.set_truth(req.matches[1], mask_from_image(decode_png(as_bytes(png))));
        send_json(res, {{"ok", true}});
    }));

    http.Get(R"(/sessions/([0-9a-f]+)/evaluation)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
                 std::optional<BinaryMask> truth;
                 if (req.has_param("truth")) truth = load_mask(req.get_param_value("truth"));
                 res.set_content(report_to_json(store.evaluate(req.matches[1], truth)), "application/json");
             }));
}

} // namespace

Server::Server(SessionStore& store, ServerOptions options) : impl_(std::make_unique<Impl>(store)) {
    install_routes(impl_->http, store);
    if (options.static_dir && !impl_->http.set_mount_point("/", options.static_dir->string()))
        throw Error(ErrorCode::FileNotFound, "static directory not found: " + options.static_dir->string());
}

Server::~Server() { stop(); }

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }
int Server::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }
bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }
void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Server::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

} // namespace agarseg
