#include "mci/gateway/service.hpp"

#include <fstream>

#include "mci/data/png_io.hpp"
#include "mci/nn/backbone.hpp"
#include "mci/nn/checkpoint.hpp"

namespace mci::gateway {

using nlohmann::json;

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw Error("port out of range");
    if (session_ttl_s <= 0) throw Error("session_ttl_s must be positive");
    if (step_timeout_s <= 0) throw Error("step_timeout_s must be positive");
    if (artifact_dir.empty() || journal_dir.empty()) throw Error("artifact_dir and journal_dir are required");
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    ServiceConfig c;
    try {
        c = json::parse(in).get<ServiceConfig>();
    } catch (const json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    // Relative paths are taken from the config file's directory.
    const auto base = path.parent_path();
    for (auto* p : {&c.checkpoint, &c.artifact_dir, &c.journal_dir})
        if (!p->empty() && p->is_relative()) *p = base / *p;
    if (!c.llm.mock.empty() && std::filesystem::path(c.llm.mock).is_relative())
        c.llm.mock = (base / c.llm.mock).string();
    c.llm = agent::LlmSettings::from_env(c.llm);
    c.validate();
    return c;
}

void to_json(json& j, const ServiceConfig& c) {
    j = {{"host", c.host},
         {"port", c.port},
         {"checkpoint", c.checkpoint.string()},
         {"artifact_dir", c.artifact_dir.string()},
         {"journal_dir", c.journal_dir.string()},
         {"session_ttl_s", c.session_ttl_s},
         {"step_timeout_s", c.step_timeout_s},
         {"cors_origin", c.cors_origin},
         {"llm", c.llm}};
}

void from_json(const json& j, ServiceConfig& c) {
    ServiceConfig d;
    c.host = j.value("host", d.host);
    c.port = j.value("port", d.port);
    c.checkpoint = j.value("checkpoint", std::string());
    c.artifact_dir = j.value("artifact_dir", d.artifact_dir.string());
    c.journal_dir = j.value("journal_dir", d.journal_dir.string());
    c.session_ttl_s = j.value("session_ttl_s", d.session_ttl_s);
    c.step_timeout_s = j.value("step_timeout_s", d.step_timeout_s);
    c.cors_origin = j.value("cors_origin", d.cors_origin);
    if (j.contains("llm")) c.llm = j.at("llm").get<agent::LlmSettings>();
}

std::shared_ptr<agent::ModelHandle> load_model(const std::filesystem::path& checkpoint) {
    auto loaded = nn::load_checkpoint(checkpoint);
    auto handle = std::make_shared<agent::ModelHandle>();
    handle->model = loaded.model;
    handle->model->eval();
    handle->vocab = loaded.manifest.vocab;
    handle->checkpoint_id = loaded.id;
    return handle;
}

Service::Service(const ServiceConfig& config)
    : Service(config, load_model(config.checkpoint), agent::make_llm_client(config.llm)) {}

Service::Service(const ServiceConfig& config, std::shared_ptr<agent::ModelHandle> model,
                 std::unique_ptr<agent::LlmClient> llm, agent::Clock clock)
    : config_(config),
      model_(std::move(model)),
      llm_(std::move(llm)),
      store_(config.artifact_dir),
      sessions_(config.journal_dir, config.session_ttl_s, std::move(clock)),
      agent_(*llm_, agent::default_registry(), store_, model_,
             std::chrono::milliseconds(static_cast<std::int64_t>(config.step_timeout_s * 1000))) {
    config_.validate();
    routes();
}

Service::~Service() { stop(); }

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message,
                json extra = json::object()) {
    extra["error"] = kind;
    extra["message"] = message;
    send_json(res, status, extra);
}

}  // namespace

void Service::routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, "internal", what);
    });

    server_.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"checkpoint_id", model_ ? model_->checkpoint_id : ""}});
    });

    server_.Post("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"session_id", sessions_.create()->id()}});
    });

    server_.Post(R"(/api/sessions/([^/]+)/pair)", [this](const httplib::Request& req, httplib::Response& res) {
        auto session = sessions_.get(req.matches[1]);
        if (!session) return send_error(res, 404, "unknown_session", "no such session");
        if (!req.is_multipart_form_data() || !req.has_file("t1") || !req.has_file("t2"))
            return send_error(res, 400, "bad_upload", "expected multipart fields t1 and t2");
        data::RgbImage t1, t2;
        try {
            const auto& f1 = req.get_file_value("t1").content;
            const auto& f2 = req.get_file_value("t2").content;
            t1 = data::decode_png({reinterpret_cast<const std::uint8_t*>(f1.data()), f1.size()});
            t2 = data::decode_png({reinterpret_cast<const std::uint8_t*>(f2.data()), f2.size()});
        } catch (const IoError& e) {
            return send_error(res, 400, "bad_upload", e.what());
        }
        if (t1.height() != t2.height() || t1.width() != t2.width())
            return send_error(res, 400, "bad_upload", "t1 and t2 differ in size");
        try {
            nn::check_divisible_by_32(t1.height(), t1.width());
        } catch (const ShapeError& e) {
            return send_error(res, 400, "bad_upload", e.what());
        }
        double resolution = 0.5;
        if (req.has_file("resolution_m_per_px")) {
            try {
                resolution = std::stod(req.get_file_value("resolution_m_per_px").content);
            } catch (const std::exception&) {
                return send_error(res, 400, "bad_upload", "resolution_m_per_px must be a number");
            }
            if (!(resolution > 0)) return send_error(res, 400, "bad_upload", "resolution_m_per_px must be positive");
        }
        const auto ref = agent::store_pair(store_, t1, t2, resolution);
        session->add_pair(ref);
        send_json(res, 200, {{"pair_ref", ref}});
    });

    server_.Post(R"(/api/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
        auto session = sessions_.get(req.matches[1]);
        if (!session) return send_error(res, 404, "unknown_session", "no such session");
        std::string text;
        try {
            text = json::parse(req.body).at("text").get<std::string>();
        } catch (const json::exception&) {
            return send_error(res, 400, "bad_request", "expected a JSON body {\"text\": string}");
        }
        try {
            send_json(res, 200, agent_.handle(session, text).to_json());
        } catch (const agent::PlanningFailure& e) {
            send_error(res, 422, "planning_failure", e.what(), {{"diagnostics", e.diagnostics()}});
        } catch (const agent::StepFailure& e) {
            send_error(res, 422, "step_failure", e.what(),
                       {{"diagnostics", {{{"step_id", e.step_id()}, {"tool", e.tool()}, {"reason", e.reason()}}}}});
        } catch (const agent::LlmUnavailable& e) {
            send_error(res, 503, "llm_unavailable", e.what());
        }
    });

    server_.Get(R"(/api/artifacts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto art = agent::looks_like_artifact_id(id) ? store_.get(id) : std::nullopt;
        if (!art) return send_error(res, 404, "unknown_artifact", "no such artifact");
        res.status = 200;
        res.set_content(std::string(art->bytes.begin(), art->bytes.end()), agent::mime_type(art->ref.media_type));
    });
}

bool Service::listen() { return server_.listen(config_.host, config_.port); }

int Service::bind_to_any_port() { return server_.bind_to_any_port(config_.host); }

bool Service::listen_after_bind() { return server_.listen_after_bind(); }

void Service::stop() {
    if (server_.is_running()) server_.stop();
}

}  // namespace mci::gateway
