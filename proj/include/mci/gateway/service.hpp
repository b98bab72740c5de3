#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mci/agent/agent.hpp"
#include "mci/agent/llm_client.hpp"
#include "mci/agent/session.hpp"

namespace mci::gateway {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path checkpoint;
    std::filesystem::path artifact_dir = "artifacts";
    std::filesystem::path journal_dir = "sessions";
    double session_ttl_s = 3600;
    double step_timeout_s = 60;
    std::string cors_origin = "*";
    agent::LlmSettings llm;

    void validate() const;
    static ServiceConfig load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

/// HTTP front door. Routes:
///   POST /api/sessions                 -> {session_id}
///   POST /api/sessions/{id}/pair       multipart t1, t2 [, resolution_m_per_px] -> {pair_ref}
///   POST /api/sessions/{id}/messages   {text} -> {reply, artifacts}
///   GET  /api/artifacts/{ref}          -> bytes
///   GET  /api/health                   -> {status, checkpoint_id}
class Service {
public:
    /// Loads the checkpoint and builds the LLM client from the config.
    explicit Service(const ServiceConfig& config);
    /// Injected model and LLM, for tests.
    Service(const ServiceConfig& config, std::shared_ptr<agent::ModelHandle> model,
            std::unique_ptr<agent::LlmClient> llm, agent::Clock clock = agent::system_clock());
    ~Service();

    httplib::Server& server() { return server_; }
    agent::SessionManager& sessions() { return sessions_; }
    agent::ArtifactStore& store() { return store_; }

    /// Blocks until stop().
    bool listen();
    int bind_to_any_port();
    bool listen_after_bind();
    void stop();

private:
    void routes();

    ServiceConfig config_;
    std::shared_ptr<agent::ModelHandle> model_;
    std::unique_ptr<agent::LlmClient> llm_;
    agent::ArtifactStore store_;
    agent::SessionManager sessions_;
    agent::Agent agent_;
    httplib::Server server_;
};

std::shared_ptr<agent::ModelHandle> load_model(const std::filesystem::path& checkpoint);

}  // namespace mci::gateway
