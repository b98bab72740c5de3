#include "mci/agent/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>

namespace mci::agent {

LlmSettings LlmSettings::from_env() { return from_env(LlmSettings{}); }

LlmSettings LlmSettings::from_env(LlmSettings s) {
    auto env = [](const char* name, std::string& out) {
        if (const char* v = std::getenv(name); v && *v) out = v;
    };
    env("CA_LLM_URL", s.url);
    env("CA_LLM_MODEL", s.model);
    env("CA_LLM_KEY", s.key);
    env("CA_LLM_MOCK", s.mock);
    return s;
}

void to_json(nlohmann::json& j, const LlmSettings& s) {
    // The key is never written back out.
    j = {{"url", s.url}, {"model", s.model}, {"mock", s.mock}, {"timeout_s", s.timeout_s}};
}

void from_json(const nlohmann::json& j, LlmSettings& s) {
    s.url = j.value("url", s.url);
    s.model = j.value("model", s.model);
    s.key = j.value("key", s.key);
    s.mock = j.value("mock", s.mock);
    s.timeout_s = j.value("timeout_s", s.timeout_s);
}

HttpLlmClient::HttpLlmClient(LlmSettings settings) : settings_(std::move(settings)) {
    if (settings_.url.empty()) throw Error("no LLM URL configured (set CA_LLM_URL or CA_LLM_MOCK)");
}

std::string HttpLlmClient::complete(const std::vector<ChatMessage>& messages) {
    // Split "scheme://host[:port]" from the path prefix.
    const auto scheme_end = settings_.url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = settings_.url.find('/', host_start);
    const auto origin = settings_.url.substr(0, path_start);
    auto path = path_start == std::string::npos ? std::string() : settings_.url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/chat/completions";

    nlohmann::json body = {{"model", settings_.model}, {"temperature", 0}, {"messages", nlohmann::json::array()}};
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(settings_.timeout_s);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    httplib::Headers headers;
    if (!settings_.key.empty()) headers.emplace("Authorization", "Bearer " + settings_.key);
    const auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw LlmUnavailable("LLM request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw LlmUnavailable("LLM endpoint answered " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
        const auto reply = nlohmann::json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LlmUnavailable(std::string("unreadable LLM response: ") + e.what());
    }
}

MockLlmClient::MockLlmClient(const std::filesystem::path& fixture) {
    std::ifstream in(fixture);
    if (!in) throw IoError("cannot open mock LLM fixture " + fixture.string());
    try {
        exchanges_ = nlohmann::json::parse(in).at("exchanges");
    } catch (const nlohmann::json::exception& e) {
        throw IoError(fixture.string() + ": " + e.what());
    }
    if (!exchanges_.is_array()) throw IoError(fixture.string() + ": 'exchanges' must be an array");
}

MockLlmClient::MockLlmClient(nlohmann::json script) : exchanges_(std::move(script).at("exchanges")) {}

std::string MockLlmClient::complete(const std::vector<ChatMessage>& messages) {
    std::lock_guard lock(mutex_);
    transcript_.push_back(messages);
    if (next_ >= exchanges_.size()) throw LlmUnavailable("mock LLM script exhausted");
    const auto& ex = exchanges_[next_++];
    std::string last_user;
    for (const auto& m : messages)
        if (m.role == "user") last_user = m.content;
    const auto expect = ex.value("expect", std::string());
    if (last_user.find(expect) == std::string::npos)
        throw LlmUnavailable("mock LLM expected a message containing '" + expect + "'");
    if (ex.value("unavailable", false)) throw LlmUnavailable("mock LLM marked unavailable");
    return ex.at("response").get<std::string>();
}

std::size_t MockLlmClient::consumed() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::unique_ptr<LlmClient> make_llm_client(const LlmSettings& settings) {
    if (!settings.mock.empty()) return std::make_unique<MockLlmClient>(std::filesystem::path(settings.mock));
    return std::make_unique<HttpLlmClient>(settings);
}

}  // namespace mci::agent
