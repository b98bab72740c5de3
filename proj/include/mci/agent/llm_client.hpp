#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/error.hpp"

namespace mci::agent {

struct ChatMessage {
    std::string role;  // system, user, assistant
    std::string content;
};

/// The model could not be reached or answered with a transport error.
class LlmUnavailable : public Error {
public:
    using Error::Error;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    /// Returns the assistant text for a chat. Throws LlmUnavailable.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct LlmSettings {
    std::string url;  // base URL; /chat/completions is appended
    std::string model;
    std::string key;
    std::string mock;  // fixture path; wins over url when set
    double timeout_s = 60;

    /// CA_LLM_URL, CA_LLM_MODEL, CA_LLM_KEY, CA_LLM_MOCK over the given defaults.
    static LlmSettings from_env(LlmSettings defaults);
    static LlmSettings from_env();
};

void to_json(nlohmann::json& j, const LlmSettings& s);
void from_json(const nlohmann::json& j, LlmSettings& s);

/// OpenAI-style chat-completion endpoint.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(LlmSettings settings);
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    LlmSettings settings_;
};

/// Scripted replies: {"exchanges": [{"expect": "...", "response": "..."}]},
/// consumed in order. `expect` must occur in the last user message. An
/// exchange with "unavailable": true raises LlmUnavailable instead of
/// answering. Running past the script also raises LlmUnavailable.
class MockLlmClient : public LlmClient {
public:
    explicit MockLlmClient(const std::filesystem::path& fixture);
    explicit MockLlmClient(nlohmann::json script);
    std::string complete(const std::vector<ChatMessage>& messages) override;

    std::size_t consumed() const;
    const std::vector<std::vector<ChatMessage>>& transcript() const { return transcript_; }

private:
    nlohmann::json exchanges_;
    std::size_t next_ = 0;
    std::vector<std::vector<ChatMessage>> transcript_;
    mutable std::mutex mutex_;
};

std::unique_ptr<LlmClient> make_llm_client(const LlmSettings& settings);

}  // namespace mci::agent
