#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mci/agent/llm_client.hpp"
#include "mci/agent/session.hpp"
#include "mci/agent/tool_plan.hpp"
#include "mci/error.hpp"

namespace mci::agent {

/// The model did not produce a valid plan after one repair request.
class PlanningFailure : public Error {
public:
    PlanningFailure(std::string message, std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

using PlannerResult = std::variant<ToolPlan, DirectAnswer>;

/// Turns a user message into a validated plan or a direct answer.
class Planner {
public:
    Planner(LlmClient& llm, const ToolRegistry& registry);

    /// Messages sent for the first attempt: system prompt, session context,
    /// prior turns, then the user message.
    std::vector<ChatMessage> messages(const std::string& user_message, const Session* session) const;

    /// Throws PlanningFailure or LlmUnavailable.
    PlannerResult plan(const std::string& user_message, const Session* session);

    const std::string& system_prompt() const { return system_prompt_; }

private:
    LlmClient& llm_;
    const ToolRegistry& registry_;
    std::string system_prompt_;
};

/// Lists uploaded pairs, the latest caption and counts.
std::string session_context(const Session* session);

}  // namespace mci::agent
