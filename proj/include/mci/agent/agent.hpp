#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/agent/executor.hpp"
#include "mci/agent/planner.hpp"

namespace mci::agent {

struct AgentReply {
    std::string text;
    std::vector<ReplyArtifact> artifacts;
    std::optional<nlohmann::json> plan;  // absent for a direct answer
    std::map<std::string, Value> values;

    nlohmann::json to_json() const;
};

/// Plans with the LLM, executes against the registry and composes the reply.
class Agent {
public:
    Agent(LlmClient& llm, ToolRegistry registry, ArtifactStore& store, std::shared_ptr<ModelHandle> model,
          std::chrono::milliseconds step_timeout = std::chrono::seconds(60));

    /// Journals the user turn and, on success, the agent turn. Throws
    /// PlanningFailure, StepFailure or LlmUnavailable.
    AgentReply handle(const std::shared_ptr<Session>& session, const std::string& message);

    const ToolRegistry& registry() const { return registry_; }
    const Planner& planner() const { return planner_; }

private:
    ToolRegistry registry_;
    ArtifactStore& store_;
    std::shared_ptr<ModelHandle> model_;
    Planner planner_;
    Executor executor_;
};

/// Fills the plan's respond template, or lists each step result when there
/// is none.
std::string compose_reply(const ToolPlan& plan, const ExecutionResult& result);

}  // namespace mci::agent
