#include "mci/agent/agent.hpp"

#include <mutex>

namespace mci::agent {

nlohmann::json AgentReply::to_json() const {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : artifacts) arts.push_back(a.to_json());
    return {{"reply", text}, {"artifacts", arts}};
}

Agent::Agent(LlmClient& llm, ToolRegistry registry, ArtifactStore& store, std::shared_ptr<ModelHandle> model,
             std::chrono::milliseconds step_timeout)
    : registry_(std::move(registry)),
      store_(store),
      model_(std::move(model)),
      planner_(llm, registry_),
      executor_(registry_, step_timeout) {}

std::string compose_reply(const ToolPlan& plan, const ExecutionResult& result) {
    std::map<std::string, std::string> rendered;
    for (const auto& [id, v] : result.values) rendered[id] = v.render();
    if (plan.respond) return render_template(*plan.respond, rendered);
    if (plan.steps.empty()) return "";
    std::string text;
    for (const auto& step : plan.steps) {
        if (!text.empty()) text += "\n";
        text += step.tool + ": " + rendered.at(step.id);
    }
    return text;
}

AgentReply Agent::handle(const std::shared_ptr<Session>& session, const std::string& message) {
    std::lock_guard run(session->run_mutex());
    AgentReply reply;
    try {
        // Context and history are read before this message joins the journal.
        auto planned = planner_.plan(message, session.get());
        session->add_turn({"user", message, {}, 0});
        if (auto* direct = std::get_if<DirectAnswer>(&planned)) {
            reply.text = direct->text;
        } else {
            const auto& plan = std::get<ToolPlan>(planned);
            reply.plan = plan.to_json(registry_);
            auto ctx = std::make_shared<ToolContext>(store_, model_, session);
            try {
                const auto result = executor_.run(plan, ctx);
                reply.text = compose_reply(plan, result);
                reply.artifacts = ctx->produced();
                reply.values = result.values;
            } catch (const StepFailure& e) {
                session->add_turn({"agent", e.what(), {}, 0});
                throw;
            }
        }
    } catch (const PlanningFailure& e) {
        session->add_turn({"user", message, {}, 0});
        session->add_turn({"agent", e.what(), {}, 0});
        throw;
    }
    session->add_turn({"agent", reply.text, reply.artifacts, 0});
    return reply;
}

}  // namespace mci::agent
