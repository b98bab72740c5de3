#include "mci/agent/planner.hpp"

#include <sstream>

#include "mci/agent/prompt.hpp"

namespace mci::agent {

PlanningFailure::PlanningFailure(std::string message, std::vector<std::string> diagnostics)
    : Error(std::move(message)), diagnostics_(std::move(diagnostics)) {}

Planner::Planner(LlmClient& llm, const ToolRegistry& registry)
    : llm_(llm), registry_(registry), system_prompt_(build_system_prompt(registry)) {}

std::string session_context(const Session* session) {
    std::ostringstream out;
    out << "Session context.\n";
    if (!session || session->pairs().empty()) {
        out << "No image pair has been uploaded yet.\n";
        return out.str();
    }
    const auto pairs = session->pairs();
    out << "Uploaded pairs (oldest first): ";
    for (std::size_t i = 0; i < pairs.size(); ++i) out << (i ? ", " : "") << pairs[i];
    out << "\n\"latest\" refers to " << pairs.back() << ".\n";
    if (const auto caption = session->latest_caption()) out << "Latest caption: " << *caption << "\n";
    const auto counts = session->latest_counts();
    if (!counts.empty()) {
        out << "Latest counts:";
        for (const auto& [cls, n] : counts) out << " " << cls << "=" << n;
        out << "\n";
    }
    return out.str();
}

std::vector<ChatMessage> Planner::messages(const std::string& user_message, const Session* session) const {
    std::vector<ChatMessage> m{{"system", system_prompt_}, {"system", session_context(session)}};
    if (session)
        for (const auto& turn : session->history())
            m.push_back({turn.role == "user" ? "user" : "assistant", turn.text});
    m.push_back({"user", user_message});
    return m;
}

PlannerResult Planner::plan(const std::string& user_message, const Session* session) {
    auto chat = messages(user_message, session);
    std::vector<std::string> diagnostics;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = llm_.complete(chat);
        auto parsed = parse_reply(reply, registry_);
        if (auto* p = std::get_if<ToolPlan>(&parsed)) return std::move(*p);
        if (auto* d = std::get_if<DirectAnswer>(&parsed)) return std::move(*d);
        const auto& error = std::get<PlanError>(parsed).message;
        diagnostics.push_back(error);
        chat.push_back({"assistant", reply});
        chat.push_back({"user", "Your plan was rejected: " + error +
                                    "\nReply with one corrected ```plan block for the request: " + user_message});
    }
    throw PlanningFailure("no valid plan after one repair", std::move(diagnostics));
}

}  // namespace mci::agent
