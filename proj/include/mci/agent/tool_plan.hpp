#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mci/agent/tool_spec.hpp"

namespace mci::agent {

inline constexpr std::size_t kMaxPlanSteps = 16;

struct PlanArg {
    std::optional<std::string> ref;  // id of an earlier step
    nlohmann::json literal;
};

struct PlanStep {
    std::string id;
    std::string tool;
    std::vector<PlanArg> args;  // in the tool's parameter order
};

/// Validated plan. Wire form, inside a ```plan fence:
///   [{"id": "m", "tool": "detect_changes", "args": {"pair": "latest"}},
///    {"id": "n", "tool": "count_objects", "args": {"mask": {"$ref": "m"}, "class": "building"}},
///    {"respond": "{{n}} buildings changed."}]
struct ToolPlan {
    std::vector<PlanStep> steps;
    std::optional<std::string> respond;

    nlohmann::json to_json(const ToolRegistry& registry) const;
};

struct DirectAnswer {
    std::string text;
};

struct PlanError {
    std::string message;
};

using ParsedReply = std::variant<ToolPlan, DirectAnswer, PlanError>;

/// Total: every reply maps to a plan, a direct answer (no plan fence) or an
/// error; nothing is thrown.
ParsedReply parse_reply(std::string_view reply, const ToolRegistry& registry) noexcept;

/// Validates the JSON array of a plan block.
std::variant<ToolPlan, PlanError> parse_plan(std::string_view json_text, const ToolRegistry& registry) noexcept;

/// Text between the ```plan fence and its closing fence. Multiple plan
/// blocks are an error reported through PlanError by parse_reply.
std::vector<std::string> extract_plan_blocks(std::string_view reply);

/// Replaces each {{id}} with values.at(id); unknown placeholders are left as is.
std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Ids named by {{...}} placeholders, in order of appearance.
std::vector<std::string> template_refs(const std::string& tmpl);

}  // namespace mci::agent
