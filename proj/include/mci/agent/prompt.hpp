#pragma once

#include <string>

#include "mci/agent/tool_spec.hpp"

namespace mci::agent {

/// System instruction: role, tool signatures, the plan grammar, a worked
/// example and the direct-answer rule. Deterministic in the registry.
std::string build_system_prompt(const ToolRegistry& registry);

}  // namespace mci::agent
