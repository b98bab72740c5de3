#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

#include "mci/agent/tool_plan.hpp"
#include "mci/agent/tools.hpp"
#include "mci/error.hpp"

namespace mci::agent {

/// A plan step failed; the remaining steps did not run.
class StepFailure : public Error {
public:
    StepFailure(std::string step_id, std::string tool, const std::string& reason);
    const std::string& step_id() const { return step_id_; }
    const std::string& tool() const { return tool_; }
    const std::string& reason() const { return reason_; }

private:
    std::string step_id_, tool_, reason_;
};

struct ExecutionResult {
    std::map<std::string, Value> values;  // by step id
};

/// Runs the steps in order, binding each $ref to the earlier step's value.
class Executor {
public:
    explicit Executor(const ToolRegistry& registry,
                      std::chrono::milliseconds step_timeout = std::chrono::seconds(60));

    /// Throws StepFailure.
    ExecutionResult run(const ToolPlan& plan, const std::shared_ptr<ToolContext>& ctx) const;

private:
    const ToolRegistry& registry_;
    std::chrono::milliseconds timeout_;
};

}  // namespace mci::agent
