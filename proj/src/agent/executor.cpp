#include "mci/agent/executor.hpp"

#include <future>
#include <thread>

namespace mci::agent {

StepFailure::StepFailure(std::string step_id, std::string tool, const std::string& reason)
    : Error("step '" + step_id + "' (" + tool + ") failed: " + reason),
      step_id_(std::move(step_id)),
      tool_(std::move(tool)),
      reason_(reason) {}

Executor::Executor(const ToolRegistry& registry, std::chrono::milliseconds step_timeout)
    : registry_(registry), timeout_(step_timeout) {}

namespace {

Value bind_literal(const ParamSpec& p, const nlohmann::json& literal) {
    auto fail = [&] { return ToolError("argument '" + p.name + "' must be " + to_string(p.type)); };
    switch (p.type) {
        case ValueType::integer:
            if (!literal.is_number_integer()) throw fail();
            break;
        case ValueType::real:
            if (!literal.is_number()) throw fail();
            return Value{p.type, literal.get<double>()};
        case ValueType::json:
            break;
        default:
            if (!literal.is_string()) throw fail();
    }
    return Value{p.type, literal};
}

}  // namespace

ExecutionResult Executor::run(const ToolPlan& plan, const std::shared_ptr<ToolContext>& ctx) const {
    ExecutionResult result;
    for (const auto& step : plan.steps) {
        const auto* spec = registry_.find(step.tool);
        if (!spec) throw StepFailure(step.id, step.tool, "unknown tool");
        std::vector<Value> args;
        try {
            for (std::size_t i = 0; i < spec->params.size(); ++i) {
                const auto& a = step.args.at(i);
                if (a.ref) {
                    auto v = result.values.at(*a.ref);
                    v.type = spec->params[i].type;
                    args.push_back(std::move(v));
                } else {
                    args.push_back(bind_literal(spec->params[i], a.literal));
                }
            }
        } catch (const std::exception& e) {
            throw StepFailure(step.id, step.tool, e.what());
        }

        // The tool runs on its own thread so a stuck step can be abandoned.
        auto task = std::make_shared<std::packaged_task<Value()>>(
            [fn = registry_.function(step.tool), args, ctx] { return fn(args, *ctx); });
        auto future = task->get_future();
        std::thread([task] { (*task)(); }).detach();
        if (future.wait_for(timeout_) != std::future_status::ready)
            throw StepFailure(step.id, step.tool, "timed out after " + std::to_string(timeout_.count()) + " ms");
        try {
            result.values[step.id] = future.get();
        } catch (const std::exception& e) {
            throw StepFailure(step.id, step.tool, e.what());
        }
    }
    return result;
}

}  // namespace mci::agent
