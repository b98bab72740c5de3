#include "mci/agent/tool_plan.hpp"

#include <regex>
#include <set>

namespace mci::agent {

namespace {

const std::regex& id_pattern() {
    static const std::regex re("[A-Za-z_][A-Za-z0-9_]*");
    return re;
}

bool literal_matches(ValueType t, const nlohmann::json& v) {
    switch (t) {
        case ValueType::string: return v.is_string();
        case ValueType::integer: return v.is_number_integer();
        case ValueType::real: return v.is_number();
        case ValueType::image_ref:
        case ValueType::mask_ref:
        case ValueType::pair_ref: return v.is_string() && !v.get<std::string>().empty();
        case ValueType::json: return true;
    }
    return false;
}

struct Invalid {
    std::string message;
};

PlanStep parse_step(const nlohmann::json& item, std::size_t index, const ToolRegistry& registry,
                    const std::map<std::string, ValueType>& earlier) {
    const auto where = "step " + std::to_string(index + 1);
    for (const auto& [key, _] : item.items())
        if (key != "id" && key != "tool" && key != "args") throw Invalid{where + ": unexpected key '" + key + "'"};
    if (!item.contains("id") || !item["id"].is_string()) throw Invalid{where + ": missing string 'id'"};
    PlanStep step;
    step.id = item["id"].get<std::string>();
    if (!std::regex_match(step.id, id_pattern())) throw Invalid{where + ": id '" + step.id + "' is not an identifier"};
    if (earlier.count(step.id)) throw Invalid{where + ": duplicate id '" + step.id + "'"};
    if (!item.contains("tool") || !item["tool"].is_string()) throw Invalid{where + ": missing string 'tool'"};
    step.tool = item["tool"].get<std::string>();
    const auto* spec = registry.find(step.tool);
    if (!spec) throw Invalid{where + " (" + step.id + "): unknown tool '" + step.tool + "'"};
    const auto args = item.value("args", nlohmann::json::object());
    if (!args.is_object()) throw Invalid{where + " (" + step.id + "): 'args' must be an object"};
    for (const auto& [key, _] : args.items()) {
        bool known = false;
        for (const auto& p : spec->params) known = known || p.name == key;
        if (!known) throw Invalid{where + " (" + step.id + "): " + step.tool + " has no parameter '" + key + "'"};
    }
    for (const auto& p : spec->params) {
        const auto prefix = where + " (" + step.id + "): argument '" + p.name + "'";
        if (!args.contains(p.name)) throw Invalid{prefix + " is missing"};
        const auto& v = args[p.name];
        PlanArg arg;
        if (v.is_object()) {
            if (v.size() != 1 || !v.contains("$ref") || !v["$ref"].is_string())
                throw Invalid{prefix + ": objects must be {\"$ref\": \"<step id>\"}"};
            const auto ref = v["$ref"].get<std::string>();
            const auto it = earlier.find(ref);
            if (it == earlier.end()) throw Invalid{prefix + " refers to '" + ref + "', which is not an earlier step"};
            if (it->second != p.type && p.type != ValueType::json)
                throw Invalid{prefix + " needs " + to_string(p.type) + " but '" + ref + "' yields " +
                              to_string(it->second)};
            arg.ref = ref;
        } else {
            if (!literal_matches(p.type, v)) throw Invalid{prefix + " must be a " + to_string(p.type) + " literal"};
            arg.literal = v;
        }
        step.args.push_back(std::move(arg));
    }
    return step;
}

}  // namespace

nlohmann::json ToolPlan::to_json(const ToolRegistry& registry) const {
    auto out = nlohmann::json::array();
    for (const auto& s : steps) {
        nlohmann::json args = nlohmann::json::object();
        const auto* spec = registry.find(s.tool);
        for (std::size_t i = 0; i < s.args.size(); ++i) {
            const auto name = spec ? spec->params[i].name : std::to_string(i);
            args[name] = s.args[i].ref ? nlohmann::json{{"$ref", *s.args[i].ref}} : s.args[i].literal;
        }
        out.push_back({{"id", s.id}, {"tool", s.tool}, {"args", args}});
    }
    if (respond) out.push_back({{"respond", *respond}});
    return out;
}

std::vector<std::string> extract_plan_blocks(std::string_view reply) {
    std::vector<std::string> blocks;
    const std::string_view open = "```plan";
    std::size_t pos = 0;
    while ((pos = reply.find(open, pos)) != std::string_view::npos) {
        auto body = pos + open.size();
        const auto eol = reply.find('\n', body);
        if (eol == std::string_view::npos) {
            blocks.emplace_back();
            break;
        }
        const auto close = reply.find("```", eol + 1);
        if (close == std::string_view::npos) {
            blocks.emplace_back(reply.substr(eol + 1));
            break;
        }
        blocks.emplace_back(reply.substr(eol + 1, close - eol - 1));
        pos = close + 3;
    }
    return blocks;
}

std::vector<std::string> template_refs(const std::string& tmpl) {
    std::vector<std::string> refs;
    static const std::regex re("\\{\\{([^{}]*)\\}\\}");
    for (auto it = std::sregex_iterator(tmpl.begin(), tmpl.end(), re); it != std::sregex_iterator(); ++it)
        refs.push_back((*it)[1].str());
    return refs;
}

std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = tmpl.find("{{", pos);
        const auto close = open == std::string::npos ? std::string::npos : tmpl.find("}}", open + 2);
        if (close == std::string::npos) {
            out += tmpl.substr(pos);
            return out;
        }
        const auto key = tmpl.substr(open + 2, close - open - 2);
        out += tmpl.substr(pos, open - pos);
        const auto it = values.find(key);
        out += it != values.end() ? it->second : tmpl.substr(open, close + 2 - open);
        pos = close + 2;
    }
}

std::variant<ToolPlan, PlanError> parse_plan(std::string_view json_text, const ToolRegistry& registry) noexcept {
    try {
        const auto doc = nlohmann::json::parse(json_text);
        if (!doc.is_array()) return PlanError{"the plan must be a JSON array"};
        ToolPlan plan;
        std::map<std::string, ValueType> earlier;
        for (std::size_t i = 0; i < doc.size(); ++i) {
            const auto& item = doc[i];
            if (!item.is_object()) return PlanError{"element " + std::to_string(i + 1) + " is not an object"};
            if (item.contains("respond")) {
                if (i + 1 != doc.size()) return PlanError{"the respond element must come last"};
                if (item.size() != 1 || !item["respond"].is_string())
                    return PlanError{"the respond element must be {\"respond\": \"<template>\"}"};
                plan.respond = item["respond"].get<std::string>();
                for (const auto& ref : template_refs(*plan.respond))
                    if (!earlier.count(ref)) return PlanError{"respond template names unknown step '" + ref + "'"};
                break;
            }
            if (plan.steps.size() == kMaxPlanSteps)
                return PlanError{"plans are limited to " + std::to_string(kMaxPlanSteps) + " steps"};
            plan.steps.push_back(parse_step(item, i, registry, earlier));
            earlier[plan.steps.back().id] = registry.find(plan.steps.back().tool)->result;
        }
        return plan;
    } catch (const Invalid& e) {
        return PlanError{e.message};
    } catch (const nlohmann::json::exception& e) {
        return PlanError{std::string("plan is not valid JSON: ") + e.what()};
    } catch (const std::exception& e) {
        return PlanError{std::string("plan rejected: ") + e.what()};
    }
}

ParsedReply parse_reply(std::string_view reply, const ToolRegistry& registry) noexcept {
    try {
        const auto blocks = extract_plan_blocks(reply);
        if (blocks.empty()) return DirectAnswer{std::string(reply)};
        if (blocks.size() > 1) return PlanError{"reply contains more than one plan block"};
        auto parsed = parse_plan(blocks.front(), registry);
        if (auto* e = std::get_if<PlanError>(&parsed)) return *e;
        return std::get<ToolPlan>(std::move(parsed));
    } catch (const std::exception& e) {
        return PlanError{std::string("reply rejected: ") + e.what()};
    }
}

}  // namespace mci::agent
