#include "mci/agent/prompt.hpp"

#include <sstream>

#include "mci/agent/tool_plan.hpp"
#include "mci/error.hpp"

namespace mci::agent {

namespace {

std::string example_literal(ValueType t) {
    switch (t) {
        case ValueType::string: return "\"building\"";
        case ValueType::integer: return "1";
        case ValueType::real: return "0.5";
        case ValueType::image_ref: return "\"latest:t2\"";
        case ValueType::mask_ref: return "\"<mask ref>\"";
        case ValueType::pair_ref: return "\"latest\"";
        case ValueType::json: return "{}";
    }
    return "{}";
}

bool has_all(const ToolRegistry& r, std::initializer_list<const char*> names) {
    for (const auto* n : names)
        if (!r.find(n)) return false;
    return true;
}

void write_example(std::ostream& out, const ToolRegistry& registry) {
    if (has_all(registry, {"detect_changes", "recolor_mask", "count_objects"})) {
        out << "Example. User: \"Detect the changes, show buildings in green and roads in blue, and count the "
               "changed buildings.\"\n"
            << "```plan\n"
            << "[\n"
            << "  {\"id\": \"mask\", \"tool\": \"detect_changes\", \"args\": {\"pair\": \"latest\"}},\n"
            << "  {\"id\": \"colored\", \"tool\": \"recolor_mask\", \"args\": {\"mask\": {\"$ref\": \"mask\"}, "
               "\"mapping\": \"building=green,road=blue\"}},\n"
            << "  {\"id\": \"n\", \"tool\": \"count_objects\", \"args\": {\"mask\": {\"$ref\": \"mask\"}, "
               "\"class\": \"building\"}},\n"
            << "  {\"respond\": \"Buildings are shown in green and roads in blue. {{n}} changed buildings were "
               "found.\"}\n"
            << "]\n"
            << "```\n";
        return;
    }
    const auto& spec = registry.specs().front();
    out << "Example:\n```plan\n[\n  {\"id\": \"r\", \"tool\": \"" << spec.name << "\", \"args\": {";
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
        if (i) out << ", ";
        out << "\"" << spec.params[i].name << "\": " << example_literal(spec.params[i].type);
    }
    out << "}},\n  {\"respond\": \"Result: {{r}}\"}\n]\n```\n";
}

}  // namespace

std::string build_system_prompt(const ToolRegistry& registry) {
    if (registry.empty()) throw Error("cannot build a prompt for an empty tool registry");
    std::ostringstream out;
    out << "You are Change-Agent, an assistant that interprets changes between two co-registered remote sensing "
           "images of the same area, T1 (earlier) and T2 (later). Changed pixels are labelled building or road; "
           "everything else is background.\n\n";
    out << "Value types: string, int, real; pair_ref names an uploaded image pair (\"latest\" is the most recent "
           "upload); mask_ref names a change mask; image_ref names an image (\"latest:t1\" and \"latest:t2\" are the "
           "uploaded images, tools may return others); json is structured data.\n\n";
    out << "Tools:\n";
    for (const auto& spec : registry.specs()) {
        out << "- " << spec.signature() << "\n    " << spec.description << "\n";
        for (const auto& p : spec.params) out << "    " << p.name << ": " << p.description << "\n";
    }
    out << "\nTo use tools, reply with exactly one plan block: a line ```plan, a JSON array, and a closing ```.\n"
        << "Rules:\n"
        << "1. Each step is {\"id\": ..., \"tool\": ..., \"args\": {...}}. At most " << kMaxPlanSteps << " steps.\n"
        << "2. Step ids are identifiers (letters, digits, underscore) and are unique.\n"
        << "3. Every parameter gets a value: a literal of its type, or {\"$ref\": \"<id>\"} naming an earlier "
           "step whose result has that type.\n"
        << "4. The array may end with {\"respond\": \"<text>\"}; each {{id}} in the text is replaced by that "
           "step's result.\n"
        << "5. Use only the tools listed above.\n\n";
    write_example(out, registry);
    out << "\nQuestions that call for knowledge rather than measurement, such as the likely cause of a change or "
           "what the area may look like in future, are answered directly in plain text with no plan block. Use the "
           "session context (latest caption and object counts) when it helps.\n";
    return out.str();
}

}  // namespace mci::agent
