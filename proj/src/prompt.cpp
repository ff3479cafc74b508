#include "cbr/prompt.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbr/digest.hpp"
#include "cbr/errors.hpp"

namespace cbr {

namespace {

// Risk-category working definitions. Fixtures drafted from standard
// traffic-conflict descriptions; the canonical labels are the contract.
constexpr const char* kRiskDefinitions[] = {
    "Conflict with Vehicle Ahead: the lead vehicle in the ego lane brakes or "
    "stops suddenly, closing the headway faster than expected.",
    "Conflict with Pedestrian: a pedestrian enters or is about to enter the "
    "ego vehicle's path, often from a crossing or road edge.",
    "Conflict with Adjacent Vehicle: a vehicle in a neighboring lane drifts "
    "or cuts into the ego lane at close range.",
    "Conflict with Merging Vehicle: a vehicle merging from a ramp or side "
    "road converges into the ego vehicle's travel path.",
    "Conflict with Oncoming Vehicle: a vehicle traveling in the opposite "
    "direction crosses the center line into the ego lane.",
    "Head-on Conflict: the ego vehicle and another road user approach each "
    "other front-to-front on a collision course.",
    "Conflict with Opposite Turning Vehicle: an oncoming vehicle turns "
    "across the ego vehicle's path at an intersection.",
};

constexpr const char* kOutputSchema =
    "{\n"
    "  \"road_context\": \"...\",\n"
    "  \"other_car_position\": \"...\",\n"
    "  \"other_car_action\": \"...\",\n"
    "  \"event_context\": \"...\",\n"
    "  \"ego_car_evasive_maneuver\": \"...\",\n"
    "  \"ego_car_maneuver_justification\": \"...\"\n"
    "}";

std::string default_system_prompt() {
    std::ostringstream out;
    out << "You are an expert traffic safety analyst specializing in near-miss "
           "incident analysis from dashcam event descriptions.\n\n";
    out << "Primary task: given one safety-critical driving event, recommend exactly "
           "one evasive maneuver for the ego car and justify it.\n\n";
    out << "Risk categories:\n";
    for (const char* def : kRiskDefinitions) out << "- " << def << "\n";
    out << "\nThe recommended maneuver must be exactly one of:\n";
    for (EvasiveManeuver m : all_maneuvers()) out << "- " << display(m) << "\n";
    out << "\nReason step by step, in this order:\n"
           "1. Give an overview of the general road context.\n"
           "2. Analyze the other car's position and action in a spatial-temporal manner.\n"
           "3. Summarize a clear event context.\n"
           "4. Infer the evasive maneuver from the analysis above.\n"
           "5. Justify why this maneuver is recommended.\n";
    out << "\nRespond with a single JSON object with exactly these six keys:\n"
        << kOutputSchema << "\n";
    return out.str();
}

}  // namespace

std::string build_system_prompt(const std::string& template_dir) {
    if (!template_dir.empty()) {
        const auto path = std::filesystem::path(template_dir) / "system_prompt.txt";
        std::ifstream in(path);
        if (in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
    }
    return default_system_prompt();
}

std::string build_task_prompt(const ScdsEvent& event, PromptMode mode) {
    std::ostringstream out;
    out << "Analyze the following driving event and recommend one evasive maneuver.\n";
    out << "Event ID: " << event.event_id << "\n";
    out << "Event description: " << event.caption << "\n";
    if (mode == PromptMode::RiskAware) {
        out << "Potential risk in the event: " << display(event.risk_type) << "\n";
    }
    return out.str();
}

std::vector<std::string> render_examples(const std::vector<Case>& cases) {
    std::vector<std::string> blocks;
    blocks.reserve(cases.size());
    for (const Case& c : cases) {
        nlohmann::json value{
            {"road_context", c.road_context},
            {"other_car_position", c.other_car_position},
            {"other_car_action", c.other_car_action},
            {"event_context", c.event_context},
            {"ego_car_evasive_maneuver", std::string(display(c.ego_car_evasive_maneuver))},
            {"ego_car_maneuver_justification", c.ego_car_maneuver_justification},
        };
        std::ostringstream out;
        out << "Example case:\n"
            << "Event description: " << c.caption << "\n"
            << "Resolution:\n"
            << value.dump(2) << "\n";
        blocks.push_back(out.str());
    }
    return blocks;
}

AssembledPrompt assemble(const PromptConfig& cfg, const ScdsEvent& event,
                         const std::vector<Case>& cases, const std::string& model_id) {
    if (cases.size() != static_cast<size_t>(cfg.shots)) {
        throw usage_error("ShotMismatch",
                          "expected " + std::to_string(cfg.shots) + " example cases, got " +
                              std::to_string(cases.size()));
    }

    AssembledPrompt out;
    out.bundle.system_text = build_system_prompt(cfg.template_dir);
    out.bundle.example_blocks = render_examples(cases);
    const std::string task = build_task_prompt(event, cfg.mode);

    out.request.model_id = model_id;
    out.request.messages.push_back({"system", out.bundle.system_text});

    if (cfg.examples_as_messages) {
        for (const std::string& block : out.bundle.example_blocks) {
            out.request.messages.push_back({"user", block});
        }
        out.bundle.user_text = task;
        out.request.messages.push_back({"user", task});
    } else {
        std::string user_text;
        for (const std::string& block : out.bundle.example_blocks) {
            user_text += block;
            user_text += "\n";
        }
        user_text += task;
        out.bundle.user_text = user_text;
        out.request.messages.push_back({"user", user_text});
    }
    return out;
}

std::string prompt_digest(const PromptBundle& bundle) {
    Fnv1a64 h;
    h.update(bundle.system_text).update("\x1f");
    for (const std::string& block : bundle.example_blocks) h.update(block).update("\x1f");
    h.update(bundle.user_text);
    return h.hex();
}

}  // namespace cbr
