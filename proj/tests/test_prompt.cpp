#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cbr/errors.hpp"
#include "cbr/prompt.hpp"
#include "support.hpp"

using namespace cbr;
namespace fs = std::filesystem;

static ScdsEvent sample_event() {
    ScdsEvent ev;
    ev.event_id = "ev00042";
    ev.caption = "A sedan two car lengths ahead brakes without warning while traffic "
                 "closes in from behind on a wet two lane road near an intersection.";
    ev.risk_type = RiskType::ConflictWithVehicleAhead;
    ev.ground_truth_maneuver = EvasiveManeuver::EmergencyBraking;
    return ev;
}

static Case sample_case(const std::string& id, RiskType type, EvasiveManeuver m) {
    Case c;
    c.case_id = id;
    c.source_event_id = "src-" + id;
    c.risk_type = type;
    c.caption = "Example caption for " + id + " describing a developing conflict on the road "
                "with enough detail to look like a real scene description from the corpus.";
    c.road_context = "two lane road, light rain";
    c.other_car_position = "directly ahead";
    c.other_car_action = "sudden stop";
    c.event_context = "lead vehicle brakes abruptly";
    c.ego_car_evasive_maneuver = m;
    c.ego_car_maneuver_justification = "closing distance leaves no room to steer";
    return c;
}

TEST_CASE("system prompt covers the taxonomy and output contract") {
    const std::string sys = build_system_prompt();
    for (RiskType t : all_risk_types()) CHECK(sys.find(display(t)) != std::string::npos);
    for (EvasiveManeuver m : all_maneuvers()) CHECK(sys.find(display(m)) != std::string::npos);
    for (const char* key : {"road_context", "other_car_position", "other_car_action",
                            "event_context", "ego_car_evasive_maneuver",
                            "ego_car_maneuver_justification"}) {
        CHECK(sys.find(key) != std::string::npos);
    }
}

TEST_CASE("system prompt template override") {
    const fs::path dir = fs::temp_directory_path() / "cbr_tmpl_test";
    fs::create_directories(dir);
    std::ofstream(dir / "system_prompt.txt") << "CUSTOM SYSTEM TEXT";
    CHECK(build_system_prompt(dir.string()) == "CUSTOM SYSTEM TEXT");
    // unreadable template dir falls back to the built-in text
    CHECK(build_system_prompt((dir / "missing").string()) == build_system_prompt());
    fs::remove_all(dir);
}

TEST_CASE("task prompt mode separation") {
    const ScdsEvent ev = sample_event();
    const std::string unaware = build_task_prompt(ev, PromptMode::RiskUnaware);
    const std::string aware = build_task_prompt(ev, PromptMode::RiskAware);

    CHECK(unaware.find("Event ID: ev00042") != std::string::npos);
    CHECK(unaware.find(ev.caption) != std::string::npos);
    CHECK(unaware.find("Potential risk") == std::string::npos);
    CHECK(unaware.find(display(ev.risk_type)) == std::string::npos);

    CHECK(aware.find("Potential risk in the event: Conflict with Vehicle Ahead") !=
          std::string::npos);
    CHECK(aware.find(ev.caption) != std::string::npos);
}

TEST_CASE("ground truth maneuver never leaks into prompts") {
    ScdsEvent ev = sample_event();
    ev.ground_truth_maneuver = EvasiveManeuver::SuddenAcceleration;
    for (PromptMode mode : {PromptMode::RiskUnaware, PromptMode::RiskAware}) {
        const std::string task = build_task_prompt(ev, mode);
        CHECK(task.find("Sudden Acceleration") == std::string::npos);
        CHECK(task.find("ground truth") == std::string::npos);
    }
}

TEST_CASE("example rendering carries the case decision verbatim") {
    const std::vector<Case> cases = {
        sample_case("case-a", RiskType::ConflictWithPedestrian, EvasiveManeuver::EmergencyBraking),
        sample_case("case-b", RiskType::ConflictWithVehicleAhead,
                    EvasiveManeuver::EvasiveSteeringLeft)};
    const auto blocks = render_examples(cases);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].find(cases[0].caption) != std::string::npos);
    CHECK(blocks[0].find("\"ego_car_evasive_maneuver\": \"Emergency Braking\"") !=
          std::string::npos);
    CHECK(blocks[1].find("\"ego_car_evasive_maneuver\": \"Evasive Steering Left\"") !=
          std::string::npos);
    CHECK(blocks[1].find("closing distance leaves no room to steer") != std::string::npos);
}

TEST_CASE("assemble builds a two-message request in folded mode") {
    PromptConfig cfg;
    cfg.mode = PromptMode::RiskAware;
    cfg.shots = 2;
    const std::vector<Case> cases = {
        sample_case("case-a", RiskType::ConflictWithVehicleAhead, EvasiveManeuver::EmergencyBraking),
        sample_case("case-b", RiskType::ConflictWithVehicleAhead,
                    EvasiveManeuver::EvasiveSteeringRight)};
    const AssembledPrompt ap = assemble(cfg, sample_event(), cases, "test-model");
    CHECK(ap.request.model_id == "test-model");
    REQUIRE(ap.request.messages.size() == 2);
    CHECK(ap.request.messages[0].role == "system");
    CHECK(ap.request.messages[1].role == "user");
    // examples precede the task text, in retrieval order
    const std::string& user = ap.request.messages[1].content;
    const size_t a = user.find("case-a");
    const size_t b = user.find("case-b");
    const size_t task = user.find("Event ID: ev00042");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    REQUIRE(task != std::string::npos);
    CHECK(a < b);
    CHECK(b < task);
}

TEST_CASE("assemble with examples_as_messages splits example blocks out") {
    PromptConfig cfg;
    cfg.shots = 2;
    cfg.examples_as_messages = true;
    const std::vector<Case> cases = {
        sample_case("case-a", RiskType::ConflictWithVehicleAhead, EvasiveManeuver::EmergencyBraking),
        sample_case("case-b", RiskType::ConflictWithVehicleAhead,
                    EvasiveManeuver::EvasiveSteeringRight)};
    const AssembledPrompt ap = assemble(cfg, sample_event(), cases, "m");
    REQUIRE(ap.request.messages.size() == 4);
    CHECK(ap.request.messages[1].role == "user");
    CHECK(ap.request.messages[1].content.find("case-a") != std::string::npos);
    CHECK(ap.request.messages[2].content.find("case-b") != std::string::npos);
    CHECK(ap.request.messages[3].content.find("Event ID: ev00042") != std::string::npos);
}

TEST_CASE("zero-shot assembly has no example text") {
    PromptConfig cfg;
    cfg.shots = 0;
    const AssembledPrompt ap = assemble(cfg, sample_event(), {}, "m");
    REQUIRE(ap.request.messages.size() == 2);
    CHECK(ap.bundle.example_blocks.empty());
    CHECK(ap.request.messages[1].content.find("Example") == std::string::npos);
}

TEST_CASE("shot count mismatch throws") {
    PromptConfig cfg;
    cfg.shots = 3;
    const std::vector<Case> two = {
        sample_case("case-a", RiskType::ConflictWithVehicleAhead, EvasiveManeuver::EmergencyBraking),
        sample_case("case-b", RiskType::ConflictWithVehicleAhead,
                    EvasiveManeuver::EmergencyBraking)};
    try {
        assemble(cfg, sample_event(), two, "m");
        FAIL("expected ShotMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == "ShotMismatch");
    }
}

TEST_CASE("canonical shot counts") {
    for (int s : {0, 1, 3, 5}) CHECK(canonical_shot_count(s));
    for (int s : {2, 4, 6, 7, -1}) CHECK_FALSE(canonical_shot_count(s));
}

TEST_CASE("assembly is deterministic and digest-stable") {
    PromptConfig cfg;
    cfg.mode = PromptMode::RiskAware;
    cfg.shots = 1;
    const std::vector<Case> cases = {
        sample_case("case-z", RiskType::ConflictWithVehicleAhead, EvasiveManeuver::EmergencyBraking)};
    const AssembledPrompt a = assemble(cfg, sample_event(), cases, "m");
    const AssembledPrompt b = assemble(cfg, sample_event(), cases, "m");
    CHECK(a.request.messages[1].content == b.request.messages[1].content);
    CHECK(prompt_digest(a.bundle) == prompt_digest(b.bundle));

    PromptConfig other = cfg;
    other.mode = PromptMode::RiskUnaware;
    const AssembledPrompt c = assemble(other, sample_event(), cases, "m");
    CHECK(prompt_digest(a.bundle) != prompt_digest(c.bundle));
}
