#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cbr {

// Closed vocabulary of the seven safety-critical driving scenario classes.
enum class RiskType : uint8_t {
    ConflictWithVehicleAhead,
    ConflictWithPedestrian,
    ConflictWithAdjacentVehicle,
    ConflictWithMergingVehicle,
    ConflictWithOncomingVehicle,
    HeadOnConflict,
    ConflictWithOppositeTurningVehicle,
};

// Closed vocabulary of the eight evasive driving maneuvers.
enum class EvasiveManeuver : uint8_t {
    EmergencyBraking,
    EvasiveSteeringLeft,
    EvasiveSteeringRight,
    SuddenAcceleration,
    EmergencyBrakingAndEvasiveSteeringLeft,
    EmergencyBrakingAndEvasiveSteeringRight,
    AccelerationAndEvasiveSteeringLeft,
    AccelerationAndEvasiveSteeringRight,
};

constexpr std::array<RiskType, 7> all_risk_types() {
    return {RiskType::ConflictWithVehicleAhead,
            RiskType::ConflictWithPedestrian,
            RiskType::ConflictWithAdjacentVehicle,
            RiskType::ConflictWithMergingVehicle,
            RiskType::ConflictWithOncomingVehicle,
            RiskType::HeadOnConflict,
            RiskType::ConflictWithOppositeTurningVehicle};
}

constexpr std::array<EvasiveManeuver, 8> all_maneuvers() {
    return {EvasiveManeuver::EmergencyBraking,
            EvasiveManeuver::EvasiveSteeringLeft,
            EvasiveManeuver::EvasiveSteeringRight,
            EvasiveManeuver::SuddenAcceleration,
            EvasiveManeuver::EmergencyBrakingAndEvasiveSteeringLeft,
            EvasiveManeuver::EmergencyBrakingAndEvasiveSteeringRight,
            EvasiveManeuver::AccelerationAndEvasiveSteeringLeft,
            EvasiveManeuver::AccelerationAndEvasiveSteeringRight};
}

// Canonical display strings; stable, part of the file/wire contract.
std::string_view display(RiskType t);
std::string_view display(EvasiveManeuver m);

// Case-insensitive, whitespace-tolerant parse against the canonical strings.
std::optional<RiskType> try_parse_risk_type(std::string_view label);
std::optional<EvasiveManeuver> try_parse_maneuver(std::string_view label);

// Throwing variants: Error(Data, "UnknownRiskType"/"UnknownManeuver").
RiskType parse_risk_type(std::string_view label);
EvasiveManeuver parse_maneuver(std::string_view label);

// Lowercase, trim, collapse internal whitespace runs to a single space.
std::string normalize_label(std::string_view s);

enum class PromptMode : uint8_t { RiskAware, RiskUnaware };
enum class SamplingMode : uint8_t { Similarity, Random, None };

std::string_view display(PromptMode m);
std::string_view display(SamplingMode s);
PromptMode parse_prompt_mode(std::string_view s);
SamplingMode parse_sampling_mode(std::string_view s);

// One annotated near-miss event.
struct ScdsEvent {
    std::string event_id;
    std::string caption;
    RiskType risk_type = RiskType::ConflictWithVehicleAhead;
    EvasiveManeuver ground_truth_maneuver = EvasiveManeuver::EmergencyBraking;
};

struct RunMeta {
    std::string model_id;
    PromptMode prompt_mode = PromptMode::RiskUnaware;
    SamplingMode sampling = SamplingMode::None;
    int shots = 0;
    std::vector<std::string> retrieved_case_ids;
    int64_t seed = 0;
    int64_t latency_ms = 0;
};

// One structured LLM output. The six analysis fields are nonempty iff valid().
struct Decision {
    std::string event_id;
    std::string road_context;
    std::string other_car_position;
    std::string other_car_action;
    std::string event_context;
    EvasiveManeuver ego_car_evasive_maneuver = EvasiveManeuver::EmergencyBraking;
    std::string ego_car_maneuver_justification;
    std::string raw_response;
    RunMeta meta;

    bool valid() const {
        return !road_context.empty() && !other_car_position.empty() &&
               !other_car_action.empty() && !event_context.empty() &&
               !ego_car_maneuver_justification.empty();
    }
};

}  // namespace cbr
