#include "cbr/taxonomy.hpp"

#include <cctype>

#include "cbr/errors.hpp"

namespace cbr {

std::string_view display(RiskType t) {
    switch (t) {
        case RiskType::ConflictWithVehicleAhead: return "Conflict with Vehicle Ahead";
        case RiskType::ConflictWithPedestrian: return "Conflict with Pedestrian";
        case RiskType::ConflictWithAdjacentVehicle: return "Conflict with Adjacent Vehicle";
        case RiskType::ConflictWithMergingVehicle: return "Conflict with Merging Vehicle";
        case RiskType::ConflictWithOncomingVehicle: return "Conflict with Oncoming Vehicle";
        case RiskType::HeadOnConflict: return "Head-on Conflict";
        case RiskType::ConflictWithOppositeTurningVehicle:
            return "Conflict with Opposite Turning Vehicle";
    }
    return "";
}

std::string_view display(EvasiveManeuver m) {
    switch (m) {
        case EvasiveManeuver::EmergencyBraking: return "Emergency Braking";
        case EvasiveManeuver::EvasiveSteeringLeft: return "Evasive Steering Left";
        case EvasiveManeuver::EvasiveSteeringRight: return "Evasive Steering Right";
        case EvasiveManeuver::SuddenAcceleration: return "Sudden Acceleration";
        case EvasiveManeuver::EmergencyBrakingAndEvasiveSteeringLeft:
            return "Emergency Braking and Evasive Steering Left";
        case EvasiveManeuver::EmergencyBrakingAndEvasiveSteeringRight:
            return "Emergency Braking and Evasive Steering Right";
        case EvasiveManeuver::AccelerationAndEvasiveSteeringLeft:
            return "Acceleration and Evasive Steering Left";
        case EvasiveManeuver::AccelerationAndEvasiveSteeringRight:
            return "Acceleration and Evasive Steering Right";
    }
    return "";
}

std::string normalize_label(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::optional<RiskType> try_parse_risk_type(std::string_view label) {
    const std::string norm = normalize_label(label);
    for (RiskType t : all_risk_types()) {
        if (norm == normalize_label(display(t))) return t;
    }
    return std::nullopt;
}

std::optional<EvasiveManeuver> try_parse_maneuver(std::string_view label) {
    const std::string norm = normalize_label(label);
    for (EvasiveManeuver m : all_maneuvers()) {
        if (norm == normalize_label(display(m))) return m;
    }
    return std::nullopt;
}

RiskType parse_risk_type(std::string_view label) {
    if (auto t = try_parse_risk_type(label)) return *t;
    throw data_error("UnknownRiskType", "unknown risk type: '" + std::string(label) + "'");
}

EvasiveManeuver parse_maneuver(std::string_view label) {
    if (auto m = try_parse_maneuver(label)) return *m;
    throw data_error("UnknownManeuver", "unknown maneuver: '" + std::string(label) + "'");
}

std::string_view display(PromptMode m) {
    return m == PromptMode::RiskAware ? "risk-aware" : "risk-unaware";
}

std::string_view display(SamplingMode s) {
    switch (s) {
        case SamplingMode::Similarity: return "similarity";
        case SamplingMode::Random: return "random";
        case SamplingMode::None: return "none";
    }
    return "";
}

PromptMode parse_prompt_mode(std::string_view s) {
    const std::string norm = normalize_label(s);
    if (norm == "risk-aware" || norm == "aware") return PromptMode::RiskAware;
    if (norm == "risk-unaware" || norm == "unaware") return PromptMode::RiskUnaware;
    throw usage_error("UnknownPromptMode", "unknown prompt mode: '" + std::string(s) + "'");
}

SamplingMode parse_sampling_mode(std::string_view s) {
    const std::string norm = normalize_label(s);
    if (norm == "similarity") return SamplingMode::Similarity;
    if (norm == "random") return SamplingMode::Random;
    if (norm == "none") return SamplingMode::None;
    throw usage_error("UnknownSampling", "unknown sampling mode: '" + std::string(s) + "'");
}

}  // namespace cbr
