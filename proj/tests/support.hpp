// Shared fixtures: random store/sentence generators, synthetic datasets and
// scripted mock responses.
#pragma once
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbr/case_base.hpp"
#include "cbr/dataset.hpp"
#include "cbr/taxonomy.hpp"

namespace testsup {

using namespace cbr;

inline std::vector<double> random_unit_vector(std::mt19937_64& rng, size_t dim) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& x : v) {
            x = dist(rng);
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
    return v;
}

inline Case make_case(const std::string& id, RiskType type, std::vector<double> embedding) {
    Case c;
    c.case_id = id;
    c.risk_type = type;
    c.caption = "caption for " + id;
    c.road_context = "road context " + id;
    c.other_car_position = "position " + id;
    c.other_car_action = "action " + id;
    c.event_context = "event context " + id;
    c.ego_car_evasive_maneuver =
        all_maneuvers()[std::hash<std::string>{}(id) % all_maneuvers().size()];
    c.ego_car_maneuver_justification = "justification " + id;
    c.embedding = std::move(embedding);
    c.source_event_id = "ev-" + id;
    c.created_at = "2026-01-01T00:00:00Z";
    return c;
}

inline CaseStore random_store(std::mt19937_64& rng, size_t n_cases, size_t dim) {
    CaseStore store("mock-embed");
    for (size_t i = 0; i < n_cases; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%05zu", i);
        const RiskType type = all_risk_types()[rng() % all_risk_types().size()];
        store.add_case(make_case(id, type, random_unit_vector(rng, dim)));
    }
    return store;
}

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words = {
        "road",  "lane",  "wet",    "dry",   "night", "signal", "cross", "slow",
        "fast",  "turn",  "stop",   "move",  "close", "ahead",  "rear",  "light",
        "dark",  "clear", "narrow", "wide",  "curve", "bridge", "ramp",  "exit"};
    return words;
}

inline std::string random_sentence(std::mt19937_64& rng, size_t min_words, size_t max_words) {
    std::uniform_int_distribution<size_t> len(min_words, max_words);
    const size_t n = len(rng);
    std::ostringstream out;
    for (size_t i = 0; i < n; ++i) {
        if (i) out << ' ';
        out << word_pool()[rng() % word_pool().size()];
    }
    return out.str();
}

// A caption padded into the dataset's 100-1000 character sanity band; avoids
// canonical risk/maneuver label substrings by construction.
inline std::string synthetic_caption(const std::string& event_id, size_t variant) {
    std::ostringstream out;
    out << "Event " << event_id << ": the ego car travels along a two lane road in scene "
        << variant << ". Another road user approaches and the gap narrows quickly while "
        << "the surface stays slick and visibility is reduced near the crossing area.";
    return out.str();
}

// JSON response with the six analysis fields, as a fenced block wrapped in
// prose, the way a chat model would answer.
inline std::string scripted_response(const std::string& event_id, EvasiveManeuver maneuver) {
    nlohmann::json body{
        {"road_context", "Two lane road, reduced visibility, slick surface."},
        {"other_car_position", "Close to the ego vehicle's path."},
        {"other_car_action", "Closing the gap toward the ego lane."},
        {"event_context", "A conflict develops for event " + event_id + " as distance shrinks."},
        {"ego_car_evasive_maneuver", std::string(display(maneuver))},
        {"ego_car_maneuver_justification",
         "The maneuver resolves the conflict while keeping the vehicle stable."},
    };
    return "Here is my analysis.\n```json\n" + body.dump(2) + "\n```\n";
}

// n events spread round-robin over the seven risk types, each carrying the
// six value fields. 1000 events gives per-type counts {143, 143, 143, 143,
// 143, 143, 142}.
inline std::vector<DatasetEvent> synthetic_dataset(size_t n) {
    std::vector<DatasetEvent> events;
    const auto types = all_risk_types();
    const auto maneuvers = all_maneuvers();
    for (size_t i = 0; i < n; ++i) {
        DatasetEvent de;
        char id[16];
        std::snprintf(id, sizeof(id), "ev%05zu", i);
        de.event.event_id = id;
        de.event.risk_type = types[i % types.size()];
        de.event.ground_truth_maneuver = maneuvers[i % maneuvers.size()];
        de.event.caption = synthetic_caption(id, i);
        de.road_context = "Road context for scene " + std::to_string(i) + " on a local street.";
        de.other_car_position = "The other vehicle sits near position " + std::to_string(i % 9) + ".";
        de.other_car_action = "It moves toward the ego path at pace " + std::to_string(i % 5) + ".";
        de.event_context = "A conflict develops in scene " + std::to_string(i) +
                           " as the distance to the other road user shrinks quickly.";
        de.ego_car_maneuver_justification =
            "The chosen action avoids the other road user while keeping scene " +
            std::to_string(i) + " controllable.";
        events.push_back(std::move(de));
    }
    return events;
}

}  // namespace testsup
