#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbr/taxonomy.hpp"

namespace cbr {

// A resolved experience. Key part: (risk_type, caption). Value part: the six
// analysis fields. The embedding is attached to the key's caption.
struct Case {
    std::string case_id;
    RiskType risk_type = RiskType::ConflictWithVehicleAhead;
    std::string caption;
    std::string road_context;
    std::string other_car_position;
    std::string other_car_action;
    std::string event_context;
    EvasiveManeuver ego_car_evasive_maneuver = EvasiveManeuver::EmergencyBraking;
    std::string ego_car_maneuver_justification;
    std::optional<std::vector<double>> embedding;
    std::string source_event_id;
    std::string created_at;  // ISO-8601

    bool value_fields_complete() const {
        return !road_context.empty() && !other_car_position.empty() &&
               !other_car_action.empty() && !event_context.empty() &&
               !ego_car_maneuver_justification.empty();
    }
};

// Evolving case store, persisted as one JSON object per line with a header
// line carrying format version, embedding model id and dimension.
class CaseStore {
public:
    using Snapshot = std::shared_ptr<const CaseStore>;

    CaseStore() = default;
    explicit CaseStore(std::string embedding_model_id)
        : embedding_model_id_(std::move(embedding_model_id)) {}

    static CaseStore load(const std::string& path);
    void save(const std::string& path) const;

    // Appends a case built from the event's key fields and the decision's
    // value fields. First embedded case fixes the store dimension.
    std::string retain(const ScdsEvent& event, const Decision& decision,
                       std::vector<double> embedding);

    // Raw insert used by load and the case-base builder.
    void add_case(Case c);

    Snapshot snapshot() const { return std::make_shared<CaseStore>(*this); }

    size_t size() const { return cases_.size(); }
    bool empty() const { return cases_.empty(); }
    const std::vector<Case>& cases() const { return cases_; }
    const Case& at(const std::string& case_id) const;
    bool contains(const std::string& case_id) const {
        return by_id_.count(case_id) != 0;
    }

    // Insertion-ordered ids of the given risk-type partition.
    const std::vector<std::string>& partition(RiskType t) const;

    std::optional<size_t> embedding_dim() const { return embedding_dim_; }
    const std::string& embedding_model_id() const { return embedding_model_id_; }
    void set_embedding_model_id(std::string id) { embedding_model_id_ = std::move(id); }

    // Content digest over the serialized representation.
    std::string digest() const;

    bool operator==(const CaseStore& other) const;

private:
    std::string serialize() const;

    std::string embedding_model_id_;
    std::optional<size_t> embedding_dim_;
    std::vector<Case> cases_;
    std::map<std::string, size_t> by_id_;
    std::map<RiskType, std::vector<std::string>> index_;
    uint64_t next_serial_ = 0;
};

std::string iso8601_now();

}  // namespace cbr
