#pragma once
#include <optional>
#include <string>
#include <vector>

#include "cbr/case_base.hpp"
#include "cbr/gateway.hpp"
#include "cbr/taxonomy.hpp"

namespace cbr {

// One dataset record: the annotated event plus, optionally, the six resolved
// analysis fields used for case construction and as evaluation references.
struct DatasetEvent {
    ScdsEvent event;
    std::optional<std::string> road_context;
    std::optional<std::string> other_car_position;
    std::optional<std::string> other_car_action;
    std::optional<std::string> event_context;
    std::optional<std::string> ego_car_maneuver_justification;

    bool has_value_fields() const {
        return road_context && other_car_position && other_car_action && event_context &&
               ego_car_maneuver_justification;
    }
};

struct Dataset {
    std::vector<DatasetEvent> events;
    std::string source_digest;
    std::vector<std::string> warnings;  // e.g. caption-length band violations

    std::map<RiskType, size_t> per_type_counts() const;
    const DatasetEvent& by_event_id(const std::string& id) const;
};

// Line-delimited JSON ingestion with line-numbered errors; captions outside
// the 100-1000 character sanity band produce warnings, not errors.
Dataset ingest_dataset(const std::string& path);
void save_dataset(const std::vector<DatasetEvent>& events, const std::string& path);

struct Split {
    std::vector<DatasetEvent> test;
    std::vector<DatasetEvent> casebank;
};

// Stratified split: per-type test quotas differ by at most one, disjoint and
// exhaustive, deterministic under seed.
Split split_balanced(const Dataset& ds, size_t test_size, uint64_t seed);

// One case per casebank event, captions embedded through `embed`. Resumable:
// when `out_path` already holds a partial store, existing source events are
// skipped and the remainder appended.
CaseStore build_case_base(const std::vector<DatasetEvent>& casebank, EmbedClient& embed,
                          const std::string& embed_model_id, const std::string& out_path);

}  // namespace cbr
