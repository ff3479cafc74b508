#include "cbr/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cbr/digest.hpp"
#include "cbr/errors.hpp"

namespace cbr {

using nlohmann::json;

std::map<RiskType, size_t> Dataset::per_type_counts() const {
    std::map<RiskType, size_t> counts;
    for (const DatasetEvent& e : events) counts[e.event.risk_type]++;
    return counts;
}

const DatasetEvent& Dataset::by_event_id(const std::string& id) const {
    for (const DatasetEvent& e : events) {
        if (e.event.event_id == id) return e;
    }
    throw data_error("UnknownEventId", "no such event: " + id);
}

namespace {

std::optional<std::string> opt_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace

Dataset ingest_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open dataset file: " + path);

    Dataset ds;
    Fnv1a64 digest;
    std::set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        digest.update(line).update("\n");
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw data_error("ParseError", "line " + std::to_string(line_no) + ": " + e.what());
        }
        DatasetEvent de;
        try {
            de.event.event_id = j.at("event_id").get<std::string>();
            de.event.caption = j.at("caption").get<std::string>();
            de.event.risk_type = parse_risk_type(j.at("risk_type").get<std::string>());
            de.event.ground_truth_maneuver =
                parse_maneuver(j.at("ground_truth_maneuver").get<std::string>());
        } catch (const json::exception& e) {
            throw data_error("ParseError", "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw data_error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (de.event.caption.empty()) {
            throw data_error("ParseError",
                             "line " + std::to_string(line_no) + ": empty caption");
        }
        if (!seen_ids.insert(de.event.event_id).second) {
            throw data_error("DuplicateEventId", "line " + std::to_string(line_no) +
                                                     ": duplicate event_id " + de.event.event_id);
        }
        const size_t len = de.event.caption.size();
        if (len < 100 || len > 1000) {
            ds.warnings.push_back("event " + de.event.event_id + ": caption length " +
                                  std::to_string(len) + " outside the 100-1000 sanity band");
        }
        de.road_context = opt_field(j, "road_context");
        de.other_car_position = opt_field(j, "other_car_position");
        de.other_car_action = opt_field(j, "other_car_action");
        de.event_context = opt_field(j, "event_context");
        de.ego_car_maneuver_justification = opt_field(j, "ego_car_maneuver_justification");
        ds.events.push_back(std::move(de));
    }
    ds.source_digest = digest.hex();
    return ds;
}

void save_dataset(const std::vector<DatasetEvent>& events, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("IoError", "cannot write dataset: " + path);
    for (const DatasetEvent& de : events) {
        json j{{"event_id", de.event.event_id},
               {"caption", de.event.caption},
               {"risk_type", std::string(display(de.event.risk_type))},
               {"ground_truth_maneuver", std::string(display(de.event.ground_truth_maneuver))}};
        if (de.road_context) j["road_context"] = *de.road_context;
        if (de.other_car_position) j["other_car_position"] = *de.other_car_position;
        if (de.other_car_action) j["other_car_action"] = *de.other_car_action;
        if (de.event_context) j["event_context"] = *de.event_context;
        if (de.ego_car_maneuver_justification) {
            j["ego_car_maneuver_justification"] = *de.ego_car_maneuver_justification;
        }
        out << j.dump() << "\n";
    }
}

Split split_balanced(const Dataset& ds, size_t test_size, uint64_t seed) {
    if (test_size > ds.events.size()) {
        throw usage_error("InvalidConfig", "test_size exceeds dataset size");
    }

    const auto types = all_risk_types();
    const size_t base = test_size / types.size();
    const size_t remainder = test_size % types.size();

    // which types carry the extra sample: seeded shuffle of the type order
    std::vector<size_t> type_order(types.size());
    for (size_t i = 0; i < types.size(); ++i) type_order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(type_order.begin(), type_order.end(), rng);

    std::map<RiskType, size_t> quota;
    for (size_t rank = 0; rank < type_order.size(); ++rank) {
        quota[types[type_order[rank]]] = base + (rank < remainder ? 1 : 0);
    }

    std::map<RiskType, std::vector<size_t>> by_type;  // indices into ds.events
    for (size_t i = 0; i < ds.events.size(); ++i) {
        by_type[ds.events[i].event.risk_type].push_back(i);
    }

    std::set<size_t> test_indices;
    for (RiskType t : types) {
        const size_t q = quota[t];
        auto it = by_type.find(t);
        const size_t available = it == by_type.end() ? 0 : it->second.size();
        if (available < q) {
            throw data_error("InsufficientType",
                             "risk type '" + std::string(display(t)) + "' has " +
                                 std::to_string(available) + " events, quota is " +
                                 std::to_string(q));
        }
        if (q == 0) continue;
        auto& pool = it->second;
        std::mt19937_64 type_rng(seed ^ Fnv1a64().update(display(t)).value());
        std::shuffle(pool.begin(), pool.end(), type_rng);
        for (size_t k = 0; k < q; ++k) test_indices.insert(pool[k]);
    }

    Split split;
    for (size_t i = 0; i < ds.events.size(); ++i) {
        (test_indices.count(i) ? split.test : split.casebank).push_back(ds.events[i]);
    }
    return split;
}

CaseStore build_case_base(const std::vector<DatasetEvent>& casebank, EmbedClient& embed,
                          const std::string& embed_model_id, const std::string& out_path) {
    for (const DatasetEvent& de : casebank) {
        if (de.has_value_fields()) continue;
        const char* missing = !de.road_context              ? "road_context"
                              : !de.other_car_position      ? "other_car_position"
                              : !de.other_car_action        ? "other_car_action"
                              : !de.event_context           ? "event_context"
                                                            : "ego_car_maneuver_justification";
        throw data_error("MissingValueField",
                         "event " + de.event.event_id + " is missing " + missing);
    }

    CaseStore store(embed_model_id);
    std::set<std::string> done;
    if (std::filesystem::exists(out_path)) {
        store = CaseStore::load(out_path);
        if (store.embedding_model_id() != embed_model_id) {
            throw data_error("EmbeddingModelMismatch",
                             "existing store at " + out_path + " was embedded with '" +
                                 store.embedding_model_id() + "'");
        }
        for (const Case& c : store.cases()) done.insert(c.source_event_id);
    }

    size_t since_save = 0;
    for (const DatasetEvent& de : casebank) {
        if (done.count(de.event.event_id)) continue;
        Decision d;
        d.event_id = de.event.event_id;
        d.road_context = *de.road_context;
        d.other_car_position = *de.other_car_position;
        d.other_car_action = *de.other_car_action;
        d.event_context = *de.event_context;
        d.ego_car_evasive_maneuver = de.event.ground_truth_maneuver;
        d.ego_car_maneuver_justification = *de.ego_car_maneuver_justification;

        const auto vec = embed.embed_text({embed_model_id, de.event.caption});
        store.retain(de.event, d, vec);
        // periodic checkpoint so an interrupted build can resume
        if (++since_save >= 100) {
            store.save(out_path);
            since_save = 0;
        }
    }
    store.save(out_path);
    return store;
}

}  // namespace cbr
