#include "cbr/case_base.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbr/digest.hpp"
#include "cbr/errors.hpp"

namespace cbr {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json case_to_json(const Case& c) {
    json j{
        {"case_id", c.case_id},
        {"risk_type", std::string(display(c.risk_type))},
        {"caption", c.caption},
        {"road_context", c.road_context},
        {"other_car_position", c.other_car_position},
        {"other_car_action", c.other_car_action},
        {"event_context", c.event_context},
        {"ego_car_evasive_maneuver", std::string(display(c.ego_car_evasive_maneuver))},
        {"ego_car_maneuver_justification", c.ego_car_maneuver_justification},
        {"provenance",
         {{"source_event_id", c.source_event_id}, {"created_at", c.created_at}}},
    };
    if (c.embedding) {
        j["embedding"] = *c.embedding;
    } else {
        j["embedding"] = nullptr;
    }
    return j;
}

Case case_from_json(const json& j, size_t line_no) {
    try {
        Case c;
        c.case_id = j.at("case_id").get<std::string>();
        c.risk_type = parse_risk_type(j.at("risk_type").get<std::string>());
        c.caption = j.at("caption").get<std::string>();
        c.road_context = j.at("road_context").get<std::string>();
        c.other_car_position = j.at("other_car_position").get<std::string>();
        c.other_car_action = j.at("other_car_action").get<std::string>();
        c.event_context = j.at("event_context").get<std::string>();
        c.ego_car_evasive_maneuver =
            parse_maneuver(j.at("ego_car_evasive_maneuver").get<std::string>());
        c.ego_car_maneuver_justification =
            j.at("ego_car_maneuver_justification").get<std::string>();
        if (j.contains("embedding") && !j["embedding"].is_null()) {
            c.embedding = j["embedding"].get<std::vector<double>>();
        }
        const auto& prov = j.at("provenance");
        c.source_event_id = prov.at("source_event_id").get<std::string>();
        c.created_at = prov.at("created_at").get<std::string>();
        return c;
    } catch (const json::exception& e) {
        throw data_error("ParseError",
                         "case record at line " + std::to_string(line_no) + ": " + e.what());
    }
}

}  // namespace

std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CaseStore CaseStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open case-base file: " + path);

    std::string line;
    if (!std::getline(in, line)) {
        throw data_error("ParseError", "case-base file is empty (missing header): " + path);
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw data_error("ParseError", std::string("header line: ") + e.what());
    }
    if (!header.contains("format_version") ||
        header["format_version"].get<int>() != kFormatVersion) {
        throw data_error("ParseError", "unsupported case-base format version");
    }

    CaseStore store;
    store.embedding_model_id_ = header.value("embedding_model_id", "");
    if (header.contains("embedding_dim") && !header["embedding_dim"].is_null()) {
        store.embedding_dim_ = header["embedding_dim"].get<size_t>();
    }

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw data_error("ParseError",
                             "line " + std::to_string(line_no) + ": " + e.what());
        }
        store.add_case(case_from_json(j, line_no));
    }
    return store;
}

void CaseStore::add_case(Case c) {
    if (by_id_.count(c.case_id)) {
        throw data_error("DuplicateCaseId", "duplicate case_id: " + c.case_id);
    }
    if (c.embedding) {
        if (!embedding_dim_) {
            embedding_dim_ = c.embedding->size();
        } else if (c.embedding->size() != *embedding_dim_) {
            throw data_error("DimensionMismatch",
                             "case " + c.case_id + " has embedding length " +
                                 std::to_string(c.embedding->size()) + ", store dimension is " +
                                 std::to_string(*embedding_dim_));
        }
    }
    by_id_[c.case_id] = cases_.size();
    index_[c.risk_type].push_back(c.case_id);
    cases_.push_back(std::move(c));
}

std::string CaseStore::serialize() const {
    std::ostringstream out;
    json header{{"format_version", kFormatVersion},
                {"embedding_model_id", embedding_model_id_}};
    if (embedding_dim_) {
        header["embedding_dim"] = *embedding_dim_;
    } else {
        header["embedding_dim"] = nullptr;
    }
    out << header.dump() << "\n";
    for (const Case& c : cases_) out << case_to_json(c).dump() << "\n";
    return out.str();
}

void CaseStore::save(const std::string& path) const {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw data_error("IoError", "cannot write: " + tmp);
        out << serialize();
        if (!out) throw data_error("IoError", "write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw data_error("IoError", "rename failed: " + ec.message());
}

std::string CaseStore::retain(const ScdsEvent& event, const Decision& decision,
                              std::vector<double> embedding) {
    if (!decision.valid()) {
        throw data_error("InvalidDecision",
                         "decision for event " + event.event_id + " has empty value fields");
    }
    if (embedding_dim_ && embedding.size() != *embedding_dim_) {
        throw data_error("DimensionMismatch",
                         "embedding length " + std::to_string(embedding.size()) +
                             " vs store dimension " + std::to_string(*embedding_dim_));
    }

    std::string case_id;
    do {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "case-%06llu",
                      static_cast<unsigned long long>(next_serial_++));
        case_id = buf;
    } while (by_id_.count(case_id));

    Case c;
    c.case_id = case_id;
    c.risk_type = event.risk_type;
    c.caption = event.caption;
    c.road_context = decision.road_context;
    c.other_car_position = decision.other_car_position;
    c.other_car_action = decision.other_car_action;
    c.event_context = decision.event_context;
    c.ego_car_evasive_maneuver = decision.ego_car_evasive_maneuver;
    c.ego_car_maneuver_justification = decision.ego_car_maneuver_justification;
    c.embedding = std::move(embedding);
    c.source_event_id = event.event_id;
    c.created_at = iso8601_now();
    add_case(std::move(c));
    return case_id;
}

const Case& CaseStore::at(const std::string& case_id) const {
    auto it = by_id_.find(case_id);
    if (it == by_id_.end()) {
        throw data_error("UnknownCaseId", "no such case: " + case_id);
    }
    return cases_[it->second];
}

const std::vector<std::string>& CaseStore::partition(RiskType t) const {
    static const std::vector<std::string> kEmpty;
    auto it = index_.find(t);
    return it == index_.end() ? kEmpty : it->second;
}

// Digest ignores created_at so rebuilding an identical store (e.g. a resumed
// build) yields the same content address.
std::string CaseStore::digest() const {
    Fnv1a64 h;
    json header{{"format_version", kFormatVersion},
                {"embedding_model_id", embedding_model_id_}};
    h.update(header.dump()).update("\n");
    for (const Case& c : cases_) {
        json j = case_to_json(c);
        j["provenance"].erase("created_at");
        h.update(j.dump()).update("\n");
    }
    return h.hex();
}

bool CaseStore::operator==(const CaseStore& other) const {
    return serialize() == other.serialize();
}

}  // namespace cbr
