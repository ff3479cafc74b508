#include "cbr/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "cbr/digest.hpp"
#include "cbr/errors.hpp"

namespace cbr {

using nlohmann::json;

void RunConfig::validate() const {
    if ((sampling == SamplingMode::None) != (prompt.shots == 0)) {
        throw usage_error("InvalidConfig",
                          "sampling must be 'none' exactly when shots = 0 (got sampling=" +
                              std::string(display(sampling)) +
                              ", shots=" + std::to_string(prompt.shots) + ")");
    }
    if (concurrency < 1) throw usage_error("InvalidConfig", "concurrency must be >= 1");
    if (prompt.shots < 0) throw usage_error("InvalidConfig", "shots must be >= 0");
}

namespace {

// Per-event seed for the random-sampling baseline: reproducible, varies by
// event so a batch does not reuse one sample.
uint64_t event_seed(uint64_t run_seed, const std::string& event_id) {
    return Fnv1a64().update(event_id).value() ^ run_seed;
}

}  // namespace

RunRecord decide_event(const RunConfig& cfg, const CaseStore& view, const ScdsEvent& event,
                       EmbedClient* embed, ChatClient& chat) {
    RunRecord record;
    record.event_id = event.event_id;
    const auto start = std::chrono::steady_clock::now();

    try {
        RetrievalResult retrieved;
        if (cfg.sampling == SamplingMode::Similarity) {
            if (!embed) throw usage_error("InvalidConfig", "similarity sampling needs an embedder");
            if (!cfg.embed_model_id.empty() && !view.embedding_model_id().empty() &&
                cfg.embed_model_id != view.embedding_model_id()) {
                throw data_error("EmbeddingModelMismatch",
                                 "store was embedded with '" + view.embedding_model_id() +
                                     "', run configured for '" + cfg.embed_model_id + "'");
            }
            const auto query = embed->embed_text({cfg.embed_model_id, event.caption});
            retrieved = retrieve_similar(view, event.risk_type, query,
                                         static_cast<size_t>(cfg.prompt.shots));
        } else if (cfg.sampling == SamplingMode::Random) {
            retrieved = retrieve_random(view, event.risk_type,
                                        static_cast<size_t>(cfg.prompt.shots),
                                        event_seed(cfg.seed, event.event_id), nullptr,
                                        cfg.cross_type_random);
        }

        std::vector<Case> cases;
        std::vector<std::string> case_ids;
        for (const ScoredCase& sc : retrieved) {
            cases.push_back(view.at(sc.case_id));
            case_ids.push_back(sc.case_id);
        }

        // A thin partition can yield fewer cases than requested; assemble
        // against the actual count so the prompt stays consistent.
        PromptConfig prompt_cfg = cfg.prompt;
        prompt_cfg.shots = static_cast<int>(cases.size());
        const AssembledPrompt prompt = assemble(prompt_cfg, event, cases, cfg.model_id);
        record.prompt_bundle_digest = prompt_digest(prompt.bundle);

        std::string raw = chat.complete_chat(prompt.request);

        RunMeta meta;
        meta.model_id = cfg.model_id;
        meta.prompt_mode = cfg.prompt.mode;
        meta.sampling = case_ids.empty() ? SamplingMode::None : cfg.sampling;
        meta.shots = static_cast<int>(case_ids.size());
        meta.retrieved_case_ids = case_ids;
        meta.seed = static_cast<int64_t>(cfg.seed);

        try {
            record.decision = extract_decision(raw, event.event_id, meta);
        } catch (const Error& e) {
            if (!cfg.retry_malformed) throw;
            raw = chat.complete_chat(prompt.request);
            record.decision = extract_decision(raw, event.event_id, meta);
        }
    } catch (const Error& e) {
        record.failure = RunFailure{e.code(), e.what()};
    } catch (const std::exception& e) {
        record.failure = RunFailure{"Internal", e.what()};
    }

    record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (record.decision) record.decision->meta.latency_ms = record.latency_ms;
    return record;
}

BatchResult run_batch(const RunConfig& cfg, const CaseStore::Snapshot& view,
                      const std::vector<ScdsEvent>& events, EmbedClient* embed,
                      ChatClient& chat) {
    cfg.validate();

    BatchResult result;
    result.manifest.model_id = cfg.model_id;
    result.manifest.config_json = run_config_json(cfg);
    result.manifest.seed = cfg.seed;
    result.manifest.store_digest = view->digest();
    result.manifest.started_at = iso8601_now();
    result.manifest.n_events = events.size();

    result.records.resize(events.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= events.size()) break;
            result.records[i] = decide_event(cfg, *view, events[i], embed, chat);
        }
    };

    const size_t n_threads =
        std::min<size_t>(static_cast<size_t>(cfg.concurrency), std::max<size_t>(events.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    result.manifest.finished_at = iso8601_now();
    for (const RunRecord& r : result.records) {
        if (r.failure) ++result.manifest.n_failures;
    }
    return result;
}

namespace {

json meta_to_json(const RunMeta& m) {
    return json{{"model_id", m.model_id},
                {"prompt_mode", std::string(display(m.prompt_mode))},
                {"sampling", std::string(display(m.sampling))},
                {"shots", m.shots},
                {"retrieved_case_ids", m.retrieved_case_ids},
                {"seed", m.seed},
                {"latency_ms", m.latency_ms}};
}

RunMeta meta_from_json(const json& j) {
    RunMeta m;
    m.model_id = j.at("model_id").get<std::string>();
    m.prompt_mode = parse_prompt_mode(j.at("prompt_mode").get<std::string>());
    m.sampling = parse_sampling_mode(j.at("sampling").get<std::string>());
    m.shots = j.at("shots").get<int>();
    m.retrieved_case_ids = j.at("retrieved_case_ids").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<int64_t>();
    m.latency_ms = j.at("latency_ms").get<int64_t>();
    return m;
}

}  // namespace

void save_records(const std::vector<RunRecord>& records, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw data_error("IoError", "cannot write: " + tmp);
        for (const RunRecord& r : records) {
            json j{{"event_id", r.event_id},
                   {"prompt_bundle_digest", r.prompt_bundle_digest},
                   {"latency_ms", r.latency_ms}};
            if (r.decision) {
                const Decision& d = *r.decision;
                j["decision"] = {
                    {"road_context", d.road_context},
                    {"other_car_position", d.other_car_position},
                    {"other_car_action", d.other_car_action},
                    {"event_context", d.event_context},
                    {"ego_car_evasive_maneuver", std::string(display(d.ego_car_evasive_maneuver))},
                    {"ego_car_maneuver_justification", d.ego_car_maneuver_justification},
                    {"raw_response", d.raw_response},
                    {"meta", meta_to_json(d.meta)},
                };
            } else {
                j["decision"] = nullptr;
            }
            if (r.failure) {
                j["failure"] = {{"code", r.failure->code}, {"message", r.failure->message}};
            } else {
                j["failure"] = nullptr;
            }
            out << j.dump() << "\n";
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw data_error("IoError", "rename failed: " + ec.message());
}

std::vector<RunRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open records file: " + path);
    std::vector<RunRecord> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw data_error("ParseError", "line " + std::to_string(line_no) + ": " + e.what());
        }
        RunRecord r;
        r.event_id = j.at("event_id").get<std::string>();
        r.prompt_bundle_digest = j.value("prompt_bundle_digest", "");
        r.latency_ms = j.value("latency_ms", int64_t{0});
        if (j.contains("decision") && !j["decision"].is_null()) {
            const json& dj = j["decision"];
            Decision d;
            d.event_id = r.event_id;
            d.road_context = dj.at("road_context").get<std::string>();
            d.other_car_position = dj.at("other_car_position").get<std::string>();
            d.other_car_action = dj.at("other_car_action").get<std::string>();
            d.event_context = dj.at("event_context").get<std::string>();
            d.ego_car_evasive_maneuver =
                parse_maneuver(dj.at("ego_car_evasive_maneuver").get<std::string>());
            d.ego_car_maneuver_justification =
                dj.at("ego_car_maneuver_justification").get<std::string>();
            d.raw_response = dj.value("raw_response", "");
            d.meta = meta_from_json(dj.at("meta"));
            r.decision = std::move(d);
        }
        if (j.contains("failure") && !j["failure"].is_null()) {
            r.failure = RunFailure{j["failure"].value("code", ""), j["failure"].value("message", "")};
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
    json j{{"model_id", manifest.model_id},
           {"config", json::parse(manifest.config_json)},
           {"seed", manifest.seed},
           {"store_digest", manifest.store_digest},
           {"started_at", manifest.started_at},
           {"finished_at", manifest.finished_at},
           {"n_events", manifest.n_events},
           {"n_failures", manifest.n_failures}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("IoError", "cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

std::string run_config_json(const RunConfig& cfg) {
    json j{{"model_id", cfg.model_id},
           {"embed_model_id", cfg.embed_model_id},
           {"prompt_mode", std::string(display(cfg.prompt.mode))},
           {"shots", cfg.prompt.shots},
           {"include_cot", cfg.prompt.include_cot},
           {"examples_as_messages", cfg.prompt.examples_as_messages},
           {"sampling", std::string(display(cfg.sampling))},
           {"cross_type_random", cfg.cross_type_random},
           {"seed", cfg.seed},
           {"concurrency", cfg.concurrency},
           {"retry_malformed", cfg.retry_malformed}};
    return j.dump();
}

}  // namespace cbr
