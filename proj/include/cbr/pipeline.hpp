#pragma once
#include <optional>
#include <string>
#include <vector>

#include "cbr/case_base.hpp"
#include "cbr/gateway.hpp"
#include "cbr/prompt.hpp"
#include "cbr/retrieval.hpp"
#include "cbr/taxonomy.hpp"

namespace cbr {

struct RunConfig {
    std::string model_id;
    std::string embed_model_id;
    GatewayConfig gateway;
    PromptConfig prompt;
    SamplingMode sampling = SamplingMode::None;
    bool cross_type_random = false;
    uint64_t seed = 0;
    int concurrency = 1;
    // Single re-ask on malformed model output; off by default.
    bool retry_malformed = false;

    void validate() const;
};

struct RunFailure {
    std::string code;
    std::string message;
};

struct RunRecord {
    std::string event_id;
    std::optional<Decision> decision;
    std::optional<RunFailure> failure;
    std::string prompt_bundle_digest;
    int64_t latency_ms = 0;
};

RunRecord decide_event(const RunConfig& cfg, const CaseStore& view, const ScdsEvent& event,
                       EmbedClient* embed, ChatClient& chat);

struct RunManifest {
    std::string model_id;
    std::string config_json;
    uint64_t seed = 0;
    std::string store_digest;
    std::string started_at;
    std::string finished_at;
    size_t n_events = 0;
    size_t n_failures = 0;
};

struct BatchResult {
    std::vector<RunRecord> records;  // input order
    RunManifest manifest;
};

// One record per event, output order matching input order regardless of
// interleaving. Per-event failures are recorded, never abort the batch.
BatchResult run_batch(const RunConfig& cfg, const CaseStore::Snapshot& view,
                      const std::vector<ScdsEvent>& events, EmbedClient* embed,
                      ChatClient& chat);

// JSONL persistence of run records plus a manifest sidecar.
void save_records(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> load_records(const std::string& path);
void save_manifest(const RunManifest& manifest, const std::string& path);

std::string run_config_json(const RunConfig& cfg);

}  // namespace cbr
