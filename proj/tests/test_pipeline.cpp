#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "cbr/errors.hpp"
#include "cbr/pipeline.hpp"
#include "cbr/retrieval.hpp"
#include "support.hpp"

using namespace cbr;
namespace fs = std::filesystem;

namespace {

constexpr size_t kDim = 16;
const char* kEmbedModel = "mock-embed";

// Store populated through the same mock embedder the pipeline uses, so
// similarity retrieval sees consistent vectors.
CaseStore embedded_store(size_t cases_per_type) {
    CaseStore store(kEmbedModel);
    auto embed = make_mock_embed_client(kDim);
    size_t serial = 0;
    for (RiskType type : all_risk_types()) {
        for (size_t i = 0; i < cases_per_type; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "c%05zu", serial++);
            Case c = testsup::make_case(id, type, {});
            c.embedding = embed->embed_text({kEmbedModel, c.caption});
            store.add_case(std::move(c));
        }
    }
    return store;
}

std::vector<ScdsEvent> sample_events(size_t n) {
    std::vector<ScdsEvent> events;
    for (const auto& de : testsup::synthetic_dataset(n)) events.push_back(de.event);
    return events;
}

std::unique_ptr<ChatClient> make_truthful_chat(const std::vector<ScdsEvent>& events) {
    std::map<std::string, std::string> script;
    for (const auto& ev : events) {
        script["Event ID: " + ev.event_id] =
            testsup::scripted_response(ev.event_id, ev.ground_truth_maneuver);
    }
    return make_scripted_chat_client(std::move(script));
}

RunConfig base_config() {
    RunConfig cfg;
    cfg.model_id = "test-chat";
    cfg.embed_model_id = kEmbedModel;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("run config validation ties sampling to shot count") {
    RunConfig cfg = base_config();
    CHECK_NOTHROW(cfg.validate());

    cfg.prompt.shots = 3;  // shots without a sampling mode
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg.sampling = SamplingMode::Similarity;
    CHECK_NOTHROW(cfg.validate());

    cfg.prompt.shots = 0;  // sampling without shots
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg.prompt.shots = -1;
    cfg.sampling = SamplingMode::None;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("zero-shot decide_event extracts the scripted decision") {
    const auto events = sample_events(3);
    const CaseStore store(kEmbedModel);
    auto chat = make_truthful_chat(events);
    const RunConfig cfg = base_config();

    const RunRecord rec = decide_event(cfg, store, events[1], nullptr, *chat);
    CHECK(rec.event_id == events[1].event_id);
    CHECK_FALSE(rec.failure.has_value());
    REQUIRE(rec.decision.has_value());
    CHECK(rec.decision->ego_car_evasive_maneuver == events[1].ground_truth_maneuver);
    CHECK(rec.decision->valid());
    CHECK(rec.decision->meta.shots == 0);
    CHECK(rec.decision->meta.retrieved_case_ids.empty());
    CHECK_FALSE(rec.prompt_bundle_digest.empty());
}

TEST_CASE("similarity sampling retrieves in-type nearest neighbours") {
    const CaseStore store = embedded_store(6);
    const auto events = sample_events(2);
    auto chat = make_truthful_chat(events);
    auto embed = make_mock_embed_client(kDim);

    RunConfig cfg = base_config();
    cfg.sampling = SamplingMode::Similarity;
    cfg.prompt.shots = 3;

    const RunRecord rec = decide_event(cfg, store, events[0], embed.get(), *chat);
    REQUIRE(rec.decision.has_value());
    const auto& retrieved = rec.decision->meta.retrieved_case_ids;
    REQUIRE(retrieved.size() == 3);

    const auto query = embed->embed_text({kEmbedModel, events[0].caption});
    const RetrievalResult expected = retrieve_similar(store, events[0].risk_type, query, 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(retrieved[i] == expected[i].case_id);
        CHECK(store.at(retrieved[i]).risk_type == events[0].risk_type);
    }
    CHECK(rec.decision->meta.sampling == SamplingMode::Similarity);
}

TEST_CASE("random sampling is seed-deterministic per event") {
    const CaseStore store = embedded_store(6);
    const auto events = sample_events(4);
    auto chat = make_truthful_chat(events);
    auto embed = make_mock_embed_client(kDim);

    RunConfig cfg = base_config();
    cfg.sampling = SamplingMode::Random;
    cfg.prompt.shots = 3;

    const RunRecord a = decide_event(cfg, store, events[2], embed.get(), *chat);
    const RunRecord b = decide_event(cfg, store, events[2], embed.get(), *chat);
    REQUIRE(a.decision.has_value());
    REQUIRE(b.decision.has_value());
    CHECK(a.decision->meta.retrieved_case_ids == b.decision->meta.retrieved_case_ids);
    for (const auto& id : a.decision->meta.retrieved_case_ids) {
        CHECK(store.at(id).risk_type == events[2].risk_type);
    }

    RunConfig other = cfg;
    other.seed = 1234567;
    bool any_differs = false;
    for (const auto& ev : events) {
        const RunRecord x = decide_event(cfg, store, ev, embed.get(), *chat);
        const RunRecord y = decide_event(other, store, ev, embed.get(), *chat);
        if (x.decision->meta.retrieved_case_ids != y.decision->meta.retrieved_case_ids) {
            any_differs = true;
        }
    }
    CHECK(any_differs);
}

TEST_CASE("malformed model output becomes a recorded failure, not an abort") {
    const auto events = sample_events(5);
    std::map<std::string, std::string> script;
    for (const auto& ev : events) {
        script["Event ID: " + ev.event_id] =
            testsup::scripted_response(ev.event_id, ev.ground_truth_maneuver);
    }
    script["Event ID: " + events[2].event_id] = "no json here at all";
    auto chat = make_scripted_chat_client(std::move(script));

    const RunConfig cfg = base_config();
    const CaseStore store(kEmbedModel);
    const BatchResult result = run_batch(cfg, store.snapshot(), events, nullptr, *chat);

    REQUIRE(result.records.size() == 5);
    CHECK(result.manifest.n_failures == 1);
    for (size_t i = 0; i < 5; ++i) {
        if (i == 2) {
            CHECK_FALSE(result.records[i].decision.has_value());
            REQUIRE(result.records[i].failure.has_value());
            CHECK(result.records[i].failure->code == "NoObjectFound");
        } else {
            CHECK(result.records[i].decision.has_value());
        }
    }
}

TEST_CASE("concurrent batches preserve input order and match serial runs") {
    const CaseStore store = embedded_store(4);
    const auto events = sample_events(100);
    auto chat = make_truthful_chat(events);
    auto embed = make_mock_embed_client(kDim);

    RunConfig serial = base_config();
    serial.sampling = SamplingMode::Similarity;
    serial.prompt.shots = 1;
    RunConfig parallel = serial;
    parallel.concurrency = 8;

    const BatchResult a = run_batch(serial, store.snapshot(), events, embed.get(), *chat);
    const BatchResult b = run_batch(parallel, store.snapshot(), events, embed.get(), *chat);

    REQUIRE(a.records.size() == 100);
    REQUIRE(b.records.size() == 100);
    CHECK(a.manifest.n_failures == 0);
    for (size_t i = 0; i < events.size(); ++i) {
        CHECK(a.records[i].event_id == events[i].event_id);
        CHECK(b.records[i].event_id == events[i].event_id);
        REQUIRE(a.records[i].decision.has_value());
        REQUIRE(b.records[i].decision.has_value());
        CHECK(a.records[i].decision->ego_car_evasive_maneuver ==
              b.records[i].decision->ego_car_evasive_maneuver);
        CHECK(a.records[i].decision->meta.retrieved_case_ids ==
              b.records[i].decision->meta.retrieved_case_ids);
        CHECK(a.records[i].prompt_bundle_digest == b.records[i].prompt_bundle_digest);
    }
}

TEST_CASE("batch manifest carries the store digest and config") {
    const CaseStore store = embedded_store(2);
    const auto events = sample_events(3);
    auto chat = make_truthful_chat(events);

    const RunConfig cfg = base_config();
    const BatchResult result = run_batch(cfg, store.snapshot(), events, nullptr, *chat);
    CHECK(result.manifest.model_id == "test-chat");
    CHECK(result.manifest.seed == 7);
    CHECK(result.manifest.store_digest == store.digest());
    CHECK(result.manifest.n_events == 3);
    CHECK(result.manifest.config_json == run_config_json(cfg));
    CHECK_FALSE(result.manifest.started_at.empty());
}

TEST_CASE("records persist and reload losslessly") {
    const auto events = sample_events(6);
    std::map<std::string, std::string> script;
    for (size_t i = 0; i + 1 < events.size(); ++i) {
        script["Event ID: " + events[i].event_id] =
            testsup::scripted_response(events[i].event_id, events[i].ground_truth_maneuver);
    }
    auto chat = make_scripted_chat_client(std::move(script), "not a decision");

    const CaseStore store(kEmbedModel);
    const BatchResult result = run_batch(base_config(), store.snapshot(), events, nullptr, *chat);

    const fs::path path = fs::temp_directory_path() / "cbr_records_test.jsonl";
    save_records(result.records, path.string());
    const std::vector<RunRecord> loaded = load_records(path.string());
    fs::remove(path);

    REQUIRE(loaded.size() == result.records.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        const RunRecord& x = result.records[i];
        const RunRecord& y = loaded[i];
        CHECK(x.event_id == y.event_id);
        CHECK(x.decision.has_value() == y.decision.has_value());
        CHECK(x.failure.has_value() == y.failure.has_value());
        CHECK(x.prompt_bundle_digest == y.prompt_bundle_digest);
        if (x.decision) {
            CHECK(x.decision->ego_car_evasive_maneuver == y.decision->ego_car_evasive_maneuver);
            CHECK(x.decision->event_context == y.decision->event_context);
            CHECK(x.decision->ego_car_maneuver_justification ==
                  y.decision->ego_car_maneuver_justification);
            CHECK(x.decision->meta.retrieved_case_ids == y.decision->meta.retrieved_case_ids);
        }
        if (x.failure) CHECK(x.failure->code == y.failure->code);
    }
}
