#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cbr/case_base.hpp"
#include "cbr/errors.hpp"
#include "support.hpp"

using namespace cbr;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("cbr_test_" + name)).string();
}

ScdsEvent sample_event(const std::string& id) {
    ScdsEvent e;
    e.event_id = id;
    e.caption = "a caption for " + id;
    e.risk_type = RiskType::HeadOnConflict;
    e.ground_truth_maneuver = EvasiveManeuver::EmergencyBraking;
    return e;
}

Decision sample_decision(const std::string& event_id) {
    Decision d;
    d.event_id = event_id;
    d.road_context = "road";
    d.other_car_position = "position";
    d.other_car_action = "action";
    d.event_context = "context";
    d.ego_car_evasive_maneuver = EvasiveManeuver::EmergencyBraking;
    d.ego_car_maneuver_justification = "justification";
    return d;
}

}  // namespace

TEST_CASE("save/load round-trip on generated stores") {
    std::mt19937_64 rng(7);
    for (size_t n : {0u, 3u, 50u, 900u}) {
        CaseStore store = testsup::random_store(rng, n, 16);
        const std::string path = temp_path("roundtrip.jsonl");
        store.save(path);
        const CaseStore loaded = CaseStore::load(path);
        CHECK(loaded == store);
        CHECK(loaded.size() == n);
        CHECK(loaded.digest() == store.digest());
        fs::remove(path);
    }
}

TEST_CASE("embedding vectors round-trip bit-exactly") {
    CaseStore store("m");
    Case c = testsup::make_case("c1", RiskType::ConflictWithPedestrian,
                                {0.1, -1.0 / 3.0, 1e-17, 0.9999999999999999});
    store.add_case(c);
    const std::string path = temp_path("bits.jsonl");
    store.save(path);
    const CaseStore loaded = CaseStore::load(path);
    const auto& v = *loaded.cases()[0].embedding;
    for (size_t i = 0; i < v.size(); ++i) CHECK(v[i] == (*c.embedding)[i]);
    fs::remove(path);
}

TEST_CASE("mixed embedding dimensions are rejected on load") {
    const std::string path = temp_path("dims.jsonl");
    {
        CaseStore store("m");
        store.add_case(testsup::make_case("a", RiskType::HeadOnConflict, {1, 0, 0}));
        store.save(path);
        std::ofstream out(path, std::ios::app);
        Case bad = testsup::make_case("b", RiskType::HeadOnConflict, {1, 0});
        CaseStore tmp("m");
        tmp.add_case(bad);
        const std::string tmp_path2 = temp_path("dims2.jsonl");
        tmp.save(tmp_path2);
        std::ifstream in(tmp_path2);
        std::string line;
        std::getline(in, line);  // header
        std::getline(in, line);
        out << line << "\n";
        fs::remove(tmp_path2);
    }
    CHECK_THROWS_WITH_AS(CaseStore::load(path), doctest::Contains("embedding length"),
                         Error);
    fs::remove(path);
}

TEST_CASE("duplicate case id is rejected") {
    CaseStore store("m");
    store.add_case(testsup::make_case("dup", RiskType::HeadOnConflict, {1, 0}));
    CHECK_THROWS_AS(store.add_case(testsup::make_case("dup", RiskType::HeadOnConflict, {0, 1})),
                    Error);
}

TEST_CASE("header-only file loads as an empty store") {
    const std::string path = temp_path("empty.jsonl");
    CaseStore().save(path);
    const CaseStore loaded = CaseStore::load(path);
    CHECK(loaded.empty());
    CHECK(loaded.partition(RiskType::HeadOnConflict).empty());
    fs::remove(path);
}

TEST_CASE("absent embeddings stay absent across persistence") {
    CaseStore store("m");
    Case c = testsup::make_case("noemb", RiskType::ConflictWithMergingVehicle, {});
    c.embedding.reset();
    store.add_case(c);
    const std::string path = temp_path("absent.jsonl");
    store.save(path);
    const CaseStore loaded = CaseStore::load(path);
    CHECK_FALSE(loaded.cases()[0].embedding.has_value());
    fs::remove(path);
}

TEST_CASE("save atomically replaces an existing file") {
    const std::string path = temp_path("atomic.jsonl");
    std::mt19937_64 rng(3);
    testsup::random_store(rng, 5, 4).save(path);
    const CaseStore bigger = testsup::random_store(rng, 9, 4);
    bigger.save(path);
    CHECK(CaseStore::load(path) == bigger);
    CHECK_FALSE(fs::exists(path + ".tmp"));
    fs::remove(path);
}

TEST_CASE("retain on an empty store fixes the dimension") {
    CaseStore store("m");
    const std::string id = store.retain(sample_event("e1"), sample_decision("e1"), {1, 0, 0, 0});
    CHECK(store.size() == 1);
    CHECK(store.embedding_dim() == 4);
    CHECK(store.at(id).source_event_id == "e1");
    CHECK_THROWS_AS(store.retain(sample_event("e2"), sample_decision("e2"), {1, 0, 0}), Error);
}

TEST_CASE("retain of a duplicate event id mints a fresh case id") {
    CaseStore store("m");
    const std::string a = store.retain(sample_event("e1"), sample_decision("e1"), {1, 0});
    const std::string b = store.retain(sample_event("e1"), sample_decision("e1"), {0, 1});
    CHECK(a != b);
    CHECK(store.at(a).source_event_id == store.at(b).source_event_id);
    CHECK(store.size() == 2);
}

TEST_CASE("retain rejects invalid decisions") {
    CaseStore store("m");
    Decision d = sample_decision("e1");
    d.other_car_action.clear();
    CHECK_THROWS_WITH_AS(store.retain(sample_event("e1"), d, {1, 0}),
                         doctest::Contains("empty value"), Error);
}

TEST_CASE("index partitions the store by risk type in insertion order") {
    std::mt19937_64 rng(11);
    const CaseStore store = testsup::random_store(rng, 200, 4);
    std::set<std::string> all_ids;
    size_t total = 0;
    for (RiskType t : all_risk_types()) {
        std::string prev;
        for (const std::string& id : store.partition(t)) {
            CHECK(store.at(id).risk_type == t);
            CHECK(all_ids.insert(id).second);  // pairwise disjoint
            CHECK(prev < id);                  // generator ids are ordered
            prev = id;
            ++total;
        }
    }
    CHECK(total == store.size());
}

TEST_CASE("snapshot is unaffected by later retains") {
    CaseStore store("m");
    store.retain(sample_event("e1"), sample_decision("e1"), {1, 0});
    const auto snap = store.snapshot();
    const auto snap2 = store.snapshot();
    CHECK(*snap == *snap2);
    for (int i = 0; i < 5; ++i) {
        const std::string id = "x" + std::to_string(i);
        store.retain(sample_event(id), sample_decision(id), {0, 1});
    }
    CHECK(snap->size() == 1);
    CHECK(store.size() == 6);
}
