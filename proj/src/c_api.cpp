#include "cbrllm.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cbr/dataset.hpp"
#include "cbr/errors.hpp"
#include "cbr/experiment.hpp"
#include "cbr/gateway.hpp"
#include "cbr/metrics.hpp"
#include "cbr/pipeline.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct cbr_context {
    cbr::GatewayConfig gateway;
    cbr::EndpointProfile profile;
    std::string chat_model = "llama3.3:70b";
    std::string embed_model = "nomic-embed-text";
    size_t mock_embed_dim = 0;         // > 0: mock embedder
    std::string chat_script_path;      // nonempty: scripted mock chat
    std::string last_error;

    std::unique_ptr<cbr::EmbedClient> make_embed() const {
        if (mock_embed_dim > 0) return cbr::make_mock_embed_client(mock_embed_dim);
        return cbr::make_http_embed_client(gateway, profile);
    }
    std::unique_ptr<cbr::ChatClient> make_chat() const {
        if (!chat_script_path.empty()) return cbr::load_scripted_chat_client(chat_script_path);
        return cbr::make_http_chat_client(gateway, profile);
    }
};

namespace {

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

int fail(cbr_context* ctx, const cbr::Error& e) {
    if (ctx) ctx->last_error = std::string(e.code()) + ": " + e.what();
    return static_cast<int>(e.error_class());
}

int fail_other(cbr_context* ctx, const std::exception& e) {
    if (ctx) ctx->last_error = e.what();
    return CBR_ERR_DATA;
}

template <typename Fn>
int guarded(cbr_context* ctx, Fn&& fn) {
    if (!ctx) return CBR_ERR_USAGE;
    ctx->last_error.clear();
    try {
        fn();
        return CBR_OK;
    } catch (const cbr::Error& e) {
        return fail(ctx, e);
    } catch (const std::exception& e) {
        return fail_other(ctx, e);
    }
}

cbr::RunConfig run_config_from_json(const cbr_context& ctx, const json& p) {
    cbr::RunConfig cfg;
    cfg.model_id = p.value("model_id", ctx.chat_model);
    cfg.embed_model_id = p.value("embed_model_id", ctx.embed_model);
    cfg.gateway = ctx.gateway;
    cfg.prompt.mode = cbr::parse_prompt_mode(p.value("prompt_mode", "risk-unaware"));
    cfg.prompt.shots = p.value("shots", 0);
    cfg.prompt.examples_as_messages = p.value("examples_as_messages", false);
    cfg.prompt.template_dir = p.value("template_dir", "");
    cfg.sampling = cbr::parse_sampling_mode(p.value("sampling", "none"));
    cfg.cross_type_random = p.value("cross_type_random", false);
    cfg.seed = p.value("seed", uint64_t{0});
    cfg.concurrency = p.value("concurrency", 1);
    cfg.retry_malformed = p.value("retry_malformed", false);
    return cfg;
}

json parse_params(const char* params_json) {
    if (!params_json) throw cbr::usage_error("InvalidConfig", "params_json is required");
    try {
        return json::parse(params_json);
    } catch (const json::exception& e) {
        throw cbr::usage_error("InvalidConfig", std::string("params: ") + e.what());
    }
}

}  // namespace

cbr_context* cbr_context_create(const char* config_json) {
    auto ctx = std::make_unique<cbr_context>();
    if (config_json && *config_json) {
        json j;
        try {
            j = json::parse(config_json);
        } catch (const json::exception&) {
            return nullptr;
        }
        ctx->gateway.base_url = j.value("base_url", ctx->gateway.base_url);
        ctx->gateway.timeout_ms = j.value("timeout_ms", ctx->gateway.timeout_ms);
        ctx->gateway.max_retries = j.value("max_retries", ctx->gateway.max_retries);
        ctx->gateway.backoff_base_ms = j.value("backoff_base_ms", ctx->gateway.backoff_base_ms);
        ctx->profile.chat_path = j.value("chat_path", ctx->profile.chat_path);
        ctx->profile.embed_path = j.value("embed_path", ctx->profile.embed_path);
        ctx->profile.chat_text_field =
            j.value("chat_text_field", ctx->profile.chat_text_field);
        ctx->profile.embed_vector_field =
            j.value("embed_vector_field", ctx->profile.embed_vector_field);
        ctx->chat_model = j.value("chat_model", ctx->chat_model);
        ctx->embed_model = j.value("embed_model", ctx->embed_model);
        ctx->mock_embed_dim = j.value("mock_embed_dim", size_t{0});
        ctx->chat_script_path = j.value("chat_script_path", "");
        if (ctx->gateway.timeout_ms <= 0) return nullptr;
    }
    return ctx.release();
}

void cbr_context_destroy(cbr_context* ctx) { delete ctx; }

const char* cbr_last_error(const cbr_context* ctx) {
    return ctx ? ctx->last_error.c_str() : "null context";
}

void cbr_string_free(char* s) { std::free(s); }

const char* cbr_version(void) { return "0.1.0"; }

int cbr_ingest(cbr_context* ctx, const char* dataset_path, char** summary_json) {
    return guarded(ctx, [&] {
        const cbr::Dataset ds = cbr::ingest_dataset(dataset_path);
        json counts = json::object();
        for (const auto& [type, count] : ds.per_type_counts()) {
            counts[std::string(display(type))] = count;
        }
        json out{{"events", ds.events.size()},
                 {"per_type_counts", counts},
                 {"source_digest", ds.source_digest},
                 {"warnings", ds.warnings}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}

int cbr_split(cbr_context* ctx, const char* dataset_path, size_t test_size, uint64_t seed,
              const char* test_out_path, const char* casebank_out_path, char** summary_json) {
    return guarded(ctx, [&] {
        const cbr::Dataset ds = cbr::ingest_dataset(dataset_path);
        const cbr::Split split = cbr::split_balanced(ds, test_size, seed);
        cbr::save_dataset(split.test, test_out_path);
        cbr::save_dataset(split.casebank, casebank_out_path);

        json test_counts = json::object();
        std::map<cbr::RiskType, size_t> per_type;
        for (const auto& de : split.test) per_type[de.event.risk_type]++;
        for (const auto& [type, count] : per_type) {
            test_counts[std::string(display(type))] = count;
        }
        json out{{"test", split.test.size()},
                 {"casebank", split.casebank.size()},
                 {"test_per_type_counts", test_counts},
                 {"seed", seed}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}

int cbr_build_case_base(cbr_context* ctx, const char* casebank_path,
                        const char* store_out_path, char** summary_json) {
    return guarded(ctx, [&] {
        const cbr::Dataset ds = cbr::ingest_dataset(casebank_path);
        auto embed = ctx->make_embed();
        const cbr::CaseStore store =
            cbr::build_case_base(ds.events, *embed, ctx->embed_model, store_out_path);
        json out{{"cases", store.size()},
                 {"embedding_model_id", store.embedding_model_id()},
                 {"embedding_dim", store.embedding_dim() ? json(*store.embedding_dim()) : json()},
                 {"store_digest", store.digest()},
                 {"path", store_out_path}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}

int cbr_run(cbr_context* ctx, const char* params_json, char** summary_json) {
    return guarded(ctx, [&] {
        const json p = parse_params(params_json);
        if (!p.contains("test_path") || !p.contains("out_dir")) {
            throw cbr::usage_error("InvalidConfig", "run params need test_path and out_dir");
        }
        const cbr::Dataset test = cbr::ingest_dataset(p["test_path"].get<std::string>());
        const cbr::RunConfig cfg = run_config_from_json(*ctx, p);
        cfg.validate();

        cbr::CaseStore::Snapshot store;
        if (p.contains("store_path") && !p["store_path"].get<std::string>().empty()) {
            store = cbr::CaseStore::load(p["store_path"].get<std::string>()).snapshot();
        } else {
            store = cbr::CaseStore().snapshot();
        }

        auto embed = ctx->make_embed();
        auto chat = ctx->make_chat();
        std::vector<cbr::ScdsEvent> events;
        for (const auto& de : test.events) events.push_back(de.event);

        const cbr::BatchResult result = cbr::run_batch(cfg, store, events, embed.get(), *chat);
        const std::string out_dir = p["out_dir"].get<std::string>();
        fs::create_directories(out_dir);
        cbr::save_records(result.records, (fs::path(out_dir) / "records.jsonl").string());
        cbr::save_manifest(result.manifest, (fs::path(out_dir) / "manifest.json").string());
        const cbr::MetricReport report = cbr::evaluate_run(result.records, test.events);
        cbr::save_report(report, (fs::path(out_dir) / "report.json").string());

        json out{{"out_dir", out_dir},
                 {"n_events", result.manifest.n_events},
                 {"n_failures", result.manifest.n_failures},
                 {"micro_accuracy", report.maneuver_micro_accuracy}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}

int cbr_sweep(cbr_context* ctx, const char* params_json, char** summary_json) {
    return guarded(ctx, [&] {
        const json p = parse_params(params_json);
        for (const char* key : {"test_path", "store_path", "out_dir"}) {
            if (!p.contains(key)) {
                throw cbr::usage_error("InvalidConfig",
                                       std::string("sweep params need ") + key);
            }
        }
        const cbr::Dataset test = cbr::ingest_dataset(p["test_path"].get<std::string>());
        const auto store = cbr::CaseStore::load(p["store_path"].get<std::string>()).snapshot();

        cbr::SweepConfig sweep;
        sweep.model_ids =
            p.value("model_ids", std::vector<std::string>{ctx->chat_model});
        for (const auto& m : p.value("modes", std::vector<std::string>{"risk-unaware"})) {
            sweep.modes.push_back(cbr::parse_prompt_mode(m));
        }
        for (const auto& s :
             p.value("samplings", std::vector<std::string>{"random", "similarity"})) {
            sweep.samplings.push_back(cbr::parse_sampling_mode(s));
        }
        sweep.shot_counts = p.value("shot_counts", std::vector<int>{1, 3, 5});
        sweep.include_zero_shot_baseline = p.value("include_zero_shot_baseline", true);
        sweep.seed = p.value("seed", uint64_t{0});
        sweep.concurrency = p.value("concurrency", 1);
        sweep.embed_model_id = ctx->embed_model;

        auto embed = ctx->make_embed();
        auto chat = ctx->make_chat();
        const std::string out_dir = p["out_dir"].get<std::string>();
        const cbr::SweepSummary summary = cbr::run_sweep(
            sweep, test.events, store, embed.get(), *chat, test.source_digest, out_dir);

        json out{{"out_dir", out_dir},
                 {"cells", summary.cell_dirs.size()},
                 {"executed", summary.executed},
                 {"cached", summary.cached},
                 {"failed", summary.failed},
                 {"cell_dirs", summary.cell_dirs}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}

int cbr_evaluate(cbr_context* ctx, const char* records_path, const char* dataset_path,
                 char** report_json) {
    return guarded(ctx, [&] {
        const auto records = cbr::load_records(records_path);
        const cbr::Dataset gold = cbr::ingest_dataset(dataset_path);
        const cbr::MetricReport report = cbr::evaluate_run(records, gold.events);
        if (report_json) *report_json = dup_string(cbr::report_to_json(report));
    });
}

int cbr_report(cbr_context* ctx, const char* run_dir, char** tables_text) {
    return guarded(ctx, [&] {
        std::vector<std::string> missing;
        std::vector<cbr::ReportRow> rows = cbr::collect_rows(run_dir, &missing);

        // a bare run directory (no cells/) still reports itself
        if (rows.empty() && fs::exists(fs::path(run_dir) / "report.json")) {
            cbr::ReportRow row;
            row.label = "run";
            row.sampling = "-";
            row.report = cbr::load_report((fs::path(run_dir) / "report.json").string());
            rows.push_back(std::move(row));
            missing.clear();
        }

        std::ostringstream out;
        if (!missing.empty()) {
            out << "MissingCell:\n";
            for (const std::string& m : missing) out << "  " << m << "\n";
            out << "\n";
        }
        out << "Overall (mean(variance), Micro-Acc as fraction)\n"
            << cbr::render_overall_table(rows) << "\n";
        out << "Per-scenario micro-accuracy\n"
            << cbr::render_per_scenario_table(rows) << "\n";
        out << "Shot curve (CSV)\n" << cbr::render_shot_curve_csv(rows) << "\n";
        out << "Overall (CSV)\n" << cbr::render_overall_csv(rows);

        const fs::path dir(run_dir);
        std::ofstream((dir / "summary.txt")) << out.str();
        std::ofstream((dir / "summary.csv")) << cbr::render_overall_csv(rows);
        std::ofstream((dir / "shot_curve.csv")) << cbr::render_shot_curve_csv(rows);

        if (tables_text) *tables_text = dup_string(out.str());
    });
}

int cbr_retain(cbr_context* ctx, const char* records_path, const char* dataset_path,
               const char* store_path, const char* policy, char** summary_json) {
    return guarded(ctx, [&] {
        const std::string pol = policy ? policy : "correct-only";
        cbr::RetainPolicy retain_policy;
        if (pol == "correct-only") {
            retain_policy = cbr::RetainPolicy::CorrectOnly;
        } else if (pol == "all") {
            retain_policy = cbr::RetainPolicy::All;
        } else {
            throw cbr::usage_error("InvalidConfig",
                                   "policy must be 'correct-only' or 'all', got '" + pol + "'");
        }

        const auto records = cbr::load_records(records_path);
        const cbr::Dataset gold = cbr::ingest_dataset(dataset_path);
        cbr::CaseStore store = cbr::CaseStore::load(store_path);
        auto embed = ctx->make_embed();
        const cbr::RetainSummary summary = cbr::retain_from_run(
            records, gold.events, store, retain_policy, *embed, store.embedding_model_id());
        store.save(store_path);

        json out{{"before", summary.before},
                 {"after", summary.after},
                 {"added", summary.after - summary.before},
                 {"skipped", summary.skipped},
                 {"policy", pol}};
        if (summary_json) *summary_json = dup_string(out.dump(2));
    });
}
