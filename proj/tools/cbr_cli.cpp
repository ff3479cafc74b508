// cbr: CBR-augmented evasive-maneuver experiment harness.
// Thin wrapper over the cbrllm C API; exit codes 0 ok, 1 usage, 2 data,
// 3 gateway.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbrllm.h"

using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string endpoint;
    std::string embed_model = "nomic-embed-text";
    std::string chat_model = "llama3.3:70b";
    uint64_t seed = 0;
    int concurrency = 1;
    std::string out;
    int timeout_ms = 0;
    size_t mock_embed_dim = 0;
    std::string chat_script;
    std::string chat_text_field;
    std::string embed_vector_field;
    std::string chat_path;
    std::string embed_path;
};

std::string context_config(const GlobalOpts& g) {
    json j;
    std::string endpoint = g.endpoint;
    if (const char* env = std::getenv("CBR_ENDPOINT"); env && endpoint.empty()) endpoint = env;
    if (!endpoint.empty()) j["base_url"] = endpoint;
    int timeout = g.timeout_ms;
    if (const char* env = std::getenv("CBR_TIMEOUT_MS"); env && timeout == 0) {
        timeout = std::atoi(env);
    }
    if (timeout > 0) j["timeout_ms"] = timeout;
    j["chat_model"] = g.chat_model;
    j["embed_model"] = g.embed_model;
    if (g.mock_embed_dim > 0) j["mock_embed_dim"] = g.mock_embed_dim;
    if (!g.chat_script.empty()) j["chat_script_path"] = g.chat_script;
    if (!g.chat_text_field.empty()) j["chat_text_field"] = g.chat_text_field;
    if (!g.embed_vector_field.empty()) j["embed_vector_field"] = g.embed_vector_field;
    if (!g.chat_path.empty()) j["chat_path"] = g.chat_path;
    if (!g.embed_path.empty()) j["embed_path"] = g.embed_path;
    return j.dump();
}

int finish(cbr_context* ctx, int rc, char* output) {
    if (rc == CBR_OK) {
        if (output) std::cout << output << "\n";
    } else {
        std::cerr << "error: " << cbr_last_error(ctx) << "\n";
    }
    cbr_string_free(output);
    cbr_context_destroy(ctx);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CBR-augmented LLM evasive-maneuver experiment harness"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--endpoint", g.endpoint, "Model server base URL (env CBR_ENDPOINT)");
    app.add_option("--embed-model", g.embed_model, "Embedding model id");
    app.add_option("--chat-model", g.chat_model, "Chat model id");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--concurrency", g.concurrency, "In-flight events per batch");
    app.add_option("--out", g.out, "Output directory or file");
    app.add_option("--timeout-ms", g.timeout_ms, "Gateway timeout (env CBR_TIMEOUT_MS)");
    app.add_option("--mock-embed-dim", g.mock_embed_dim,
                   "Use the deterministic mock embedder with this dimension");
    app.add_option("--chat-script", g.chat_script,
                   "Use the scripted mock chat model from this JSON file");
    app.add_option("--chat-text-field", g.chat_text_field, "Response text path override");
    app.add_option("--embed-vector-field", g.embed_vector_field, "Response vector path override");
    app.add_option("--chat-endpoint-path", g.chat_path, "Chat endpoint path override");
    app.add_option("--embed-endpoint-path", g.embed_path, "Embeddings endpoint path override");

    // ingest
    std::string dataset_path;
    auto* ingest = app.add_subcommand("ingest", "Validate a dataset file and report counts");
    ingest->add_option("dataset", dataset_path, "Line-delimited JSON dataset")->required();

    // split
    size_t test_size = 100;
    std::string test_out = "test.jsonl", casebank_out = "casebank.jsonl";
    auto* split = app.add_subcommand("split", "Balanced test/casebank split");
    split->add_option("dataset", dataset_path)->required();
    split->add_option("--test-size", test_size, "Test set size (balanced across 7 types)");
    split->add_option("--test-out", test_out);
    split->add_option("--casebank-out", casebank_out);

    // build-case-base
    std::string store_path = "case_base.jsonl";
    auto* build = app.add_subcommand("build-case-base",
                                     "Embed casebank events into a case store");
    build->add_option("casebank", dataset_path)->required();
    build->add_option("--store", store_path, "Case store output path");

    // run
    std::string prompt_mode = "risk-unaware", sampling = "none", run_store;
    int shots = 0;
    bool cross_type = false, retry_malformed = false;
    std::string template_dir;
    auto* run = app.add_subcommand("run", "One batch over a test set");
    run->add_option("test", dataset_path, "Test dataset")->required();
    run->add_option("--store", run_store, "Case store (required for similarity/random)");
    run->add_option("--mode", prompt_mode, "risk-aware | risk-unaware");
    run->add_option("--sampling", sampling, "similarity | random | none");
    run->add_option("--shots", shots, "Few-shot example count");
    run->add_flag("--cross-type-random", cross_type, "Random sampling across all risk types");
    run->add_flag("--retry-malformed", retry_malformed, "Single re-ask on malformed output");
    run->add_option("--template-dir", template_dir, "Prompt template override directory");

    // sweep
    std::string sweep_store, modes_csv = "risk-unaware", samplings_csv = "random,similarity",
                shots_csv = "1,3,5";
    bool no_baseline = false;
    auto* sweep = app.add_subcommand("sweep", "Cross-product sweep with cached cells");
    sweep->add_option("test", dataset_path)->required();
    sweep->add_option("--store", sweep_store)->required();
    sweep->add_option("--modes", modes_csv, "Comma-separated prompt modes");
    sweep->add_option("--samplings", samplings_csv, "Comma-separated sampling methods");
    sweep->add_option("--shots", shots_csv, "Comma-separated shot counts");
    sweep->add_flag("--no-zero-shot-baseline", no_baseline, "Skip the 0-shot baseline cell");

    // evaluate
    std::string records_path;
    auto* evaluate = app.add_subcommand("evaluate", "Score a records file against gold");
    evaluate->add_option("records", records_path)->required();
    evaluate->add_option("gold", dataset_path, "Gold dataset")->required();

    // report
    std::string run_dir;
    auto* report = app.add_subcommand("report", "Render tables from a run/sweep directory");
    report->add_option("dir", run_dir)->required();

    // retain
    std::string retain_store, policy = "correct-only";
    auto* retain = app.add_subcommand("retain", "Append run decisions to the case base");
    retain->add_option("records", records_path)->required();
    retain->add_option("gold", dataset_path, "Gold dataset")->required();
    retain->add_option("--store", retain_store)->required();
    retain->add_option("--policy", policy, "correct-only | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    cbr_context* ctx = cbr_context_create(context_config(g).c_str());
    if (!ctx) {
        std::cerr << "error: invalid gateway configuration\n";
        return 1;
    }
    char* output = nullptr;

    auto split_csv = [](const std::string& csv) {
        std::vector<std::string> out;
        size_t pos = 0;
        while (pos <= csv.size()) {
            size_t comma = csv.find(',', pos);
            if (comma == std::string::npos) comma = csv.size();
            if (comma > pos) out.push_back(csv.substr(pos, comma - pos));
            pos = comma + 1;
        }
        return out;
    };

    if (ingest->parsed()) {
        const int rc = cbr_ingest(ctx, dataset_path.c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (split->parsed()) {
        const int rc = cbr_split(ctx, dataset_path.c_str(), test_size, g.seed,
                                 test_out.c_str(), casebank_out.c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (build->parsed()) {
        const int rc = cbr_build_case_base(ctx, dataset_path.c_str(), store_path.c_str(),
                                           &output);
        return finish(ctx, rc, output);
    }
    if (run->parsed()) {
        json params{{"test_path", dataset_path},
                    {"out_dir", g.out.empty() ? "run_out" : g.out},
                    {"model_id", g.chat_model},
                    {"embed_model_id", g.embed_model},
                    {"prompt_mode", prompt_mode},
                    {"sampling", sampling},
                    {"shots", shots},
                    {"seed", g.seed},
                    {"concurrency", g.concurrency},
                    {"cross_type_random", cross_type},
                    {"retry_malformed", retry_malformed},
                    {"template_dir", template_dir}};
        if (!run_store.empty()) params["store_path"] = run_store;
        const int rc = cbr_run(ctx, params.dump().c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (sweep->parsed()) {
        std::vector<int> shot_counts;
        for (const auto& s : split_csv(shots_csv)) shot_counts.push_back(std::stoi(s));
        json params{{"test_path", dataset_path},
                    {"store_path", sweep_store},
                    {"out_dir", g.out.empty() ? "sweep_out" : g.out},
                    {"model_ids", std::vector<std::string>{g.chat_model}},
                    {"modes", split_csv(modes_csv)},
                    {"samplings", split_csv(samplings_csv)},
                    {"shot_counts", shot_counts},
                    {"include_zero_shot_baseline", !no_baseline},
                    {"seed", g.seed},
                    {"concurrency", g.concurrency}};
        const int rc = cbr_sweep(ctx, params.dump().c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (evaluate->parsed()) {
        const int rc = cbr_evaluate(ctx, records_path.c_str(), dataset_path.c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (report->parsed()) {
        const int rc = cbr_report(ctx, run_dir.c_str(), &output);
        return finish(ctx, rc, output);
    }
    if (retain->parsed()) {
        const int rc = cbr_retain(ctx, records_path.c_str(), dataset_path.c_str(),
                                  retain_store.c_str(), policy.c_str(), &output);
        return finish(ctx, rc, output);
    }

    cbr_context_destroy(ctx);
    return 1;
}
