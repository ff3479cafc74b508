#pragma once
#include <map>
#include <string>
#include <vector>

#include "cbr/dataset.hpp"
#include "cbr/metrics.hpp"
#include "cbr/pipeline.hpp"

namespace cbr {

struct SweepConfig {
    std::vector<std::string> model_ids;
    std::vector<PromptMode> modes;
    std::vector<SamplingMode> samplings;  // Similarity / Random axes
    std::vector<int> shot_counts;         // applied to each sampling
    bool include_zero_shot_baseline = true;
    uint64_t seed = 0;
    int concurrency = 1;
    std::string embed_model_id;
};

struct SweepCell {
    RunConfig run;
    std::string cell_id;  // content address
    std::string dir;
};

// Cross-product of the sweep axes (plus the 0-shot baseline per model/mode
// when requested), each with its content-addressed directory under out_dir.
std::vector<SweepCell> enumerate_cells(const SweepConfig& sweep, const std::string& out_dir,
                                       const std::string& dataset_digest,
                                       const std::string& store_digest);

struct SweepSummary {
    size_t executed = 0;
    size_t cached = 0;
    size_t failed = 0;
    std::vector<std::string> cell_dirs;
};

// Runs every cell through pipeline::run_batch; completed cells (matching
// content address on disk) are skipped. Per-cell failures are recorded and
// the sweep continues.
SweepSummary run_sweep(const SweepConfig& sweep, const std::vector<DatasetEvent>& test_events,
                       const CaseStore::Snapshot& store, EmbedClient* embed, ChatClient& chat,
                       const std::string& dataset_digest, const std::string& out_dir);

// Scores run records against the gold annotations, aligned by event_id.
MetricReport evaluate_run(const std::vector<RunRecord>& records,
                          const std::vector<DatasetEvent>& gold);

std::string report_to_json(const MetricReport& report);
void save_report(const MetricReport& report, const std::string& path);
MetricReport load_report(const std::string& path);

// Table 3 / Table 6 style rendering: a row per cell with three column
// groups, variances in brackets after each mean.
struct ReportRow {
    std::string label;          // e.g. "similarity/3"
    std::string sampling;
    int shots = 0;
    MetricReport report;
};

std::string render_overall_table(const std::vector<ReportRow>& rows);
std::string render_per_scenario_table(const std::vector<ReportRow>& rows);
std::string render_shot_curve_csv(const std::vector<ReportRow>& rows);
std::string render_overall_csv(const std::vector<ReportRow>& rows);

// Collects rows from the cell directories under run_dir; cells without a
// report are listed in `missing` and skipped.
std::vector<ReportRow> collect_rows(const std::string& run_dir,
                                    std::vector<std::string>* missing);

struct RetainSummary {
    size_t before = 0;
    size_t after = 0;
    size_t skipped = 0;  // failed or (under correct-only) incorrect decisions
};

enum class RetainPolicy { CorrectOnly, All };

// Appends qualifying decisions from a run as new cases with freshly embedded
// captions. No dedup: rerunning retain on the same run duplicates cases.
RetainSummary retain_from_run(const std::vector<RunRecord>& records,
                              const std::vector<DatasetEvent>& gold, CaseStore& store,
                              RetainPolicy policy, EmbedClient& embed,
                              const std::string& embed_model_id);

}  // namespace cbr
