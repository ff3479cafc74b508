#include "cbr/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cbr/digest.hpp"
#include "cbr/errors.hpp"

namespace cbr {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<SweepCell> enumerate_cells(const SweepConfig& sweep, const std::string& out_dir,
                                       const std::string& dataset_digest,
                                       const std::string& store_digest) {
    if (sweep.model_ids.empty() || sweep.modes.empty()) {
        throw usage_error("InvalidConfig", "sweep needs at least one model and one mode");
    }

    std::vector<SweepCell> cells;
    auto add_cell = [&](const std::string& model, PromptMode mode, SamplingMode sampling,
                        int shots) {
        SweepCell cell;
        cell.run.model_id = model;
        cell.run.embed_model_id = sweep.embed_model_id;
        cell.run.prompt.mode = mode;
        cell.run.prompt.shots = shots;
        cell.run.sampling = sampling;
        cell.run.seed = sweep.seed;
        cell.run.concurrency = sweep.concurrency;
        cell.cell_id = digest_hex(run_config_json(cell.run) + "|" +
                                  std::to_string(sweep.seed) + "|" + dataset_digest + "|" +
                                  store_digest);
        cell.dir = (fs::path(out_dir) / "cells" / cell.cell_id).string();
        cells.push_back(std::move(cell));
    };

    for (const std::string& model : sweep.model_ids) {
        for (PromptMode mode : sweep.modes) {
            if (sweep.include_zero_shot_baseline) {
                add_cell(model, mode, SamplingMode::None, 0);
            }
            for (SamplingMode sampling : sweep.samplings) {
                for (int shots : sweep.shot_counts) {
                    if (shots == 0) continue;  // the baseline cell covers it
                    add_cell(model, mode, sampling, shots);
                }
            }
        }
    }
    return cells;
}

namespace {

bool cell_complete(const std::string& dir) {
    return fs::exists(fs::path(dir) / "records.jsonl") &&
           fs::exists(fs::path(dir) / "manifest.json") &&
           fs::exists(fs::path(dir) / "report.json");
}

void write_cell_meta(const SweepCell& cell) {
    json j{{"cell_id", cell.cell_id},
           {"config", json::parse(run_config_json(cell.run))}};
    std::ofstream out(fs::path(cell.dir) / "cell.json", std::ios::trunc);
    out << j.dump(2) << "\n";
}

}  // namespace

SweepSummary run_sweep(const SweepConfig& sweep, const std::vector<DatasetEvent>& test_events,
                       const CaseStore::Snapshot& store, EmbedClient* embed, ChatClient& chat,
                       const std::string& dataset_digest, const std::string& out_dir) {
    const auto cells = enumerate_cells(sweep, out_dir, dataset_digest, store->digest());

    std::vector<ScdsEvent> events;
    for (const DatasetEvent& de : test_events) events.push_back(de.event);

    SweepSummary summary;
    for (const SweepCell& cell : cells) {
        summary.cell_dirs.push_back(cell.dir);
        if (cell_complete(cell.dir)) {
            ++summary.cached;
            continue;
        }
        try {
            fs::create_directories(cell.dir);
            write_cell_meta(cell);
            const BatchResult result = run_batch(cell.run, store, events, embed, chat);
            save_records(result.records, (fs::path(cell.dir) / "records.jsonl").string());
            save_manifest(result.manifest, (fs::path(cell.dir) / "manifest.json").string());
            const MetricReport report = evaluate_run(result.records, test_events);
            save_report(report, (fs::path(cell.dir) / "report.json").string());
            ++summary.executed;
        } catch (const Error& e) {
            ++summary.failed;
            std::ofstream out(fs::path(cell.dir) / "error.txt", std::ios::trunc);
            out << e.code() << ": " << e.what() << "\n";
        }
    }
    return summary;
}

MetricReport evaluate_run(const std::vector<RunRecord>& records,
                          const std::vector<DatasetEvent>& gold) {
    std::map<std::string, const RunRecord*> by_id;
    for (const RunRecord& r : records) by_id[r.event_id] = &r;

    std::vector<EvalItem> items;
    for (const DatasetEvent& de : gold) {
        auto it = by_id.find(de.event.event_id);
        if (it == by_id.end()) {
            throw data_error("AlignmentError",
                             "no run record for event " + de.event.event_id);
        }
        EvalItem item;
        item.risk_type = de.event.risk_type;
        item.gold_maneuver = de.event.ground_truth_maneuver;
        item.gold_event_context = de.event_context.value_or("");
        item.gold_justification = de.ego_car_maneuver_justification.value_or("");
        // failed decisions score as mismatches with empty texts
        if (it->second->decision) {
            const Decision& d = *it->second->decision;
            item.predicted_maneuver = d.ego_car_evasive_maneuver;
            item.predicted_event_context = d.event_context;
            item.predicted_justification = d.ego_car_maneuver_justification;
        }
        items.push_back(std::move(item));
    }
    return score_items(items);
}

namespace {

json field_to_json(const ScoredField& f) {
    return json{{"bleu4", f.bleu4},     {"bleu4_var", f.bleu4_var},
                {"meteor", f.meteor},   {"meteor_var", f.meteor_var},
                {"rouge_l", f.rouge_l}, {"rouge_l_var", f.rouge_l_var},
                {"cider", f.cider},     {"cider_var", f.cider_var}};
}

ScoredField field_from_json(const json& j) {
    ScoredField f;
    f.bleu4 = j.at("bleu4");
    f.bleu4_var = j.at("bleu4_var");
    f.meteor = j.at("meteor");
    f.meteor_var = j.at("meteor_var");
    f.rouge_l = j.at("rouge_l");
    f.rouge_l_var = j.at("rouge_l_var");
    f.cider = j.at("cider");
    f.cider_var = j.at("cider_var");
    return f;
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
    json per_acc = json::object(), per_count = json::object();
    for (const auto& [type, acc] : report.per_scenario_accuracy) {
        per_acc[std::string(display(type))] = acc;
    }
    for (const auto& [type, count] : report.per_scenario_count) {
        per_count[std::string(display(type))] = count;
    }
    json j{{"event_context", field_to_json(report.event_context)},
           {"justification", field_to_json(report.justification)},
           {"maneuver_micro_accuracy", report.maneuver_micro_accuracy},
           {"per_scenario_accuracy", per_acc},
           {"per_scenario_count", per_count},
           {"n", report.n}};
    return j.dump(2);
}

void save_report(const MetricReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("IoError", "cannot write report: " + path);
    out << report_to_json(report) << "\n";
}

MetricReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("IoError", "cannot open report: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error("ParseError", std::string("report: ") + e.what());
    }
    MetricReport report;
    report.event_context = field_from_json(j.at("event_context"));
    report.justification = field_from_json(j.at("justification"));
    report.maneuver_micro_accuracy = j.at("maneuver_micro_accuracy");
    for (auto& [label, acc] : j.at("per_scenario_accuracy").items()) {
        report.per_scenario_accuracy[parse_risk_type(label)] = acc.get<double>();
    }
    for (auto& [label, count] : j.at("per_scenario_count").items()) {
        report.per_scenario_count[parse_risk_type(label)] = count.get<size_t>();
    }
    report.n = j.at("n");
    return report;
}

namespace {

std::string fmt(double v, int prec = 2) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// "mean(variance)" per Table 3's bracket convention
std::string fmt_mv(double mean, double var) { return fmt(mean) + "(" + fmt(var) + ")"; }

}  // namespace

std::string render_overall_table(const std::vector<ReportRow>& rows) {
    std::vector<std::vector<std::string>> table;
    table.push_back({"Cell", "EC-BLEU4", "EC-METEOR", "EC-ROUGE_L", "EC-CIDEr", "Micro-Acc",
                     "J-BLEU4", "J-METEOR", "J-ROUGE_L", "J-CIDEr"});
    for (const ReportRow& row : rows) {
        const ScoredField& ec = row.report.event_context;
        const ScoredField& ju = row.report.justification;
        table.push_back({row.label,
                         fmt_mv(ec.bleu4, ec.bleu4_var),
                         fmt_mv(ec.meteor, ec.meteor_var),
                         fmt_mv(ec.rouge_l, ec.rouge_l_var),
                         fmt_mv(ec.cider, ec.cider_var),
                         fmt(row.report.maneuver_micro_accuracy, 3),
                         fmt_mv(ju.bleu4, ju.bleu4_var),
                         fmt_mv(ju.meteor, ju.meteor_var),
                         fmt_mv(ju.rouge_l, ju.rouge_l_var),
                         fmt_mv(ju.cider, ju.cider_var)});
    }

    std::vector<size_t> widths(table[0].size(), 0);
    for (const auto& row : table) {
        for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::ostringstream out;
    for (const auto& row : table) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2) << row[i];
        }
        out << "\n";
    }
    return out.str();
}

std::string render_per_scenario_table(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(40) << "Risk Type";
    for (const ReportRow& row : rows) out << std::setw(16) << row.label;
    out << "\n";
    for (RiskType t : all_risk_types()) {
        out << std::setw(40) << display(t);
        for (const ReportRow& row : rows) {
            auto it = row.report.per_scenario_accuracy.find(t);
            out << std::setw(16)
                << (it == row.report.per_scenario_accuracy.end() ? "-" : fmt(it->second, 4));
        }
        out << "\n";
    }
    return out.str();
}

std::string render_shot_curve_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "sampling,shots,micro_accuracy\n";
    for (const ReportRow& row : rows) {
        out << row.sampling << "," << row.shots << ","
            << fmt(row.report.maneuver_micro_accuracy, 4) << "\n";
    }
    return out.str();
}

std::string render_overall_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "cell,sampling,shots,ec_bleu4,ec_bleu4_var,ec_meteor,ec_meteor_var,ec_rouge_l,"
           "ec_rouge_l_var,ec_cider,ec_cider_var,micro_accuracy,j_bleu4,j_bleu4_var,j_meteor,"
           "j_meteor_var,j_rouge_l,j_rouge_l_var,j_cider,j_cider_var\n";
    for (const ReportRow& row : rows) {
        const ScoredField& ec = row.report.event_context;
        const ScoredField& ju = row.report.justification;
        out << row.label << "," << row.sampling << "," << row.shots;
        for (double v : {ec.bleu4, ec.bleu4_var, ec.meteor, ec.meteor_var, ec.rouge_l,
                         ec.rouge_l_var, ec.cider, ec.cider_var,
                         row.report.maneuver_micro_accuracy, ju.bleu4, ju.bleu4_var, ju.meteor,
                         ju.meteor_var, ju.rouge_l, ju.rouge_l_var, ju.cider, ju.cider_var}) {
            out << "," << fmt(v, 6);
        }
        out << "\n";
    }
    return out.str();
}

std::vector<ReportRow> collect_rows(const std::string& run_dir,
                                    std::vector<std::string>* missing) {
    std::vector<ReportRow> rows;
    const fs::path cells = fs::path(run_dir) / "cells";
    if (!fs::exists(cells)) {
        if (missing) missing->push_back(cells.string());
        return rows;
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(cells)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());

    for (const fs::path& dir : dirs) {
        if (!fs::exists(dir / "report.json") || !fs::exists(dir / "cell.json")) {
            if (missing) missing->push_back(dir.string());
            continue;
        }
        json cell;
        std::ifstream(dir / "cell.json") >> cell;
        const json& cfg = cell.at("config");
        ReportRow row;
        row.sampling = cfg.value("sampling", "none");
        row.shots = cfg.value("shots", 0);
        row.label = cfg.value("model_id", "") + "/" + cfg.value("prompt_mode", "") + "/" +
                    row.sampling + "/" + std::to_string(row.shots);
        row.report = load_report((dir / "report.json").string());
        rows.push_back(std::move(row));
    }
    // stable presentation order: sampling group, then shots
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.label.substr(0, a.label.find_last_of('/')) !=
            b.label.substr(0, b.label.find_last_of('/'))) {
            return a.label < b.label;
        }
        return a.shots < b.shots;
    });
    return rows;
}

RetainSummary retain_from_run(const std::vector<RunRecord>& records,
                              const std::vector<DatasetEvent>& gold, CaseStore& store,
                              RetainPolicy policy, EmbedClient& embed,
                              const std::string& embed_model_id) {
    std::map<std::string, const DatasetEvent*> gold_by_id;
    for (const DatasetEvent& de : gold) gold_by_id[de.event.event_id] = &de;

    RetainSummary summary;
    summary.before = store.size();
    for (const RunRecord& r : records) {
        if (!r.decision || !r.decision->valid()) {
            ++summary.skipped;
            continue;
        }
        auto it = gold_by_id.find(r.event_id);
        if (it == gold_by_id.end()) {
            ++summary.skipped;
            continue;
        }
        const DatasetEvent& de = *it->second;
        if (policy == RetainPolicy::CorrectOnly &&
            r.decision->ego_car_evasive_maneuver != de.event.ground_truth_maneuver) {
            ++summary.skipped;
            continue;
        }
        const auto vec = embed.embed_text({embed_model_id, de.event.caption});
        store.retain(de.event, *r.decision, vec);
    }
    summary.after = store.size();
    return summary;
}

}  // namespace cbr
