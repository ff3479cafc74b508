#pragma once
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbr/taxonomy.hpp"

namespace cbr {

// All text metrics report on a 0-100 scale.

// Sentence BLEU, n = 1..4 modified precisions with add-one smoothing on
// match and total counts for n >= 2; orders where the candidate has no
// n-grams contribute precision 1; standard brevity penalty.
double bleu4(const std::string& candidate, const std::string& reference);

// LCS F-score over tokens with beta = 1.2.
double rouge_l(const std::string& candidate, const std::string& reference);

// Two-stage unigram alignment (exact, then Porter-stem match), Fmean with
// alpha = 0.9, fragmentation penalty 0.5 * (chunks/matches)^3. The alignment
// picks, among maximum matchings, one with the fewest chunks.
double meteor(const std::string& candidate, const std::string& reference);

struct CiderResult {
    std::vector<double> per_item;
    double mean = 0.0;
};

// Plain CIDEr: per-n (1..4) cosine of n-gram TF-IDF vectors, IDF from the
// reference corpus as log(N/df) with df clipped >= 1, averaged over n.
CiderResult cider(const std::vector<std::string>& candidates,
                  const std::vector<std::string>& references);

// Fraction of exact maneuver matches; a missing prediction (failed decision)
// counts as a mismatch.
double micro_accuracy(const std::vector<std::optional<EvasiveManeuver>>& predictions,
                      const std::vector<EvasiveManeuver>& gold);

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

struct ScoredField {
    double bleu4 = 0.0, bleu4_var = 0.0;
    double meteor = 0.0, meteor_var = 0.0;
    double rouge_l = 0.0, rouge_l_var = 0.0;
    double cider = 0.0, cider_var = 0.0;
};

struct MetricReport {
    ScoredField event_context;
    ScoredField justification;
    double maneuver_micro_accuracy = 0.0;
    std::map<RiskType, double> per_scenario_accuracy;
    std::map<RiskType, size_t> per_scenario_count;
    size_t n = 0;
};

// One scored item: predictions against their gold texts/maneuver, aligned by
// event. Absent prediction texts score as empty strings.
struct EvalItem {
    RiskType risk_type = RiskType::ConflictWithVehicleAhead;
    std::optional<EvasiveManeuver> predicted_maneuver;
    EvasiveManeuver gold_maneuver = EvasiveManeuver::EmergencyBraking;
    std::string predicted_event_context;
    std::string gold_event_context;
    std::string predicted_justification;
    std::string gold_justification;
};

MetricReport score_items(const std::vector<EvalItem>& items);

}  // namespace cbr
