#include "cbr/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "cbr/errors.hpp"
#include "cbr/text.hpp"

namespace cbr {

namespace {

using Tokens = std::vector<std::string>;

std::map<Tokens, int> ngram_counts(const Tokens& tokens, size_t n) {
    std::map<Tokens, int> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)]++;
    }
    return counts;
}

}  // namespace

double bleu4(const std::string& candidate, const std::string& reference) {
    const Tokens cand = tokenize(candidate);
    const Tokens ref = tokenize(reference);
    if (cand.empty()) return 0.0;

    double log_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        const auto cand_ngrams = ngram_counts(cand, n);
        const auto ref_ngrams = ngram_counts(ref, n);
        int matches = 0, total = 0;
        for (const auto& [gram, count] : cand_ngrams) {
            total += count;
            auto it = ref_ngrams.find(gram);
            if (it != ref_ngrams.end()) matches += std::min(count, it->second);
        }
        double p;
        if (total == 0) {
            p = 1.0;  // no n-grams at this order
        } else if (n == 1) {
            p = static_cast<double>(matches) / total;
        } else {
            p = static_cast<double>(matches + 1) / (total + 1);
        }
        if (p == 0.0) return 0.0;
        log_sum += 0.25 * std::log(p);
    }

    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_sum);
}

namespace {

size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double rouge_l(const std::string& candidate, const std::string& reference) {
    const Tokens cand = tokenize(candidate);
    const Tokens ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0) return 0.0;
    const double p = lcs / cand.size();
    const double r = lcs / ref.size();
    constexpr double beta = 1.2;
    const double beta2 = beta * beta;
    return 100.0 * ((1.0 + beta2) * r * p) / (r + beta2 * p);
}

namespace {

// Meteor alignment search. Lexicographic objective: most exact-stage pairs,
// then most total pairs, then fewest chunks. Bounded DFS; large inputs fall
// back to greedy in-order matching, which the fixtures stay well under.
struct AlignSearch {
    const Tokens& cand;
    const Tokens& ref;
    std::vector<std::string> cand_stems, ref_stems;
    std::vector<char> ref_used;
    // current path: assigned ref index per cand index, -1 = unmatched
    std::vector<int> assign;
    long nodes = 0;
    static constexpr long kNodeBudget = 400000;
    bool exhausted_budget = false;

    int best_exact = -1, best_total = -1, best_chunks = 1 << 30;

    AlignSearch(const Tokens& c, const Tokens& r) : cand(c), ref(r) {
        for (const auto& w : cand) cand_stems.push_back(porter_stem(w));
        for (const auto& w : ref) ref_stems.push_back(porter_stem(w));
        ref_used.assign(ref.size(), 0);
        assign.assign(cand.size(), -1);
    }

    void evaluate_leaf() {
        int exact = 0, total = 0, chunks = 0;
        // a chunk continues only while both cand and ref indices advance by 1
        int prev_cand = -2, prev_ref = -2;
        for (size_t i = 0; i < assign.size(); ++i) {
            if (assign[i] < 0) continue;
            ++total;
            if (cand[i] == ref[assign[i]]) ++exact;
            if (static_cast<int>(i) != prev_cand + 1 || assign[i] != prev_ref + 1) ++chunks;
            prev_cand = static_cast<int>(i);
            prev_ref = assign[i];
        }
        if (exact > best_exact ||
            (exact == best_exact && total > best_total) ||
            (exact == best_exact && total == best_total && chunks < best_chunks)) {
            best_exact = exact;
            best_total = total;
            best_chunks = chunks;
        }
    }

    void dfs(size_t i) {
        if (++nodes > kNodeBudget) {
            exhausted_budget = true;
            return;
        }
        if (i == cand.size()) {
            evaluate_leaf();
            return;
        }
        for (size_t j = 0; j < ref.size() && !exhausted_budget; ++j) {
            if (ref_used[j]) continue;
            if (cand[i] != ref[j] && cand_stems[i] != ref_stems[j]) continue;
            ref_used[j] = 1;
            assign[i] = static_cast<int>(j);
            dfs(i + 1);
            ref_used[j] = 0;
            assign[i] = -1;
        }
        if (!exhausted_budget) dfs(i + 1);  // leave cand[i] unmatched
    }

    // Greedy fallback: exact stage then stem stage, first unused ref in order.
    void greedy() {
        std::fill(ref_used.begin(), ref_used.end(), 0);
        std::fill(assign.begin(), assign.end(), -1);
        for (size_t i = 0; i < cand.size(); ++i) {
            for (size_t j = 0; j < ref.size(); ++j) {
                if (!ref_used[j] && cand[i] == ref[j]) {
                    ref_used[j] = 1;
                    assign[i] = static_cast<int>(j);
                    break;
                }
            }
        }
        for (size_t i = 0; i < cand.size(); ++i) {
            if (assign[i] >= 0) continue;
            for (size_t j = 0; j < ref.size(); ++j) {
                if (!ref_used[j] && cand_stems[i] == ref_stems[j]) {
                    ref_used[j] = 1;
                    assign[i] = static_cast<int>(j);
                    break;
                }
            }
        }
        best_exact = -1;
        best_total = -1;
        best_chunks = 1 << 30;
        evaluate_leaf();
    }

    // returns (matches, chunks)
    std::pair<int, int> run() {
        dfs(0);
        if (exhausted_budget) greedy();
        return {best_total, best_chunks};
    }
};

}  // namespace

double meteor(const std::string& candidate, const std::string& reference) {
    const Tokens cand = tokenize(candidate);
    const Tokens ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    AlignSearch search(cand, ref);
    const auto [matches, chunks] = search.run();
    if (matches == 0) return 0.0;

    const double p = static_cast<double>(matches) / cand.size();
    const double r = static_cast<double>(matches) / ref.size();
    constexpr double alpha = 0.9;
    const double fmean = (p * r) / (alpha * p + (1.0 - alpha) * r);
    const double frag = static_cast<double>(chunks) / matches;
    const double penalty = 0.5 * frag * frag * frag;
    return 100.0 * fmean * (1.0 - penalty);
}

CiderResult cider(const std::vector<std::string>& candidates,
                  const std::vector<std::string>& references) {
    if (candidates.size() != references.size()) {
        throw data_error("LengthMismatch", "candidate and reference counts differ");
    }
    CiderResult result;
    if (candidates.empty()) return result;

    const size_t corpus_size = references.size();
    std::vector<Tokens> ref_tokens, cand_tokens;
    for (const auto& r : references) ref_tokens.push_back(tokenize(r));
    for (const auto& c : candidates) cand_tokens.push_back(tokenize(c));

    // document frequencies over the reference corpus, per order
    std::array<std::map<Tokens, int>, 4> df;
    for (const Tokens& ref : ref_tokens) {
        for (size_t n = 1; n <= 4; ++n) {
            for (const auto& [gram, count] : ngram_counts(ref, n)) df[n - 1][gram]++;
        }
    }
    auto idf = [&](size_t n, const Tokens& gram) {
        auto it = df[n - 1].find(gram);
        const int d = it == df[n - 1].end() ? 1 : std::max(it->second, 1);
        return std::log(static_cast<double>(corpus_size) / d);
    };

    for (size_t i = 0; i < candidates.size(); ++i) {
        double sum = 0.0;
        for (size_t n = 1; n <= 4; ++n) {
            const auto cg = ngram_counts(cand_tokens[i], n);
            const auto rg = ngram_counts(ref_tokens[i], n);
            double dot = 0.0, nc = 0.0, nr = 0.0;
            for (const auto& [gram, count] : cg) {
                const double w = count * idf(n, gram);
                nc += w * w;
                auto it = rg.find(gram);
                if (it != rg.end()) dot += w * (it->second * idf(n, gram));
            }
            for (const auto& [gram, count] : rg) {
                const double w = count * idf(n, gram);
                nr += w * w;
            }
            if (nc > 0.0 && nr > 0.0) sum += dot / (std::sqrt(nc) * std::sqrt(nr));
        }
        result.per_item.push_back(100.0 * sum / 4.0);
    }
    result.mean = mean(result.per_item);
    return result;
}

double micro_accuracy(const std::vector<std::optional<EvasiveManeuver>>& predictions,
                      const std::vector<EvasiveManeuver>& gold) {
    if (predictions.size() != gold.size()) {
        throw data_error("LengthMismatch", "prediction and gold counts differ");
    }
    if (predictions.empty()) return 0.0;
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] && *predictions[i] == gold[i]) ++correct;
    }
    return static_cast<double>(correct) / predictions.size();
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / xs.size();
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double sum = 0.0;
    for (double x : xs) sum += (x - m) * (x - m);
    return sum / (xs.size() - 1);
}

MetricReport score_items(const std::vector<EvalItem>& items) {
    MetricReport report;
    report.n = items.size();

    std::vector<std::optional<EvasiveManeuver>> preds;
    std::vector<EvasiveManeuver> gold;
    std::map<RiskType, std::pair<size_t, size_t>> per_type;  // correct, total
    for (const EvalItem& item : items) {
        preds.push_back(item.predicted_maneuver);
        gold.push_back(item.gold_maneuver);
        auto& [correct, total] = per_type[item.risk_type];
        ++total;
        if (item.predicted_maneuver && *item.predicted_maneuver == item.gold_maneuver) {
            ++correct;
        }
    }
    report.maneuver_micro_accuracy = preds.empty() ? 0.0 : micro_accuracy(preds, gold);
    for (const auto& [type, counts] : per_type) {
        report.per_scenario_count[type] = counts.second;
        report.per_scenario_accuracy[type] =
            static_cast<double>(counts.first) / counts.second;
    }

    auto score_field = [&](auto pred_of, auto gold_of, ScoredField& out) {
        std::vector<double> b, m, r;
        std::vector<std::string> cands, refs;
        for (const EvalItem& item : items) {
            const std::string& cand = pred_of(item);
            const std::string& ref = gold_of(item);
            b.push_back(bleu4(cand, ref));
            m.push_back(meteor(cand, ref));
            r.push_back(rouge_l(cand, ref));
            cands.push_back(cand);
            refs.push_back(ref);
        }
        const CiderResult c = cider(cands, refs);
        out.bleu4 = mean(b);
        out.bleu4_var = sample_variance(b);
        out.meteor = mean(m);
        out.meteor_var = sample_variance(m);
        out.rouge_l = mean(r);
        out.rouge_l_var = sample_variance(r);
        out.cider = c.mean;
        out.cider_var = sample_variance(c.per_item);
    };
    if (!items.empty()) {
        score_field([](const EvalItem& i) -> const std::string& { return i.predicted_event_context; },
                    [](const EvalItem& i) -> const std::string& { return i.gold_event_context; },
                    report.event_context);
        score_field([](const EvalItem& i) -> const std::string& { return i.predicted_justification; },
                    [](const EvalItem& i) -> const std::string& { return i.gold_justification; },
                    report.justification);
    }
    return report;
}

}  // namespace cbr
