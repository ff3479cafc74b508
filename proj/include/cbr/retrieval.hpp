#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cbr/case_base.hpp"
#include "cbr/taxonomy.hpp"

namespace cbr {

struct ScoredCase {
    std::string case_id;
    double similarity = 0.0;
};

using RetrievalResult = std::vector<ScoredCase>;

// dot(a,b) / (|a||b|), clamped to [-1, 1].
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Top-k by cosine within the query's risk-type partition only; ties broken by
// ascending case_id; k past the partition size returns the whole partition
// ranked. Every case in the partition must carry an embedding.
RetrievalResult retrieve_similar(const CaseStore& view, RiskType risk_type,
                                 const std::vector<double>& query_embedding, size_t k);

// Seeded uniform sample without replacement from the risk-type partition
// (or the whole store with cross_type). Similarity is filled in for
// reporting when both embeddings are available, else 0.
RetrievalResult retrieve_random(const CaseStore& view, RiskType risk_type, size_t k,
                                uint64_t seed, const std::vector<double>* query_embedding,
                                bool cross_type = false);

}  // namespace cbr
