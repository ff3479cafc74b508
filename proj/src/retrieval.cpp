#include "cbr/retrieval.hpp"

#include <algorithm>
#include <random>

#include "cbr/errors.hpp"

namespace cbr {

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw data_error("LengthMismatch", "vector lengths differ: " + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw data_error("ZeroVector", "cosine similarity of a zero vector is undefined");
    }
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

RetrievalResult retrieve_similar(const CaseStore& view, RiskType risk_type,
                                 const std::vector<double>& query_embedding, size_t k) {
    RetrievalResult scored;
    for (const std::string& id : view.partition(risk_type)) {
        const Case& c = view.at(id);
        if (!c.embedding) {
            throw data_error("MissingEmbedding", "case " + id + " has no embedding");
        }
        scored.push_back({id, cosine_similarity(query_embedding, *c.embedding)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredCase& x, const ScoredCase& y) {
        if (x.similarity != y.similarity) return x.similarity > y.similarity;
        return x.case_id < y.case_id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

RetrievalResult retrieve_random(const CaseStore& view, RiskType risk_type, size_t k,
                                uint64_t seed, const std::vector<double>* query_embedding,
                                bool cross_type) {
    std::vector<std::string> pool;
    if (cross_type) {
        for (const Case& c : view.cases()) pool.push_back(c.case_id);
    } else {
        pool = view.partition(risk_type);
    }

    std::mt19937_64 rng(seed);
    // partial Fisher-Yates: first k slots are the sample, in draw order
    const size_t take = std::min(k, pool.size());
    for (size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<size_t> dist(i, pool.size() - 1);
        std::swap(pool[i], pool[dist(rng)]);
    }
    pool.resize(take);

    RetrievalResult out;
    for (const std::string& id : pool) {
        const Case& c = view.at(id);
        double sim = 0.0;
        if (query_embedding && c.embedding) {
            sim = cosine_similarity(*query_embedding, *c.embedding);
        }
        out.push_back({id, sim});
    }
    return out;
}

}  // namespace cbr
