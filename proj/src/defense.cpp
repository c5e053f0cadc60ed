#include "memdrift/defense.hpp"

#include <algorithm>

#include "memdrift/error.hpp"

namespace memdrift {

void filter_provenance(RetrievalResult& result, const MemoryStore& store,
                       const std::vector<Bytes>& trusted_keys) {
    for (auto& hit : result.hits) {
        if (hit.suppressed) continue;
        const auto& rec = store.record(hit.record_id);
        bool verified = false;
        for (const auto& key : trusted_keys) {
            if (verify_inline(rec, key)) {
                verified = true;
                break;
            }
        }
        if (!verified) {
            hit.suppressed = true;
            hit.reason = kReasonProvenance;
        }
    }
}

RiskScore record_risk(const ExperienceRecord& rec, const Constitution& constitution) {
    return constitution.score(risk_text(rec));
}

void rerank(RetrievalResult& result, const MemoryStore& store, const std::vector<float>& query_vec,
            const Constitution& constitution, double alpha, double beta, double tau) {
    if (!store.has_vec()) throw Error("rerank requires embeddings");

    std::vector<Hit> survivors;
    std::vector<Hit> suppressed;
    for (auto& hit : result.hits) {
        if (hit.suppressed) {
            suppressed.push_back(std::move(hit));
            continue;
        }
        if (!hit.cosine) {
            hit.cosine = cosine(query_vec, store.vec().vector_of(hit.record_id));
        }
        const RiskScore risk = record_risk(store.record(hit.record_id), constitution);
        hit.rerank_score = alpha * (*hit.cosine) - beta * risk.value;
        if (risk.value > tau) {
            hit.suppressed = true;
            hit.reason = kReasonConstitution;
            suppressed.push_back(std::move(hit));
        } else {
            survivors.push_back(std::move(hit));
        }
    }
    std::sort(survivors.begin(), survivors.end(), [](const Hit& a, const Hit& b) {
        if (*a.rerank_score != *b.rerank_score) return *a.rerank_score > *b.rerank_score;
        return a.record_id < b.record_id;
    });
    result.hits.clear();
    result.hits.reserve(survivors.size() + suppressed.size());
    for (auto& h : survivors) result.hits.push_back(std::move(h));
    for (auto& h : suppressed) result.hits.push_back(std::move(h));
}

}  // namespace memdrift
