#pragma once

#include <vector>

#include "memdrift/constitution.hpp"
#include "memdrift/store.hpp"

namespace memdrift {

inline constexpr const char* kReasonProvenance = "unverified-provenance";
inline constexpr const char* kReasonConstitution = "constitution-violation";

/// Fail-closed provenance filter: any hit whose record lacks a signature that
/// verifies under one of trusted_keys is marked suppressed in place. Hit
/// order is preserved.
void filter_provenance(RetrievalResult& result, const MemoryStore& store,
                       const std::vector<Bytes>& trusted_keys);

/// Risk of one record under a constitution, scanned over its risk text.
RiskScore record_risk(const ExperienceRecord& rec, const Constitution& constitution);

/// Constitutional reranking: every not-yet-suppressed hit gets a cosine
/// against query_vec (lex-only hits included, via the store's vec index),
/// rerank_score = alpha * cosine - beta * risk, and suppression when risk
/// exceeds tau regardless of score. Surviving hits are re-sorted by
/// rerank_score descending then id ascending; suppressed hits follow in
/// their prior relative order.
void rerank(RetrievalResult& result, const MemoryStore& store, const std::vector<float>& query_vec,
            const Constitution& constitution, double alpha, double beta, double tau);

}  // namespace memdrift
