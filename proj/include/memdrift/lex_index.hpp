#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace memdrift {

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

struct ScoredId {
    std::string id;
    double score{0.0};
};

/// Okapi BM25 inverted index with IDF = ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Immutable after build; rebuild on any corpus change.
class LexIndex {
public:
    /// docs: (record_id, indexed text). Throws on duplicate id.
    static LexIndex build(const std::vector<std::pair<std::string, std::string>>& docs);

    std::size_t doc_count() const { return ids_.size(); }
    double avg_doc_len() const { return avg_len_; }
    std::size_t doc_freq(const std::string& term) const;

    /// BM25 score of one document against query-term occurrences (repeated
    /// query terms contribute once per occurrence). Throws on unknown id.
    double score(const std::vector<std::string>& query_terms, const std::string& record_id) const;

    /// Positive-score documents only, sorted score descending then id
    /// ascending, truncated to k.
    std::vector<ScoredId> top_k(const std::string& query, std::size_t k) const;

private:
    double score_at(const std::vector<std::string>& query_terms, std::size_t idx) const;

    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freq_;
    std::vector<std::size_t> doc_len_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
    double avg_len_{0.0};
};

}  // namespace memdrift
