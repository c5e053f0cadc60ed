#include "memdrift/lex_index.hpp"

#include <algorithm>
#include <cmath>

#include "memdrift/error.hpp"
#include "memdrift/text.hpp"

namespace memdrift {

LexIndex LexIndex::build(const std::vector<std::pair<std::string, std::string>>& docs) {
    LexIndex idx;
    idx.ids_.reserve(docs.size());
    idx.term_freq_.reserve(docs.size());
    idx.doc_len_.reserve(docs.size());
    std::size_t total_len = 0;
    for (const auto& [id, text] : docs) {
        if (!idx.by_id_.emplace(id, idx.ids_.size()).second) {
            throw Error("duplicate record id: " + id);
        }
        idx.ids_.push_back(id);
        auto terms = tokenize(text);
        std::unordered_map<std::string, std::size_t> tf;
        for (auto& t : terms) ++tf[t];
        for (const auto& [term, _] : tf) ++idx.doc_freq_[term];
        idx.doc_len_.push_back(terms.size());
        total_len += terms.size();
        idx.term_freq_.push_back(std::move(tf));
    }
    idx.avg_len_ = docs.empty() ? 0.0 : static_cast<double>(total_len) / static_cast<double>(docs.size());
    return idx;
}

std::size_t LexIndex::doc_freq(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
}

double LexIndex::score(const std::vector<std::string>& query_terms, const std::string& record_id) const {
    auto it = by_id_.find(record_id);
    if (it == by_id_.end()) throw Error("unknown record id: " + record_id);
    return score_at(query_terms, it->second);
}

double LexIndex::score_at(const std::vector<std::string>& query_terms, std::size_t idx) const {
    const auto& tf_map = term_freq_[idx];
    const double dl = static_cast<double>(doc_len_[idx]);
    const double n = static_cast<double>(ids_.size());
    double s = 0.0;
    // Query terms contribute per occurrence, not per unique term.
    for (const auto& term : query_terms) {
        auto dfi = doc_freq_.find(term);
        if (dfi == doc_freq_.end()) continue;
        auto tfi = tf_map.find(term);
        if (tfi == tf_map.end()) continue;
        const double df = static_cast<double>(dfi->second);
        const double tf = static_cast<double>(tfi->second);
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        s += idf * (tf * (kBm25K1 + 1.0)) / (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * dl / avg_len_));
    }
    return s;
}

std::vector<ScoredId> LexIndex::top_k(const std::string& query, std::size_t k) const {
    auto terms = tokenize(query);
    std::vector<ScoredId> scored;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        double s = score_at(terms, i);
        if (s > 0.0) scored.push_back({ids_[i], s});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace memdrift
