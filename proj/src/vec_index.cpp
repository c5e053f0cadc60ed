#include "memdrift/vec_index.hpp"

#include <algorithm>
#include <cmath>

#include "memdrift/error.hpp"

namespace memdrift {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw Error("cosine dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw Error("cosine of zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

VecIndex VecIndex::build(std::vector<std::string> ids, std::vector<std::vector<float>> vectors,
                         std::uint32_t dims_hint) {
    if (ids.size() != vectors.size()) throw Error("vector index id/vector count mismatch");
    VecIndex idx;
    idx.dims_ = vectors.empty() ? dims_hint : static_cast<std::uint32_t>(vectors.front().size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (vectors[i].size() != idx.dims_) {
            throw Error("vector dimension mismatch for record " + ids[i]);
        }
        if (!idx.by_id_.emplace(ids[i], i).second) {
            throw Error("duplicate record id: " + ids[i]);
        }
    }
    idx.ids_ = std::move(ids);
    idx.vectors_ = std::move(vectors);
    return idx;
}

const std::vector<float>& VecIndex::vector_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error("unknown record id: " + id);
    return vectors_[it->second];
}

std::vector<ScoredId> VecIndex::top_k(const std::vector<float>& query_vec, std::size_t k) const {
    if (ids_.empty()) return {};
    if (query_vec.size() != dims_) throw Error("query vector dimension mismatch");
    std::vector<ScoredId> scored;
    scored.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        scored.push_back({ids_[i], cosine(query_vec, vectors_[i])});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace memdrift
