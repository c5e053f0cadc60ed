#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "memdrift/lex_index.hpp"  // ScoredId

namespace memdrift {

/// Exact cosine in double precision over float32 components. Throws on
/// length mismatch or a zero-norm operand.
double cosine(const std::vector<float>& a, const std::vector<float>& b);

/// Exact (brute-force) cosine top-k over unit vectors. Immutable after build;
/// entry order follows the build input so persisted rows stay aligned with
/// records.jsonl.
class VecIndex {
public:
    /// dims_hint fixes the dimensionality of an empty index (needed so an
    /// empty store round-trips its vector header).
    static VecIndex build(std::vector<std::string> ids, std::vector<std::vector<float>> vectors,
                          std::uint32_t dims_hint = 0);

    std::uint32_t dims() const { return dims_; }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
    const std::vector<float>& vector_of(const std::string& id) const;

    /// Sorted cosine descending then id ascending, truncated to k. No
    /// similarity floor. Empty index yields an empty list; a dims mismatch
    /// throws.
    std::vector<ScoredId> top_k(const std::vector<float>& query_vec, std::size_t k) const;

private:
    std::uint32_t dims_{0};
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<std::vector<float>> vectors_;
};

}  // namespace memdrift
