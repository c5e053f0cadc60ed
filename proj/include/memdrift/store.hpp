#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memdrift/constitution.hpp"
#include "memdrift/embedder.hpp"
#include "memdrift/keys.hpp"
#include "memdrift/lex_index.hpp"
#include "memdrift/record.hpp"
#include "memdrift/vec_index.hpp"

namespace memdrift {

enum class DefenseMode { off, provenance, rerank, both };

std::string to_string(DefenseMode mode);
DefenseMode defense_mode_from_string(const std::string& s);

struct RetrievalConfig {
    std::size_t k{3};  // per-channel top-k, applied before the union
    DefenseMode mode{DefenseMode::off};
    double alpha{1.0};
    double beta{1.0};
    double tau{0.5};  // in [0, 1]
};

/// Defense inputs resolved by the caller: trusted verify keys for provenance,
/// a constitution for rerank. Unused parts may stay empty.
struct DefenseContext {
    std::vector<Bytes> trusted_keys;
    const Constitution* constitution{nullptr};
};

struct Hit {
    std::string record_id;
    bool lex{false};
    bool vec{false};
    std::optional<double> lex_score;
    std::optional<double> cosine;
    std::optional<double> rerank_score;
    bool suppressed{false};
    std::string reason;  // "unverified-provenance" | "constitution-violation"
};

struct RetrievalResult {
    std::string query;
    std::vector<Hit> hits;  // deduplicated union; ids unique
    bool lex_fallback{false};  // query was unembeddable, vec channel skipped
};

struct Manifest {
    int format_version{1};
    EmbedderConfig embedder;
    std::string created_at;  // ISO 8601 UTC; excluded from content hashing
    std::size_t n_benign{0};
    std::size_t n_poisoned{0};
};

/// The persistent experience memory: records plus both retrieval indices.
/// Immutable after build/load; mutation (merge, signing) produces or rewrites
/// a store as a whole.
class MemoryStore {
public:
    /// Throws on duplicate/empty ids, empty query text, or an unembeddable
    /// record when the embedder is enabled (the id is reported).
    static MemoryStore build(std::vector<ExperienceRecord> records, const EmbedderConfig& embedder);

    /// Union store over base records plus addition; base vectors are reused,
    /// only the addition is embedded. Throws on id collision (names the ids).
    static MemoryStore merge(const MemoryStore& base, std::vector<ExperienceRecord> addition);

    /// Union retrieval with per-mode defense filtering. Unembeddable query
    /// text falls back to lex-only and flags the result, except in rerank
    /// modes where the query vector is required.
    RetrievalResult retrieve(const std::string& query, const RetrievalConfig& cfg,
                             const DefenseContext* ctx = nullptr) const;

    const std::vector<ExperienceRecord>& records() const { return records_; }
    const ExperienceRecord& record(const std::string& id) const;
    bool has_record(const std::string& id) const;
    const Manifest& manifest() const { return manifest_; }
    const LexIndex& lex() const { return lex_; }
    bool has_vec() const { return vec_.has_value(); }
    const VecIndex& vec() const;

    /// Replace a record's signature fields in place (store mutation used by
    /// the signing flow; indices are unaffected because signatures are not
    /// indexed).
    void set_signature(const std::string& id, const std::string& signature_b64,
                       const std::string& signer_key_id);

    /// Directory layout: manifest.json, records.jsonl, vectors.bin (embedder
    /// enabled only). Written to a temp directory then renamed, so a partial
    /// store is never visible.
    void persist(const std::filesystem::path& dir) const;

    /// Throws "no store" when dir or manifest.json is missing; validates
    /// format_version, vector header, and record counts.
    static MemoryStore load(const std::filesystem::path& dir);

    /// Remove a store directory. Refuses ("no store") paths that do not look
    /// like a store so stray directories cannot be deleted by accident.
    static void purge(const std::filesystem::path& dir);

    /// Content-addressed store id: SHA-256 over the serialized records, the
    /// vector rows, and the manifest minus created_at. Stable across
    /// processes and rebuild times.
    std::string content_hash() const;

    std::string records_jsonl() const;
    Bytes vectors_bin() const;
    nlohmann::json manifest_json(bool include_created_at) const;

private:
    MemoryStore() = default;
    void build_indices(std::vector<std::vector<float>> vectors);

    std::vector<ExperienceRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    LexIndex lex_;
    std::optional<VecIndex> vec_;
    Manifest manifest_;
};

/// Advisory exclusive lock on <store>/.lock; throws "store is locked" when
/// another process holds it. Releases on destruction.
class StoreLock {
public:
    explicit StoreLock(const std::filesystem::path& store_dir);
    ~StoreLock();
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    int fd_{-1};
};

}  // namespace memdrift
