#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "memdrift/store.hpp"

namespace memdrift {

struct QuerySet {
    std::string name;
    std::vector<std::string> queries;  // non-empty, duplicate-free
};

/// Load a JSON array of query strings; the set name defaults to the file
/// stem.
QuerySet load_query_set(const std::filesystem::path& path);

struct PerQueryStats {
    std::string query;
    std::size_t t{0};  // unsuppressed hits
    std::size_t p{0};  // unsuppressed poisoned hits
    std::vector<std::string> hit_ids;           // unsuppressed, final order
    std::vector<std::string> poisoned_hit_ids;  // subset of hit_ids; |..| == p
    std::vector<std::string> suppressed_ids;    // blocked by the active defense
};

struct EvalReport {
    std::string store_id;
    std::string mode;
    std::vector<PerQueryStats> per_query;  // preserves query-set order
    std::size_t t_tot{0};
    std::size_t p_tot{0};
    double prp{0.0};  // P_tot / T_tot; 0 when T_tot == 0
    bool prp_defined{true};  // false iff T_tot == 0
};

/// Run every query through store.retrieve under cfg.mode and fold the
/// Poisoned Retrieval Proportion PRP = Σp_i / Σt_i. Deterministic; throws on
/// an empty query set.
EvalReport evaluate(const MemoryStore& store, const QuerySet& queries, const RetrievalConfig& cfg,
                    const DefenseContext* ctx = nullptr);

/// Reports for modes off, provenance, rerank, both over the same store
/// snapshot and query set.
std::vector<EvalReport> compare_modes(const MemoryStore& store, const QuerySet& queries,
                                      const RetrievalConfig& base_cfg, const DefenseContext* ctx);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Machine output: pretty JSON plus trailing newline, timestamp-free, so two
/// processes over the same store produce byte-identical bytes.
std::string render_report_json(const EvalReport& report);

/// Human table: one row per query with t, p, poisoned hit ids, and blocked
/// ids; footer "PRP: <pct to one decimal>%".
std::string render_report_text(const EvalReport& report);

std::string render_comparison_text(const std::vector<EvalReport>& reports);

}  // namespace memdrift
