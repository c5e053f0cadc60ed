#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace memdrift {

/// One stored experience: a past task query plus the reasoning/action trace
/// an agent may imitate. `poisoned` is the evaluation ground-truth label and
/// is never consulted by retrieval.
struct ExperienceRecord {
    std::string id;
    std::string query;
    std::string trace;
    std::vector<std::string> tags;
    bool poisoned{false};
    std::string signature;      // base64 detached signature; empty when unsigned
    std::string signer_key_id;  // empty when unsigned

    bool signed_record() const { return !signature.empty(); }
};

/// Text a record contributes to both retrieval channels: query ⊕ " " ⊕ trace.
/// Tags are camouflage metadata and are never indexed.
std::string indexed_text(const ExperienceRecord& rec);

/// Text the constitution scans: query, trace, and comma-joined tags, separated
/// by newlines so rule patterns cannot match across segment boundaries.
std::string risk_text(const ExperienceRecord& rec);

nlohmann::json record_to_json(const ExperienceRecord& rec);
ExperienceRecord record_from_json(const nlohmann::json& j);

}  // namespace memdrift
