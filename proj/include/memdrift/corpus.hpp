#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "memdrift/record.hpp"

namespace memdrift {

/// One seed in the upstream corpus shape: field names req/resp/tag mirror the
/// corpus JSON exactly so the original fragment loads verbatim.
struct SeedRecord {
    std::string id;
    std::string req;
    std::string resp;
    std::string tag;  // comma-separated
};

struct SeedCorpus {
    std::string description;
    nlohmann::json header_extra;  // attack_type, purpose, ... preserved verbatim
    std::vector<SeedRecord> benign;
    std::vector<SeedRecord> poisoned;
    nlohmann::json metadata;  // attack_metadata object preserved verbatim
};

/// Parse the corpus JSON (keys description, benign_experiences,
/// poisoned_experiences, attack_metadata). Poisoned ground truth comes from
/// set membership alone; tags are attacker camouflage. Errors name the
/// offending record id where one exists.
SeedCorpus parse_corpus(const std::string& json_text);

SeedCorpus load_corpus_file(const std::filesystem::path& path);

/// Inverse of parse_corpus up to JSON formatting; parse(corpus_to_json(c))
/// equals c field for field.
nlohmann::json corpus_to_json(const SeedCorpus& corpus);

/// Flatten to store records: benign in file order, then poisoned in file
/// order, as one list. Tags split on ','; poisoned flag from set membership.
std::vector<ExperienceRecord> corpus_records(const SeedCorpus& corpus);

/// Structural checks over the shipped data files: id uniqueness, counts
/// (100 benign / 10 poisoned / 12 queries), schema conformance, and the
/// "validated,safe" camouflage tag suffix on every poisoned seed. Returns
/// one diagnostic line per violation; empty means valid.
std::vector<std::string> validate_corpus(const std::filesystem::path& seeds_path,
                                         const std::filesystem::path& queries_path);

}  // namespace memdrift
