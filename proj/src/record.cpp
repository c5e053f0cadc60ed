#include "memdrift/record.hpp"

#include "memdrift/error.hpp"

namespace memdrift {

std::string indexed_text(const ExperienceRecord& rec) {
    return rec.query + " " + rec.trace;
}

std::string risk_text(const ExperienceRecord& rec) {
    std::string joined;
    for (const auto& tag : rec.tags) {
        if (!joined.empty()) joined += ",";
        joined += tag;
    }
    return rec.query + "\n" + rec.trace + "\n" + joined;
}

nlohmann::json record_to_json(const ExperienceRecord& rec) {
    nlohmann::json j{
        {"id", rec.id},
        {"query", rec.query},
        {"trace", rec.trace},
        {"tags", rec.tags},
        {"poisoned", rec.poisoned},
    };
    if (rec.signed_record()) {
        j["signature"] = rec.signature;
        j["signer_key_id"] = rec.signer_key_id;
    }
    return j;
}

ExperienceRecord record_from_json(const nlohmann::json& j) {
    ExperienceRecord rec;
    try {
        rec.id = j.at("id").get<std::string>();
        rec.query = j.at("query").get<std::string>();
        rec.trace = j.at("trace").get<std::string>();
        rec.tags = j.at("tags").get<std::vector<std::string>>();
        rec.poisoned = j.at("poisoned").get<bool>();
        if (j.contains("signature")) rec.signature = j.at("signature").get<std::string>();
        if (j.contains("signer_key_id")) rec.signer_key_id = j.at("signer_key_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed record: ") + e.what());
    }
    return rec;
}

}  // namespace memdrift
