#include "memdrift/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "memdrift/error.hpp"

namespace memdrift {

namespace {

SeedRecord seed_from_json(const nlohmann::json& j, const char* section) {
    if (!j.is_object()) throw Error(std::string("malformed record in ") + section);
    SeedRecord rec;
    rec.id = j.value("id", std::string{});
    const std::string label = rec.id.empty() ? std::string("<missing id>") : rec.id;
    for (const char* field : {"id", "req", "resp", "tag"}) {
        if (!j.contains(field) || !j.at(field).is_string()) {
            throw Error("record " + label + " in " + section + " lacks string field '" + field + "'");
        }
    }
    rec.req = j.at("req").get<std::string>();
    rec.resp = j.at("resp").get<std::string>();
    rec.tag = j.at("tag").get<std::string>();
    if (rec.id.empty()) throw Error(std::string("record with empty id in ") + section);
    if (rec.req.empty()) throw Error("record " + rec.id + " has empty req");
    if (rec.resp.empty()) throw Error("record " + rec.id + " has empty resp");
    return rec;
}

std::vector<std::string> split_tags(const std::string& tag) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : tag) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    if (out.size() == 1 && out.front().empty()) out.clear();
    return out;
}

}  // namespace

SeedCorpus parse_corpus(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("corpus is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("corpus root must be a JSON object");
    for (const char* key : {"benign_experiences", "poisoned_experiences", "attack_metadata"}) {
        if (!j.contains(key)) throw Error(std::string("corpus lacks key '") + key + "'");
    }

    SeedCorpus corpus;
    corpus.description = j.value("description", std::string{});
    corpus.metadata = j.at("attack_metadata");
    corpus.header_extra = nlohmann::json::object();
    for (const auto& [key, value] : j.items()) {
        if (key == "description" || key == "benign_experiences" || key == "poisoned_experiences" ||
            key == "attack_metadata") {
            continue;
        }
        corpus.header_extra[key] = value;
    }

    std::set<std::string> seen;
    for (const auto& item : j.at("benign_experiences")) {
        auto rec = seed_from_json(item, "benign_experiences");
        if (!seen.insert(rec.id).second) throw Error("duplicate record id: " + rec.id);
        corpus.benign.push_back(std::move(rec));
    }
    for (const auto& item : j.at("poisoned_experiences")) {
        auto rec = seed_from_json(item, "poisoned_experiences");
        if (!seen.insert(rec.id).second) throw Error("duplicate record id: " + rec.id);
        corpus.poisoned.push_back(std::move(rec));
    }

    if (!corpus.poisoned.empty()) {
        const auto& meta = corpus.metadata;
        if (!meta.is_object() || !meta.contains("malicious_patterns") ||
            !meta.at("malicious_patterns").is_array() || meta.at("malicious_patterns").empty()) {
            throw Error("attack_metadata.malicious_patterns must be non-empty when poisoned seeds exist");
        }
    }
    return corpus;
}

SeedCorpus load_corpus_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read corpus file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_corpus(ss.str());
}

nlohmann::json corpus_to_json(const SeedCorpus& corpus) {
    auto seeds_json = [](const std::vector<SeedRecord>& seeds) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : seeds) {
            arr.push_back({{"id", s.id}, {"req", s.req}, {"resp", s.resp}, {"tag", s.tag}});
        }
        return arr;
    };
    nlohmann::json j{
        {"description", corpus.description},
        {"benign_experiences", seeds_json(corpus.benign)},
        {"poisoned_experiences", seeds_json(corpus.poisoned)},
        {"attack_metadata", corpus.metadata},
    };
    if (corpus.header_extra.is_object()) {
        for (const auto& [key, value] : corpus.header_extra.items()) j[key] = value;
    }
    return j;
}

std::vector<ExperienceRecord> corpus_records(const SeedCorpus& corpus) {
    std::vector<ExperienceRecord> out;
    out.reserve(corpus.benign.size() + corpus.poisoned.size());
    auto convert = [&out](const SeedRecord& seed, bool poisoned) {
        ExperienceRecord rec;
        rec.id = seed.id;
        rec.query = seed.req;
        rec.trace = seed.resp;
        rec.tags = split_tags(seed.tag);
        rec.poisoned = poisoned;
        out.push_back(std::move(rec));
    };
    for (const auto& s : corpus.benign) convert(s, false);
    for (const auto& s : corpus.poisoned) convert(s, true);
    return out;
}

std::vector<std::string> validate_corpus(const std::filesystem::path& seeds_path,
                                         const std::filesystem::path& queries_path) {
    std::vector<std::string> diags;
    const std::string seeds_name = seeds_path.filename().string();
    const std::string queries_name = queries_path.filename().string();

    SeedCorpus corpus;
    bool have_corpus = false;
    try {
        corpus = load_corpus_file(seeds_path);
        have_corpus = true;
    } catch (const Error& e) {
        diags.push_back(seeds_name + ": " + e.what());
    }
    if (have_corpus) {
        if (corpus.benign.size() != 100) {
            diags.push_back(seeds_name + ": expected 100 benign seeds, found " +
                            std::to_string(corpus.benign.size()));
        }
        if (corpus.poisoned.size() != 10) {
            diags.push_back(seeds_name + ": expected 10 poisoned seeds, found " +
                            std::to_string(corpus.poisoned.size()));
        }
        for (const auto& seed : corpus.poisoned) {
            const std::string suffix = "validated,safe";
            if (seed.tag.size() < suffix.size() ||
                seed.tag.compare(seed.tag.size() - suffix.size(), suffix.size(), suffix) != 0) {
                diags.push_back(seeds_name + ": " + seed.id +
                                ": poisoned seed lacks camouflage tag suffix \"validated,safe\"");
            }
        }
    }

    try {
        std::ifstream in(queries_path, std::ios::binary);
        if (!in) throw Error("cannot read queries file: " + queries_path.string());
        nlohmann::json j;
        in >> j;
        if (!j.is_array()) {
            diags.push_back(queries_name + ": queries file must be a JSON array of strings");
        } else {
            std::size_t n = 0;
            std::set<std::string> seen;
            for (const auto& q : j) {
                if (!q.is_string()) {
                    diags.push_back(queries_name + ": query " + std::to_string(n) +
                                    " is not a string");
                } else if (!seen.insert(q.get<std::string>()).second) {
                    diags.push_back(queries_name + ": duplicate query: " + q.get<std::string>());
                }
                ++n;
            }
            if (n != 12) {
                diags.push_back(queries_name + ": expected 12 queries, found " + std::to_string(n));
            }
        }
    } catch (const std::exception& e) {
        diags.push_back(queries_name + ": " + e.what());
    }
    return diags;
}

}  // namespace memdrift
