#include "memdrift/constitution.hpp"

#include <fstream>
#include <set>

#include "memdrift/error.hpp"

namespace memdrift {

Constitution Constitution::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error("constitution must be a JSON list of rules");
    Constitution c;
    std::set<std::string> seen;
    for (const auto& item : j) {
        ConstitutionRule rule;
        try {
            rule.rule_id = item.at("rule_id").get<std::string>();
            rule.pattern = item.at("pattern").get<std::string>();
            rule.weight = item.at("weight").get<double>();
            rule.description = item.value("description", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("malformed constitution rule: ") + e.what());
        }
        if (rule.rule_id.empty() || !seen.insert(rule.rule_id).second) {
            throw Error("constitution rule ids must be unique and non-empty: " + rule.rule_id);
        }
        if (rule.weight < 0.0 || rule.weight > 1.0) {
            throw Error("constitution rule weight out of [0,1]: " + rule.rule_id);
        }
        try {
            rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw Error("invalid constitution pattern in rule " + rule.rule_id + ": " + e.what());
        }
        c.rules_.push_back(std::move(rule));
    }
    return c;
}

Constitution Constitution::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read constitution file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("constitution file is not valid JSON: " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

RiskScore Constitution::score(const std::string& text) const {
    RiskScore out;
    double survive = 1.0;
    for (const auto& rule : rules_) {
        if (std::regex_search(text, rule.compiled)) {
            out.matched_rules.push_back(rule.rule_id);
            survive *= (1.0 - rule.weight);
        }
    }
    if (!out.matched_rules.empty()) out.value = 1.0 - survive;
    return out;
}

}  // namespace memdrift
