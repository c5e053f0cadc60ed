#pragma once

#include <cstddef>
#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

namespace memdrift {

struct ConstitutionRule {
    std::string rule_id;
    std::string pattern;
    double weight{0.0};  // in [0, 1]
    std::string description;
    std::regex compiled;  // case-insensitive ECMAScript
};

struct RiskScore {
    double value{0.0};  // 0 iff matched_rules empty
    std::vector<std::string> matched_rules;
};

/// Rule-based risk scorer. Rules combine by noisy-OR:
/// value = 1 - Π over matched rules of (1 - weight).
class Constitution {
public:
    static Constitution empty() { return Constitution{}; }

    /// Accepts a JSON list of {rule_id, pattern, weight, description}.
    /// Invalid patterns, out-of-range weights, and duplicate ids are
    /// configuration errors raised here, never at score time.
    static Constitution from_json(const nlohmann::json& j);
    static Constitution load_file(const std::filesystem::path& path);

    RiskScore score(const std::string& text) const;
    std::size_t rule_count() const { return rules_.size(); }
    const std::vector<ConstitutionRule>& rules() const { return rules_; }

private:
    std::vector<ConstitutionRule> rules_;
};

}  // namespace memdrift
