#include "memdrift/eval.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "memdrift/error.hpp"

namespace memdrift {

QuerySet load_query_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read queries file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("queries file is not valid JSON: " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw Error("queries file must be a JSON array of strings");
    QuerySet qs;
    qs.name = path.stem().string();
    std::set<std::string> seen;
    for (const auto& q : j) {
        if (!q.is_string()) throw Error("queries file must contain only strings");
        auto text = q.get<std::string>();
        if (!seen.insert(text).second) throw Error("duplicate query: " + text);
        qs.queries.push_back(std::move(text));
    }
    if (qs.queries.empty()) throw Error("empty query set");
    return qs;
}

EvalReport evaluate(const MemoryStore& store, const QuerySet& queries, const RetrievalConfig& cfg,
                    const DefenseContext* ctx) {
    if (queries.queries.empty()) throw Error("empty query set");
    EvalReport report;
    report.store_id = store.content_hash();
    report.mode = to_string(cfg.mode);
    for (const auto& query : queries.queries) {
        const RetrievalResult res = store.retrieve(query, cfg, ctx);
        PerQueryStats stats;
        stats.query = query;
        for (const auto& hit : res.hits) {
            if (hit.suppressed) {
                stats.suppressed_ids.push_back(hit.record_id);
                continue;
            }
            stats.hit_ids.push_back(hit.record_id);
            ++stats.t;
            if (store.record(hit.record_id).poisoned) {
                stats.poisoned_hit_ids.push_back(hit.record_id);
                ++stats.p;
            }
        }
        report.t_tot += stats.t;
        report.p_tot += stats.p;
        report.per_query.push_back(std::move(stats));
    }
    if (report.t_tot > 0) {
        report.prp = static_cast<double>(report.p_tot) / static_cast<double>(report.t_tot);
        report.prp_defined = true;
    } else {
        report.prp = 0.0;
        report.prp_defined = false;
    }
    return report;
}

std::vector<EvalReport> compare_modes(const MemoryStore& store, const QuerySet& queries,
                                      const RetrievalConfig& base_cfg, const DefenseContext* ctx) {
    std::vector<EvalReport> reports;
    for (DefenseMode mode :
         {DefenseMode::off, DefenseMode::provenance, DefenseMode::rerank, DefenseMode::both}) {
        RetrievalConfig cfg = base_cfg;
        cfg.mode = mode;
        reports.push_back(evaluate(store, queries, cfg, ctx));
    }
    return reports;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& q : report.per_query) {
        per_query.push_back({
            {"query", q.query},
            {"t", q.t},
            {"p", q.p},
            {"hit_ids", q.hit_ids},
            {"poisoned_hit_ids", q.poisoned_hit_ids},
            {"suppressed_ids", q.suppressed_ids},
        });
    }
    return nlohmann::json{
        {"store_id", report.store_id},
        {"mode", report.mode},
        {"per_query", per_query},
        {"totals", {{"t_tot", report.t_tot}, {"p_tot", report.p_tot}}},
        {"prp", report.prp},
        {"prp_defined", report.prp_defined},
    };
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    try {
        report.store_id = j.at("store_id").get<std::string>();
        report.mode = j.at("mode").get<std::string>();
        for (const auto& q : j.at("per_query")) {
            PerQueryStats stats;
            stats.query = q.at("query").get<std::string>();
            stats.t = q.at("t").get<std::size_t>();
            stats.p = q.at("p").get<std::size_t>();
            stats.hit_ids = q.at("hit_ids").get<std::vector<std::string>>();
            stats.poisoned_hit_ids = q.at("poisoned_hit_ids").get<std::vector<std::string>>();
            stats.suppressed_ids = q.at("suppressed_ids").get<std::vector<std::string>>();
            report.per_query.push_back(std::move(stats));
        }
        report.t_tot = j.at("totals").at("t_tot").get<std::size_t>();
        report.p_tot = j.at("totals").at("p_tot").get<std::size_t>();
        report.prp = j.at("prp").get<double>();
        report.prp_defined = j.at("prp_defined").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed eval report: ") + e.what());
    }
    return report;
}

std::string render_report_json(const EvalReport& report) {
    return report_to_json(report).dump(2) + "\n";
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += " ";
        out += id;
    }
    return out.empty() ? "-" : out;
}

std::string truncate(const std::string& text, std::size_t width) {
    if (text.size() <= width) return text;
    return text.substr(0, width - 3) + "...";
}

std::string prp_percent(const EvalReport& report) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", report.prp * 100.0);
    std::string out = buf;
    if (!report.prp_defined) out += " (undefined: no hits)";
    return out;
}

}  // namespace

std::string render_report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "store " << report.store_id << "  mode " << report.mode << "\n";
    char header[160];
    std::snprintf(header, sizeof(header), "%-48s %3s %3s  %-28s %s", "query", "t", "p",
                  "poisoned hits", "blocked");
    out << header << "\n";
    for (const auto& q : report.per_query) {
        char row[512];
        std::snprintf(row, sizeof(row), "%-48s %3zu %3zu  %-28s %s",
                      truncate(q.query, 48).c_str(), q.t, q.p,
                      truncate(join_ids(q.poisoned_hit_ids), 28).c_str(),
                      join_ids(q.suppressed_ids).c_str());
        out << row << "\n";
    }
    out << "totals: T=" << report.t_tot << " P=" << report.p_tot << "\n";
    out << "PRP: " << prp_percent(report) << "\n";
    return out.str();
}

std::string render_comparison_text(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i > 0) out << "\n";
        out << render_report_text(reports[i]);
    }
    return out.str();
}

}  // namespace memdrift
