#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memdrift/corpus.hpp"
#include "memdrift/defense.hpp"
#include "memdrift/error.hpp"
#include "memdrift/eval.hpp"
#include "memdrift/keys.hpp"
#include "memdrift/note.hpp"
#include "memdrift/store.hpp"

namespace md = memdrift;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config resolution: flag > environment (MEMDRIFT_*) > config file > default.
// CLI11's own config support inverts env/file priority, so resolution is done
// by hand after parsing.
// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw md::Error("cannot read config file: " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        if (a == std::string::npos) return std::string{};
        const auto b = s.find_last_not_of(" \t");
        return s.substr(a, b - a + 1);
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw md::Error("config file " + path.string() + " line " + std::to_string(lineno) +
                            ": expected key=value");
        }
        kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
    }
    return kv;
}

class Settings {
public:
    explicit Settings(std::map<std::string, std::string> cfg) : cfg_(std::move(cfg)) {}

    std::string str(const CLI::Option* opt, const std::string& flag_value, const char* env,
                    const char* key, const std::string& fallback) const {
        if (opt != nullptr && opt->count() > 0) return flag_value;
        if (const char* v = std::getenv(env); v != nullptr && *v != '\0') return v;
        if (auto it = cfg_.find(key); it != cfg_.end()) return it->second;
        return fallback;
    }

    long long integer(const CLI::Option* opt, const std::string& flag_value, const char* env,
                      const char* key, long long fallback, long long lo, long long hi) const {
        const std::string raw = str(opt, flag_value, env, key, std::to_string(fallback));
        long long v = 0;
        std::size_t used = 0;
        try {
            v = std::stoll(raw, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != raw.size() || raw.empty()) {
            throw md::Error(std::string("invalid integer for ") + key + ": '" + raw + "'");
        }
        if (v < lo || v > hi) {
            throw md::Error(std::string(key) + " out of range [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]: " + raw);
        }
        return v;
    }

    double real(const CLI::Option* opt, const std::string& flag_value, const char* env,
                const char* key, double fallback) const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", fallback);
        const std::string raw = str(opt, flag_value, env, key, buf);
        double v = 0.0;
        std::size_t used = 0;
        try {
            v = std::stod(raw, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != raw.size() || raw.empty()) {
            throw md::Error(std::string("invalid number for ") + key + ": '" + raw + "'");
        }
        return v;
    }

private:
    std::map<std::string, std::string> cfg_;
};

// Option values plus the CLI11 handles needed to tell "set on command line"
// apart from "default".
struct Opts {
    std::string config, store, seeds, note, queries, template_, out, text;
    std::string embedder, dims, hash_seed, endpoint, model, api_key_env, timeout_ms, max_retries;
    std::string k, mode, alpha, beta, tau, constitution, trust, key;
    bool force{false}, json{false}, compare{false}, sign_all{false}, only_benign{false};

    CLI::Option *o_store{}, *o_seeds{}, *o_note{}, *o_queries{}, *o_template{}, *o_out{};
    CLI::Option *o_embedder{}, *o_dims{}, *o_hash_seed{}, *o_endpoint{}, *o_model{},
        *o_api_key_env{}, *o_timeout_ms{}, *o_max_retries{};
    CLI::Option *o_k{}, *o_mode{}, *o_alpha{}, *o_beta{}, *o_tau{}, *o_constitution{}, *o_trust{},
        *o_key{}, *o_config{};
};

Settings make_settings(const Opts& o) {
    std::string cfg_path;
    if (o.o_config != nullptr && o.o_config->count() > 0) {
        cfg_path = o.config;
    } else if (const char* v = std::getenv("MEMDRIFT_CONFIG"); v != nullptr && *v != '\0') {
        cfg_path = v;
    }
    if (cfg_path.empty()) return Settings({});
    return Settings(parse_config_file(cfg_path));
}

std::string require(const std::string& value, const char* what, const char* flag) {
    if (value.empty()) {
        throw md::Error(std::string(what) + " required (" + flag + ")");
    }
    return value;
}

md::EmbedderConfig resolve_embedder(const Settings& s, const Opts& o) {
    md::EmbedderConfig cfg;
    cfg.kind = md::embedder_kind_from_string(
        s.str(o.o_embedder, o.embedder, "MEMDRIFT_EMBEDDER", "embedder", "hash"));
    cfg.dims = static_cast<std::uint32_t>(
        s.integer(o.o_dims, o.dims, "MEMDRIFT_DIMS", "dims", 256, 8, 1 << 20));
    cfg.seed = static_cast<std::uint64_t>(s.integer(o.o_hash_seed, o.hash_seed, "MEMDRIFT_HASH_SEED",
                                                    "hash_seed", 42, 0, INT64_MAX));
    cfg.endpoint = s.str(o.o_endpoint, o.endpoint, "MEMDRIFT_ENDPOINT", "endpoint", "");
    cfg.model = s.str(o.o_model, o.model, "MEMDRIFT_MODEL", "model", "");
    cfg.api_key_env = s.str(o.o_api_key_env, o.api_key_env, "MEMDRIFT_API_KEY_ENV", "api_key_env", "");
    cfg.timeout_ms = static_cast<int>(s.integer(o.o_timeout_ms, o.timeout_ms, "MEMDRIFT_TIMEOUT_MS",
                                                "timeout_ms", 30000, 1, INT32_MAX));
    cfg.max_retries = static_cast<int>(s.integer(o.o_max_retries, o.max_retries,
                                                 "MEMDRIFT_MAX_RETRIES", "max_retries", 0, 0, 100));
    if (cfg.kind == md::EmbedderKind::remote && cfg.endpoint.empty()) {
        throw md::Error("remote embedder requires an endpoint (--endpoint)");
    }
    return cfg;
}

md::RetrievalConfig resolve_retrieval(const Settings& s, const Opts& o) {
    md::RetrievalConfig cfg;
    cfg.k = static_cast<std::size_t>(s.integer(o.o_k, o.k, "MEMDRIFT_K", "k", 3, 1, 1 << 20));
    cfg.mode = md::defense_mode_from_string(s.str(o.o_mode, o.mode, "MEMDRIFT_MODE", "mode", "off"));
    cfg.alpha = s.real(o.o_alpha, o.alpha, "MEMDRIFT_ALPHA", "alpha", 1.0);
    cfg.beta = s.real(o.o_beta, o.beta, "MEMDRIFT_BETA", "beta", 1.0);
    cfg.tau = s.real(o.o_tau, o.tau, "MEMDRIFT_TAU", "tau", 0.5);
    if (cfg.tau < 0.0 || cfg.tau > 1.0) throw md::Error("tau must be in [0,1]");
    return cfg;
}

struct ResolvedDefense {
    md::Constitution constitution;
    md::DefenseContext ctx;
};

// needs_rerank covers --compare too, which always runs the rerank modes.
ResolvedDefense resolve_defense(const Settings& s, const Opts& o, bool needs_rerank) {
    ResolvedDefense out;
    const std::string trust = s.str(o.o_trust, o.trust, "MEMDRIFT_TRUST", "trust", "");
    std::stringstream ss(trust);
    std::string part;
    while (std::getline(ss, part, ':')) {
        if (part.empty()) continue;
        out.ctx.trusted_keys.push_back(md::load_public_key(part).public_key);
    }
    const std::string constitution_path =
        s.str(o.o_constitution, o.constitution, "MEMDRIFT_CONSTITUTION", "constitution", "");
    if (!constitution_path.empty()) {
        out.constitution = md::Constitution::load_file(constitution_path);
        out.ctx.constitution = &out.constitution;
    } else if (needs_rerank) {
        throw md::Error("rerank requires a constitution file (--constitution)");
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf) throw md::Error("cannot write file: " + path.string());
    outf << content;
    if (!outf) throw md::Error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw md::Error(std::string("cannot read ") + what + ": " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void persist_with_force(const md::MemoryStore& store, const fs::path& path, bool force) {
    if (fs::exists(path)) {
        if (!force) throw md::Error("store already exists: " + path.string() + " (use --force)");
        md::StoreLock lock(path);
        md::MemoryStore::purge(path);
        store.persist(path);
        return;
    }
    store.persist(path);
}

nlohmann::json hit_to_json(const md::Hit& hit) {
    nlohmann::json channels = nlohmann::json::array();
    if (hit.lex) channels.push_back("lex");
    if (hit.vec) channels.push_back("vec");
    nlohmann::json j{{"record_id", hit.record_id},
                     {"channels", channels},
                     {"suppressed", hit.suppressed}};
    if (hit.lex_score) j["lex_score"] = *hit.lex_score;
    if (hit.cosine) j["cosine"] = *hit.cosine;
    if (hit.rerank_score) j["rerank_score"] = *hit.rerank_score;
    if (hit.suppressed) j["reason"] = hit.reason;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_build(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string seeds = require(s.str(o.o_seeds, o.seeds, "MEMDRIFT_SEEDS", "seeds", ""),
                                      "seed corpus path", "--seeds");
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    const auto corpus = md::load_corpus_file(seeds);
    const auto store = md::MemoryStore::build(md::corpus_records(corpus), resolve_embedder(s, o));
    persist_with_force(store, store_path, o.force);
    std::cerr << "built store " << store_path << " (" << store.records().size() << " records, "
              << store.manifest().n_poisoned << " poisoned)\n";
    return 0;
}

int cmd_ingest(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string note_path = require(s.str(o.o_note, o.note, "MEMDRIFT_NOTE", "note", ""),
                                          "note path", "--note");
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    const auto note = md::parse_note(read_text_file(note_path, "note"));
    const auto store =
        md::MemoryStore::build(md::corpus_records(note.corpus), resolve_embedder(s, o));
    persist_with_force(store, store_path, o.force);
    std::cerr << "ingested " << note_path << " into " << store_path << " ("
              << store.records().size() << " records)\n";
    return 0;
}

int cmd_craft_note(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string seeds = require(s.str(o.o_seeds, o.seeds, "MEMDRIFT_SEEDS", "seeds", ""),
                                      "seed corpus path", "--seeds");
    const std::string template_path =
        require(s.str(o.o_template, o.template_, "MEMDRIFT_TEMPLATE", "template", ""),
                "note template path", "--template");
    const auto corpus = md::load_corpus_file(seeds);
    const std::string note = md::craft_note(corpus, read_text_file(template_path, "template"));
    if (o.out.empty()) {
        std::cout << note;
    } else {
        write_text_file(o.out, note);
        std::cerr << "wrote payload note " << o.out << "\n";
    }
    return 0;
}

int cmd_query(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    const auto store = md::MemoryStore::load(store_path);
    const auto cfg = resolve_retrieval(s, o);
    const bool needs_rerank =
        cfg.mode == md::DefenseMode::rerank || cfg.mode == md::DefenseMode::both;
    auto defense = resolve_defense(s, o, needs_rerank);
    const auto res = store.retrieve(o.text, cfg, &defense.ctx);

    if (o.json) {
        nlohmann::json hits = nlohmann::json::array();
        for (const auto& hit : res.hits) hits.push_back(hit_to_json(hit));
        const nlohmann::json j{
            {"query", res.query}, {"lex_fallback", res.lex_fallback}, {"hits", hits}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::size_t rank = 0;
    for (const auto& hit : res.hits) {
        std::string channels = hit.lex && hit.vec ? "lex+vec" : (hit.lex ? "lex" : "vec");
        std::ostringstream line;
        line << ++rank << ". " << hit.record_id << " [" << channels << "]";
        if (hit.lex_score) line << " lex=" << *hit.lex_score;
        if (hit.cosine) line << " cos=" << *hit.cosine;
        if (hit.rerank_score) line << " rerank=" << *hit.rerank_score;
        if (hit.suppressed) line << " SUPPRESSED (" << hit.reason << ")";
        std::cout << line.str() << "\n";
    }
    if (res.lex_fallback) std::cerr << "note: query not embeddable, lex-only retrieval\n";
    return 0;
}

int cmd_eval(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    const std::string queries_path =
        require(s.str(o.o_queries, o.queries, "MEMDRIFT_QUERIES", "queries", ""),
                "queries path", "--queries");
    const auto store = md::MemoryStore::load(store_path);
    const auto query_set = md::load_query_set(queries_path);
    const auto cfg = resolve_retrieval(s, o);
    const bool needs_rerank = o.compare || cfg.mode == md::DefenseMode::rerank ||
                              cfg.mode == md::DefenseMode::both;
    auto defense = resolve_defense(s, o, needs_rerank);

    std::string machine;
    std::string human;
    if (o.compare) {
        const auto reports = md::compare_modes(store, query_set, cfg, &defense.ctx);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports) arr.push_back(md::report_to_json(r));
        machine = arr.dump(2) + "\n";
        human = md::render_comparison_text(reports);
    } else {
        const auto report = md::evaluate(store, query_set, cfg, &defense.ctx);
        machine = md::render_report_json(report);
        human = md::render_report_text(report);
    }
    if (!o.out.empty()) write_text_file(o.out, machine);
    std::cout << (o.json ? machine : human);
    return 0;
}

int cmd_keygen(const Opts& o) {
    const std::string out = require(o.out, "key output base path", "--out");
    const auto key = md::keygen();
    md::save_keypair(key, out);
    std::cout << key.key_id << "\n";
    std::cerr << "wrote " << out << ".key and " << out << ".pub\n";
    return 0;
}

int cmd_sign(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    const std::string key_path =
        require(s.str(o.o_key, o.key, "MEMDRIFT_KEY", "key", ""), "signing key path", "--key");
    if (o.sign_all == o.only_benign) {
        throw md::Error("sign requires exactly one of --all or --only-benign");
    }
    if (!fs::exists(fs::path(store_path) / "manifest.json")) {
        throw md::Error("no store at " + store_path);
    }
    md::StoreLock lock(store_path);
    auto store = md::MemoryStore::load(store_path);
    const auto key = md::load_private_key(key_path);
    std::size_t signed_count = 0;
    for (const auto& rec : store.records()) {
        if (o.only_benign && rec.poisoned) continue;
        md::ExperienceRecord copy = rec;
        md::attach_signature(copy, key);
        store.set_signature(rec.id, copy.signature, copy.signer_key_id);
        ++signed_count;
    }
    const std::string jsonl = store.records_jsonl();
    const fs::path final_path = fs::path(store_path) / "records.jsonl";
    const fs::path tmp_path = fs::path(store_path) / "records.jsonl.tmp";
    write_text_file(tmp_path, jsonl);
    fs::rename(tmp_path, final_path);
    std::cerr << "signed " << signed_count << " of " << store.records().size() << " records (key "
              << key.key_id << ")\n";
    return 0;
}

int cmd_purge(const Opts& o) {
    const Settings s = make_settings(o);
    const std::string store_path = require(s.str(o.o_store, o.store, "MEMDRIFT_STORE", "store", ""),
                                           "store path", "--store");
    if (!fs::exists(store_path)) {
        if (o.force) return 0;
        throw md::Error("no store at " + store_path);
    }
    if (!fs::exists(fs::path(store_path) / "manifest.json")) {
        throw md::Error("no store at " + store_path);
    }
    md::StoreLock lock(store_path);
    md::MemoryStore::purge(store_path);
    std::cerr << "purged " << store_path << "\n";
    return 0;
}

void add_common(CLI::App* sub, Opts& o) {
    o.o_config = sub->add_option("--config", o.config, "key=value config file");
}

void add_store_opt(CLI::App* sub, Opts& o) {
    o.o_store = sub->add_option("--store", o.store, "store directory");
}

void add_embedder_opts(CLI::App* sub, Opts& o) {
    o.o_embedder = sub->add_option("--embedder", o.embedder, "embedder kind: hash|remote|none");
    o.o_dims = sub->add_option("--dims", o.dims, "embedding dimensions (default 256)");
    o.o_hash_seed = sub->add_option("--hash-seed", o.hash_seed, "hash embedder seed (default 42)");
    o.o_endpoint = sub->add_option("--endpoint", o.endpoint, "remote embeddings endpoint URL");
    o.o_model = sub->add_option("--model", o.model, "remote embedding model name");
    o.o_api_key_env = sub->add_option("--api-key-env", o.api_key_env,
                                      "name of the env var holding the API key");
    o.o_timeout_ms = sub->add_option("--timeout-ms", o.timeout_ms, "remote request timeout");
    o.o_max_retries = sub->add_option("--max-retries", o.max_retries, "remote retry count");
}

void add_retrieval_opts(CLI::App* sub, Opts& o) {
    o.o_k = sub->add_option("--k", o.k, "per-channel top-k (default 3)");
    o.o_mode = sub->add_option("--mode", o.mode, "defense mode: off|provenance|rerank|both");
    o.o_alpha = sub->add_option("--alpha", o.alpha, "rerank cosine weight (default 1.0)");
    o.o_beta = sub->add_option("--beta", o.beta, "rerank risk weight (default 1.0)");
    o.o_tau = sub->add_option("--tau", o.tau, "rerank suppression threshold (default 0.5)");
    o.o_constitution = sub->add_option("--constitution", o.constitution, "constitution JSON file");
    o.o_trust = sub->add_option("--trust", o.trust, "colon-separated trusted .pub key files");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memdrift: a deterministic testbed for persistent agent-memory poisoning"};
    app.require_subcommand(1);

    // Every subcommand owns its option storage so "was this flag given"
    // checks never read another subcommand's handles.
    Opts ob, oi, oc, oq, oe, ok, os, op;

    auto* build = app.add_subcommand("build", "build a store from a seed corpus");
    add_common(build, ob);
    add_store_opt(build, ob);
    ob.o_seeds = build->add_option("--seeds", ob.seeds, "seed corpus JSON file");
    add_embedder_opts(build, ob);
    build->add_flag("--force", ob.force, "replace an existing store");

    auto* ingest = app.add_subcommand("ingest", "ingest a payload note into a store");
    add_common(ingest, oi);
    add_store_opt(ingest, oi);
    oi.o_note = ingest->add_option("--note", oi.note, "markdown payload note");
    add_embedder_opts(ingest, oi);
    ingest->add_flag("--force", oi.force, "replace an existing store");

    auto* craft = app.add_subcommand("craft-note", "render a seed corpus into a payload note");
    add_common(craft, oc);
    oc.o_seeds = craft->add_option("--seeds", oc.seeds, "seed corpus JSON file");
    oc.o_template = craft->add_option("--template", oc.template_, "note template with placeholder");
    oc.o_out = craft->add_option("--out", oc.out, "output path (stdout when omitted)");

    auto* query = app.add_subcommand("query", "retrieve records for one query");
    add_common(query, oq);
    add_store_opt(query, oq);
    query->add_option("text", oq.text, "query text")->required();
    add_retrieval_opts(query, oq);
    query->add_flag("--json", oq.json, "machine-readable output");

    auto* eval = app.add_subcommand("eval", "run a query set and report PRP");
    add_common(eval, oe);
    add_store_opt(eval, oe);
    oe.o_queries = eval->add_option("--queries", oe.queries, "JSON array of query strings");
    add_retrieval_opts(eval, oe);
    eval->add_flag("--compare", oe.compare, "evaluate all four defense modes");
    oe.o_out = eval->add_option("--out", oe.out, "write the JSON report to this file");
    eval->add_flag("--json", oe.json, "JSON to stdout instead of the text table");

    auto* keygen = app.add_subcommand("keygen", "generate a signing keypair");
    keygen->add_option("--out", ok.out, "output base path (writes <base>.key and <base>.pub)");

    auto* sign = app.add_subcommand("sign", "sign store records in place");
    add_common(sign, os);
    add_store_opt(sign, os);
    os.o_key = sign->add_option("--key", os.key, "private key file (.key)");
    sign->add_flag("--all", os.sign_all, "sign every record");
    sign->add_flag("--only-benign", os.only_benign,
                   "sign only ground-truth benign records (experiment staging)");

    auto* purge = app.add_subcommand("purge", "delete a store directory");
    add_common(purge, op);
    add_store_opt(purge, op);
    purge->add_flag("--force", op.force, "succeed even when the store is missing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (build->parsed()) return cmd_build(ob);
        if (ingest->parsed()) return cmd_ingest(oi);
        if (craft->parsed()) return cmd_craft_note(oc);
        if (query->parsed()) return cmd_query(oq);
        if (eval->parsed()) return cmd_eval(oe);
        if (keygen->parsed()) return cmd_keygen(ok);
        if (sign->parsed()) return cmd_sign(os);
        if (purge->parsed()) return cmd_purge(op);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
