#include "memdrift/embedder.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "memdrift/error.hpp"
#include "memdrift/text.hpp"

namespace memdrift {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

// Seeded FNV-1a 64: the seed's 8 little-endian bytes are mixed before the
// data so distinct seeds yield unrelated bucket layouts.
std::uint64_t fnv1a_seeded(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < 8; ++i) {
        h ^= static_cast<std::uint64_t>((seed >> (8 * i)) & 0xff);
        h *= kFnvPrime;
    }
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::vector<float> normalize(std::vector<double> acc) {
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw Error("embedding has zero norm");
    std::vector<float> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

}  // namespace

std::string to_string(EmbedderKind kind) {
    switch (kind) {
        case EmbedderKind::hash: return "hash";
        case EmbedderKind::remote: return "remote";
        case EmbedderKind::none: return "none";
    }
    throw Error("invalid embedder kind");
}

EmbedderKind embedder_kind_from_string(const std::string& s) {
    if (s == "hash") return EmbedderKind::hash;
    if (s == "remote") return EmbedderKind::remote;
    if (s == "none") return EmbedderKind::none;
    throw Error("unknown embedder kind: " + s);
}

nlohmann::json embedder_config_to_json(const EmbedderConfig& cfg) {
    nlohmann::json j{{"kind", to_string(cfg.kind)}, {"dims", cfg.dims}};
    if (cfg.kind == EmbedderKind::hash) j["seed"] = cfg.seed;
    if (cfg.kind == EmbedderKind::remote) {
        j["endpoint"] = cfg.endpoint;
        j["model"] = cfg.model;
        if (!cfg.api_key_env.empty()) j["api_key_env"] = cfg.api_key_env;
    }
    return j;
}

EmbedderConfig embedder_config_from_json(const nlohmann::json& j) {
    EmbedderConfig cfg;
    try {
        cfg.kind = embedder_kind_from_string(j.at("kind").get<std::string>());
        cfg.dims = j.at("dims").get<std::uint32_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("endpoint")) cfg.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("model")) cfg.model = j.at("model").get<std::string>();
        if (j.contains("api_key_env")) cfg.api_key_env = j.at("api_key_env").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed embedder config: ") + e.what());
    }
    if (cfg.kind == EmbedderKind::remote && cfg.endpoint.empty()) {
        throw Error("remote embedder config lacks endpoint");
    }
    return cfg;
}

std::vector<float> embed_hash(std::string_view text, std::uint32_t dims, std::uint64_t seed) {
    if (dims < 8) throw Error("embedding dims must be at least 8");
    auto tokens = tokenize(text);
    if (tokens.empty()) throw Error("unembeddable text");
    std::vector<double> acc(dims, 0.0);
    auto add = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a_seeded(feature, seed);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        acc[h % dims] += sign;
    };
    std::string canon;
    for (const auto& t : tokens) {
        add("u:" + t);
        if (!canon.empty()) canon += " ";
        canon += t;
    }
    for (std::size_t i = 0; i + 3 <= canon.size(); ++i) {
        add("g:" + canon.substr(i, 3));
    }
    return normalize(std::move(acc));
}

namespace {

// Split a URL into the scheme://host[:port] base httplib wants and the
// request path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("invalid endpoint url: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::vector<float> embed_remote(const std::string& text, const EmbedderConfig& cfg) {
    if (cfg.endpoint.empty()) throw Error("remote embedder config lacks endpoint");
    const auto [base, path] = split_url(cfg.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000);
    client.set_read_timeout(0, cfg.timeout_ms * 1000);
    client.set_write_timeout(0, cfg.timeout_ms * 1000);

    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        const char* token = std::getenv(cfg.api_key_env.c_str());
        if (token == nullptr || *token == '\0') {
            throw Error("api key environment variable not set: " + cfg.api_key_env);
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const nlohmann::json body{{"model", cfg.model}, {"input", nlohmann::json::array({text})}};
    const std::string payload = body.dump();

    httplib::Result res;
    int attempts = 0;
    for (;;) {
        ++attempts;
        res = client.Post(path, headers, payload, "application/json");
        const bool transient = !res || res->status >= 500;
        if (!transient || attempts > cfg.max_retries) break;
    }
    if (!res) {
        throw Error("embedding request to " + cfg.endpoint + " failed: " +
                    httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error("embedding request to " + cfg.endpoint + " failed: HTTP " +
                    std::to_string(res->status));
    }

    std::vector<double> values;
    try {
        const auto j = nlohmann::json::parse(res->body);
        values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("embedding response from " + cfg.endpoint + " malformed: " + e.what());
    }
    if (values.size() != cfg.dims) {
        throw Error("embedding dimension mismatch: got " + std::to_string(values.size()) +
                    ", index expects " + std::to_string(cfg.dims));
    }
    return normalize(std::move(values));
}

std::vector<float> embed(const std::string& text, const EmbedderConfig& cfg) {
    switch (cfg.kind) {
        case EmbedderKind::hash: return embed_hash(text, cfg.dims, cfg.seed);
        case EmbedderKind::remote: return embed_remote(text, cfg);
        case EmbedderKind::none: throw Error("vector channel disabled (embedder none)");
    }
    throw Error("invalid embedder kind");
}

}  // namespace memdrift
