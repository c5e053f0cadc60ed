#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace memdrift {

enum class EmbedderKind { hash, remote, none };

std::string to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(const std::string& s);

struct EmbedderConfig {
    EmbedderKind kind{EmbedderKind::hash};
    std::uint32_t dims{256};
    std::uint64_t seed{42};   // hash kind only; persisted so stores are portable
    std::string endpoint;     // remote kind only
    std::string model;        // remote kind only
    std::string api_key_env;  // name of env var holding the bearer token; never the token
    int timeout_ms{30000};
    int max_retries{0};
};

/// Manifest round-trip covers the semantic fields (kind/dims/seed/endpoint/
/// model/api_key_env); timeout and retries are per-invocation knobs.
nlohmann::json embedder_config_to_json(const EmbedderConfig& cfg);
EmbedderConfig embedder_config_from_json(const nlohmann::json& j);

/// Deterministic feature-hash embedding: token unigrams ("u:" + token, once
/// per occurrence) and char 3-grams ("g:" + gram) over the space-joined token
/// stream, hashed with seeded 64-bit FNV-1a into dims signed buckets, then
/// L2-normalized. Throws "unembeddable text" when no token survives.
std::vector<float> embed_hash(std::string_view text, std::uint32_t dims, std::uint64_t seed);

/// One POST {"model": ..., "input": [text]} to cfg.endpoint, expecting
/// data[0].embedding; result is L2-normalized. Retries transport errors and
/// 5xx up to cfg.max_retries. Throws on failure (message carries endpoint and
/// status) and on dimension mismatch against cfg.dims.
std::vector<float> embed_remote(const std::string& text, const EmbedderConfig& cfg);

/// Dispatch on cfg.kind; kind none throws (vector channel disabled).
std::vector<float> embed(const std::string& text, const EmbedderConfig& cfg);

}  // namespace memdrift
