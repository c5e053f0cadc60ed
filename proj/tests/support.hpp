#pragma once

// Shared helpers for the test binaries: an independent reference
// implementation of the retrieval math (kept deliberately naive, recomputing
// everything per call), plus temp-dir and subprocess utilities. Nothing here
// may call into the library's index classes; the point is to cross-check
// them.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        char lower = static_cast<char>(c);
        if (c >= 'A' && c <= 'Z') lower = static_cast<char>(c + 32);
        const bool keep = (lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9');
        if (keep) {
            cur.push_back(lower);
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Doc {
    std::string id;
    std::string text;
};

/// Okapi BM25 with k1=1.2, b=0.75 and idf = ln(1 + (N - df + 0.5)/(df + 0.5)),
/// summed over every query token occurrence. Recomputes corpus statistics
/// from scratch on each call.
inline double bm25(const std::vector<Doc>& docs, const std::string& query, std::size_t which) {
    const double k1 = 1.2;
    const double b = 0.75;
    std::vector<std::vector<std::string>> toks;
    toks.reserve(docs.size());
    double total_len = 0.0;
    for (const auto& d : docs) {
        toks.push_back(tokenize(d.text));
        total_len += static_cast<double>(toks.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avg = docs.empty() ? 0.0 : total_len / n;
    const auto& doc_toks = toks[which];
    const double dl = static_cast<double>(doc_toks.size());
    double score = 0.0;
    for (const auto& term : tokenize(query)) {
        double tf = 0.0;
        for (const auto& t : doc_toks) {
            if (t == term) tf += 1.0;
        }
        if (tf == 0.0) continue;
        double df = 0.0;
        for (const auto& dt : toks) {
            if (std::find(dt.begin(), dt.end(), term) != dt.end()) df += 1.0;
        }
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avg));
    }
    return score;
}

struct Scored {
    std::string id;
    double score{0.0};
};

inline std::vector<Scored> lex_topk(const std::vector<Doc>& docs, const std::string& query,
                                    std::size_t k) {
    std::vector<Scored> all;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double s = bm25(docs, query, i);
        if (s > 0.0) all.push_back({docs[i].id, s});
    }
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

inline std::uint64_t fnv1a(const std::string& data, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xffull;
        h *= 0x100000001b3ull;
    }
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Reference feature-hash embedding: signed unigram and character-trigram
/// features over the canonical token join, L2-normalized.
inline std::vector<float> embed(const std::string& text, std::size_t dims, std::uint64_t seed) {
    const auto tokens = tokenize(text);
    std::vector<double> acc(dims, 0.0);
    auto add = [&](const std::string& feature) {
        const std::uint64_t h = fnv1a(feature, seed);
        acc[h % dims] += (h >> 63) ? -1.0 : 1.0;
    };
    std::string canon;
    for (const auto& t : tokens) {
        add("u:" + t);
        if (!canon.empty()) canon += " ";
        canon += t;
    }
    for (std::size_t i = 0; i + 3 <= canon.size(); ++i) add("g:" + canon.substr(i, 3));
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    const double norm = std::sqrt(sq);
    std::vector<float> out(dims, 0.0f);
    if (norm > 0.0) {
        for (std::size_t i = 0; i < dims; ++i) out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::vector<Scored> vec_topk(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                                    const std::vector<float>& query, std::size_t k) {
    std::vector<Scored> all;
    for (const auto& [id, v] : entries) all.push_back({id, cosine(query, v)});
    std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

/// Merge two ranked id lists the way the union retriever orders hits:
/// best rank in either channel first, both-channel hits before single-channel
/// on rank ties, then ascending id.
inline std::vector<std::string> union_order(const std::vector<std::string>& lex_ids,
                                            const std::vector<std::string>& vec_ids) {
    struct Entry {
        std::string id;
        std::size_t rl{SIZE_MAX};
        std::size_t rv{SIZE_MAX};
    };
    std::map<std::string, Entry> by_id;
    for (std::size_t i = 0; i < lex_ids.size(); ++i) {
        auto& e = by_id[lex_ids[i]];
        e.id = lex_ids[i];
        e.rl = i;
    }
    for (std::size_t i = 0; i < vec_ids.size(); ++i) {
        auto& e = by_id[vec_ids[i]];
        e.id = vec_ids[i];
        e.rv = i;
    }
    std::vector<Entry> all;
    for (auto& [id, e] : by_id) all.push_back(e);
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        const std::size_t ra = std::min(a.rl, a.rv);
        const std::size_t rb = std::min(b.rl, b.rv);
        if (ra != rb) return ra < rb;
        const bool both_a = a.rl != SIZE_MAX && a.rv != SIZE_MAX;
        const bool both_b = b.rl != SIZE_MAX && b.rv != SIZE_MAX;
        if (both_a != both_b) return both_a;
        return a.id < b.id;
    });
    std::vector<std::string> out;
    for (const auto& e : all) out.push_back(e.id);
    return out;
}

}  // namespace oracle

namespace support {

namespace fs = std::filesystem;

inline fs::path data_path(const std::string& name) {
    return fs::path(MEMDRIFT_DATA_DIR) / name;
}

inline std::string cli_path() {
    if (const char* p = std::getenv("MEMDRIFT_CLI"); p != nullptr && *p != '\0') return p;
    return MEMDRIFT_CLI_PATH;
}

/// Fresh empty directory under the system temp root; unique per call.
inline fs::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path p = fs::temp_directory_path() /
                       ("memdrift_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

struct CliResult {
    int exit_code{-1};
    std::string out;
    std::string err;
};

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out.push_back(c);
        }
    }
    out += "'";
    return out;
}

/// Run the CLI binary as a subprocess with optional extra environment
/// variables, capturing stdout and stderr separately.
inline CliResult run_cli(const std::vector<std::string>& args,
                         const std::vector<std::pair<std::string, std::string>>& env = {}) {
    const fs::path dir = fresh_dir("cli_io");
    const fs::path out_file = dir / "out";
    const fs::path err_file = dir / "err";
    std::string cmd = "env";
    for (const auto& [k, v] : env) cmd += " " + k + "=" + shell_quote(v);
    cmd += " " + shell_quote(cli_path());
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(out_file.string()) + " 2>" + shell_quote(err_file.string());
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = read_file(out_file);
    res.err = read_file(err_file);
    fs::remove_all(dir);
    return res;
}

inline bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

/// Random word drawn from a closed synthetic vocabulary.
inline std::string rand_word(std::mt19937_64& rng, std::size_t vocab) {
    std::uniform_int_distribution<std::size_t> d(0, vocab - 1);
    return "w" + std::to_string(d(rng));
}

inline std::string rand_text(std::mt19937_64& rng, std::size_t vocab, std::size_t min_len,
                             std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> dl(min_len, max_len);
    const std::size_t len = dl(rng);
    std::string text;
    for (std::size_t i = 0; i < len; ++i) {
        if (!text.empty()) text += " ";
        text += rand_word(rng, vocab);
    }
    return text;
}

}  // namespace support
