#include "memdrift/store.hpp"

#include <algorithm>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "memdrift/defense.hpp"
#include "memdrift/error.hpp"

namespace memdrift {

namespace {

constexpr char kVectorsMagic[4] = {'M', 'G', 'V', '1'};
constexpr std::size_t kNoRank = static_cast<std::size_t>(-1);

std::string now_utc_iso() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void append_u32_le(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_f32_le(Bytes& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    append_u32_le(out, bits);
}

float read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = read_u32_le(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

void write_file(const std::filesystem::path& path, const char* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(std::string("cannot read ") + what + ": " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string to_string(DefenseMode mode) {
    switch (mode) {
        case DefenseMode::off: return "off";
        case DefenseMode::provenance: return "provenance";
        case DefenseMode::rerank: return "rerank";
        case DefenseMode::both: return "both";
    }
    throw Error("invalid defense mode");
}

DefenseMode defense_mode_from_string(const std::string& s) {
    if (s == "off") return DefenseMode::off;
    if (s == "provenance") return DefenseMode::provenance;
    if (s == "rerank") return DefenseMode::rerank;
    if (s == "both") return DefenseMode::both;
    throw Error("unknown defense mode: " + s);
}

MemoryStore MemoryStore::build(std::vector<ExperienceRecord> records, const EmbedderConfig& embedder) {
    MemoryStore store;
    store.records_ = std::move(records);
    for (std::size_t i = 0; i < store.records_.size(); ++i) {
        const auto& rec = store.records_[i];
        if (rec.id.empty()) throw Error("record with empty id");
        if (rec.query.empty()) throw Error("record has empty query: " + rec.id);
        if (!store.by_id_.emplace(rec.id, i).second) {
            throw Error("duplicate record id: " + rec.id);
        }
    }
    store.manifest_.format_version = 1;
    store.manifest_.embedder = embedder;
    store.manifest_.created_at = now_utc_iso();
    for (const auto& rec : store.records_) {
        if (rec.poisoned) ++store.manifest_.n_poisoned; else ++store.manifest_.n_benign;
    }

    std::vector<std::vector<float>> vectors;
    if (embedder.kind != EmbedderKind::none) {
        vectors.reserve(store.records_.size());
        for (const auto& rec : store.records_) {
            try {
                vectors.push_back(embed(indexed_text(rec), embedder));
            } catch (const Error& e) {
                throw Error("record " + rec.id + ": " + e.what());
            }
        }
    }
    store.build_indices(std::move(vectors));
    return store;
}

MemoryStore MemoryStore::merge(const MemoryStore& base, std::vector<ExperienceRecord> addition) {
    std::string collisions;
    for (const auto& rec : addition) {
        if (base.by_id_.count(rec.id) != 0) {
            if (!collisions.empty()) collisions += ", ";
            collisions += rec.id;
        }
    }
    if (!collisions.empty()) throw Error("id collision on merge: " + collisions);

    MemoryStore store;
    store.records_ = base.records_;
    store.records_.insert(store.records_.end(), std::make_move_iterator(addition.begin()),
                          std::make_move_iterator(addition.end()));
    for (std::size_t i = 0; i < store.records_.size(); ++i) {
        if (!store.by_id_.emplace(store.records_[i].id, i).second) {
            throw Error("duplicate record id: " + store.records_[i].id);
        }
    }
    store.manifest_ = base.manifest_;
    store.manifest_.created_at = now_utc_iso();
    store.manifest_.n_benign = 0;
    store.manifest_.n_poisoned = 0;
    for (const auto& rec : store.records_) {
        if (rec.poisoned) ++store.manifest_.n_poisoned; else ++store.manifest_.n_benign;
    }

    std::vector<std::vector<float>> vectors;
    if (store.manifest_.embedder.kind != EmbedderKind::none) {
        vectors.reserve(store.records_.size());
        for (std::size_t i = 0; i < base.records_.size(); ++i) {
            vectors.push_back(base.vec().vector_of(base.records_[i].id));
        }
        for (std::size_t i = base.records_.size(); i < store.records_.size(); ++i) {
            const auto& rec = store.records_[i];
            try {
                vectors.push_back(embed(indexed_text(rec), store.manifest_.embedder));
            } catch (const Error& e) {
                throw Error("record " + rec.id + ": " + e.what());
            }
        }
    }
    store.build_indices(std::move(vectors));
    return store;
}

void MemoryStore::build_indices(std::vector<std::vector<float>> vectors) {
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(records_.size());
    for (const auto& rec : records_) docs.emplace_back(rec.id, indexed_text(rec));
    lex_ = LexIndex::build(docs);
    if (manifest_.embedder.kind != EmbedderKind::none) {
        std::vector<std::string> ids;
        ids.reserve(records_.size());
        for (const auto& rec : records_) ids.push_back(rec.id);
        vec_ = VecIndex::build(std::move(ids), std::move(vectors), manifest_.embedder.dims);
    } else {
        vec_.reset();
    }
}

const ExperienceRecord& MemoryStore::record(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error("unknown record id: " + id);
    return records_[it->second];
}

bool MemoryStore::has_record(const std::string& id) const { return by_id_.count(id) != 0; }

const VecIndex& MemoryStore::vec() const {
    if (!vec_) throw Error("vector channel disabled (embedder none)");
    return *vec_;
}

void MemoryStore::set_signature(const std::string& id, const std::string& signature_b64,
                                const std::string& signer_key_id) {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error("unknown record id: " + id);
    records_[it->second].signature = signature_b64;
    records_[it->second].signer_key_id = signer_key_id;
}

RetrievalResult MemoryStore::retrieve(const std::string& query, const RetrievalConfig& cfg,
                                      const DefenseContext* ctx) const {
    if (cfg.k < 1) throw Error("retrieval k must be at least 1");
    const bool rerank_mode = cfg.mode == DefenseMode::rerank || cfg.mode == DefenseMode::both;

    RetrievalResult res;
    res.query = query;

    const auto lex_hits = lex_.top_k(query, cfg.k);

    std::vector<ScoredId> vec_hits;
    std::optional<std::vector<float>> query_vec;
    if (vec_) {
        try {
            query_vec = embed(query, manifest_.embedder);
        } catch (const Error& e) {
            if (std::string(e.what()).find("unembeddable") == std::string::npos) throw;
            if (rerank_mode) throw Error("rerank requires embeddings (query has no tokens)");
            res.lex_fallback = true;
        }
        if (query_vec) vec_hits = vec_->top_k(*query_vec, cfg.k);
    } else if (rerank_mode) {
        throw Error("rerank requires embeddings");
    }

    // Deduplicated union ordered by best per-channel rank: min(rank_lex,
    // rank_vec) ascending, both-channel hits before single-channel on ties,
    // then ascending id.
    struct Entry {
        Hit hit;
        std::size_t rank_lex{kNoRank};
        std::size_t rank_vec{kNoRank};
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t r = 0; r < lex_hits.size(); ++r) {
        Entry e;
        e.hit.record_id = lex_hits[r].id;
        e.hit.lex = true;
        e.hit.lex_score = lex_hits[r].score;
        e.rank_lex = r;
        pos.emplace(lex_hits[r].id, entries.size());
        entries.push_back(std::move(e));
    }
    for (std::size_t r = 0; r < vec_hits.size(); ++r) {
        auto it = pos.find(vec_hits[r].id);
        if (it != pos.end()) {
            auto& e = entries[it->second];
            e.hit.vec = true;
            e.hit.cosine = vec_hits[r].score;
            e.rank_vec = r;
        } else {
            Entry e;
            e.hit.record_id = vec_hits[r].id;
            e.hit.vec = true;
            e.hit.cosine = vec_hits[r].score;
            e.rank_vec = r;
            pos.emplace(vec_hits[r].id, entries.size());
            entries.push_back(std::move(e));
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        const std::size_t ra = std::min(a.rank_lex, a.rank_vec);
        const std::size_t rb = std::min(b.rank_lex, b.rank_vec);
        if (ra != rb) return ra < rb;
        const int sa = (a.hit.lex && a.hit.vec) ? 0 : 1;
        const int sb = (b.hit.lex && b.hit.vec) ? 0 : 1;
        if (sa != sb) return sa < sb;
        return a.hit.record_id < b.hit.record_id;
    });
    res.hits.reserve(entries.size());
    for (auto& e : entries) res.hits.push_back(std::move(e.hit));

    if (cfg.mode == DefenseMode::provenance || cfg.mode == DefenseMode::both) {
        static const std::vector<Bytes> kNoKeys;
        filter_provenance(res, *this, ctx ? ctx->trusted_keys : kNoKeys);
    }
    if (rerank_mode) {
        static const Constitution kEmpty = Constitution::empty();
        const Constitution& constitution =
            (ctx && ctx->constitution) ? *ctx->constitution : kEmpty;
        rerank(res, *this, *query_vec, constitution, cfg.alpha, cfg.beta, cfg.tau);
    }
    return res;
}

std::string MemoryStore::records_jsonl() const {
    std::string out;
    for (const auto& rec : records_) {
        out += record_to_json(rec).dump();
        out += "\n";
    }
    return out;
}

Bytes MemoryStore::vectors_bin() const {
    if (!vec_) throw Error("vector channel disabled (embedder none)");
    Bytes out;
    out.reserve(12 + 4 * static_cast<std::size_t>(vec_->dims()) * records_.size());
    out.insert(out.end(), kVectorsMagic, kVectorsMagic + 4);
    append_u32_le(out, vec_->dims());
    append_u32_le(out, static_cast<std::uint32_t>(records_.size()));
    for (const auto& rec : records_) {
        for (float f : vec_->vector_of(rec.id)) append_f32_le(out, f);
    }
    return out;
}

nlohmann::json MemoryStore::manifest_json(bool include_created_at) const {
    nlohmann::json j{
        {"format_version", manifest_.format_version},
        {"embedder", embedder_config_to_json(manifest_.embedder)},
        {"n_benign", manifest_.n_benign},
        {"n_poisoned", manifest_.n_poisoned},
    };
    if (include_created_at) j["created_at"] = manifest_.created_at;
    return j;
}

std::string MemoryStore::content_hash() const {
    Bytes buf;
    auto add_segment = [&buf](const std::string& label, const unsigned char* data, std::size_t size) {
        buf.insert(buf.end(), label.begin(), label.end());
        buf.push_back(0x00);
        buf.insert(buf.end(), data, data + size);
    };
    const std::string jsonl = records_jsonl();
    add_segment("records.jsonl", reinterpret_cast<const unsigned char*>(jsonl.data()), jsonl.size());
    if (vec_) {
        const Bytes bin = vectors_bin();
        add_segment("vectors.bin", bin.data(), bin.size());
    }
    const std::string manifest = manifest_json(false).dump();
    add_segment("manifest", reinterpret_cast<const unsigned char*>(manifest.data()), manifest.size());
    return hex_encode(sha256(buf));
}

void MemoryStore::persist(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    if (fs::exists(dir)) throw Error("store already exists: " + dir.string());
    const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
    fs::create_directories(parent);

    std::mt19937_64 rng(std::random_device{}());
    fs::path tmp;
    do {
        char buf[32];
        std::snprintf(buf, sizeof(buf), ".tmp-%016llx",
                      static_cast<unsigned long long>(rng()));
        tmp = parent / buf;
    } while (fs::exists(tmp));

    try {
        fs::create_directory(tmp);
        const std::string manifest = manifest_json(true).dump(2) + "\n";
        write_file(tmp / "manifest.json", manifest.data(), manifest.size());
        const std::string jsonl = records_jsonl();
        write_file(tmp / "records.jsonl", jsonl.data(), jsonl.size());
        if (vec_) {
            const Bytes bin = vectors_bin();
            write_file(tmp / "vectors.bin", reinterpret_cast<const char*>(bin.data()), bin.size());
        }
        fs::rename(tmp, dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
}

MemoryStore MemoryStore::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir) || !fs::exists(dir / "manifest.json")) {
        throw Error("no store at " + dir.string());
    }

    nlohmann::json mj;
    try {
        mj = nlohmann::json::parse(read_text_file(dir / "manifest.json", "manifest"));
    } catch (const nlohmann::json::exception& e) {
        throw Error("manifest.json is not valid JSON: " + std::string(e.what()));
    }
    MemoryStore store;
    try {
        store.manifest_.format_version = mj.at("format_version").get<int>();
        store.manifest_.embedder = embedder_config_from_json(mj.at("embedder"));
        store.manifest_.created_at = mj.value("created_at", std::string{});
        store.manifest_.n_benign = mj.at("n_benign").get<std::size_t>();
        store.manifest_.n_poisoned = mj.at("n_poisoned").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed manifest: " + std::string(e.what()));
    }
    if (store.manifest_.format_version != 1) {
        throw Error("unsupported store format_version: " +
                    std::to_string(store.manifest_.format_version));
    }

    const std::string jsonl = read_text_file(dir / "records.jsonl", "records");
    std::istringstream lines(jsonl);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("records.jsonl line is not valid JSON: " + std::string(e.what()));
        }
        store.records_.push_back(record_from_json(j));
    }
    for (std::size_t i = 0; i < store.records_.size(); ++i) {
        if (!store.by_id_.emplace(store.records_[i].id, i).second) {
            throw Error("duplicate record id: " + store.records_[i].id);
        }
    }

    std::size_t n_poisoned = 0;
    for (const auto& rec : store.records_) n_poisoned += rec.poisoned ? 1 : 0;
    if (store.manifest_.n_poisoned != n_poisoned ||
        store.manifest_.n_benign != store.records_.size() - n_poisoned) {
        throw Error("manifest record counts do not match records.jsonl");
    }

    std::vector<std::vector<float>> vectors;
    if (store.manifest_.embedder.kind != EmbedderKind::none) {
        const std::string raw = read_text_file(dir / "vectors.bin", "vectors");
        const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
        if (raw.size() < 12 || std::memcmp(p, kVectorsMagic, 4) != 0) {
            throw Error("corrupt vectors.bin: bad magic");
        }
        const std::uint32_t dims = read_u32_le(p + 4);
        const std::uint32_t count = read_u32_le(p + 8);
        if (dims != store.manifest_.embedder.dims) {
            throw Error("corrupt vectors.bin: dims disagree with manifest");
        }
        if (count != store.records_.size()) {
            throw Error("corrupt vectors.bin: row count disagrees with records.jsonl");
        }
        const std::size_t expect = 12 + 4 * static_cast<std::size_t>(dims) * count;
        if (raw.size() != expect) {
            throw Error("corrupt vectors.bin: expected " + std::to_string(expect) + " bytes, got " +
                        std::to_string(raw.size()));
        }
        vectors.resize(count);
        const unsigned char* row = p + 12;
        for (std::uint32_t i = 0; i < count; ++i) {
            vectors[i].resize(dims);
            for (std::uint32_t d = 0; d < dims; ++d) {
                vectors[i][d] = read_f32_le(row);
                row += 4;
            }
        }
    }
    store.build_indices(std::move(vectors));
    return store;
}

void MemoryStore::purge(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir) || !fs::exists(dir / "manifest.json")) {
        throw Error("no store at " + dir.string());
    }
    fs::remove_all(dir);
}

StoreLock::StoreLock(const std::filesystem::path& store_dir) {
    const auto lock_path = store_dir / ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file: " + lock_path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error("store is locked: " + store_dir.string());
    }
}

StoreLock::~StoreLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

}  // namespace memdrift
