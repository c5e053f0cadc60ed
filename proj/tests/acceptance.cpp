// End-to-end acceptance checks. Each case prints one PASS/FAIL line so the
// suite's verdict can be read off the log directly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "memdrift/constitution.hpp"
#include "memdrift/corpus.hpp"
#include "memdrift/defense.hpp"
#include "memdrift/eval.hpp"
#include "memdrift/keys.hpp"
#include "memdrift/note.hpp"
#include "memdrift/store.hpp"
#include "support.hpp"

using memdrift::Constitution;
using memdrift::DefenseContext;
using memdrift::DefenseMode;
using memdrift::EmbedderConfig;
using memdrift::ExperienceRecord;
using memdrift::MemoryStore;
using memdrift::RetrievalConfig;

namespace {

constexpr const char* kPinnedStoreId =
    "610c11b13dde4409c17cb0872fb324e93cfa5290d27799ffad8896edf2a8e8ce";
constexpr const char* kPinnedReportSha256 =
    "6279b5bfad3bc2279266ab07946516e412c110f064969864955767033f866284";

struct Checker {
    int criterion;
    const char* slug;
    bool pass{true};
    std::vector<std::string> notes;

    Checker(int n, const char* s) : criterion(n), slug(s) {}

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (notes.size() < 12) notes.push_back(what);
        }
    }

    ~Checker() {
        std::printf("[acceptance] criterion %d (%s): %s\n", criterion, slug,
                    pass ? "PASS" : "FAIL");
        for (const auto& n : notes) std::printf("[acceptance]   failed: %s\n", n.c_str());
        std::fflush(stdout);
    }
};

MemoryStore shipped_store() {
    return MemoryStore::build(
        memdrift::corpus_records(memdrift::load_corpus_file(support::data_path("seeds.json"))),
        EmbedderConfig{});
}

memdrift::QuerySet shipped_queries() {
    return memdrift::load_query_set(support::data_path("queries.json"));
}

void sign_store(MemoryStore& store, const memdrift::KeyPair& key, bool only_benign) {
    for (const auto& rec : store.records()) {
        if (only_benign && rec.poisoned) continue;
        auto copy = rec;
        memdrift::attach_signature(copy, key);
        store.set_signature(rec.id, copy.signature, copy.signer_key_id);
    }
}

std::string sha256_hex(const std::string& text) {
    return memdrift::hex_encode(
        memdrift::sha256(memdrift::Bytes(text.begin(), text.end())));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TEST_CASE("criterion 1: retrieval equals the reference implementation") {
    Checker c(1, "retrieval-oracle-equivalence");
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20250816);
    std::uniform_int_distribution<std::size_t> dn(1, 50);
    std::uniform_int_distribution<std::size_t> dk(1, 5);
    EmbedderConfig ecfg;
    ecfg.dims = 64;

    for (int iter = 0; iter < 200 && c.pass; ++iter) {
        const std::size_t n = dn(rng);
        std::vector<ExperienceRecord> records;
        std::vector<oracle::Doc> docs;
        std::vector<std::pair<std::string, std::vector<float>>> entries;
        for (std::size_t i = 0; i < n; ++i) {
            ExperienceRecord rec;
            rec.id = "d" + std::to_string(100 + i);
            rec.query = support::rand_text(rng, 40, 1, 6);
            rec.trace = support::rand_text(rng, 40, 2, 6);
            records.push_back(rec);
            docs.push_back({rec.id, memdrift::indexed_text(rec)});
            entries.emplace_back(rec.id, oracle::embed(memdrift::indexed_text(rec), 64, 42));
        }
        const auto store = MemoryStore::build(records, ecfg);
        const std::string query = support::rand_text(rng, 40, 1, 5);
        const std::size_t k = dk(rng);

        const auto lex_expect = oracle::lex_topk(docs, query, k);
        const auto lex_got = store.lex().top_k(query, k);
        c.expect(lex_got.size() == lex_expect.size(), "lex top-k size iter " + std::to_string(iter));
        for (std::size_t i = 0; i < std::min(lex_got.size(), lex_expect.size()); ++i) {
            c.expect(lex_got[i].id == lex_expect[i].id, "lex order iter " + std::to_string(iter));
            c.expect(std::abs(lex_got[i].score - lex_expect[i].score) < 1e-9,
                     "lex score iter " + std::to_string(iter));
        }

        const auto qvec = oracle::embed(query, 64, 42);
        const auto vec_expect = oracle::vec_topk(entries, qvec, k);
        const auto vec_got = store.vec().top_k(memdrift::embed_hash(query, 64, 42), k);
        c.expect(vec_got.size() == vec_expect.size(), "vec top-k size iter " + std::to_string(iter));
        for (std::size_t i = 0; i < std::min(vec_got.size(), vec_expect.size()); ++i) {
            c.expect(vec_got[i].id == vec_expect[i].id, "vec order iter " + std::to_string(iter));
            c.expect(std::abs(vec_got[i].score - vec_expect[i].score) < 1e-9,
                     "vec score iter " + std::to_string(iter));
        }

        std::vector<std::string> lex_ids;
        std::vector<std::string> vec_ids;
        for (const auto& h : lex_expect) lex_ids.push_back(h.id);
        for (const auto& h : vec_expect) vec_ids.push_back(h.id);
        const auto union_expect = oracle::union_order(lex_ids, vec_ids);
        RetrievalConfig cfg;
        cfg.k = k;
        const auto res = store.retrieve(query, cfg);
        c.expect(res.hits.size() == union_expect.size(), "union size iter " + std::to_string(iter));
        for (std::size_t i = 0; i < std::min(res.hits.size(), union_expect.size()); ++i) {
            c.expect(res.hits[i].record_id == union_expect[i],
                     "union order iter " + std::to_string(iter));
            if (res.hits[i].lex && res.hits[i].lex_score) {
                double expect_score = 0.0;
                for (const auto& h : lex_expect) {
                    if (h.id == res.hits[i].record_id) expect_score = h.score;
                }
                c.expect(std::abs(*res.hits[i].lex_score - expect_score) < 1e-9,
                         "union lex score iter " + std::to_string(iter));
            }
            if (res.hits[i].vec && res.hits[i].cosine) {
                double expect_score = 0.0;
                for (const auto& h : vec_expect) {
                    if (h.id == res.hits[i].record_id) expect_score = h.score;
                }
                c.expect(std::abs(*res.hits[i].cosine - expect_score) < 1e-9,
                         "union cosine iter " + std::to_string(iter));
            }
        }
    }
    const double elapsed = seconds_since(start);
    c.expect(elapsed < 30.0, "took " + std::to_string(elapsed) + "s");
    CHECK(c.pass);
}

TEST_CASE("criterion 2: the shipped corpus poisons at least a quarter of hits") {
    Checker c(2, "poisoning-prp-floor");
    const auto start = std::chrono::steady_clock::now();
    const auto store = shipped_store();
    const auto report = memdrift::evaluate(store, shipped_queries(), RetrievalConfig{});
    c.expect(report.prp_defined, "rate undefined");
    c.expect(report.prp >= 0.25, "prp " + std::to_string(report.prp) + " below floor");
    c.expect(report.t_tot == 43, "t_tot " + std::to_string(report.t_tot));
    c.expect(report.p_tot == 21, "p_tot " + std::to_string(report.p_tot));
    c.expect(report.store_id == kPinnedStoreId, "store id drifted: " + report.store_id);

    const std::vector<std::pair<std::size_t, std::size_t>> pinned{
        {5, 3}, {3, 2}, {4, 1}, {3, 2}, {3, 2}, {3, 1},
        {4, 3}, {4, 0}, {4, 3}, {3, 1}, {3, 1}, {4, 2}};
    c.expect(report.per_query.size() == pinned.size(), "query count");
    for (std::size_t i = 0; i < std::min(report.per_query.size(), pinned.size()); ++i) {
        c.expect(report.per_query[i].t == pinned[i].first &&
                     report.per_query[i].p == pinned[i].second,
                 "per-query row " + std::to_string(i));
    }
    c.expect(sha256_hex(memdrift::render_report_json(report)) == kPinnedReportSha256,
             "report bytes drifted");
    const double elapsed = seconds_since(start);
    c.expect(elapsed < 10.0, "took " + std::to_string(elapsed) + "s");
    CHECK(c.pass);
}

TEST_CASE("criterion 3: the union channel amplifies poisoning") {
    Checker c(3, "union-dominance");
    const auto store = shipped_store();
    const auto queries = shipped_queries();
    const std::size_t k = 3;

    std::size_t lex_t = 0;
    std::size_t lex_p = 0;
    std::size_t vec_t = 0;
    std::size_t vec_p = 0;
    for (const auto& q : queries.queries) {
        for (const auto& h : store.lex().top_k(q, k)) {
            ++lex_t;
            if (store.record(h.id).poisoned) ++lex_p;
        }
        const auto qv = memdrift::embed_hash(q, 256, 42);
        for (const auto& h : store.vec().top_k(qv, k)) {
            ++vec_t;
            if (store.record(h.id).poisoned) ++vec_p;
        }
    }
    const double lex_prp = static_cast<double>(lex_p) / static_cast<double>(lex_t);
    const double vec_prp = static_cast<double>(vec_p) / static_cast<double>(vec_t);

    const auto report = memdrift::evaluate(store, queries, RetrievalConfig{});
    c.expect(report.prp >= lex_prp - 1e-12,
             "union " + std::to_string(report.prp) + " < lex " + std::to_string(lex_prp));
    c.expect(report.prp >= vec_prp - 1e-12,
             "union " + std::to_string(report.prp) + " < vec " + std::to_string(vec_prp));

    std::size_t single_channel_poisoned = 0;
    for (const auto& q : queries.queries) {
        for (const auto& h : store.retrieve(q, RetrievalConfig{}).hits) {
            if (store.record(h.record_id).poisoned && (h.lex != h.vec)) ++single_channel_poisoned;
        }
    }
    c.expect(single_channel_poisoned >= 1, "no single-channel poisoned hit");
    CHECK(c.pass);
}

TEST_CASE("criterion 4: provenance attestation blocks unsigned records") {
    Checker c(4, "provenance-blocks-unsigned");
    auto store = shipped_store();
    const auto key = memdrift::keygen();
    sign_store(store, key, true);
    RetrievalConfig cfg;
    cfg.mode = DefenseMode::provenance;
    DefenseContext ctx;
    ctx.trusted_keys.push_back(key.public_key);
    const auto report = memdrift::evaluate(store, shipped_queries(), cfg, &ctx);
    c.expect(report.p_tot == 0, "p_tot " + std::to_string(report.p_tot));
    c.expect(report.prp == 0.0, "prp nonzero");
    c.expect(report.prp_defined, "no benign hits survived");
    for (const auto& q : report.per_query) {
        c.expect(q.p == 0, "poisoned hit for query: " + q.query);
    }

    const auto& victim = store.record("exp_benign_001");
    auto sig = memdrift::base64_decode(victim.signature);
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<std::size_t> dpos(0, sig.size() - 1);
    std::uniform_int_distribution<int> dxor(1, 255);
    int forged = 0;
    for (int i = 0; i < 1000; ++i) {
        auto rec = victim;
        auto mutated = sig;
        mutated[dpos(rng)] ^= static_cast<unsigned char>(dxor(rng));
        rec.signature = memdrift::base64_encode(mutated);
        if (memdrift::verify_inline(rec, key.public_key)) ++forged;
    }
    c.expect(forged == 0, std::to_string(forged) + " of 1000 mutations verified");
    CHECK(c.pass);
}

TEST_CASE("criterion 5: the constitution separates poisoned from benign") {
    Checker c(5, "constitution-blocks-risky");
    const auto store = shipped_store();
    const auto constitution =
        Constitution::load_file(support::data_path("constitution.json"));
    const double tau = RetrievalConfig{}.tau;
    for (const auto& rec : store.records()) {
        const auto risk = memdrift::record_risk(rec, constitution);
        if (rec.poisoned) {
            c.expect(risk.value > tau, rec.id + " risk " + std::to_string(risk.value));
        } else {
            c.expect(risk.value == 0.0, rec.id + " flagged benign");
        }
    }
    RetrievalConfig cfg;
    cfg.mode = DefenseMode::rerank;
    DefenseContext ctx;
    ctx.constitution = &constitution;
    const auto report = memdrift::evaluate(store, shipped_queries(), cfg, &ctx);
    c.expect(report.p_tot == 0, "p_tot " + std::to_string(report.p_tot));
    c.expect(report.prp == 0.0, "prp nonzero");
    CHECK(c.pass);
}

TEST_CASE("criterion 6: defenses are transparent on clean stores") {
    Checker c(6, "defense-transparency");
    auto store = shipped_store();
    const auto key = memdrift::keygen();
    sign_store(store, key, false);
    const auto queries = shipped_queries();

    RetrievalConfig off;
    RetrievalConfig prov;
    prov.mode = DefenseMode::provenance;
    DefenseContext prov_ctx;
    prov_ctx.trusted_keys.push_back(key.public_key);
    for (const auto& q : queries.queries) {
        const auto a = store.retrieve(q, off);
        const auto b = store.retrieve(q, prov, &prov_ctx);
        bool same = a.hits.size() == b.hits.size();
        for (std::size_t i = 0; same && i < a.hits.size(); ++i) {
            same = a.hits[i].record_id == b.hits[i].record_id && !b.hits[i].suppressed;
        }
        c.expect(same, "provenance changed hits for: " + q);
    }

    const auto empty_constitution = Constitution::empty();
    RetrievalConfig neutral;
    neutral.mode = DefenseMode::rerank;
    neutral.beta = 0.0;
    neutral.tau = 1.0;
    DefenseContext rr_ctx;
    rr_ctx.constitution = &empty_constitution;
    for (const auto& q : queries.queries) {
        const auto a = store.retrieve(q, off);
        const auto b = store.retrieve(q, neutral, &rr_ctx);
        std::set<std::string> sa;
        std::set<std::string> sb;
        for (const auto& h : a.hits) sa.insert(h.record_id);
        for (const auto& h : b.hits) {
            if (!h.suppressed) sb.insert(h.record_id);
        }
        c.expect(sa == sb, "neutral rerank changed the hit set for: " + q);
    }
    CHECK(c.pass);
}

TEST_CASE("criterion 7: stores persist, reload identically, and purge cleanly") {
    Checker c(7, "persistence-round-trip");
    const auto dir = support::fresh_dir("acceptance7");
    const auto store_path = dir / "store";
    shipped_store().persist(store_path);

    const auto loaded = MemoryStore::load(store_path);
    const std::string in_process =
        memdrift::render_report_json(memdrift::evaluate(loaded, shipped_queries(), RetrievalConfig{}));

    const auto run1 = support::run_cli({"eval", "--store", store_path.string(), "--queries",
                                        support::data_path("queries.json").string(), "--json"});
    const auto run2 = support::run_cli({"eval", "--store", store_path.string(), "--queries",
                                        support::data_path("queries.json").string(), "--json"});
    c.expect(run1.exit_code == 0 && run2.exit_code == 0, "subprocess eval failed");
    c.expect(run1.out == in_process, "subprocess report differs from in-process report");
    c.expect(run1.out == run2.out, "two subprocess reports differ");
    c.expect(sha256_hex(run1.out) == kPinnedReportSha256, "report bytes drifted");

    const auto purged = support::run_cli({"purge", "--store", store_path.string()});
    c.expect(purged.exit_code == 0, "purge failed");
    const auto again = support::run_cli({"purge", "--store", store_path.string()});
    c.expect(again.exit_code == 1 && support::contains(again.err, "no store"),
             "second purge should report a missing store");

    auto corpus = memdrift::load_corpus_file(support::data_path("seeds.json"));
    corpus.poisoned.clear();
    const auto clean = MemoryStore::build(memdrift::corpus_records(corpus), EmbedderConfig{});
    const auto clean_report = memdrift::evaluate(clean, shipped_queries(), RetrievalConfig{});
    c.expect(clean_report.p_tot == 0 && clean_report.prp == 0.0,
             "clean rebuild still reports poisoned hits");
    c.expect(clean_report.prp_defined, "clean rebuild returned no hits at all");
    support::fs::remove_all(dir);
    CHECK(c.pass);
}

TEST_CASE("criterion 8: a crafted note ingests into the identical store") {
    Checker c(8, "note-ingest-parity");
    const auto corpus = memdrift::load_corpus_file(support::data_path("seeds.json"));
    const std::string note =
        memdrift::craft_note(corpus, support::read_file(support::data_path("note_template.md")));
    const auto parsed = memdrift::parse_note(note);
    const auto from_note =
        MemoryStore::build(memdrift::corpus_records(parsed.corpus), EmbedderConfig{});
    const auto direct = MemoryStore::build(memdrift::corpus_records(corpus), EmbedderConfig{});
    c.expect(from_note.content_hash() == direct.content_hash(), "content hashes differ");
    c.expect(from_note.content_hash() == kPinnedStoreId, "hash drifted from the pinned id");
    c.expect(from_note.manifest().n_poisoned == 10, "poisoned count lost in the note");
    CHECK(c.pass);
}

TEST_CASE("criterion 9: uncorrelated corpora sit at the base poisoning rate") {
    Checker c(9, "random-corpus-prp-band");
    std::mt19937_64 rng(909);
    EmbedderConfig ecfg;
    ecfg.dims = 64;
    const int sets = 50;
    double prp_sum = 0.0;
    int prp_count = 0;
    for (int s = 0; s < sets; ++s) {
        std::vector<ExperienceRecord> records;
        for (int i = 0; i < 100; ++i) {
            ExperienceRecord rec;
            rec.id = "b" + std::to_string(1000 + i);
            rec.query = support::rand_text(rng, 400, 4, 10);
            rec.trace = support::rand_text(rng, 400, 4, 10);
            records.push_back(rec);
        }
        for (int i = 0; i < 10; ++i) {
            ExperienceRecord rec;
            rec.id = "p" + std::to_string(1000 + i);
            rec.query = support::rand_text(rng, 400, 4, 10);
            rec.trace = support::rand_text(rng, 400, 4, 10);
            rec.poisoned = true;
            records.push_back(rec);
        }
        const auto store = MemoryStore::build(records, ecfg);
        memdrift::QuerySet qs;
        qs.name = "random";
        for (int i = 0; i < 12; ++i) {
            std::string q;
            do {
                q = support::rand_text(rng, 400, 2, 5);
            } while (std::find(qs.queries.begin(), qs.queries.end(), q) != qs.queries.end());
            qs.queries.push_back(q);
        }
        const auto report = memdrift::evaluate(store, qs, RetrievalConfig{});
        if (report.prp_defined) {
            prp_sum += report.prp;
            ++prp_count;
        }
    }
    c.expect(prp_count == sets, "only " + std::to_string(prp_count) + " sets had hits");
    const double mean = prp_sum / static_cast<double>(prp_count);
    const double base_rate = 10.0 / 110.0;
    c.expect(std::abs(mean - base_rate) <= 0.05,
             "mean " + std::to_string(mean) + " outside " + std::to_string(base_rate) + " +/- 0.05");
    CHECK(c.pass);
}
