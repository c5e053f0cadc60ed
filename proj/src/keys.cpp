#include "memdrift/keys.hpp"

#include <fstream>
#include <mutex>

#include <sodium.h>
#include <json.hpp>

#include "memdrift/error.hpp"

namespace memdrift {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error("crypto library initialization failed");
    });
}

constexpr const char* kAlgorithm = "ed25519";

}  // namespace

std::string base64_encode(const Bytes& data) {
    ensure_sodium();
    std::string out(sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                      sodium_base64_VARIANT_ORIGINAL);
    out.resize(out.find('\0'));
    return out;
}

Bytes base64_decode(const std::string& text) {
    ensure_sodium();
    Bytes out(text.size(), 0);
    std::size_t len = 0;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, nullptr,
                          sodium_base64_VARIANT_ORIGINAL) != 0) {
        throw Error("invalid base64 data");
    }
    out.resize(len);
    return out;
}

std::string hex_encode(const Bytes& data) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (unsigned char b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Bytes sha256(const Bytes& data) {
    ensure_sodium();
    Bytes out(crypto_hash_sha256_BYTES, 0);
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

std::string key_id_of(const Bytes& public_key) {
    const Bytes digest = sha256(public_key);
    return hex_encode(Bytes(digest.begin(), digest.begin() + 8));
}

KeyPair keygen() {
    ensure_sodium();
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
    if (crypto_sign_keypair(kp.public_key.data(), kp.private_key.data()) != 0) {
        throw Error("key generation failed");
    }
    kp.key_id = key_id_of(kp.public_key);
    return kp;
}

Bytes record_digest(const ExperienceRecord& rec) {
    Bytes canonical;
    canonical.reserve(rec.query.size() + 1 + rec.trace.size());
    canonical.insert(canonical.end(), rec.query.begin(), rec.query.end());
    canonical.push_back(0x00);
    canonical.insert(canonical.end(), rec.trace.begin(), rec.trace.end());
    return sha256(canonical);
}

SignedAttestation sign_record(const ExperienceRecord& rec, const KeyPair& key) {
    ensure_sodium();
    if (key.private_key.size() != crypto_sign_SECRETKEYBYTES) {
        throw Error("signing requires a private key");
    }
    SignedAttestation att;
    att.record_id = rec.id;
    att.digest = record_digest(rec);
    att.signature.resize(crypto_sign_BYTES);
    unsigned long long sig_len = 0;
    if (crypto_sign_detached(att.signature.data(), &sig_len, att.digest.data(), att.digest.size(),
                             key.private_key.data()) != 0) {
        throw Error("signing failed");
    }
    att.signature.resize(sig_len);
    att.signer_key_id = key.key_id;
    return att;
}

bool verify_record(const ExperienceRecord& rec, const SignedAttestation& att, const Bytes& public_key) {
    ensure_sodium();
    if (att.signature.size() != crypto_sign_BYTES) return false;
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    const Bytes digest = record_digest(rec);
    if (digest != att.digest) return false;
    return crypto_sign_verify_detached(att.signature.data(), digest.data(), digest.size(),
                                       public_key.data()) == 0;
}

void attach_signature(ExperienceRecord& rec, const KeyPair& key) {
    const auto att = sign_record(rec, key);
    rec.signature = base64_encode(att.signature);
    rec.signer_key_id = att.signer_key_id;
}

bool verify_inline(const ExperienceRecord& rec, const Bytes& public_key) {
    if (!rec.signed_record()) return false;
    Bytes sig;
    try {
        sig = base64_decode(rec.signature);
    } catch (const Error&) {
        return false;
    }
    SignedAttestation att;
    att.record_id = rec.id;
    att.digest = record_digest(rec);
    att.signature = std::move(sig);
    att.signer_key_id = rec.signer_key_id;
    return verify_record(rec, att, public_key);
}

namespace {

nlohmann::json read_json_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot read ") + what + ": " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string(what) + " is not valid JSON: " + path.string() + ": " + e.what());
    }
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

void save_keypair(const KeyPair& key, const std::filesystem::path& base) {
    const nlohmann::json priv{
        {"algorithm", kAlgorithm},
        {"key_id", key.key_id},
        {"public_key", base64_encode(key.public_key)},
        {"private_key", base64_encode(key.private_key)},
    };
    const nlohmann::json pub{
        {"algorithm", kAlgorithm},
        {"key_id", key.key_id},
        {"public_key", base64_encode(key.public_key)},
    };
    auto priv_path = base;
    priv_path += ".key";
    auto pub_path = base;
    pub_path += ".pub";
    write_file(priv_path, priv.dump(2) + "\n");
    write_file(pub_path, pub.dump(2) + "\n");
}

namespace {

KeyPair key_from_json(const nlohmann::json& j, bool need_private, const std::filesystem::path& path) {
    KeyPair kp;
    try {
        if (j.at("algorithm").get<std::string>() != kAlgorithm) {
            throw Error("unsupported key algorithm in " + path.string());
        }
        kp.key_id = j.at("key_id").get<std::string>();
        kp.public_key = base64_decode(j.at("public_key").get<std::string>());
        if (need_private) kp.private_key = base64_decode(j.at("private_key").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed key file " + path.string() + ": " + e.what());
    }
    if (kp.key_id != key_id_of(kp.public_key)) {
        throw Error("key id does not match public key in " + path.string());
    }
    return kp;
}

}  // namespace

KeyPair load_private_key(const std::filesystem::path& path) {
    return key_from_json(read_json_file(path, "key file"), true, path);
}

KeyPair load_public_key(const std::filesystem::path& path) {
    return key_from_json(read_json_file(path, "key file"), false, path);
}

}  // namespace memdrift
