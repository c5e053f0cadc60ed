#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memdrift/record.hpp"

namespace memdrift {

using Bytes = std::vector<unsigned char>;

std::string base64_encode(const Bytes& data);
Bytes base64_decode(const std::string& text);
std::string hex_encode(const Bytes& data);

Bytes sha256(const Bytes& data);

struct KeyPair {
    std::string key_id;  // hex of the first 8 bytes of SHA-256(public_key)
    Bytes public_key;
    Bytes private_key;  // empty on verify-only material
};

struct SignedAttestation {
    std::string record_id;
    Bytes digest;
    Bytes signature;
    std::string signer_key_id;
};

std::string key_id_of(const Bytes& public_key);

/// Fresh Ed25519 keypair. Signatures are deterministic, so signing the same
/// record twice yields identical bytes and stores stay reproducible.
KeyPair keygen();

/// Canonical record digest: SHA-256(UTF-8(query) ‖ 0x00 ‖ UTF-8(trace)).
/// The separator keeps "ab"‖"c" distinct from "a"‖"bc".
Bytes record_digest(const ExperienceRecord& rec);

SignedAttestation sign_record(const ExperienceRecord& rec, const KeyPair& key);

/// True iff the attestation's digest matches a recomputation from the record
/// and the signature verifies under public_key. Malformed input is false,
/// never an error.
bool verify_record(const ExperienceRecord& rec, const SignedAttestation& att, const Bytes& public_key);

/// Stamp rec.signature / rec.signer_key_id from a fresh attestation.
void attach_signature(ExperienceRecord& rec, const KeyPair& key);

/// Verify a record's inline signature fields under one public key.
bool verify_inline(const ExperienceRecord& rec, const Bytes& public_key);

/// Key files are small JSON envelopes {algorithm, key_id, public_key[,
/// private_key]} with base64 key bytes: base.key holds both halves, base.pub
/// only the public one.
void save_keypair(const KeyPair& key, const std::filesystem::path& base);
KeyPair load_private_key(const std::filesystem::path& path);
KeyPair load_public_key(const std::filesystem::path& path);

}  // namespace memdrift
