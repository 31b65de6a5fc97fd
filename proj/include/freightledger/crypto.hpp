#pragma once

#include <openssl/hmac.h>
#include <openssl/sha.h>

#include "freightledger/bytes.hpp"

// Hash and signature primitives. The repo-wide hash is SHA-256; member
// signatures are HMAC-SHA256 over (message || context), with the member key
// acting as both signing and verification key (keys are opaque config bytes).

namespace freightledger {

inline Digest sha256(BytesView data) {
    Digest out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

inline Digest sha256(const Bytes& data) {
    return sha256(BytesView(data.data(), data.size()));
}

inline Digest hmac_sha256(BytesView key, BytesView msg) {
    Digest out{};
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(),
         out.data(), &len);
    if (len != out.size()) throw std::runtime_error("HMAC produced unexpected digest size");
    return out;
}

inline Digest sign_digest(BytesView key, const Digest& payload_hash, std::string_view context) {
    Bytes msg(payload_hash.begin(), payload_hash.end());
    msg.insert(msg.end(), context.begin(), context.end());
    return hmac_sha256(key, BytesView(msg.data(), msg.size()));
}

inline bool verify_digest_signature(BytesView key, const Digest& payload_hash,
                                    std::string_view context, const Digest& signature) {
    return sign_digest(key, payload_hash, context) == signature;
}

}  // namespace freightledger
