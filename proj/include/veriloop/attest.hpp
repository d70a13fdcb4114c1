#pragma once

// Per-epoch dual-root commitment: a reasoning root r_t over the epoch's
// sealed artifacts and an interface root u_t over the epoch's structured
// event log, bound as H_t = H("EPOCH:", r_t, u_t). The triple (r_t, u_t, H_t)
// is the epoch's fingerprint; the epoch index is recorded alongside, not
// inside, the hash.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "veriloop/hashcore.hpp"
#include "veriloop/ledger.hpp"

namespace veriloop {

struct EpochAttestation {
    std::uint64_t epoch = 0;
    Digest32 reasoning_root;  // r_t
    Digest32 ui_root;         // u_t
    Digest32 commitment;      // H_t

    json to_json() const {
        return {{"epoch", epoch},
                {"h", commitment.hex()},
                {"r", reasoning_root.hex()},
                {"u", ui_root.hex()}};
    }

    static EpochAttestation from_json(const json& j) {
        EpochAttestation a;
        a.epoch = j.at("epoch").get<std::uint64_t>();
        a.reasoning_root = Digest32::from_hex(j.at("r").get<std::string>());
        a.ui_root = Digest32::from_hex(j.at("u").get<std::string>());
        a.commitment = Digest32::from_hex(j.at("h").get<std::string>());
        return a;
    }
};

// r_t: Merkle root over the union of sorted artifact ids of the epoch's
// blocks. An empty epoch yields the empty sentinel sha256("").
inline Digest32 reasoning_root(std::span<const Block> epoch_blocks) {
    std::vector<std::string> ids;
    for (const Block& b : epoch_blocks) {
        ids.insert(ids.end(), b.artifact_ids.begin(), b.artifact_ids.end());
    }
    return merkle_root(std::move(ids));
}

// u_t: domain-separated hash of the canonicalized ordered event log.
inline Digest32 ui_root(const json& event_log) {
    return domain_hash("UIROOT:", {hash_canonical(event_log)});
}

inline EpochAttestation attest(const Digest32& r, const Digest32& u, std::uint64_t epoch) {
    return EpochAttestation{epoch, r, u, domain_hash("EPOCH:", {r, u})};
}

}  // namespace veriloop
