#pragma once

// Monotone, append-only, hash-chained block ledger of verifier-accepted proof
// artifacts. Blocks commit a Merkle root over sorted artifact ids; heads fold
// as L_t = H("CHAIN:", L_{t-1}, R_t) from an all-zero genesis. No interface
// removes or edits an admitted artifact.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "veriloop/hashcore.hpp"
#include "veriloop/verifier.hpp"

namespace veriloop {

class NotAdmissible : public std::invalid_argument {
public:
    explicit NotAdmissible(const std::string& detail)
        : std::invalid_argument("NOT_ADMISSIBLE: " + detail) {}
    static constexpr std::string_view kReason = "NOT_ADMISSIBLE";
};

struct ProofArtifact {
    std::string id;
    Digest32 statement_hash;
    Outcome status = Outcome::Fail;
    std::string payload_path;
};

struct Block {
    std::uint64_t index = 0;                // 1-based
    std::vector<std::string> artifact_ids;  // strictly ascending
    Digest32 merkle_root;

    json to_json() const {
        return {{"artifact_ids", artifact_ids},
                {"index", index},
                {"merkle_root", merkle_root.hex()}};
    }

    static Block from_json(const json& j) {
        Block b;
        b.index = j.at("index").get<std::uint64_t>();
        b.artifact_ids = j.at("artifact_ids").get<std::vector<std::string>>();
        b.merkle_root = Digest32::from_hex(j.at("merkle_root").get<std::string>());
        return b;
    }
};

struct LedgerHead {
    std::uint64_t index = 0;
    Digest32 head;  // L_0 = 32 zero bytes

    static LedgerHead genesis() { return LedgerHead{0, Digest32::zero()}; }

    json to_json() const { return {{"head", head.hex()}, {"index", index}}; }

    static LedgerHead from_json(const json& j) {
        return LedgerHead{j.at("index").get<std::uint64_t>(),
                          Digest32::from_hex(j.at("head").get<std::string>())};
    }
};

// Merkle root over sorted ids: leaves are H("LEAF:", sha256(id)), interior
// nodes H("NODE:", left, right), an unpaired trailing node is promoted
// unchanged. An empty id list yields the empty-input sentinel sha256("").
inline Digest32 merkle_root(std::vector<std::string> ids) {
    if (ids.empty()) return sha256(std::string_view{});
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("merkle_root: duplicate artifact id");
    }
    std::vector<Digest32> level;
    level.reserve(ids.size());
    for (const auto& id : ids) {
        level.push_back(domain_hash("LEAF:", {sha256(id)}));
    }
    while (level.size() > 1) {
        std::vector<Digest32> next;
        next.reserve(level.size() / 2 + 1);
        std::size_t i = 0;
        for (; i + 1 < level.size(); i += 2) {
            next.push_back(domain_hash("NODE:", {level[i], level[i + 1]}));
        }
        if (i < level.size()) next.push_back(level[i]);  // promote odd node
        level = std::move(next);
    }
    return level.front();
}

inline LedgerHead chain_step(const LedgerHead& prior, const Digest32& block_root) {
    return LedgerHead{prior.index + 1, domain_hash("CHAIN:", {prior.head, block_root})};
}

// In-memory ledger state for a run. Appends are strictly serialized by the
// single writer; accessors expose immutable views only.
class Ledger {
public:
    // Seals `artifacts` into the next block. Every artifact must carry PASS
    // status and an id never seen before. Empty blocks are permitted.
    const Block& append_block(const std::vector<ProofArtifact>& artifacts) {
        std::vector<std::string> ids;
        ids.reserve(artifacts.size());
        for (const auto& a : artifacts) {
            if (a.status != Outcome::Pass) {
                throw NotAdmissible("artifact " + a.id + " has status " +
                                    std::string(to_string(a.status)));
            }
            if (known_ids_.contains(a.id)) {
                throw std::invalid_argument("append_block: duplicate artifact id " + a.id);
            }
            ids.push_back(a.id);
        }
        Block block;
        block.index = head_.index + 1;
        block.merkle_root = merkle_root(ids);
        std::sort(ids.begin(), ids.end());
        block.artifact_ids = std::move(ids);

        head_ = chain_step(head_, block.merkle_root);
        for (const auto& a : artifacts) {
            known_ids_.insert(a.id);
            knowledge_.insert(a.statement_hash);
        }
        blocks_.push_back(std::move(block));
        return blocks_.back();
    }

    const std::vector<Block>& blocks() const { return blocks_; }
    const LedgerHead& head() const { return head_; }

    // K_t: statement hashes accumulated through the current block.
    const std::set<Digest32>& knowledge() const { return knowledge_; }

private:
    std::vector<Block> blocks_;
    LedgerHead head_ = LedgerHead::genesis();
    std::set<std::string> known_ids_;
    std::set<Digest32> knowledge_;
};

struct ChainReport {
    bool match = false;
    std::optional<std::uint64_t> first_divergence;  // block index, if a block diverged
    Digest32 recomputed_head;
    std::string detail;
};

// Recomputes every block root and the chain fold, then compares against the
// claimed head. Mismatches are report content, not faults.
inline ChainReport verify_chain(std::span<const Block> blocks, const LedgerHead& claimed) {
    ChainReport report;
    LedgerHead running = LedgerHead::genesis();
    std::set<std::string> seen;
    for (const Block& b : blocks) {
        Digest32 recomputed;
        bool block_ok = true;
        std::string why;
        if (b.index != running.index + 1) {
            block_ok = false;
            why = "index out of order";
        }
        if (block_ok && !std::is_sorted(b.artifact_ids.begin(), b.artifact_ids.end())) {
            block_ok = false;
            why = "artifact ids not sorted";
        }
        if (block_ok) {
            try {
                recomputed = merkle_root(b.artifact_ids);
            } catch (const std::invalid_argument&) {
                block_ok = false;
                why = "duplicate artifact ids";
            }
        }
        if (block_ok) {
            for (const auto& id : b.artifact_ids) {
                if (!seen.insert(id).second) {
                    block_ok = false;
                    why = "artifact id repeats an earlier block";
                    break;
                }
            }
        }
        if (block_ok && recomputed != b.merkle_root) {
            block_ok = false;
            why = "merkle root mismatch";
        }
        if (!block_ok) {
            if (!report.first_divergence) {
                report.first_divergence = b.index;
                report.detail = "block " + std::to_string(b.index) + ": " + why;
            }
            // Keep folding over stored roots so the head comparison is defined.
            running = chain_step(running, b.merkle_root);
            continue;
        }
        running = chain_step(running, recomputed);
    }
    report.recomputed_head = running.head;
    report.match = !report.first_divergence && running.index == claimed.index &&
                   running.head == claimed.head;
    if (report.match) {
        report.detail = "chain matches claimed head";
    } else if (report.detail.empty()) {
        report.detail = "recomputed head does not match claimed head";
    }
    return report;
}

struct AuditReport {
    std::uint64_t total = 0;
    std::uint64_t verified = 0;
    std::string coverage_pct;  // one decimal, e.g. "100.0"
    bool empty = false;        // vacuous audit over zero blocks
    bool head_match = false;
    std::vector<json> divergences;

    json to_json() const {
        json j = {{"coverage_pct", coverage_pct},
                  {"divergences", divergences},
                  {"head_match", head_match},
                  {"total", total},
                  {"verified", verified}};
        if (empty) j["empty"] = true;
        return j;
    }
};

// Mirror auditor: re-verifies every block independently and reports coverage
// as verified/total. Zero blocks audit vacuously at 100.0% and are flagged.
inline AuditReport audit(std::span<const Block> blocks, const LedgerHead& claimed) {
    AuditReport report;
    report.total = blocks.size();
    LedgerHead running = LedgerHead::genesis();
    std::uint64_t expected_index = 1;
    for (const Block& b : blocks) {
        bool ok = true;
        std::string why;
        Digest32 recomputed;
        if (b.index != expected_index) {
            ok = false;
            why = "index out of order";
        } else {
            try {
                recomputed = merkle_root(b.artifact_ids);
                if (recomputed != b.merkle_root) {
                    ok = false;
                    why = "merkle root mismatch";
                }
            } catch (const std::invalid_argument& e) {
                ok = false;
                why = e.what();
            }
        }
        if (ok) {
            ++report.verified;
        } else {
            report.divergences.push_back({{"index", b.index}, {"reason", why}});
        }
        running = chain_step(running, b.merkle_root);
        ++expected_index;
    }
    report.head_match = running.index == claimed.index && running.head == claimed.head;
    if (!report.head_match) {
        report.divergences.push_back(
            {{"index", claimed.index}, {"reason", "recomputed head does not match claimed head"}});
    }
    if (report.total == 0) {
        report.empty = true;
        report.coverage_pct = "100.0";
    } else {
        report.coverage_pct =
            fixed1(100.0 * static_cast<double>(report.verified) / static_cast<double>(report.total));
    }
    return report;
}

}  // namespace veriloop
