#pragma once

// Evidence-pack emission and the fail-closed replay verifier.
//
// A pack is a directory of canonical-JSON artifacts plus a manifest written
// last so it can hash everything else (the manifest is excluded from its own
// file list). The replay verifier re-derives every commitment from the pack
// contents alone and runs eight ordered checks; the first failure names the
// check and yields exit code 1. The verifier never writes to the pack.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "veriloop/attest.hpp"
#include "veriloop/governance.hpp"
#include "veriloop/harness.hpp"
#include "veriloop/hashcore.hpp"
#include "veriloop/ledger.hpp"

namespace veriloop {

inline constexpr std::string_view kManifestVersion = "1";

// Verification scope statement carried by every replay report.
inline constexpr std::string_view kReplayDisclaimer =
    "Verification covers artifact integrity, determinism, and governance binding only; "
    "it does not validate correctness, safety, alignment, or legal compliance.";

// Ordered replay checks. A report names the first one that failed.
inline constexpr std::array<std::string_view, 8> kReplayChecks = {
    "manifest_canonical",     // (1) manifest parses as canonical JSON
    "artifact_kind_enum",     // (2) every artifact_kind is a valid enum value
    "registry_hash_present",  // (3) commitment_registry_sha256 present
    "registry_hash_match",    // (4) registry file hash matches
    "file_hashes",            // (5) every listed file matches its hash
    "ledger_chain",           // (6) chain replays to the recorded head
    "attestation_recompute",  // (7) every H_t recomputes from (r_t, u_t)
    "verdict_consistency",    // (8) fired predicates vs claim level
};

struct ManifestFileEntry {
    std::string path;
    std::string sha256_hex;
    std::string artifact_kind;
};

struct EvidenceManifest {
    std::string version{kManifestVersion};
    std::uint64_t seed = 0;
    std::vector<ManifestFileEntry> files;  // sorted by path
    Digest32 commitment_registry_sha256;
    std::string governance_verdict_path = "governance_verdict.json";
    Digest32 ledger_head;
    std::uint64_t attestation_count = 0;
    std::vector<std::uint64_t> empty_blocks;

    json to_json() const {
        json file_arr = json::array();
        for (const auto& f : files) {
            file_arr.push_back({{"artifact_kind", f.artifact_kind},
                                {"path", f.path},
                                {"sha256", f.sha256_hex}});
        }
        return {{"attestation_count", attestation_count},
                {"commitment_registry_sha256", commitment_registry_sha256.hex()},
                {"empty_blocks", empty_blocks},
                {"files", file_arr},
                {"governance_verdict_path", governance_verdict_path},
                {"ledger_head", ledger_head.hex()},
                {"seed", seed},
                {"version", version}};
    }
};

namespace detail {

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("emit_pack: cannot open " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("emit_pack: write failed for " + path.string());
}

inline std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline std::string jsonl(std::span<const json> rows) {
    std::string out;
    for (const json& row : rows) {
        out += canonicalize(row);
        out += '\n';
    }
    return out;
}

}  // namespace detail

// Writes the complete evidence pack for a finished run. The output directory
// must not exist or must be empty. Emission is fully deterministic given the
// run state: same seed, byte-identical pack.
inline EvidenceManifest emit_pack(const RunState& state, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
        throw std::invalid_argument("emit_pack: output directory is not empty: " +
                                    out_dir.string());
    }
    fs::create_directories(out_dir / "blocks");
    fs::create_directories(out_dir / "artifacts");

    // path -> (bytes, artifact_kind)
    std::map<std::string, std::pair<std::string, std::string>> files;
    auto put = [&files](std::string path, std::string bytes, std::string kind) {
        if (!files.emplace(std::move(path), std::make_pair(std::move(bytes), std::move(kind)))
                 .second) {
            throw std::logic_error("emit_pack: duplicate pack path");
        }
    };

    put("registry.json", canonicalize(state.registry.document), "VERIFIED");
    put("governance_verdict.json", canonicalize(state.verdict.to_json(state.registry_sha256)),
        "VERIFIED");
    put("run_config.json", canonicalize(state.config.to_json()), "VERIFIED");
    put("summary.json", canonicalize(state.summary), "VERIFIED");
    put("head.json", canonicalize(state.ledger.head().to_json()), "VERIFIED");
    for (const Block& block : state.ledger.blocks()) {
        put("blocks/" + std::to_string(block.index) + ".json", canonicalize(block.to_json()),
            "VERIFIED");
    }
    std::vector<json> attestation_rows;
    attestation_rows.reserve(state.attestations.size());
    for (const EpochAttestation& att : state.attestations) attestation_rows.push_back(att.to_json());
    put("attestations.jsonl", detail::jsonl(attestation_rows), "VERIFIED");
    put("events.jsonl", detail::jsonl(state.event_rows), "VERIFIED");
    put("policy_trace.jsonl", detail::jsonl(state.policy_trace), "VERIFIED");
    put("metrics.jsonl", detail::jsonl(state.metrics), "VERIFIED");
    for (const auto& [path, body] : state.artifact_files) {
        put(path, canonicalize(body), body.at("kind").get<std::string>());
    }

    EvidenceManifest manifest;
    manifest.seed = state.config.seed;
    manifest.commitment_registry_sha256 = state.registry_sha256;
    manifest.ledger_head = state.ledger.head().head;
    manifest.attestation_count = state.attestations.size();
    manifest.empty_blocks = state.empty_blocks;
    for (const auto& [path, entry] : files) {
        const fs::path target = out_dir / path;
        fs::create_directories(target.parent_path());
        detail::write_file(target, entry.first);
        manifest.files.push_back(ManifestFileEntry{path, sha256(entry.first).hex(), entry.second});
    }
    detail::write_file(out_dir / "manifest.json", canonicalize(manifest.to_json()));
    return manifest;
}

struct ReplayReport {
    bool ok = false;
    int exit_code = 1;
    std::string first_failed;  // empty when ok
    std::string detail;
    std::vector<std::string> checks_passed;
    std::string disclaimer{kReplayDisclaimer};

    json to_json() const {
        return {{"checks_passed", checks_passed},
                {"detail", detail},
                {"disclaimer", disclaimer},
                {"exit_code", exit_code},
                {"first_failed", first_failed.empty() ? json(nullptr) : json(first_failed)},
                {"ok", ok}};
    }
};

namespace detail {

struct ReplayContext {
    std::filesystem::path dir;
    json manifest;
    json registry;
    std::vector<Block> blocks;
    LedgerHead claimed_head;
};

struct CheckFailure {
    std::string detail;
};

inline std::string require_hex64(const json& j, const char* what) {
    if (!j.is_string()) throw CheckFailure{std::string(what) + " is not a string"};
    const auto s = j.get<std::string>();
    if (!Digest32::try_from_hex(s)) throw CheckFailure{std::string(what) + " is not a 64-char lowercase hex digest"};
    return s;
}

// (1) manifest.json exists, parses, and is byte-identical to its own
// canonical form; structural fields have the right shapes.
inline void check_manifest_canonical(ReplayContext& ctx) {
    const auto bytes = read_file(ctx.dir / "manifest.json");
    if (!bytes) throw CheckFailure{"manifest.json missing or unreadable"};
    ctx.manifest = json::parse(*bytes, nullptr, false);
    if (ctx.manifest.is_discarded()) throw CheckFailure{"manifest.json does not parse as JSON"};
    try {
        if (canonicalize(ctx.manifest) != *bytes) {
            throw CheckFailure{"manifest.json is not in canonical form"};
        }
    } catch (const CanonicalError& e) {
        throw CheckFailure{std::string("manifest.json not canonicalizable: ") + e.what()};
    }
    if (!ctx.manifest.is_object()) throw CheckFailure{"manifest is not an object"};
    if (!ctx.manifest.contains("version") || !ctx.manifest["version"].is_string()) {
        throw CheckFailure{"manifest missing string field version"};
    }
    if (!ctx.manifest.contains("seed") || !ctx.manifest["seed"].is_number_unsigned()) {
        throw CheckFailure{"manifest missing unsigned field seed"};
    }
    if (!ctx.manifest.contains("files") || !ctx.manifest["files"].is_array()) {
        throw CheckFailure{"manifest missing array field files"};
    }
    for (const json& f : ctx.manifest["files"]) {
        if (!f.is_object() || !f.contains("path") || !f["path"].is_string() ||
            !f.contains("sha256")) {
            throw CheckFailure{"manifest files entry malformed"};
        }
        require_hex64(f["sha256"], "files sha256");
    }
    if (!ctx.manifest.contains("governance_verdict_path") ||
        !ctx.manifest["governance_verdict_path"].is_string()) {
        throw CheckFailure{"manifest missing governance_verdict_path"};
    }
    if (!ctx.manifest.contains("ledger_head")) throw CheckFailure{"manifest missing ledger_head"};
    require_hex64(ctx.manifest["ledger_head"], "ledger_head");
    if (!ctx.manifest.contains("attestation_count") ||
        !ctx.manifest["attestation_count"].is_number_unsigned()) {
        throw CheckFailure{"manifest missing unsigned field attestation_count"};
    }
    if (!ctx.manifest.contains("empty_blocks") || !ctx.manifest["empty_blocks"].is_array()) {
        throw CheckFailure{"manifest missing array field empty_blocks"};
    }
}

// (2) every files[] entry carries a valid artifact_kind enum value.
inline void check_artifact_kind_enum(ReplayContext& ctx) {
    for (const json& f : ctx.manifest["files"]) {
        if (!f.contains("artifact_kind") || !f["artifact_kind"].is_string()) {
            throw CheckFailure{"missing artifact_kind for " + f["path"].get<std::string>()};
        }
        const auto kind = f["artifact_kind"].get<std::string>();
        if (!is_valid_artifact_kind(kind)) {
            throw CheckFailure{"invalid artifact_kind \"" + kind + "\" for " +
                               f["path"].get<std::string>()};
        }
    }
}

// (3) commitment_registry_sha256 present and well-formed.
inline void check_registry_hash_present(ReplayContext& ctx) {
    if (!ctx.manifest.contains("commitment_registry_sha256")) {
        throw CheckFailure{"manifest missing commitment_registry_sha256"};
    }
    require_hex64(ctx.manifest["commitment_registry_sha256"], "commitment_registry_sha256");
}

// (4) the registry file's canonical hash matches the manifest binding.
inline void check_registry_hash_match(ReplayContext& ctx) {
    const auto bytes = read_file(ctx.dir / "registry.json");
    if (!bytes) throw CheckFailure{"registry.json missing or unreadable"};
    ctx.registry = json::parse(*bytes, nullptr, false);
    if (ctx.registry.is_discarded()) throw CheckFailure{"registry.json does not parse as JSON"};
    Digest32 actual;
    try {
        actual = sha256(canonicalize(ctx.registry));
    } catch (const CanonicalError& e) {
        throw CheckFailure{std::string("registry.json not canonicalizable: ") + e.what()};
    }
    const auto expected = ctx.manifest["commitment_registry_sha256"].get<std::string>();
    if (actual.hex() != expected) {
        throw CheckFailure{"registry hash " + actual.hex() + " does not match manifest binding " +
                           expected};
    }
}

// (5) every listed file exists and matches its recorded hash; no unlisted
// files exist in the pack.
inline void check_file_hashes(ReplayContext& ctx) {
    namespace fs = std::filesystem;
    std::set<std::string> listed;
    for (const json& f : ctx.manifest["files"]) {
        const auto path = f["path"].get<std::string>();
        if (!listed.insert(path).second) throw CheckFailure{"duplicate manifest entry " + path};
        const auto bytes = read_file(ctx.dir / path);
        if (!bytes) throw CheckFailure{"listed file missing: " + path};
        const auto actual = sha256(*bytes).hex();
        if (actual != f["sha256"].get<std::string>()) {
            throw CheckFailure{"hash mismatch for " + path};
        }
    }
    for (auto it = fs::recursive_directory_iterator(ctx.dir);
         it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        const auto rel = fs::relative(it->path(), ctx.dir).generic_string();
        if (rel == "manifest.json") continue;
        if (!listed.contains(rel)) throw CheckFailure{"unlisted file in pack: " + rel};
    }
}

// (6) the block files replay, Merkle roots and all, to the recorded head.
inline void check_ledger_chain(ReplayContext& ctx) {
    const auto head_bytes = read_file(ctx.dir / "head.json");
    if (!head_bytes) throw CheckFailure{"head.json missing or unreadable"};
    json head_json = json::parse(*head_bytes, nullptr, false);
    if (head_json.is_discarded()) throw CheckFailure{"head.json does not parse as JSON"};
    try {
        ctx.claimed_head = LedgerHead::from_json(head_json);
    } catch (const std::exception& e) {
        throw CheckFailure{std::string("head.json malformed: ") + e.what()};
    }
    if (ctx.claimed_head.head.hex() != ctx.manifest["ledger_head"].get<std::string>()) {
        throw CheckFailure{"head.json disagrees with manifest ledger_head"};
    }

    std::set<std::uint64_t> empty_blocks;
    for (const json& idx : ctx.manifest["empty_blocks"]) {
        if (!idx.is_number_unsigned()) throw CheckFailure{"empty_blocks entry not an index"};
        empty_blocks.insert(idx.get<std::uint64_t>());
    }

    ctx.blocks.clear();
    for (std::uint64_t t = 1; t <= ctx.claimed_head.index; ++t) {
        const auto path = "blocks/" + std::to_string(t) + ".json";
        const auto bytes = read_file(ctx.dir / path);
        if (!bytes) throw CheckFailure{"block file missing: " + path};
        json block_json = json::parse(*bytes, nullptr, false);
        if (block_json.is_discarded()) throw CheckFailure{path + " does not parse as JSON"};
        Block block;
        try {
            block = Block::from_json(block_json);
        } catch (const std::exception& e) {
            throw CheckFailure{path + " malformed: " + e.what()};
        }
        if (block.artifact_ids.empty() != empty_blocks.contains(t)) {
            throw CheckFailure{path + " disagrees with manifest empty_blocks flag"};
        }
        ctx.blocks.push_back(std::move(block));
    }
    std::error_code ec;
    std::uint64_t block_files = 0;
    for (auto it = std::filesystem::directory_iterator(ctx.dir / "blocks", ec);
         !ec && it != std::filesystem::directory_iterator(); ++it) {
        if (it->is_regular_file()) ++block_files;
    }
    if (block_files != ctx.claimed_head.index) {
        throw CheckFailure{"block file count does not match head index"};
    }

    const ChainReport report = verify_chain(ctx.blocks, ctx.claimed_head);
    if (!report.match) throw CheckFailure{"chain replay failed: " + report.detail};
}

// (7) every stored attestation recomputes from the pack: r_t from the
// epoch's block, u_t from the epoch's event records, H_t from both.
inline void check_attestation_recompute(ReplayContext& ctx) {
    const std::uint64_t expected_count = ctx.manifest["attestation_count"].get<std::uint64_t>();
    if (expected_count != ctx.blocks.size()) {
        throw CheckFailure{"attestation_count does not match block count"};
    }

    const auto att_bytes = read_file(ctx.dir / "attestations.jsonl");
    if (!att_bytes) throw CheckFailure{"attestations.jsonl missing or unreadable"};
    std::vector<EpochAttestation> attestations;
    std::size_t pos = 0;
    while (pos < att_bytes->size()) {
        const auto eol = att_bytes->find('\n', pos);
        if (eol == std::string::npos) throw CheckFailure{"attestations.jsonl missing final newline"};
        json row = json::parse(att_bytes->substr(pos, eol - pos), nullptr, false);
        if (row.is_discarded()) throw CheckFailure{"attestations.jsonl row does not parse"};
        try {
            attestations.push_back(EpochAttestation::from_json(row));
        } catch (const std::exception& e) {
            throw CheckFailure{std::string("attestation row malformed: ") + e.what()};
        }
        pos = eol + 1;
    }
    if (attestations.size() != expected_count) {
        throw CheckFailure{"attestations.jsonl row count does not match attestation_count"};
    }

    const auto metrics_bytes = read_file(ctx.dir / "metrics.jsonl");
    if (!metrics_bytes) throw CheckFailure{"metrics.jsonl missing or unreadable"};
    std::vector<json> metrics;
    pos = 0;
    while (pos < metrics_bytes->size()) {
        const auto eol = metrics_bytes->find('\n', pos);
        if (eol == std::string::npos) throw CheckFailure{"metrics.jsonl missing final newline"};
        json row = json::parse(metrics_bytes->substr(pos, eol - pos), nullptr, false);
        if (row.is_discarded()) throw CheckFailure{"metrics.jsonl row does not parse"};
        metrics.push_back(std::move(row));
        pos = eol + 1;
    }
    if (metrics.size() != expected_count) {
        throw CheckFailure{"metrics.jsonl row count does not match attestation_count"};
    }

    const auto events_bytes = read_file(ctx.dir / "events.jsonl");
    if (!events_bytes) throw CheckFailure{"events.jsonl missing or unreadable"};
    std::map<std::pair<std::string, std::uint64_t>, json> event_logs;
    pos = 0;
    while (pos < events_bytes->size()) {
        const auto eol = events_bytes->find('\n', pos);
        if (eol == std::string::npos) throw CheckFailure{"events.jsonl missing final newline"};
        json row = json::parse(events_bytes->substr(pos, eol - pos), nullptr, false);
        if (row.is_discarded()) throw CheckFailure{"events.jsonl row does not parse"};
        pos = eol + 1;
        if (!row.is_object() || !row.contains("type")) {
            throw CheckFailure{"events.jsonl row missing type"};
        }
        if (row["type"] != "event") continue;  // update records are not interface state
        if (!row.contains("arm") || !row.contains("cycle")) {
            throw CheckFailure{"events.jsonl event row missing arm/cycle"};
        }
        auto key = std::make_pair(row["arm"].get<std::string>(), row["cycle"].get<std::uint64_t>());
        auto [it, inserted] = event_logs.try_emplace(std::move(key), json::array());
        it->second.push_back(std::move(row));
    }

    for (std::uint64_t epoch = 1; epoch <= expected_count; ++epoch) {
        const EpochAttestation& att = attestations[epoch - 1];
        if (att.epoch != epoch) throw CheckFailure{"attestation epochs out of order"};
        const json& metric = metrics[epoch - 1];
        if (!metric.contains("arm") || !metric.contains("cycle") ||
            !metric.contains("attestation")) {
            throw CheckFailure{"metrics row missing arm/cycle/attestation"};
        }
        const auto arm = metric["arm"].get<std::string>();
        const auto cycle = metric["cycle"].get<std::uint64_t>();

        const Digest32 r = merkle_root(ctx.blocks[epoch - 1].artifact_ids);
        if (r != att.reasoning_root) {
            throw CheckFailure{"epoch " + std::to_string(epoch) +
                               ": reasoning root does not recompute from block"};
        }
        const auto log_it = event_logs.find({arm, cycle});
        const json empty_log = json::array();
        const json& log = log_it == event_logs.end() ? empty_log : log_it->second;
        const Digest32 u = ui_root(log);
        if (u != att.ui_root) {
            throw CheckFailure{"epoch " + std::to_string(epoch) +
                               ": ui root does not recompute from event log"};
        }
        const Digest32 h = domain_hash("EPOCH:", {r, u});
        if (h != att.commitment) {
            throw CheckFailure{"epoch " + std::to_string(epoch) +
                               ": commitment does not recompute from (r, u)"};
        }
        if (metric["attestation"].get<std::string>() != h.hex()) {
            throw CheckFailure{"epoch " + std::to_string(epoch) +
                               ": metrics attestation does not match recomputed commitment"};
        }
    }
}

// (8) the recorded verdict is internally consistent and bound to the registry.
inline void check_verdict_consistency(ReplayContext& ctx) {
    const auto path = ctx.manifest["governance_verdict_path"].get<std::string>();
    const auto bytes = read_file(ctx.dir / path);
    if (!bytes) throw CheckFailure{"governance verdict missing: " + path};
    json verdict = json::parse(*bytes, nullptr, false);
    if (verdict.is_discarded()) throw CheckFailure{"governance verdict does not parse"};
    if (!verdict.contains("fired") || !verdict["fired"].is_array() ||
        !verdict.contains("claim_level") || !verdict.contains("registry_sha256")) {
        throw CheckFailure{"governance verdict missing fields"};
    }
    for (const json& id : verdict["fired"]) {
        if (!id.is_string() || (id != kPredicateVarianceRatio && id != kPredicateWindowedDrift)) {
            throw CheckFailure{"unknown fired predicate id in verdict"};
        }
    }
    ClaimLevel ceiling = ClaimLevel::L1;
    try {
        CommitmentRegistry registry{ctx.registry};
        registry.validate();
        ceiling = registry.claim_ceiling();
    } catch (const std::exception& e) {
        throw CheckFailure{std::string("registry unusable for verdict check: ") + e.what()};
    }
    const bool any_fired = !verdict["fired"].empty();
    const std::string expected =
        (any_fired || ceiling == ClaimLevel::L0) ? "L0" : "L1";
    if (verdict["claim_level"].get<std::string>() != expected) {
        throw CheckFailure{"claim_level inconsistent with fired predicates"};
    }
    if (verdict["registry_sha256"].get<std::string>() !=
        ctx.manifest["commitment_registry_sha256"].get<std::string>()) {
        throw CheckFailure{"verdict registry binding does not match manifest"};
    }
}

}  // namespace detail

// Replays a pack directory through the eight ordered fail-closed checks.
// Read-only; any failure yields exit code 1 naming the first failed check.
inline ReplayReport replay_verify(const std::filesystem::path& pack_dir) {
    using Check = void (*)(detail::ReplayContext&);
    static constexpr std::pair<std::string_view, Check> kChecks[] = {
        {"manifest_canonical", &detail::check_manifest_canonical},
        {"artifact_kind_enum", &detail::check_artifact_kind_enum},
        {"registry_hash_present", &detail::check_registry_hash_present},
        {"registry_hash_match", &detail::check_registry_hash_match},
        {"file_hashes", &detail::check_file_hashes},
        {"ledger_chain", &detail::check_ledger_chain},
        {"attestation_recompute", &detail::check_attestation_recompute},
        {"verdict_consistency", &detail::check_verdict_consistency},
    };
    ReplayReport report;
    detail::ReplayContext ctx;
    ctx.dir = pack_dir;
    for (const auto& [name, check] : kChecks) {
        try {
            check(ctx);
            report.checks_passed.emplace_back(name);
        } catch (const detail::CheckFailure& failure) {
            report.ok = false;
            report.exit_code = 1;
            report.first_failed = std::string(name);
            report.detail = failure.detail;
            return report;
        } catch (const std::exception& e) {
            report.ok = false;
            report.exit_code = 1;
            report.first_failed = std::string(name);
            report.detail = std::string("unexpected error: ") + e.what();
            return report;
        }
    }
    report.ok = true;
    report.exit_code = 0;
    report.detail = "all checks passed";
    return report;
}

// Loads the pack's block files and head for the mirror auditor.
inline std::pair<std::vector<Block>, LedgerHead> load_ledger(
    const std::filesystem::path& pack_dir) {
    const auto head_bytes = detail::read_file(pack_dir / "head.json");
    if (!head_bytes) throw std::runtime_error("load_ledger: head.json missing");
    const LedgerHead head = LedgerHead::from_json(json::parse(*head_bytes));
    std::vector<Block> blocks;
    blocks.reserve(head.index);
    for (std::uint64_t t = 1; t <= head.index; ++t) {
        const auto path = pack_dir / "blocks" / (std::to_string(t) + ".json");
        const auto bytes = detail::read_file(path);
        if (!bytes) throw std::runtime_error("load_ledger: missing block file " + path.string());
        blocks.push_back(Block::from_json(json::parse(*bytes)));
    }
    return {std::move(blocks), head};
}

}  // namespace veriloop
