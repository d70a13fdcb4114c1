#pragma once

// The cycle-loop experiment runner: two arms (learning disabled / enabled)
// over N cycles of m events each. Every cycle runs event generation ->
// curriculum gate -> verification -> ledger append -> dual-root attestation
// -> policy update, records its metrics, and feeds the governance predicates
// once both arms finish. All randomness is seed-derived: the verifier stream
// is shared across arms per (cycle, slot) while policy sampling uses
// per-arm domains, so inter-arm differences are attributable to lr alone.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "veriloop/attest.hpp"
#include "veriloop/governance.hpp"
#include "veriloop/hashcore.hpp"
#include "veriloop/ledger.hpp"
#include "veriloop/policy.hpp"
#include "veriloop/rng.hpp"
#include "veriloop/verifier.hpp"

namespace veriloop {

enum class RunMode : std::uint8_t { Shadow, Enforce };

inline std::string_view to_string(RunMode mode) {
    return mode == RunMode::Shadow ? "SHADOW" : "ENFORCE";
}

inline RunMode run_mode_from_string(std::string_view s) {
    if (s == "SHADOW") return RunMode::Shadow;
    if (s == "ENFORCE") return RunMode::Enforce;
    throw std::invalid_argument("RunMode: unknown mode: " + std::string(s));
}

struct ArmConfig {
    std::string name;
    double lr = 0.0;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::uint64_t cycles = 100;
    std::uint64_t events_per_cycle = 20;
    std::vector<ArmConfig> arms = {{"baseline", 0.0}, {"treatment", 0.1}};
    RunMode mode = RunMode::Shadow;
    std::string slice = "balanced";

    void validate() const {
        if (cycles < 1) throw std::invalid_argument("RunConfig: cycles must be >= 1");
        if (events_per_cycle < 1) throw std::invalid_argument("RunConfig: events_per_cycle must be >= 1");
        if (arms.empty()) throw std::invalid_argument("RunConfig: need at least one arm");
        std::set<std::string> names;
        for (const auto& arm : arms) {
            if (arm.name.empty() || arm.name.find('/') != std::string::npos) {
                throw std::invalid_argument("RunConfig: arm names must be non-empty without '/'");
            }
            if (!names.insert(arm.name).second) {
                throw std::invalid_argument("RunConfig: duplicate arm name " + arm.name);
            }
            if (arm.lr < 0.0) throw std::invalid_argument("RunConfig: lr must be >= 0");
        }
    }

    json to_json() const {
        json arm_arr = json::array();
        for (const auto& arm : arms) {
            arm_arr.push_back({{"lr", fixed6(arm.lr)}, {"name", arm.name}});
        }
        return {{"arms", arm_arr},
                {"cycles", cycles},
                {"events_per_cycle", events_per_cycle},
                {"mode", std::string(to_string(mode))},
                {"seed", seed},
                {"slice", slice}};
    }
};

// Named curriculum slices select among fixed verifier configurations.
inline VerifierConfig verifier_config_for_slice(const std::string& slice) {
    VerifierConfig cfg;
    if (slice == "balanced") {
        // Uniform-policy mean pass rate is 0.5, matching the default
        // decision threshold so delta_p oscillates around zero.
        cfg.tactics = {{0.25, 0.10}, {0.45, 0.10}, {0.55, 0.10}, {0.75, 0.10}};
    } else if (slice == "sparse") {
        cfg.tactics = {{0.10, 0.30}, {0.25, 0.30}, {0.35, 0.30}, {0.50, 0.30}};
    } else {
        throw std::invalid_argument("unknown curriculum slice: " + slice);
    }
    cfg.validate();
    return cfg;
}

// Pass-through filter with a hook point for later curriculum content.
struct CurriculumGate {
    std::function<bool(const ReasoningEvent&)> admit = [](const ReasoningEvent&) { return true; };
};

struct CycleRecord {
    std::uint64_t cycle = 0;
    std::string arm;
    std::uint64_t pass_count = 0;
    std::uint64_t fail_count = 0;
    std::uint64_t abstain_count = 0;
    double delta_p = 0.0;
    double epistemic_risk = 0.0;
    Digest32 attestation;

    json to_json() const {
        return {{"abstain_count", abstain_count},
                {"arm", arm},
                {"attestation", attestation.hex()},
                {"cycle", cycle},
                {"delta_p", fixed6(delta_p)},
                {"epistemic_risk", fixed6(epistemic_risk)},
                {"fail_count", fail_count},
                {"pass_count", pass_count}};
    }
};

inline double delta_p(std::uint64_t pass_count, std::uint64_t m, double theta) {
    if (m < 1) throw std::invalid_argument("delta_p: m must be >= 1");
    if (pass_count > m) throw std::invalid_argument("delta_p: pass_count exceeds m");
    return static_cast<double>(pass_count) / static_cast<double>(m) - theta;
}

inline double arm_variance(std::span<const double> dp) { return population_variance(dp); }

struct ArmResult {
    std::string name;
    double lr = 0.0;
    std::vector<double> dp;
    std::uint64_t pass = 0;
    std::uint64_t fail = 0;
    std::uint64_t abstain = 0;
    std::uint64_t blocks = 0;
};

struct RunState {
    RunConfig config;
    CommitmentRegistry registry;
    Digest32 registry_sha256;
    Ledger ledger;
    std::vector<EpochAttestation> attestations;
    std::vector<json> event_rows;                            // events.jsonl, in order
    std::vector<std::pair<std::string, json>> artifact_files;  // payload path -> body
    std::vector<json> policy_trace;
    std::vector<json> metrics;  // one CycleRecord per epoch, in epoch order
    std::vector<std::uint64_t> empty_blocks;
    std::vector<ArmResult> arms;
    GovernanceVerdict verdict;
    json summary;
};

namespace detail {

inline std::string artifact_id(const std::string& arm, std::uint64_t cycle, std::uint64_t slot) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s-c%04llu-e%02llu", arm.c_str(),
                  static_cast<unsigned long long>(cycle), static_cast<unsigned long long>(slot));
    return buf;
}

}  // namespace detail

// Executes the full loop and returns the complete, emission-ready run state.
// The registry is validated and hashed before any cycle runs. In SHADOW mode
// governance results are recorded and never shorten the run.
inline RunState run(const RunConfig& config, const CommitmentRegistry& registry,
                    const CurriculumGate& gate = {}) {
    config.validate();
    registry.validate();

    RunState state;
    state.config = config;
    state.registry = registry;
    state.registry_sha256 = registry_hash(registry);

    const VerifierConfig vcfg = verifier_config_for_slice(config.slice);
    const std::size_t k_count = vcfg.tactic_count();
    const double theta = registry.decision_threshold();
    const double clip = registry.weight_clip();
    const double lr_max = registry.lr_max();
    const RandomStream verifier_stream{config.seed, "verifier"};

    for (const ArmConfig& arm : config.arms) {
        ArmResult result;
        result.name = arm.name;
        result.lr = arm.lr;
        const RandomStream policy_stream{config.seed, "policy/" + arm.name};
        Policy policy = Policy::uniform(k_count);
        const bool over_ceiling = arm.lr > lr_max;
        const bool blocked = over_ceiling && config.mode == RunMode::Enforce;

        for (std::uint64_t cycle = 1; cycle <= config.cycles; ++cycle) {
            struct EventRecord {
                ReasoningEvent event;
                Outcome outcome;
                std::string id;
            };
            std::vector<EventRecord> cycle_records;
            json cycle_event_rows = json::array();
            std::vector<ProofArtifact> admitted;
            std::uint64_t pass = 0, fail = 0, abstain = 0;
            std::vector<Outcome> outcomes;

            for (std::uint64_t slot = 0; slot < config.events_per_cycle; ++slot) {
                const TacticChoice choice = select_tactic(policy, policy_stream, cycle, slot);
                ReasoningEvent event;
                event.cycle = cycle;
                event.slot = slot;
                event.tactic = choice.tactic;
                event.descriptor = {{"arm", arm.name},
                                    {"cycle", cycle},
                                    {"slice", config.slice},
                                    {"slot", slot},
                                    {"tactic", choice.tactic}};
                event.statement_hash = hash_canonical(event.descriptor);
                if (!gate.admit(event)) continue;

                const Outcome outcome = verify(event, vcfg, verifier_stream);
                outcomes.push_back(outcome);
                switch (outcome) {
                    case Outcome::Pass: ++pass; break;
                    case Outcome::Fail: ++fail; break;
                    case Outcome::Abstain: ++abstain; break;
                }
                const std::string id = detail::artifact_id(arm.name, cycle, slot);
                const ArtifactKind kind = classify_artifact(outcome, false);
                const std::string payload_path = "artifacts/" + id + ".json";
                json row = {{"arm", arm.name},
                            {"artifact_id", id},
                            {"artifact_kind", std::string(to_string(kind))},
                            {"cycle", cycle},
                            {"outcome", std::string(to_string(outcome))},
                            {"slot", slot},
                            {"statement_hash", event.statement_hash.hex()},
                            {"tactic", choice.tactic},
                            {"type", "event"}};
                cycle_event_rows.push_back(row);
                state.event_rows.push_back(row);
                json payload = {{"arm", arm.name},
                                {"cycle", cycle},
                                {"id", id},
                                {"kind", std::string(to_string(kind))},
                                {"outcome", std::string(to_string(outcome))},
                                {"slice", config.slice},
                                {"slot", slot},
                                {"statement_hash", event.statement_hash.hex()},
                                {"tactic", choice.tactic}};
                state.artifact_files.emplace_back(payload_path, std::move(payload));
                if (admissible(outcome)) {
                    admitted.push_back(
                        ProofArtifact{id, event.statement_hash, outcome, payload_path});
                }
                cycle_records.push_back(EventRecord{std::move(event), outcome, id});
            }

            const Block& block = state.ledger.append_block(admitted);
            if (block.artifact_ids.empty()) state.empty_blocks.push_back(block.index);
            ++result.blocks;

            // Epoch = one cycle, one block: r_t is the block root, u_t the
            // root over this cycle's ordered event records.
            const Digest32 r = block.merkle_root;
            const Digest32 u = ui_root(cycle_event_rows);
            const EpochAttestation att = attest(r, u, block.index);
            state.attestations.push_back(att);

            if (arm.lr > 0.0) {
                for (const EventRecord& rec : cycle_records) {
                    const PolicyDelta delta = phi(rec.outcome, rec.event.tactic, k_count);
                    if (blocked) {
                        const std::string upd_id = rec.id + "-upd";
                        const ArtifactKind kind = classify_artifact(rec.outcome, true);
                        json upd_descriptor = {{"arm", arm.name},
                                               {"blocked_by", "lr_max"},
                                               {"cycle", cycle},
                                               {"slot", rec.event.slot},
                                               {"tactic", rec.event.tactic},
                                               {"type", "update_block"}};
                        const Digest32 upd_hash = hash_canonical(upd_descriptor);
                        const std::string upd_path = "artifacts/" + upd_id + ".json";
                        json row = {{"arm", arm.name},
                                    {"artifact_id", upd_id},
                                    {"artifact_kind", std::string(to_string(kind))},
                                    {"blocked_by", "lr_max"},
                                    {"cycle", cycle},
                                    {"outcome", std::string(to_string(rec.outcome))},
                                    {"slot", rec.event.slot},
                                    {"statement_hash", upd_hash.hex()},
                                    {"tactic", rec.event.tactic},
                                    {"type", "update_block"}};
                        state.event_rows.push_back(row);
                        json payload = {{"arm", arm.name},
                                        {"blocked_by", "lr_max"},
                                        {"cycle", cycle},
                                        {"id", upd_id},
                                        {"kind", std::string(to_string(kind))},
                                        {"outcome", std::string(to_string(rec.outcome))},
                                        {"slice", config.slice},
                                        {"slot", rec.event.slot},
                                        {"statement_hash", upd_hash.hex()},
                                        {"tactic", rec.event.tactic}};
                        state.artifact_files.emplace_back(upd_path, std::move(payload));
                        continue;
                    }
                    if (over_ceiling) {
                        // SHADOW: the constraint is observational; record the
                        // would-be block and apply the update anyway.
                        state.event_rows.push_back({{"arm", arm.name},
                                                    {"cycle", cycle},
                                                    {"slot", rec.event.slot},
                                                    {"tactic", rec.event.tactic},
                                                    {"type", "update_shadow"},
                                                    {"would_block", true}});
                    }
                    policy = update(policy, arm.lr, delta, clip);
                }
            }

            CycleRecord record;
            record.cycle = cycle;
            record.arm = arm.name;
            record.pass_count = pass;
            record.fail_count = fail;
            record.abstain_count = abstain;
            record.delta_p = delta_p(pass, config.events_per_cycle, theta);
            record.epistemic_risk = epistemic_risk(outcomes);
            record.attestation = att.commitment;
            state.metrics.push_back(record.to_json());

            json weights = json::array();
            for (double w : policy.weights) weights.push_back(fixed6(w));
            state.policy_trace.push_back({{"arm", arm.name},
                                          {"cycle", cycle},
                                          {"version", policy.version},
                                          {"weights", weights}});

            result.dp.push_back(record.delta_p);
            result.pass += pass;
            result.fail += fail;
            result.abstain += abstain;
        }
        state.arms.push_back(std::move(result));
    }

    // Governance predicates over the completed series: the first arm is the
    // variance-ratio reference; drift is evaluated per arm.
    std::set<std::string> fired;
    const double rho_max = registry.variance_ratio_max();
    const std::uint64_t window = registry.drift_window();
    const double tolerance = registry.drift_tolerance();
    for (std::size_t i = 1; i < state.arms.size(); ++i) {
        if (f52_variance_ratio(state.arms[0].dp, state.arms[i].dp, rho_max).fired) {
            fired.insert(std::string(kPredicateVarianceRatio));
        }
    }
    for (const ArmResult& arm : state.arms) {
        if (f53_windowed_drift(arm.dp, window, tolerance).fired) {
            fired.insert(std::string(kPredicateWindowedDrift));
        }
    }
    state.verdict = evaluate(std::move(fired), registry.claim_ceiling());

    json arm_summaries = json::object();
    for (const ArmResult& arm : state.arms) {
        const std::uint64_t total = arm.pass + arm.fail + arm.abstain;
        double mean_dp = 0.0;
        for (double v : arm.dp) mean_dp += v;
        mean_dp /= static_cast<double>(arm.dp.size());
        arm_summaries[arm.name] = {
            {"abstention_rate",
             fixed6(static_cast<double>(arm.abstain) / static_cast<double>(total))},
            {"blocks", arm.blocks},
            {"lr", fixed6(arm.lr)},
            {"mean_delta_p", fixed6(mean_dp)},
            {"variance", fixed6(arm_variance(arm.dp))}};
    }
    state.summary = {
        {"arms", arm_summaries},
        {"claim_level", std::string(to_string(state.verdict.claim_level))},
        {"fired", std::vector<std::string>(state.verdict.fired.begin(), state.verdict.fired.end())}};
    return state;
}

}  // namespace veriloop
