#pragma once

// Fail-closed governance: the frozen commitment registry and its hash
// binding, the F5.2 (inter-arm variance ratio) and F5.3 (windowed drift)
// predicates, claim-level capping, and typed classification of artifacts.
// Predicates fire on insufficient evidence as well as on out-of-bounds
// evidence; a fired predicate caps the claim level at L0.

#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "veriloop/hashcore.hpp"
#include "veriloop/verifier.hpp"

namespace veriloop {

inline constexpr std::string_view kPredicateVarianceRatio = "F5.2";
inline constexpr std::string_view kPredicateWindowedDrift = "F5.3";

enum class ClaimLevel : std::uint8_t { L0, L1 };

inline std::string_view to_string(ClaimLevel level) {
    return level == ClaimLevel::L0 ? "L0" : "L1";
}

enum class ArtifactKind : std::uint8_t { Verified, Refuted, Abstained, InadmissibleUpdate };

inline std::string_view to_string(ArtifactKind kind) {
    switch (kind) {
        case ArtifactKind::Verified: return "VERIFIED";
        case ArtifactKind::Refuted: return "REFUTED";
        case ArtifactKind::Abstained: return "ABSTAINED";
        case ArtifactKind::InadmissibleUpdate: return "INADMISSIBLE_UPDATE";
    }
    throw std::logic_error("ArtifactKind: invalid value");
}

inline bool is_valid_artifact_kind(std::string_view s) {
    return s == "VERIFIED" || s == "REFUTED" || s == "ABSTAINED" || s == "INADMISSIBLE_UPDATE";
}

// blocked updates dominate; otherwise the verifier outcome decides.
inline ArtifactKind classify_artifact(Outcome outcome, bool blocked_update) {
    if (blocked_update) return ArtifactKind::InadmissibleUpdate;
    switch (outcome) {
        case Outcome::Pass: return ArtifactKind::Verified;
        case Outcome::Fail: return ArtifactKind::Refuted;
        case Outcome::Abstain: return ArtifactKind::Abstained;
    }
    throw std::logic_error("classify_artifact: invalid outcome");
}

// Versioned registry of frozen run constraints. Immutable for a run; its
// canonical-JSON hash is recorded in the evidence manifest.
struct CommitmentRegistry {
    json document;

    static CommitmentRegistry defaults() {
        CommitmentRegistry r;
        r.document = {
            {"version", "1"},
            {"constraints",
             {{"abstain_penalty", "0.500000"},
              {"claim_ceiling", "L1"},
              {"decision_threshold", "0.500000"},
              {"drift_tolerance", "0.150000"},
              {"drift_window", 10},
              {"lr_baseline", "0.000000"},
              {"lr_max", "0.100000"},
              {"lr_treatment", "0.100000"},
              {"variance_ratio_max", "4.000000"},
              {"weight_clip", "10.000000"}}},
        };
        return r;
    }

    const json& constraints() const { return document.at("constraints"); }
    std::string version() const { return document.at("version").get<std::string>(); }

    double number(const std::string& key) const {
        const json& v = constraints().at(key);
        if (v.is_string()) return parse_fixed(v.get<std::string>());
        return v.get<double>();
    }

    double decision_threshold() const { return number("decision_threshold"); }
    double variance_ratio_max() const { return number("variance_ratio_max"); }
    std::uint64_t drift_window() const { return constraints().at("drift_window").get<std::uint64_t>(); }
    double drift_tolerance() const { return number("drift_tolerance"); }
    double lr_max() const { return number("lr_max"); }
    double weight_clip() const { return number("weight_clip"); }
    double abstain_penalty() const { return number("abstain_penalty"); }
    ClaimLevel claim_ceiling() const {
        return constraints().at("claim_ceiling").get<std::string>() == "L0" ? ClaimLevel::L0
                                                                            : ClaimLevel::L1;
    }

    void validate() const {
        if (!document.contains("version") || !document.contains("constraints")) {
            throw std::invalid_argument("registry: missing version or constraints");
        }
        static const char* kRequired[] = {
            "abstain_penalty", "claim_ceiling", "decision_threshold", "drift_tolerance",
            "drift_window",    "lr_baseline",   "lr_max",             "lr_treatment",
            "variance_ratio_max", "weight_clip"};
        for (const char* key : kRequired) {
            if (!constraints().contains(key)) {
                throw std::invalid_argument(std::string("registry: missing constraint ") + key);
            }
        }
        if (!(variance_ratio_max() > 1.0)) {
            throw std::invalid_argument("registry: variance_ratio_max must be > 1");
        }
        if (drift_window() < 2) throw std::invalid_argument("registry: drift_window must be >= 2");
    }
};

// SHA-256 over the canonical JSON of the registry document.
inline Digest32 registry_hash(const CommitmentRegistry& registry) {
    return hash_canonical(registry.document);
}

inline double population_variance(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("population_variance: empty series");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

struct PredicateResult {
    bool fired = false;
    std::string reason;
};

// F5.2: fires when the inter-arm variance ratio rho = Var(treatment) /
// Var(baseline) leaves [1/rho_max, rho_max]. Degenerate and short series
// fire fail-closed; two flat arms do not.
inline PredicateResult f52_variance_ratio(std::span<const double> baseline_dp,
                                          std::span<const double> treatment_dp, double rho_max) {
    if (!(rho_max > 1.0)) throw std::invalid_argument("f52: rho_max must be > 1");
    if (baseline_dp.size() < 2 || treatment_dp.size() < 2) {
        return {true, "insufficient evidence: series shorter than 2"};
    }
    const double var_b = population_variance(baseline_dp);
    const double var_t = population_variance(treatment_dp);
    if (var_b == 0.0 && var_t == 0.0) return {false, "both arms flat"};
    if (var_b == 0.0) return {true, "baseline variance zero with treatment variance nonzero"};
    const double rho = var_t / var_b;
    if (rho > rho_max || rho < 1.0 / rho_max) {
        return {true, "variance ratio " + fixed6(rho) + " outside [1/" + fixed6(rho_max) + ", " +
                          fixed6(rho_max) + "]"};
    }
    return {false, "variance ratio " + fixed6(rho) + " within bounds"};
}

// F5.3: fires when the mean of any adjacent pair of disjoint length-W
// windows moves by more than the tolerance. Series shorter than two windows
// fire fail-closed.
inline PredicateResult f53_windowed_drift(std::span<const double> dp, std::uint64_t window,
                                          double tolerance) {
    if (window < 2) throw std::invalid_argument("f53: window must be >= 2");
    const std::size_t windows = dp.size() / window;
    if (windows < 2) return {true, "insufficient evidence: series shorter than two windows"};
    double prev_mean = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
        double mean = 0.0;
        for (std::size_t i = 0; i < window; ++i) mean += dp[w * window + i];
        mean /= static_cast<double>(window);
        if (w > 0) {
            const double drift = std::fabs(mean - prev_mean);
            if (drift > tolerance) {
                return {true, "window " + std::to_string(w) + " drift " + fixed6(drift) +
                                  " exceeds tolerance " + fixed6(tolerance)};
            }
        }
        prev_mean = mean;
    }
    return {false, "all window drifts within tolerance"};
}

struct GovernanceVerdict {
    std::set<std::string> fired;
    ClaimLevel claim_level = ClaimLevel::L1;

    json to_json(const Digest32& registry_sha256) const {
        return {{"claim_level", std::string(to_string(claim_level))},
                {"fired", std::vector<std::string>(fired.begin(), fired.end())},
                {"registry_sha256", registry_sha256.hex()}};
    }
};

// Empty fired set keeps L1 (measurement-valid); any fired predicate caps the
// claim at L0. The registry's claim ceiling applies on top.
inline GovernanceVerdict evaluate(std::set<std::string> fired,
                                  ClaimLevel ceiling = ClaimLevel::L1) {
    GovernanceVerdict v;
    v.fired = std::move(fired);
    v.claim_level = v.fired.empty() ? ClaimLevel::L1 : ClaimLevel::L0;
    if (ceiling == ClaimLevel::L0) v.claim_level = ClaimLevel::L0;
    return v;
}

}  // namespace veriloop
