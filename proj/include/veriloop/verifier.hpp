#pragma once

// The configured verifier: a seeded synthetic proxy mapping each reasoning
// event to PASS / FAIL / ABSTAIN. Per tactic k the outcome draw is
// Bernoulli-with-abstention (p_k passes, a_k abstains, remainder fails);
// resource-budget exhaustion is folded into a_k.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "veriloop/hashcore.hpp"
#include "veriloop/rng.hpp"

namespace veriloop {

enum class Outcome : std::uint8_t { Pass, Fail, Abstain };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "PASS";
        case Outcome::Fail: return "FAIL";
        case Outcome::Abstain: return "ABSTAIN";
    }
    throw std::logic_error("Outcome: invalid value");
}

inline Outcome outcome_from_string(std::string_view s) {
    if (s == "PASS") return Outcome::Pass;
    if (s == "FAIL") return Outcome::Fail;
    if (s == "ABSTAIN") return Outcome::Abstain;
    throw std::invalid_argument("Outcome: unknown value: " + std::string(s));
}

struct TacticProfile {
    double success_prob = 0.0;  // p_k
    double abstain_prob = 0.0;  // a_k
};

struct VerifierConfig {
    std::vector<TacticProfile> tactics;
    std::uint64_t budget = 1;               // max verification steps per event
    std::string stream_domain = "verifier";  // seed-derived stream id

    std::size_t tactic_count() const { return tactics.size(); }

    void validate() const {
        if (tactics.size() < 2) throw std::invalid_argument("VerifierConfig: need K >= 2 tactics");
        for (const auto& t : tactics) {
            if (t.success_prob < 0.0 || t.success_prob > 1.0 || t.abstain_prob < 0.0 ||
                t.abstain_prob > 1.0 || t.success_prob + t.abstain_prob > 1.0) {
                throw std::invalid_argument("VerifierConfig: require p,a in [0,1] and p+a <= 1");
            }
        }
        if (budget < 1) throw std::invalid_argument("VerifierConfig: budget must be >= 1");
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& t : tactics) {
            arr.push_back({{"abstain_prob", fixed6(t.abstain_prob)},
                           {"success_prob", fixed6(t.success_prob)}});
        }
        return {{"budget", budget}, {"stream_domain", stream_domain}, {"tactics", arr}};
    }
};

struct ReasoningEvent {
    std::uint64_t cycle = 0;
    std::uint64_t slot = 0;  // position within the cycle
    std::size_t tactic = 0;
    json descriptor;
    Digest32 statement_hash;
};

// Draws u in [0,1) at (cycle, slot): u < a_k abstains, a_k <= u < a_k + p_k
// passes, else fails. Consumes exactly one draw.
inline Outcome verify(const ReasoningEvent& event, const VerifierConfig& config,
                      const RandomStream& stream) {
    if (event.tactic >= config.tactics.size()) {
        throw std::out_of_range("verify: tactic index out of range");
    }
    const TacticProfile& t = config.tactics[event.tactic];
    const double u = stream.u01(event.cycle, event.slot);
    if (u < t.abstain_prob) return Outcome::Abstain;
    if (u < t.abstain_prob + t.success_prob) return Outcome::Pass;
    return Outcome::Fail;
}

inline bool admissible(Outcome outcome) { return outcome == Outcome::Pass; }

}  // namespace veriloop
