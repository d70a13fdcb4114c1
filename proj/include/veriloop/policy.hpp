#pragma once

// Outcome-driven policy learning: a softmax policy over K tactic weights,
// the additive update w <- clip(w + eta * phi(outcome, k)), the plug-in
// epistemic-risk estimator, and stochastic-approximation diagnostics
// (martingale residual, step-schedule checks). The update consumes outcomes
// only; failed or abstained payload content never enters the learning path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "veriloop/hashcore.hpp"
#include "veriloop/rng.hpp"
#include "veriloop/verifier.hpp"

namespace veriloop {

inline constexpr double kAbstainPenalty = 0.5;  // beta, frozen
inline constexpr double kWeightClip = 10.0;     // keeps iterates bounded

struct Policy {
    std::vector<double> weights;
    std::uint64_t version = 0;

    static Policy uniform(std::size_t k) { return Policy{std::vector<double>(k, 0.0), 0}; }
    std::size_t tactic_count() const { return weights.size(); }
};

struct PolicyDelta {
    std::vector<double> delta;

    double norm2() const {
        double s = 0.0;
        for (double d : delta) s += d * d;
        return std::sqrt(s);
    }
};

inline std::vector<double> softmax(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("softmax: empty weight vector");
    const double wmax = *std::max_element(weights.begin(), weights.end());
    std::vector<double> p(weights.size());
    double z = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        p[i] = std::exp(weights[i] - wmax);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

struct TacticChoice {
    std::size_t tactic = 0;
    std::vector<double> probabilities;  // the vector actually sampled from
};

// Samples a tactic with probability softmax(weights)_k using one draw at
// (cycle, slot) of the caller's stream.
inline TacticChoice select_tactic(const Policy& policy, const RandomStream& stream,
                                  std::uint64_t cycle, std::uint64_t slot) {
    if (policy.tactic_count() < 2) throw std::invalid_argument("select_tactic: need K >= 2");
    TacticChoice choice;
    choice.probabilities = softmax(policy.weights);
    const double u = stream.u01(cycle, slot);
    double cum = 0.0;
    for (std::size_t k = 0; k < choice.probabilities.size(); ++k) {
        cum += choice.probabilities[k];
        if (u < cum) {
            choice.tactic = k;
            return choice;
        }
    }
    choice.tactic = choice.probabilities.size() - 1;  // guard fp tail
    return choice;
}

// PASS -> +1 on coordinate k, FAIL -> -1, ABSTAIN -> -beta. ||delta||_2 <= 1.
inline PolicyDelta phi(Outcome outcome, std::size_t k, std::size_t tactic_count) {
    if (k >= tactic_count) throw std::out_of_range("phi: tactic index out of range");
    PolicyDelta d{std::vector<double>(tactic_count, 0.0)};
    switch (outcome) {
        case Outcome::Pass: d.delta[k] = 1.0; break;
        case Outcome::Fail: d.delta[k] = -1.0; break;
        case Outcome::Abstain: d.delta[k] = -kAbstainPenalty; break;
    }
    return d;
}

// One learning step. eta must be positive: a disabled arm (eta = 0) skips the
// call entirely so its version counter stays at 0.
inline Policy update(const Policy& policy, double eta, const PolicyDelta& delta,
                     double weight_clip = kWeightClip) {
    if (!(eta > 0.0)) throw std::invalid_argument("update: eta must be > 0 (eta = 0 disables learning)");
    if (delta.delta.size() != policy.weights.size()) {
        throw std::invalid_argument("update: delta dimension mismatch");
    }
    Policy next = policy;
    for (std::size_t i = 0; i < next.weights.size(); ++i) {
        double w = next.weights[i] + eta * delta.delta[i];
        w = std::clamp(w, -weight_clip, weight_clip);
        if (!std::isfinite(w)) throw std::runtime_error("update: non-finite weight");
        next.weights[i] = w;
    }
    next.version = policy.version + 1;
    return next;
}

// Plug-in estimator of epistemic risk: fraction of non-PASS outcomes.
inline double epistemic_risk(std::span<const Outcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("epistemic_risk: empty window");
    std::size_t miss = 0;
    for (Outcome o : outcomes) {
        if (o != Outcome::Pass) ++miss;
    }
    return static_cast<double>(miss) / static_cast<double>(outcomes.size());
}

struct ExpectedUpdateEstimate {
    std::vector<double> mean;      // hhat(pi), Monte Carlo estimate of E[phi | pi]
    std::vector<double> variance;  // per-component sample variance of phi
    std::size_t samples = 0;
};

// Monte Carlo estimate of h(pi) = E[phi(V(e), pi) | pi] at a frozen policy:
// tactic from the policy's softmax, outcome from the verifier profile.
// Diagnostic only; never part of the learning path.
inline ExpectedUpdateEstimate estimate_expected_update(const Policy& policy,
                                                       const VerifierConfig& config,
                                                       std::size_t samples,
                                                       const RandomStream& stream) {
    if (samples < 1) throw std::invalid_argument("estimate_expected_update: samples must be >= 1");
    if (policy.tactic_count() != config.tactics.size()) {
        throw std::invalid_argument("estimate_expected_update: policy/config dimension mismatch");
    }
    const std::size_t k_count = policy.tactic_count();
    std::vector<double> sum(k_count, 0.0);
    std::vector<double> sum_sq(k_count, 0.0);
    const std::vector<double> probs = softmax(policy.weights);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u_sel = stream.u01(i, 0);
        std::size_t k = k_count - 1;
        double cum = 0.0;
        for (std::size_t j = 0; j < k_count; ++j) {
            cum += probs[j];
            if (u_sel < cum) {
                k = j;
                break;
            }
        }
        const TacticProfile& t = config.tactics[k];
        const double u_out = stream.u01(i, 1);
        Outcome o = Outcome::Fail;
        if (u_out < t.abstain_prob) {
            o = Outcome::Abstain;
        } else if (u_out < t.abstain_prob + t.success_prob) {
            o = Outcome::Pass;
        }
        const PolicyDelta d = phi(o, k, k_count);
        for (std::size_t j = 0; j < k_count; ++j) {
            sum[j] += d.delta[j];
            sum_sq[j] += d.delta[j] * d.delta[j];
        }
    }
    ExpectedUpdateEstimate est;
    est.samples = samples;
    est.mean.resize(k_count);
    est.variance.resize(k_count);
    const double n = static_cast<double>(samples);
    for (std::size_t j = 0; j < k_count; ++j) {
        est.mean[j] = sum[j] / n;
        est.variance[j] = sum_sq[j] / n - est.mean[j] * est.mean[j];
    }
    return est;
}

// M_{t+1} = phi_observed - hhat(pi), with hhat estimated by Monte Carlo at
// the frozen policy (n_oracle >= 1000 draws).
inline std::vector<double> martingale_residual(const Policy& policy, const VerifierConfig& config,
                                               const PolicyDelta& observed_delta,
                                               std::size_t n_oracle, const RandomStream& stream) {
    if (n_oracle < 1000) throw std::invalid_argument("martingale_residual: n_oracle must be >= 1000");
    const auto est = estimate_expected_update(policy, config, n_oracle, stream);
    if (observed_delta.delta.size() != est.mean.size()) {
        throw std::invalid_argument("martingale_residual: delta dimension mismatch");
    }
    std::vector<double> residual(est.mean.size());
    for (std::size_t j = 0; j < residual.size(); ++j) {
        residual[j] = observed_delta.delta[j] - est.mean[j];
    }
    return residual;
}

struct StepSchedule {
    enum class Kind { Constant, RobbinsMonro };
    Kind kind = Kind::Constant;
    double eta0 = 0.0;
    double alpha = 0.0;  // decay exponent, Robbins-Monro only

    static StepSchedule constant(double eta) {
        if (!(eta > 0.0)) throw std::invalid_argument("StepSchedule: eta must be > 0");
        return StepSchedule{Kind::Constant, eta, 0.0};
    }

    // eta_t = eta0 / t^alpha with alpha in (0.5, 1]; satisfies sum eta = inf
    // and sum eta^2 < inf analytically.
    static StepSchedule robbins_monro(double eta0, double alpha) {
        if (!(eta0 > 0.0)) throw std::invalid_argument("StepSchedule: eta0 must be > 0");
        if (!(alpha > 0.5 && alpha <= 1.0)) {
            throw std::invalid_argument("StepSchedule: alpha must lie in (0.5, 1]");
        }
        return StepSchedule{Kind::RobbinsMonro, eta0, alpha};
    }

    double eta_at(std::uint64_t t) const {  // t is 1-based
        if (t < 1) throw std::invalid_argument("StepSchedule: t must be >= 1");
        if (kind == Kind::Constant) return eta0;
        return eta0 / std::pow(static_cast<double>(t), alpha);
    }
};

struct ScheduleReport {
    double sum_eta = 0.0;
    double sum_eta_sq = 0.0;
    bool diverging_sum = false;    // sum eta_t = inf, analytic
    bool square_summable = false;  // sum eta_t^2 < inf, analytic
    std::string verdict;
};

// Partial sums over t = 1..horizon plus the analytic Robbins-Monro verdict.
inline ScheduleReport schedule_check(const StepSchedule& schedule, std::uint64_t horizon) {
    if (horizon < 1) throw std::invalid_argument("schedule_check: horizon must be >= 1");
    ScheduleReport r;
    long double s = 0.0L;
    long double s2 = 0.0L;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const long double eta = schedule.eta_at(t);
        s += eta;
        s2 += eta * eta;
    }
    r.sum_eta = static_cast<double>(s);
    r.sum_eta_sq = static_cast<double>(s2);
    r.diverging_sum = true;  // constant and 1/t^alpha (alpha <= 1) both diverge
    r.square_summable = schedule.kind == StepSchedule::Kind::RobbinsMonro;
    r.verdict = r.square_summable ? "SATISFIES_ROBBINS_MONRO" : "VIOLATES_SQUARE_SUMMABLE";
    return r;
}

}  // namespace veriloop
