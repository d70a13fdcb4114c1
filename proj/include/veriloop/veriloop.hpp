#pragma once

// Umbrella header for the full verifiable-learning substrate.

#include "veriloop/attest.hpp"
#include "veriloop/evidence.hpp"
#include "veriloop/governance.hpp"
#include "veriloop/harness.hpp"
#include "veriloop/hashcore.hpp"
#include "veriloop/ledger.hpp"
#include "veriloop/policy.hpp"
#include "veriloop/rng.hpp"
#include "veriloop/verifier.hpp"

namespace veriloop {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace veriloop
