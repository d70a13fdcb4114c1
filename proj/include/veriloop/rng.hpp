#pragma once

// Counter-based deterministic randomness. Each draw is a pure function of
// (seed, domain, coordinates), so any consumer can be replayed independently
// of every other and of call order. Verifier draws and per-arm policy draws
// live in disjoint domains.

#include <cstdint>
#include <string>
#include <string_view>

#include "veriloop/hashcore.hpp"

namespace veriloop {

struct RandomStream {
    std::uint64_t seed = 0;
    std::string domain;  // e.g. "verifier", "policy/<arm>", "diag/<name>"

    // Uniform draw in [0, 1) at integer coordinates (a, b).
    double u01(std::uint64_t a, std::uint64_t b) const {
        std::string msg;
        msg.reserve(4 + domain.size() + 1 + 24);
        msg += "RNG:";
        msg += domain;
        msg += '\0';
        append_be64(msg, seed);
        append_be64(msg, a);
        append_be64(msg, b);
        const Digest32 d = sha256(msg);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x = (x << 8) | d.bytes[static_cast<std::size_t>(i)];
        return static_cast<double>(x >> 11) * 0x1.0p-53;
    }

private:
    static void append_be64(std::string& out, std::uint64_t v) {
        for (int shift = 56; shift >= 0; shift -= 8) {
            out += static_cast<char>((v >> shift) & 0xff);
        }
    }
};

}  // namespace veriloop
