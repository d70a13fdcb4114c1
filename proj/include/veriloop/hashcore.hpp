#pragma once

// Byte-level primitives shared by every other component: SHA-256 digests,
// canonical JSON serialization, and prefix-free domain-separated hashing.
// All functions here are pure and safe for concurrent use.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

namespace veriloop {

using json = nlohmann::json;

class CanonicalError : public std::runtime_error {
public:
    explicit CanonicalError(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-width 32-byte digest. Hex rendering is lowercase, 64 chars.
struct Digest32 {
    std::array<std::uint8_t, 32> bytes{};

    friend bool operator==(const Digest32&, const Digest32&) = default;
    friend auto operator<=>(const Digest32&, const Digest32&) = default;

    std::string hex() const {
        static constexpr char alphabet[] = "0123456789abcdef";
        std::string out(64, '0');
        for (std::size_t i = 0; i < 32; ++i) {
            out[2 * i] = alphabet[bytes[i] >> 4];
            out[2 * i + 1] = alphabet[bytes[i] & 0x0f];
        }
        return out;
    }

    static std::optional<Digest32> try_from_hex(std::string_view hex) {
        if (hex.size() != 64) return std::nullopt;
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            return -1;  // uppercase rejected: rendering contract is lowercase
        };
        Digest32 d;
        for (std::size_t i = 0; i < 32; ++i) {
            int hi = nibble(hex[2 * i]);
            int lo = nibble(hex[2 * i + 1]);
            if (hi < 0 || lo < 0) return std::nullopt;
            d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
        }
        return d;
    }

    static Digest32 from_hex(std::string_view hex) {
        auto d = try_from_hex(hex);
        if (!d) throw std::invalid_argument("Digest32: invalid hex digest: " + std::string(hex));
        return *d;
    }

    static Digest32 zero() { return Digest32{}; }
};

inline Digest32 sha256(std::span<const std::uint8_t> data) {
    Digest32 out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        throw std::runtime_error("sha256: digest computation failed");
    }
    return out;
}

inline Digest32 sha256(std::string_view data) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

// Registry of domain-separation labels. Fixed ASCII, each terminated by ':',
// none a prefix of another.
inline constexpr std::array<std::string_view, 5> kDomainLabels = {
    "EPOCH:", "LEAF:", "NODE:", "CHAIN:", "UIROOT:",
};

inline bool is_domain_label(std::string_view label) {
    return std::find(kDomainLabels.begin(), kDomainLabels.end(), label) != kDomainLabels.end();
}

// hash(prefix || part_1 || ... || part_n) with fixed-width 32-byte parts.
inline Digest32 domain_hash(std::string_view label, std::span<const Digest32> parts) {
    if (!is_domain_label(label)) {
        throw std::invalid_argument("domain_hash: label not in registry: " + std::string(label));
    }
    std::string buf;
    buf.reserve(label.size() + 32 * parts.size());
    buf.append(label);
    for (const Digest32& p : parts) {
        buf.append(reinterpret_cast<const char*>(p.bytes.data()), p.bytes.size());
    }
    return sha256(buf);
}

inline Digest32 domain_hash(std::string_view label, std::initializer_list<Digest32> parts) {
    return domain_hash(label, std::span<const Digest32>(parts.begin(), parts.size()));
}

namespace detail {

inline void canonical_escape(std::string_view s, std::string& out) {
    auto emit_u16 = [&out](std::uint32_t unit) {
        static constexpr char alphabet[] = "0123456789abcdef";
        out += "\\u";
        out += alphabet[(unit >> 12) & 0xf];
        out += alphabet[(unit >> 8) & 0xf];
        out += alphabet[(unit >> 4) & 0xf];
        out += alphabet[unit & 0xf];
    };
    out += '"';
    std::size_t i = 0;
    const auto n = s.size();
    while (i < n) {
        const auto b0 = static_cast<std::uint8_t>(s[i]);
        if (b0 < 0x80) {
            switch (b0) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\b': out += "\\b"; break;
                case '\t': out += "\\t"; break;
                case '\n': out += "\\n"; break;
                case '\f': out += "\\f"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (b0 < 0x20) {
                        emit_u16(b0);
                    } else {
                        out += static_cast<char>(b0);
                    }
            }
            ++i;
            continue;
        }
        // Multi-byte UTF-8 sequence; strict validation.
        std::uint32_t cp = 0;
        std::size_t extra = 0;
        if ((b0 & 0xe0) == 0xc0) {
            cp = b0 & 0x1f;
            extra = 1;
        } else if ((b0 & 0xf0) == 0xe0) {
            cp = b0 & 0x0f;
            extra = 2;
        } else if ((b0 & 0xf8) == 0xf0) {
            cp = b0 & 0x07;
            extra = 3;
        } else {
            throw CanonicalError("canonicalize: invalid UTF-8 lead byte");
        }
        if (i + extra >= n) {
            throw CanonicalError("canonicalize: truncated UTF-8 sequence");
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto bk = static_cast<std::uint8_t>(s[i + k]);
            if ((bk & 0xc0) != 0x80) throw CanonicalError("canonicalize: invalid UTF-8 continuation");
            cp = (cp << 6) | (bk & 0x3f);
        }
        static constexpr std::uint32_t kMinForLen[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < kMinForLen[extra]) throw CanonicalError("canonicalize: overlong UTF-8 encoding");
        if (cp >= 0xd800 && cp <= 0xdfff) throw CanonicalError("canonicalize: surrogate code point");
        if (cp > 0x10ffff) throw CanonicalError("canonicalize: code point out of range");
        if (cp <= 0xffff) {
            emit_u16(cp);
        } else {
            cp -= 0x10000;
            emit_u16(0xd800 + (cp >> 10));
            emit_u16(0xdc00 + (cp & 0x3ff));
        }
        i += extra + 1;
    }
    out += '"';
}

inline void canonical_emit(const json& v, std::string& out) {
    switch (v.type()) {
        case json::value_t::null:
            out += "null";
            break;
        case json::value_t::boolean:
            out += v.get<bool>() ? "true" : "false";
            break;
        case json::value_t::number_unsigned:
            out += std::to_string(v.get<std::uint64_t>());
            break;
        case json::value_t::number_integer:
            out += std::to_string(v.get<std::int64_t>());
            break;
        case json::value_t::number_float: {
            const double d = v.get<double>();
            if (!std::isfinite(d)) throw CanonicalError("canonicalize: non-finite number");
            // Artifact documents carry integers only; fractional metrics are
            // fixed-point decimal strings. Integral doubles render as integers.
            if (std::rint(d) != d || std::fabs(d) > 9007199254740992.0) {
                throw CanonicalError("canonicalize: non-integer number (use fixed-point strings)");
            }
            out += std::to_string(static_cast<std::int64_t>(d));
            break;
        }
        case json::value_t::string:
            canonical_escape(v.get_ref<const std::string&>(), out);
            break;
        case json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& el : v) {
                if (!first) out += ',';
                first = false;
                canonical_emit(el, out);
            }
            out += ']';
            break;
        }
        case json::value_t::object: {
            std::vector<std::string_view> keys;
            keys.reserve(v.size());
            for (auto it = v.begin(); it != v.end(); ++it) keys.push_back(it.key());
            std::sort(keys.begin(), keys.end());  // byte order == code point order
            out += '{';
            bool first = true;
            for (auto key : keys) {
                if (!first) out += ',';
                first = false;
                canonical_escape(key, out);
                out += ':';
                canonical_emit(v.at(std::string(key)), out);
            }
            out += '}';
            break;
        }
        default:
            throw CanonicalError("canonicalize: unsupported value type");
    }
}

}  // namespace detail

// Deterministic byte serialization: keys sorted by code point, no
// insignificant whitespace, all output bytes ASCII (non-ASCII escaped).
inline std::string canonicalize(const json& v) {
    std::string out;
    detail::canonical_emit(v, out);
    return out;
}

inline bool is_canonical(std::string_view bytes) {
    json parsed = json::parse(bytes, nullptr, false);
    if (parsed.is_discarded()) return false;
    try {
        return canonicalize(parsed) == bytes;
    } catch (const CanonicalError&) {
        return false;
    }
}

inline Digest32 hash_canonical(const json& v) { return sha256(canonicalize(v)); }

// Fixed-point rendering with 6 fractional digits, the storage format for all
// fractional metrics. "-0.000000" normalizes to "0.000000".
inline std::string fixed6(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("fixed6: non-finite value");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

// One-decimal percentage rendering used by audit coverage reports.
inline std::string fixed1(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("fixed1: non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", x);
    return buf;
}

inline double parse_fixed(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("parse_fixed: trailing characters in " + s);
    return v;
}

}  // namespace veriloop
