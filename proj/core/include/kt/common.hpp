// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kt {

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto its exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent experiment configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data: corpora, embedding files, model containers (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Training diverged or was given degenerate inputs (exit code 4).
class TrainError : public Error {
public:
    using Error::Error;
};

/// Model and evaluation data disagree, e.g. vocabulary hash mismatch (exit code 5).
class EvalMismatchError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeding and random streams. Every stochastic operation takes an explicit
// 64-bit seed; derive_seed fans a base seed out into independent streams so
// that per-fold / per-label work stays reproducible regardless of scheduling.
// ---------------------------------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x51a2b3c4d5e6f708ULL));
}

/// Deterministic random stream. mt19937_64 output is pinned by the standard,
/// and the helpers below avoid std::uniform_*_distribution, whose results are
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    std::uint64_t next_u64() { return gen_(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    /// k distinct positions out of [0, n), returned in ascending order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a, 64-bit). Used for vocabulary / feature-space /
// config fingerprints, not for security.
// ---------------------------------------------------------------------------

class Fnv1a64 {
public:
    Fnv1a64& update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv1a64& update(std::string_view s) { return update(s.data(), s.size()); }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view s) { return Fnv1a64{}.update(s).digest(); }

std::string to_hex(std::uint64_t value);

// ---------------------------------------------------------------------------
// Little-endian binary IO for the model / cache container formats.
// ---------------------------------------------------------------------------

namespace binio {

void write_bytes(std::ostream& os, const void* data, std::size_t len);
void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, std::string_view s);

void read_bytes(std::istream& is, void* data, std::size_t len);
std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);

}  // namespace binio

}  // namespace kt
