#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hurry {

// CNN layer / functional-block operation kinds.
enum class OpKind { Conv, FC, Max, ReLU, Res, Softmax };

const char* to_string(OpKind k);
OpKind op_kind_from_string(const std::string& s);

// Dataflow of a functional block: weights pinned (GEMM) or inputs pinned
// (tournament logic).
enum class Dataflow { WeightStationary, InputStationary };

const char* to_string(Dataflow d);

// Thrown for malformed model/config files. CLI exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when FB sizing/placement cannot satisfy its constraints.
// CLI exit status 3.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when simulated outputs diverge from the reference path.
// CLI exit status 4.
struct OracleMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Internal invariant violations (bad schedules, voltage conflicts on
// emitted plans). CLI exit status 5.
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

// Bits needed to hold v as a signed two's-complement value.
int signed_bit_width(std::int64_t v);

// FNV-1a over a byte string; used for model hashes and per-layer seeds.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace hurry
