#include "hurry/common.hpp"

namespace hurry {

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Conv: return "conv";
    case OpKind::FC: return "fc";
    case OpKind::Max: return "max";
    case OpKind::ReLU: return "relu";
    case OpKind::Res: return "res";
    case OpKind::Softmax: return "softmax";
  }
  return "?";
}

OpKind op_kind_from_string(const std::string& s) {
  if (s == "conv") return OpKind::Conv;
  if (s == "fc") return OpKind::FC;
  if (s == "max") return OpKind::Max;
  if (s == "relu") return OpKind::ReLU;
  if (s == "res") return OpKind::Res;
  if (s == "softmax") return OpKind::Softmax;
  throw ConfigError("unknown layer kind '" + s + "'");
}

const char* to_string(Dataflow d) {
  return d == Dataflow::WeightStationary ? "weight_stationary" : "input_stationary";
}

int signed_bit_width(std::int64_t v) {
  // Smallest b with -2^(b-1) <= v <= 2^(b-1)-1.
  int b = 1;
  while (v < -(std::int64_t(1) << (b - 1)) || v > (std::int64_t(1) << (b - 1)) - 1) ++b;
  return b;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace hurry
