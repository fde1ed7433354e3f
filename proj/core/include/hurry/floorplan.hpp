#pragma once

#include <vector>

#include "hurry/lowering.hpp"

namespace hurry {

// Two permutations of FB ids encoding relative placement. Equal order in
// both sequences means left/right; opposite order means above/below.
struct SequencePair {
  std::vector<int> seq1;
  std::vector<int> seq2;
};

struct FbShape {
  int fb_id = 0;
  std::int64_t nx = 0;  // rows
  std::int64_t ny = 0;  // columns
};

struct Placement {
  int fb_id = 0;
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::int64_t nx = 0;
  std::int64_t ny = 0;

  bool contains(std::int64_t r, std::int64_t c) const {
    return r >= row && r < row + nx && c >= col && c < col + ny;
  }
  bool overlaps(const Placement& o) const {
    return row < o.row + o.nx && o.row < row + nx && col < o.col + o.ny && o.col < col + ny;
  }
};

// The relative-positioning loop as printed places a non-accumulating FB
// left of the previous rightmost id in seq2, which packs it below under
// standard sequence-pair rules. Canonical appends to both sequences
// (strictly to the right) instead.
enum class Alg1Mode { Literal, Canonical };

// The size-balancing throughput bound as printed divides by the
// predecessor's op width; TypoFixed reads it as the successor's.
enum class ThroughputIndex { TypoFixed, Literal };

SequencePair position_fbs(const std::vector<FbRequirement>& fbs,
                          Alg1Mode mode = Alg1Mode::Literal);

// Greedy per-FB sizing: rows are maximized in pipeline order, columns are
// the smallest multiple of the op width meeting the predecessor-throughput
// intake bound (the last FB in the chain takes the remaining columns).
// Res blocks are bound to their host: one row per residual bit-plane per
// host replica band, columns shared with the host (not double-counted
// against the column budget). Throws InfeasibleError naming the violated
// constraint.
std::vector<FbShape> balance_sizes(const std::vector<FbRequirement>& fbs,
                                   const ArrayDims& array,
                                   ThroughputIndex ti = ThroughputIndex::TypoFixed);

// Longest-path packing of the sequence pair: i before j in both sequences
// puts i strictly left of j; i after j in seq1 but before j in seq2 puts i
// strictly below j. Throws InfeasibleError on overflow past the array.
std::vector<Placement> realize_placement(const SequencePair& sp,
                                         const std::vector<FbShape>& shapes,
                                         const ArrayDims& array);

// Re-evaluates the three balancing constraints on a sizing result; returns
// an empty string when all hold, else a description of the first failure.
std::string check_balance(const std::vector<FbRequirement>& fbs,
                          const std::vector<FbShape>& shapes,
                          const ArrayDims& array,
                          ThroughputIndex ti = ThroughputIndex::TypoFixed);

}  // namespace hurry
