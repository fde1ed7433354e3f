#pragma once

#include <optional>
#include <vector>

#include "hurry/model.hpp"
#include "hurry/tournament.hpp"

namespace hurry {

// Per-op-instance cell requirement of one functional block. For
// weight-stationary blocks one op instance is a full kernel application
// (all output channels for one window); for input-stationary blocks it is
// one tournament instance.
struct FbRequirement {
  int fb_id = 0;
  int layer_id = 0;
  OpKind op_kind = OpKind::Conv;
  Dataflow dataflow = Dataflow::WeightStationary;

  std::int64_t bx = 0;  // rows required per op instance
  std::int64_t by = 0;  // columns required per op instance
  std::int64_t ops_per_layer = 0;

  // Res blocks accumulate into their conv/fc producer's bitlines.
  std::optional<int> accumulates_with;

  // Input-stationary blocks carry their tournament geometry; elem_bits is
  // the element width stored in the leaves. Weight-stationary blocks
  // carry the weight bit width.
  std::optional<TournamentLayout> tournament;
  int elem_bits = 0;
  int bits_w = 0;

  // Layer ids folded into this block (a ReLU merged into a Max FB).
  std::vector<int> merged_layers;

  std::int64_t cells_per_op() const { return bx * by; }
};

struct ArrayDims {
  std::int64_t rows = 512;
  std::int64_t cols = 512;
};

// Lowers each layer to one functional-block requirement. A ReLU adjacent
// to a Max layer is fused into the Max block; a standalone ReLU becomes a
// two-leaf tournament against a constant zero operand. Throws
// InfeasibleError if a single op instance cannot fit the unit array.
std::vector<FbRequirement> lower_to_fbs(const ModelGraph& graph, const ArrayDims& array);

// The requirement covering a given layer id (owning or merged).
const FbRequirement& fb_for_layer(const std::vector<FbRequirement>& fbs, int layer_id);

}  // namespace hurry
