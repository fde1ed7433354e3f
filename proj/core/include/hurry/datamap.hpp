#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hurry/floorplan.hpp"
#include "hurry/lowering.hpp"

namespace hurry {

enum class CellRole : std::uint8_t { WeightBit, InputBit, TournamentSlot, Unused };

// One assigned cell. The meaning of a..d depends on the role:
//   WeightBit:      a=replica, b=output channel, c=input index, d=bit (0 = MSB)
//   InputBit:       a=instance, b=element, c=bit (0 = MSB)
//   TournamentSlot: a=instance, b=level, c=match slot, d=bit
struct AssignedCell {
  std::int32_t row = 0;
  std::int32_t col = 0;
  CellRole role = CellRole::Unused;
  std::int32_t a = 0, b = 0, c = 0, d = 0;
};

struct CellAssignment {
  int fb_id = 0;
  Placement region;
  std::vector<AssignedCell> cells;

  std::int64_t mapped_cells() const { return std::int64_t(cells.size()); }
};

// Replica/instance grid of a sized FB: how many op tiles fit vertically
// and horizontally.
struct TileGrid {
  std::int64_t vertical = 1;
  std::int64_t horizontal = 1;
  std::int64_t total() const { return vertical * horizontal; }
};

TileGrid tile_grid(const FbRequirement& fb, const Placement& region);

// Weight-stationary layout: each kernel replica occupies a bx-by tile,
// replicas tile the region row-major, each weight's bits_w bits sit in
// adjacent columns with the MSB leftmost. kernel is [k][r] row-major with
// r over the flattened (channel, kh, kw) input window. Throws on a
// size mismatch.
CellAssignment map_weights(const FbRequirement& fb, const Placement& region,
                           std::span<const std::int32_t> kernel);

// Input-stationary layout for one batch: tournament leaves (Max/ReLU/
// Softmax) or residual bit-plane rows (Res). elems fill instances in
// order; throws on capacity overflow. Values must be non-negative (the
// caller biases signed data into offset-binary).
CellAssignment map_inputs(const FbRequirement& fb, const Placement& region,
                          std::span<const std::int64_t> elems,
                          std::int64_t relu_zero_pattern = 0);

// Full-occupancy layout used for spatial-utilization accounting: every
// replica tile for weight-stationary FBs, every instance's leaf and
// winner cells for input-stationary FBs.
CellAssignment static_assignment(const FbRequirement& fb, const Placement& region);

// Bit matrix (region.nx * region.ny, row-major) holding the assignment's
// cell values; unassigned cells are zero.
std::vector<std::uint8_t> bit_matrix(const CellAssignment& asg, const FbRequirement& fb,
                                     std::span<const std::int32_t> kernel);

// Reconstructs replica 0's kernel from a weight assignment's bit pattern
// (two's complement read-back).
std::vector<std::int32_t> read_back_kernel(const CellAssignment& asg, const FbRequirement& fb,
                                           std::span<const std::uint8_t> bits);

}  // namespace hurry
