#include "hurry/datamap.hpp"

namespace hurry {

TileGrid tile_grid(const FbRequirement& fb, const Placement& region) {
  TileGrid g;
  g.vertical = region.nx / fb.bx;
  g.horizontal = region.ny / fb.by;
  if (g.vertical < 1 || g.horizontal < 1)
    throw InvariantError("fb " + std::to_string(fb.fb_id) + ": region smaller than one op tile");
  return g;
}

namespace {

// Unsigned two's-complement bit j (0 = MSB) of v at the given width.
std::uint8_t tc_bit(std::int64_t v, int width, int j) {
  std::uint64_t u = std::uint64_t(v) & ((width >= 64) ? ~0ull : ((1ull << width) - 1));
  return (u >> (width - 1 - j)) & 1;
}

}  // namespace

CellAssignment map_weights(const FbRequirement& fb, const Placement& region,
                           std::span<const std::int32_t> kernel) {
  if (fb.dataflow != Dataflow::WeightStationary)
    throw InvariantError("map_weights on an input-stationary FB");
  const int bits_w = fb.bits_w;
  const std::int64_t k_count = fb.by / bits_w;
  if (std::int64_t(kernel.size()) != k_count * fb.bx)
    throw InvariantError("fb " + std::to_string(fb.fb_id) + ": kernel size " +
                         std::to_string(kernel.size()) + " does not match requirement " +
                         std::to_string(k_count * fb.bx));
  TileGrid grid = tile_grid(fb, region);

  CellAssignment asg;
  asg.fb_id = fb.fb_id;
  asg.region = region;
  asg.cells.reserve(std::size_t(grid.total() * fb.bx * fb.by));
  for (std::int64_t u = 0; u < grid.vertical; ++u) {
    for (std::int64_t v = 0; v < grid.horizontal; ++v) {
      std::int64_t rep = u * grid.horizontal + v;
      for (std::int64_t r = 0; r < fb.bx; ++r) {
        for (std::int64_t k = 0; k < k_count; ++k) {
          for (int j = 0; j < bits_w; ++j) {
            AssignedCell c;
            c.row = std::int32_t(region.row + u * fb.bx + r);
            c.col = std::int32_t(region.col + v * fb.by + k * bits_w + j);
            c.role = CellRole::WeightBit;
            c.a = std::int32_t(rep);
            c.b = std::int32_t(k);
            c.c = std::int32_t(r);
            c.d = j;
            asg.cells.push_back(c);
          }
        }
      }
    }
  }
  return asg;
}

CellAssignment map_inputs(const FbRequirement& fb, const Placement& region,
                          std::span<const std::int64_t> elems,
                          std::int64_t relu_zero_pattern) {
  if (fb.dataflow != Dataflow::InputStationary)
    throw InvariantError("map_inputs on a weight-stationary FB");

  CellAssignment asg;
  asg.fb_id = fb.fb_id;
  asg.region = region;

  if (fb.op_kind == OpKind::Res) {
    // One row per residual bit-plane per host replica band; element k's
    // bits share the host's least-significant weight column of channel k.
    const int bits = fb.elem_bits;
    std::int64_t bands = region.nx / bits;
    std::int64_t k_count = 0;
    // by is the host's column span: channels * host bits_w; the column
    // step is recovered from it via the stored elem count per band.
    // Elements arrive band-major: band 0's channels, then band 1's.
    if (elems.empty()) return asg;
    if (std::int64_t(elems.size()) % bands != 0)
      throw InvariantError("res elems must fill whole bands");
    k_count = std::int64_t(elems.size()) / bands;
    std::int64_t col_step = fb.by / k_count;
    for (std::int64_t band = 0; band < bands; ++band) {
      for (std::int64_t k = 0; k < k_count; ++k) {
        std::int64_t v = elems[band * k_count + k];
        for (int j = 0; j < bits; ++j) {
          AssignedCell c;
          c.row = std::int32_t(region.row + band * bits + j);
          c.col = std::int32_t(region.col + k * col_step + (col_step - 1));
          c.role = CellRole::InputBit;
          c.a = std::int32_t(band);
          c.b = std::int32_t(k);
          c.c = j;
          c.d = tc_bit(v, bits, bits - 1 - j) ? 1 : 0;  // plane j holds bit weight 2^j
          asg.cells.push_back(c);
        }
      }
    }
    return asg;
  }

  const TournamentLayout& t = *fb.tournament;
  TileGrid grid = tile_grid(fb, region);
  const bool relu = fb.op_kind == OpKind::ReLU;
  const int per_instance = relu ? 1 : t.p;  // ReLU's zero operand is shared
  if (std::int64_t(elems.size()) > grid.total() * per_instance)
    throw InvariantError("fb " + std::to_string(fb.fb_id) + ": " + std::to_string(elems.size()) +
                         " elements exceed capacity " + std::to_string(grid.total() * per_instance));

  auto emit_leaf = [&](std::int64_t inst, int slot, std::int64_t value) {
    std::int64_t u = inst / grid.horizontal, v = inst % grid.horizontal;
    for (int j = 0; j < t.b; ++j) {
      if (value < 0) throw InvariantError("map_inputs: negative element (bias signed data first)");
      AssignedCell c;
      c.row = std::int32_t(region.row + u * t.rows());
      c.col = std::int32_t(region.col + v * t.leaf_columns + slot * t.b + j);
      c.role = CellRole::InputBit;
      c.a = std::int32_t(inst);
      c.b = slot;
      c.c = j;
      c.d = tc_bit(value, t.b, j) ? 1 : 0;
      asg.cells.push_back(c);
    }
  };

  for (std::size_t e = 0; e < elems.size(); ++e) {
    std::int64_t inst = std::int64_t(e) / per_instance;
    int slot = int(std::int64_t(e) % per_instance);
    emit_leaf(inst, slot, elems[e]);
  }
  if (relu && !elems.empty()) emit_leaf(0, 1, relu_zero_pattern);  // the shared zero operand

  return asg;
}

CellAssignment static_assignment(const FbRequirement& fb, const Placement& region) {
  CellAssignment asg;
  asg.fb_id = fb.fb_id;
  asg.region = region;

  if (fb.dataflow == Dataflow::WeightStationary) {
    TileGrid grid = tile_grid(fb, region);
    asg.cells.reserve(std::size_t(grid.total() * fb.cells_per_op()));
    for (std::int64_t u = 0; u < grid.vertical; ++u)
      for (std::int64_t r = 0; r < fb.bx; ++r)
        for (std::int64_t v = 0; v < grid.horizontal; ++v)
          for (std::int64_t q = 0; q < fb.by; ++q) {
            AssignedCell c;
            c.row = std::int32_t(region.row + u * fb.bx + r);
            c.col = std::int32_t(region.col + v * fb.by + q);
            c.role = CellRole::WeightBit;
            asg.cells.push_back(c);
          }
    return asg;
  }

  if (fb.op_kind == OpKind::Res) {
    // Bit-plane rows: one cell per (plane, channel) per band, sitting on
    // the host's least-significant weight column of that channel.
    const int bits = fb.elem_bits;
    std::int64_t bands = region.nx / bits;
    std::int64_t k_count = region.ny / fb.bits_w;
    for (std::int64_t band = 0; band < bands; ++band)
      for (std::int64_t k = 0; k < k_count; ++k)
        for (int j = 0; j < bits; ++j) {
          AssignedCell c;
          c.row = std::int32_t(region.row + band * bits + j);
          c.col = std::int32_t(region.col + k * fb.bits_w + (fb.bits_w - 1));
          c.role = CellRole::InputBit;
          c.a = std::int32_t(band);
          c.b = std::int32_t(k);
          c.c = j;
          asg.cells.push_back(c);
        }
    return asg;
  }

  const TournamentLayout& t = *fb.tournament;
  TileGrid grid = tile_grid(fb, region);
  const bool relu = fb.op_kind == OpKind::ReLU;
  for (std::int64_t inst = 0; inst < grid.total(); ++inst) {
    std::int64_t u = inst / grid.horizontal, v = inst % grid.horizontal;
    std::int64_t r0 = region.row + u * t.rows();
    std::int64_t c0 = region.col + v * t.leaf_columns;
    int leaf_slots = relu ? 1 : t.p;
    for (int s = 0; s < leaf_slots; ++s)
      for (int j = 0; j < t.b; ++j) {
        AssignedCell c;
        c.row = std::int32_t(r0);
        c.col = std::int32_t(c0 + s * t.b + j);
        c.role = CellRole::InputBit;
        asg.cells.push_back(c);
      }
    for (int l = 1; l <= t.levels; ++l)
      for (int mslot = 0; mslot < t.matches(l); ++mslot)
        for (int j = 0; j < t.b; ++j) {
          AssignedCell c;
          c.row = std::int32_t(r0 + l);
          c.col = std::int32_t(c0 + mslot * t.b + j);
          c.role = CellRole::TournamentSlot;
          c.b = l;
          c.c = mslot;
          asg.cells.push_back(c);
        }
  }
  if (relu && grid.total() > 0)
    for (int j = 0; j < t.b; ++j) {
      AssignedCell c;
      c.row = std::int32_t(region.row);
      c.col = std::int32_t(region.col + t.b + j);
      c.role = CellRole::InputBit;
      asg.cells.push_back(c);
    }
  return asg;
}

std::vector<std::uint8_t> bit_matrix(const CellAssignment& asg, const FbRequirement& fb,
                                     std::span<const std::int32_t> kernel) {
  std::vector<std::uint8_t> bits(std::size_t(asg.region.nx * asg.region.ny), 0);
  for (const auto& c : asg.cells) {
    std::int64_t r = c.row - asg.region.row;
    std::int64_t q = c.col - asg.region.col;
    std::uint8_t v = 0;
    if (c.role == CellRole::WeightBit)
      v = tc_bit(kernel[std::size_t(c.b) * fb.bx + c.c], fb.bits_w, c.d);
    else if (c.role == CellRole::InputBit)
      v = std::uint8_t(c.d);
    bits[std::size_t(r * asg.region.ny + q)] = v;
  }
  return bits;
}

std::vector<std::int32_t> read_back_kernel(const CellAssignment& asg, const FbRequirement& fb,
                                           std::span<const std::uint8_t> bits) {
  const std::int64_t k_count = fb.by / fb.bits_w;
  std::vector<std::uint64_t> raw(std::size_t(k_count * fb.bx), 0);
  for (const auto& c : asg.cells) {
    if (c.role != CellRole::WeightBit || c.a != 0) continue;  // replica 0 only
    std::size_t idx = std::size_t(c.b) * fb.bx + c.c;
    std::int64_t r = c.row - asg.region.row, q = c.col - asg.region.col;
    if (bits[std::size_t(r * asg.region.ny + q)]) raw[idx] |= 1ull << (fb.bits_w - 1 - c.d);
  }
  std::vector<std::int32_t> kernel(raw.size(), 0);
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    std::uint64_t u = raw[i];
    if (fb.bits_w < 64 && (u & (1ull << (fb.bits_w - 1))))  // sign-extend
      u |= ~((1ull << fb.bits_w) - 1);
    kernel[i] = std::int32_t(std::int64_t(u));
  }
  return kernel;
}

}  // namespace hurry
