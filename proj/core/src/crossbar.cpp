#include "hurry/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace hurry {

BasOp BasOp::write_column(const Placement& region, std::int64_t col,
                          std::vector<std::uint8_t> bits) {
  BasOp op;
  op.kind = BasOpKind::WriteColumn;
  op.region = region;
  op.column = col;
  op.bits = std::move(bits);
  return op;
}

BasOp BasOp::read_region(const Placement& region, std::vector<std::uint8_t> input_bits) {
  BasOp op;
  op.kind = BasOpKind::ReadRegion;
  op.region = region;
  op.input_bits = std::move(input_bits);
  return op;
}

BasOp BasOp::logic(const Placement& region, LogicMicroOp micro, std::vector<std::int64_t> rows) {
  BasOp op;
  op.kind = BasOpKind::LogicStep;
  op.region = region;
  op.micro = micro;
  op.logic_rows = std::move(rows);
  return op;
}

namespace {

bool write_class(const BasOp& op) {
  return op.kind == BasOpKind::WriteColumn || op.kind == BasOpKind::LogicStep;
}

void check_region(const CrossbarState& s, const Placement& r) {
  if (r.row < 0 || r.col < 0 || r.row + r.nx > s.rows || r.col + r.ny > s.cols)
    throw InvariantError("region out of array bounds");
}

}  // namespace

CycleResult apply_cycle(CrossbarState& state, const std::vector<BasOp>& ops,
                        std::int64_t adc_range) {
  // Precondition checks: disjoint regions, at most one write-class op.
  int writers = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    check_region(state, ops[i].region);
    if (write_class(ops[i])) ++writers;
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      if (ops[i].region.overlaps(ops[j].region))
        throw InvariantError("ops touch overlapping regions");
  }
  if (writers > 1) throw InvariantError("more than one write-active FB in a cycle");

  std::fill(state.wl.begin(), state.wl.end(), Level::Floating);
  std::fill(state.bl.begin(), state.bl.end(), Level::Floating);
  std::vector<std::uint8_t> wl_by_write(state.wl.size(), 0), bl_by_write(state.bl.size(), 0);

  auto demand_wl = [&](std::int64_t r, Level lv, bool from_write) {
    Level cur = state.wl[std::size_t(r)];
    if (cur == Level::Floating) {
      state.wl[std::size_t(r)] = lv;
      wl_by_write[std::size_t(r)] = from_write;
      return;
    }
    // The write's drive doubles as the read voltage on shared wordlines;
    // only read-vs-read disagreements are conflicts.
    if (from_write) {
      state.wl[std::size_t(r)] = lv;
      wl_by_write[std::size_t(r)] = 1;
      return;
    }
    if (wl_by_write[std::size_t(r)]) return;
    if (cur != lv)
      throw InvariantError("voltage conflict: reads demand different levels on WL " +
                           std::to_string(r));
  };
  auto demand_bl = [&](std::int64_t c, Level lv, bool from_write) {
    Level cur = state.bl[std::size_t(c)];
    if (cur == Level::Floating) {
      state.bl[std::size_t(c)] = lv;
      bl_by_write[std::size_t(c)] = from_write;
      return;
    }
    if (lv == Level::Sense || cur == Level::Sense) {
      // Sensing a line a write is driving corrupts the read. Two senses
      // may share a bitline: the currents accumulate by design.
      if ((lv == Level::Sense) != (cur == Level::Sense))
        throw InvariantError("voltage conflict: BL " + std::to_string(c) +
                             " both driven and sensed");
      return;
    }
    if (cur != lv && !(from_write && bl_by_write[std::size_t(c)]))
      throw InvariantError("voltage conflict: BL " + std::to_string(c) +
                           " demanded at two levels");
  };

  CycleResult res;
  for (const auto& op : ops) {
    const auto& rg = op.region;
    res.activated_cells += rg.nx * rg.ny;
    switch (op.kind) {
      case BasOpKind::WriteColumn: {
        if (op.column < rg.col || op.column >= rg.col + rg.ny)
          throw InvariantError("write column outside its region");
        if (std::int64_t(op.bits.size()) != rg.nx)
          throw InvariantError("write bits do not match region rows");
        for (std::int64_t r = 0; r < rg.nx; ++r)
          demand_wl(rg.row + r, op.bits[std::size_t(r)] ? Level::Vset : Level::V23, true);
        demand_bl(op.column, Level::Gnd, true);
        for (std::int64_t c = rg.col; c < rg.col + rg.ny; ++c)
          if (c != op.column) demand_bl(c, Level::V13, true);
        break;
      }
      case BasOpKind::ReadRegion: {
        if (std::int64_t(op.input_bits.size()) != rg.nx)
          throw InvariantError("read input bits do not match region rows");
        for (std::int64_t r = 0; r < rg.nx; ++r)
          demand_wl(rg.row + r, op.input_bits[std::size_t(r)] ? Level::V23 : Level::V13, false);
        for (std::int64_t c = rg.col; c < rg.col + rg.ny; ++c)
          demand_bl(c, Level::Sense, false);
        break;
      }
      case BasOpKind::LogicStep: {
        Level lv = op.micro == LogicMicroOp::Reset ? Level::Vreset : Level::Vset;
        for (std::int64_t r : op.logic_rows) {
          if (r < rg.row || r >= rg.row + rg.nx)
            throw InvariantError("logic row outside its region");
          demand_wl(r, lv, true);
        }
        for (std::int64_t c = rg.col; c < rg.col + rg.ny; ++c)
          demand_bl(c, Level::Gnd, true);
        break;
      }
    }
  }

  // State updates and read outputs after the legality pass.
  std::vector<std::int64_t> column_total(std::size_t(state.cols), 0);
  for (const auto& op : ops) {
    const auto& rg = op.region;
    switch (op.kind) {
      case BasOpKind::WriteColumn:
        for (std::int64_t r = 0; r < rg.nx; ++r)
          state.set_cell(rg.row + r, op.column, op.bits[std::size_t(r)]);
        break;
      case BasOpKind::ReadRegion: {
        std::vector<std::int64_t> sums(std::size_t(rg.ny), 0);
        for (std::int64_t r = 0; r < rg.nx; ++r) {
          if (!op.input_bits[std::size_t(r)]) continue;
          const std::uint8_t* rowp = &state.cells[std::size_t((rg.row + r) * state.cols)];
          for (std::int64_t c = 0; c < rg.ny; ++c) sums[std::size_t(c)] += rowp[rg.col + c];
        }
        for (std::int64_t c = 0; c < rg.ny; ++c) column_total[std::size_t(rg.col + c)] += sums[std::size_t(c)];
        res.read_sums.push_back(std::move(sums));
        break;
      }
      case BasOpKind::LogicStep:
        if (op.micro == LogicMicroOp::Reset) {
          for (std::int64_t r : op.logic_rows)
            for (std::int64_t c = rg.col; c < rg.col + rg.ny; ++c) state.set_cell(r, c, 0);
        }
        for (const auto& [rc, v] : op.cell_writes) {
          if (!rg.contains(rc.first, rc.second))
            throw InvariantError("logic cell write outside its region");
          state.set_cell(rc.first, rc.second, v);
        }
        break;
    }
  }
  for (std::int64_t c = 0; c < state.cols; ++c)
    if (column_total[std::size_t(c)] > adc_range) ++res.adc_saturated_columns;
  return res;
}

std::int64_t write_fb(CrossbarState& state, const Placement& region,
                      std::span<const std::uint8_t> matrix, bool include_reset) {
  check_region(state, region);
  if (std::int64_t(matrix.size()) != region.nx * region.ny)
    throw InvariantError("bit matrix does not match region extent");
  std::int64_t cycles = 0;
  if (include_reset) {
    std::vector<std::int64_t> rows(std::size_t(region.nx));
    for (std::int64_t r = 0; r < region.nx; ++r) rows[std::size_t(r)] = region.row + r;
    apply_cycle(state, {BasOp::logic(region, LogicMicroOp::Reset, std::move(rows))});
    ++cycles;
  }
  for (std::int64_t c = 0; c < region.ny; ++c) {
    std::vector<std::uint8_t> bits(std::size_t(region.nx));
    for (std::int64_t r = 0; r < region.nx; ++r) bits[std::size_t(r)] = matrix[std::size_t(r * region.ny + c)];
    apply_cycle(state, {BasOp::write_column(region, region.col + c, std::move(bits))});
    ++cycles;
  }
  return cycles;
}

namespace {

// Input bit t (weight 2^t; the top bit of a two's-complement stream is
// subtracted by the shift-and-add stage).
std::uint8_t input_bit(std::int64_t v, int bits_in, int t) {
  std::uint64_t u = std::uint64_t(v) & ((bits_in >= 64) ? ~0ull : ((1ull << bits_in) - 1));
  return (u >> t) & 1;
}

}  // namespace

std::vector<std::vector<std::int64_t>> gemm_pass(CrossbarState& state, const FbRequirement& fb,
                                                 const Placement& region,
                                                 std::span<const std::vector<std::int64_t>> windows,
                                                 int bits_in, std::int64_t adc_range,
                                                 GemmStats* stats) {
  TileGrid grid = tile_grid(fb, region);
  if (std::int64_t(windows.size()) > grid.total())
    throw InvariantError("more windows than replicas in one pass");
  const std::int64_t k_count = fb.by / fb.bits_w;

  std::vector<std::vector<std::int64_t>> acc(windows.size(),
                                             std::vector<std::int64_t>(std::size_t(fb.by), 0));
  for (int t = 0; t < bits_in; ++t) {
    std::vector<std::uint8_t> drive(std::size_t(region.nx), 0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (std::int64_t(windows[w].size()) != fb.bx)
        throw InvariantError("window length does not match fb rows per replica");
      std::int64_t u = std::int64_t(w) / grid.horizontal;
      for (std::int64_t r = 0; r < fb.bx; ++r)
        drive[std::size_t(u * fb.bx + r)] |= input_bit(windows[w][std::size_t(r)], bits_in, t);
    }
    CycleResult cyc = apply_cycle(state, {BasOp::read_region(region, drive)}, adc_range);
    if (stats) {
      ++stats->cycles;
      stats->adc_saturated_columns += cyc.adc_saturated_columns;
      stats->activated_cell_cycles += cyc.activated_cells;
      stats->adc_conversions += region.ny;
      stats->dac_drives += region.nx;  // every row is driven at V13 or V23
    }

    // Functional per-replica sums: the idealized periphery resolves each
    // replica tile independently; the full-region activation above feeds
    // the saturation diagnostic.
    std::int64_t sign = (t == bits_in - 1) ? -1 : 1;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      std::int64_t u = std::int64_t(w) / grid.horizontal;
      std::int64_t v = std::int64_t(w) % grid.horizontal;
      for (std::int64_t c = 0; c < fb.by; ++c) {
        std::int64_t sum = 0;
        for (std::int64_t r = 0; r < fb.bx; ++r) {
          if (!input_bit(windows[w][std::size_t(r)], bits_in, t)) continue;
          sum += state.cell(region.row + u * fb.bx + r, region.col + v * fb.by + c);
        }
        acc[w][std::size_t(c)] += sign * (std::int64_t(1) << t) * sum;
      }
    }
  }

  // Shift-and-add across weight-bit columns, MSB column negative.
  std::vector<std::vector<std::int64_t>> out(windows.size(),
                                             std::vector<std::int64_t>(std::size_t(k_count), 0));
  for (std::size_t w = 0; w < windows.size(); ++w)
    for (std::int64_t k = 0; k < k_count; ++k) {
      std::int64_t v = 0;
      for (int j = 0; j < fb.bits_w; ++j) {
        std::int64_t weight = (j == 0) ? -(std::int64_t(1) << (fb.bits_w - 1))
                                       : (std::int64_t(1) << (fb.bits_w - 1 - j));
        v += weight * acc[w][std::size_t(k * fb.bits_w + j)];
      }
      out[w][std::size_t(k)] = v;
      if (stats) stats->sna_ops += fb.bits_w;
    }
  return out;
}

std::vector<std::int64_t> gemm_bitserial(CrossbarState& state, const FbRequirement& fb,
                                         const Placement& region,
                                         std::span<const std::int64_t> input, int bits_in,
                                         std::int64_t adc_range, GemmStats* stats,
                                         std::int64_t rep) {
  TileGrid grid = tile_grid(fb, region);
  if (rep < 0 || rep >= grid.total()) throw InvariantError("replica index out of range");
  // Run a pass with a single window on the chosen replica's tile.
  std::int64_t u = rep / grid.horizontal, v = rep % grid.horizontal;
  Placement tile{fb.fb_id, region.row + u * fb.bx, region.col + v * fb.by, fb.bx, fb.by};
  std::vector<std::vector<std::int64_t>> win{std::vector<std::int64_t>(input.begin(), input.end())};
  auto out = gemm_pass(state, fb, tile, win, bits_in, adc_range, stats);
  return out[0];
}

TournamentResult run_tournament(CrossbarState& state, const FbRequirement& fb,
                                const Placement& region, const HardwareConfig& hw,
                                TournamentMode mode, std::int64_t instance, int elem_count) {
  if (!fb.tournament) throw InvariantError("run_tournament on FB without a layout");
  const TournamentLayout& t = *fb.tournament;
  TileGrid grid = tile_grid(fb, region);
  if (instance < 0 || instance >= grid.total()) throw InvariantError("instance out of range");
  const bool relu = mode == TournamentMode::Relu;
  if (relu) elem_count = 1;
  if (elem_count < 1 || elem_count > t.p)
    throw InvariantError("element count does not match tournament layout");

  std::int64_t u = instance / grid.horizontal, v = instance % grid.horizontal;
  std::int64_t r0 = region.row + u * t.rows();
  std::int64_t c0 = region.col + v * t.leaf_columns;

  auto read_value = [&](std::int64_t row, std::int64_t col_base) {
    std::int64_t val = 0;
    for (int j = 0; j < t.b; ++j) val = (val << 1) | state.cell(row, col_base + j);
    return val;
  };

  std::vector<std::int64_t> elems;
  for (int e = 0; e < elem_count; ++e) elems.push_back(read_value(r0, c0 + e * t.b));
  if (relu) {
    // The shared zero operand lives in instance 0's second leaf slot.
    std::int64_t z0 = region.col + t.b;
    elems.push_back(read_value(region.row, z0));
  }

  struct Surv {
    std::int64_t value;
    std::int64_t row, col;  // where the value currently lives
  };
  std::vector<Surv> cur;
  for (std::size_t e = 0; e < elems.size(); ++e)
    cur.push_back({elems[std::size_t(e)], r0, c0 + std::int64_t(e) * t.b});

  std::int64_t cycles = 0;
  const int match_cost = hw.tournament_match_cycles(t.b);
  int level = 1;
  while (cur.size() > 1) {
    std::vector<Surv> next;
    int mslot = 0;
    for (std::size_t i = 0; i + 1 < cur.size(); i += 2) {
      std::int64_t win = std::max(cur[i].value, cur[i + 1].value);
      std::int64_t wr = r0 + level, wc = c0 + mslot * t.b;
      // Compare then select: the select step writes the winner bits.
      BasOp cmp = BasOp::logic(region, LogicMicroOp::Compare, {cur[i].row, cur[i + 1].row, wr});
      apply_cycle(state, {cmp});
      BasOp sel = BasOp::logic(region, LogicMicroOp::Select, {cur[i].row, cur[i + 1].row, wr});
      for (int j = 0; j < t.b; ++j) {
        std::uint8_t bit = std::uint8_t((std::uint64_t(win) >> (t.b - 1 - j)) & 1);
        sel.cell_writes.push_back({{wr, wc + j}, bit});
      }
      apply_cycle(state, {sel});
      cycles += match_cost;
      next.push_back({win, wr, wc});
      ++mslot;
    }
    if (cur.size() % 2) next.push_back(cur.back());  // bye advances unchanged
    cur = std::move(next);
    ++level;
  }

  TournamentResult res;
  res.winner = cur.empty() ? 0 : cur[0].value;
  res.cycles = cycles;
  if (mode == TournamentMode::SoftmaxMax) res.elements = elems;
  return res;
}

namespace {

// Piecewise-linear table over [lo, hi]; deterministic for fixed inputs.
struct Lut {
  double lo, hi;
  std::vector<double> nodes;

  Lut(double lo_, double hi_, int entries, double (*f)(double)) : lo(lo_), hi(hi_) {
    if (hi <= lo) hi = lo + 1.0;
    nodes.resize(std::size_t(entries));
    for (int i = 0; i < entries; ++i)
      nodes[std::size_t(i)] = f(lo + (hi - lo) * i / double(entries - 1));
  }
  double eval(double x) const {
    if (x <= lo) return nodes.front();
    if (x >= hi) return nodes.back();
    double pos = (x - lo) / (hi - lo) * double(nodes.size() - 1);
    std::size_t i = std::size_t(pos);
    if (i + 1 >= nodes.size()) return nodes.back();
    double frac = pos - double(i);
    return nodes[i] * (1.0 - frac) + nodes[i + 1] * frac;
  }
};

}  // namespace

std::vector<double> softmax_eval(std::span<const std::int64_t> elems, const HardwareConfig& hw,
                                 std::int64_t* cycles_out) {
  if (elems.empty()) throw InvariantError("softmax_eval on empty input");
  const int n = int(elems.size());

  // In-array max reduction through the same tournament machinery.
  int b = 2;
  std::int64_t maxabs = 1;
  for (auto v : elems) maxabs = std::max<std::int64_t>(maxabs, std::llabs(v));
  while ((std::int64_t(1) << (b - 1)) <= maxabs) ++b;
  std::int64_t bias = std::int64_t(1) << (b - 1);

  FbRequirement fb;
  fb.fb_id = 1;
  fb.op_kind = OpKind::Softmax;
  fb.dataflow = Dataflow::InputStationary;
  fb.elem_bits = b;
  fb.tournament = plan_tournament(n, b);
  fb.bx = fb.tournament->rows();
  fb.by = fb.tournament->leaf_columns;

  CrossbarState scratch(fb.bx, fb.by);
  Placement region{1, 0, 0, fb.bx, fb.by};
  std::vector<std::int64_t> biased;
  for (auto v : elems) biased.push_back(v + bias);
  auto asg = map_inputs(fb, region, biased);
  auto bits = bit_matrix(asg, fb, {});
  std::int64_t cycles = write_fb(scratch, region, bits, hw.include_reset);
  auto tr = run_tournament(scratch, fb, region, hw, TournamentMode::SoftmaxMax, 0, n);
  cycles += tr.cycles + std::int64_t(hw.softmax_per_class_cycles) * n;
  std::int64_t x_max = tr.winner - bias;

  // exp/log via the tile's lookup tables; shifted-by-max evaluation keeps
  // every exp argument in [-u_span, 0].
  double u_min = 0;
  for (auto v : elems) u_min = std::min(u_min, double(v - x_max));
  u_min = std::max(u_min, -16.0);  // exp underflows past this at 1e-2 scale
  Lut exp_lut(u_min, 0.0, hw.softmax_lut_entries, [](double x) { return std::exp(x); });
  double s = 0;
  std::vector<double> eu(elems.size());
  for (std::size_t i = 0; i < elems.size(); ++i) {
    eu[i] = exp_lut.eval(double(elems[i] - x_max));
    s += eu[i];
  }
  Lut log_lut(1.0, double(n), hw.softmax_lut_entries, [](double x) { return std::log(x); });
  double log_s = log_lut.eval(s);
  Lut exp2_lut(u_min - log_s, 0.0, hw.softmax_lut_entries, [](double x) { return std::exp(x); });
  std::vector<double> out(elems.size());
  for (std::size_t i = 0; i < elems.size(); ++i)
    out[i] = exp2_lut.eval(double(elems[i] - x_max) - log_s);

  if (cycles_out) *cycles_out = cycles;
  return out;
}

}  // namespace hurry
