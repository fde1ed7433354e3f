#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hurry/datamap.hpp"
#include "hurry/hw_config.hpp"

namespace hurry {

// Line voltage levels of the third-voltage scheme. Sense marks a bitline
// being read; Floating is undriven.
enum class Level : std::uint8_t { Floating, Gnd, V13, V23, Vset, Vreset, Sense };

struct CrossbarState {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::uint8_t> cells;  // 1-bit conductances, row-major
  std::vector<Level> wl, bl;        // drive levels of the current cycle

  CrossbarState() = default;
  CrossbarState(std::int64_t r, std::int64_t c)
      : rows(r), cols(c), cells(std::size_t(r * c), 0),
        wl(std::size_t(r), Level::Floating), bl(std::size_t(c), Level::Floating) {}

  std::uint8_t cell(std::int64_t r, std::int64_t c) const {
    return cells[std::size_t(r * cols + c)];
  }
  void set_cell(std::int64_t r, std::int64_t c, std::uint8_t v) {
    cells[std::size_t(r * cols + c)] = v;
  }
};

enum class BasOpKind { WriteColumn, ReadRegion, LogicStep };
enum class LogicMicroOp { Reset, Compare, Select };

struct BasOp {
  BasOpKind kind = BasOpKind::ReadRegion;
  Placement region;

  // WriteColumn: one absolute column of the region plus its bit per row.
  std::int64_t column = -1;
  std::vector<std::uint8_t> bits;  // region.nx entries

  // ReadRegion: one input bit per region row.
  std::vector<std::uint8_t> input_bits;  // region.nx entries

  // LogicStep: micro-op over specific rows; Select writes winner bits.
  LogicMicroOp micro = LogicMicroOp::Reset;
  std::vector<std::int64_t> logic_rows;                              // absolute
  std::vector<std::pair<std::pair<std::int64_t, std::int64_t>, std::uint8_t>> cell_writes;

  static BasOp write_column(const Placement& region, std::int64_t col,
                            std::vector<std::uint8_t> bits);
  static BasOp read_region(const Placement& region, std::vector<std::uint8_t> input_bits);
  static BasOp logic(const Placement& region, LogicMicroOp micro,
                     std::vector<std::int64_t> rows);
};

struct CycleResult {
  // Per read op (in ops order), the per-column integer sums over the op's
  // region rows.
  std::vector<std::vector<std::int64_t>> read_sums;
  std::int64_t activated_cells = 0;
  std::int64_t adc_saturated_columns = 0;  // bitline totals over the ADC range
};

// Executes one cycle of concurrently scheduled ops. Preconditions: regions
// pairwise disjoint and at most one write-class op (WriteColumn or
// LogicStep). Throws InvariantError on a voltage conflict: two reads
// demanding different levels on a shared wordline, or a sensed bitline
// driven by a write. Write-drive levels on wordlines shared with readers
// are the scheme's working state, not a conflict.
CycleResult apply_cycle(CrossbarState& state, const std::vector<BasOp>& ops,
                        std::int64_t adc_range = 511);

// Column-serial write of a bit matrix (region.nx x region.ny, row-major).
// Returns cycles spent: columns, plus one reset cycle when include_reset.
std::int64_t write_fb(CrossbarState& state, const Placement& region,
                      std::span<const std::uint8_t> matrix, bool include_reset);

struct GemmStats {
  std::int64_t cycles = 0;
  std::int64_t adc_saturated_columns = 0;
  std::int64_t activated_cell_cycles = 0;
  std::int64_t adc_conversions = 0;
  std::int64_t dac_drives = 0;
  std::int64_t sna_ops = 0;
};

// Bit-serial GEMM of one input window against replica `rep` of a mapped
// weight-stationary FB. Streams input bits LSB-first over bits_in read
// cycles; weight-bit columns recombine by shift-and-add (two's
// complement, MSB column negative). The result is the exact signed
// matrix-vector product.
std::vector<std::int64_t> gemm_bitserial(CrossbarState& state, const FbRequirement& fb,
                                         const Placement& region, std::span<const std::int64_t> input,
                                         int bits_in, std::int64_t adc_range,
                                         GemmStats* stats = nullptr, std::int64_t rep = 0);

// One compute pass over up to grid.total() windows (one per replica, in
// row-major replica order). All replicas activate together for bits_in
// read cycles; saturation is diagnosed on full-column totals.
std::vector<std::vector<std::int64_t>> gemm_pass(CrossbarState& state, const FbRequirement& fb,
                                                 const Placement& region,
                                                 std::span<const std::vector<std::int64_t>> windows,
                                                 int bits_in, std::int64_t adc_range,
                                                 GemmStats* stats = nullptr);

enum class TournamentMode { Max, Relu, SoftmaxMax };

struct TournamentResult {
  std::int64_t winner = 0;
  std::int64_t cycles = 0;
  std::vector<std::int64_t> elements;  // populated for SoftmaxMax
};

// Plays the compare/select tournament of one mapped instance. Leaves must
// have been populated via map_inputs; values are the stored unsigned
// leaf integers. Cycles follow the per-match cost model
// ceil(b/2)*compare + select.
TournamentResult run_tournament(CrossbarState& state, const FbRequirement& fb,
                                const Placement& region, const HardwareConfig& hw,
                                TournamentMode mode, std::int64_t instance,
                                int elem_count);

// Softmax probabilities of integer logits: in-array max reduction followed
// by the tile's interpolated exp/log lookup tables (Eq.-style single
// exp/log evaluation). Deterministic for a fixed config.
std::vector<double> softmax_eval(std::span<const std::int64_t> elems, const HardwareConfig& hw,
                                 std::int64_t* cycles_out = nullptr);

}  // namespace hurry
