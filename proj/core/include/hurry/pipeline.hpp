#pragma once

#include <map>
#include <span>

#include "hurry/crossbar.hpp"
#include "hurry/floorplan.hpp"
#include "hurry/hw_config.hpp"
#include "hurry/model.hpp"

namespace hurry {

struct PlanOptions {
  Alg1Mode alg1 = Alg1Mode::Literal;
  ThroughputIndex throughput = ThroughputIndex::TypoFixed;
};

struct FbPlan {
  FbRequirement req;
  FbShape shape;
  Placement place;
  int group = 0;  // IMA index; one layer group per IMA
};

struct MappingPlan {
  ArrayDims array;
  std::vector<FbPlan> fbs;                  // pipeline order
  std::vector<std::vector<int>> group_fbs;  // fb ids per group
  std::uint64_t model_hash = 0;

  const FbPlan& fb(int fb_id) const;
};

// Lower, position (Alg. 1), size (Alg. 2) and pack every layer group into
// its IMA. Res blocks are carved directly beneath their host so they
// share its bitlines.
MappingPlan build_plan(const ModelGraph& model, const HardwareConfig& hw,
                       const PlanOptions& opts = {});

enum class Phase { LoadInput, Compute, WriteOutput };
const char* to_string(Phase p);

struct FbTask {
  int fb_id = 0;
  Phase phase = Phase::Compute;
  std::int64_t start = 0, end = 0;  // [start, end), chip cycles
  std::int64_t granule = -1;        // producer round / pass index
  int producer_fb = -1;
  std::int64_t producer_granule = -1;
  std::int64_t activated_cells = 0;  // per cycle within the span
};

struct PipelineTrace {
  std::vector<FbTask> tasks;  // ordered by start cycle
  std::int64_t total_cycles = 0;
  std::int64_t used_arrays = 0;
  std::int64_t cell_budget = 0;  // total resident cells across allocated arrays
  ArrayDims array;
  std::map<int, std::int64_t> stall_cycles;  // producer fb -> intake-blocked cycles
  std::int64_t transfer_cycles = 0;          // inter-IMA movement
  std::int64_t transfer_bytes = 0;
};

// Builds the fine-grained FB schedule for the whole plan: rounds pipeline
// the head FB's reads against the write port (residual reloads, output
// transfers, tournament passes); groups run back to back at image
// granularity. Stall cycles count only intake-capacity blocking, the
// condition Alg. 2's throughput bound rules out.
PipelineTrace schedule_plan(const ModelGraph& model, const MappingPlan& plan,
                            const HardwareConfig& hw);

// Event tallies feeding the energy model.
struct EventCounts {
  std::int64_t read_cycles = 0;
  std::int64_t adc_conversions = 0;
  std::map<int, std::int64_t> adc_conversions_by_bits;
  std::int64_t dac_drives = 0;
  std::int64_t sna_ops = 0;
  std::int64_t cell_write_events = 0;
  std::int64_t cell_read_activations = 0;
  std::int64_t register_accesses = 0;
  std::int64_t transfer_bytes = 0;
  std::int64_t lut_evaluations = 0;
  std::int64_t digital_ops = 0;  // baseline digital units only
  std::int64_t adc_saturations = 0;

  EventCounts& operator+=(const EventCounts& o);
};

struct InferenceResult {
  std::vector<std::vector<std::int64_t>> layer_outputs;
  std::vector<double> probabilities;
  PipelineTrace trace;
  EventCounts events;
  std::int64_t config_write_cycles = 0;  // one-time weight/config writes
};

// Functionally exact inference through the crossbar ops (bit-serial GEMM,
// in-array tournaments, LUT softmax) plus the cycle-level trace.
InferenceResult simulate_inference(const ModelGraph& model, const MappingPlan& plan,
                                   const HardwareConfig& hw, std::span<const std::int64_t> input,
                                   std::uint64_t weight_seed);

struct FbCycleReport {
  int fb_id = 0;
  int layer_id = 0;
  std::int64_t load_cycles = 0;
  std::int64_t compute_cycles = 0;
  std::int64_t write_cycles = 0;
  std::int64_t stall_cycles = 0;
  std::int64_t total() const { return load_cycles + compute_cycles + write_cycles; }
};

struct CycleReport {
  std::vector<FbCycleReport> per_fb;
  std::map<int, std::int64_t> per_layer;  // layer id -> owning FB total
  std::int64_t total_cycles = 0;
  double overlap_fraction = 0;  // cycles with >= 2 active FBs / total
};

CycleReport count_cycles(const PipelineTrace& trace, const MappingPlan& plan);

// Causality and bounds checks on a trace; returns empty on success.
std::string check_trace(const PipelineTrace& trace, const MappingPlan& plan);

}  // namespace hurry
