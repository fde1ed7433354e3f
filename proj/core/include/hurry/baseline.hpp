#pragma once

#include "hurry/metrics.hpp"

namespace hurry {

enum class BaselineMode { Static, MultiSize };

struct BaselineConfig {
  BaselineMode mode = BaselineMode::Static;
  std::vector<std::int64_t> sizes = {512};  // Static uses the first entry
};

struct BaselineResult {
  PipelineTrace trace;
  EventCounts events;
  std::vector<LayerUtil> spatial;
  Allocation alloc;
  std::int64_t used_arrays = 0;
  std::int64_t movement_cycles = 0;
  std::vector<std::pair<int, std::int64_t>> layer_array_size;  // layer -> chosen size
};

// GEMM-only static-array architecture: conv/fc weights split across a
// fixed-size crossbar grid at the baseline cell precision, every other
// layer on digital units behind eDRAM round trips. MultiSize picks the
// best-fitting size per layer from the configured list.
BaselineResult run_baseline(const ModelGraph& model, const HardwareConfig& hw,
                            const BaselineConfig& cfg);

}  // namespace hurry
