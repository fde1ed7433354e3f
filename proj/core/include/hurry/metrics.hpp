#pragma once

#include <string>
#include <vector>

#include "hurry/hw_config.hpp"
#include "hurry/pipeline.hpp"

namespace hurry {

struct LayerUtil {
  int layer_id = 0;
  double util = 0;
  std::int64_t mapped_cells = 0;
  std::int64_t arrays_used = 1;
};

struct UtilizationReport {
  std::vector<LayerUtil> spatial;  // per ReRAM-mapped layer
  double spatial_mean = 0;
  double spatial_stddev = 0;
  double temporal_mean = 0;  // idle cycles count as zero activation
  std::int64_t total_cycles = 0;
};

// Spatial utilization of a realized plan: per layer, the cells its FB
// layout occupies over its IMA array. The counts come from the same
// CellAssignment machinery the mapper emits.
std::vector<LayerUtil> spatial_utilization(const ModelGraph& model, const MappingPlan& plan);

// Mean over layers plus population standard deviation.
void spatial_stats(const std::vector<LayerUtil>& spatial, double& mean, double& stddev);

// Mean activated-cell fraction per cycle over allocated arrays.
double temporal_utilization(const PipelineTrace& trace);

UtilizationReport utilization_report(const ModelGraph& model, const MappingPlan& plan,
                                     const PipelineTrace& trace);

struct CostLine {
  std::string component;
  double energy_pj = 0;
  double area_mm2 = 0;
};

struct CostReport {
  std::vector<CostLine> lines;
  double energy_total_pj = 0;
  double area_total_mm2 = 0;

  const CostLine& line(const std::string& component) const;
};

// Arrays a plan holds resident, by unit array size (rows).
struct Allocation {
  std::map<std::int64_t, std::int64_t> arrays_by_size;

  static Allocation single(std::int64_t rows, std::int64_t count) {
    Allocation a;
    a.arrays_by_size[rows] = count;
    return a;
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto& [r, n] : arrays_by_size) t += n;
    return t;
  }
};

// Linear per-event energy accounting plus static per-component area.
// Per-array component areas scale with the array's cell/row/column count
// relative to the configured unit array.
CostReport cost_report(const PipelineTrace& trace, const EventCounts& events,
                       const HardwareConfig& hw, const Allocation& alloc);

struct AdcComparison {
  double power_ratio = 0;  // many-small over one-large
  double area_ratio = 0;
};

// ADC power/area of `count_small` arrays of size `small_rows` against one
// array of size `big_rows`, from the shipped per-ADC constants.
AdcComparison adc_comparison(const HardwareConfig& hw, std::int64_t small_rows,
                             std::int64_t count_small, std::int64_t big_rows);

}  // namespace hurry
