#pragma once

#include <string>

#include "hurry/baseline.hpp"
#include "hurry/metrics.hpp"
#include "hurry/pipeline.hpp"

namespace hurry {

// Writes content to path via a temp file + rename.
void atomic_write(const std::string& path, const std::string& content);

std::string format_double(double v);

// Mapping-plan file: fb geometry, dataflow, grouping; schema "v1".
std::string plan_to_json(const MappingPlan& plan);
MappingPlan plan_from_json(const std::string& text);
void write_plan(const std::string& path, const MappingPlan& plan);
MappingPlan load_plan(const std::string& path);

// Columnar trace: one row per active FB per cycle, stable ordering.
std::string trace_to_text(const PipelineTrace& trace);
void write_trace(const std::string& path, const PipelineTrace& trace);

std::string spatial_csv(const std::vector<LayerUtil>& spatial);
std::string cost_csv(const CostReport& cost);
std::string utilization_summary(const UtilizationReport& rep);

// Fig. 1(a)-style plot data: array size vs ISAAC-style spatial utilization.
std::string plot_csv_spatial_vs_size(const ModelGraph& model, const HardwareConfig& hw,
                                     const std::vector<std::int64_t>& sizes);

}  // namespace hurry
