#include "hurry/metrics.hpp"

#include <cmath>

#include "hurry/datamap.hpp"

namespace hurry {

std::vector<LayerUtil> spatial_utilization(const ModelGraph& model, const MappingPlan& plan) {
  std::vector<LayerUtil> out;
  const double array_cells = double(plan.array.rows * plan.array.cols);
  for (const auto& l : model.layers) {
    const FbPlan* fp = nullptr;
    for (const auto& f : plan.fbs)
      if (f.req.layer_id == l.id) fp = &f;
    if (!fp) continue;  // merged into another FB
    LayerUtil u;
    u.layer_id = l.id;
    u.arrays_used = 1;
    u.mapped_cells = static_assignment(fp->req, fp->place).mapped_cells();
    u.util = double(u.mapped_cells) / array_cells;
    out.push_back(u);
  }
  return out;
}

void spatial_stats(const std::vector<LayerUtil>& spatial, double& mean, double& stddev) {
  mean = 0;
  stddev = 0;
  if (spatial.empty()) return;
  for (const auto& u : spatial) mean += u.util;
  mean /= double(spatial.size());
  double var = 0;
  for (const auto& u : spatial) var += (u.util - mean) * (u.util - mean);
  stddev = std::sqrt(var / double(spatial.size()));
}

double temporal_utilization(const PipelineTrace& trace) {
  if (trace.total_cycles <= 0) return 0;
  double cells = trace.cell_budget > 0
                     ? double(trace.cell_budget)
                     : double(trace.used_arrays) * double(trace.array.rows * trace.array.cols);
  if (cells <= 0) return 0;
  double activated = 0;
  for (const auto& t : trace.tasks) activated += double(t.end - t.start) * double(t.activated_cells);
  return activated / (double(trace.total_cycles) * cells);
}

UtilizationReport utilization_report(const ModelGraph& model, const MappingPlan& plan,
                                     const PipelineTrace& trace) {
  UtilizationReport rep;
  rep.spatial = spatial_utilization(model, plan);
  spatial_stats(rep.spatial, rep.spatial_mean, rep.spatial_stddev);
  rep.temporal_mean = temporal_utilization(trace);
  rep.total_cycles = trace.total_cycles;
  return rep;
}

const CostLine& CostReport::line(const std::string& component) const {
  for (const auto& l : lines)
    if (l.component == component) return l;
  throw ConfigError("missing cost entry: " + component);
}

CostReport cost_report(const PipelineTrace& trace, const EventCounts& events,
                       const HardwareConfig& hw, const Allocation& alloc) {
  CostReport rep;
  auto add = [&](const std::string& name, double e, double a) {
    rep.lines.push_back({name, e, a});
    rep.energy_total_pj += e;
    rep.area_total_mm2 += a;
  };

  double adc_energy = 0;
  if (events.adc_conversions_by_bits.empty()) {
    // All conversions at the unit array's resolution.
    adc_energy = double(events.adc_conversions) *
                 hw.adc_spec_for(hw.array.rows).energy_per_conversion_pj;
  } else {
    for (auto& [bits, n] : events.adc_conversions_by_bits) {
      auto it = hw.adc_by_bits.find(bits);
      if (it == hw.adc_by_bits.end())
        throw ConfigError("missing cost entry: adc spec for " + std::to_string(bits) + " bits");
      adc_energy += double(n) * it->second.energy_per_conversion_pj;
    }
  }
  double adc_area = 0, dac_area = 0, cell_area = 0, sna_area = 0, reg_area = 0, ctrl_area = 0;
  const double unit_cells = double(hw.array.rows * hw.array.cols);
  for (auto& [rows, count] : alloc.arrays_by_size) {
    double n = double(count);
    double cell_scale = double(rows * rows) / unit_cells;
    double row_scale = double(rows) / double(hw.array.rows);
    double col_scale = double(rows) / double(hw.array.cols);
    adc_area += n * hw.adcs_per_array * hw.adc_spec_for(rows).area_mm2;
    dac_area += n * hw.dac_area_mm2_per_array * row_scale;
    cell_area += n * hw.cell_area_mm2_per_array * cell_scale;
    sna_area += n * hw.sna_area_mm2_per_array * col_scale;
    reg_area += n * (hw.ir_capacity_kb + hw.or_capacity_kb) * hw.register_area_mm2_per_kb;
    ctrl_area += n * hw.controller_area_mm2;
  }

  add("adc", adc_energy, adc_area);
  add("dac", double(events.dac_drives) * hw.dac_energy_per_drive_pj, dac_area);
  add("cell_read", double(events.cell_read_activations) * hw.cell_read_energy_pj, cell_area);
  add("cell_write", double(events.cell_write_events) * hw.cell_write_energy_pj, 0.0);
  add("sna", double(events.sna_ops) * hw.sna_energy_per_op_pj, sna_area);
  add("registers", double(events.register_accesses) * hw.register_energy_per_access_pj, reg_area);
  add("controller", double(trace.total_cycles) * hw.controller_energy_per_cycle_pj, ctrl_area);
  add("transfer", double(events.transfer_bytes) * hw.transfer_energy_per_byte_pj, 0.0);
  add("digital", double(events.digital_ops + events.lut_evaluations) *
                     hw.digital_unit_energy_per_op_pj,
      0.0);
  return rep;
}

AdcComparison adc_comparison(const HardwareConfig& hw, std::int64_t small_rows,
                             std::int64_t count_small, std::int64_t big_rows) {
  const AdcSpec& s = hw.adc_spec_for(small_rows);
  const AdcSpec& b = hw.adc_spec_for(big_rows);
  AdcComparison c;
  c.power_ratio = double(count_small) * hw.adcs_per_array * s.power_mw /
                  (double(hw.adcs_per_array) * b.power_mw);
  c.area_ratio = double(count_small) * hw.adcs_per_array * s.area_mm2 /
                 (double(hw.adcs_per_array) * b.area_mm2);
  return c;
}

}  // namespace hurry
