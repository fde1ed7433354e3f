#pragma once

#include <map>
#include <string>

#include "hurry/lowering.hpp"

namespace hurry {

struct AdcSpec {
  int bits = 9;
  double power_mw = 0;
  double area_mm2 = 0;
  double energy_per_conversion_pj = 0;
};

// Chip parameters and unit costs. Every cost field name carries its unit.
struct HardwareConfig {
  std::string schema_version = "v1";
  int tiles = 16;
  int imas_per_tile = 8;
  ArrayDims array{512, 512};

  std::map<std::int64_t, int> adc_bits_by_array_size;  // e.g. 128 -> 7, 512 -> 9
  std::map<int, AdcSpec> adc_by_bits;
  int adcs_per_array = 1;

  double dac_energy_per_drive_pj = 0;
  double dac_area_mm2_per_array = 0;
  double cell_read_energy_pj = 0;
  double cell_write_energy_pj = 0;
  double cell_area_mm2_per_array = 0;
  double sna_energy_per_op_pj = 0;
  double sna_area_mm2_per_array = 0;
  double controller_energy_per_cycle_pj = 0;
  double controller_area_mm2 = 0;
  double register_energy_per_access_pj = 0;
  double register_area_mm2_per_kb = 0;
  int ir_capacity_kb = 32;
  int or_capacity_kb = 2;

  // In-array compare/select logic; cycles_cmp(b) = ceil(b/2) * cmp, sel flat.
  int compare_cycles_per_2bit = 11;
  int select_cycles = 5;

  int softmax_lut_entries = 1024;
  int softmax_per_class_cycles = 1;

  bool include_reset = true;

  // Static-array baseline (GEMM-only crossbars + digital units).
  int baseline_cell_bits = 2;
  std::int64_t digital_pool_cycles_per_window = 1;
  std::int64_t digital_relu_cycles_per_elem = 1;
  std::int64_t digital_softmax_cycles_per_elem = 4;
  double edram_cycles_per_byte = 2.0;
  double transfer_energy_per_byte_pj = 1.0;
  double digital_unit_energy_per_op_pj = 0.5;

  int adc_bits_for(std::int64_t array_rows) const;
  const AdcSpec& adc_spec_for(std::int64_t array_rows) const;
  std::int64_t adc_range(std::int64_t array_rows) const;  // 2^bits - 1

  int compare_cycles(int b) const { return int(ceil_div(b, 2)) * compare_cycles_per_2bit; }
  int tournament_match_cycles(int b) const { return compare_cycles(b) + select_cycles; }
};

HardwareConfig parse_hw_config(const std::string& text);
HardwareConfig load_hw_config_file(const std::string& path);

// The shipped default (also what configs/default.json contains).
HardwareConfig default_hw_config();

}  // namespace hurry
