#include "hurry/hw_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hurry {

using nlohmann::json;

int HardwareConfig::adc_bits_for(std::int64_t array_rows) const {
  auto it = adc_bits_by_array_size.find(array_rows);
  if (it == adc_bits_by_array_size.end())
    throw ConfigError("no adc_bits entry for array size " + std::to_string(array_rows));
  return it->second;
}

const AdcSpec& HardwareConfig::adc_spec_for(std::int64_t array_rows) const {
  int bits = adc_bits_for(array_rows);
  auto it = adc_by_bits.find(bits);
  if (it == adc_by_bits.end())
    throw ConfigError("missing cost entry: adc spec for " + std::to_string(bits) + " bits");
  return it->second;
}

std::int64_t HardwareConfig::adc_range(std::int64_t array_rows) const {
  return (std::int64_t(1) << adc_bits_for(array_rows)) - 1;
}

HardwareConfig default_hw_config() {
  HardwareConfig hw;
  hw.adc_bits_by_array_size = {{128, 7}, {256, 8}, {512, 9}};
  // Per-ADC constants scaled from published ISAAC-class numbers so that a
  // 16x 128^2/7-bit IMA draws 3.4x the ADC power and 3.7x the ADC area of
  // one 512^2/9-bit array.
  hw.adc_by_bits[7] = {7, 0.85, 0.000370, 2.0};
  hw.adc_by_bits[8] = {8, 1.90, 0.000760, 4.5};
  hw.adc_by_bits[9] = {9, 4.00, 0.001600, 10.0};
  hw.dac_energy_per_drive_pj = 0.05;
  hw.dac_area_mm2_per_array = 0.00017;
  hw.cell_read_energy_pj = 0.002;
  hw.cell_write_energy_pj = 0.02;
  hw.cell_area_mm2_per_array = 0.0025;
  hw.sna_energy_per_op_pj = 0.05;
  hw.sna_area_mm2_per_array = 0.00024;
  hw.controller_energy_per_cycle_pj = 1.0;
  hw.controller_area_mm2 = 0.0015;
  hw.register_energy_per_access_pj = 0.1;
  hw.register_area_mm2_per_kb = 0.00018;
  return hw;
}

namespace {

double get_num(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("hardware config missing field '") + key + "'");
  if (!j[key].is_number()) throw ConfigError(std::string("hardware config field '") + key + "' must be a number");
  return j[key].get<double>();
}

double num_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) throw ConfigError(std::string("hardware config field '") + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

HardwareConfig parse_hw_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("hardware config is not valid JSON: ") + e.what());
  }
  if (j.value("schema_version", "") != "v1")
    throw ConfigError("hardware config schema_version must be \"v1\"");

  HardwareConfig hw = default_hw_config();
  hw.tiles = int(num_or(j, "tiles", hw.tiles));
  hw.imas_per_tile = int(num_or(j, "imas_per_tile", hw.imas_per_tile));
  if (j.contains("array")) {
    hw.array.rows = std::int64_t(get_num(j["array"], "rows"));
    hw.array.cols = std::int64_t(get_num(j["array"], "cols"));
  }
  if (hw.array.rows < 1 || hw.array.cols < 1) throw ConfigError("array dims must be positive");

  if (j.contains("adc")) {
    const auto& a = j["adc"];
    if (a.contains("bits_by_array_size")) {
      hw.adc_bits_by_array_size.clear();
      for (auto& [k, v] : a["bits_by_array_size"].items())
        hw.adc_bits_by_array_size[std::stoll(k)] = v.get<int>();
    }
    if (a.contains("per_adc")) {
      hw.adc_by_bits.clear();
      for (auto& [k, v] : a["per_adc"].items()) {
        AdcSpec s;
        s.bits = std::stoi(k);
        s.power_mw = get_num(v, "power_mw");
        s.area_mm2 = get_num(v, "area_mm2");
        s.energy_per_conversion_pj = get_num(v, "energy_per_conversion_pj");
        hw.adc_by_bits[s.bits] = s;
      }
    }
    hw.adcs_per_array = int(num_or(a, "adcs_per_array", hw.adcs_per_array));
  }
  if (j.contains("dac")) {
    hw.dac_energy_per_drive_pj = num_or(j["dac"], "energy_per_drive_pj", hw.dac_energy_per_drive_pj);
    hw.dac_area_mm2_per_array = num_or(j["dac"], "area_mm2_per_array", hw.dac_area_mm2_per_array);
  }
  if (j.contains("cell")) {
    hw.cell_read_energy_pj = num_or(j["cell"], "read_energy_pj", hw.cell_read_energy_pj);
    hw.cell_write_energy_pj = num_or(j["cell"], "write_energy_pj", hw.cell_write_energy_pj);
    hw.cell_area_mm2_per_array = num_or(j["cell"], "area_mm2_per_array", hw.cell_area_mm2_per_array);
  }
  if (j.contains("sna")) {
    hw.sna_energy_per_op_pj = num_or(j["sna"], "energy_per_op_pj", hw.sna_energy_per_op_pj);
    hw.sna_area_mm2_per_array = num_or(j["sna"], "area_mm2_per_array", hw.sna_area_mm2_per_array);
  }
  if (j.contains("controller")) {
    hw.controller_energy_per_cycle_pj =
        num_or(j["controller"], "energy_per_cycle_pj", hw.controller_energy_per_cycle_pj);
    hw.controller_area_mm2 = num_or(j["controller"], "area_mm2", hw.controller_area_mm2);
  }
  if (j.contains("registers")) {
    hw.register_energy_per_access_pj =
        num_or(j["registers"], "energy_per_access_pj", hw.register_energy_per_access_pj);
    hw.register_area_mm2_per_kb = num_or(j["registers"], "area_mm2_per_kb", hw.register_area_mm2_per_kb);
    hw.ir_capacity_kb = int(num_or(j["registers"], "ir_capacity_kb", hw.ir_capacity_kb));
    hw.or_capacity_kb = int(num_or(j["registers"], "or_capacity_kb", hw.or_capacity_kb));
  }
  if (j.contains("logic")) {
    hw.compare_cycles_per_2bit = int(num_or(j["logic"], "compare_cycles_per_2bit", hw.compare_cycles_per_2bit));
    hw.select_cycles = int(num_or(j["logic"], "select_cycles", hw.select_cycles));
  }
  if (j.contains("softmax")) {
    hw.softmax_lut_entries = int(num_or(j["softmax"], "lut_entries", hw.softmax_lut_entries));
    hw.softmax_per_class_cycles = int(num_or(j["softmax"], "per_class_cycles", hw.softmax_per_class_cycles));
  }
  if (j.contains("include_reset")) hw.include_reset = j["include_reset"].get<bool>();
  if (j.contains("baseline")) {
    const auto& b = j["baseline"];
    hw.baseline_cell_bits = int(num_or(b, "cell_bits", hw.baseline_cell_bits));
    hw.digital_pool_cycles_per_window =
        std::int64_t(num_or(b, "digital_pool_cycles_per_window", double(hw.digital_pool_cycles_per_window)));
    hw.digital_relu_cycles_per_elem =
        std::int64_t(num_or(b, "digital_relu_cycles_per_elem", double(hw.digital_relu_cycles_per_elem)));
    hw.digital_softmax_cycles_per_elem =
        std::int64_t(num_or(b, "digital_softmax_cycles_per_elem", double(hw.digital_softmax_cycles_per_elem)));
    hw.edram_cycles_per_byte = num_or(b, "edram_cycles_per_byte", hw.edram_cycles_per_byte);
    hw.transfer_energy_per_byte_pj = num_or(b, "transfer_energy_per_byte_pj", hw.transfer_energy_per_byte_pj);
    hw.digital_unit_energy_per_op_pj = num_or(b, "digital_unit_energy_per_op_pj", hw.digital_unit_energy_per_op_pj);
  }

  for (auto& [sz, bits] : hw.adc_bits_by_array_size)
    if (!hw.adc_by_bits.count(bits))
      throw ConfigError("missing cost entry: adc spec for " + std::to_string(bits) + " bits");
  return hw;
}

HardwareConfig load_hw_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open hardware config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_hw_config(ss.str());
}

}  // namespace hurry
